//! Incentive-compatible explore/exploit recommendation mechanisms on social
//! visibility graphs.
//!
//! A planner recommends one of two actions to agents that arrive one at a
//! time. Agents see the actions (not the rewards) of their earlier friends
//! in a visibility graph, so a recommendation scheme only works if no agent
//! can profit from second-guessing it. This crate provides:
//!
//! * [`distribution`]: piecewise-uniform reward laws with closed-form
//!   conditional expectations over interval unions,
//! * [`partition`]: the exploration partition `D_0, D_1, ..., D_K` and its
//!   replicated variant for high-degree agents,
//! * [`network`]: visibility graphs, degree classification and generators,
//! * [`mechanism`]: the no/medium/high visibility planners as state machines,
//! * [`agent`]: Bayesian posteriors and a Monte Carlo incentive audit,
//! * [`sim`]: full runs, metrics, bound checks and failure demonstrations.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel drivers live in the `socex` crate.
#![no_std]
// `!(a > b)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod agent;
pub mod distribution;
mod error;
pub mod interval;
pub mod mechanism;
pub mod network;
pub mod partition;
pub mod roots;
pub mod seed;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};

/// Index of an agent in the visibility graph, `0..N`.
pub type AgentId = usize;

/// One of the two available actions. `A` is the a-priori better one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    A,
    B,
}

impl Action {
    pub fn other(self) -> Action {
        match self {
            Action::A => Action::B,
            Action::B => Action::A,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::A => "a",
            Action::B => "b",
        }
    }

    /// The better action for realized rewards; ties go to `A`.
    pub fn argmax(va: f64, vb: f64) -> Action {
        if vb > va {
            Action::B
        } else {
            Action::A
        }
    }
}

impl core::fmt::Display for Action {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}
