use alloc::string::String;

use crate::AgentId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("conditioning event has zero probability")]
    ZeroMassEvent,
    #[error("P(V_a < mu_b) = 0, no exploration is needed")]
    NoExplorationNeeded,
    #[error("prior order violated: mean(V_a) = {mean_a} is below mu_b = {mu_b}")]
    PriorOrderViolation { mean_a: f64, mu_b: f64 },
    #[error("bisection failed: {0}")]
    Bisection(&'static str),
    #[error("partition construction did not terminate after {0} cells")]
    NonTermination(usize),
    #[error("unknown agent {agent} (graph has {n} agents)")]
    UnknownAgent { agent: AgentId, n: usize },
    #[error("self loop on agent {0}")]
    SelfLoop(AgentId),
    #[error("infeasible generator parameters: {0}")]
    InfeasibleParams(String),
    #[error("agent {0} arrived out of order")]
    OutOfOrderArrival(AgentId),
    #[error("replicas exhausted: high-degree arrival {z} needs more than {replicas} replicas")]
    ReplicaExhausted { z: usize, replicas: usize },
    #[error("insufficient support: {matched} matched runs, need {required}")]
    InsufficientSupport { matched: usize, required: usize },
    #[error("no closed-form posterior for this mechanism/information set")]
    NoExactPath,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("failure demo `{name}` did not show its pathology: {detail}")]
    DemoFailed { name: &'static str, detail: String },
}
