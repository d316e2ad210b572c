//! Planner mechanisms as online state machines.
//!
//! A [`Mechanism`] holds everything fixed before the first arrival
//! (partition, test positions, degree classes). A [`Planner`] is one run of
//! it: feed arrivals with [`Planner::step`] and realized outcomes with
//! [`Planner::reveal`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::distribution::PiecewiseDistribution;
use crate::interval::IntervalSet;
use crate::network::{RegimeSpec, VisibilityGraph};
use crate::partition::{
    build_partition, build_replicated_partition, ExplorationPartition, ReplicaMode, ReplicatedPartition,
};
use crate::{Action, AgentId, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flag {
    None,
    True,
    False,
    Special,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::None => "NONE",
            Flag::True => "TRUE",
            Flag::False => "FALSE",
            Flag::Special => "SPECIAL",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message {
    pub action: Action,
    pub flag: Flag,
}

impl Message {
    pub fn plain(action: Action) -> Self {
        Message { action, flag: Flag::None }
    }
}

impl core::fmt::Display for Message {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.flag {
            Flag::None => write!(f, "{}", self.action),
            flag => write!(f, "{}/{}", self.action, flag.as_str()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MechanismKind {
    NoVisibility,
    Medium,
    High,
    /// Complete-graph fallback: agent 2 is told to try `b` exactly when
    /// `V_a` lies below the essential supremum of `V_b`.
    Threshold,
}

impl MechanismKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::NoVisibility => "no-visibility",
            MechanismKind::Medium => "medium",
            MechanismKind::High => "high",
            MechanismKind::Threshold => "threshold",
        }
    }

    pub const ALL: [MechanismKind; 4] =
        [MechanismKind::NoVisibility, MechanismKind::Medium, MechanismKind::High, MechanismKind::Threshold];
}

/// The rule that produced a message. Used to label audit groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    First,
    /// `P(V_a < mu_b) = 0`: everyone is told `a`.
    Uninformed,
    TestB,
    TestA,
    /// Non-test arrival during exploration under an explicit test set.
    Idle,
    /// Within two hops of the test set.
    Blocked,
    /// High-degree arrival before anyone has played `b`.
    HubQuiet,
    /// High-degree arrival after someone played `b`; ends exploration.
    HubClose,
    Special,
    /// All cells used and `b` already revealed; ends exploration.
    Close,
    Exploit,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::First => "first",
            Branch::Uninformed => "uninformed",
            Branch::TestB => "test-b",
            Branch::TestA => "test-a",
            Branch::Idle => "idle",
            Branch::Blocked => "blocked",
            Branch::HubQuiet => "hub-quiet",
            Branch::HubClose => "hub-close",
            Branch::Special => "special",
            Branch::Close => "close",
            Branch::Exploit => "exploit",
        }
    }

    /// Case number (1..=7) of the high visibility IC argument.
    pub fn high_case(self) -> Option<u8> {
        match self {
            Branch::HubQuiet => Some(1),
            Branch::HubClose => Some(2),
            Branch::TestA | Branch::TestB => Some(3),
            Branch::Blocked => Some(4),
            Branch::Special => Some(5),
            Branch::Close => Some(6),
            Branch::Exploit => Some(7),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MechanismParams {
    pub kind: MechanismKind,
    pub regime: RegimeSpec,
    pub replica_mode: ReplicaMode,
    /// Replica count for the high visibility planner; defaults to
    /// `floor(N^beta) + 1`.
    pub replicas: Option<usize>,
    pub tol: f64,
    /// Arrival positions (0-based, first arrival is 0) of the no visibility
    /// test agents; defaults to `1..=K`.
    pub test_positions: Option<Vec<usize>>,
}

impl MechanismParams {
    pub fn new(kind: MechanismKind) -> Self {
        MechanismParams {
            kind,
            regime: RegimeSpec { alpha: 0.3, beta: 0.2 },
            replica_mode: ReplicaMode::RandomTag,
            replicas: None,
            tol: 1e-9,
            test_positions: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Plan {
    Uninformed,
    Tests { partition: ExplorationPartition, positions: Vec<usize> },
    Medium { partition: ExplorationPartition },
    High { partition: ReplicatedPartition, high: Vec<bool>, t_mask: Vec<bool> },
    Threshold { x: f64 },
}

/// A mechanism instantiated for fixed reward laws and graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Mechanism {
    kind: MechanismKind,
    n_agents: usize,
    plan: Plan,
}

impl Mechanism {
    pub fn build(
        params: &MechanismParams,
        va: &PiecewiseDistribution,
        vb: &PiecewiseDistribution,
        graph: &VisibilityGraph,
    ) -> Result<Self> {
        let mu_b = vb.mean();
        let n = graph.n_agents();
        let exploration = |r: Result<ExplorationPartition>| match r {
            Err(Error::NoExplorationNeeded) => Ok(None),
            other => other.map(Some),
        };
        let plan = match params.kind {
            MechanismKind::NoVisibility => match exploration(build_partition(va, mu_b, params.tol))? {
                None => Plan::Uninformed,
                Some(partition) => {
                    let positions = match &params.test_positions {
                        Some(p) => p.clone(),
                        None => (1..=partition.k()).collect(),
                    };
                    check_positions(&positions, partition.k())?;
                    Plan::Tests { partition, positions }
                }
            },
            MechanismKind::Medium => match exploration(build_partition(va, mu_b, params.tol))? {
                None => Plan::Uninformed,
                Some(partition) => Plan::Medium { partition },
            },
            MechanismKind::High => {
                let classes = graph.classify(params.regime.alpha);
                let replicas =
                    params.replicas.unwrap_or_else(|| crate::network::power_floor(n, params.regime.beta) + 1);
                match build_replicated_partition(va, mu_b, replicas, params.replica_mode, params.tol) {
                    Err(Error::NoExplorationNeeded) => Plan::Uninformed,
                    Err(e) => return Err(e),
                    Ok(partition) => Plan::High {
                        partition,
                        high: (0..n).map(|i| classes.in_s(i)).collect(),
                        t_mask: classes.t_mask(),
                    },
                }
            }
            MechanismKind::Threshold => {
                let x = vb.ess_sup();
                if va.prob(&IntervalSet::half_open(va.support_lo(), x)) > 0.0 {
                    Plan::Threshold { x }
                } else {
                    Plan::Uninformed
                }
            }
        };
        Ok(Mechanism { kind: params.kind, n_agents: n, plan })
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    /// True when `P(V_a < mu_b) = 0` (or, for the threshold planner,
    /// `P(V_a < x) = 0`) and everyone is simply told `a`.
    pub fn is_uninformed(&self) -> bool {
        matches!(self.plan, Plan::Uninformed)
    }

    /// The cell partition in use (`D_1..D_K`, or `D_1..D_{K'}` for high).
    pub fn partition(&self) -> Option<&ExplorationPartition> {
        match &self.plan {
            Plan::Tests { partition, .. } | Plan::Medium { partition } => Some(partition),
            Plan::High { partition, .. } => Some(partition.as_exploration()),
            _ => None,
        }
    }

    pub fn replicated(&self) -> Option<&ReplicatedPartition> {
        match &self.plan {
            Plan::High { partition, .. } => Some(partition),
            _ => None,
        }
    }

    /// `K` (or `K'`): number of test agents the planner needs.
    pub fn cells(&self) -> usize {
        self.partition().map_or(0, ExplorationPartition::k)
    }

    pub fn replica_count(&self) -> usize {
        self.replicated().map_or(1, ReplicatedPartition::replica_count)
    }

    /// Whether a run draws a random replica label.
    pub fn uses_tag(&self) -> bool {
        matches!(
            self.replicated().map(ReplicatedPartition::replicas),
            Some(crate::partition::Replicas::RandomTag { .. })
        )
    }

    pub fn threshold(&self) -> Option<f64> {
        match self.plan {
            Plan::Threshold { x } => Some(x),
            _ => None,
        }
    }

    pub fn test_positions(&self) -> Option<&[usize]> {
        match &self.plan {
            Plan::Tests { positions, .. } => Some(positions),
            _ => None,
        }
    }

    /// Starts a run. `tag` is the random replica label (ignored unless the
    /// high planner uses random-tag replicas).
    pub fn planner<'a>(&'a self, graph: &'a VisibilityGraph, tag: usize) -> Planner<'a> {
        let n = graph.n_agents();
        Planner {
            mech: self,
            graph,
            tag,
            arrived: vec![false; n],
            arrivals: 0,
            va: None,
            vb: None,
            rho: Vec::new(),
            shadow: Vec::new(),
            blocked: vec![false; n],
            k: 0,
            z: 0,
            experiment: true,
            knowledge: false,
            exploration_end: None,
        }
    }
}

fn check_positions(positions: &[usize], k: usize) -> Result<()> {
    if positions.len() != k {
        return Err(Error::InvalidScenario(format!(
            "{} test positions given, the partition has K = {k} cells",
            positions.len()
        )));
    }
    if positions.first() == Some(&0) || positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidScenario(
            "test positions must be increasing and may not include the first arrival".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub message: Message,
    pub branch: Branch,
}

/// One run of a mechanism.
#[derive(Clone, Debug)]
pub struct Planner<'a> {
    mech: &'a Mechanism,
    graph: &'a VisibilityGraph,
    tag: usize,
    arrived: Vec<bool>,
    arrivals: usize,
    va: Option<f64>,
    vb: Option<f64>,
    rho: Vec<AgentId>,
    shadow: Vec<AgentId>,
    blocked: Vec<bool>,
    k: usize,
    z: usize,
    experiment: bool,
    knowledge: bool,
    exploration_end: Option<usize>,
}

impl<'a> Planner<'a> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn experiment(&self) -> bool {
        self.experiment
    }

    pub fn knowledge(&self) -> bool {
        self.knowledge
    }

    /// Test set, in arrival order.
    pub fn rho(&self) -> &[AgentId] {
        &self.rho
    }

    /// Agents passed over because they were within two hops of the test set.
    pub fn shadow(&self) -> &[AgentId] {
        &self.shadow
    }

    /// 1-based arrival index at which exploration finished, if it did.
    pub fn exploration_end(&self) -> Option<usize> {
        self.exploration_end
    }

    pub fn arrivals(&self) -> usize {
        self.arrivals
    }

    pub fn revealed(&self, action: Action) -> Option<f64> {
        match action {
            Action::A => self.va,
            Action::B => self.vb,
        }
    }

    /// Best action among those revealed so far; `a` until `b` is seen.
    pub fn best_revealed(&self) -> Action {
        match (self.va, self.vb) {
            (Some(a), Some(b)) => Action::argmax(a, b),
            (None, Some(_)) => Action::B,
            _ => Action::A,
        }
    }

    /// Records the outcome of an agent's choice. Rewards are fixed within a
    /// run, so repeated reveals are no-ops.
    pub fn reveal(&mut self, _agent: AgentId, action: Action, reward: f64) {
        match action {
            Action::A => self.va = Some(reward),
            Action::B => self.vb = Some(reward),
        }
    }

    /// Message for the next arrival.
    pub fn step(&mut self, agent: AgentId) -> Result<Step> {
        let n = self.arrived.len();
        if agent >= n {
            return Err(Error::UnknownAgent { agent, n });
        }
        if self.arrived[agent] {
            return Err(Error::OutOfOrderArrival(agent));
        }
        self.arrived[agent] = true;
        let position = self.arrivals;
        self.arrivals += 1;
        let mech = self.mech;
        match &mech.plan {
            Plan::Uninformed => {
                if position == 0 {
                    self.exploration_end = Some(1);
                }
                let flag = if mech.kind == MechanismKind::High { Flag::True } else { Flag::None };
                Ok(Step { message: Message { action: Action::A, flag }, branch: Branch::Uninformed })
            }
            Plan::Tests { partition, positions } => Ok(self.step_tests(agent, position, partition, positions)),
            Plan::Medium { partition } => Ok(self.step_medium(agent, position, partition)),
            Plan::High { partition, high, t_mask } => self.step_high(agent, position, partition, high, t_mask),
            Plan::Threshold { x } => Ok(self.step_threshold(position, *x)),
        }
    }

    fn va_in(&self, set: &IntervalSet) -> bool {
        self.va.is_some_and(|v| set.contains(v))
    }

    fn plain(action: Action, branch: Branch) -> Step {
        Step { message: Message::plain(action), branch }
    }

    fn test(&mut self, agent: AgentId, position: usize, partition: &ExplorationPartition) -> Step {
        self.rho.push(agent);
        self.k += 1;
        let b = self.va_in(partition.d0()) || self.va_in(partition.cell(self.k));
        if self.k == partition.k() {
            self.exploration_end = Some(position + 1);
        }
        if b {
            Self::plain(Action::B, Branch::TestB)
        } else {
            Self::plain(Action::A, Branch::TestA)
        }
    }

    fn step_tests(
        &mut self,
        agent: AgentId,
        position: usize,
        partition: &ExplorationPartition,
        positions: &[usize],
    ) -> Step {
        if position == 0 {
            return Self::plain(Action::A, Branch::First);
        }
        if self.k < partition.k() {
            if positions[self.k] == position {
                return self.test(agent, position, partition);
            }
            return Self::plain(Action::A, Branch::Idle);
        }
        Self::plain(self.best_revealed(), Branch::Exploit)
    }

    fn step_medium(&mut self, agent: AgentId, position: usize, partition: &ExplorationPartition) -> Step {
        if position == 0 {
            return Self::plain(Action::A, Branch::First);
        }
        if self.k < partition.k() {
            if self.blocked[agent] {
                self.shadow.push(agent);
                return Self::plain(Action::A, Branch::Blocked);
            }
            for j in self.graph.second_neighborhood(&[agent], None) {
                self.blocked[j] = true;
            }
            return self.test(agent, position, partition);
        }
        Self::plain(self.best_revealed(), Branch::Exploit)
    }

    fn step_high(
        &mut self,
        agent: AgentId,
        position: usize,
        partition: &ReplicatedPartition,
        high: &[bool],
        t_mask: &[bool],
    ) -> Result<Step> {
        let msg = |action, flag| Message { action, flag };
        if position == 0 {
            return Ok(Step { message: msg(Action::A, Flag::True), branch: Branch::First });
        }
        if !self.experiment {
            return Ok(Step { message: msg(self.best_revealed(), Flag::False), branch: Branch::Exploit });
        }
        if self.k < partition.k_prime() {
            if high[agent] {
                self.z += 1;
                if self.knowledge {
                    return Ok(self.close(position, Branch::HubClose));
                }
                if self.z >= partition.replica_count() {
                    return Err(Error::ReplicaExhausted { z: self.z, replicas: partition.replica_count() });
                }
                return Ok(Step { message: msg(Action::A, Flag::True), branch: Branch::HubQuiet });
            }
            if self.blocked[agent] {
                self.shadow.push(agent);
                return Ok(Step { message: msg(Action::A, Flag::True), branch: Branch::Blocked });
            }
            for j in self.graph.second_neighborhood(&[agent], Some(t_mask)) {
                self.blocked[j] = true;
            }
            self.rho.push(agent);
            self.k += 1;
            let in_replica = self.va.is_some_and(|v| partition.in_replica(self.z, v, self.tag));
            if in_replica || self.va_in(partition.cell(self.k)) {
                self.knowledge = true;
                return Ok(Step { message: msg(Action::B, Flag::True), branch: Branch::TestB });
            }
            return Ok(Step { message: msg(Action::A, Flag::True), branch: Branch::TestA });
        }
        if self.knowledge {
            return Ok(self.close(position, Branch::Close));
        }
        // every cell was tested and nobody was told b, so V_a sits in a
        // replica of D_0 that was never used
        self.knowledge = true;
        Ok(Step { message: msg(Action::B, Flag::Special), branch: Branch::Special })
    }

    fn close(&mut self, position: usize, branch: Branch) -> Step {
        self.experiment = false;
        self.exploration_end = Some(position + 1);
        Step { message: Message { action: self.best_revealed(), flag: Flag::False }, branch }
    }

    fn step_threshold(&mut self, position: usize, x: f64) -> Step {
        match position {
            0 => Self::plain(Action::A, Branch::First),
            1 => {
                self.exploration_end = Some(2);
                if self.va.is_some_and(|v| v < x) {
                    Self::plain(Action::B, Branch::TestB)
                } else {
                    Self::plain(Action::A, Branch::TestA)
                }
            }
            _ => {
                // above x, a beats b almost surely
                let action = if self.va.is_some_and(|v| v >= x) { Action::A } else { self.best_revealed() };
                Self::plain(action, Branch::Exploit)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> (PiecewiseDistribution, PiecewiseDistribution) {
        (PiecewiseDistribution::uniform(0.0, 1.0).unwrap(), PiecewiseDistribution::uniform(0.0, 0.5).unwrap())
    }

    /// Runs compliant agents in identity order and returns the messages.
    fn run(mech: &Mechanism, g: &VisibilityGraph, va: f64, vb: f64, tag: usize) -> Vec<Step> {
        let mut p = mech.planner(g, tag);
        (0..g.n_agents())
            .map(|i| {
                let s = p.step(i).unwrap();
                let r = if s.message.action == Action::A { va } else { vb };
                p.reveal(i, s.message.action, r);
                s
            })
            .collect()
    }

    fn actions(steps: &[Step]) -> Vec<Action> {
        steps.iter().map(|s| s.message.action).collect()
    }

    #[test]
    fn no_visibility_messages() {
        let (va, vb) = unit();
        let g = VisibilityGraph::empty(14);
        let m = Mechanism::build(&MechanismParams::new(MechanismKind::NoVisibility), &va, &vb, &g).unwrap();
        let k = m.cells();
        assert_eq!(k, 9);

        let steps = run(&m, &g, 0.1, 0.3, 0);
        assert_eq!(steps[0].message, Message::plain(Action::A));
        assert!(steps[1..=k].iter().all(|s| s.message.action == Action::B));
        assert!(steps[k + 1..].iter().all(|s| s.message.action == Action::B && s.branch == Branch::Exploit));

        // 0.55 is in D_2 only
        let steps = run(&m, &g, 0.55, 0.3, 0);
        let got = actions(&steps[1..=k]);
        let mut want = vec![Action::A; k];
        want[1] = Action::B;
        assert_eq!(got, want);
        assert!(steps[k + 1..].iter().all(|s| s.message.action == Action::A));
    }

    #[test]
    fn uninformed_branch_always_a() {
        let va = PiecewiseDistribution::uniform(-3.0, -1.0).unwrap();
        let vb = PiecewiseDistribution::uniform(-6.0, 0.0).unwrap();
        let g = VisibilityGraph::empty(5);
        // the threshold planner keys on ess sup V_b = 0 instead, which V_a never reaches
        for kind in [MechanismKind::NoVisibility, MechanismKind::Medium, MechanismKind::High] {
            let m = Mechanism::build(&MechanismParams::new(kind), &va, &vb, &g).unwrap();
            assert!(m.is_uninformed(), "{kind:?}");
            let steps = run(&m, &g, -2.0, -0.5, 0);
            assert!(steps.iter().all(|s| s.message.action == Action::A));
        }
    }

    #[test]
    fn out_of_order_and_unknown_agents() {
        let (va, vb) = unit();
        let g = VisibilityGraph::empty(3);
        let m = Mechanism::build(&MechanismParams::new(MechanismKind::Medium), &va, &vb, &g).unwrap();
        let mut p = m.planner(&g, 0);
        p.step(1).unwrap();
        assert_eq!(p.step(1), Err(Error::OutOfOrderArrival(1)));
        assert_eq!(p.step(7), Err(Error::UnknownAgent { agent: 7, n: 3 }));
    }

    #[test]
    fn medium_on_empty_graph_matches_no_visibility() {
        let (va, vb) = unit();
        let g = VisibilityGraph::empty(15);
        let nv = Mechanism::build(&MechanismParams::new(MechanismKind::NoVisibility), &va, &vb, &g).unwrap();
        let md = Mechanism::build(&MechanismParams::new(MechanismKind::Medium), &va, &vb, &g).unwrap();
        for (x, y) in [(0.1, 0.2), (0.55, 0.7), (0.99, 0.4), (0.3, 0.45)] {
            assert_eq!(actions(&run(&nv, &g, x, y, 0)), actions(&run(&md, &g, x, y, 0)));
        }
    }

    #[test]
    fn medium_blocks_second_neighbors() {
        let (va, vb) = unit();
        // agent 1 tests; 2 is a neighbor, 3 is two hops away, 4 is free
        let g = VisibilityGraph::from_edges(12, [(1, 2), (2, 3)]).unwrap();
        let m = Mechanism::build(&MechanismParams::new(MechanismKind::Medium), &va, &vb, &g).unwrap();
        let mut p = m.planner(&g, 0);
        p.step(0).unwrap();
        p.reveal(0, Action::A, 0.9);
        assert_eq!(p.step(1).unwrap().branch, Branch::TestA);
        assert_eq!(p.step(2).unwrap().branch, Branch::Blocked);
        assert_eq!(p.step(3).unwrap().branch, Branch::Blocked);
        assert_eq!(p.step(4).unwrap().branch, Branch::TestA);
        assert_eq!(p.rho(), &[1, 4]);
        assert_eq!(p.shadow(), &[2, 3]);
    }

    #[test]
    fn star_center_last_stalls_medium() {
        let (va, vb) = unit();
        let n = 100;
        // center is agent 99 so identity order brings it last
        let g = VisibilityGraph::from_edges(n, (0..n - 1).map(|i| (i, n - 1))).unwrap();
        let m = Mechanism::build(&MechanismParams::new(MechanismKind::Medium), &va, &vb, &g).unwrap();
        let mut p = m.planner(&g, 0);
        for i in 0..n {
            let s = p.step(i).unwrap();
            p.reveal(i, s.message.action, if s.message.action == Action::A { 0.9 } else { 0.2 });
        }
        assert_eq!(p.k(), 1);
        assert_eq!(p.exploration_end(), None);
    }

    #[test]
    fn high_with_no_hubs_is_medium_with_flags() {
        let (va, vb) = unit();
        let g = VisibilityGraph::from_edges(30, [(1, 2), (5, 6), (6, 7)]).unwrap();
        let md = Mechanism::build(&MechanismParams::new(MechanismKind::Medium), &va, &vb, &g).unwrap();
        let mut params = MechanismParams::new(MechanismKind::High);
        params.replicas = Some(1);
        let hi = Mechanism::build(&params, &va, &vb, &g).unwrap();
        assert_eq!(hi.cells(), md.cells());
        for (x, y) in [(0.1, 0.2), (0.55, 0.7), (0.99, 0.4)] {
            let a = run(&md, &g, x, y, 0);
            let b = run(&hi, &g, x, y, 0);
            // high ends with a Close step one arrival after k reaches K
            let close = b.iter().position(|s| s.branch == Branch::Close).unwrap();
            assert_eq!(actions(&a[..close]), actions(&b[..close]));
            assert!(b[1..close].iter().all(|s| s.message.flag == Flag::True));
            assert!(b[close..].iter().all(|s| s.message.flag == Flag::False));
            assert!(b[close..].iter().all(|s| s.message.action == Action::argmax(x, y)));
        }
    }

    #[test]
    fn high_hub_switches_replica() {
        let (va, vb) = unit();
        let n = 40;
        // agent 3 is a hub with degree above floor(40^0.3) = 3
        let g = VisibilityGraph::from_edges(n, (20..30).map(|j| (3, j))).unwrap();
        let mut params = MechanismParams::new(MechanismKind::High);
        params.replicas = Some(3);
        let m = Mechanism::build(&params, &va, &vb, &g).unwrap();
        // V_a in D_0 with label 1: agents 1, 2 test replica 0; after the hub
        // arrives, agent 4 tests replica 1 and is told b
        let mut p = m.planner(&g, 1);
        let mut out = Vec::new();
        for i in 0..6 {
            let s = p.step(i).unwrap();
            p.reveal(i, s.message.action, if s.message.action == Action::A { 0.1 } else { 0.4 });
            out.push(s);
        }
        assert_eq!(out[1].branch, Branch::TestA);
        assert_eq!(out[2].branch, Branch::TestA);
        assert_eq!(out[3].branch, Branch::HubQuiet);
        assert_eq!(out[4].message, Message { action: Action::B, flag: Flag::True });
        assert_eq!(p.z(), 1);
        assert!(p.knowledge());
    }

    #[test]
    fn high_special_when_label_never_tested() {
        let (va, vb) = unit();
        let g = VisibilityGraph::empty(60);
        let mut params = MechanismParams::new(MechanismKind::High);
        params.replicas = Some(2);
        let m = Mechanism::build(&params, &va, &vb, &g).unwrap();
        let kp = m.cells();
        let steps = run(&m, &g, 0.1, 0.3, 1);
        assert!(steps[1..=kp].iter().all(|s| s.message.action == Action::A));
        assert_eq!(steps[kp + 1].message, Message { action: Action::B, flag: Flag::Special });
        assert_eq!(steps[kp + 2].branch, Branch::Close);
        assert_eq!(steps[kp + 2].message.action, Action::B);
    }

    #[test]
    fn high_replica_exhaustion() {
        let (va, vb) = unit();
        let g = VisibilityGraph::from_edges(10, (2..10).map(|j| (1, j)).chain((3..10).map(|j| (2, j)))).unwrap();
        let mut params = MechanismParams::new(MechanismKind::High);
        params.regime.alpha = 0.0;
        params.replicas = Some(1);
        let m = Mechanism::build(&params, &va, &vb, &g).unwrap();
        let mut p = m.planner(&g, 0);
        p.step(0).unwrap();
        p.reveal(0, Action::A, 0.9);
        assert_eq!(p.step(1), Err(Error::ReplicaExhausted { z: 1, replicas: 1 }));
    }

    #[test]
    fn threshold_mechanism() {
        let (va, vb) = unit();
        let g = VisibilityGraph::empty(5);
        let m = Mechanism::build(&MechanismParams::new(MechanismKind::Threshold), &va, &vb, &g).unwrap();
        assert_eq!(m.threshold(), Some(0.5));
        assert_eq!(actions(&run(&m, &g, 0.3, 0.4, 0)), vec![Action::A, Action::B, Action::B, Action::B, Action::B]);
        assert_eq!(actions(&run(&m, &g, 0.7, 0.4, 0)), vec![Action::A; 5]);
    }

    #[test]
    fn explicit_test_positions() {
        let (va, vb) = unit();
        let g = VisibilityGraph::empty(12);
        let mut params = MechanismParams::new(MechanismKind::NoVisibility);
        params.test_positions = Some(vec![1, 2, 4, 5, 6, 7, 8, 9, 10]);
        let m = Mechanism::build(&params, &va, &vb, &g).unwrap();
        let steps = run(&m, &g, 0.65, 0.1, 0);
        assert_eq!(steps[3].branch, Branch::Idle);
        // 0.65 is in D_3, tested by the agent at position 4
        assert_eq!(steps[4].branch, Branch::TestB);
        params.test_positions = Some(vec![1, 2]);
        assert!(Mechanism::build(&params, &va, &vb, &g).is_err());
    }
}
