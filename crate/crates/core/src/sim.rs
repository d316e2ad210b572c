//! Full runs: reward draws, arrivals, agent choices, metrics, bound checks
//! and the canned failure demonstrations.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::agent::{exact_audit, InfoKey, Policy, ResponseTable};
use crate::distribution::{Piece, PiecewiseDistribution};
use crate::interval::IntervalSet;
use crate::mechanism::{Branch, Mechanism, MechanismKind, MechanismParams, Message};
use crate::network::{generate, power_floor, GraphSpec, RegimeSpec, VisibilityGraph};
use crate::partition::build_partition;
use crate::stats::Moments;
use crate::{seed, Action, AgentId, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum GraphSource {
    Generated(GraphSpec),
    Explicit(VisibilityGraph),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArrivalOrder {
    Identity,
    /// `order[t]` is the agent arriving at position `t`.
    Permutation(Vec<AgentId>),
    /// One shuffle per scenario, drawn from the master seed.
    SeededShuffle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub dist_a: PiecewiseDistribution,
    pub dist_b: PiecewiseDistribution,
    pub n_agents: usize,
    pub graph: GraphSource,
    pub mechanism: MechanismParams,
    pub arrival: ArrivalOrder,
    pub replications: usize,
    pub seed: u64,
    /// Agents that best-respond instead of following their message.
    pub best_responders: Vec<AgentId>,
}

/// Stream tags for [`seed::aux`].
const GRAPH_STREAM: u64 = 1;
const ORDER_STREAM: u64 = 2;

impl Scenario {
    pub fn new(
        dist_a: PiecewiseDistribution,
        dist_b: PiecewiseDistribution,
        graph: GraphSource,
        kind: MechanismKind,
    ) -> Self {
        let n_agents = match &graph {
            GraphSource::Generated(spec) => spec.n_agents(),
            GraphSource::Explicit(g) => g.n_agents(),
        };
        Scenario {
            dist_a,
            dist_b,
            n_agents,
            graph,
            mechanism: MechanismParams::new(kind),
            arrival: ArrivalOrder::Identity,
            replications: 1,
            seed: 0,
            best_responders: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (ma, mb) = (self.dist_a.mean(), self.dist_b.mean());
        if !(ma > mb) {
            return Err(Error::InvalidScenario(format!(
                "mean(dist_a) = {ma} must exceed mean(dist_b) = {mb}; swap the two actions"
            )));
        }
        let graph_n = match &self.graph {
            GraphSource::Generated(spec) => spec.n_agents(),
            GraphSource::Explicit(g) => g.n_agents(),
        };
        if graph_n != self.n_agents {
            return Err(Error::InvalidScenario(format!(
                "n_agents = {} but the graph has {graph_n} agents",
                self.n_agents
            )));
        }
        if self.n_agents == 0 {
            return Err(Error::InvalidScenario("n_agents must be positive".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidScenario("replications must be at least 1".into()));
        }
        if let Some(&bad) = self.best_responders.iter().find(|&&a| a >= self.n_agents) {
            return Err(Error::UnknownAgent { agent: bad, n: self.n_agents });
        }
        Ok(())
    }

    /// Builds the graph, arrival order and mechanism.
    pub fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        let graph = match &self.graph {
            GraphSource::Generated(spec) => generate(spec, &mut seed::rng(seed::aux(self.seed, GRAPH_STREAM)))?,
            GraphSource::Explicit(g) => g.clone(),
        };
        let n = self.n_agents;
        let order = match &self.arrival {
            ArrivalOrder::Identity => (0..n).collect(),
            ArrivalOrder::Permutation(p) => {
                let mut seen = vec![false; n];
                if p.len() != n || p.iter().any(|&a| a >= n || core::mem::replace(&mut seen[a], true)) {
                    return Err(Error::InvalidScenario(format!("arrival order is not a permutation of 0..{n}")));
                }
                p.clone()
            }
            ArrivalOrder::SeededShuffle => {
                let mut p: Vec<AgentId> = (0..n).collect();
                p.shuffle(&mut seed::rng(seed::aux(self.seed, ORDER_STREAM)));
                p
            }
        };
        let mut position = vec![0; n];
        for (t, &a) in order.iter().enumerate() {
            position[a] = t;
        }
        let mechanism = Mechanism::build(&self.mechanism, &self.dist_a, &self.dist_b, &graph)?;
        let base_k = match build_partition(&self.dist_a, self.dist_b.mean(), self.mechanism.tol) {
            Ok(p) => Some(p.k()),
            Err(Error::NoExplorationNeeded) => None,
            Err(e) => return Err(e),
        };
        let mut profile = vec![Policy::Compliant; n];
        for &a in &self.best_responders {
            profile[a] = Policy::BestResponse;
        }
        let mut prepared = Prepared {
            dist_a: self.dist_a.clone(),
            dist_b: self.dist_b.clone(),
            regime: self.mechanism.regime,
            seed: self.seed,
            replications: self.replications,
            graph,
            order,
            position,
            mechanism,
            base_k,
            profile,
            responses: ResponseTable::default(),
        };
        if !self.best_responders.is_empty() {
            prepared.responses = exact_audit(&prepared)?.responses;
        }
        Ok(prepared)
    }
}

/// A scenario with its graph, order and mechanism fixed.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub dist_a: PiecewiseDistribution,
    pub dist_b: PiecewiseDistribution,
    pub regime: RegimeSpec,
    pub seed: u64,
    pub replications: usize,
    pub graph: VisibilityGraph,
    /// Agent arriving at each position.
    pub order: Vec<AgentId>,
    /// Arrival position of each agent.
    pub position: Vec<usize>,
    pub mechanism: Mechanism,
    /// `K` of the plain partition, when exploration is needed.
    pub base_k: Option<usize>,
    pub profile: Vec<Policy>,
    /// Best responses of non-compliant agents, keyed by information set.
    pub responses: ResponseTable,
}

/// One arrival in a trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    pub agent: AgentId,
    pub message: Message,
    pub branch: Branch,
    pub action: Action,
    pub reward: f64,
    pub k: usize,
    pub z: usize,
    pub experiment: bool,
    pub knowledge: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub seed: u64,
    pub va: f64,
    pub vb: f64,
    pub tag: usize,
    /// In arrival order.
    pub records: Vec<Record>,
    pub exploration_end: Option<usize>,
    pub rho: Vec<AgentId>,
    pub shadow: Vec<AgentId>,
    pub z_final: usize,
    pub k_final: usize,
}

impl RunTrace {
    pub fn fraction_optimal(&self) -> f64 {
        let best = Action::argmax(self.va, self.vb);
        let hits = self.records.iter().filter(|r| r.action == best).count();
        hits as f64 / self.records.len() as f64
    }

    pub fn avg_reward(&self) -> f64 {
        self.records.iter().map(|r| r.reward).sum::<f64>() / self.records.len() as f64
    }

    /// Action taken by each agent, indexed by agent id.
    pub fn actions_by_agent(&self) -> Vec<Action> {
        let mut out = vec![Action::A; self.records.len()];
        for r in &self.records {
            out[r.agent] = r.action;
        }
        out
    }

    pub fn summary(&self, index: u64) -> RunSummary {
        RunSummary {
            index,
            seed: self.seed,
            va: self.va,
            vb: self.vb,
            fraction_optimal: self.fraction_optimal(),
            avg_reward: self.avg_reward(),
            exploration_end: self.exploration_end,
            rho: self.rho.len(),
            shadow: self.shadow.len(),
            z: self.z_final,
            k: self.k_final,
        }
    }
}

/// Friends of `agent` that arrived before position `t`, with their actions.
pub(crate) fn observed_key(
    graph: &VisibilityGraph,
    position: &[usize],
    agent: AgentId,
    message: Message,
    action_of: impl Fn(AgentId) -> Action,
) -> InfoKey {
    let t = position[agent];
    let observed = graph
        .neighbors(agent)
        .unwrap_or(&[])
        .iter()
        .filter(|&&f| position[f] < t)
        .map(|&f| (f, action_of(f)))
        .collect();
    InfoKey { message, observed }
}

impl Prepared {
    pub fn n_agents(&self) -> usize {
        self.order.len()
    }

    pub fn mu_a(&self) -> f64 {
        self.dist_a.mean()
    }

    pub fn mu_b(&self) -> f64 {
        self.dist_b.mean()
    }

    pub fn run_seed(&self, index: u64) -> u64 {
        seed::child(self.seed, index)
    }

    /// Replication `index` of the scenario.
    pub fn run_index(&self, index: u64) -> Result<RunTrace> {
        self.run_once(self.run_seed(index))
    }

    pub fn run_once(&self, run_seed: u64) -> Result<RunTrace> {
        let mut rng = seed::rng(run_seed);
        let va = self.dist_a.sample(&mut rng);
        let vb = self.dist_b.sample(&mut rng);
        let tag = rng.gen_range(0..self.mechanism.replica_count());
        let n = self.n_agents();
        let mut planner = self.mechanism.planner(&self.graph, tag);
        let mut actions: Vec<Option<Action>> = vec![None; n];
        let mut records = Vec::with_capacity(n);
        for &agent in &self.order {
            let step = planner.step(agent)?;
            let action = match self.profile[agent] {
                Policy::Compliant => step.message.action,
                Policy::BestResponse => {
                    let key = observed_key(&self.graph, &self.position, agent, step.message, |f| {
                        actions[f].unwrap_or(Action::A)
                    });
                    self.responses.get(agent, &key).unwrap_or(step.message.action)
                }
            };
            let reward = if action == Action::A { va } else { vb };
            planner.reveal(agent, action, reward);
            actions[agent] = Some(action);
            records.push(Record {
                agent,
                message: step.message,
                branch: step.branch,
                action,
                reward,
                k: planner.k(),
                z: planner.z(),
                experiment: planner.experiment(),
                knowledge: planner.knowledge(),
            });
        }
        Ok(RunTrace {
            seed: run_seed,
            va,
            vb,
            tag,
            records,
            exploration_end: planner.exploration_end(),
            rho: planner.rho().to_vec(),
            shadow: planner.shadow().to_vec(),
            z_final: planner.z(),
            k_final: planner.k(),
        })
    }

    /// Replications `range` in order.
    pub fn summaries(&self, range: core::ops::Range<u64>) -> Result<Vec<RunSummary>> {
        range.map(|i| self.run_index(i).map(|t| t.summary(i))).collect()
    }

    /// All replications, sequentially.
    pub fn monte_carlo(&self) -> Result<Metrics> {
        Ok(Metrics::from_summaries(&self.summaries(0..self.replications as u64)?))
    }

    /// Phase-length bounds that apply to this run.
    pub fn bound_checks(&self, trace: &RunTrace) -> Vec<BoundCheck> {
        bound_checks(self, trace)
    }
}

/// Per-replication output row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSummary {
    pub index: u64,
    pub seed: u64,
    pub va: f64,
    pub vb: f64,
    pub fraction_optimal: f64,
    pub avg_reward: f64,
    pub exploration_end: Option<usize>,
    pub rho: usize,
    pub shadow: usize,
    pub z: usize,
    pub k: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Metrics {
    pub replications: u64,
    pub fraction_optimal: Moments,
    pub avg_reward: Moments,
    /// `sum U / (N max(V_a, V_b))`, over runs with `max(V_a, V_b) > 0`.
    pub optimality_ratio: Moments,
    /// `max(V_a, V_b) - avg reward`, over all runs.
    pub regret: Moments,
    /// Indicator of `V_b > V_a`.
    pub b_better: Moments,
    pub exploration_end: Moments,
    pub exploration_incomplete: u64,
    pub exploration_end_max: usize,
}

impl Metrics {
    pub fn push(&mut self, s: &RunSummary) {
        self.replications += 1;
        self.fraction_optimal.push(s.fraction_optimal);
        self.avg_reward.push(s.avg_reward);
        let best = s.va.max(s.vb);
        if best > 0.0 {
            self.optimality_ratio.push(s.avg_reward / best);
        }
        self.regret.push(best - s.avg_reward);
        self.b_better.push(if s.vb > s.va { 1.0 } else { 0.0 });
        match s.exploration_end {
            Some(e) => {
                self.exploration_end.push(e as f64);
                self.exploration_end_max = self.exploration_end_max.max(e);
            }
            None => self.exploration_incomplete += 1,
        }
    }

    pub fn from_summaries(rows: &[RunSummary]) -> Self {
        let mut m = Metrics::default();
        for r in rows {
            m.push(r);
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    /// False when the premise of the bound does not hold for this graph.
    pub applicable: bool,
    pub measured: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn pass(&self) -> bool {
        !self.applicable || self.measured <= self.bound
    }

    pub fn slack(&self) -> f64 {
        self.bound - self.measured
    }
}

/// `(mu_a - mu_b/2) / (mu_a - mu_b)`.
pub fn replica_factor(mu_a: f64, mu_b: f64) -> f64 {
    (mu_a - 0.5 * mu_b) / (mu_a - mu_b)
}

/// `2 (K - 1) N^{2 alpha}`: most agents the medium planner can consume
/// before its test set is full.
pub fn medium_phase_bound(k: usize, n: usize, alpha: f64) -> f64 {
    2.0 * (k as f64 - 1.0) * libm::pow(n as f64, 2.0 * alpha)
}

/// `3 K ((mu_a - mu_b/2) / (mu_a - mu_b)) N^{beta + 2 alpha}`.
pub fn high_phase_bound(k: usize, mu_a: f64, mu_b: f64, n: usize, regime: RegimeSpec) -> f64 {
    3.0 * k as f64 * replica_factor(mu_a, mu_b) * libm::pow(n as f64, regime.beta + 2.0 * regime.alpha)
}

/// Checks the phase-length bounds (and the "at most one test agent in
/// view" property) that apply to the mechanism of `p`.
pub fn bound_checks(p: &Prepared, trace: &RunTrace) -> Vec<BoundCheck> {
    let mut out = Vec::new();
    let n = p.n_agents();
    let Some(k) = p.base_k else { return out };
    let mut rho_mask = vec![false; n];
    for &r in &trace.rho {
        rho_mask[r] = true;
    }
    let max_rho_seen = trace
        .shadow
        .iter()
        .map(|&s| p.graph.neighbors(s).unwrap_or(&[]).iter().filter(|&&f| rho_mask[f]).count())
        .max()
        .unwrap_or(0);
    match p.mechanism.kind() {
        MechanismKind::Medium => {
            let premise = p.graph.max_degree() as f64 <= libm::pow(n as f64, p.regime.alpha);
            let bound = medium_phase_bound(k, n, p.regime.alpha);
            out.push(BoundCheck {
                name: "test-plus-shadow",
                applicable: premise,
                measured: (trace.rho.len() + trace.shadow.len()) as f64,
                bound,
            });
            // deficit K - k must be zero when N exceeds the bound
            out.push(BoundCheck {
                name: "reaches-k",
                applicable: premise && n as f64 > bound,
                measured: (k - trace.k_final.min(k)) as f64,
                bound: 0.0,
            });
            out.push(BoundCheck {
                name: "one-test-agent-in-view",
                applicable: true,
                measured: max_rho_seen as f64,
                bound: 1.0,
            });
        }
        MechanismKind::High => {
            let s_count = p.graph.classify(p.regime.alpha).s_count();
            let premise = s_count <= power_floor(n, p.regime.beta);
            let measured = trace.exploration_end.unwrap_or(n + 1) as f64;
            out.push(BoundCheck {
                name: "exploration-end",
                applicable: premise,
                measured,
                bound: high_phase_bound(k, p.mu_a(), p.mu_b(), n, p.regime),
            });
            out.push(BoundCheck {
                name: "k-prime",
                applicable: true,
                measured: p.mechanism.cells() as f64,
                bound: crate::partition::k_prime_bound(p.mu_a(), p.mu_b(), p.mechanism.replica_count(), k),
            });
            out.push(BoundCheck {
                name: "one-test-agent-in-view",
                applicable: true,
                measured: max_rho_seen as f64,
                bound: 1.0,
            });
        }
        _ => {}
    }
    out
}

/// Outcome of one failure demonstration.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoOutcome {
    pub name: &'static str,
    pub detail: String,
    /// The headline number (a deviation gain, or a stalled counter).
    pub value: f64,
}

pub fn unit_scenario_laws() -> (PiecewiseDistribution, PiecewiseDistribution) {
    (
        PiecewiseDistribution::uniform(0.0, 1.0).expect("valid law"),
        PiecewiseDistribution::uniform(0.0, 0.5).expect("valid law"),
    )
}

/// `V_b` with mean 0.1 but essential supremum 1, so that
/// `E[V_a | V_a < x] = 0.5 > mu_b` for `V_a ~ U[0, 1]`.
pub fn long_tail_b() -> PiecewiseDistribution {
    PiecewiseDistribution::new(vec![Piece::new(0.0, 0.1, 0.9), Piece::new(0.1, 1.0, 0.1)]).expect("valid law")
}

const GAIN_TOL: f64 = 1e-9;

fn demo_failed(name: &'static str, detail: String) -> Error {
    Error::DemoFailed { name, detail }
}

/// No visibility planner where the second test agent sees the first.
pub fn demo_edge_in_test_set() -> Result<DemoOutcome> {
    const NAME: &str = "edge-in-test-set";
    let (va, vb) = unit_scenario_laws();
    let g = VisibilityGraph::from_edges(12, [(1, 2)])?;
    let p = Scenario::new(va, vb, GraphSource::Explicit(g), MechanismKind::NoVisibility).prepare()?;
    let audit = exact_audit(&p)?;
    let key = InfoKey { message: Message::plain(Action::B), observed: vec![(1, Action::A)] };
    let group = audit.group(2, &key).ok_or_else(|| demo_failed(NAME, "witness information set unreachable".into()))?;
    if group.gain <= GAIN_TOL {
        return Err(demo_failed(NAME, format!("gain {} is not positive", group.gain)));
    }
    Ok(DemoOutcome {
        name: NAME,
        detail: format!(
            "agent 2 told b after seeing agent 1 play a: E[V_a|info] = {:.6}, E[V_b|info] = {:.6}, gain = {:.6}",
            group.ev_a, group.ev_b, group.gain
        ),
        value: group.gain,
    })
}

/// Chain `i < j < v < k`: `v` is outside the test set, sees `i` and `j`, and
/// is seen by `k`. `v` herds on `b` when both of its friends played `b`.
pub fn chain_scenario() -> Result<Scenario> {
    let (va, vb) = unit_scenario_laws();
    let g = VisibilityGraph::from_edges(12, [(1, 3), (2, 3), (3, 4)])?;
    let mut s = Scenario::new(va, vb, GraphSource::Explicit(g), MechanismKind::NoVisibility);
    s.mechanism.test_positions = Some(vec![1, 2, 4, 5, 6, 7, 8, 9, 10]);
    s.best_responders = vec![3];
    Ok(s)
}

pub fn demo_chain() -> Result<DemoOutcome> {
    const NAME: &str = "chain";
    let p = chain_scenario()?.prepare()?;
    let audit = exact_audit(&p)?;
    let herd_key = InfoKey { message: Message::plain(Action::A), observed: vec![(1, Action::B), (2, Action::B)] };
    if p.responses.get(3, &herd_key) != Some(Action::B) {
        return Err(demo_failed(NAME, "v does not herd on b after seeing two b's".into()));
    }
    let key = InfoKey { message: Message::plain(Action::B), observed: vec![(3, Action::A)] };
    let group = audit.group(4, &key).ok_or_else(|| demo_failed(NAME, "witness information set unreachable".into()))?;
    if group.gain <= GAIN_TOL {
        return Err(demo_failed(NAME, format!("gain {} is not positive", group.gain)));
    }
    Ok(DemoOutcome {
        name: NAME,
        detail: format!(
            "agent 4 (third test agent) told b after seeing v play a: E[V_a|info] = {:.6}, gain = {:.6}",
            group.ev_a, group.gain
        ),
        value: group.gain,
    })
}

/// Star on 100 agents whose center arrives last, under the medium planner.
pub fn demo_star_center_last() -> Result<DemoOutcome> {
    const NAME: &str = "star-center-last";
    let (va, vb) = unit_scenario_laws();
    let n = 100;
    let g = VisibilityGraph::from_edges(n, (0..n - 1).map(|i| (i, n - 1)))?;
    let p = Scenario::new(va, vb, GraphSource::Explicit(g), MechanismKind::Medium).prepare()?;
    let k = p.base_k.unwrap_or(0);
    let trace = p.run_index(0)?;
    if trace.k_final >= k || trace.exploration_end.is_some() {
        return Err(demo_failed(NAME, format!("k reached {} of K = {k}", trace.k_final)));
    }
    Ok(DemoOutcome {
        name: NAME,
        detail: format!(
            "k stalled at {} of K = {k}; test set {:?}, {} agents shadowed, N = {n} vs 2(K-1)N^(2a) = {:.1}",
            trace.k_final,
            trace.rho,
            trace.shadow.len(),
            medium_phase_bound(k, n, p.regime.alpha)
        ),
        value: trace.k_final as f64,
    })
}

/// Complete graph on 50 agents. Returns, per mechanism, the largest exact
/// deviation gain and the probability that `b` is better but never tried.
pub fn complete_graph_outcomes(
    va: &PiecewiseDistribution,
    vb: &PiecewiseDistribution,
) -> Result<Vec<(MechanismKind, f64, f64)>> {
    let n = 50;
    MechanismKind::ALL
        .iter()
        .map(|&kind| {
            let mut s = Scenario::new(va.clone(), vb.clone(), GraphSource::Generated(GraphSpec::Complete { n }), kind);
            s.mechanism.regime = RegimeSpec { alpha: 0.0, beta: 1.0 };
            let p = s.prepare()?;
            let audit = exact_audit(&p)?;
            Ok((kind, audit.max_gain(), audit.p_b_missed))
        })
        .collect()
}

/// On the complete graph no implemented mechanism is both incentive
/// compatible and efficient when `E[V_a | V_a < x] > mu_b`; the threshold
/// planner is incentive compatible when `E[V_a | V_a < x] <= mu_b`.
pub fn demo_complete_graph() -> Result<DemoOutcome> {
    const NAME: &str = "complete-graph";
    let va = PiecewiseDistribution::uniform(0.0, 1.0)?;
    let vb = long_tail_b();
    let x = vb.ess_sup();
    let below = va.cond_expect(&IntervalSet::half_open(va.support_lo(), x))?;
    if !(below > vb.mean()) {
        return Err(demo_failed(NAME, "scenario does not satisfy E[V_a | V_a < x] > mu_b".into()));
    }
    let mut detail = format!("E[V_a|V_a<x] = {below:.4} > mu_b = {:.4}:", vb.mean());
    let mut worst = f64::INFINITY;
    for (kind, gain, missed) in complete_graph_outcomes(&va, &vb)? {
        detail.push_str(&format!(" {}: gain {gain:.4}, P(b better, never tried) {missed:.4};", kind.as_str()));
        let defect = gain.max(missed);
        if defect <= GAIN_TOL {
            return Err(demo_failed(NAME, format!("{} is both IC and efficient", kind.as_str())));
        }
        worst = worst.min(defect);
    }

    let (va, vb) = unit_scenario_laws();
    let s = Scenario::new(va, vb, GraphSource::Generated(GraphSpec::Complete { n: 50 }), MechanismKind::Threshold);
    let audit = exact_audit(&s.prepare()?)?;
    if audit.max_gain() > GAIN_TOL || audit.p_b_missed > GAIN_TOL {
        return Err(demo_failed(NAME, format!("threshold planner gain {} at E[V_a|V_a<x] = mu_b", audit.max_gain())));
    }
    detail.push_str(&format!(" threshold planner at E[V_a|V_a<x] = mu_b: gain {:.2e}", audit.max_gain()));
    Ok(DemoOutcome { name: NAME, detail, value: worst })
}

/// Runs the four demonstrations; each entry is an error if its pathology
/// did not show up.
pub fn run_demos() -> Vec<Result<DemoOutcome>> {
    vec![demo_edge_in_test_set(), demo_chain(), demo_star_center_last(), demo_complete_graph()]
}

/// All four demonstrations, failing on the first that does not manifest.
pub fn failure_demos() -> Result<Vec<DemoOutcome>> {
    run_demos().into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(graph: GraphSource, kind: MechanismKind) -> Scenario {
        let (va, vb) = unit_scenario_laws();
        Scenario::new(va, vb, graph, kind)
    }

    #[test]
    fn rejects_wrong_prior_order() {
        let (va, vb) = unit_scenario_laws();
        let s = Scenario::new(vb, va, GraphSource::Generated(GraphSpec::Empty { n: 3 }), MechanismKind::NoVisibility);
        let err = s.prepare().unwrap_err();
        assert!(matches!(err, Error::InvalidScenario(ref m) if m.contains("swap")), "{err}");
    }

    #[test]
    fn traces_are_deterministic_and_conserve_agents() {
        let mut s = unit(
            GraphSource::Generated(GraphSpec::BoundedDegree { n: 60, cap: 3, mean_degree: 2.0 }),
            MechanismKind::Medium,
        );
        s.arrival = ArrivalOrder::SeededShuffle;
        s.seed = 11;
        let p = s.prepare().unwrap();
        let a = p.run_index(3).unwrap();
        let b = p.run_index(3).unwrap();
        assert_eq!(a, b);
        let mut agents: Vec<_> = a.records.iter().map(|r| r.agent).collect();
        agents.sort_unstable();
        assert_eq!(agents, (0..60).collect::<Vec<_>>());
        for r in &a.records {
            assert_eq!(r.reward, if r.action == Action::A { a.va } else { a.vb });
        }
    }

    #[test]
    fn empty_graph_exploration_ends_at_k_plus_one() {
        let p =
            unit(GraphSource::Generated(GraphSpec::Empty { n: 30 }), MechanismKind::NoVisibility).prepare().unwrap();
        let k = p.base_k.unwrap();
        for i in 0..50 {
            let t = p.run_index(i).unwrap();
            assert_eq!(t.exploration_end, Some(k + 1));
            let best = Action::argmax(t.va, t.vb);
            assert!(t.records[k + 1..].iter().all(|r| r.action == best));
        }
    }

    #[test]
    fn empty_graph_medium_uses_exactly_k_agents() {
        let p = unit(GraphSource::Generated(GraphSpec::Empty { n: 30 }), MechanismKind::Medium).prepare().unwrap();
        let t = p.run_index(0).unwrap();
        assert_eq!(t.rho.len() + t.shadow.len(), p.base_k.unwrap());
        assert!(p.bound_checks(&t).iter().all(BoundCheck::pass));
    }

    #[test]
    fn example_one_takes_uninformed_branch() {
        let va = PiecewiseDistribution::uniform(-3.0, -1.0).unwrap();
        let vb = PiecewiseDistribution::uniform(-6.0, 0.0).unwrap();
        let p = Scenario::new(va, vb, GraphSource::Generated(GraphSpec::Empty { n: 20 }), MechanismKind::NoVisibility)
            .prepare()
            .unwrap();
        assert!(p.mechanism.is_uninformed());
        let t = p.run_index(0).unwrap();
        assert!(t.records.iter().all(|r| r.action == Action::A));
        let want = if t.va >= t.vb { 1.0 } else { 0.0 };
        assert_eq!(t.fraction_optimal(), want);
    }

    #[test]
    fn demos_show_their_pathologies() {
        let out = failure_demos().unwrap();
        assert_eq!(out.len(), 4);
        assert!((out[0].value - 0.301_777).abs() < 1e-5, "{}", out[0].detail);
        assert!(out[1].value > 0.3);
    }
}
