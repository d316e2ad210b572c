//! Bayesian agents and incentive audits.
//!
//! An agent knows its arrival position, its message and the actions of the
//! friends who arrived earlier. With everyone else following a fixed
//! profile, its posterior over `(V_a, V_b)` is the law of the rewards
//! conditioned on that information set.
//!
//! Two auditors compute those posteriors:
//!
//! * [`exact_audit`] enumerates the finitely many events the planner's
//!   decisions depend on (the cells, the replicas of `D_0`, and which action
//!   turns out better) and runs the protocol once per event. Posteriors are
//!   then exact ratios of closed-form moments.
//! * [`McAudit`] groups simulated runs by information set and reports sample
//!   means with standard errors.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::distribution::ordered_moments;
use crate::interval::IntervalSet;
use crate::mechanism::{Branch, Message};
use crate::partition::Replicas;
use crate::sim::{observed_key, Prepared, RunTrace};
use crate::stats::{normal_upper_quantile, normal_upper_tail, Moments};
use crate::{Action, AgentId, Error, Result};

/// What an agent sees besides its own position: the planner's message and
/// the actions of earlier friends, sorted by friend id.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InfoKey {
    pub message: Message,
    pub observed: Vec<(AgentId, Action)>,
}

impl core::fmt::Display for InfoKey {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "msg={}", self.message)?;
        if !self.observed.is_empty() {
            f.write_str(" saw=")?;
            for (i, (friend, action)) in self.observed.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{friend}:{action}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfoSet {
    pub position: usize,
    pub agent: AgentId,
    pub key: InfoKey,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    Compliant,
    BestResponse,
}

/// Best responses of non-compliant agents, by information set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResponseTable {
    table: BTreeMap<(AgentId, InfoKey), Action>,
}

impl ResponseTable {
    pub fn get(&self, agent: AgentId, key: &InfoKey) -> Option<Action> {
        self.table.get(&(agent, key.clone())).copied()
    }

    pub fn insert(&mut self, agent: AgentId, key: InfoKey, action: Action) {
        self.table.insert((agent, key), action);
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Argmax of the posterior values; within `tol` of indifference the agent
/// keeps the recommended action.
pub fn best_response(message: Action, ev_a: f64, ev_b: f64, tol: f64) -> Action {
    let (ev_msg, ev_other) = match message {
        Action::A => (ev_a, ev_b),
        Action::B => (ev_b, ev_a),
    };
    if ev_other - ev_msg > tol {
        message.other()
    } else {
        message
    }
}

/// `max(0, E[V_other | info] - E[V_message | info])`.
pub fn gain_of(message: Action, ev_a: f64, ev_b: f64) -> f64 {
    let d = match message {
        Action::A => ev_b - ev_a,
        Action::B => ev_a - ev_b,
    };
    d.max(0.0)
}

/// Numerical indifference band of the exact auditor.
pub const EXACT_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
struct Atom {
    rep_a: f64,
    rep_b: f64,
    tag: usize,
    winner: Action,
    weight: f64,
    /// `E[V_a; atom]` and `E[V_b; atom]`.
    ea: f64,
    eb: f64,
}

/// The events (with random label and probability factor) that every
/// planner decision is measurable against.
fn decision_sets(p: &Prepared) -> Vec<(IntervalSet, usize, f64)> {
    let va = &p.dist_a;
    let support = IntervalSet::closed(va.support_lo(), va.support_hi());
    let mech = &p.mechanism;
    if let Some(x) = mech.threshold() {
        let below = IntervalSet::half_open(va.support_lo(), x).intersect(&support);
        let above = support.difference(&below);
        return vec![(below, 0, 1.0), (above, 0, 1.0)];
    }
    let Some(partition) = mech.partition() else {
        return vec![(support, 0, 1.0)];
    };
    let mut out = Vec::new();
    match mech.replicated().map(|r| r.replicas()) {
        Some(Replicas::RandomTag { count }) => {
            for tag in 0..*count {
                out.push((partition.d0().clone(), tag, 1.0 / *count as f64));
            }
        }
        Some(Replicas::Comb(sets)) => out.extend(sets.iter().map(|s| (s.clone(), 0, 1.0))),
        None => out.push((partition.d0().clone(), 0, 1.0)),
    }
    out.extend(partition.cells().iter().map(|c| (c.clone(), 0, 1.0)));
    out
}

fn atoms(p: &Prepared) -> Result<Vec<Atom>> {
    let mut out = Vec::new();
    for (set, tag, factor) in decision_sets(p) {
        let mass = p.dist_a.prob(&set);
        if mass <= 0.0 {
            continue;
        }
        let rep_a = match set.parts().first() {
            Some(part) => 0.5 * (part.lo() + part.hi()),
            None => continue,
        };
        let om = ordered_moments(&p.dist_a.restrict(&set)?, &p.dist_b);
        for winner in [Action::A, Action::B] {
            let (pw, ea, eb) = match winner {
                Action::A => (om.prob_a_wins, om.va_where_a_wins, om.vb_where_a_wins),
                Action::B => (1.0 - om.prob_a_wins, om.mean_a - om.va_where_a_wins, om.mean_b - om.vb_where_a_wins),
            };
            if pw <= 1e-15 {
                continue;
            }
            let scale = factor * mass;
            let rep_b = if winner == Action::A { rep_a - 1.0 } else { rep_a + 1.0 };
            out.push(Atom { rep_a, rep_b, tag, winner, weight: scale * pw, ea: scale * ea, eb: scale * eb });
        }
    }
    Ok(out)
}

/// Exact posterior of one information set.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactGroup {
    pub agent: AgentId,
    pub position: usize,
    pub key: InfoKey,
    /// Planner branch carrying most of the probability of this set.
    pub branch: Branch,
    pub prob: f64,
    pub ev_a: f64,
    pub ev_b: f64,
    pub gain: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExactAudit {
    /// In arrival order, then by key.
    pub groups: Vec<ExactGroup>,
    index: BTreeMap<(AgentId, InfoKey), usize>,
    pub responses: ResponseTable,
    /// `P(V_b > V_a` and nobody ever plays `b)`.
    pub p_b_missed: f64,
    /// Probability that exploration never finished.
    pub p_unfinished: f64,
}

impl ExactAudit {
    pub fn group(&self, agent: AgentId, key: &InfoKey) -> Option<&ExactGroup> {
        self.index.get(&(agent, key.clone())).map(|&i| &self.groups[i])
    }

    pub fn max_gain(&self) -> f64 {
        self.groups.iter().map(|g| g.gain).fold(0.0, f64::max)
    }

    /// Group with the largest gain.
    pub fn witness(&self) -> Option<&ExactGroup> {
        self.groups.iter().max_by(|a, b| a.gain.total_cmp(&b.gain))
    }

    /// Largest gain among the information sets of `agent`.
    pub fn deviation_gain(&self, agent: AgentId) -> Option<&ExactGroup> {
        self.groups.iter().filter(|g| g.agent == agent).max_by(|a, b| a.gain.total_cmp(&b.gain))
    }

    /// Per branch: (number of information sets, total probability, max gain).
    pub fn by_branch(&self) -> BTreeMap<Branch, (usize, f64, f64)> {
        let mut out: BTreeMap<Branch, (usize, f64, f64)> = BTreeMap::new();
        for g in &self.groups {
            let e = out.entry(g.branch).or_insert((0, 0.0, 0.0));
            e.0 += 1;
            e.1 += g.prob;
            e.2 = e.2.max(g.gain);
        }
        out
    }

    pub fn certified(&self, tol: f64) -> bool {
        self.max_gain() <= tol
    }
}

#[derive(Default)]
struct ExactAcc {
    weight: f64,
    ea: f64,
    eb: f64,
    branches: BTreeMap<Branch, f64>,
}

/// Exact audit of every information set of every agent, with all agents
/// following `p.profile`. Best-responding agents have their choices
/// recorded in the returned [`ResponseTable`].
pub fn exact_audit(p: &Prepared) -> Result<ExactAudit> {
    let atoms = atoms(p)?;
    let n = p.n_agents();
    let mut planners: Vec<_> = atoms.iter().map(|a| p.mechanism.planner(&p.graph, a.tag)).collect();
    let mut actions = vec![vec![Action::A; n]; atoms.len()];
    let mut played_b = vec![false; atoms.len()];
    let mut audit = ExactAudit::default();
    let mut steps = Vec::with_capacity(atoms.len());
    let mut keys: Vec<InfoKey> = Vec::with_capacity(atoms.len());

    for (position, &agent) in p.order.iter().enumerate() {
        steps.clear();
        keys.clear();
        let mut groups: BTreeMap<InfoKey, ExactAcc> = BTreeMap::new();
        for (i, atom) in atoms.iter().enumerate() {
            let step = planners[i].step(agent)?;
            let key = observed_key(&p.graph, &p.position, agent, step.message, |f| actions[i][f]);
            let acc = groups.entry(key.clone()).or_default();
            acc.weight += atom.weight;
            acc.ea += atom.ea;
            acc.eb += atom.eb;
            *acc.branches.entry(step.branch).or_insert(0.0) += atom.weight;
            keys.push(key);
            steps.push(step);
        }
        let mut chosen: BTreeMap<&InfoKey, Action> = BTreeMap::new();
        for (key, acc) in &groups {
            let (ev_a, ev_b) = (acc.ea / acc.weight, acc.eb / acc.weight);
            let msg = key.message.action;
            let branch =
                acc.branches.iter().max_by(|a, b| a.1.total_cmp(b.1)).map(|(b, _)| *b).unwrap_or(Branch::First);
            let action = match p.profile[agent] {
                Policy::Compliant => msg,
                Policy::BestResponse => {
                    let a = best_response(msg, ev_a, ev_b, EXACT_TOL);
                    audit.responses.insert(agent, key.clone(), a);
                    a
                }
            };
            chosen.insert(key, action);
            audit.index.insert((agent, key.clone()), audit.groups.len());
            audit.groups.push(ExactGroup {
                agent,
                position,
                key: key.clone(),
                branch,
                prob: acc.weight,
                ev_a,
                ev_b,
                gain: gain_of(msg, ev_a, ev_b),
            });
        }
        for (i, atom) in atoms.iter().enumerate() {
            let action = chosen[&keys[i]];
            let reward = if action == Action::A { atom.rep_a } else { atom.rep_b };
            planners[i].reveal(agent, action, reward);
            actions[i][agent] = action;
            played_b[i] |= action == Action::B;
        }
    }
    for (i, atom) in atoms.iter().enumerate() {
        if atom.winner == Action::B && !played_b[i] {
            audit.p_b_missed += atom.weight;
        }
        if planners[i].exploration_end().is_none() {
            audit.p_unfinished += atom.weight;
        }
    }
    Ok(audit)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditParams {
    /// Information sets matched fewer times are reported as unsupported.
    pub min_matched: u64,
    /// Family-wise significance, in standard-normal sigmas, before the
    /// Bonferroni split across supported information sets.
    pub sigma: f64,
}

impl Default for AuditParams {
    fn default() -> Self {
        AuditParams { min_matched: 200, sigma: 3.0 }
    }
}

const BRANCHES: usize = 11;

#[derive(Clone, Debug, Default)]
struct GroupStats {
    va: Moments,
    vb: Moments,
    /// `V_other - V_message`.
    diff: Moments,
    branches: [u64; BRANCHES],
}

/// Monte Carlo auditor: accumulates runs grouped by information set.
/// Merging accumulators in a fixed order gives reproducible results.
#[derive(Clone, Debug, Default)]
pub struct McAudit {
    audited: Option<Vec<bool>>,
    runs: u64,
    groups: BTreeMap<(usize, AgentId, InfoKey), GroupStats>,
}

impl McAudit {
    /// Audits `agents`, or everyone when `None`.
    pub fn new(p: &Prepared, agents: Option<&[AgentId]>) -> Self {
        let audited = agents.map(|list| {
            let mut mask = vec![false; p.n_agents()];
            for &a in list {
                if a < mask.len() {
                    mask[a] = true;
                }
            }
            mask
        });
        McAudit { audited, runs: 0, groups: BTreeMap::new() }
    }

    pub fn runs(&self) -> u64 {
        self.runs
    }

    pub fn observe(&mut self, p: &Prepared, trace: &RunTrace) {
        self.runs += 1;
        let actions = trace.actions_by_agent();
        for (position, r) in trace.records.iter().enumerate() {
            if self.audited.as_ref().is_some_and(|m| !m[r.agent]) {
                continue;
            }
            let key = observed_key(&p.graph, &p.position, r.agent, r.message, |f| actions[f]);
            let g = self.groups.entry((position, r.agent, key)).or_default();
            g.va.push(trace.va);
            g.vb.push(trace.vb);
            g.diff.push(match r.message.action {
                Action::A => trace.vb - trace.va,
                Action::B => trace.va - trace.vb,
            });
            g.branches[r.branch as usize] += 1;
        }
    }

    /// Adds replications `range` of `p`.
    pub fn run_range(&mut self, p: &Prepared, range: core::ops::Range<u64>) -> Result<()> {
        for i in range {
            let trace = p.run_index(i)?;
            self.observe(p, &trace);
        }
        Ok(())
    }

    pub fn merge(&mut self, other: McAudit) {
        self.runs += other.runs;
        for (k, g) in other.groups {
            let e = self.groups.entry(k).or_default();
            e.va.merge(&g.va);
            e.vb.merge(&g.vb);
            e.diff.merge(&g.diff);
            for (a, b) in e.branches.iter_mut().zip(g.branches) {
                *a += b;
            }
        }
    }

    pub fn finish(&self, params: &AuditParams) -> AuditReport {
        let supported = self.groups.values().filter(|g| g.diff.n >= params.min_matched).count().max(1);
        let z_certify = normal_upper_quantile(normal_upper_tail(params.sigma) / supported as f64);
        let groups = self
            .groups
            .iter()
            .map(|((position, agent, key), g)| {
                let branch_idx = (0..BRANCHES).max_by_key(|&i| (g.branches[i], core::cmp::Reverse(i))).unwrap_or(0);
                AuditGroup {
                    agent: *agent,
                    position: *position,
                    key: key.clone(),
                    branch: BRANCH_ORDER[branch_idx],
                    matched: g.diff.n,
                    ev_a: g.va.mean(),
                    ev_b: g.vb.mean(),
                    se_a: g.va.std_err(),
                    se_b: g.vb.std_err(),
                    diff_mean: g.diff.mean(),
                    stderr: g.diff.std_err(),
                    gain: g.diff.mean().max(0.0),
                }
            })
            .collect();
        AuditReport { runs: self.runs, min_matched: params.min_matched, z_certify, groups }
    }
}

/// `Branch` values indexed by their discriminant.
const BRANCH_ORDER: [Branch; BRANCHES] = [
    Branch::First,
    Branch::Uninformed,
    Branch::TestB,
    Branch::TestA,
    Branch::Idle,
    Branch::Blocked,
    Branch::HubQuiet,
    Branch::HubClose,
    Branch::Special,
    Branch::Close,
    Branch::Exploit,
];

#[derive(Clone, Debug, PartialEq)]
pub struct AuditGroup {
    pub agent: AgentId,
    pub position: usize,
    pub key: InfoKey,
    pub branch: Branch,
    pub matched: u64,
    pub ev_a: f64,
    pub ev_b: f64,
    pub se_a: f64,
    pub se_b: f64,
    /// Mean of `V_other - V_message` over matched runs.
    pub diff_mean: f64,
    pub stderr: f64,
    pub gain: f64,
}

impl AuditGroup {
    pub fn z_score(&self) -> f64 {
        if self.stderr > 0.0 {
            self.diff_mean / self.stderr
        } else if self.diff_mean > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub runs: u64,
    pub min_matched: u64,
    /// Per-set threshold in standard errors after the Bonferroni split.
    pub z_certify: f64,
    pub groups: Vec<AuditGroup>,
}

impl AuditReport {
    pub fn is_supported(&self, g: &AuditGroup) -> bool {
        g.matched >= self.min_matched
    }

    pub fn supported(&self) -> impl Iterator<Item = &AuditGroup> {
        self.groups.iter().filter(|g| self.is_supported(g))
    }

    /// Information sets seen too rarely to judge.
    pub fn insufficient(&self) -> impl Iterator<Item = &AuditGroup> {
        self.groups.iter().filter(|g| !self.is_supported(g))
    }

    /// The estimated gain is within `z_certify` standard errors of zero.
    pub fn certifies(&self, g: &AuditGroup) -> bool {
        g.diff_mean <= self.z_certify * g.stderr
    }

    /// Positive gain at the Bonferroni-adjusted level.
    pub fn significant(&self, g: &AuditGroup) -> bool {
        self.is_supported(g) && !self.certifies(g)
    }

    /// Every supported information set certifies.
    pub fn certified(&self) -> bool {
        self.supported().all(|g| self.certifies(g))
    }

    /// Supported group with the largest estimated gain.
    pub fn witness(&self) -> Option<&AuditGroup> {
        self.supported().max_by(|a, b| a.gain.total_cmp(&b.gain))
    }

    /// Largest supported gain of `agent`, or why there is none.
    pub fn deviation_gain(&self, agent: AgentId) -> Result<&AuditGroup> {
        let mine = || self.groups.iter().filter(|g| g.agent == agent);
        match mine().filter(|g| self.is_supported(g)).max_by(|a, b| a.gain.total_cmp(&b.gain)) {
            Some(g) => Ok(g),
            None => Err(Error::InsufficientSupport {
                matched: mine().map(|g| g.matched as usize).max().unwrap_or(0),
                required: self.min_matched as usize,
            }),
        }
    }

    /// Per branch: (supported sets, unsupported sets, max supported gain,
    /// all supported sets certify).
    pub fn by_branch(&self) -> BTreeMap<Branch, (usize, usize, f64, bool)> {
        let mut out: BTreeMap<Branch, (usize, usize, f64, bool)> = BTreeMap::new();
        for g in &self.groups {
            let e = out.entry(g.branch).or_insert((0, 0, 0.0, true));
            if self.is_supported(g) {
                e.0 += 1;
                e.2 = e.2.max(g.gain);
                e.3 &= self.certifies(g);
            } else {
                e.1 += 1;
            }
        }
        out
    }

    /// Largest `|MC - exact| / se` over supported sets, for both posterior
    /// means; `None` when nothing could be compared.
    pub fn worst_disagreement(&self, exact: &ExactAudit) -> Option<f64> {
        self.supported()
            .filter_map(|g| {
                let e = exact.group(g.agent, &g.key)?;
                let za = if g.se_a > 0.0 { (g.ev_a - e.ev_a).abs() / g.se_a } else { 0.0 };
                let zb = if g.se_b > 0.0 { (g.ev_b - e.ev_b).abs() / g.se_b } else { 0.0 };
                Some(za.max(zb))
            })
            .reduce(f64::max)
    }
}

/// Monte Carlo posterior of one information set from replications
/// `range`: `(E[V_a | info], E[V_b | info], matched)`.
pub fn posterior_values(
    p: &Prepared,
    info: &InfoSet,
    range: core::ops::Range<u64>,
    min_matched: u64,
) -> Result<(f64, f64, u64)> {
    let mut va = Moments::default();
    let mut vb = Moments::default();
    for i in range {
        let trace = p.run_index(i)?;
        let Some(r) = trace.records.get(info.position) else { continue };
        if r.agent != info.agent || r.message != info.key.message {
            continue;
        }
        let actions = trace.actions_by_agent();
        let key = observed_key(&p.graph, &p.position, r.agent, r.message, |f| actions[f]);
        if key == info.key {
            va.push(trace.va);
            vb.push(trace.vb);
        }
    }
    if va.n < min_matched {
        return Err(Error::InsufficientSupport { matched: va.n as usize, required: min_matched as usize });
    }
    Ok((va.mean(), vb.mean(), va.n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{Flag, MechanismKind};
    use crate::network::GraphSpec;
    use crate::partition::build_partition;
    use crate::sim::{unit_scenario_laws, GraphSource, Scenario};

    fn unit(n: usize, kind: MechanismKind) -> Prepared {
        let (va, vb) = unit_scenario_laws();
        Scenario::new(va, vb, GraphSource::Generated(GraphSpec::Empty { n }), kind).prepare().unwrap()
    }

    #[test]
    fn best_response_keeps_message_when_indifferent() {
        assert_eq!(best_response(Action::B, 0.25, 0.25, 1e-9), Action::B);
        assert_eq!(best_response(Action::B, 0.55, 0.25, 1e-9), Action::A);
        assert_eq!(best_response(Action::A, 0.6, 0.25, 1e-9), Action::A);
    }

    #[test]
    fn exact_no_visibility_posteriors() {
        let p = unit(14, MechanismKind::NoVisibility);
        let audit = exact_audit(&p).unwrap();
        assert!(audit.certified(EXACT_TOL), "max gain {}", audit.max_gain());
        let va = &p.dist_a;
        let part = build_partition(va, 0.25, 1e-9).unwrap();
        for j in 1..=part.k() {
            let b = audit.group(j, &InfoKey { message: Message::plain(Action::B), observed: vec![] }).unwrap();
            let want = va.cond_expect(&part.test_event(j)).unwrap();
            assert!((b.ev_a - want).abs() < 1e-12);
            assert!((b.ev_b - 0.25).abs() < 1e-12);
            let a = audit.group(j, &InfoKey { message: Message::plain(Action::A), observed: vec![] }).unwrap();
            assert!(a.ev_a > 0.25);
            assert!((a.prob + b.prob - 1.0).abs() < 1e-12);
        }
        assert_eq!(audit.p_b_missed, 0.0);
        assert_eq!(audit.p_unfinished, 0.0);
    }

    #[test]
    fn exact_probabilities_sum_to_one_per_agent() {
        let p = unit(40, MechanismKind::High);
        let audit = exact_audit(&p).unwrap();
        for agent in 0..40 {
            let total: f64 = audit.groups.iter().filter(|g| g.agent == agent).map(|g| g.prob).sum();
            assert!((total - 1.0).abs() < 1e-12, "{agent}: {total}");
        }
        assert!(audit.certified(EXACT_TOL));
    }

    #[test]
    fn special_message_has_low_posterior() {
        // two replicas and no hubs: label 1 is never tested
        let (va, vb) = unit_scenario_laws();
        let mut s = Scenario::new(va, vb, GraphSource::Generated(GraphSpec::Empty { n: 60 }), MechanismKind::High);
        s.mechanism.replicas = Some(2);
        let p = s.prepare().unwrap();
        let audit = exact_audit(&p).unwrap();
        let special = audit.groups.iter().find(|g| g.key.message.flag == Flag::Special).unwrap();
        assert!((special.ev_a - 0.125).abs() < 1e-12);
        assert!((special.prob - 0.125).abs() < 1e-12);
        assert_eq!(special.gain, 0.0);
    }

    #[test]
    fn mc_matches_exact_on_small_case() {
        let p = unit(12, MechanismKind::NoVisibility);
        let exact = exact_audit(&p).unwrap();
        let mut mc = McAudit::new(&p, None);
        mc.run_range(&p, 0..4000).unwrap();
        let report = mc.finish(&AuditParams::default());
        assert!(report.certified());
        assert!(report.worst_disagreement(&exact).unwrap() < 4.5);
    }

    #[test]
    fn mc_merge_equals_single_pass() {
        let p = unit(12, MechanismKind::Medium);
        let mut whole = McAudit::new(&p, None);
        whole.run_range(&p, 0..300).unwrap();
        let mut a = McAudit::new(&p, None);
        a.run_range(&p, 0..100).unwrap();
        let mut b = McAudit::new(&p, None);
        b.run_range(&p, 100..300).unwrap();
        a.merge(b);
        let params = AuditParams { min_matched: 10, sigma: 3.0 };
        let (x, y) = (whole.finish(&params), a.finish(&params));
        assert_eq!(x.groups.len(), y.groups.len());
        for (g, h) in x.groups.iter().zip(&y.groups) {
            assert_eq!((g.matched, &g.key), (h.matched, &h.key));
            assert!((g.ev_a - h.ev_a).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_values_reports_thin_support() {
        let p = unit(12, MechanismKind::NoVisibility);
        let info =
            InfoSet { position: 2, agent: 2, key: InfoKey { message: Message::plain(Action::B), observed: vec![] } };
        let (ev_a, ev_b, matched) = posterior_values(&p, &info, 0..4000, 200).unwrap();
        assert!(matched > 1000);
        assert!((ev_a - 0.25).abs() < 0.02 && (ev_b - 0.25).abs() < 0.02);
        assert!(matches!(posterior_values(&p, &info, 0..10, 200), Err(Error::InsufficientSupport { .. })));
    }
}
