//! Visibility graphs: who can see whose actions.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::{AgentId, Error, Result};

/// Undirected, irreflexive graph on agents `0..N`. Adjacency lists are kept
/// sorted and deduplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VisibilityGraph {
    adj: Vec<Vec<AgentId>>,
}

impl VisibilityGraph {
    /// `n` isolated agents: nobody sees anybody.
    pub fn empty(n: usize) -> Self {
        VisibilityGraph { adj: alloc::vec![Vec::new(); n] }
    }

    pub fn from_edges<I: IntoIterator<Item = (AgentId, AgentId)>>(n: usize, edges: I) -> Result<Self> {
        let mut g = Self::empty(n);
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn n_agents(&self) -> usize {
        self.adj.len()
    }

    fn check(&self, agent: AgentId) -> Result<()> {
        if agent < self.adj.len() {
            Ok(())
        } else {
            Err(Error::UnknownAgent { agent, n: self.adj.len() })
        }
    }

    /// Adds the edge `{i, j}`; returns whether it was new.
    pub fn add_edge(&mut self, i: AgentId, j: AgentId) -> Result<bool> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        match self.adj[i].binary_search(&j) {
            Ok(_) => Ok(false),
            Err(pos) => {
                self.adj[i].insert(pos, j);
                let pos = self.adj[j].binary_search(&i).unwrap_err();
                self.adj[j].insert(pos, i);
                Ok(true)
            }
        }
    }

    pub fn has_edge(&self, i: AgentId, j: AgentId) -> bool {
        self.adj.get(i).is_some_and(|nb| nb.binary_search(&j).is_ok())
    }

    /// `B(n)`.
    pub fn neighbors(&self, agent: AgentId) -> Result<&[AgentId]> {
        self.check(agent)?;
        Ok(&self.adj[agent])
    }

    /// `B^t(n)`: neighbors that arrived before `agent`, given each agent's
    /// arrival position.
    pub fn neighbors_before(&self, agent: AgentId, position: &[usize]) -> Result<Vec<AgentId>> {
        let me = *position.get(agent).ok_or(Error::UnknownAgent { agent, n: position.len() })?;
        Ok(self.neighbors(agent)?.iter().copied().filter(|&f| position[f] < me).collect())
    }

    pub fn degree(&self, agent: AgentId) -> usize {
        self.adj.get(agent).map_or(0, Vec::len)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// T/S split at threshold `floor(N^alpha)`.
    pub fn classify(&self, alpha: f64) -> Classification {
        let threshold = power_floor(self.n_agents(), alpha);
        let high = self.adj.iter().map(|nb| nb.len() > threshold).collect();
        Classification { threshold, high }
    }

    /// `B_X(seed) u B_X(B_X(seed))` where `B_X(i) = B(i) n X`; `restrict =
    /// None` means `X` is everyone. Seed members are only included when
    /// reached through an edge.
    pub fn second_neighborhood(&self, seed: &[AgentId], restrict: Option<&[bool]>) -> BTreeSet<AgentId> {
        let keep = |j: &AgentId| restrict.is_none_or(|r| r.get(*j).copied().unwrap_or(false));
        let first: BTreeSet<AgentId> =
            seed.iter().filter_map(|&s| self.adj.get(s)).flatten().copied().filter(keep).collect();
        let mut out = first.clone();
        for &f in &first {
            out.extend(self.adj[f].iter().copied().filter(keep));
        }
        out
    }

    pub fn check_regime(&self, spec: RegimeSpec) -> RegimeReport {
        let c = self.classify(spec.alpha);
        let s_count = c.s_count();
        let s_limit = power_floor(self.n_agents(), spec.beta);
        let exponent = 2.0 * spec.alpha + spec.beta;
        RegimeReport {
            feasible: s_count <= s_limit && exponent < 1.0,
            s_count,
            degree_threshold: c.threshold,
            s_limit,
            exponent,
        }
    }

    /// Checks symmetry, irreflexivity and sortedness.
    pub fn is_well_formed(&self) -> bool {
        self.adj.iter().enumerate().all(|(i, nb)| {
            nb.windows(2).all(|w| w[0] < w[1])
                && nb.iter().all(|&j| j != i && j < self.adj.len() && self.adj[j].binary_search(&i).is_ok())
        })
    }
}

/// `floor(n^e)`, nudged so exact powers like `100^0.5` land on the integer.
pub fn power_floor(n: usize, exponent: f64) -> usize {
    let v = libm::pow(n as f64, exponent);
    libm::floor(v * (1.0 + 1e-12)) as usize
}

/// Degree classes: `T` (degree at most the threshold) and `S` (the rest).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub threshold: usize,
    high: Vec<bool>,
}

impl Classification {
    pub fn in_s(&self, agent: AgentId) -> bool {
        self.high.get(agent).copied().unwrap_or(false)
    }

    pub fn in_t(&self, agent: AgentId) -> bool {
        agent < self.high.len() && !self.high[agent]
    }

    /// Membership mask of `T`, for [`VisibilityGraph::second_neighborhood`].
    pub fn t_mask(&self) -> Vec<bool> {
        self.high.iter().map(|h| !h).collect()
    }

    pub fn t_set(&self) -> Vec<AgentId> {
        (0..self.high.len()).filter(|&i| !self.high[i]).collect()
    }

    pub fn s_set(&self) -> Vec<AgentId> {
        (0..self.high.len()).filter(|&i| self.high[i]).collect()
    }

    pub fn s_count(&self) -> usize {
        self.high.iter().filter(|&&h| h).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeSpec {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeReport {
    pub feasible: bool,
    pub s_count: usize,
    pub degree_threshold: usize,
    pub s_limit: usize,
    /// `2 alpha + beta`
    pub exponent: f64,
}

/// Graph families used as fixtures.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphSpec {
    Empty {
        n: usize,
    },
    Complete {
        n: usize,
    },
    Star {
        n: usize,
        center: AgentId,
    },
    Path {
        n: usize,
    },
    /// Random edges sampled until the mean degree is reached; an edge is
    /// rejected when either endpoint already has `cap` neighbors.
    BoundedDegree {
        n: usize,
        cap: usize,
        mean_degree: f64,
    },
    /// `floor(N^beta)` randomly placed hubs of degree `hub_degree` (at least
    /// `floor(N^alpha) + 1`), everyone else capped at `floor(N^alpha)`.
    TwoTier {
        n: usize,
        alpha: f64,
        beta: f64,
        mean_degree: f64,
        hub_degree: Option<usize>,
    },
}

impl GraphSpec {
    pub fn n_agents(&self) -> usize {
        match *self {
            GraphSpec::Empty { n }
            | GraphSpec::Complete { n }
            | GraphSpec::Star { n, .. }
            | GraphSpec::Path { n }
            | GraphSpec::BoundedDegree { n, .. }
            | GraphSpec::TwoTier { n, .. } => n,
        }
    }
}

/// Generates a graph; deterministic for a given `rng` state.
pub fn generate<R: Rng + ?Sized>(spec: &GraphSpec, rng: &mut R) -> Result<VisibilityGraph> {
    let infeasible = |msg: alloc::string::String| Err(Error::InfeasibleParams(msg));
    match *spec {
        GraphSpec::Empty { n } => Ok(VisibilityGraph::empty(n)),
        GraphSpec::Complete { n } => {
            let adj = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
            Ok(VisibilityGraph { adj })
        }
        GraphSpec::Star { n, center } => {
            if center >= n {
                return infeasible(format!("star center {center} outside 0..{n}"));
            }
            VisibilityGraph::from_edges(n, (0..n).filter(|&i| i != center).map(|i| (center, i)))
        }
        GraphSpec::Path { n } => VisibilityGraph::from_edges(n, (1..n).map(|i| (i - 1, i))),
        GraphSpec::BoundedDegree { n, cap, mean_degree } => {
            if !(mean_degree >= 0.0) || mean_degree > cap as f64 {
                return infeasible(format!("mean degree {mean_degree} must lie in [0, cap = {cap}]"));
            }
            let mut g = VisibilityGraph::empty(n);
            let all: Vec<AgentId> = (0..n).collect();
            sprinkle(&mut g, &all, &alloc::vec![cap; n], mean_degree, rng);
            Ok(g)
        }
        GraphSpec::TwoTier { n, alpha, beta, mean_degree, hub_degree } => {
            let cap = power_floor(n, alpha);
            let hubs = power_floor(n, beta).min(n);
            let hub_degree = hub_degree.unwrap_or((cap + 1).max(n / 10));
            if hubs > 0 && (hub_degree <= cap || hub_degree >= n) {
                return infeasible(format!("hub degree {hub_degree} must lie in ({cap}, {n})"));
            }
            if !(mean_degree >= 0.0) || mean_degree > cap as f64 {
                return infeasible(format!("mean degree {mean_degree} must lie in [0, cap = {cap}]"));
            }
            let mut ids: Vec<AgentId> = (0..n).collect();
            ids.shuffle(rng);
            let (hub_ids, rest) = ids.split_at(hubs);
            let mut rest = rest.to_vec();
            rest.sort_unstable();
            let mut g = VisibilityGraph::empty(n);
            for &h in hub_ids {
                let mut candidates: Vec<AgentId> =
                    (0..n).filter(|&j| j != h && (hub_ids.contains(&j) || g.degree(j) < cap)).collect();
                candidates.shuffle(rng);
                for &j in candidates.iter() {
                    if g.degree(h) >= hub_degree {
                        break;
                    }
                    if hub_ids.contains(&j) || g.degree(j) < cap {
                        g.add_edge(h, j)?;
                    }
                }
                if g.degree(h) <= cap {
                    return infeasible(format!("hub {h} reached only degree {}", g.degree(h)));
                }
            }
            sprinkle(&mut g, &rest, &alloc::vec![cap; n], mean_degree, rng);
            Ok(g)
        }
    }
}

/// Adds random edges among `nodes` until their mean degree reaches
/// `mean_degree`, rejecting pairs that would exceed a node's cap.
fn sprinkle<R: Rng + ?Sized>(g: &mut VisibilityGraph, nodes: &[AgentId], cap: &[usize], mean_degree: f64, rng: &mut R) {
    let m = nodes.len();
    if m < 2 {
        return;
    }
    let target = libm::round(mean_degree * m as f64 / 2.0) as usize;
    let mut added = 0;
    let mut attempts = 0usize;
    let max_attempts = 50 * target + 1000;
    while added < target && attempts < max_attempts {
        attempts += 1;
        let i = nodes[rng.gen_range(0..m)];
        let j = nodes[rng.gen_range(0..m)];
        if i == j || g.degree(i) >= cap[i] || g.degree(j) >= cap[j] {
            continue;
        }
        if g.add_edge(i, j).unwrap_or(false) {
            added += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn empty_graph_has_no_neighbors() {
        let g = VisibilityGraph::empty(10);
        assert!(g.neighbors(3).unwrap().is_empty());
        assert_eq!(g.neighbors(10), Err(Error::UnknownAgent { agent: 10, n: 10 }));
        let c = g.classify(0.4);
        assert_eq!(c.s_count(), 0);
        assert_eq!(c.t_set().len(), 10);
    }

    #[test]
    fn star_and_complete_neighborhoods() {
        let mut rng = seed::rng(0);
        let star = generate(&GraphSpec::Star { n: 100, center: 0 }, &mut rng).unwrap();
        assert_eq!(star.neighbors(0).unwrap().len(), 99);
        let c = star.classify(0.4);
        assert_eq!(c.threshold, 6);
        assert_eq!(c.s_set(), alloc::vec![0]);
        assert_eq!(c.t_set().len(), 99);

        let k = generate(&GraphSpec::Complete { n: 100 }, &mut rng).unwrap();
        assert!((0..100).all(|i| k.neighbors(i).unwrap().len() == 99));
        assert_eq!(k.classify(0.4).s_count(), 100);
    }

    #[test]
    fn self_loops_rejected_and_edges_symmetric() {
        let mut g = VisibilityGraph::empty(3);
        assert_eq!(g.add_edge(1, 1), Err(Error::SelfLoop(1)));
        assert!(g.add_edge(0, 2).unwrap());
        assert!(!g.add_edge(2, 0).unwrap());
        assert!(g.has_edge(2, 0) && g.has_edge(0, 2));
        assert!(g.is_well_formed());
    }

    #[test]
    fn second_neighborhood_cases() {
        let path = VisibilityGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(path.second_neighborhood(&[], None).is_empty());
        let got: Vec<_> = path.second_neighborhood(&[0], None).into_iter().collect();
        // {b, c} plus a itself, reached back through b
        assert_eq!(got, alloc::vec![0, 1, 2]);

        let star = VisibilityGraph::from_edges(5, (1..5).map(|i| (0, i))).unwrap();
        let t = star.classify(0.4).t_mask();
        assert!(star.second_neighborhood(&[1], Some(&t)).is_empty());
    }

    #[test]
    fn regime_checks() {
        let e = VisibilityGraph::empty(100);
        assert!(e.check_regime(RegimeSpec { alpha: 0.4, beta: 0.0 }).feasible);
        let k = generate(&GraphSpec::Complete { n: 50 }, &mut seed::rng(1)).unwrap();
        assert!(!k.check_regime(RegimeSpec { alpha: 0.0, beta: 1.0 }).feasible);
        let star = VisibilityGraph::from_edges(100, (1..100).map(|i| (0, i))).unwrap();
        let r = star.check_regime(RegimeSpec { alpha: 0.4, beta: 0.1 });
        assert!(r.feasible);
        assert_eq!((r.s_count, r.s_limit), (1, 1));
    }

    #[test]
    fn generators_respect_caps() {
        let mut rng = seed::rng(9);
        let g = generate(&GraphSpec::BoundedDegree { n: 200, cap: 8, mean_degree: 4.0 }, &mut rng).unwrap();
        assert!(g.max_degree() <= 8);
        assert!(g.is_well_formed());

        let spec = GraphSpec::TwoTier { n: 200, alpha: 0.3, beta: 0.2, mean_degree: 2.0, hub_degree: None };
        let g = generate(&spec, &mut rng).unwrap();
        let c = g.classify(0.3);
        assert_eq!(c.s_count(), power_floor(200, 0.2));
        assert_eq!(c.s_count(), 2);
        assert!(g.is_well_formed());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GraphSpec::BoundedDegree { n: 300, cap: 5, mean_degree: 3.0 };
        let a = generate(&spec, &mut seed::rng(5)).unwrap();
        let b = generate(&spec, &mut seed::rng(5)).unwrap();
        assert_eq!(a, b);
    }
}
