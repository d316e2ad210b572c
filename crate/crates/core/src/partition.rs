//! Exploration partitions.
//!
//! `D_0 = [L, mu_b)` is the region where `V_a` is worse than the prior mean
//! of `b`. Cells `D_1, D_2, ...` tile `[mu_b, R]` from left to right so that
//! each union `D_0 u D_k` has conditional mean exactly `mu_b`: an agent told
//! "play b" on that event is indifferent. The last cell only satisfies
//! `E[V_a | D_0 u D_K] <= mu_b`.
//!
//! The replicated variant splits `D_0` into equal-mass, equal-mean replicas
//! and builds one set of cells shared by all of them.

use alloc::vec::Vec;

use crate::distribution::PiecewiseDistribution;
use crate::interval::IntervalSet;
use crate::roots::Bisection;
use crate::{Error, Result};

/// Cell tiling of `[mu_b, R]` around a fixed anchor event `D_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplorationPartition {
    d0: IntervalSet,
    cells: Vec<IntervalSet>,
    mu_b: f64,
    d0_mass: f64,
    d0_mean: f64,
}

impl ExplorationPartition {
    pub fn d0(&self) -> &IntervalSet {
        &self.d0
    }

    /// `D_1..D_K`; `cells()[k - 1]` is `D_k`.
    pub fn cells(&self) -> &[IntervalSet] {
        &self.cells
    }

    pub fn cell(&self, k: usize) -> &IntervalSet {
        &self.cells[k - 1]
    }

    /// Number of cells `K`.
    pub fn k(&self) -> usize {
        self.cells.len()
    }

    pub fn mu_b(&self) -> f64 {
        self.mu_b
    }

    pub fn d0_mass(&self) -> f64 {
        self.d0_mass
    }

    pub fn d0_mean(&self) -> f64 {
        self.d0_mean
    }

    /// `delta = P(D_0) (mu_b - E[V_a | D_0])`.
    pub fn delta(&self) -> f64 {
        self.d0_mass * (self.mu_b - self.d0_mean)
    }

    /// The event on which the `k`-th test agent is told to play `b`.
    pub fn test_event(&self, k: usize) -> IntervalSet {
        self.d0.union(self.cell(k))
    }

    /// 0 when `va` is in `D_0`, `k` when it is in `D_k`.
    pub fn locate(&self, va: f64) -> Option<usize> {
        if self.d0.contains(va) {
            return Some(0);
        }
        self.cells.iter().position(|c| c.contains(va)).map(|i| i + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplicaMode {
    /// The planner draws a uniform label once per run; replica `j` is
    /// "`V_a` in `D_0` and label = `j`". Exact, but a mixed strategy.
    RandomTag,
    /// Deterministic comb split of `D_0` (see
    /// [`PiecewiseDistribution::quantile_split`]).
    Comb { granularity: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Replicas {
    RandomTag { count: usize },
    Comb(Vec<IntervalSet>),
}

impl Replicas {
    pub fn count(&self) -> usize {
        match self {
            Replicas::RandomTag { count } => *count,
            Replicas::Comb(sets) => sets.len(),
        }
    }
}

/// `D_0` split into replicas `D_0^0..D_0^{m-1}` plus cells `D_1..D_{K'}`
/// that make every `D_0^j u D_i` indifferent.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicatedPartition {
    base: ExplorationPartition,
    replicas: Replicas,
}

impl ReplicatedPartition {
    pub fn d0(&self) -> &IntervalSet {
        &self.base.d0
    }

    pub fn replicas(&self) -> &Replicas {
        &self.replicas
    }

    pub fn replica_count(&self) -> usize {
        self.replicas.count()
    }

    pub fn cells(&self) -> &[IntervalSet] {
        &self.base.cells
    }

    pub fn cell(&self, k: usize) -> &IntervalSet {
        self.base.cell(k)
    }

    /// Number of cells `K'`.
    pub fn k_prime(&self) -> usize {
        self.base.k()
    }

    pub fn mu_b(&self) -> f64 {
        self.base.mu_b
    }

    /// Is `va` in replica `j`, given the run's random label `tag`?
    pub fn in_replica(&self, j: usize, va: f64, tag: usize) -> bool {
        match &self.replicas {
            Replicas::RandomTag { .. } => tag == j && self.base.d0.contains(va),
            Replicas::Comb(sets) => sets.get(j).is_some_and(|s| s.contains(va)),
        }
    }

    /// Which replica holds `va` (if it is in `D_0`).
    pub fn replica_of(&self, va: f64, tag: usize) -> Option<usize> {
        (0..self.replica_count()).find(|&j| self.in_replica(j, va, tag))
    }

    /// (mass, conditional mean) of replica `j`.
    pub fn replica_stats(&self, va: &PiecewiseDistribution, j: usize) -> Result<(f64, f64)> {
        match &self.replicas {
            Replicas::RandomTag { count } => Ok((self.base.d0_mass / *count as f64, self.base.d0_mean)),
            Replicas::Comb(sets) => {
                let s = sets.get(j).ok_or(Error::ZeroMassEvent)?;
                Ok((va.prob(s), va.cond_expect(s)?))
            }
        }
    }

    /// The partition seen through a single replica, with `D_0` replaced by
    /// its (mass, mean) statistics.
    pub fn as_exploration(&self) -> &ExplorationPartition {
        &self.base
    }
}

fn check_premises(va: &PiecewiseDistribution, mu_b: f64, tol: f64) -> Result<(IntervalSet, f64, f64)> {
    let d0 = IntervalSet::half_open(va.support_lo(), mu_b);
    let (mass, first) = va.partial_moments(&d0);
    if mass <= 0.0 {
        return Err(Error::NoExplorationNeeded);
    }
    let mean_a = va.mean();
    if mean_a < mu_b - tol {
        return Err(Error::PriorOrderViolation { mean_a, mu_b });
    }
    Ok((d0, mass, first / mass))
}

/// Greedy left-to-right cell construction around an anchor with the given
/// mass and mean.
fn build_cells(
    va: &PiecewiseDistribution,
    anchor_mass: f64,
    anchor_mean: f64,
    mu_b: f64,
    tol: f64,
) -> Result<Vec<IntervalSet>> {
    let r = va.support_hi();
    let delta = anchor_mass * (mu_b - anchor_mean);
    // interior cells carry mass >= delta / (R - mu_b)
    let max_cells = (libm::ceil((r - mu_b) / delta) as usize).saturating_add(16);
    let solver = Bisection { x_tol: 1e-10, f_tol: (tol * 0.1).max(1e-13), max_iter: 400 };
    let anchor_first = anchor_mass * anchor_mean;
    let joined_mean = |seg: &IntervalSet| {
        let (m, f) = va.partial_moments(seg);
        (anchor_first + f) / (anchor_mass + m)
    };

    let mut cells = Vec::new();
    let mut x = mu_b;
    loop {
        if cells.len() >= max_cells {
            return Err(Error::NonTermination(cells.len()));
        }
        let tail = IntervalSet::closed(x, r);
        if tail.is_empty() || joined_mean(&tail) <= mu_b + tol {
            if !tail.is_empty() {
                cells.push(tail);
            }
            return Ok(cells);
        }
        let width = solver.solve(|w| joined_mean(&IntervalSet::half_open(x, x + w)) - mu_b, 0.0, r - x)?;
        let next = x + width;
        if next >= r {
            cells.push(tail);
            return Ok(cells);
        }
        cells.push(IntervalSet::half_open(x, next));
        x = next;
    }
}

/// Builds `D_0 = [L, mu_b)` and cells `D_1..D_K`.
///
/// Each interior cell solves `E[V_a | D_0 u [x, x + w)] = mu_b` for `w` by
/// bisection (the left side is increasing in `w`). When the whole remaining
/// tail already has `E[V_a | D_0 u [x, R]] <= mu_b + tol`, the tail becomes
/// the last cell. With `mean(V_a) = mu_b` this happens immediately and
/// `K = 1`.
pub fn build_partition(va: &PiecewiseDistribution, mu_b: f64, tol: f64) -> Result<ExplorationPartition> {
    let (d0, d0_mass, d0_mean) = check_premises(va, mu_b, tol)?;
    let cells = build_cells(va, d0_mass, d0_mean, mu_b, tol)?;
    Ok(ExplorationPartition { d0, cells, mu_b, d0_mass, d0_mean })
}

/// Integer bracket on the number of cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KBounds {
    pub lower: usize,
    pub upper: usize,
    /// `(mu_a - mu_b) / delta + 1`
    pub lower_value: f64,
    /// `(mu_a - mu_b / 2) / delta + 2`
    pub upper_value: f64,
}

impl KBounds {
    pub fn contains(&self, k: usize) -> bool {
        self.lower <= k && k <= self.upper
    }
}

// Guards ceil/floor against last-bit rounding when a bound is an integer.
const BOUND_SLACK: f64 = 1e-9;

/// Valid for rewards in `[0, R]`.
pub fn k_bounds(va: &PiecewiseDistribution, mu_b: f64) -> Result<KBounds> {
    let (_, mass, mean) = check_premises(va, mu_b, 1e-12)?;
    let delta = mass * (mu_b - mean);
    let mu_a = va.mean();
    let lower_value = (mu_a - mu_b) / delta + 1.0;
    let upper_value = (mu_a - 0.5 * mu_b) / delta + 2.0;
    let slack = |v: f64| BOUND_SLACK * v.abs().max(1.0);
    Ok(KBounds {
        lower: libm::ceil(lower_value - slack(lower_value)).max(0.0) as usize,
        upper: libm::floor(upper_value + slack(upper_value)).max(0.0) as usize,
        lower_value,
        upper_value,
    })
}

/// Upper bound on `K'` given the base `K` and `m` replicas:
/// `((mu_a - mu_b/2) / (mu_a - mu_b)) * m * (K - 1) + 2`.
pub fn k_prime_bound(mu_a: f64, mu_b: f64, replica_count: usize, k: usize) -> f64 {
    (mu_a - 0.5 * mu_b) / (mu_a - mu_b) * replica_count as f64 * (k as f64 - 1.0) + 2.0
}

/// Splits `D_0` into `replica_count` replicas and builds the shared cells.
///
/// All replicas have the same mass `P(D_0)/m` and (under `RandomTag`
/// exactly, under `Comb` approximately) the same mean `E[V_a | D_0]`, so
/// one cell sequence built against those statistics serves every replica.
pub fn build_replicated_partition(
    va: &PiecewiseDistribution,
    mu_b: f64,
    replica_count: usize,
    mode: ReplicaMode,
    tol: f64,
) -> Result<ReplicatedPartition> {
    if replica_count == 0 {
        return Err(Error::InvalidScenario("replica_count must be at least 1".into()));
    }
    let (d0, d0_mass, d0_mean) = check_premises(va, mu_b, tol)?;
    let replicas = match mode {
        ReplicaMode::RandomTag => Replicas::RandomTag { count: replica_count },
        ReplicaMode::Comb { granularity } => Replicas::Comb(va.quantile_split(&d0, replica_count, granularity)?),
    };
    let cells = build_cells(va, d0_mass / replica_count as f64, d0_mean, mu_b, tol)?;
    Ok(ReplicatedPartition { base: ExplorationPartition { d0, cells, mu_b, d0_mass, d0_mean }, replicas })
}

/// One re-checked invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.residual <= self.tolerance
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PartitionReport {
    pub checks: Vec<Check>,
}

impl PartitionReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Either partition flavour, for [`verify_partition`].
#[derive(Clone, Copy, Debug)]
pub enum PartitionRef<'a> {
    Plain(&'a ExplorationPartition),
    Replicated(&'a ReplicatedPartition),
}

impl<'a> From<&'a ExplorationPartition> for PartitionRef<'a> {
    fn from(p: &'a ExplorationPartition) -> Self {
        PartitionRef::Plain(p)
    }
}

impl<'a> From<&'a ReplicatedPartition> for PartitionRef<'a> {
    fn from(p: &'a ReplicatedPartition) -> Self {
        PartitionRef::Replicated(p)
    }
}

/// Recomputes every partition invariant from the sets themselves.
///
/// Nothing cached during construction is trusted: `D_0` statistics, cell
/// masses and conditional means all come from `va` directly.
pub fn verify_partition<'a>(
    partition: impl Into<PartitionRef<'a>>,
    va: &PiecewiseDistribution,
    tol: f64,
) -> PartitionReport {
    let partition = partition.into();
    let (d0, cells, mu_b) = match partition {
        PartitionRef::Plain(p) => (&p.d0, &p.cells, p.mu_b),
        PartitionRef::Replicated(p) => (&p.base.d0, &p.base.cells, p.base.mu_b),
    };
    let mut checks = Vec::new();
    let (lo, hi) = (va.support_lo(), va.support_hi());

    let union = cells.iter().fold(d0.clone(), |acc, c| acc.union(c));
    let cover = match union.hull() {
        // an open right end leaves R itself uncovered
        Some(h) if h.is_right_closed() => (h.lo() - lo).abs().max((h.hi() - hi).abs()).max(h.len() - union.length()),
        _ => f64::INFINITY,
    };
    checks.push(Check { name: "coverage", residual: cover, tolerance: tol });

    let total_len: f64 = d0.length() + cells.iter().map(IntervalSet::length).sum::<f64>();
    checks.push(Check { name: "disjoint", residual: (total_len - union.length()).abs(), tolerance: tol });

    let mut order = 0.0_f64;
    let mut left = mu_b;
    for c in cells {
        match c.parts() {
            [p] => {
                order = order.max((p.lo() - left).abs());
                left = p.hi();
            }
            _ => order = f64::INFINITY,
        }
    }
    checks.push(Check { name: "left-to-right", residual: order, tolerance: tol });

    // (mass, mean) of each anchor the cells must balance against
    let anchors: Vec<(f64, f64)> = match partition {
        PartitionRef::Plain(_) => {
            let (m, f) = va.partial_moments(d0);
            alloc::vec![(m, if m > 0.0 { f / m } else { f64::NAN })]
        }
        PartitionRef::Replicated(p) => {
            (0..p.replica_count()).map(|j| p.replica_stats(va, j).unwrap_or((0.0, f64::NAN))).collect()
        }
    };

    let k = cells.len();
    let mut interior = 0.0_f64;
    let mut last = 0.0_f64;
    for &(am, amean) in &anchors {
        for (i, c) in cells.iter().enumerate() {
            let (m, f) = va.partial_moments(c);
            let joined = (am * amean + f) / (am + m);
            if i + 1 < k {
                interior = interior.max((joined - mu_b).abs());
            } else {
                last = last.max(joined - mu_b);
            }
        }
    }
    if interior.is_nan() {
        interior = f64::INFINITY;
    }
    checks.push(Check { name: "indifference", residual: interior, tolerance: tol });
    checks.push(Check {
        name: "last-cell",
        residual: if last.is_nan() { f64::INFINITY } else { last.max(0.0) },
        tolerance: tol,
    });

    // interior cells: P(D_k)(E[V_a|D_k] - mu_b) = delta and E[V_a|D_k] <= R
    let (am, amean) = anchors[0];
    let delta = am * (mu_b - amean);
    let floor = delta / (hi - mu_b);
    let shortfall = cells.iter().take(k.saturating_sub(1)).map(|c| floor - va.prob(c)).fold(0.0_f64, f64::max);
    checks.push(Check { name: "mass-floor", residual: shortfall, tolerance: tol });

    match partition {
        // the bracket is derived for rewards in [0, R]
        PartitionRef::Plain(_) if lo < 0.0 => {}
        PartitionRef::Plain(_) => {
            let outside = match k_bounds(va, mu_b) {
                Ok(b) if b.contains(k) => 0.0,
                Ok(b) => (b.lower as f64 - k as f64).max(k as f64 - b.upper as f64),
                Err(_) => f64::INFINITY,
            };
            checks.push(Check { name: "k-bracket", residual: outside, tolerance: 0.0 });
        }
        PartitionRef::Replicated(p) => {
            let m = p.replica_count();
            let target = p.base.d0_mass / m as f64;
            let d0_mean = va.cond_expect(d0).unwrap_or(f64::NAN);
            let mass_err = anchors.iter().map(|a| (a.0 - target).abs()).fold(0.0, f64::max);
            let mean_err = anchors.iter().map(|a| (a.1 - d0_mean).abs()).fold(0.0, f64::max);
            let total: f64 = anchors.iter().map(|a| a.0).sum();
            checks.push(Check { name: "replica-mass", residual: mass_err, tolerance: tol });
            checks.push(Check {
                name: "replica-mean",
                residual: if mean_err.is_nan() { f64::INFINITY } else { mean_err },
                tolerance: tol,
            });
            checks.push(Check { name: "replica-cover", residual: (total - va.prob(d0)).abs(), tolerance: tol });
            let excess = match build_partition(va, mu_b, tol) {
                Ok(base) => {
                    let bound = k_prime_bound(va.mean(), mu_b, m, base.k());
                    (k as f64 - bound).max(0.0)
                }
                Err(_) => f64::INFINITY,
            };
            checks.push(Check { name: "k-prime-bound", residual: excess, tolerance: 0.0 });
        }
    }
    PartitionReport { checks }
}

/// One row of the printable cell table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellRow {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
    pub cond_mean: f64,
    /// `E[V_a | D_0 u D_k] - mu_b`; zero for `D_0` itself.
    pub residual: f64,
}

pub fn cell_table(p: &ExplorationPartition, va: &PiecewiseDistribution) -> Vec<CellRow> {
    let row = |index: usize, set: &IntervalSet, residual: f64| {
        let h = set.hull();
        CellRow {
            index,
            lo: h.map_or(f64::NAN, |h| h.lo()),
            hi: h.map_or(f64::NAN, |h| h.hi()),
            mass: va.prob(set),
            cond_mean: va.cond_expect(set).unwrap_or(f64::NAN),
            residual,
        }
    };
    let mut rows = alloc::vec![row(0, &p.d0, 0.0)];
    for k in 1..=p.k() {
        let joined = va.cond_expect(&p.test_event(k)).unwrap_or(f64::NAN);
        rows.push(row(k, p.cell(k), joined - p.mu_b));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::Piece;

    fn unit() -> PiecewiseDistribution {
        PiecewiseDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn first_two_cells_of_unit_scenario() {
        let p = build_partition(&unit(), 0.25, 1e-9).unwrap();
        assert_eq!(p.d0(), &IntervalSet::half_open(0.0, 0.25));
        let d1 = p.cell(1).hull().unwrap();
        assert!((d1.lo() - 0.25).abs() < 1e-12 && (d1.hi() - 0.5).abs() < 1e-9);
        // x_2 - x_1 = (sqrt(0.5) - 0.5) / 2
        let d2 = p.cell(2).hull().unwrap();
        assert!((d2.hi() - d2.lo() - (libm::sqrt(0.5) - 0.5) / 2.0).abs() < 1e-9);
        assert!((unit().cond_expect(p.cell(2)).unwrap() - 0.551_776_695).abs() < 1e-8);
    }

    #[test]
    fn degenerate_single_cell() {
        let p = build_partition(&unit(), 0.5, 1e-9).unwrap();
        assert_eq!(p.k(), 1);
        assert_eq!(p.cell(1), &IntervalSet::closed(0.5, 1.0));
        assert!((unit().cond_expect(&p.test_event(1)).unwrap() - 0.5).abs() < 1e-15);
        assert!(verify_partition(&p, &unit(), 1e-9).pass());
    }

    #[test]
    fn no_exploration_needed_when_d0_is_null() {
        let va = PiecewiseDistribution::uniform(-3.0, -1.0).unwrap();
        assert_eq!(build_partition(&va, -3.0, 1e-9), Err(Error::NoExplorationNeeded));
        assert_eq!(k_bounds(&va, -3.0), Err(Error::NoExplorationNeeded));
    }

    #[test]
    fn prior_order_violation() {
        let r = build_partition(&unit(), 0.7, 1e-9);
        assert!(matches!(r, Err(Error::PriorOrderViolation { .. })));
    }

    #[test]
    fn bounds_by_substitution() {
        let b = k_bounds(&unit(), 0.25).unwrap();
        assert_eq!((b.lower, b.upper), (9, 14));
        let b = k_bounds(&unit(), 0.5).unwrap();
        assert_eq!(b.lower, 1);
        assert!(b.lower <= b.upper);
    }

    #[test]
    fn corrupted_partition_fails_indifference() {
        let mut p = build_partition(&unit(), 0.25, 1e-9).unwrap();
        let d1 = p.cells[0].hull().unwrap();
        let d2 = p.cells[1].hull().unwrap();
        p.cells[0] = IntervalSet::half_open(d1.lo(), d1.hi() + 0.01);
        p.cells[1] = IntervalSet::half_open(d2.lo() + 0.01, d2.hi());
        let report = verify_partition(&p, &unit(), 1e-9);
        let check = report.get("indifference").unwrap();
        assert!(!check.pass());
        // widening D_1 = [0.25, 0.5) by 0.01 moves E[V_a | D_0 u D_1] to 0.255
        let d1_shift = unit().cond_expect(&p.test_event(1)).unwrap() - 0.25;
        assert!((d1_shift - 0.005).abs() < 1e-9, "{d1_shift}");
        assert!(check.residual >= d1_shift);
        assert!(report.get("coverage").unwrap().pass());
    }

    #[test]
    fn replicated_with_one_replica_is_the_base_partition() {
        let base = build_partition(&unit(), 0.25, 1e-9).unwrap();
        let rep = build_replicated_partition(&unit(), 0.25, 1, ReplicaMode::RandomTag, 1e-9).unwrap();
        assert_eq!(rep.as_exploration(), &base);
    }

    #[test]
    fn replicated_four_ways() {
        let va = unit();
        let rep = build_replicated_partition(&va, 0.25, 4, ReplicaMode::RandomTag, 1e-9).unwrap();
        for j in 0..4 {
            let (m, e) = rep.replica_stats(&va, j).unwrap();
            assert!((m - 0.0625).abs() < 1e-15 && (e - 0.125).abs() < 1e-15);
        }
        let report = verify_partition(&rep, &va, 1e-9);
        assert!(report.pass(), "{report:?}");
        assert!((rep.k_prime() as f64) <= k_prime_bound(0.5, 0.25, 4, 9));
    }

    #[test]
    fn comb_replicas_match_within_tolerance() {
        let va = PiecewiseDistribution::new(alloc::vec![Piece::new(0.0, 0.4, 0.3), Piece::new(0.4, 2.0, 0.7)]).unwrap();
        let rep = build_replicated_partition(&va, 0.6, 3, ReplicaMode::Comb { granularity: 512 }, 1e-9).unwrap();
        let report = verify_partition(&rep, &va, 1e-3);
        assert!(report.pass(), "{report:?}");
        let total: f64 = (0..3).map(|j| rep.replica_stats(&va, j).unwrap().0).sum();
        assert!((total - va.prob(rep.d0())).abs() < 1e-12);
    }

    #[test]
    fn locate_cells() {
        let p = build_partition(&unit(), 0.25, 1e-9).unwrap();
        assert_eq!(p.locate(0.1), Some(0));
        assert_eq!(p.locate(0.3), Some(1));
        assert_eq!(p.locate(0.55), Some(2));
        assert_eq!(p.locate(1.0), Some(p.k()));
    }
}
