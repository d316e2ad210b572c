//! Non-atomic reward laws as finite mixtures of uniform pieces.
//!
//! Every event the mechanisms condition on is an [`IntervalSet`], so
//! probabilities and conditional means are exact sums over piece/part
//! overlaps: no quadrature anywhere.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::interval::{Interval, IntervalSet};
use crate::{Action, Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A uniform component on `[lo, hi]` carrying probability `weight`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
}

impl Piece {
    pub fn new(lo: f64, hi: f64, weight: f64) -> Self {
        Piece { lo, hi, weight }
    }

    fn density(&self) -> f64 {
        self.weight / (self.hi - self.lo)
    }

    /// (mass, first moment) of this piece restricted to `[a, b]`.
    fn moments_on(&self, a: f64, b: f64) -> (f64, f64) {
        let lo = self.lo.max(a);
        let hi = self.hi.min(b);
        if lo >= hi {
            return (0.0, 0.0);
        }
        let dens = self.density();
        (dens * (hi - lo), dens * (hi * hi - lo * lo) * 0.5)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseDistribution {
    pieces: Vec<Piece>,
    cumulative: Vec<f64>,
    support_lo: f64,
    support_hi: f64,
}

impl PiecewiseDistribution {
    /// Builds a mixture; weights must be positive and sum to one within 1e-12.
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidDistribution("no pieces".into()));
        }
        for p in &pieces {
            if !(p.lo.is_finite() && p.hi.is_finite() && p.weight.is_finite()) {
                return Err(Error::InvalidDistribution(format!("non-finite piece {p:?}")));
            }
            if p.lo >= p.hi {
                return Err(Error::InvalidDistribution(format!("piece [{}, {}] must have lo < hi", p.lo, p.hi)));
            }
            if p.weight <= 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "piece [{}, {}] has non-positive weight {}",
                    p.lo, p.hi, p.weight
                )));
            }
        }
        let total: f64 = pieces.iter().map(|p| p.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, expected 1")));
        }
        let mut acc = 0.0;
        let cumulative = pieces
            .iter()
            .map(|p| {
                acc += p.weight;
                acc
            })
            .collect();
        let support_lo = pieces.iter().map(|p| p.lo).fold(f64::INFINITY, f64::min);
        let support_hi = pieces.iter().map(|p| p.hi).fold(f64::NEG_INFINITY, f64::max);
        Ok(PiecewiseDistribution { pieces, cumulative, support_lo, support_hi })
    }

    /// Like [`new`](Self::new) but rescales positive weights to sum to one.
    pub fn normalized(mut pieces: Vec<Piece>) -> Result<Self> {
        let total: f64 = pieces.iter().map(|p| p.weight).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution("total weight must be positive".into()));
        }
        for p in &mut pieces {
            p.weight /= total;
        }
        let last = pieces.len() - 1;
        let head: f64 = pieces[..last].iter().map(|p| p.weight).sum();
        pieces[last].weight = 1.0 - head;
        Self::new(pieces)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(alloc::vec![Piece::new(lo, hi, 1.0)])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// `L`, the left end of the support.
    pub fn support_lo(&self) -> f64 {
        self.support_lo
    }

    /// `R`, the right end of the support.
    pub fn support_hi(&self) -> f64 {
        self.support_hi
    }

    /// `[L, R]` as a single closed interval.
    pub fn support(&self) -> Interval {
        Interval::closed(self.support_lo, self.support_hi).expect("pieces have lo < hi")
    }

    pub fn mean(&self) -> f64 {
        self.pieces.iter().map(|p| p.weight * (p.lo + p.hi) * 0.5).sum()
    }

    /// (mass, first moment) of the law restricted to `s`.
    pub fn partial_moments(&self, s: &IntervalSet) -> (f64, f64) {
        let mut mass = 0.0;
        let mut first = 0.0;
        for part in s.parts() {
            for piece in &self.pieces {
                let (m, f) = piece.moments_on(part.lo(), part.hi());
                mass += m;
                first += f;
            }
        }
        (mass, first)
    }

    pub fn prob(&self, s: &IntervalSet) -> f64 {
        self.partial_moments(s).0.clamp(0.0, 1.0)
    }

    /// `E[V | V in s]`.
    pub fn cond_expect(&self, s: &IntervalSet) -> Result<f64> {
        let (mass, first) = self.partial_moments(s);
        if mass <= 0.0 {
            return Err(Error::ZeroMassEvent);
        }
        Ok(first / mass)
    }

    /// `P(V < x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.pieces.iter().map(|p| p.moments_on(p.lo, x).0).sum::<f64>().clamp(0.0, 1.0)
    }

    /// `E[V; V < x]`, the first moment below `x`.
    fn moment_below(&self, x: f64) -> f64 {
        self.pieces.iter().map(|p| p.moments_on(p.lo, x).1).sum()
    }

    /// Essential supremum `inf { y : P(V < y) = 1 }`.
    pub fn ess_sup(&self) -> f64 {
        self.support_hi
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.pieces.len() - 1);
        let p = &self.pieces[idx];
        let v: f64 = rng.gen();
        p.lo + v * (p.hi - p.lo)
    }

    /// The law of `V` conditioned on `V in s`, again piecewise uniform.
    pub fn restrict(&self, s: &IntervalSet) -> Result<Self> {
        let total = self.prob(s);
        if total <= 0.0 {
            return Err(Error::ZeroMassEvent);
        }
        let pieces: Vec<Piece> = self
            .density_segments(s)
            .into_iter()
            .filter(|seg| seg.density > 0.0)
            .map(|seg| Piece::new(seg.lo, seg.hi, seg.density * (seg.hi - seg.lo)))
            .collect();
        Self::normalized(pieces)
    }

    /// Maximal sub-intervals of `s` on which the density is constant.
    fn density_segments(&self, s: &IntervalSet) -> Vec<Segment> {
        let mut cuts: Vec<f64> = Vec::new();
        for p in &self.pieces {
            cuts.push(p.lo);
            cuts.push(p.hi);
        }
        for part in s.parts() {
            cuts.push(part.lo());
            cuts.push(part.hi());
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.windows(2)
            .filter_map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                if !s.contains(mid) {
                    return None;
                }
                let density = self.pieces.iter().filter(|p| p.lo <= mid && mid < p.hi).map(Piece::density).sum();
                Some(Segment { lo: w[0], hi: w[1], density })
            })
            .collect()
    }

    /// Splits `s` into `m` sub-events of equal mass whose conditional means
    /// all approach `E[V | V in s]`.
    ///
    /// `s` is cut into `m * granularity` consecutive micro-cells of equal
    /// mass and micro-cell `i` goes to output `i mod m`, like the teeth of a
    /// comb.
    pub fn quantile_split(&self, s: &IntervalSet, m: usize, granularity: usize) -> Result<Vec<IntervalSet>> {
        let total = self.prob(s);
        if total <= 0.0 {
            return Err(Error::ZeroMassEvent);
        }
        if m == 0 || granularity == 0 {
            return Err(Error::InvalidDistribution("quantile_split needs m, granularity >= 1".into()));
        }
        if m == 1 {
            return Ok(alloc::vec![s.clone()]);
        }
        let hull = s.hull().ok_or(Error::ZeroMassEvent)?;
        let segments = self.density_segments(s);
        let cells = m * granularity;
        let step = total / cells as f64;

        let mut cuts = Vec::with_capacity(cells + 1);
        cuts.push(hull.lo());
        let mut seg_idx = 0;
        let mut mass_before = 0.0;
        for i in 1..cells {
            let target = step * i as f64;
            while seg_idx < segments.len() {
                let seg = &segments[seg_idx];
                let seg_mass = seg.density * (seg.hi - seg.lo);
                if seg.density > 0.0 && mass_before + seg_mass >= target {
                    break;
                }
                mass_before += seg_mass;
                seg_idx += 1;
            }
            let cut = match segments.get(seg_idx) {
                Some(seg) => (seg.lo + (target - mass_before) / seg.density).min(seg.hi),
                None => hull.hi(),
            };
            cuts.push(cut);
        }

        let mut outputs: Vec<Vec<Interval>> = (0..m).map(|_| Vec::new()).collect();
        for i in 0..cells {
            let cell = if i + 1 == cells {
                let piece = if hull.is_right_closed() {
                    Interval::closed(cuts[i], hull.hi())
                } else {
                    Interval::half_open(cuts[i], hull.hi())
                };
                IntervalSet::from_intervals(piece)
            } else {
                IntervalSet::half_open(cuts[i], cuts[i + 1])
            };
            outputs[i % m].extend(cell.intersect(s).parts().iter().copied());
        }
        Ok(outputs.into_iter().map(IntervalSet::from_intervals).collect())
    }
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    lo: f64,
    hi: f64,
    density: f64,
}

/// Joint moments of two independent laws split on which one is larger.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderedMoments {
    /// `P(V_a > V_b)`.
    pub prob_a_wins: f64,
    /// `E[V_a; V_a > V_b]`.
    pub va_where_a_wins: f64,
    /// `E[V_b; V_a > V_b]`.
    pub vb_where_a_wins: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

impl OrderedMoments {
    /// `(E[V_a | W], E[V_b | W])` for the event `W` = "`winner` is the argmax".
    pub fn conditional(&self, winner: Action) -> Result<(f64, f64)> {
        let (p, ea, eb) = match winner {
            Action::A => (self.prob_a_wins, self.va_where_a_wins, self.vb_where_a_wins),
            Action::B => {
                (1.0 - self.prob_a_wins, self.mean_a - self.va_where_a_wins, self.mean_b - self.vb_where_a_wins)
            }
        };
        if p <= 0.0 {
            return Err(Error::ZeroMassEvent);
        }
        Ok((ea / p, eb / p))
    }
}

/// Closed-form [`OrderedMoments`] for independent `va`, `vb`.
///
/// On every segment between breakpoints of either law the integrands are
/// polynomials of degree at most two, so Simpson's rule is exact.
pub fn ordered_moments(va: &PiecewiseDistribution, vb: &PiecewiseDistribution) -> OrderedMoments {
    let mut cuts: Vec<f64> = Vec::new();
    for p in va.pieces().iter().chain(vb.pieces()) {
        cuts.push(p.lo);
        cuts.push(p.hi);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut prob = 0.0;
    let mut ea = 0.0;
    let mut eb = 0.0;
    for w in cuts.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let xm = 0.5 * (x0 + x1);
        let dens: f64 = va.pieces().iter().filter(|p| p.lo <= xm && xm < p.hi).map(Piece::density).sum();
        if dens == 0.0 {
            continue;
        }
        let simpson = |g: &dyn Fn(f64) -> f64| (x1 - x0) / 6.0 * (g(x0) + 4.0 * g(xm) + g(x1));
        prob += dens * simpson(&|x| vb.cdf(x));
        ea += dens * simpson(&|x| x * vb.cdf(x));
        eb += dens * simpson(&|x| vb.moment_below(x));
    }
    OrderedMoments {
        prob_a_wins: prob.clamp(0.0, 1.0),
        va_where_a_wins: ea,
        vb_where_a_wins: eb,
        mean_a: va.mean(),
        mean_b: vb.mean(),
    }
}
