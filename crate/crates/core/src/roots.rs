use crate::{Error, Result};

/// Bisection settings: stop once the bracket is narrower than `x_tol` and
/// the midpoint residual is within `f_tol`, or when the bracket cannot
/// shrink further in floating point.
#[derive(Clone, Copy, Debug)]
pub struct Bisection {
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for Bisection {
    fn default() -> Self {
        Bisection { x_tol: 1e-10, f_tol: 1e-12, max_iter: 200 }
    }
}

impl Bisection {
    /// Root of a nondecreasing `f` with `f(lo) <= 0 <= f(hi)`.
    pub fn solve<F: FnMut(f64) -> f64>(&self, mut f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
        if !(lo <= hi) {
            return Err(Error::Bisection("empty bracket"));
        }
        let f_lo = f(lo);
        let f_hi = f(hi);
        if f_lo > 0.0 || f_hi < 0.0 {
            return Err(Error::Bisection("root is not bracketed"));
        }
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if f_hi == 0.0 {
            return Ok(hi);
        }
        for _ in 0..self.max_iter {
            let mid = lo + 0.5 * (hi - lo);
            if mid <= lo || mid >= hi {
                return Ok(mid);
            }
            let fm = f(mid);
            if hi - lo <= self.x_tol && fm.abs() <= self.f_tol {
                return Ok(mid);
            }
            if fm < 0.0 {
                lo = mid;
            } else if fm > 0.0 {
                hi = mid;
            } else {
                return Ok(mid);
            }
        }
        Err(Error::Bisection("iteration limit reached"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = Bisection::default().solve(|x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((r - libm::sqrt(2.0)).abs() < 1e-10);
    }

    #[test]
    fn rejects_unbracketed() {
        assert!(Bisection::default().solve(|x| x + 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn flat_stretch_is_fine() {
        // nondecreasing with a plateau at zero: any point of the plateau is a root
        let f = |x: f64| {
            if x < 1.0 {
                x - 1.0
            } else if x < 2.0 {
                0.0
            } else {
                x - 2.0
            }
        };
        let r = Bisection::default().solve(f, 0.0, 3.0).unwrap();
        assert!((1.0 - 1e-10..=2.0 + 1e-10).contains(&r));
    }
}
