//! Clamped B-spline basis on the integer grid `1..=T`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplineSpec {
    pub degree: usize,
    /// Number of basis functions.
    pub d: usize,
}

impl Default for SplineSpec {
    fn default() -> Self {
        Self { degree: 3, d: 4 }
    }
}

impl SplineSpec {
    pub fn with_d(d: usize) -> Self {
        Self { d, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < self.degree + 1 {
            return Err(Error::Config(format!("spline d = {} below degree + 1 = {}", self.d, self.degree + 1)));
        }
        Ok(())
    }

    /// Knot vector on `[lo, hi]`: `degree + 1` copies of each end and
    /// `d - degree - 1` equally spaced interior knots.
    pub fn knots(&self, lo: f64, hi: f64) -> Vec<f64> {
        let p = self.degree;
        let n_interior = self.d - p - 1;
        let mut u = vec![lo; p + 1];
        for j in 1..=n_interior {
            u.push(lo + (hi - lo) * j as f64 / (n_interior + 1) as f64);
        }
        u.extend(std::iter::repeat_n(hi, p + 1));
        u
    }
}

/// All `d` basis values at `x` by the Cox-de Boor triangle. The right end
/// point belongs to the last non-empty span, so the basis sums to one on
/// the closed interval.
pub fn basis_at(knots: &[f64], degree: usize, x: f64) -> Vec<f64> {
    let n_basis = knots.len() - degree - 1;
    let hi = knots[n_basis];
    let span = if x >= hi {
        (degree..n_basis).rev().find(|&j| knots[j] < knots[j + 1]).unwrap_or(degree)
    } else {
        (degree..n_basis).find(|&j| knots[j] <= x && x < knots[j + 1]).unwrap_or(degree)
    };
    let mut n = vec![0.0; degree + 1];
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    n[0] = 1.0;
    for j in 1..=degree {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    let mut out = vec![0.0; n_basis];
    out[span - degree..=span].copy_from_slice(&n);
    out
}

/// `T × d` basis matrix evaluated at `t = 1, …, T`.
pub fn gen_spline_basis(horizon: usize, spec: &SplineSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if horizon < spec.d {
        return Err(Error::Config(format!("horizon {horizon} shorter than spline dimension {}", spec.d)));
    }
    let knots = spec.knots(1.0, horizon as f64);
    Ok((1..=horizon).map(|t| basis_at(&knots, spec.degree, t as f64)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
    }

    #[test]
    fn no_interior_knots_gives_bernstein() {
        let horizon = 50;
        let m = gen_spline_basis(horizon, &SplineSpec::default()).unwrap();
        for (row, t) in m.iter().zip(1..) {
            let u = (t as f64 - 1.0) / (horizon as f64 - 1.0);
            for (j, &v) in row.iter().enumerate() {
                let b = binom(3, j) * u.powi(j as i32) * (1.0 - u).powi(3 - j as i32);
                assert!((v - b).abs() < 1e-14, "t={t} j={j}");
            }
        }
        // Fixture: first basis function at t = 1.
        assert!((m[0][0] - 1.0).abs() < 1e-15);
        assert!((m[horizon - 1][3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_and_positivity() {
        for &(horizon, d) in &[(30, 4), (30, 6), (50, 8), (7, 7)] {
            let m = gen_spline_basis(horizon, &SplineSpec::with_d(d)).unwrap();
            assert_eq!(m.len(), horizon);
            for row in &m {
                assert_eq!(row.len(), d);
                assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    // Direct recursive definition, independent of the triangular scheme.
    fn cox_de_boor(knots: &[f64], i: usize, p: usize, x: f64) -> f64 {
        if p == 0 {
            let last = knots.len() - 1;
            let at_end = x == knots[last] && knots[i + 1] == knots[last] && knots[i] < knots[i + 1];
            return if (knots[i] <= x && x < knots[i + 1]) || at_end { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let den1 = knots[i + p] - knots[i];
        if den1 > 0.0 {
            v += (x - knots[i]) / den1 * cox_de_boor(knots, i, p - 1, x);
        }
        let den2 = knots[i + p + 1] - knots[i + 1];
        if den2 > 0.0 {
            v += (knots[i + p + 1] - x) / den2 * cox_de_boor(knots, i + 1, p - 1, x);
        }
        v
    }

    #[test]
    fn matches_recursive_definition_with_interior_knots() {
        let spec = SplineSpec::with_d(7);
        let horizon = 40;
        let knots = spec.knots(1.0, horizon as f64);
        let m = gen_spline_basis(horizon, &spec).unwrap();
        for (t, row) in (1..=horizon).zip(&m) {
            for (j, &v) in row.iter().enumerate() {
                assert!((v - cox_de_boor(&knots, j, 3, t as f64)).abs() < 1e-13, "t={t} j={j}");
            }
        }
    }

    #[test]
    fn rejects_short_horizon() {
        assert!(gen_spline_basis(3, &SplineSpec::default()).is_err());
        assert!(SplineSpec { degree: 3, d: 3 }.validate().is_err());
    }
}
