//! Finite-difference recomputation of curvature, used to cross-check the jet
//! pipeline on base and twistor charts.

use rayon::prelude::*;
use serde::Serialize;

use crate::catalogue::ManifoldSpec;
use crate::error::Result;
use crate::linalg::{self, Matrix};
use crate::riemann::{self, idx3, idx4, LeviCivita};
use crate::theorems::{self, Verdict};
use crate::twistor::{TwistorChart, TWISTOR_ORDER};

pub const STEP: f64 = 1e-4;
pub const TOLERANCE: f64 = 1e-4;

/// `Γ^k_ij` at `[k][i][j]` from central differences of the metric.
pub fn fd_christoffel(metric: &dyn Fn(&[f64]) -> Result<Matrix<f64>>, p: &[f64], step: f64) -> Result<Vec<f64>> {
    let n = p.len();
    let g = metric(p)?;
    let ginv = linalg::inverse(&g)?;
    let mut dg = vec![0.0; n * n * n];
    for m in 0..n {
        let mut q = p.to_vec();
        q[m] = p[m] + step;
        let gp = metric(&q)?;
        q[m] = p[m] - step;
        let gm = metric(&q)?;
        for i in 0..n {
            for j in 0..n {
                dg[idx3(n, m, i, j)] = (gp[i][j] - gm[i][j]) / (2.0 * step);
            }
        }
    }
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ginv[k][l] * (dg[idx3(n, i, j, l)] + dg[idx3(n, j, i, l)] - dg[idx3(n, l, i, j)]);
                }
                gamma[idx3(n, k, i, j)] = 0.5 * acc;
            }
        }
    }
    Ok(gamma)
}

/// Lowered curvature `R(∂_i,∂_j,∂_k,∂_l)` at `[i][j][k][l]`, with
/// `R(X,Y) = ∇_[X,Y] - [∇_X,∇_Y]`, by nested central differences.
pub fn fd_riemann(metric: &dyn Fn(&[f64]) -> Result<Matrix<f64>>, p: &[f64], step: f64) -> Result<Vec<f64>> {
    let n = p.len();
    let g = metric(p)?;
    let gamma = fd_christoffel(metric, p, step)?;
    let mut dgamma = vec![0.0; n * n * n * n];
    for m in 0..n {
        let mut q = p.to_vec();
        q[m] = p[m] + step;
        let gp = fd_christoffel(metric, &q, step)?;
        q[m] = p[m] - step;
        let gm = fd_christoffel(metric, &q, step)?;
        for (k, (a, b)) in gp.iter().zip(&gm).enumerate() {
            dgamma[m * n * n * n + k] = (a - b) / (2.0 * step);
        }
    }
    let gam = |a: usize, b: usize, c: usize| gamma[idx3(n, a, b, c)];
    let dgam = |m: usize, a: usize, b: usize, c: usize| dgamma[m * n * n * n + idx3(n, a, b, c)];
    let mut out = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                // (∇_i∇_j - ∇_j∇_i) ∂_k = r[a] ∂_a
                let r: Vec<f64> = (0..n)
                    .map(|a| {
                        let mut v = dgam(i, a, j, k) - dgam(j, a, i, k);
                        for b in 0..n {
                            v += gam(a, i, b) * gam(b, j, k) - gam(a, j, b) * gam(b, i, k);
                        }
                        v
                    })
                    .collect();
                for l in 0..n {
                    out[idx4(n, i, j, k, l)] = -(0..n).map(|a| g[l][a] * r[a]).sum::<f64>();
                }
            }
        }
    }
    Ok(out)
}

/// Largest component-wise residual between two tensors.
pub fn discrepancy(a: &[f64], b: &[f64]) -> f64 {
    theorems::rel_vec(a, b)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub manifold: String,
    pub t: f64,
    pub samples: usize,
    pub checked: usize,
    pub seed: u64,
    pub step: f64,
    pub base_discrepancy: f64,
    pub twistor_discrepancy: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Indices of the 10% subsample (at least one) of `count` samples.
pub fn subsample(count: usize) -> Vec<usize> {
    let k = count.div_ceil(10).max(1);
    (0..k).map(|i| i * count / k).collect()
}

/// Compare jet and finite-difference curvature of the base and of the
/// twistor chart at a subsample of the points a theorem run with the same
/// `samples` and `seed` would visit.
pub fn compare(spec: &ManifoldSpec, t: f64, samples: usize, seed: u64, tolerance: f64) -> Result<OracleReport> {
    let all = theorems::samples(spec, samples, seed)?;
    let picked = subsample(samples);
    let chart = TwistorChart::new(spec.metric.as_ref(), t)?;
    let values = chart.with_order(2);
    let base_metric = |x: &[f64]| -> Result<Matrix<f64>> { Ok(spec.metric.metric_at(x)) };
    let per = picked
        .par_iter()
        .map(|&i| {
            let s = &all[i];
            let cp = riemann::curvature(spec.metric.as_ref(), &s.point)?;
            let fd = fd_riemann(&base_metric, &s.point, STEP)?;
            let base = discrepancy(&cp.riemann, &fd);

            let tp = chart.with_order(TWISTOR_ORDER).at(&s.point, s.y)?;
            let jet: Vec<f64> = LeviCivita::new(tp.h.clone())?.curvature()?.iter().map(|j| j.value()).collect();
            let pole = tp.pole;
            let twistor_metric = |z: &[f64]| -> Result<Matrix<f64>> {
                let z6: [f64; 6] = std::array::from_fn(|i| z[i]);
                Ok(values.evaluate(&z6, pole)?.h_values())
            };
            let fd = fd_riemann(&twistor_metric, &tp.z, STEP)?;
            Ok((base, discrepancy(&jet, &fd)))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let base_discrepancy = per.iter().map(|p| p.0).fold(0.0, f64::max);
    let twistor_discrepancy = per.iter().map(|p| p.1).fold(0.0, f64::max);
    let worst = base_discrepancy.max(twistor_discrepancy);
    Ok(OracleReport {
        manifold: spec.name().to_string(),
        t,
        samples,
        checked: picked.len(),
        seed,
        step: STEP,
        base_discrepancy,
        twistor_discrepancy,
        tolerance,
        verdict: theorems::verdict(theorems::Expect::Vanish, worst, tolerance, tolerance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue;

    #[test]
    fn subsample_is_ten_percent() {
        assert_eq!(subsample(1), vec![0]);
        assert_eq!(subsample(10), vec![0]);
        assert_eq!(subsample(50).len(), 5);
        assert_eq!(subsample(11), vec![0, 5]);
    }

    #[test]
    fn flat_has_no_curvature() {
        let flat = catalogue::by_name("flat").unwrap();
        let metric = |x: &[f64]| -> Result<Matrix<f64>> { Ok(flat.metric.metric_at(x)) };
        let r = fd_riemann(&metric, &[0.1, 0.2, 0.3, 0.1], STEP).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn sphere_sectional_curvature() {
        // R(X,Y,X,Y) = κ(|X|²|Y|² - g(X,Y)²) with the sign convention above
        let s4 = catalogue::by_name("s4k2").unwrap();
        let p = [0.2, -0.1, 0.05, 0.3];
        let metric = |x: &[f64]| -> Result<Matrix<f64>> { Ok(s4.metric.metric_at(x)) };
        let r = fd_riemann(&metric, &p, STEP).unwrap();
        let g = s4.metric.metric_at(&p);
        let sec = r[idx4(4, 0, 1, 0, 1)] / (g[0][0] * g[1][1] - g[0][1] * g[0][1]);
        assert!((sec - 2.0).abs() < 1e-6, "{sec}");
    }

    #[test]
    fn jets_and_differences_agree() {
        for name in ["s4", "cp2", "perturbed"] {
            let spec = catalogue::by_name(name).unwrap();
            let rep = compare(&spec, 0.7, 10, 3, TOLERANCE).unwrap();
            assert!(rep.passed(), "{rep:?}");
        }
    }
}
