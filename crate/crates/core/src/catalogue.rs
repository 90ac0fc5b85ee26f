//! Base 4-manifolds with known curvature, given as single charts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::linalg::Matrix;
use crate::riemann::{ChartMetric, JetMatrix};

/// Ground truth recorded for a catalogue entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truth {
    /// Constant sectional curvature, if any.
    pub kappa: Option<f64>,
    /// Scalar curvature, if constant.
    pub scalar: Option<f64>,
    pub einstein: bool,
    pub selfdual: bool,
    pub antiselfdual: bool,
}

pub struct ManifoldSpec {
    pub metric: Box<dyn ChartMetric>,
    pub truth: Truth,
    pub notes: &'static str,
}

impl std::fmt::Debug for ManifoldSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManifoldSpec")
            .field("name", &self.name())
            .field("truth", &self.truth)
            .finish()
    }
}

impl ManifoldSpec {
    pub fn name(&self) -> &str {
        self.metric.name()
    }

    /// Radius of the ball that sample points are drawn from.
    pub fn sample_radius(&self) -> f64 {
        0.6 * self.metric.domain_radius()
    }
}

/// `g = δ / (1 + κ|x|²/4)²`: the round sphere, flat space or hyperbolic space
/// in stereographic / Poincaré-ball form.
#[derive(Debug, Clone)]
pub struct ConformallyFlat {
    name: &'static str,
    kappa: f64,
}

impl ChartMetric for ConformallyFlat {
    fn name(&self) -> &str {
        self.name
    }
    fn dim(&self) -> usize {
        4
    }
    fn metric_jet(&self, x: &[Jet]) -> JetMatrix {
        conformal(x, self.kappa)
    }
    fn metric_at(&self, x: &[f64]) -> Matrix<f64> {
        conformal(x, self.kappa)
    }
    fn domain_radius(&self) -> f64 {
        if self.kappa == 0.0 {
            1.0
        } else {
            2.0 / self.kappa.abs().sqrt()
        }
    }
}

fn conformal<S: Scalar>(x: &[S], kappa: f64) -> Matrix<S> {
    let zero = x[0].zero_like();
    let mut r2 = zero.clone();
    for xi in &x[..4] {
        r2 = r2 + xi.clone() * xi.clone();
    }
    let f = (r2 * (kappa / 4.0) + 1.0).recip();
    let f2 = f.clone() * f;
    (0..4)
        .map(|i| (0..4).map(|j| if i == j { f2.clone() } else { zero.clone() }).collect())
        .collect()
}

/// Fubini–Study metric of CP² in one affine chart, written in real
/// coordinates `z₁ = x₁ + i x₂`, `z₂ = x₃ + i x₄`.
#[derive(Debug, Clone)]
pub struct FubiniStudy;

impl ChartMetric for FubiniStudy {
    fn name(&self) -> &str {
        "cp2"
    }
    fn dim(&self) -> usize {
        4
    }
    fn metric_jet(&self, x: &[Jet]) -> JetMatrix {
        fubini_study(x)
    }
    fn metric_at(&self, x: &[f64]) -> Matrix<f64> {
        fubini_study(x)
    }
    fn domain_radius(&self) -> f64 {
        2.0
    }
}

fn fubini_study<S: Scalar>(x: &[S]) -> Matrix<S> {
    let mut r2 = x[0].zero_like();
    for xi in &x[..4] {
        r2 = r2 + xi.clone() * xi.clone();
    }
    // q = i·x in real coordinates
    let q = [-x[1].clone(), x[0].clone(), -x[3].clone(), x[2].clone()];
    let w = r2.clone() + 1.0;
    let inv = w.clone().recip();
    let inv2 = inv.clone() * inv;
    (0..4)
        .map(|a| {
            (0..4)
                .map(|b| {
                    let mut v = -(x[a].clone() * x[b].clone()) - q[a].clone() * q[b].clone();
                    if a == b {
                        v = v + w.clone();
                    }
                    v * inv2.clone()
                })
                .collect()
        })
        .collect()
}

/// Product of two unit 2-spheres, each in stereographic coordinates.
#[derive(Debug, Clone)]
pub struct SphereProduct;

impl ChartMetric for SphereProduct {
    fn name(&self) -> &str {
        "s2xs2"
    }
    fn dim(&self) -> usize {
        4
    }
    fn metric_jet(&self, x: &[Jet]) -> JetMatrix {
        sphere_product(x)
    }
    fn metric_at(&self, x: &[f64]) -> Matrix<f64> {
        sphere_product(x)
    }
    fn domain_radius(&self) -> f64 {
        2.0
    }
}

fn sphere_product<S: Scalar>(x: &[S]) -> Matrix<S> {
    let zero = x[0].zero_like();
    let factor = |a: &S, b: &S| {
        let d = (a.clone() * a.clone() + b.clone() * b.clone() + 1.0).recip();
        d.clone() * d * 4.0
    };
    let f1 = factor(&x[0], &x[1]);
    let f2 = factor(&x[2], &x[3]);
    (0..4)
        .map(|i| {
            (0..4)
                .map(|j| match (i == j, i < 2) {
                    (true, true) => f1.clone(),
                    (true, false) => f2.clone(),
                    _ => zero.clone(),
                })
                .collect()
        })
        .collect()
}

/// `g = δ + ε (1 - |x|²)⁴ (1 + x₂)² e₁e₁ᵀ` on the unit ball.
#[derive(Debug, Clone)]
pub struct PerturbedFlat {
    pub epsilon: f64,
}

impl ChartMetric for PerturbedFlat {
    fn name(&self) -> &str {
        "perturbed"
    }
    fn dim(&self) -> usize {
        4
    }
    fn metric_jet(&self, x: &[Jet]) -> JetMatrix {
        perturbed(x, self.epsilon)
    }
    fn metric_at(&self, x: &[f64]) -> Matrix<f64> {
        perturbed(x, self.epsilon)
    }
    fn domain_radius(&self) -> f64 {
        1.0
    }
}

fn perturbed<S: Scalar>(x: &[S], eps: f64) -> Matrix<S> {
    let zero = x[0].zero_like();
    let one = x[0].one_like();
    let mut r2 = zero.clone();
    for xi in &x[..4] {
        r2 = r2 + xi.clone() * xi.clone();
    }
    let bump = if r2.value() < 1.0 {
        let b = one.clone() - r2;
        let b2 = b.clone() * b;
        let tilt = x[1].clone() + 1.0;
        b2.clone() * b2 * tilt.clone() * tilt
    } else {
        zero.clone()
    };
    (0..4)
        .map(|i| {
            (0..4)
                .map(|j| match (i, j) {
                    (0, 0) => bump.clone() * eps + 1.0,
                    _ if i == j => one.clone(),
                    _ => zero.clone(),
                })
                .collect()
        })
        .collect()
}

const NAMES: [&str; 7] = ["flat", "s4", "s4k2", "h4", "cp2", "s2xs2", "perturbed"];

pub fn names() -> &'static [&'static str] {
    &NAMES
}

pub fn entries() -> Vec<ManifoldSpec> {
    NAMES.iter().map(|n| by_name(n).expect("catalogue name")).collect()
}

fn constant(name: &'static str, kappa: f64, notes: &'static str) -> ManifoldSpec {
    ManifoldSpec {
        metric: Box::new(ConformallyFlat { name, kappa }),
        truth: Truth {
            kappa: Some(kappa),
            scalar: Some(12.0 * kappa),
            einstein: true,
            selfdual: true,
            antiselfdual: true,
        },
        notes,
    }
}

pub fn by_name(name: &str) -> Result<ManifoldSpec> {
    Ok(match name {
        "flat" => constant("flat", 0.0, "Euclidean R^4"),
        "s4" => constant("s4", 1.0, "round S^4 of curvature 1, stereographic chart"),
        "s4k2" => constant("s4k2", 2.0, "round S^4 of curvature 2, stereographic chart"),
        "h4" => constant("h4", -1.0, "hyperbolic H^4 of curvature -1, Poincare ball"),
        "cp2" => ManifoldSpec {
            metric: Box::new(FubiniStudy),
            truth: Truth {
                kappa: None,
                scalar: Some(24.0),
                einstein: true,
                selfdual: true,
                antiselfdual: false,
            },
            notes: "Fubini-Study CP^2, affine chart, complex orientation (holomorphic sectional curvature 4)",
        },
        "s2xs2" => ManifoldSpec {
            metric: Box::new(SphereProduct),
            truth: Truth {
                kappa: None,
                scalar: Some(4.0),
                einstein: true,
                selfdual: false,
                antiselfdual: false,
            },
            notes: "product of two unit 2-spheres",
        },
        "perturbed" => ManifoldSpec {
            metric: Box::new(PerturbedFlat { epsilon: 0.1 }),
            truth: Truth {
                kappa: None,
                scalar: None,
                einstein: false,
                selfdual: false,
                antiselfdual: false,
            },
            notes: "flat metric with a polynomial bump in the x1 direction, unit ball",
        },
        other => return Err(Error::UnknownManifold(other.to_string())),
    })
}

/// Uniform points in the ball of radius [`ManifoldSpec::sample_radius`].
pub fn sample_points(spec: &ManifoldSpec, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let radius = spec.sample_radius();
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("{} has an empty domain", spec.name())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| ball_point(&mut rng, spec.metric.dim(), radius)).collect())
}

pub(crate) fn ball_point(rng: &mut impl Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: f64 = p.iter().map(|v| v * v).sum();
        if r2 < 1.0 {
            return p.into_iter().map(|v| v * radius).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for spec in entries() {
            assert_eq!(by_name(spec.name()).unwrap().name(), spec.name());
        }
        assert!(matches!(by_name("torus"), Err(Error::UnknownManifold(_))));
    }

    #[test]
    fn sampling_is_deterministic_and_inside() {
        let flat = by_name("flat").unwrap();
        assert_eq!(sample_points(&flat, 5, 42).unwrap(), sample_points(&flat, 5, 42).unwrap());
        assert_ne!(sample_points(&flat, 5, 1).unwrap(), sample_points(&flat, 5, 2).unwrap());
        let h4 = by_name("h4").unwrap();
        for p in sample_points(&h4, 200, 3).unwrap() {
            assert!(h4.metric.contains(&p));
            let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(r <= 0.9 * h4.metric.domain_radius());
        }
        assert!(sample_points(&h4, 0, 3).is_err());
    }

    #[test]
    fn jet_and_value_metrics_agree() {
        for spec in entries() {
            for p in sample_points(&spec, 4, 11).unwrap() {
                let xs = Jet::seed_all(&p, 2).unwrap();
                let gj = spec.metric.metric_jet(&xs);
                let gv = spec.metric.metric_at(&p);
                for i in 0..4 {
                    for j in 0..4 {
                        assert!((gj[i][j].value() - gv[i][j]).abs() < 1e-15);
                        assert_eq!(gv[i][j], gv[j][i]);
                    }
                }
            }
        }
    }
}
