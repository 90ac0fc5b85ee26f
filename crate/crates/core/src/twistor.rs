//! A six-dimensional chart on the twistor space of a base chart.
//!
//! Chart coordinates are `(x₁..x₄, u, v)`: the base coordinates and a
//! stereographic coordinate on the fibre sphere `{Σ y_j s_j : |y| = 1}`, where
//! `(s_1, s_2, s_3)` comes from the Gram–Schmidt frame of the base chart. The
//! metric `h_t` and the structures `J_1`, `J_2` are assembled from the
//! horizontal/vertical splitting and carried as jets, so that every connection
//! and curvature on the twistor space can be differentiated exactly.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frames::{self, Bivector, FrameCurvature, Mat4, SigmaPoint, Vec4};
use crate::jet::{Jet, Scalar};
use crate::linalg::{self, Matrix};
use crate::riemann::{self, ChartMetric, CurvaturePackage, JetMatrix, LeviCivita};

/// Default jet order of the chart seeds. The metric `h_t` and `J_n` come out
/// one order lower.
pub const TWISTOR_ORDER: usize = 3;

/// Pole excluded by the stereographic fibre coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pole {
    /// Projection from `y = (0,0,1)`; the patch origin is `y = (0,0,-1)`.
    North,
    /// Projection from `y = (0,0,-1)`; the patch origin is `y = (0,0,1)`.
    South,
}

impl Pole {
    /// The patch in which `y` lies farther from the excluded pole.
    pub fn for_fibre_point(y: &[f64; 3]) -> Pole {
        if y[2] <= 0.0 {
            Pole::North
        } else {
            Pole::South
        }
    }
}

/// Fibre point of the stereographic coordinate `(u, v)`.
pub fn stereo<S: Scalar>(u: &S, v: &S, pole: Pole) -> [S; 3] {
    let r2 = u.clone() * u.clone() + v.clone() * v.clone();
    let inv = (r2.clone() + 1.0).recip();
    let third = match pole {
        Pole::North => r2 - 1.0,
        Pole::South => -r2 + 1.0,
    };
    [u.clone() * 2.0 * inv.clone(), v.clone() * 2.0 * inv.clone(), third * inv]
}

/// Stereographic coordinate of a unit `y`.
pub fn stereo_inverse(y: &[f64; 3], pole: Pole) -> Result<(f64, f64)> {
    let d = match pole {
        Pole::North => 1.0 - y[2],
        Pole::South => 1.0 + y[2],
    };
    if d < 1e-6 {
        return Err(Error::InvalidArgument(format!("fibre point {y:?} is at the excluded pole")));
    }
    Ok((y[0] / d, y[1] / d))
}

/// A tangent vector of the twistor space split as `X + A`: `x` holds the
/// coordinate components of `X = π_*E` and `a` the `(s_1,s_2,s_3)`
/// components of the vertical part `A = 𝓥E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tangent {
    pub x: [f64; 4],
    pub a: [f64; 3],
}

impl Tangent {
    pub fn horizontal(x: [f64; 4]) -> Self {
        Self { x, a: [0.0; 3] }
    }
    pub fn vertical(a: [f64; 3]) -> Self {
        Self { x: [0.0; 4], a }
    }
    pub fn add(&self, o: &Tangent) -> Tangent {
        let mut r = *self;
        for i in 0..4 {
            r.x[i] += o.x[i];
        }
        for k in 0..3 {
            r.a[k] += o.a[k];
        }
        r
    }
    pub fn scale(&self, c: f64) -> Tangent {
        let mut r = *self;
        r.x.iter_mut().for_each(|v| *v *= c);
        r.a.iter_mut().for_each(|v| *v *= c);
        r
    }
}

/// Builder of twistor charts over a base metric.
#[derive(Clone, Copy)]
pub struct TwistorChart<'a> {
    pub base: &'a dyn ChartMetric,
    pub t: f64,
    pub order: usize,
}

impl<'a> TwistorChart<'a> {
    pub fn new(base: &'a dyn ChartMetric, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("metric parameter t = {t} must be positive")));
        }
        if base.dim() != 4 {
            return Err(Error::InvalidArgument("twistor spaces need a 4-dimensional base".into()));
        }
        Ok(Self {
            base,
            t,
            order: TWISTOR_ORDER,
        })
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    /// Chart point over the base point `x` at fibre point `y`, in the patch
    /// that keeps `y` away from the excluded pole.
    pub fn at(&self, x: &[f64], y: [f64; 3]) -> Result<TwistorPoint> {
        let sigma = SigmaPoint::new(x.to_vec(), y)?;
        self.at_with_pole(x, sigma.y, Pole::for_fibre_point(&sigma.y))
    }

    pub fn at_with_pole(&self, x: &[f64], y: [f64; 3], pole: Pole) -> Result<TwistorPoint> {
        let sigma = SigmaPoint::new(x.to_vec(), y)?;
        let (u, v) = stereo_inverse(&sigma.y, pole)?;
        let z = [x[0], x[1], x[2], x[3], u, v];
        self.evaluate(&z, pole)
    }

    /// Twistor data at chart coordinates `z = (x, u, v)`.
    pub fn evaluate(&self, z: &[f64; 6], pole: Pole) -> Result<TwistorPoint> {
        let x = &z[..4];
        if !self.base.contains(x) {
            return Err(Error::OutsideDomain {
                manifold: self.base.name().to_string(),
                point: x.to_vec(),
            });
        }
        if self.order < 2 {
            return Err(Error::JetOrder("twistor charts need seed order >= 2".into()));
        }
        let base = riemann::curvature(self.base, x)?;
        let seeds = Jet::seed_all(z, self.order)?;
        let g = self.base.metric_jet(&seeds[..4]);
        let lc = LeviCivita::new(g.clone()).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::NotPositiveDefinite { point: x.to_vec() },
            other => other,
        })?;
        let frame = riemann::orthonormal_frame(&g)?;
        let y_jet = stereo(&seeds[4], &seeds[5], pole);
        let yu: [Jet; 3] = std::array::from_fn(|k| y_jet[k].derivative_unchecked(4));
        let yv: [Jet; 3] = std::array::from_fn(|k| y_jet[k].derivative_unchecked(5));
        let mut lambda2 = yu[0].zero_like();
        for k in 0..3 {
            lambda2.add_mul(&yu[k], &yu[k]);
        }
        let w = vertical_parts(&lc, &g, &frame, &y_jet);
        let k = k_sigma_coords(&frame, &g, &y_jet);

        let y_val = [y_jet[0].value(), y_jet[1].value(), y_jet[2].value()];
        let mut p = TwistorPoint {
            z: *z,
            t: self.t,
            pole,
            y: y_val,
            base,
            seeds,
            y_jet,
            yu,
            yv,
            lambda2,
            g,
            frame,
            w,
            k,
            h: Vec::new(),
            frame_v: [[0.0; 4]; 4],
            g_v: Vec::new(),
            w_v: [[0.0; 3]; 4],
            yu_v: [0.0; 3],
            yv_v: [0.0; 3],
            lambda2_v: 0.0,
        };
        p.h = p.metric_jet();
        for c in 0..4 {
            for a in 0..4 {
                p.frame_v[c][a] = p.frame[c][a].value();
            }
            for kk in 0..3 {
                p.w_v[c][kk] = p.w[c][kk].value();
            }
        }
        p.g_v = linalg::values(&p.g);
        p.yu_v = std::array::from_fn(|k| p.yu[k].value());
        p.yv_v = std::array::from_fn(|k| p.yv[k].value());
        p.lambda2_v = p.lambda2.value();
        Ok(p)
    }
}

/// `w_i = 𝓥(∂/∂x̃_i)`: the vertical part of the coordinate field, with
/// `w_{i,k} = Σ_j y_j g(∇_{∂_i} s_j, s_k)`.
fn vertical_parts(lc: &LeviCivita, g: &JetMatrix, f: &JetMatrix, y: &[Jet; 3]) -> [[Jet; 3]; 4] {
    let order = lc.gamma[0].order();
    let zero = g[0][0].truncate(order).zero_like();
    // F^T g, shared by all θ evaluations
    let mut ftg = vec![vec![zero.clone(); 4]; 4];
    for b in 0..4 {
        for c in 0..4 {
            let mut acc = zero.clone();
            for e in 0..4 {
                acc.add_mul(&f[e][b], &g[e][c]);
            }
            ftg[b][c] = acc;
        }
    }
    std::array::from_fn(|i| {
        // coordinate components of ∇_{∂_i} E_a
        let mut nab = vec![vec![zero.clone(); 4]; 4];
        for a in 0..4 {
            for c in 0..4 {
                let mut acc = f[c][a].derivative_unchecked(i);
                for d in 0..4 {
                    acc.add_mul(lc.gamma(c, i, d), &f[d][a]);
                }
                nab[a][c] = acc;
            }
        }
        // θ_ab = g(∇_i E_a, E_b)
        let mut theta = vec![vec![zero.clone(); 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = zero.clone();
                for c in 0..4 {
                    acc.add_mul(&nab[a][c], &ftg[b][c]);
                }
                theta[a][b] = acc;
            }
        }
        // ω_jk = g(∇_i s_j, s_k) with ∇ s_j = θᵀ S_j + S_j θ in matrix form
        let mut omega = vec![vec![zero.clone(); 3]; 3];
        for (j, sj) in frames::S_MINUS.iter().enumerate() {
            let mut m = vec![vec![zero.clone(); 4]; 4];
            for a in 0..4 {
                for b in 0..4 {
                    let mut acc = zero.clone();
                    for c in 0..4 {
                        if sj[c][b] != 0.0 {
                            acc += &theta[c][a].scale(sj[c][b]);
                        }
                        if sj[a][c] != 0.0 {
                            acc += &theta[c][b].scale(sj[a][c]);
                        }
                    }
                    m[a][b] = acc;
                }
            }
            for (k, sk) in frames::S_MINUS.iter().enumerate() {
                let mut acc = zero.clone();
                for a in 0..4 {
                    for b in 0..4 {
                        if sk[a][b] != 0.0 {
                            acc += &m[a][b].scale(0.25 * sk[a][b]);
                        }
                    }
                }
                omega[j][k] = acc;
            }
        }
        std::array::from_fn(|k| {
            let mut acc = zero.clone();
            for j in 0..3 {
                acc.add_mul(&y[j], &omega[j][k]);
            }
            acc
        })
    })
}

/// Coordinate matrix of `K_σ` (`out^c = K[c][d] X^d`).
fn k_sigma_coords(f: &JetMatrix, g: &JetMatrix, y: &[Jet; 3]) -> JetMatrix {
    let kf = frames::k_sigma_matrix(y);
    let fk = linalg::matmul(f, &kf);
    let ftg = linalg::matmul(&linalg::transpose(f), g);
    linalg::matmul(&fk, &ftg)
}

fn cross_s<S: Scalar>(a: &[S; 3], b: &[S; 3]) -> [S; 3] {
    [
        a[1].clone() * b[2].clone() - a[2].clone() * b[1].clone(),
        a[2].clone() * b[0].clone() - a[0].clone() * b[2].clone(),
        a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone(),
    ]
}

fn dot3<S: Scalar>(a: &[S; 3], b: &[S; 3]) -> S {
    a[0].clone() * b[0].clone() + a[1].clone() * b[1].clone() + a[2].clone() * b[2].clone()
}

/// Chart components of the tangent vector with base part `x` (coordinates)
/// and vertical part `a`.
fn parts_to_chart<S: Scalar>(w: &[[S; 3]; 4], yu: &[S; 3], yv: &[S; 3], lambda2: &S, x: &[S], a: &[S; 3]) -> [S; 6] {
    let mut res = a.clone();
    for i in 0..4 {
        for k in 0..3 {
            res[k] = res[k].clone() - x[i].clone() * w[i][k].clone();
        }
    }
    let inv = lambda2.recip();
    [
        x[0].clone(),
        x[1].clone(),
        x[2].clone(),
        x[3].clone(),
        dot3(&res, yu) * inv.clone(),
        dot3(&res, yv) * inv,
    ]
}

/// The twistor chart data at one point.
#[derive(Debug, Clone)]
pub struct TwistorPoint {
    pub z: [f64; 6],
    pub t: f64,
    pub pole: Pole,
    /// Fibre point `σ = Σ y_j s_j`.
    pub y: [f64; 3],
    /// Curvature of the base at `π(σ)`.
    pub base: CurvaturePackage,
    /// Coordinate jets of the chart.
    pub seeds: Vec<Jet>,
    pub y_jet: [Jet; 3],
    pub yu: [Jet; 3],
    pub yv: [Jet; 3],
    /// `|∂_u y|² = |∂_v y|²`.
    pub lambda2: Jet,
    /// Base metric pulled back to the chart.
    pub g: JetMatrix,
    /// Base frame, `frame[c][a]` = component `c` of `E_a`.
    pub frame: JetMatrix,
    /// Vertical parts of the coordinate fields `∂/∂x̃_i`.
    pub w: [[Jet; 3]; 4],
    /// Coordinate matrix of `K_σ`.
    pub k: JetMatrix,
    /// Chart components of `h_t`.
    pub h: JetMatrix,
    frame_v: Mat4,
    g_v: Matrix<f64>,
    w_v: [[f64; 3]; 4],
    yu_v: [f64; 3],
    yv_v: [f64; 3],
    lambda2_v: f64,
}

impl TwistorPoint {
    pub fn sigma(&self) -> SigmaPoint {
        SigmaPoint {
            base: self.z[..4].to_vec(),
            y: self.y,
        }
    }

    pub fn curvature(&self) -> &FrameCurvature {
        self.base.frame_curvature.as_ref().expect("4-dimensional base")
    }

    /// Chart vectors `(X_a, A_a)` of the coordinate basis.
    fn basis_parts(&self) -> Vec<([Jet; 4], [Jet; 3])> {
        let zero = self.w[0][0].zero_like();
        let one = zero.constant_like(1.0);
        (0..6)
            .map(|a| {
                if a < 4 {
                    let x = std::array::from_fn(|i| if i == a { one.clone() } else { zero.clone() });
                    (x, self.w[a].clone())
                } else {
                    let x = std::array::from_fn(|_| zero.clone());
                    (x, if a == 4 { self.yu.clone() } else { self.yv.clone() })
                }
            })
            .collect()
    }

    fn metric_jet(&self) -> JetMatrix {
        let parts = self.basis_parts();
        let zero = self.w[0][0].zero_like();
        let mut h = vec![vec![zero.clone(); 6]; 6];
        for a in 0..6 {
            for b in a..6 {
                let mut acc = dot3(&parts[a].1, &parts[b].1) * self.t;
                if a < 4 && b < 4 {
                    acc += &self.g[a][b];
                }
                h[a][b] = acc.clone();
                h[b][a] = acc;
            }
        }
        h
    }

    /// Chart components of `J_n` (`(J e_a)^c = J[c][a]`).
    pub fn j(&self, n: u8) -> JetMatrix {
        let sign = if n == 1 { -1.0 } else { 1.0 };
        let parts = self.basis_parts();
        let zero = self.w[0][0].zero_like();
        let mut jm = vec![vec![zero.clone(); 6]; 6];
        for (a, (x, av)) in parts.iter().enumerate() {
            let kx: Vec<Jet> = (0..4)
                .map(|c| {
                    let mut acc = zero.clone();
                    for d in 0..4 {
                        acc.add_mul(&self.k[c][d], &x[d]);
                    }
                    acc
                })
                .collect();
            let cr = cross_s(&self.y_jet, av);
            let ap: [Jet; 3] = std::array::from_fn(|k| cr[k].scale(sign));
            let col = parts_to_chart(&self.w, &self.yu, &self.yv, &self.lambda2, &kx, &ap);
            for (c, v) in col.into_iter().enumerate() {
                jm[c][a] = v;
            }
        }
        jm
    }

    pub fn h_values(&self) -> Matrix<f64> {
        linalg::values(&self.h)
    }

    pub fn h_inner(&self, a: &[f64; 6], b: &[f64; 6]) -> f64 {
        let mut acc = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                acc += a[i] * self.h[i][j].value() * b[j];
            }
        }
        acc
    }

    /// Chart components of a split tangent vector.
    pub fn to_chart(&self, e: &Tangent) -> [f64; 6] {
        parts_to_chart(&self.w_v, &self.yu_v, &self.yv_v, &self.lambda2_v, &e.x, &e.a)
    }

    /// Split a chart vector into base and vertical parts.
    pub fn decompose(&self, c: &[f64; 6]) -> Tangent {
        let mut a = [0.0; 3];
        for k in 0..3 {
            a[k] = c[4] * self.yu_v[k] + c[5] * self.yv_v[k];
            for i in 0..4 {
                a[k] += c[i] * self.w_v[i][k];
            }
        }
        Tangent {
            x: [c[0], c[1], c[2], c[3]],
            a,
        }
    }

    /// Horizontal lift `X^h_σ` of a base vector given in coordinates.
    pub fn lift(&self, x: &[f64; 4]) -> [f64; 6] {
        self.to_chart(&Tangent::horizontal(*x))
    }

    pub fn vertical(&self, a: &[f64; 3]) -> [f64; 6] {
        self.to_chart(&Tangent::vertical(*a))
    }

    /// Horizontal lift of a vector field on the base, as chart jets.
    pub fn lift_field(&self, x: &[Jet]) -> [Jet; 6] {
        let zero = self.w[0][0].zero_like();
        let a = [zero.clone(), zero.clone(), zero];
        parts_to_chart(&self.w, &self.yu, &self.yv, &self.lambda2, x, &a)
    }

    /// Chart field of a vertical vector field given by its `y`-space
    /// components.
    pub fn vertical_field(&self, a: &[Jet; 3]) -> [Jet; 6] {
        let zero = self.w[0][0].zero_like();
        let x = [zero.clone(), zero.clone(), zero.clone(), zero];
        parts_to_chart(&self.w, &self.yu, &self.yv, &self.lambda2, &x, a)
    }

    /// Frame components of a base vector given in coordinates.
    pub fn to_frame(&self, x: &[f64; 4]) -> Vec4 {
        let mut out = [0.0; 4];
        for a in 0..4 {
            for c in 0..4 {
                for e in 0..4 {
                    out[a] += self.frame_v[c][a] * self.g_v[c][e] * x[e];
                }
            }
        }
        out
    }

    pub fn from_frame(&self, xi: &Vec4) -> [f64; 4] {
        let mut out = [0.0; 4];
        for c in 0..4 {
            for a in 0..4 {
                out[c] += self.frame_v[c][a] * xi[a];
            }
        }
        out
    }

    pub fn frame_matrix(&self) -> &Mat4 {
        &self.frame_v
    }

    pub fn base_metric(&self) -> &Matrix<f64> {
        &self.g_v
    }

    pub fn g_base(&self, x: &[f64; 4], y: &[f64; 4]) -> f64 {
        linalg::bilinear(&self.g_v, x, y)
    }

    /// `K_σ X` for `X` in coordinates.
    pub fn k_sigma(&self, x: &[f64; 4]) -> [f64; 4] {
        let xi = self.to_frame(x);
        self.from_frame(&frames::k_sigma(&self.y, &xi))
    }

    /// `K_τ X` for an arbitrary `τ ∈ Λ²₋` given by components.
    pub fn k_tau(&self, tau: &[f64; 3], x: &[f64; 4]) -> [f64; 4] {
        let xi = self.to_frame(x);
        self.from_frame(&frames::k_sigma(tau, &xi))
    }

    /// Frame bivector `X∧Y` for coordinate vectors.
    pub fn wedge(&self, x: &[f64; 4], y: &[f64; 4]) -> Bivector {
        frames::wedge(&self.to_frame(x), &self.to_frame(y))
    }

    pub fn sigma_bivector(&self) -> Bivector {
        frames::from_minus(&self.y)
    }

    /// `R(w)σ` as `Λ²₋` components.
    pub fn r_on_sigma(&self, w: &Bivector) -> [f64; 3] {
        frames::minus_components(&self.curvature().apply(w, &self.sigma_bivector()))
    }

    /// `R(w) X` for a coordinate vector, in coordinates.
    pub fn r_on_vector(&self, w: &Bivector, x: &[f64; 4]) -> [f64; 4] {
        self.from_frame(&self.curvature().apply_vec(w, &self.to_frame(x)))
    }

    /// `σ × a`.
    pub fn sigma_cross(&self, a: &[f64; 3]) -> [f64; 3] {
        frames::cross(&self.y, a)
    }

    /// `J_n` applied to a split tangent vector, evaluated by the defining rules.
    pub fn j_closed(&self, n: u8, e: &Tangent) -> Tangent {
        let sign = if n == 1 { -1.0 } else { 1.0 };
        let c = self.sigma_cross(&e.a);
        Tangent {
            x: self.k_sigma(&e.x),
            a: [sign * c[0], sign * c[1], sign * c[2]],
        }
    }

    /// `‖X‖² + t‖A‖²`.
    pub fn norm2(&self, e: &Tangent) -> f64 {
        self.g_base(&e.x, &e.x) + self.t * linalg::dot(&e.a, &e.a)
    }

    /// Random unit `σ`.
    pub fn random_unit_y(rng: &mut impl Rng) -> [f64; 3] {
        loop {
            let y: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let n = linalg::norm(&y);
            if n > 0.1 && n < 1.0 {
                return [y[0] / n, y[1] / n, y[2] / n];
            }
        }
    }

    /// Random vertical vector at `σ` (orthogonal to `y`).
    pub fn random_vertical(&self, rng: &mut impl Rng) -> [f64; 3] {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let d = linalg::dot(&v, &self.y);
        [v[0] - d * self.y[0], v[1] - d * self.y[1], v[2] - d * self.y[2]]
    }

    pub fn random_base_vector(&self, rng: &mut impl Rng) -> [f64; 4] {
        std::array::from_fn(|_| rng.gen_range(-1.0..1.0))
    }

    /// Random tangent vector with `h_t`-norm one.
    pub fn random_unit(&self, rng: &mut impl Rng) -> Tangent {
        let e = Tangent {
            x: self.random_base_vector(rng),
            a: self.random_vertical(rng),
        };
        e.scale(1.0 / self.norm2(&e).sqrt())
    }

    pub fn random_tangent(&self, rng: &mut impl Rng) -> Tangent {
        Tangent {
            x: self.random_base_vector(rng),
            a: self.random_vertical(rng),
        }
    }
}
