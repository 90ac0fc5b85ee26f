//! Riemannian geometry of a metric given in a single chart.
//!
//! The curvature convention throughout is `R(X,Y) = ∇_[X,Y] - [∇_X, ∇_Y]`,
//! under which round spheres have `R(X,Y,X,Y) > 0` and the four-tensor is
//! `R(X,Y,Z,W) = g(R(X,Y)Z, W)`.

use crate::error::{Error, Result};
use crate::frames::{FrameCurvature, Mat4};
use crate::jet::{Jet, Scalar};
use crate::linalg::{self, Matrix};

pub type JetMatrix = Matrix<Jet>;

/// A Riemannian metric on an open subset of `R^n`.
pub trait ChartMetric: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    /// Metric components with derivatives attached.
    fn metric_jet(&self, x: &[Jet]) -> JetMatrix;
    /// Metric components at a point.
    fn metric_at(&self, x: &[f64]) -> Matrix<f64>;
    /// Radius of the coordinate ball on which the chart is valid.
    fn domain_radius(&self) -> f64;
    fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().map(|v| v * v).sum::<f64>().sqrt() < self.domain_radius()
    }
}

/// Flat index helper for dense tensors with all dimensions equal to `n`.
#[inline]
pub(crate) fn idx3(n: usize, a: usize, b: usize, c: usize) -> usize {
    (a * n + b) * n + c
}

#[inline]
pub(crate) fn idx4(n: usize, a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * n + b) * n + c) * n + d
}

/// Levi-Civita data of a jet-valued metric.
#[derive(Debug, Clone)]
pub struct LeviCivita {
    pub n: usize,
    pub metric: JetMatrix,
    pub inverse: JetMatrix,
    /// `Γ^k_ij` at `[k][i][j]`, so that `∇_{∂_i} ∂_j = Γ^k_ij ∂_k`.
    pub gamma: Vec<Jet>,
}

impl LeviCivita {
    pub fn new(metric: JetMatrix) -> Result<Self> {
        let n = metric.len();
        if metric[0][0].order() < 1 {
            return Err(Error::JetOrder("metric jets need order >= 1 for Christoffel symbols".into()));
        }
        let values = linalg::values(&metric);
        if !linalg::is_positive_definite(&values) {
            return Err(Error::NotPositiveDefinite { point: vec![] });
        }
        let inverse = linalg::inverse(&metric)?;
        // dg[l][i][j] = ∂_l g_ij
        let mut dg = Vec::with_capacity(n * n * n);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    dg.push(metric[i][j].derivative_unchecked(l));
                }
            }
        }
        let order = dg[0].order();
        let zero = metric[0][0].truncate(order).zero_like();
        // first kind: Γ_{ijl} = 1/2 (∂_i g_jl + ∂_j g_il - ∂_l g_ij)
        let mut first = vec![zero.clone(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let v = &(&dg[idx3(n, i, j, l)] + &dg[idx3(n, j, i, l)]) - &dg[idx3(n, l, i, j)];
                    first[idx3(n, i, j, l)] = v * 0.5;
                }
            }
        }
        let mut gamma = vec![zero; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = first[0].zero_like();
                    for l in 0..n {
                        acc.add_mul(&inverse[k][l], &first[idx3(n, i, j, l)]);
                    }
                    gamma[idx3(n, k, j, i)] = acc.clone();
                    gamma[idx3(n, k, i, j)] = acc;
                }
            }
        }
        Ok(Self {
            n,
            metric,
            inverse,
            gamma,
        })
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[idx3(self.n, k, i, j)]
    }

    /// Lowered curvature `R(∂_i,∂_j,∂_k,∂_l)` at `[i][j][k][l]`.
    pub fn curvature(&self) -> Result<Vec<Jet>> {
        let conn = reorder_connection(self.n, &self.gamma);
        let mixed = connection_curvature_mixed(self.n, &conn)?;
        Ok(lower_curvature(self.n, &self.metric, &mixed))
    }

    /// Residual of `∇g = 0` (largest coefficient at the point).
    pub fn metric_compatibility_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut v = self.metric[a][b].d(c);
                    for k in 0..n {
                        v -= self.gamma(k, c, a).value() * self.metric[k][b].value();
                        v -= self.gamma(k, c, b).value() * self.metric[a][k].value();
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }
}

/// Christoffel symbols `[k][i][j]` reordered into connection coefficients
/// `[a][b][c]` with `∇_{e_b} e_c = C^a_bc e_a` (identical layout, kept as a
/// separate step so general connections share the curvature code).
pub(crate) fn reorder_connection(_n: usize, gamma: &[Jet]) -> Vec<Jet> {
    gamma.to_vec()
}

/// Mixed curvature `(R(e_b,e_c) e_d)^a` at `[a][d][b][c]` for connection
/// coefficients `C^a_bc` (`∇_{e_b} e_c = C^a_bc e_a`), using
/// `R(X,Y) = ∇_[X,Y] - [∇_X, ∇_Y]`.
pub fn connection_curvature_mixed(n: usize, conn: &[Jet]) -> Result<Vec<Jet>> {
    if conn[0].order() < 1 {
        return Err(Error::JetOrder("connection coefficients need order >= 1 for curvature".into()));
    }
    let deriv: Vec<Vec<Jet>> = (0..n)
        .map(|v| conn.iter().map(|c| c.derivative_unchecked(v)).collect())
        .collect();
    let order = deriv[0][0].order();
    let zero = conn[0].truncate(order).zero_like();
    let mut out = vec![zero.clone(); n * n * n * n];
    for a in 0..n {
        for d in 0..n {
            for b in 0..n {
                for c in b + 1..n {
                    // standard: ∂_b C^a_cd - ∂_c C^a_bd + C^a_be C^e_cd - C^a_ce C^e_bd
                    let mut acc = &deriv[b][idx3(n, a, c, d)] - &deriv[c][idx3(n, a, b, d)];
                    for e in 0..n {
                        acc.add_mul(&conn[idx3(n, a, b, e)], &conn[idx3(n, e, c, d)]);
                        let neg = -&conn[idx3(n, a, c, e)];
                        acc.add_mul(&neg, &conn[idx3(n, e, b, d)]);
                    }
                    let paper = -acc;
                    out[idx4(n, a, d, c, b)] = -paper.clone();
                    out[idx4(n, a, d, b, c)] = paper;
                }
            }
        }
    }
    Ok(out)
}

/// `R(e_i,e_j,e_k,e_l) = g(R(e_i,e_j)e_k, e_l)` at `[i][j][k][l]`.
pub fn lower_curvature(n: usize, metric: &JetMatrix, mixed: &[Jet]) -> Vec<Jet> {
    let order = mixed[0].order();
    let zero = mixed[0].truncate(order).zero_like();
    let mut out = vec![zero; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = mixed[0].zero_like();
                    for a in 0..n {
                        acc.add_mul(&metric[l][a], &mixed[idx4(n, a, k, i, j)]);
                    }
                    out[idx4(n, i, j, k, l)] = acc;
                }
            }
        }
    }
    out
}

/// Covariant derivative `(∇_m R)_ijkl` at `[m][i][j][k][l]` from the lowered
/// curvature jets.
pub fn nabla_curvature(lc: &LeviCivita, riem: &[Jet]) -> Result<Vec<f64>> {
    let n = lc.n;
    if riem[0].order() < 1 {
        return Err(Error::JetOrder(
            "covariant derivative of curvature needs metric jets of order >= 3".into(),
        ));
    }
    let r = |i: usize, j: usize, k: usize, l: usize| riem[idx4(n, i, j, k, l)].value();
    let g = |k: usize, i: usize, j: usize| lc.gamma(k, i, j).value();
    let mut out = vec![0.0; n * n * n * n * n];
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut v = riem[idx4(n, i, j, k, l)].d(m);
                        for s in 0..n {
                            v -= g(s, m, i) * r(s, j, k, l)
                                + g(s, m, j) * r(i, s, k, l)
                                + g(s, m, k) * r(i, j, s, l)
                                + g(s, m, l) * r(i, j, k, s);
                        }
                        out[(m * n * n * n * n) + idx4(n, i, j, k, l)] = v;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gram–Schmidt on the coordinate vectors in index order. Columns of the
/// result are the frame vectors in coordinate components (`F[c][a]` is the
/// `c`-th component of `E_a`). The last vector is flipped if the frame is
/// negatively oriented.
pub fn orthonormal_frame<S: Scalar>(g: &[Vec<S>]) -> Result<Matrix<S>> {
    let n = g.len();
    let zero = g[0][0].zero_like();
    let mut cols: Vec<Vec<S>> = Vec::with_capacity(n);
    for a in 0..n {
        let mut v: Vec<S> = (0..n).map(|c| zero.constant_like(if c == a { 1.0 } else { 0.0 })).collect();
        for prev in &cols {
            // <v, prev> with v = ∂_a plus corrections; use g
            let proj = inner_g(g, &v, prev);
            for c in 0..n {
                v[c] = v[c].clone() - proj.clone() * prev[c].clone();
            }
        }
        let nrm2 = inner_g(g, &v, &v);
        if !(nrm2.value() > 1e-24) {
            return Err(Error::DegenerateFrame(format!("coordinate vector {a} in span of previous")));
        }
        let inv = nrm2.sqrt().recip();
        cols.push(v.into_iter().map(|c| c * inv.clone()).collect());
    }
    let mut f: Matrix<S> = (0..n).map(|c| (0..n).map(|a| cols[a][c].clone()).collect()).collect();
    if linalg::determinant(&linalg::values(&f)) < 0.0 {
        for row in f.iter_mut() {
            row[n - 1] = -row[n - 1].clone();
        }
    }
    Ok(f)
}

fn inner_g<S: Scalar>(g: &[Vec<S>], a: &[S], b: &[S]) -> S {
    let n = g.len();
    let mut acc = g[0][0].zero_like();
    for i in 0..n {
        for j in 0..n {
            acc = acc + a[i].clone() * g[i][j].clone() * b[j].clone();
        }
    }
    acc
}

/// Curvature data of a chart metric at one point.
#[derive(Debug, Clone)]
pub struct CurvaturePackage {
    pub point: Vec<f64>,
    pub metric: Matrix<f64>,
    /// `Γ^k_ij` at `[k][i][j]`.
    pub christoffel: Vec<f64>,
    /// Coordinate components `R(∂_i,∂_j,∂_k,∂_l)`.
    pub riemann: Vec<f64>,
    pub scalar: f64,
    /// `(∇_m R)_ijkl` at `[m][i][j][k][l]`.
    pub nabla_riemann: Vec<f64>,
    /// Oriented orthonormal frame, `frame[c][a]` = component `c` of `E_a` (n = 4).
    pub frame: Option<Mat4>,
    /// Curvature in frame components (n = 4).
    pub frame_curvature: Option<FrameCurvature>,
    /// Matrix of `𝓡` in the basis `(s̄_1, s̄_2, s̄_3, s_1, s_2, s_3)` (n = 4).
    pub op_matrix: Option<[[f64; 6]; 6]>,
}

/// Default jet order for base-chart curvature computations.
pub const BASE_ORDER: usize = 4;

pub fn christoffel(m: &dyn ChartMetric, p: &[f64]) -> Result<LeviCivita> {
    check_point(m, p)?;
    let xs = Jet::seed_all(p, BASE_ORDER)?;
    LeviCivita::new(m.metric_jet(&xs)).map_err(|e| locate(e, p))
}

fn locate(e: Error, p: &[f64]) -> Error {
    match e {
        Error::NotPositiveDefinite { .. } => Error::NotPositiveDefinite { point: p.to_vec() },
        other => other,
    }
}

fn check_point(m: &dyn ChartMetric, p: &[f64]) -> Result<()> {
    if !m.contains(p) {
        return Err(Error::OutsideDomain {
            manifold: m.name().to_string(),
            point: p.to_vec(),
        });
    }
    Ok(())
}

pub fn curvature(m: &dyn ChartMetric, p: &[f64]) -> Result<CurvaturePackage> {
    curvature_with_order(m, p, BASE_ORDER)
}

pub fn curvature_with_order(m: &dyn ChartMetric, p: &[f64], order: usize) -> Result<CurvaturePackage> {
    check_point(m, p)?;
    let n = m.dim();
    let xs = Jet::seed_all(p, order)?;
    let lc = LeviCivita::new(m.metric_jet(&xs)).map_err(|e| locate(e, p))?;
    let riem_jets = lc.curvature()?;
    let riemann: Vec<f64> = riem_jets.iter().map(Jet::value).collect();
    let nabla_riemann = if order >= 3 {
        nabla_curvature(&lc, &riem_jets)?
    } else {
        Vec::new()
    };
    let metric = linalg::values(&lc.metric);
    let ginv = linalg::values(&lc.inverse);
    let mut scalar = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    scalar += ginv[i][k] * ginv[j][l] * riemann[idx4(n, i, j, k, l)];
                }
            }
        }
    }
    let christoffel = lc.gamma.iter().map(Jet::value).collect();

    let (frame, frame_curvature, op_matrix) = if n == 4 {
        let f = orthonormal_frame(&metric)?;
        let mut fm = [[0.0; 4]; 4];
        for c in 0..4 {
            for a in 0..4 {
                fm[c][a] = f[c][a];
            }
        }
        let fc = to_frame(&fm, &riemann, &nabla_riemann);
        let op = fc.op_matrix();
        (Some(fm), Some(fc), Some(op))
    } else {
        (None, None, None)
    };

    Ok(CurvaturePackage {
        point: p.to_vec(),
        metric,
        christoffel,
        riemann,
        scalar,
        nabla_riemann,
        frame,
        frame_curvature,
        op_matrix,
    })
}

/// Transform coordinate curvature (and its covariant derivative, if present)
/// into frame components.
pub fn to_frame(f: &Mat4, riemann: &[f64], nabla: &[f64]) -> FrameCurvature {
    let n = 4;
    let mut r = [[[[0.0; 4]; 4]; 4]; 4];
    let contract4 = |src: &[f64], a: usize, b: usize, c: usize, d: usize| {
        let mut acc = 0.0;
        for i in 0..n {
            let fi = f[i][a];
            if fi == 0.0 {
                continue;
            }
            for j in 0..n {
                let fj = fi * f[j][b];
                if fj == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let fk = fj * f[k][c];
                    if fk == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        acc += fk * f[l][d] * src[idx4(n, i, j, k, l)];
                    }
                }
            }
        }
        acc
    };
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    r[a][b][c][d] = contract4(riemann, a, b, c, d);
                }
            }
        }
    }
    let nabla_frame = if nabla.is_empty() {
        None
    } else {
        // first contract the derivative slot
        let mut partial = vec![0.0; 256];
        let mut out = Box::new([[[[[0.0; 4]; 4]; 4]; 4]; 4]);
        for m in 0..4 {
            partial.iter_mut().for_each(|v| *v = 0.0);
            for q in 0..4 {
                let fq = f[q][m];
                if fq == 0.0 {
                    continue;
                }
                for (t, v) in partial.iter_mut().enumerate() {
                    *v += fq * nabla[q * 256 + t];
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        for d in 0..4 {
                            out[m][a][b][c][d] = contract4(&partial, a, b, c, d);
                        }
                    }
                }
            }
        }
        Some(out)
    };
    FrameCurvature { r, nabla: nabla_frame }
}

/// Singer–Thorpe blocks of the curvature operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SingerThorpe {
    pub scalar: f64,
    pub b: [[f64; 3]; 3],
    pub w_plus: [[f64; 3]; 3],
    pub w_minus: [[f64; 3]; 3],
    /// Frobenius norm of the full operator, used to scale predicates.
    pub op_norm: f64,
}

fn frob(m: &[[f64; 3]; 3]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

impl SingerThorpe {
    pub fn from_op(op: &[[f64; 6]; 6]) -> Self {
        let scalar: f64 = (0..6).map(|i| op[i][i]).sum();
        let mut b = [[0.0; 3]; 3];
        let mut w_plus = [[0.0; 3]; 3];
        let mut w_minus = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { scalar / 6.0 } else { 0.0 };
                w_plus[i][j] = op[i][j] - id;
                w_minus[i][j] = op[i + 3][j + 3] - id;
                b[i][j] = op[i][j + 3];
            }
        }
        let op_norm = op.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            scalar,
            b,
            w_plus,
            w_minus,
            op_norm,
        }
    }

    fn small(&self, m: &[[f64; 3]; 3], tol: f64) -> bool {
        frob(m) < tol * (1.0 + self.op_norm)
    }

    pub fn is_einstein(&self, tol: f64) -> bool {
        self.small(&self.b, tol)
    }

    pub fn is_selfdual(&self, tol: f64) -> bool {
        self.small(&self.w_minus, tol)
    }

    pub fn is_antiselfdual(&self, tol: f64) -> bool {
        self.small(&self.w_plus, tol)
    }

    /// Reassemble `(s/6) Id + [[W+, B], [Bᵀ, W-]]`.
    pub fn reassemble(&self) -> [[f64; 6]; 6] {
        let mut m = [[0.0; 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { self.scalar / 6.0 } else { 0.0 };
                m[i][j] = self.w_plus[i][j] + id;
                m[i + 3][j + 3] = self.w_minus[i][j] + id;
                m[i][j + 3] = self.b[i][j];
                m[j + 3][i] = self.b[i][j];
            }
        }
        m
    }

    pub fn b_norm(&self) -> f64 {
        frob(&self.b)
    }
    pub fn w_plus_norm(&self) -> f64 {
        frob(&self.w_plus)
    }
    pub fn w_minus_norm(&self) -> f64 {
        frob(&self.w_minus)
    }
}

pub fn singer_thorpe(cp: &CurvaturePackage) -> Result<SingerThorpe> {
    let op = cp
        .op_matrix
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("Singer–Thorpe decomposition needs dimension 4".into()))?;
    Ok(SingerThorpe::from_op(op))
}

/// Scalar curvature through the Ricci contraction `Ric_jl = g^ik R_ijkl`.
pub fn scalar_from_ricci(cp: &CurvaturePackage) -> f64 {
    let n = cp.metric.len();
    let ginv = linalg::inverse(&cp.metric).expect("metric invertible");
    let mut ric = vec![vec![0.0; n]; n];
    for j in 0..n {
        for l in 0..n {
            for i in 0..n {
                for k in 0..n {
                    ric[j][l] += ginv[i][k] * cp.riemann[idx4(n, i, j, k, l)];
                }
            }
        }
    }
    (0..n).flat_map(|j| (0..n).map(move |l| (j, l))).map(|(j, l)| ginv[j][l] * ric[j][l]).sum()
}

/// Largest violation of the algebraic symmetries and the first Bianchi
/// identity, relative to the largest component.
pub fn symmetry_residual(n: usize, r: &[f64]) -> f64 {
    let scale = 1.0 + r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = r[idx4(n, i, j, k, l)];
                    worst = worst
                        .max((v + r[idx4(n, j, i, k, l)]).abs())
                        .max((v + r[idx4(n, i, j, l, k)]).abs())
                        .max((v - r[idx4(n, k, l, i, j)]).abs())
                        .max((v + r[idx4(n, j, k, i, l)] + r[idx4(n, k, i, j, l)]).abs());
                }
            }
        }
    }
    worst / scale
}

/// Second Bianchi identity residual `∇_m R_ijkl + ∇_i R_jmkl + ∇_j R_mikl`.
pub fn second_bianchi_residual(n: usize, nabla: &[f64]) -> f64 {
    let at = |m: usize, i: usize, j: usize, k: usize, l: usize| nabla[m * n * n * n * n + idx4(n, i, j, k, l)];
    let scale = 1.0 + nabla.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        worst = worst.max((at(m, i, j, k, l) + at(i, j, m, k, l) + at(j, m, i, k, l)).abs());
                    }
                }
            }
        }
    }
    worst / scale
}
