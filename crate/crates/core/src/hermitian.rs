//! Almost-Hermitian geometry on a chart of even dimension.
//!
//! Given jet-valued components of a metric `h` and an orthogonal almost
//! complex structure `J`, this module builds the Levi-Civita connection,
//! `∇J`, the Gauduchon family of Hermitian connections and their curvature,
//! first Chern forms, the Kähler form and its derivatives, `φ`, `ρ*`, `ψ`,
//! the Nijenhuis tensor and holomorphic sectional curvature.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg::{self, Matrix};
use crate::riemann::{self, idx3, idx4, JetMatrix, LeviCivita};

/// Affine connection given by `∇_{e_b} e_c = C^a_bc e_a`, stored at `[a][b][c]`.
#[derive(Debug, Clone)]
pub struct Connection {
    pub n: usize,
    pub coeffs: Vec<Jet>,
}

/// Curvature of a connection with the convention `R(X,Y) = ∇_[X,Y] - [∇_X,∇_Y]`.
#[derive(Debug, Clone)]
pub struct Curvature {
    pub n: usize,
    /// `(R(e_b,e_c)e_d)^a` at `[a][d][b][c]`.
    pub mixed: Vec<Jet>,
    /// `R(e_i,e_j,e_k,e_l) = h(R(e_i,e_j)e_k, e_l)` at the point.
    pub lowered: Vec<f64>,
}

impl Connection {
    pub fn at(&self, a: usize, b: usize, c: usize) -> &Jet {
        &self.coeffs[idx3(self.n, a, b, c)]
    }

    /// `∇_X Y` at the point for constant-coefficient fields.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for a in 0..n {
            for b in 0..n {
                if x[b] == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out[a] += self.at(a, b, c).value() * x[b] * y[c];
                }
            }
        }
        out
    }

    /// `∇_X Y` at the point for a jet-valued field `Y`.
    pub fn apply_field(&self, x: &[f64], y: &[Jet]) -> Vec<f64> {
        let n = self.n;
        let yv: Vec<f64> = y.iter().map(Jet::value).collect();
        let mut out = self.apply(x, &yv);
        for a in 0..n {
            for b in 0..n {
                out[a] += x[b] * y[a].d(b);
            }
        }
        out
    }

    pub fn curvature(&self, h: &JetMatrix) -> Result<Curvature> {
        let mixed = riemann::connection_curvature_mixed(self.n, &self.coeffs)?;
        let lowered = riemann::lower_curvature(self.n, h, &mixed).iter().map(Jet::value).collect();
        Ok(Curvature {
            n: self.n,
            mixed,
            lowered,
        })
    }

    /// Torsion `T^a_bc = C^a_bc - C^a_cb` at the point.
    pub fn torsion(&self) -> Vec<f64> {
        let n = self.n;
        let mut t = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    t[idx3(n, a, b, c)] = self.at(a, b, c).value() - self.at(a, c, b).value();
                }
            }
        }
        t
    }

    /// Largest component of `∇h`.
    pub fn metric_residual(&self, h: &JetMatrix) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut v = h[a][b].d(c);
                    for e in 0..n {
                        v -= self.at(e, c, a).value() * h[e][b].value() + self.at(e, c, b).value() * h[a][e].value();
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    /// Largest component of `∇J`.
    pub fn j_residual(&self, j: &JetMatrix) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut v = j[a][b].d(c);
                    for e in 0..n {
                        v += self.at(a, c, e).value() * j[e][b].value() - self.at(e, c, b).value() * j[a][e].value();
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    /// Covariant derivative of a `(1,2)`-tensor `T^a_bc` (jets at `[a][b][c]`):
    /// `(∇_{e_x} T)^a_bc` at `[x][a][b][c]`.
    pub fn derivative_12(&self, t: &[Jet]) -> Vec<f64> {
        let n = self.n;
        let tv: Vec<f64> = t.iter().map(Jet::value).collect();
        let mut out = vec![0.0; n * n * n * n];
        for x in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let mut v = t[idx3(n, a, b, c)].d(x);
                        for e in 0..n {
                            v += self.at(a, x, e).value() * tv[idx3(n, e, b, c)]
                                - self.at(e, x, b).value() * tv[idx3(n, a, e, c)]
                                - self.at(e, x, c).value() * tv[idx3(n, a, b, e)];
                        }
                        out[idx4(n, x, a, b, c)] = v;
                    }
                }
            }
        }
        out
    }
}

impl Curvature {
    pub fn r4(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if y[j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    if z[k] == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        acc += x[i] * y[j] * z[k] * w[l] * self.lowered[idx4(n, i, j, k, l)];
                    }
                }
            }
        }
        acc
    }

    /// `R(X,Y)Z` at the point.
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for a in 0..n {
            for d in 0..n {
                if z[d] == 0.0 {
                    continue;
                }
                for b in 0..n {
                    for c in 0..n {
                        out[a] += self.mixed[idx4(n, a, d, b, c)].value() * z[d] * x[b] * y[c];
                    }
                }
            }
        }
        out
    }

    /// `4π γ_bc = -tr(J ∘ R(e_b, e_c))`, the trace form of the first Chern
    /// form, as jets one order below the curvature.
    pub fn chern_trace_jets(&self, j: &JetMatrix) -> Vec<Jet> {
        let n = self.n;
        let zero = self.mixed[0].zero_like();
        let mut out = vec![zero.clone(); n * n];
        for b in 0..n {
            for c in 0..n {
                let mut acc = zero.clone();
                for a in 0..n {
                    for d in 0..n {
                        acc.add_mul(&j[d][a], &self.mixed[idx4(n, a, d, b, c)]);
                    }
                }
                out[b * n + c] = -acc;
            }
        }
        out
    }

    /// `4πγ` at the point as an `n×n` matrix.
    pub fn chern_trace(&self, j: &JetMatrix) -> Matrix<f64> {
        let n = self.n;
        let jets = self.chern_trace_jets(j);
        (0..n).map(|b| (0..n).map(|c| jets[b * n + c].value()).collect()).collect()
    }

    /// `4πγ(X,Y) = Σ_k R(X, Y, E_k, J E_k)` over a `J`-adapted orthonormal
    /// frame; `seed` rotates the Gram–Schmidt start.
    pub fn chern_trace_framed(&self, h: &[Vec<f64>], j: &[Vec<f64>], seed: usize) -> Result<Matrix<f64>> {
        let n = self.n;
        let frame = j_adapted_frame(h, j, seed)?;
        let mut out = vec![vec![0.0; n]; n];
        for b in 0..n {
            for c in 0..n {
                let mut eb = vec![0.0; n];
                let mut ec = vec![0.0; n];
                eb[b] = 1.0;
                ec[c] = 1.0;
                for e in &frame {
                    let je = linalg::mat_vec(j, e);
                    out[b][c] += self.r4(&eb, &ec, e, &je);
                }
            }
        }
        Ok(out)
    }

    /// Type-(1,1) defect: largest `|R(JE_i,JE_j,E_k,E_l) - R(E_i,E_j,E_k,E_l)|`
    /// over an orthonormal frame, relative to `1 + max |R|`.
    pub fn type11_defect(&self, h: &[Vec<f64>], j: &[Vec<f64>]) -> Result<f64> {
        let n = self.n;
        let frame = j_adapted_frame(h, j, 0)?;
        let jf: Vec<Vec<f64>> = frame.iter().map(|e| linalg::mat_vec(j, e)).collect();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        let r = self.r4(&frame[i], &frame[k], &frame[l], &frame[m]);
                        let rj = self.r4(&jf[i], &jf[k], &frame[l], &frame[m]);
                        scale = scale.max(r.abs());
                        worst = worst.max((rj - r).abs());
                    }
                }
            }
        }
        Ok(worst / (1.0 + scale))
    }

    /// Holomorphic sectional curvature `R(E, JE, E, JE)` of a unit vector.
    pub fn holomorphic_sectional(&self, h: &[Vec<f64>], j: &[Vec<f64>], e: &[f64]) -> Result<f64> {
        let nrm = linalg::bilinear(h, e, e);
        if !(nrm > 1e-24) {
            return Err(Error::InvalidArgument("holomorphic sectional curvature of a zero vector".into()));
        }
        if (nrm - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidArgument(format!("vector has squared norm {nrm}, expected 1")));
        }
        let je = linalg::mat_vec(j, e);
        Ok(self.r4(e, &je, e, &je))
    }
}

/// Orthonormal frame `E_1, JE_1, E_2, JE_2, ...` by Gram–Schmidt on the
/// coordinate vectors, starting at index `seed`.
pub fn j_adapted_frame(h: &[Vec<f64>], j: &[Vec<f64>], seed: usize) -> Result<Vec<Vec<f64>>> {
    let n = h.len();
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
    for step in 0..n {
        if frame.len() == n {
            break;
        }
        let idx = (seed + step) % n;
        let mut v = vec![0.0; n];
        v[idx] = 1.0;
        for e in &frame {
            let p = linalg::bilinear(h, &v, e);
            for c in 0..n {
                v[c] -= p * e[c];
            }
        }
        let nrm = linalg::bilinear(h, &v, &v);
        if nrm < 1e-10 {
            continue;
        }
        let e: Vec<f64> = v.iter().map(|c| c / nrm.sqrt()).collect();
        let je = linalg::mat_vec(j, &e);
        frame.push(e);
        frame.push(je);
    }
    if frame.len() != n {
        return Err(Error::DegenerateFrame("J-adapted frame did not span the tangent space".into()));
    }
    Ok(frame)
}

/// Almost-Hermitian structure on a chart, with the derived Levi-Civita data.
#[derive(Debug, Clone)]
pub struct HermitianChart {
    pub n: usize,
    pub h: JetMatrix,
    pub j: JetMatrix,
    pub lc: LeviCivita,
    /// `(∇_{e_c} J)^a_b` at `[c][a][b]`.
    pub nabla_j: Vec<Jet>,
    h_v: Matrix<f64>,
    hinv_v: Matrix<f64>,
    j_v: Matrix<f64>,
}

impl HermitianChart {
    pub fn new(h: JetMatrix, j: JetMatrix) -> Result<Self> {
        let n = h.len();
        if !n.is_multiple_of(2) || j.len() != n {
            return Err(Error::InvalidArgument(format!("almost-Hermitian charts need even dimension, got {n}")));
        }
        if h[0][0].order() < 2 || j[0][0].order() < 1 {
            return Err(Error::JetOrder("metric jets need order >= 2 and J jets order >= 1".into()));
        }
        let lc = LeviCivita::new(h.clone())?;
        let mut nabla_j = Vec::with_capacity(n * n * n);
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut v = j[a][b].derivative_unchecked(c);
                    for d in 0..n {
                        v.add_mul(lc.gamma(a, c, d), &j[d][b]);
                        let neg = -lc.gamma(d, c, b);
                        v.add_mul(&neg, &j[a][d]);
                    }
                    nabla_j.push(v);
                }
            }
        }
        let h_v = linalg::values(&h);
        let hinv_v = linalg::values(&lc.inverse);
        let j_v = linalg::values(&j);
        Ok(Self {
            n,
            h,
            j,
            lc,
            nabla_j,
            h_v,
            hinv_v,
            j_v,
        })
    }

    pub fn h_values(&self) -> &Matrix<f64> {
        &self.h_v
    }

    pub fn j_values(&self) -> &Matrix<f64> {
        &self.j_v
    }

    fn nj(&self, c: usize, a: usize, b: usize) -> &Jet {
        &self.nabla_j[idx3(self.n, c, a, b)]
    }

    /// `(∇_X J)(Y)` at the point.
    pub fn nabla_j_apply(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for c in 0..n {
            if x[c] == 0.0 {
                continue;
            }
            for a in 0..n {
                for b in 0..n {
                    out[a] += x[c] * self.nj(c, a, b).value() * y[b];
                }
            }
        }
        out
    }

    pub fn j_apply(&self, x: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.j_v, x)
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        linalg::bilinear(&self.h_v, x, y)
    }

    /// Largest component of `J² + Id` and of `h(J·,J·) - h`.
    pub fn structure_residual(&self) -> f64 {
        let n = self.n;
        let j2 = linalg::matmul(&self.j_v, &self.j_v);
        let jhj = linalg::matmul(&linalg::matmul(&linalg::transpose(&self.j_v), &self.h_v), &self.j_v);
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let id = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((j2[a][b] + id).abs()).max((jhj[a][b] - self.h_v[a][b]).abs());
            }
        }
        worst
    }

    pub fn levi_civita(&self) -> Connection {
        Connection {
            n: self.n,
            coeffs: self.lc.gamma.clone(),
        }
    }

    /// `∇̂_X Y = ∇_X Y + ½(∇_X J)(JY)`.
    pub fn hat_connection(&self) -> Connection {
        let n = self.n;
        let mut coeffs = self.lc.gamma.clone();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut acc = coeffs[idx3(n, a, b, c)].clone();
                    for d in 0..n {
                        let half = self.nj(b, a, d).scale(0.5);
                        acc.add_mul(&half, &self.j[d][c]);
                    }
                    coeffs[idx3(n, a, b, c)] = acc;
                }
            }
        }
        Connection { n, coeffs }
    }

    /// The tensor `S` with
    /// `h(S(X,Y),Z) = ¼ h((∇_Z J)(JY) - (∇_Y J)(JZ) - (∇_{JZ}J)(Y) + (∇_{JY}J)(Z), X)`,
    /// as jets `S^a_bc = S(e_b, e_c)^a`.
    pub fn s_tensor(&self) -> Vec<Jet> {
        let n = self.n;
        let zero = self.nabla_j[0].truncate(self.nabla_j[0].order()).zero_like();
        // l[c][z][b] = ¼ h(T_{z,c}, e_b)
        let mut l = vec![zero.clone(); n * n * n];
        for c in 0..n {
            for z in 0..n {
                let mut t = vec![zero.clone(); n];
                for m in 0..n {
                    let mut acc = zero.clone();
                    for d in 0..n {
                        acc.add_mul(self.nj(z, m, d), &self.j[d][c]);
                        let neg = -self.nj(c, m, d);
                        acc.add_mul(&neg, &self.j[d][z]);
                        let neg = -&self.j[d][z];
                        acc.add_mul(&neg, self.nj(d, m, c));
                        acc.add_mul(&self.j[d][c], self.nj(d, m, z));
                    }
                    t[m] = acc;
                }
                for b in 0..n {
                    let mut acc = zero.clone();
                    for m in 0..n {
                        acc.add_mul(&t[m], &self.h[m][b]);
                    }
                    l[idx3(n, c, z, b)] = acc.scale(0.25);
                }
            }
        }
        let mut s = vec![zero.clone(); n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut acc = zero.clone();
                    for z in 0..n {
                        acc.add_mul(&self.lc.inverse[a][z], &l[idx3(n, c, z, b)]);
                    }
                    s[idx3(n, a, b, c)] = acc;
                }
            }
        }
        s
    }

    /// Gauduchon connection `∇̂ + u S`; `u = 1` is the Chern connection.
    pub fn gauduchon(&self, u: f64) -> Connection {
        self.gauduchon_with(u, &self.s_tensor())
    }

    pub fn gauduchon_with(&self, u: f64, s: &[Jet]) -> Connection {
        let mut conn = self.hat_connection();
        if u != 0.0 {
            for (c, sv) in conn.coeffs.iter_mut().zip(s) {
                *c += &sv.scale(u);
            }
        }
        conn
    }

    pub fn chern(&self) -> Connection {
        self.gauduchon(1.0)
    }

    /// Kähler form `Ω(e_a, e_b) = h(J e_a, e_b)` as jets `[a][b]`.
    pub fn kaehler_form(&self) -> Vec<Jet> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let mut acc = self.h[0][0].zero_like();
                for c in 0..n {
                    acc.add_mul(&self.j[c][a], &self.h[c][b]);
                }
                out.push(acc);
            }
        }
        out
    }

    /// `dΩ(e_a,e_b,e_c)` at the point, `[a][b][c]`.
    pub fn d_omega(&self) -> Vec<f64> {
        let n = self.n;
        let om = self.kaehler_form();
        let mut out = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    out[idx3(n, a, b, c)] = om[b * n + c].d(a) + om[c * n + a].d(b) + om[a * n + b].d(c);
                }
            }
        }
        out
    }

    /// `δΩ(e_y) = -Σ (∇_{E_k} Ω)(E_k, e_y)` as jets.
    pub fn codiff_omega(&self) -> Vec<Jet> {
        let n = self.n;
        let zero = self.nabla_j[0].zero_like();
        (0..n)
            .map(|y| {
                let mut acc = zero.clone();
                for a in 0..n {
                    for b in 0..n {
                        let mut inner = zero.clone();
                        for c in 0..n {
                            inner.add_mul(self.nj(a, c, b), &self.h[c][y]);
                        }
                        acc.add_mul(&self.lc.inverse[a][b], &inner);
                    }
                }
                -acc
            })
            .collect()
    }

    /// `d(δΩ)(e_i, e_j) = ∂_i δΩ_j - ∂_j δΩ_i`.
    pub fn d_codiff_omega(&self) -> Matrix<f64> {
        exterior_derivative_1form(&self.codiff_omega())
    }

    /// `φ(X,Y) = tr(Z ↦ h((∇_X J)(JZ), (∇_Y J)(Z)))`, as an `n×n` matrix.
    pub fn phi(&self) -> Matrix<f64> {
        let n = self.n;
        // njj[b][p][m] = ((∇_b J) J e_m)^p
        let mut njj = vec![0.0; n * n * n];
        for b in 0..n {
            for p in 0..n {
                for m in 0..n {
                    let mut acc = 0.0;
                    for d in 0..n {
                        acc += self.nj(b, p, d).value() * self.j_v[d][m];
                    }
                    njj[idx3(n, b, p, m)] = acc;
                }
            }
        }
        let mut out = vec![vec![0.0; n]; n];
        for b in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for m in 0..n {
                    for k in 0..n {
                        let him = self.hinv_v[m][k];
                        if him == 0.0 {
                            continue;
                        }
                        for p in 0..n {
                            for q in 0..n {
                                acc += him * self.h_v[p][q] * njj[idx3(n, b, p, m)] * self.nj(c, q, k).value();
                            }
                        }
                    }
                }
                out[b][c] = acc;
            }
        }
        out
    }

    /// `ρ*(X,Y) = tr(Z ↦ R(JZ, X) JY)` for the Levi-Civita curvature.
    pub fn rho_star(&self, riem: &Curvature) -> Matrix<f64> {
        let n = self.n;
        let mut out = vec![vec![0.0; n]; n];
        for x in 0..n {
            for y in 0..n {
                let mut acc = 0.0;
                for z in 0..n {
                    for d in 0..n {
                        let jy = self.j_v[d][y];
                        if jy == 0.0 {
                            continue;
                        }
                        for b in 0..n {
                            acc += riem.mixed[idx4(n, z, d, b, x)].value() * jy * self.j_v[b][z];
                        }
                    }
                }
                out[x][y] = acc;
            }
        }
        out
    }

    /// `ψ(X,Y) = ρ*(X, JY)`.
    pub fn psi(&self, riem: &Curvature) -> Matrix<f64> {
        let rho = self.rho_star(riem);
        linalg::matmul(&rho, &self.j_v)
    }

    /// Nijenhuis tensor through the Levi-Civita connection,
    /// `N(E,F) = -J(∇_E J)F + J(∇_F J)E - (∇_{JF}J)E + (∇_{JE}J)F`,
    /// as jets `N^a_bc = N(e_b, e_c)^a`.
    pub fn nijenhuis(&self) -> Vec<Jet> {
        let n = self.n;
        let zero = self.nabla_j[0].zero_like();
        let mut out = vec![zero.clone(); n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in b + 1..n {
                    let mut acc = zero.clone();
                    for m in 0..n {
                        let d = self.nj(c, m, b) - self.nj(b, m, c);
                        acc.add_mul(&self.j[a][m], &d);
                        acc.add_mul(&self.j[m][b], self.nj(m, a, c));
                        let neg = -&self.j[m][c];
                        acc.add_mul(&neg, self.nj(m, a, b));
                    }
                    out[idx3(n, a, c, b)] = -acc.clone();
                    out[idx3(n, a, b, c)] = acc;
                }
            }
        }
        out
    }

    /// Nijenhuis tensor from brackets of coordinate fields,
    /// `N(X,Y) = [JX,JY] - J[JX,Y] - J[X,JY] - [X,Y]`, at the point.
    pub fn nijenhuis_bracket(&self) -> Vec<f64> {
        let n = self.n;
        let dj = |a: usize, b: usize, m: usize| self.j[a][b].d(m);
        let mut out = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut v = 0.0;
                    for m in 0..n {
                        v += self.j_v[m][b] * dj(a, c, m) - self.j_v[m][c] * dj(a, b, m);
                        v += self.j_v[a][m] * dj(m, b, c) - self.j_v[a][m] * dj(m, c, b);
                    }
                    out[idx3(n, a, b, c)] = v;
                }
            }
        }
        out
    }

    /// `N(X, Y)` at the point from the tensor jets.
    pub fn nijenhuis_apply(nij: &[Jet], n: usize, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for a in 0..n {
            for b in 0..n {
                if x[b] == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out[a] += nij[idx3(n, a, b, c)].value() * x[b] * y[c];
                }
            }
        }
        out
    }

    /// Holomorphic sectional curvature of the Levi-Civita connection plus the
    /// `∇J` corrections that give the Chern value for a unit `X`.
    pub fn chern_hsc_from_levi_civita(&self, riem: &Curvature, x: &[f64]) -> Result<f64> {
        let h = riem.holomorphic_sectional(&self.h_v, &self.j_v, x)?;
        let jx = self.j_apply(x);
        let p = self.nabla_j_apply(x, x);
        let q = self.nabla_j_apply(&jx, &jx);
        Ok(h + 0.125 * (self.inner(&p, &p) + self.inner(&q, &q)) + 0.75 * self.inner(&p, &q))
    }
}

/// `dθ(e_i, e_j) = ∂_i θ_j - ∂_j θ_i` for a jet-valued 1-form.
pub fn exterior_derivative_1form(theta: &[Jet]) -> Matrix<f64> {
    let n = theta.len();
    (0..n)
        .map(|i| (0..n).map(|j| theta[j].d(i) - theta[i].d(j)).collect())
        .collect()
}

/// `dβ(e_a,e_b,e_c)` for a jet-valued 2-form `β_ab` stored row-major.
pub fn exterior_derivative_2form(beta: &[Jet], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                out[idx3(n, a, b, c)] = beta[b * n + c].d(a) + beta[c * n + a].d(b) + beta[a * n + b].d(c);
            }
        }
    }
    out
}

/// `(∇_G T)(E, F)` from the output of [`Connection::derivative_12`].
pub fn contract_derivative(d: &[f64], n: usize, g: &[f64], e: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for x in 0..n {
        if g[x] == 0.0 {
            continue;
        }
        for a in 0..n {
            for b in 0..n {
                if e[b] == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out[a] += g[x] * e[b] * f[c] * d[idx4(n, x, a, b, c)];
                }
            }
        }
    }
    out
}

/// `S(X, Y)` at the point.
pub fn s_apply(s: &[Jet], n: usize, x: &[f64], y: &[f64]) -> Vec<f64> {
    HermitianChart::nijenhuis_apply(s, n, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Scalar;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Flat `C³` with its standard complex structure.
    fn kaehler_chart(order: usize) -> HermitianChart {
        let seeds = Jet::seed_all(&[0.1, 0.2, -0.3, 0.4, 0.0, 0.5], order).unwrap();
        let zero = seeds[0].zero_like();
        let h: JetMatrix = (0..6)
            .map(|a| (0..6).map(|b| zero.constant_like(if a == b { 1.0 } else { 0.0 })).collect())
            .collect();
        let mut j = vec![vec![zero.clone(); 6]; 6];
        for k in 0..3 {
            j[2 * k + 1][2 * k] = zero.constant_like(1.0);
            j[2 * k][2 * k + 1] = zero.constant_like(-1.0);
        }
        HermitianChart::new(h, j).unwrap()
    }

    /// A generic almost-Hermitian structure on a 6-dimensional chart: a
    /// polynomial metric with `J` transported from the standard structure by
    /// its Gram–Schmidt frame and a position-dependent rotation.
    pub(crate) fn generic_chart(point: &[f64; 6], order: usize) -> HermitianChart {
        let x = Jet::seed_all(point, order).unwrap();
        let zero = x[0].zero_like();
        let mut h = vec![vec![zero.clone(); 6]; 6];
        for a in 0..6 {
            for b in 0..6 {
                let mut v = zero.clone();
                if a == b {
                    v = v + 1.0 + x[a].clone() * x[(a + 1) % 6].clone() * 0.3;
                }
                v = v + x[a].clone() * x[b].clone() * 0.2 + (x[(a + b) % 6].clone() * 0.1);
                h[a][b] = v;
            }
        }
        for a in 0..6 {
            for b in 0..a {
                h[a][b] = h[b][a].clone();
            }
        }
        let f = riemann::orthonormal_frame(&h).unwrap();
        // rotate the (e1, e3) plane of the frame by an angle depending on x
        let ang = x[0].clone() * 0.7 + x[4].clone() * x[1].clone();
        // cos/sin via rational parametrization
        let tt = ang.clone() * 0.5;
        let d = (tt.clone() * tt.clone() + 1.0).recip();
        let c = (-(tt.clone() * tt.clone()) + 1.0) * d.clone();
        let s = tt * 2.0 * d;
        let mut rot = vec![vec![zero.clone(); 6]; 6];
        for a in 0..6 {
            rot[a][a] = zero.constant_like(1.0);
        }
        rot[0][0] = c.clone();
        rot[2][2] = c;
        rot[0][2] = -s.clone();
        rot[2][0] = s;
        let mut j0 = vec![vec![zero.clone(); 6]; 6];
        for k in 0..3 {
            j0[2 * k + 1][2 * k] = zero.constant_like(1.0);
            j0[2 * k][2 * k + 1] = zero.constant_like(-1.0);
        }
        let fr = linalg::matmul(&f, &rot);
        let fr_inv = linalg::matmul(&linalg::transpose(&fr), &h);
        let j = linalg::matmul(&linalg::matmul(&fr, &j0), &fr_inv);
        HermitianChart::new(h, j).unwrap()
    }

    fn rand_vec(rng: &mut impl Rng) -> Vec<f64> {
        (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn kaehler_chart_is_trivial() {
        let hc = kaehler_chart(3);
        assert!(hc.nabla_j.iter().all(|v| v.value() == 0.0));
        for u in [0.0, 0.5, 1.0] {
            let g = hc.gauduchon(u);
            assert!(g.coeffs.iter().all(|c| c.value() == 0.0));
            let r = g.curvature(&hc.h).unwrap();
            assert!(r.lowered.iter().all(|v| *v == 0.0));
            assert!(r.chern_trace(&hc.j).iter().flatten().all(|v| *v == 0.0));
        }
        assert!(hc.codiff_omega().iter().all(|v| v.value() == 0.0));
        assert!(hc.d_codiff_omega().iter().flatten().all(|v| *v == 0.0));
        assert!(hc.phi().iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn structure_is_almost_hermitian() {
        let hc = generic_chart(&[0.1, -0.2, 0.3, 0.05, 0.2, -0.1], 3);
        assert!(hc.structure_residual() < 1e-12);
        // J is not parallel and not integrable
        assert!(hc.nabla_j.iter().any(|v| v.value().abs() > 1e-3));
        assert!(hc.nijenhuis().iter().any(|v| v.value().abs() > 1e-3));
    }

    #[test]
    fn gauduchon_connections_are_hermitian() {
        let hc = generic_chart(&[0.2, 0.1, -0.1, 0.3, -0.2, 0.15], 3);
        for u in [0.0, 0.5, 1.0, 2.0] {
            let g = hc.gauduchon(u);
            assert!(g.metric_residual(&hc.h) < 1e-12, "u = {u}");
            assert!(g.j_residual(&hc.j) < 1e-12, "u = {u}");
        }
        // the Chern connection has no (1,1) torsion: T(JX,JY) = -T(X,Y)
        let t: Vec<Jet> = hc.chern().torsion().into_iter().map(|v| Jet::constant(6, 0, v).unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = rand_vec(&mut rng);
            let y = rand_vec(&mut rng);
            let lhs = s_apply(&t, 6, &hc.j_apply(&x), &hc.j_apply(&y));
            let rhs = s_apply(&t, 6, &x, &y);
            for i in 0..6 {
                assert!((lhs[i] + rhs[i]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn s_tensor_properties() {
        let hc = generic_chart(&[-0.1, 0.25, 0.1, -0.3, 0.2, 0.05], 3);
        let s = hc.s_tensor();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let x = rand_vec(&mut rng);
            let y = rand_vec(&mut rng);
            let z = rand_vec(&mut rng);
            // (5.5)
            let a = hc.inner(&s_apply(&s, 6, &x, &y), &z);
            let b = hc.inner(&s_apply(&s, 6, &x, &z), &y);
            assert!((a + b).abs() < 1e-12);
            // (5.6)
            let l = s_apply(&s, 6, &x, &hc.j_apply(&y));
            let r = hc.j_apply(&s_apply(&s, 6, &x, &y));
            for i in 0..6 {
                assert!((l[i] - r[i]).abs() < 1e-12);
            }
            // (5.7)
            let jx = hc.j_apply(&x);
            let l1 = s_apply(&s, 6, &x, &jx);
            let l2 = s_apply(&s, 6, &jx, &x);
            let p = hc.nabla_j_apply(&x, &x);
            let q = hc.nabla_j_apply(&jx, &jx);
            for i in 0..6 {
                let r = 0.25 * (p[i] + q[i]);
                assert!((l1[i] - r).abs() < 1e-12);
                assert!((l2[i] + r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nijenhuis_matches_bracket_definition() {
        let hc = generic_chart(&[0.3, -0.1, 0.2, 0.1, -0.25, 0.1], 3);
        let nij = hc.nijenhuis();
        let br = hc.nijenhuis_bracket();
        for (a, b) in nij.iter().zip(&br) {
            assert!((a.value() - b).abs() < 1e-11, "{} vs {}", a.value(), b);
        }
    }

    #[test]
    fn lemma_one_on_generic_chart() {
        let hc = generic_chart(&[0.15, 0.05, -0.2, 0.1, 0.3, -0.05], 3);
        let riem = hc.levi_civita().curvature(&hc.h).unwrap();
        let phi = hc.phi();
        let psi = hc.psi(&riem);
        let ddo = hc.d_codiff_omega();
        let s = hc.s_tensor();
        for u in [0.0, 0.5, 1.0] {
            let gam = hc.gauduchon_with(u, &s).curvature(&hc.h).unwrap().chern_trace(&hc.j);
            for a in 0..6 {
                for b in 0..6 {
                    let lhs = 2.0 * gam[a][b];
                    let rhs = -phi[a][b] - 4.0 * psi[a][b] + 2.0 * u * ddo[a][b];
                    assert!((lhs - rhs).abs() < 1e-9, "u={u} ({a},{b}): {lhs} vs {rhs}");
                }
            }
        }
    }

    #[test]
    fn chern_trace_is_frame_independent() {
        let hc = generic_chart(&[0.1, 0.1, 0.1, -0.1, 0.2, 0.0], 3);
        let r = hc.chern().curvature(&hc.h).unwrap();
        let direct = r.chern_trace(&hc.j);
        for seed in 0..3 {
            let framed = r.chern_trace_framed(hc.h_values(), hc.j_values(), seed).unwrap();
            for a in 0..6 {
                for b in 0..6 {
                    assert!((framed[a][b] - direct[a][b]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn hat_curvature_relation() {
        let hc = generic_chart(&[-0.2, 0.1, 0.05, 0.2, -0.1, 0.25], 3);
        let riem = hc.levi_civita().curvature(&hc.h).unwrap();
        let hat = hc.hat_connection().curvature(&hc.h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let [x, y, z, w] = std::array::from_fn(|_| rand_vec(&mut rng));
            let lhs = 4.0 * hat.r4(&x, &y, &z, &w);
            let rhs = 2.0 * riem.r4(&x, &y, &z, &w) + 2.0 * riem.r4(&x, &y, &hc.j_apply(&z), &hc.j_apply(&w))
                + hc.inner(&hc.nabla_j_apply(&x, &z), &hc.nabla_j_apply(&y, &w))
                - hc.inner(&hc.nabla_j_apply(&x, &w), &hc.nabla_j_apply(&y, &z));
            assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn chern_curvature_from_hat_and_s() {
        let hc = generic_chart(&[0.1, 0.2, -0.15, 0.05, -0.1, 0.2], 3);
        let s = hc.s_tensor();
        let hat = hc.hat_connection();
        let rhat = hat.curvature(&hc.h).unwrap();
        let rch = hc.chern().curvature(&hc.h).unwrap();
        let ds = hat.derivative_12(&s);
        let that = hat.torsion();
        let n = 6;
        let ds_apply = |x: &[f64], y: &[f64], z: &[f64]| {
            let mut out = vec![0.0; n];
            for q in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            out[a] += x[q] * y[b] * z[c] * ds[idx4(n, q, a, b, c)];
                        }
                    }
                }
            }
            out
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let [x, y, z, w] = std::array::from_fn(|_| rand_vec(&mut rng));
            let mut txy = vec![0.0; n];
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        txy[a] += that[idx3(n, a, b, c)] * x[b] * y[c];
                    }
                }
            }
            let lhs = rch.r4(&x, &y, &z, &w);
            let rhs = rhat.r4(&x, &y, &z, &w) - hc.inner(&ds_apply(&x, &y, &z), &w) + hc.inner(&ds_apply(&y, &x, &z), &w)
                + hc.inner(&s_apply(&s, n, &x, &w), &s_apply(&s, n, &y, &z))
                - hc.inner(&s_apply(&s, n, &y, &w), &s_apply(&s, n, &x, &z))
                - hc.inner(&s_apply(&s, n, &txy, &z), &w);
            assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
            // S(JX,JX) pairing with the hat derivative
            let jx = hc.j_apply(&x);
            assert!(hc.inner(&ds_apply(&y, &jx, &jx), &x).abs() < 1e-10);
        }
    }

    #[test]
    fn holomorphic_sectional_curvature_relation() {
        let hc = generic_chart(&[0.05, -0.15, 0.2, 0.1, 0.1, 0.2], 3);
        let riem = hc.levi_civita().curvature(&hc.h).unwrap();
        let chern = hc.chern().curvature(&hc.h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let mut x = rand_vec(&mut rng);
            let nrm = hc.inner(&x, &x).sqrt();
            x.iter_mut().for_each(|v| *v /= nrm);
            let lhs = chern.holomorphic_sectional(hc.h_values(), hc.j_values(), &x).unwrap();
            let rhs = hc.chern_hsc_from_levi_civita(&riem, &x).unwrap();
            assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
        assert!(chern.holomorphic_sectional(hc.h_values(), hc.j_values(), &[0.0; 6]).is_err());
    }
}
