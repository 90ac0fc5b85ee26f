//! Pointwise algebra of 2-vectors on an oriented Riemannian 4-manifold.
//!
//! Everything here is expressed in an oriented orthonormal frame
//! `E_1..E_4`. A 2-vector is an antisymmetric 4×4 matrix `w` standing for
//! `sum_{a<b} w_ab E_a∧E_b`, and the inner product on 2-vectors carries the
//! factor one half:
//!
//! ```text
//! g(X1∧X2, X3∧X4) = 1/2 [g(X1,X3) g(X2,X4) - g(X1,X4) g(X2,X3)]
//! ```
//!
//! so `g(w, v) = 1/4 sum_ab w_ab v_ab`. Under this normalization the bases
//! `s_i` (anti-self-dual) and `s̄_i` (self-dual) below are orthonormal, and a
//! unit anti-self-dual `σ = sum y_j s_j` has `|y| = 1`.

use crate::error::{Error, Result};
use crate::jet::Scalar;
use crate::linalg::cross3;

pub type Vec4 = [f64; 4];
pub type Mat4 = [[f64; 4]; 4];
/// Antisymmetric frame components of a 2-vector.
pub type Bivector = Mat4;

const fn e(a: usize, b: usize) -> Bivector {
    let mut m = [[0.0; 4]; 4];
    m[a][b] = 1.0;
    m[b][a] = -1.0;
    m
}

const fn comb(p: Bivector, q: Bivector, sign: f64) -> Bivector {
    let mut m = [[0.0; 4]; 4];
    let mut i = 0;
    while i < 4 {
        let mut j = 0;
        while j < 4 {
            m[i][j] = p[i][j] + sign * q[i][j];
            j += 1;
        }
        i += 1;
    }
    m
}

/// `s_1 = E12 - E34`, `s_2 = E13 - E42`, `s_3 = E14 - E23`.
pub const S_MINUS: [Bivector; 3] = [
    comb(e(0, 1), e(2, 3), -1.0),
    comb(e(0, 2), e(3, 1), -1.0),
    comb(e(0, 3), e(1, 2), -1.0),
];

/// `s̄_1 = E12 + E34`, `s̄_2 = E13 + E42`, `s̄_3 = E14 + E23`.
pub const S_PLUS: [Bivector; 3] = [
    comb(e(0, 1), e(2, 3), 1.0),
    comb(e(0, 2), e(3, 1), 1.0),
    comb(e(0, 3), e(1, 2), 1.0),
];

/// The ordered basis `(s̄_1, s̄_2, s̄_3, s_1, s_2, s_3)` of `Λ²`.
pub fn lambda2_basis() -> [Bivector; 6] {
    [S_PLUS[0], S_PLUS[1], S_PLUS[2], S_MINUS[0], S_MINUS[1], S_MINUS[2]]
}

pub fn wedge(x: &Vec4, y: &Vec4) -> Bivector {
    let mut m = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            m[a][b] = x[a] * y[b] - x[b] * y[a];
        }
    }
    m
}

pub fn inner(w: &Bivector, v: &Bivector) -> f64 {
    let mut acc = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            acc += w[a][b] * v[a][b];
        }
    }
    0.25 * acc
}

pub fn add(w: &Bivector, v: &Bivector) -> Bivector {
    let mut m = *w;
    for a in 0..4 {
        for b in 0..4 {
            m[a][b] += v[a][b];
        }
    }
    m
}

pub fn scale(w: &Bivector, c: f64) -> Bivector {
    let mut m = *w;
    m.iter_mut().flatten().for_each(|v| *v *= c);
    m
}

pub fn sub(w: &Bivector, v: &Bivector) -> Bivector {
    add(w, &scale(v, -1.0))
}

/// Hodge star on 2-vectors of the oriented frame.
pub fn star(w: &Bivector) -> Bivector {
    // *(E_a∧E_b) = E_c∧E_d for (a,b,c,d) an even permutation
    let mut m = [[0.0; 4]; 4];
    let even = [
        (0, 1, 2, 3),
        (0, 2, 3, 1),
        (0, 3, 1, 2),
        (2, 3, 0, 1),
        (3, 1, 0, 2),
        (1, 2, 0, 3),
    ];
    for &(a, b, c, d) in &even {
        m[c][d] += w[a][b];
        m[d][c] -= w[a][b];
    }
    m
}

/// 2-vector `sum y_j s_j` of `Λ²₋`.
pub fn from_minus(y: &[f64; 3]) -> Bivector {
    let mut m = [[0.0; 4]; 4];
    for (k, s) in S_MINUS.iter().enumerate() {
        for a in 0..4 {
            for b in 0..4 {
                m[a][b] += y[k] * s[a][b];
            }
        }
    }
    m
}

/// Components of the `Λ²₋` projection in the basis `(s_1, s_2, s_3)`.
pub fn minus_components(w: &Bivector) -> [f64; 3] {
    [inner(w, &S_MINUS[0]), inner(w, &S_MINUS[1]), inner(w, &S_MINUS[2])]
}

pub fn plus_components(w: &Bivector) -> [f64; 3] {
    [inner(w, &S_PLUS[0]), inner(w, &S_PLUS[1]), inner(w, &S_PLUS[2])]
}

/// Vector product in `Λ²₋` with `s_1 × s_2 = s_3`.
pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    cross3(a, b)
}

/// The complex structure `K_σ` defined by `g(K_σ X, Y) = 2 g(σ, X∧Y)`,
/// applied to frame components of `X`. Linear in `σ`, so `y` need not be a
/// unit vector.
pub fn k_sigma(y: &[f64; 3], x: &Vec4) -> Vec4 {
    let s = from_minus(y);
    let mut out = [0.0; 4];
    for b in 0..4 {
        for a in 0..4 {
            out[b] += s[a][b] * x[a];
        }
    }
    out
}

/// Matrix of `K_σ` in the frame (`out = K x`), generic over the scalar type
/// so that the twistor chart can carry derivatives through it.
pub fn k_sigma_matrix<S: Scalar>(y: &[S; 3]) -> Vec<Vec<S>> {
    let zero = y[0].zero_like();
    let mut k = vec![vec![zero.clone(); 4]; 4];
    for (j, s) in S_MINUS.iter().enumerate() {
        for b in 0..4 {
            for a in 0..4 {
                if s[a][b] != 0.0 {
                    k[b][a] = k[b][a].clone() + y[j].clone() * s[a][b];
                }
            }
        }
    }
    k
}

pub fn dot4(x: &Vec4, y: &Vec4) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn mat4_vec(m: &Mat4, x: &Vec4) -> Vec4 {
    let mut out = [0.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i] += m[i][j] * x[j];
        }
    }
    out
}

/// Action of an endomorphism `m` of `T_pM` on a 2-vector as a derivation:
/// `m(X∧Y) = mX∧Y + X∧mY`.
pub fn act(m: &Mat4, w: &Bivector) -> Bivector {
    let mut out = [[0.0; 4]; 4];
    for c in 0..4 {
        for d in 0..4 {
            let mut acc = 0.0;
            for a in 0..4 {
                acc += m[c][a] * w[a][d] + w[c][a] * m[d][a];
            }
            out[c][d] = acc;
        }
    }
    out
}

/// A point of the twistor space: a unit anti-self-dual 2-vector
/// `σ = sum y_j s_j(p)` over the base point `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPoint {
    pub base: Vec<f64>,
    pub y: [f64; 3],
}

impl SigmaPoint {
    /// Normalizes `y` when it is within `1e-8` of unit length, otherwise errors.
    pub fn new(base: Vec<f64>, y: [f64; 3]) -> Result<Self> {
        let n = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
        if (1.0 - n).abs() >= 1e-8 {
            return Err(Error::InvalidArgument(format!("|y| = {n} is not 1")));
        }
        Ok(Self {
            base,
            y: [y[0] / n, y[1] / n, y[2] / n],
        })
    }

    pub fn bivector(&self) -> Bivector {
        from_minus(&self.y)
    }

    pub fn k(&self, x: &Vec4) -> Vec4 {
        k_sigma(&self.y, x)
    }

    /// `σ × v` for `v` in `Λ²₋` at the same base point.
    pub fn cross(&self, other: &SigmaPoint) -> Result<[f64; 3]> {
        if self.base != other.base {
            return Err(Error::MixedPoints);
        }
        Ok(cross(&self.y, &other.y))
    }
}

/// `(∇_{E_m} R)(E_a,E_b,E_c,E_d)` at `[m][a][b][c][d]`.
pub type Nabla4 = [[[[[f64; 4]; 4]; 4]; 4]; 4];

/// Curvature of the base at one point, in frame components, paired with the
/// operations the twistor formulas need.
#[derive(Debug, Clone)]
pub struct FrameCurvature {
    /// `R(E_a,E_b,E_c,E_d) = g(R(E_a,E_b)E_c, E_d)` with `R(X,Y) = ∇_[X,Y] - [∇_X,∇_Y]`.
    pub r: [[[[f64; 4]; 4]; 4]; 4],
    /// `(∇_{E_m} R)(E_a,E_b,E_c,E_d)`, indexed `[m][a][b][c][d]`.
    pub nabla: Option<Box<Nabla4>>,
}

impl FrameCurvature {
    /// Constant curvature `kappa` in an orthonormal frame.
    pub fn constant(kappa: f64) -> Self {
        let mut r = [[[[0.0; 4]; 4]; 4]; 4];
        let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for e in 0..4 {
                        r[a][b][c][e] = kappa * (d(a, c) * d(b, e) - d(a, e) * d(b, c));
                    }
                }
            }
        }
        Self {
            r,
            nabla: Some(Box::new([[[[[0.0; 4]; 4]; 4]; 4]; 4])),
        }
    }

    pub fn r4(&self, x: &Vec4, y: &Vec4, z: &Vec4, w: &Vec4) -> f64 {
        let mut acc = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                if x[a] == 0.0 || y[b] == 0.0 {
                    continue;
                }
                for c in 0..4 {
                    for d in 0..4 {
                        acc += x[a] * y[b] * z[c] * w[d] * self.r[a][b][c][d];
                    }
                }
            }
        }
        acc
    }

    /// The curvature operator `𝓡` on 2-vectors: `g(𝓡(X∧Y), Z∧T) = R(X,Y,Z,T)`.
    pub fn rcal(&self, w: &Bivector) -> Bivector {
        let mut out = [[0.0; 4]; 4];
        for c in 0..4 {
            for d in 0..4 {
                let mut acc = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        acc += w[a][b] * self.r[a][b][c][d];
                    }
                }
                out[c][d] = acc;
            }
        }
        out
    }

    /// `(∇_X 𝓡)(w)`.
    pub fn nabla_rcal(&self, x: &Vec4, w: &Bivector) -> Result<Bivector> {
        let nabla = self
            .nabla
            .as_ref()
            .ok_or_else(|| Error::JetOrder("covariant derivative of curvature not computed".into()))?;
        let mut out = [[0.0; 4]; 4];
        for m in 0..4 {
            if x[m] == 0.0 {
                continue;
            }
            for c in 0..4 {
                for d in 0..4 {
                    let mut acc = 0.0;
                    for a in 0..4 {
                        for b in 0..4 {
                            acc += w[a][b] * nabla[m][a][b][c][d];
                        }
                    }
                    out[c][d] += x[m] * acc;
                }
            }
        }
        Ok(out)
    }

    /// Matrix of the endomorphism `R(w) = sum_{a<b} w_ab R(E_a,E_b)` of `T_pM`.
    pub fn endo(&self, w: &Bivector) -> Mat4 {
        let mut m = [[0.0; 4]; 4];
        for c in 0..4 {
            for d in 0..4 {
                let mut acc = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        acc += w[a][b] * self.r[a][b][c][d];
                    }
                }
                m[d][c] = 0.5 * acc;
            }
        }
        m
    }

    /// `R(w) v` for 2-vectors `w`, `v`: the curvature endomorphism acting on
    /// `Λ²` as a derivation.
    pub fn apply(&self, w: &Bivector, v: &Bivector) -> Bivector {
        act(&self.endo(w), v)
    }

    /// `R(w) X` for a tangent vector.
    pub fn apply_vec(&self, w: &Bivector, x: &Vec4) -> Vec4 {
        mat4_vec(&self.endo(w), x)
    }

    /// 6×6 matrix of `𝓡` in the basis `(s̄_1, s̄_2, s̄_3, s_1, s_2, s_3)`.
    pub fn op_matrix(&self) -> [[f64; 6]; 6] {
        let basis = lambda2_basis();
        let mut m = [[0.0; 6]; 6];
        for i in 0..6 {
            let ri = self.rcal(&basis[i]);
            for j in 0..6 {
                m[i][j] = inner(&ri, &basis[j]);
            }
        }
        m
    }
}

/// Residual of `g(R(a)b, c) = -g(𝓡(a), b×c)` for `a ∈ Λ²`, `b, c ∈ Λ²₋`.
pub fn residual_2_5(curv: &FrameCurvature, a: &Bivector, b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let lhs = inner(&curv.apply(a, &from_minus(b)), &from_minus(c));
    let rhs = -inner(&curv.rcal(a), &from_minus(&cross(b, c)));
    (lhs - rhs).abs() / (1.0 + lhs.abs().max(rhs.abs()))
}

/// Residual of `g(σ×V, X∧K_σY) = g(σ×V, K_σX∧Y) = -g(V, X∧Y)`, `V ⊥ σ`.
pub fn residual_2_6(y: &[f64; 3], v: &[f64; 3], x: &Vec4, w: &Vec4) -> f64 {
    let sv = from_minus(&cross(y, v));
    let first = inner(&sv, &wedge(x, &k_sigma(y, w)));
    let second = inner(&sv, &wedge(&k_sigma(y, x), w));
    let third = -inner(&from_minus(v), &wedge(x, w));
    let scale = 1.0 + first.abs().max(second.abs()).max(third.abs());
    ((first - third).abs().max((second - third).abs())) / scale
}

/// Residual of `K_σ K_τ = -g(σ,τ) Id - K_{σ×τ}` over the frame vectors.
pub fn residual_2_6c(sigma: &[f64; 3], tau: &[f64; 3]) -> f64 {
    let st = cross(sigma, tau);
    let g = sigma[0] * tau[0] + sigma[1] * tau[1] + sigma[2] * tau[2];
    let mut worst = 0.0f64;
    for a in 0..4 {
        let mut x = [0.0; 4];
        x[a] = 1.0;
        let lhs = k_sigma(sigma, &k_sigma(tau, &x));
        let kst = k_sigma(&st, &x);
        for i in 0..4 {
            let rhs = -g * x[i] - kst[i];
            worst = worst.max((lhs[i] - rhs).abs() / (1.0 + lhs[i].abs().max(rhs.abs())));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(i: usize) -> Vec4 {
        let mut v = [0.0; 4];
        v[i] = 1.0;
        v
    }

    fn random_vec4(rng: &mut ChaCha8Rng) -> Vec4 {
        [0; 4].map(|_| rng.gen_range(-1.0..1.0))
    }

    fn random_unit3(rng: &mut ChaCha8Rng) -> [f64; 3] {
        loop {
            let v = [0; 3].map(|_| rng.gen_range(-1.0..1.0));
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 0.1 && n < 1.0 {
                return v.map(|c| c / n);
            }
        }
    }

    /// A generic algebraic curvature tensor in frame components: sum of
    /// symmetric-operator pieces `g(𝓡 w, v)` projected to satisfy Bianchi.
    fn generic_curvature(rng: &mut ChaCha8Rng) -> FrameCurvature {
        // R = sum_k c_k (h_k ⊙ h_k) Kulkarni–Nomizu products of random symmetric forms
        let mut r = [[[[0.0; 4]; 4]; 4]; 4];
        for _ in 0..3 {
            let mut h = [[0.0; 4]; 4];
            let mut k = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in i..4 {
                    h[i][j] = rng.gen_range(-1.0..1.0);
                    h[j][i] = h[i][j];
                    k[i][j] = rng.gen_range(-1.0..1.0);
                    k[j][i] = k[i][j];
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        for d in 0..4 {
                            r[a][b][c][d] += h[a][c] * k[b][d] + k[a][c] * h[b][d]
                                - h[a][d] * k[b][c]
                                - k[a][d] * h[b][c];
                        }
                    }
                }
            }
        }
        FrameCurvature { r, nabla: None }
    }

    #[test]
    fn bases_are_orthonormal() {
        let basis = lambda2_basis();
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((inner(&basis[i], &basis[j]) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn star_eigenspaces() {
        for s in &S_PLUS {
            assert_eq!(star(s), *s);
        }
        for s in &S_MINUS {
            assert_eq!(star(s), scale(s, -1.0));
        }
        let w = wedge(&[1.0, 2.0, -0.5, 0.3], &[0.2, -1.0, 0.7, 1.1]);
        assert_eq!(star(&star(&w)), w);
    }

    #[test]
    fn inner_product_normalization() {
        let x = [1.0, 2.0, 0.0, -1.0];
        let y = [0.5, 0.0, 1.0, 2.0];
        let z = [0.0, 1.0, 1.0, 0.0];
        let t = [3.0, -1.0, 0.0, 0.5];
        let expected = 0.5 * (dot4(&x, &z) * dot4(&y, &t) - dot4(&x, &t) * dot4(&y, &z));
        assert!((inner(&wedge(&x, &y), &wedge(&z, &t)) - expected).abs() < 1e-14);
    }

    #[test]
    fn k_of_s1_maps_e1_to_e2() {
        let k = k_sigma(&[1.0, 0.0, 0.0], &unit(0));
        assert_eq!(k, unit(1));
        // defining identity on all frame pairs
        for y in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
            for a in 0..4 {
                for b in 0..4 {
                    let lhs = dot4(&k_sigma(&y, &unit(a)), &unit(b));
                    let rhs = 2.0 * inner(&from_minus(&y), &wedge(&unit(a), &unit(b)));
                    assert!((lhs - rhs).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn k_sigma_is_orthogonal_complex_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let y = random_unit3(&mut rng);
            let x = random_vec4(&mut rng);
            let w = random_vec4(&mut rng);
            let kkx = k_sigma(&y, &k_sigma(&y, &x));
            for i in 0..4 {
                assert!((kkx[i] + x[i]).abs() < 1e-13);
            }
            assert!(dot4(&k_sigma(&y, &x), &x).abs() < 1e-13);
            let lhs = dot4(&k_sigma(&y, &x), &k_sigma(&y, &w));
            assert!((lhs - dot4(&x, &w)).abs() < 1e-13);
            // the 2-vector 2σ is dual to the fundamental form of K_σ
            let form = dot4(&k_sigma(&y, &x), &w);
            assert!((form - 2.0 * inner(&from_minus(&y), &wedge(&x, &w))).abs() < 1e-13);
        }
    }

    #[test]
    fn k_sigma_reverses_orientation() {
        // K_σ is compatible with the opposite orientation: the frame
        // (X, K X, Y, K Y) is negatively oriented.
        let y = [0.3, -0.5, (1.0f64 - 0.34).sqrt()];
        let x = unit(0);
        let kx = k_sigma(&y, &x);
        // pick Y orthogonal to X and KX
        let mut v = unit(2);
        for b in [x, kx] {
            let c = dot4(&v, &b);
            for i in 0..4 {
                v[i] -= c * b[i];
            }
        }
        let kv = k_sigma(&y, &v);
        let m = vec![x.to_vec(), kx.to_vec(), v.to_vec(), kv.to_vec()];
        assert!(crate::linalg::determinant(&m) < 0.0);
    }

    #[test]
    fn cross_product_of_basis() {
        assert_eq!(cross(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), [0.0, 0.0, 1.0]);
        assert!(residual_2_6c(&[0.6, 0.8, 0.0], &[0.6, 0.8, 0.0]) < 1e-15);
    }

    #[test]
    fn identities_2_5_2_6_2_6c() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let curv = generic_curvature(&mut rng);
            let a = wedge(&random_vec4(&mut rng), &random_vec4(&mut rng));
            let a = add(&a, &wedge(&random_vec4(&mut rng), &random_vec4(&mut rng)));
            let b = random_unit3(&mut rng);
            let c = random_unit3(&mut rng);
            assert!(residual_2_5(&curv, &a, &b, &c) < 1e-12);

            let y = random_unit3(&mut rng);
            let v0 = random_unit3(&mut rng);
            let d = y[0] * v0[0] + y[1] * v0[1] + y[2] * v0[2];
            let v = [v0[0] - d * y[0], v0[1] - d * y[1], v0[2] - d * y[2]];
            assert!(residual_2_6(&y, &v, &random_vec4(&mut rng), &random_vec4(&mut rng)) < 1e-12);
            assert!(residual_2_6c(&y, &random_unit3(&mut rng)) < 1e-12);
        }
    }

    #[test]
    fn constant_curvature_operator_is_scalar() {
        let c = FrameCurvature::constant(1.5);
        let m = c.op_matrix();
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { 3.0 } else { 0.0 };
                assert!((m[i][j] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sigma_point_normalization() {
        let s = SigmaPoint::new(vec![0.0; 4], [1.0 + 1e-9, 0.0, 0.0]).unwrap();
        assert!((s.y[0] - 1.0).abs() < 1e-15);
        assert!(SigmaPoint::new(vec![0.0; 4], [2.0, 0.0, 0.0]).is_err());
        let t = SigmaPoint::new(vec![1.0; 4], [0.0, 1.0, 0.0]).unwrap();
        assert!(s.cross(&t).is_err());
        let u = SigmaPoint::new(vec![0.0; 4], [0.0, 1.0, 0.0]).unwrap();
        assert_eq!(s.cross(&u).unwrap(), [0.0, 0.0, 1.0]);
    }
}
