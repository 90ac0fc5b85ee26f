//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients of a scalar field at a point for
//! every multi-index of total degree `<= order`. Coefficients are laid out in
//! graded order (all degree-0 terms, then degree 1, ...), so truncating a jet
//! to a lower order is a prefix slice. Binary operations between jets of
//! different orders produce a jet of the smaller order.
//!
//! Differentiation ([`Jet::derivative`]) is exact and lowers the order by one;
//! this is what lets the chart machinery compute Christoffel symbols, curvature
//! and covariant derivatives of curvature from a single seeded evaluation.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Highest truncation order supported by the precomputed index tables.
pub const MAX_ORDER: usize = 6;
/// Highest number of independent variables.
pub const MAX_DIM: usize = 6;

/// Index tables for one dimension, covering all orders up to [`MAX_ORDER`].
pub struct JetSpace {
    dim: usize,
    /// Multi-indices in graded order.
    indices: Vec<[u8; MAX_DIM]>,
    /// `len_upto[k]` = number of multi-indices of degree <= k.
    len_upto: Vec<usize>,
    /// Product table `(i, j, k)` with `alpha_i + alpha_j = alpha_k`, sorted by
    /// degree of `k`.
    mul: Vec<(u32, u32, u32)>,
    /// `mul_upto[k]` = number of product triples whose result degree is <= k.
    mul_upto: Vec<usize>,
    /// `deriv[var][p] = (q, factor)`: coefficient p of the derivative is
    /// `factor * c[q]`. Defined for every p of degree < MAX_ORDER.
    deriv: Vec<Vec<(u32, f64)>>,
    /// `alpha!` for each multi-index.
    factorial: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> usize {
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Number of multi-indices of degree <= `order` in `dim` variables.
pub fn coeff_count(dim: usize, order: usize) -> usize {
    binomial(dim + order, order)
}

impl JetSpace {
    fn build(dim: usize) -> Self {
        let mut indices: Vec<[u8; MAX_DIM]> = Vec::new();
        let mut len_upto = Vec::with_capacity(MAX_ORDER + 1);
        for deg in 0..=MAX_ORDER {
            let mut cur = [0u8; MAX_DIM];
            push_degree(dim, 0, deg, &mut cur, &mut indices);
            len_upto.push(indices.len());
        }
        let lookup: HashMap<[u8; MAX_DIM], usize> = indices.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let position = |alpha: &[u8; MAX_DIM]| lookup.get(alpha).copied();
        let degree = |alpha: &[u8; MAX_DIM]| alpha.iter().map(|&v| v as usize).sum::<usize>();

        let mut mul = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if degree(a) + degree(b) > MAX_ORDER {
                    continue;
                }
                let mut c = [0u8; MAX_DIM];
                for v in 0..MAX_DIM {
                    c[v] = a[v] + b[v];
                }
                let k = position(&c).expect("sum index present");
                mul.push((i as u32, j as u32, k as u32));
            }
        }
        mul.sort_by_key(|&(_, _, k)| (degree(&indices[k as usize]), k));
        let mut mul_upto = Vec::with_capacity(MAX_ORDER + 1);
        for deg in 0..=MAX_ORDER {
            mul_upto.push(
                mul.iter()
                    .filter(|&&(_, _, k)| degree(&indices[k as usize]) <= deg)
                    .count(),
            );
        }

        let mut deriv = Vec::with_capacity(dim);
        for var in 0..dim {
            let n = len_upto[MAX_ORDER - 1];
            let mut table = Vec::with_capacity(n);
            for alpha in indices.iter().take(n) {
                let mut up = *alpha;
                up[var] += 1;
                let q = position(&up).expect("raised index present");
                table.push((q as u32, f64::from(up[var])));
            }
            deriv.push(table);
        }

        let factorial = indices
            .iter()
            .map(|a| {
                a.iter()
                    .map(|&v| (1..=v as u32).map(f64::from).product::<f64>())
                    .product()
            })
            .collect();

        Self {
            dim,
            indices,
            len_upto,
            mul,
            mul_upto,
            deriv,
            factorial,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn index_of(&self, alpha: &[usize]) -> Option<usize> {
        if alpha.len() != self.dim {
            return None;
        }
        let mut key = [0u8; MAX_DIM];
        for (k, &a) in key.iter_mut().zip(alpha) {
            *k = u8::try_from(a).ok()?;
        }
        let deg: usize = alpha.iter().sum();
        if deg > MAX_ORDER {
            return None;
        }
        let start = if deg == 0 { 0 } else { self.len_upto[deg - 1] };
        (start..self.len_upto[deg]).find(|&p| self.indices[p] == key)
    }
}

fn push_degree(dim: usize, var: usize, remaining: usize, cur: &mut [u8; MAX_DIM], out: &mut Vec<[u8; MAX_DIM]>) {
    if var + 1 == dim || dim == 0 {
        if dim > 0 {
            cur[var] = remaining as u8;
            out.push(*cur);
            cur[var] = 0;
        } else if remaining == 0 {
            out.push(*cur);
        }
        return;
    }
    for take in (0..=remaining).rev() {
        cur[var] = take as u8;
        push_degree(dim, var + 1, remaining - take, cur, out);
    }
    cur[var] = 0;
}

/// Shared index tables for `dim` variables.
pub fn space(dim: usize) -> &'static JetSpace {
    static SPACES: [OnceLock<JetSpace>; MAX_DIM + 1] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    assert!(dim <= MAX_DIM, "jet dimension {dim} exceeds {MAX_DIM}");
    SPACES[dim].get_or_init(|| JetSpace::build(dim))
}

/// Truncated Taylor expansion of a scalar field.
#[derive(Clone)]
pub struct Jet {
    space: &'static JetSpace,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.space.dim)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.space.dim == other.space.dim && self.order == other.order && self.coeffs == other.coeffs
    }
}

impl Jet {
    fn check_order(order: usize) -> Result<()> {
        if order > MAX_ORDER {
            return Err(Error::JetOrder(format!("order {order} exceeds maximum {MAX_ORDER}")));
        }
        Ok(())
    }

    /// Constant jet.
    pub fn constant(dim: usize, order: usize, value: f64) -> Result<Self> {
        Self::check_order(order)?;
        if dim > MAX_DIM {
            return Err(Error::JetOrder(format!("dimension {dim} exceeds {MAX_DIM}")));
        }
        let mut coeffs = vec![0.0; coeff_count(dim, order)];
        coeffs[0] = value;
        Ok(Self {
            space: space(dim),
            order,
            coeffs,
        })
    }

    /// Jet of the coordinate function `x_var` at `point`.
    pub fn seed(point: &[f64], var: usize, order: usize) -> Result<Self> {
        let dim = point.len();
        if var >= dim {
            return Err(Error::JetOrder(format!("variable index {var} out of range for dimension {dim}")));
        }
        if order < 1 {
            return Err(Error::JetOrder("seed order must be at least 1".into()));
        }
        let mut j = Self::constant(dim, order, point[var])?;
        // degree-1 indices are stored in variable order
        j.coeffs[1 + var] = 1.0;
        Ok(j)
    }

    /// All coordinate jets of `point`.
    pub fn seed_all(point: &[f64], order: usize) -> Result<Vec<Self>> {
        (0..point.len()).map(|v| Self::seed(point, v, order)).collect()
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// A constant with the same dimension and order as `self`.
    pub fn constant_like(&self, value: f64) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Self {
            space: self.space,
            order: self.order,
            coeffs,
        }
    }

    pub fn zero_like(&self) -> Self {
        self.constant_like(0.0)
    }

    /// Drop all terms above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self {
            space: self.space,
            order,
            coeffs: self.coeffs[..self.space.len_upto[order]].to_vec(),
        }
    }

    /// Mixed partial derivative `d^alpha f` at the expansion point.
    pub fn partial(&self, alpha: &[usize]) -> Result<f64> {
        let deg: usize = alpha.iter().sum();
        if deg > self.order {
            return Err(Error::JetOrder(format!(
                "derivative of degree {deg} requested from a jet of order {}",
                self.order
            )));
        }
        let p = self
            .space
            .index_of(alpha)
            .ok_or_else(|| Error::JetOrder(format!("multi-index {alpha:?} invalid for dimension {}", self.dim())))?;
        Ok(self.coeffs[p] * self.space.factorial[p])
    }

    /// First partial derivative along `var`.
    pub fn d(&self, var: usize) -> f64 {
        if self.order == 0 {
            return f64::NAN;
        }
        self.coeffs[1 + var]
    }

    /// Exact derivative field `d f / d x_var` as a jet of order `order - 1`.
    pub fn derivative(&self, var: usize) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::JetOrder("cannot differentiate an order-0 jet".into()));
        }
        if var >= self.dim() {
            return Err(Error::JetOrder(format!("variable index {var} out of range")));
        }
        Ok(self.derivative_unchecked(var))
    }

    pub(crate) fn derivative_unchecked(&self, var: usize) -> Self {
        let order = self.order - 1;
        let n = self.space.len_upto[order];
        let table = &self.space.deriv[var];
        let coeffs = (0..n)
            .map(|p| {
                let (q, f) = table[p];
                f * self.coeffs[q as usize]
            })
            .collect();
        Self {
            space: self.space,
            order,
            coeffs,
        }
    }

    fn assert_compatible(&self, other: &Self) {
        assert_eq!(
            self.space.dim, other.space.dim,
            "jet dimension mismatch ({} vs {})",
            self.space.dim, other.space.dim
        );
    }

    /// `self += a * b`, truncated to the smallest order involved.
    pub fn add_mul(&mut self, a: &Jet, b: &Jet) {
        self.assert_compatible(a);
        self.assert_compatible(b);
        let order = self.order.min(a.order).min(b.order);
        if order < self.order {
            self.coeffs.truncate(self.space.len_upto[order]);
            self.order = order;
        }
        let end = self.space.mul_upto[order];
        for &(i, j, k) in &self.space.mul[..end] {
            self.coeffs[k as usize] += a.coeffs[i as usize] * b.coeffs[j as usize];
        }
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let mut out = Jet {
            space: self.space,
            order,
            coeffs: vec![0.0; self.space.len_upto[order]],
        };
        out.add_mul(self, other);
        out
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        self.assert_compatible(other);
        let order = self.order.min(other.order);
        let n = self.space.len_upto[order];
        Jet {
            space: self.space,
            order,
            coeffs: (0..n).map(|p| f(self.coeffs[p], other.coeffs[p])).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            space: self.space,
            order: self.order,
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
        }
    }

    /// Compose with a univariate function given its Taylor coefficients
    /// `f(a0 + d) = sum taylor[k] d^k` about the value part `a0`.
    fn compose(&self, taylor: &[f64]) -> Jet {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let k = self.order;
        let mut acc = self.constant_like(taylor[k]);
        for c in taylor[..k].iter().rev() {
            acc = acc.mul_jet(&delta);
            acc.coeffs[0] += c;
        }
        acc
    }

    /// `1 / self`; errors when the value part is zero.
    pub fn try_recip(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 == 0.0 || !a0.is_finite() {
            return Err(Error::Singular(format!("reciprocal of jet with value part {a0}")));
        }
        Ok(self.recip_unchecked())
    }

    fn recip_unchecked(&self) -> Jet {
        let a0 = self.value();
        let mut taylor = Vec::with_capacity(self.order + 1);
        let mut c = 1.0 / a0;
        for _ in 0..=self.order {
            taylor.push(c);
            c *= -1.0 / a0;
        }
        self.compose(&taylor)
    }

    /// `sqrt(self)`; errors unless the value part is positive.
    pub fn try_sqrt(&self) -> Result<Jet> {
        let a0 = self.value();
        if !(a0 > 0.0) || !a0.is_finite() {
            return Err(Error::Singular(format!("square root of jet with value part {a0}")));
        }
        Ok(self.sqrt_unchecked())
    }

    fn sqrt_unchecked(&self) -> Jet {
        let a0 = self.value();
        let root = a0.sqrt();
        // binom(1/2, k) a0^(1/2 - k)
        let mut taylor = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        let mut pow = root;
        for k in 0..=self.order {
            taylor.push(binom * pow);
            binom *= (0.5 - k as f64) / (k as f64 + 1.0);
            pow /= a0;
        }
        self.compose(&taylor)
    }

    /// `self / other`; errors when `other` has zero value part.
    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        Ok(self.mul_jet(&other.try_recip()?))
    }

    /// Integer power by repeated multiplication.
    pub fn powi(&self, n: u32) -> Jet {
        let mut acc = self.constant_like(1.0);
        for _ in 0..n {
            acc = acc.mul_jet(self);
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

macro_rules! jet_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                $body(self, rhs)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                $body(&self, &rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                $body(&self, rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                $body(self, &rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a: &Jet, b: &Jet| a.zip_with(b, |x, y| x + y));
jet_binop!(Sub, sub, |a: &Jet, b: &Jet| a.zip_with(b, |x, y| x - y));
jet_binop!(Mul, mul, |a: &Jet, b: &Jet| a.mul_jet(b));
jet_binop!(Div, div, |a: &Jet, b: &Jet| a.mul_jet(&b.recip_unchecked()));

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -self.clone()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.assert_compatible(rhs);
        if rhs.order < self.order {
            self.coeffs.truncate(self.space.len_upto[rhs.order]);
            self.order = rhs.order;
        }
        for (c, r) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *c += r;
        }
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        self.assert_compatible(rhs);
        if rhs.order < self.order {
            self.coeffs.truncate(self.space.len_upto[rhs.order]);
            self.order = rhs.order;
        }
        for (c, r) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *c -= r;
        }
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, rhs: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
    }
}

/// Field operations shared by `f64` and [`Jet`], so that metric formulas and
/// bivector algebra can be written once and evaluated either pointwise or with
/// derivatives attached.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn constant_like(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    /// Non-checked reciprocal; produces non-finite parts on a zero value.
    fn recip(&self) -> Self;
    /// Non-checked square root; produces NaN on a non-positive value.
    fn sqrt(&self) -> Self;

    fn zero_like(&self) -> Self {
        self.constant_like(0.0)
    }
    fn one_like(&self) -> Self {
        self.constant_like(1.0)
    }
}

impl Scalar for f64 {
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
}

impl Scalar for Jet {
    fn constant_like(&self, c: f64) -> Self {
        Jet::constant_like(self, c)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn recip(&self) -> Self {
        if self.value() == 0.0 {
            let mut j = self.clone();
            j.coeffs.iter_mut().for_each(|c| *c = f64::NAN);
            return j;
        }
        self.recip_unchecked()
    }
    fn sqrt(&self) -> Self {
        if !(self.value() > 0.0) {
            let mut j = self.clone();
            j.coeffs.iter_mut().for_each(|c| *c = f64::NAN);
            return j;
        }
        self.sqrt_unchecked()
    }
}
