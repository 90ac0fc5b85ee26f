//! Closed-form statements about the twistor space, checked against the chart
//! machinery.
//!
//! Every check samples points `σ` of the twistor space, evaluates the closed
//! form and the chart computation independently, and reports the largest
//! residual `|l - r| / (1 + max(|l|, |r|))` over all samples.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalogue::{self, ManifoldSpec};
use crate::error::{Error, Result};
use crate::frames::{self, Bivector, Vec4};
use crate::hermitian::{self, HermitianChart};
use crate::jet::Jet;
use crate::linalg;
use crate::riemann::idx3;
use crate::twistor::{Tangent, TwistorChart, TwistorPoint, TWISTOR_ORDER};

/// Identifiers accepted by [`run`], in suite order.
pub const THEOREMS: [&str; 9] = [
    "prop1",
    "lemma1",
    "lemma2",
    "lemma3",
    "prop2",
    "prop3",
    "nijenhuis_chern",
    "prop4",
    "aux",
];

const FIBRE_STREAM: u64 = 0x5eed_f1b2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

/// Whether a check expects its statistic to vanish or to be bounded away
/// from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Vanish,
    Exceed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Offender {
    pub sample: usize,
    pub point: Vec<f64>,
    pub sigma: [f64; 3],
    /// Chart vectors at which the statistic was attained.
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectReport {
    pub theorem: String,
    pub check: String,
    pub manifold: String,
    pub t: f64,
    pub n: Option<u8>,
    pub samples: usize,
    pub seed: u64,
    pub expect: Expect,
    pub max_abs_residual: f64,
    pub tolerance: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub worst: Option<Offender>,
    /// The statement is quoted from elsewhere rather than derived here.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub external: bool,
}

impl DefectReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

pub fn verdict(expect: Expect, value: f64, tol: f64, threshold: f64) -> Verdict {
    if value.is_nan() {
        return Verdict::Fail;
    }
    match expect {
        Expect::Vanish if value < tol => Verdict::Pass,
        Expect::Vanish if value > threshold => Verdict::Fail,
        Expect::Exceed if value > threshold => Verdict::Pass,
        Expect::Exceed if value < tol => Verdict::Fail,
        _ => Verdict::Warn,
    }
}

/// Tolerance overrides keyed by `theorem` or `theorem.check`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Tolerances {
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let theorem = key.split('.').next().unwrap_or_default();
        if !THEOREMS.contains(&theorem) {
            return Err(Error::UnknownTheorem(key.to_string()));
        }
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidArgument(format!("tolerance for {key} must be positive, got {value}")));
        }
        self.0.insert(key.to_string(), value);
        Ok(())
    }

    pub fn get(&self, theorem: &str, check: &str, default: f64) -> f64 {
        self.0
            .get(&format!("{theorem}.{check}"))
            .or_else(|| self.0.get(theorem))
            .copied()
            .unwrap_or(default)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One theorem evaluation: a base manifold, `t`, `n` and a sampling plan.
#[derive(Debug, Clone, Copy)]
pub struct Job<'a> {
    pub spec: &'a ManifoldSpec,
    pub t: f64,
    pub n: u8,
    pub samples: usize,
    pub seed: u64,
    pub tol: &'a Tolerances,
}

impl Job<'_> {
    fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidArgument(format!("t = {} must be positive", self.t)));
        }
        if self.n != 1 && self.n != 2 {
            return Err(Error::InvalidArgument(format!("n = {} must be 1 or 2", self.n)));
        }
        if self.samples == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        Ok(())
    }

    fn with_n(&self, n: u8) -> Self {
        Self { n, ..*self }
    }
}

/// A sampled point of the twistor space.
#[derive(Debug, Clone)]
pub struct Sample {
    pub index: usize,
    pub point: Vec<f64>,
    pub y: [f64; 3],
}

pub fn samples(spec: &ManifoldSpec, count: usize, seed: u64) -> Result<Vec<Sample>> {
    let points = catalogue::sample_points(spec, count, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(FIBRE_STREAM);
    Ok(points
        .into_iter()
        .enumerate()
        .map(|(index, point)| Sample {
            index,
            point,
            y: TwistorPoint::random_unit_y(&mut rng),
        })
        .collect())
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// `t` values swept by default: `{0.5, 1, 2}` plus `6/s` (`s > 0`) or
/// `-12/s` (`s < 0`) when the scalar curvature is constant.
pub fn t_sweep(spec: &ManifoldSpec) -> Vec<f64> {
    let mut ts = vec![0.5, 1.0, 2.0];
    if let Some(s) = spec.truth.scalar {
        let special = if s > 0.0 {
            Some(6.0 / s)
        } else if s < 0.0 {
            Some(-12.0 / s)
        } else {
            None
        };
        if let Some(v) = special {
            if ts.iter().all(|t| (t - v).abs() > 1e-12) {
                ts.push(v);
            }
        }
    }
    ts
}

pub fn rel(l: f64, r: f64) -> f64 {
    let d = (l - r).abs() / (1.0 + l.abs().max(r.abs()));
    if d.is_nan() {
        f64::INFINITY
    } else {
        d
    }
}

pub fn rel_vec(l: &[f64], r: &[f64]) -> f64 {
    l.iter().zip(r).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max)
}

/// Largest value seen by one check at one sample, with its witnesses.
#[derive(Debug, Clone, Default)]
struct Measure {
    value: f64,
    vectors: Vec<Vec<f64>>,
}

impl Measure {
    fn keep(&mut self, value: f64, vectors: impl FnOnce() -> Vec<Vec<f64>>) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        if value > self.value || (self.vectors.is_empty() && value >= self.value) {
            self.value = value;
            self.vectors = vectors();
        }
    }
}

struct Check {
    name: String,
    expect: Expect,
    tol: f64,
    threshold: f64,
}

impl Check {
    fn identity(name: &str, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            expect: Expect::Vanish,
            tol,
            threshold: tol,
        }
    }

    fn two_sided(name: &str, expect: Expect, tol: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            expect,
            tol,
            threshold,
        }
    }
}

fn over_samples<T: Send>(job: &Job, f: impl Fn(&Sample, &mut ChaCha8Rng) -> Result<T> + Sync) -> Result<(Vec<Sample>, Vec<T>)> {
    job.validate()?;
    let samples = samples(job.spec, job.samples, job.seed)?;
    let out = samples
        .par_iter()
        .map(|s| f(s, &mut sample_rng(job.seed, s.index)))
        .collect::<Result<Vec<T>>>()?;
    Ok((samples, out))
}

fn report(job: &Job, theorem: &str, n: Option<u8>, check: &Check, value: f64, worst: Option<Offender>) -> DefectReport {
    let tol = job.tol.get(theorem, &check.name, check.tol);
    let threshold = if check.threshold == check.tol { tol } else { check.threshold.max(tol) };
    DefectReport {
        theorem: theorem.to_string(),
        check: check.name.clone(),
        manifold: job.spec.name().to_string(),
        t: job.t,
        n,
        samples: job.samples,
        seed: job.seed,
        expect: check.expect,
        max_abs_residual: value,
        tolerance: tol,
        threshold,
        verdict: verdict(check.expect, value, tol, threshold),
        worst,
        external: false,
    }
}

fn finish(job: &Job, theorem: &str, n: Option<u8>, checks: &[Check], samples: &[Sample], per: &[Vec<Measure>]) -> Vec<DefectReport> {
    checks
        .iter()
        .enumerate()
        .map(|(i, check)| {
            let mut best: Option<(f64, usize)> = None;
            for (k, m) in per.iter().enumerate() {
                let v = m[i].value;
                if best.is_none_or(|(b, _)| v > b) {
                    best = Some((v, k));
                }
            }
            let (value, k) = best.unwrap_or((0.0, 0));
            let s = &samples[k];
            let worst = Offender {
                sample: s.index,
                point: s.point.clone(),
                sigma: s.y,
                vectors: per[k][i].vectors.clone(),
            };
            report(job, theorem, n, check, value, Some(worst))
        })
        .collect()
}

/// Variance statistic for constancy checks; the offender is the value
/// farthest from the mean.
fn spread_report(job: &Job, theorem: &str, check: &Check, samples: &[Sample], values: &[Vec<(f64, Vec<f64>)>]) -> DefectReport {
    let all: Vec<f64> = values.iter().flatten().map(|(v, _)| *v).collect();
    let count = all.len().max(1) as f64;
    let mean = all.iter().sum::<f64>() / count;
    let var = all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    let mut worst = None;
    let mut far = -1.0;
    for (k, vs) in values.iter().enumerate() {
        for (v, e) in vs {
            if (v - mean).abs() > far {
                far = (v - mean).abs();
                worst = Some(Offender {
                    sample: samples[k].index,
                    point: samples[k].point.clone(),
                    sigma: samples[k].y,
                    vectors: vec![e.clone()],
                });
            }
        }
    }
    report(job, theorem, Some(job.n), check, var, worst)
}

fn twistor_point(job: &Job, s: &Sample, order: usize) -> Result<TwistorPoint> {
    twistor_point_at(job, s, job.t, order)
}

fn twistor_point_at(job: &Job, s: &Sample, t: f64, order: usize) -> Result<TwistorPoint> {
    TwistorChart::new(job.spec.metric.as_ref(), t)?.with_order(order).at(&s.point, s.y)
}

fn hermitian_chart(tp: &TwistorPoint, n: u8) -> Result<HermitianChart> {
    HermitianChart::new(tp.h.clone(), tp.j(n))
}

fn unit6(i: usize) -> Vec<f64> {
    let mut e = vec![0.0; 6];
    e[i] = 1.0;
    e
}

fn unit4(i: usize) -> Vec4 {
    let mut e = [0.0; 4];
    e[i] = 1.0;
    e
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale3(a: &[f64; 3], c: f64) -> [f64; 3] {
    [a[0] * c, a[1] * c, a[2] * c]
}

fn add3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale6(a: &[f64; 6], c: f64) -> [f64; 6] {
    std::array::from_fn(|i| a[i] * c)
}

fn add6(a: &[f64], b: &[f64]) -> [f64; 6] {
    std::array::from_fn(|i| a[i] + b[i])
}

fn sub6(a: &[f64], b: &[f64]) -> [f64; 6] {
    std::array::from_fn(|i| a[i] - b[i])
}

/// Chart basis vectors split into base and vertical parts.
fn chart_basis(tp: &TwistorPoint) -> Vec<Tangent> {
    (0..6)
        .map(|i| {
            let mut c = [0.0; 6];
            c[i] = 1.0;
            tp.decompose(&c)
        })
        .collect()
}

/// A `g`-orthonormal basis of the plane orthogonal to `y` in `Λ²₋`, oriented
/// so that the first vector crossed with the second is `y`... up to the
/// ordering returned by [`frames::cross`].
fn fibre_basis(y: &[f64; 3]) -> [[f64; 3]; 2] {
    let k = (0..3)
        .min_by(|&a, &b| y[a].abs().partial_cmp(&y[b].abs()).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let d = dot3(&e, y);
    let mut u = [e[0] - d * y[0], e[1] - d * y[1], e[2] - d * y[2]];
    let nrm = dot3(&u, &u).sqrt();
    u = scale3(&u, 1.0 / nrm);
    let v = frames::cross(y, &u);
    [u, v]
}

fn random_unit_base(tp: &TwistorPoint, rng: &mut impl Rng) -> [f64; 4] {
    let x = tp.random_base_vector(rng);
    let n = tp.g_base(&x, &x).sqrt();
    [x[0] / n, x[1] / n, x[2] / n, x[3] / n]
}

fn random_matrix4(rng: &mut impl Rng) -> [[f64; 4]; 4] {
    std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
}

/// Affine base field `Y(x) = y0 + M (x - p)` as chart jets.
fn affine_field(tp: &TwistorPoint, y0: &[f64; 4], m: &[[f64; 4]; 4]) -> Vec<Jet> {
    let zero = tp.seeds[0].zero_like();
    (0..4)
        .map(|i| {
            let mut acc = zero.constant_like(y0[i]);
            for j in 0..4 {
                let dx = tp.seeds[j].clone() - tp.z[j];
                acc += &dx.scale(m[i][j]);
            }
            acc
        })
        .collect()
}

/// `∇_X Y` at the base point for the affine field `Y = y0 + M(x - p)`.
fn base_covariant(tp: &TwistorPoint, x: &[f64; 4], y0: &[f64; 4], m: &[[f64; 4]; 4]) -> [f64; 4] {
    let gamma = &tp.base.christoffel;
    std::array::from_fn(|k| {
        let mut acc = 0.0;
        for j in 0..4 {
            acc += m[k][j] * x[j];
            for i in 0..4 {
                acc += gamma[idx3(4, k, i, j)] * x[i] * y0[j];
            }
        }
        acc
    })
}

fn constant_field(tp: &TwistorPoint, v: &[f64]) -> Vec<Jet> {
    let zero = tp.seeds[0].zero_like();
    v.iter().map(|c| zero.constant_like(*c)).collect()
}

/// Chart bracket `[U, V]` of two vector fields at the point.
fn bracket(u: &[Jet], v: &[Jet]) -> [f64; 6] {
    std::array::from_fn(|c| {
        let mut acc = 0.0;
        for b in 0..6 {
            acc += u[b].value() * v[c].d(b) - v[b].value() * u[c].d(b);
        }
        acc
    })
}

fn to6(v: &[f64]) -> [f64; 6] {
    std::array::from_fn(|i| v[i])
}

fn values6(v: &[Jet]) -> [f64; 6] {
    std::array::from_fn(|i| v[i].value())
}

/// `(A, B)` vertical vectors of the Chern connection splitting, as `Λ²₋`
/// components.
fn split_vectors(tp: &TwistorPoint, x: &[f64; 4], y: &[f64; 4]) -> ([f64; 3], [f64; 3]) {
    let t = tp.t;
    let kx = tp.k_sigma(x);
    let ky = tp.k_sigma(y);
    let sym = frames::minus_components(&frames::add(&tp.wedge(&kx, y), &tp.wedge(x, &ky)));
    let a = add3(
        &scale3(&tp.r_on_sigma(&frames::add(&tp.wedge(x, y), &tp.wedge(&kx, &ky))), 0.25),
        &scale3(&sym, -0.25 / t),
    );
    let b = add3(
        &scale3(&tp.sigma_cross(&tp.r_on_sigma(&frames::sub(&tp.wedge(&kx, y), &tp.wedge(x, &ky)))), 0.25),
        &scale3(&sym, 0.25 / t),
    );
    (a, b)
}

/// Closed form of the first Chern form: `2πγ(E,F)`.
pub fn first_chern_closed(tp: &TwistorPoint, n: u8, e: &Tangent, f: &Tangent) -> f64 {
    let factor = if n == 1 { 2.0 } else { 0.0 };
    let rs = tp.curvature().rcal(&tp.sigma_bivector());
    factor * (frames::inner(&rs, &tp.wedge(&e.x, &f.x)) + dot3(&e.a, &tp.sigma_cross(&f.a)))
}

/// Closed form of the `*`-Ricci tensor `ρ*(E, F)` of `(h_t, J_n)`.
pub fn rho_star_closed(tp: &TwistorPoint, n: u8, e: &Tangent, f: &Tangent) -> Result<f64> {
    let t = tp.t;
    let curv = tp.curvature();
    let y = tp.y;
    let sg = if n == 1 { 1.0 } else { -1.0 };
    let x = tp.to_frame(&e.x);
    let yv = tp.to_frame(&f.x);
    let (a, b) = (e.a, f.a);
    let sigma = frames::from_minus(&y);
    let k = |v: &Vec4| frames::k_sigma(&y, v);
    let rs = |w: &Bivector| frames::minus_components(&curv.apply(w, &sigma));
    let ky = k(&yv);
    let rsig = rs(&sigma);
    let rcal_sigma = curv.rcal(&sigma);

    let mut total = (1.0 + sg) * frames::inner(&rcal_sigma, &frames::wedge(&x, &ky));
    total -= 0.5 * t * dot3(&rs(&frames::wedge(&x, &ky)), &rsig);
    let mut tr = 0.0;
    for i in 0..4 {
        let z = unit4(i);
        tr += dot3(&rs(&frames::wedge(&x, &z)), &rs(&frames::wedge(&k(&z), &ky)));
    }
    total += 0.25 * t * tr;
    let mut tr = 0.0;
    for c in fibre_basis(&y) {
        let rc = curv.apply_vec(&frames::from_minus(&c), &x);
        let rsc = curv.apply_vec(&frames::from_minus(&frames::cross(&y, &c)), &ky);
        tr += frames::dot4(&rc, &rsc);
    }
    total += 0.25 * t * sg * tr;
    total -= 0.5 * t * sg * frames::inner(&curv.nabla_rcal(&x, &sigma)?, &frames::from_minus(&b));
    total += 0.5 * t * frames::inner(&curv.nabla_rcal(&ky, &sigma)?, &frames::from_minus(&frames::cross(&y, &a)));
    total += (1.0 + sg * t * frames::inner(&rcal_sigma, &sigma)) * dot3(&a, &b);
    let mut tr = 0.0;
    let rsa = frames::from_minus(&frames::cross(&y, &a));
    let rb = frames::from_minus(&b);
    for i in 0..4 {
        let z = unit4(i);
        tr += frames::dot4(&curv.apply_vec(&rsa, &k(&z)), &curv.apply_vec(&rb, &z));
    }
    total += sg * t * t * 0.25 * tr;
    Ok(total)
}

/// Closed form of the Chern holomorphic sectional curvature on a base of
/// constant curvature `kappa`, for a unit `E`.
pub fn hol_sect_closed(kappa: f64, t: f64, n: u8, x2: f64, a2: f64) -> f64 {
    let sg = if n == 1 { 1.0 } else { -1.0 };
    kappa * x2 * x2 + t * a2 * a2 + 0.25 * sg * (3.0 + sg + 4.0 * kappa * t) * x2 * a2
}

pub fn prop1_first_chern(job: &Job) -> Result<Vec<DefectReport>> {
    let checks = [Check::identity("first_chern", if job.n == 2 { 1e-7 } else { 1e-6 })];
    let (samples, per) = over_samples(job, |s, _| {
        let tp = twistor_point(job, s, TWISTOR_ORDER)?;
        let hc = hermitian_chart(&tp, job.n)?;
        let gamma4 = hc.chern().curvature(&hc.h)?.chern_trace(&hc.j);
        let basis = chart_basis(&tp);
        let mut m = Measure::default();
        for a in 0..6 {
            for b in a + 1..6 {
                let lhs = 0.5 * gamma4[a][b];
                let rhs = first_chern_closed(&tp, job.n, &basis[a], &basis[b]);
                m.keep(rel(lhs, rhs), || vec![unit6(a), unit6(b)]);
            }
        }
        Ok(vec![m])
    })?;
    Ok(finish(job, "prop1", Some(job.n), &checks, &samples, &per))
}

pub fn lemma1_chern_forms(job: &Job) -> Result<Vec<DefectReport>> {
    let us = [0.0, 0.5, 1.0];
    let checks: Vec<Check> = us.iter().map(|u| Check::identity(&format!("u={u}"), 1e-6)).collect();
    let (samples, per) = over_samples(job, |s, _| {
        let tp = twistor_point(job, s, TWISTOR_ORDER)?;
        let hc = hermitian_chart(&tp, job.n)?;
        let riem = hc.levi_civita().curvature(&hc.h)?;
        let phi = hc.phi();
        let psi = hc.psi(&riem);
        let ddo = hc.d_codiff_omega();
        let st = hc.s_tensor();
        us.iter()
            .map(|&u| {
                let gamma4 = hc.gauduchon_with(u, &st).curvature(&hc.h)?.chern_trace(&hc.j);
                let mut m = Measure::default();
                for a in 0..6 {
                    for b in 0..6 {
                        let lhs = 2.0 * gamma4[a][b];
                        let rhs = -phi[a][b] - 4.0 * psi[a][b] + 2.0 * u * ddo[a][b];
                        m.keep(rel(lhs, rhs), || vec![unit6(a), unit6(b)]);
                    }
                }
                Ok(m)
            })
            .collect()
    })?;
    Ok(finish(job, "lemma1", Some(job.n), &checks, &samples, &per))
}

pub fn lemma2_nabla_j(job: &Job) -> Result<Vec<DefectReport>> {
    let checks = [
        Check::identity("horizontal_horizontal_vertical", 1e-6),
        Check::identity("vertical_horizontal_horizontal", 1e-6),
        Check::identity("vanishing", 1e-7),
    ];
    let t = job.t;
    let sn = if job.n == 1 { -1.0 } else { 1.0 };
    let (samples, per) = over_samples(job, |s, rng| {
        let tp = twistor_point(job, s, TWISTOR_ORDER)?;
        let hc = hermitian_chart(&tp, job.n)?;
        let curv = tp.curvature();
        let mut ms = vec![Measure::default(), Measure::default(), Measure::default()];
        for _ in 0..3 {
            let x = tp.random_base_vector(rng);
            let y = tp.random_base_vector(rng);
            let a = tp.random_vertical(rng);
            let b = tp.random_vertical(rng);
            let c = tp.random_vertical(rng);
            let z = tp.random_base_vector(rng);
            let (xh, yh, zh) = (tp.lift(&x), tp.lift(&y), tp.lift(&z));
            let (av, bv, cv) = (tp.vertical(&a), tp.vertical(&b), tp.vertical(&c));
            let sa = frames::from_minus(&tp.sigma_cross(&a));
            let ky = tp.k_sigma(&y);
            let kx = tp.k_sigma(&x);

            let lhs = hc.inner(&hc.nabla_j_apply(&xh, &yh), &av);
            let rhs = 0.5
                * t
                * (sn * frames::inner(&curv.rcal(&frames::from_minus(&a)), &tp.wedge(&x, &y))
                    - frames::inner(&curv.rcal(&sa), &tp.wedge(&x, &ky)));
            ms[0].keep(rel(lhs, rhs), || vec![xh.to_vec(), yh.to_vec(), av.to_vec()]);

            let lhs = hc.inner(&hc.nabla_j_apply(&av, &xh), &yh);
            let rhs = 0.5 * t * frames::inner(&curv.rcal(&sa), &frames::add(&tp.wedge(&x, &ky), &tp.wedge(&kx, &y)))
                + 2.0 * frames::inner(&frames::from_minus(&a), &tp.wedge(&x, &y));
            ms[1].keep(rel(lhs, rhs), || vec![av.to_vec(), xh.to_vec(), yh.to_vec()]);

            let triples: [[&[f64; 6]; 3]; 5] = [
                [&xh, &yh, &zh],
                [&av, &bv, &xh],
                [&av, &xh, &bv],
                [&xh, &av, &bv],
                [&av, &bv, &cv],
            ];
            for [e, f, g] in triples {
                let v = hc.inner(&hc.nabla_j_apply(e, f), g);
                ms[2].keep(rel(v, 0.0), || vec![e.to_vec(), f.to_vec(), g.to_vec()]);
            }
        }
        Ok(ms)
    })?;
    Ok(finish(job, "lemma2", Some(job.n), &checks, &samples, &per))
}

pub fn lemma3_rho_star(job: &Job) -> Result<Vec<DefectReport>> {
    let checks = [Check::identity("rho_star", 1e-6)];
    let (samples, per) = over_samples(job, |s, _| {
        let tp = twistor_point(job, s, TWISTOR_ORDER)?;
        let hc = hermitian_chart(&tp, job.n)?;
        let riem = hc.levi_civita().curvature(&hc.h)?;
        let rho = hc.rho_star(&riem);
        let basis = chart_basis(&tp);
        let mut m = Measure::default();
        for a in 0..6 {
            for b in 0..6 {
                let rhs = rho_star_closed(&tp, job.n, &basis[a], &basis[b])?;
                m.keep(rel(rho[a][b], rhs), || vec![unit6(a), unit6(b)]);
            }
        }
        Ok(vec![m])
    })?;
    Ok(finish(job, "lemma3", Some(job.n), &checks, &samples, &per))
}

/// Whether the Chern curvature of `(h_t, J_n)` is expected to be of type (1,1).
pub fn expects_type11(spec: &ManifoldSpec, n: u8) -> bool {
    match n {
        1 => spec.truth.selfdual,
        _ => spec.truth.selfdual && spec.truth.einstein,
    }
}

pub fn prop2_type11(job: &Job) -> Result<Vec<DefectReport>> {
    let expect = if expects_type11(job.spec, job.n) { Expect::Vanish } else { Expect::Exceed };
    let checks = [Check::two_sided("type11", expect, 1e-6, 1e-3)];
    let (samples, per) = over_samples(job, |s, _| {
        let tp = twistor_point(job, s, TWISTOR_ORDER)?;
        let hc = hermitian_chart(&tp, job.n)?;
        let r = hc.chern().curvature(&hc.h)?;
        let mut m = Measure::default();
        m.keep(r.type11_defect(hc.h_values(), hc.j_values())?, Vec::new);
        Ok(vec![m])
    })?;
    Ok(finish(job, "prop2", Some(job.n), &checks, &samples, &per))
}

pub fn prop3_hol_sect(job: &Job) -> Result<Vec<DefectReport>> {
    let kappa = job.spec.truth.kappa;
    let mut checks = vec![Check::identity("horizontal", 1e-6)];
    if kappa.is_some() {
        checks.push(Check::identity("mixed", 1e-6));
    }
    let t = job.t;
    let (samples, per) = over_samples(job, |s, rng| {
        let tp = twistor_point(job, s, TWISTOR_ORDER)?;
        let hc = hermitian_chart(&tp, job.n)?;
        let r = hc.chern().curvature(&hc.h)?;
        let (hv, jv) = (hc.h_values(), hc.j_values());
        let mut ms = vec![Measure::default(); checks.len()];
        let mut values = Vec::new();
        for _ in 0..2 {
            let x = random_unit_base(&tp, rng);
            let xh = tp.lift(&x);
            let lhs = r.holomorphic_sectional(hv, jv, &xh)?;
            let xf = tp.to_frame(&x);
            let kx = frames::k_sigma(&tp.y, &xf);
            let rs = tp.r_on_sigma(&frames::wedge(&xf, &kx));
            let rhs = tp.curvature().r4(&xf, &kx, &xf, &kx) - 0.5 * t * dot3(&rs, &rs);
            ms[0].keep(rel(lhs, rhs), || vec![xh.to_vec()]);
        }
        if let Some(k) = kappa {
            for _ in 0..4 {
                let e = tp.random_unit(rng);
                let ec = tp.to_chart(&e);
                let lhs = r.holomorphic_sectional(hv, jv, &ec)?;
                let rhs = hol_sect_closed(k, t, job.n, tp.g_base(&e.x, &e.x), dot3(&e.a, &e.a));
                ms[1].keep(rel(lhs, rhs), || vec![ec.to_vec()]);
                values.push((lhs, ec.to_vec()));
            }
        }
        Ok((ms, values))
    })?;
    let (per, values): (Vec<_>, Vec<_>) = per.into_iter().unzip();
    let mut out = finish(job, "prop3", Some(job.n), &checks, &samples, &per);
    if let Some(k) = kappa {
        let constant = job.n == 1 && k > 0.0 && (t * k - 1.0).abs() < 1e-9;
        let expect = if constant { Expect::Vanish } else { Expect::Exceed };
        let check = Check::two_sided("constancy", expect, 1e-6, 1e-3);
        out.push(spread_report(job, "prop3", &check, &samples, &values));
    }
    Ok(out)
}

fn require_einstein_selfdual(spec: &ManifoldSpec) -> Result<()> {
    if spec.truth.einstein && spec.truth.selfdual {
        Ok(())
    } else {
        Err(Error::Hypothesis(format!("{} is not Einstein and self-dual", spec.name())))
    }
}

/// Nijenhuis tensor of `J_2` and the Chern connection `D²` over an Einstein
/// self-dual base, against their closed forms.
pub fn nijenhuis_chern(job: &Job) -> Result<Vec<DefectReport>> {
    require_einstein_selfdual(job.spec)?;
    let job = &job.with_n(2);
    let t = job.t;
    let t_alt = if (t - 0.5).abs() > 1e-12 { 0.5 } else { 1.0 };
    let checks = [
        Check::identity("nijenhuis_horizontal", 1e-6),
        Check::identity("nijenhuis_mixed", 1e-6),
        Check::identity("chern_horizontal", 1e-6),
        Check::identity("chern_vertical_horizontal", 1e-6),
        Check::identity("chern_horizontal_vertical", 1e-6),
        Check::identity("levi_civita_horizontal_vertical", 1e-6),
        Check::identity("t_independence", 1e-6),
    ];
    let (samples, per) = over_samples(job, |s, rng| {
        let tp = twistor_point(job, s, TWISTOR_ORDER)?;
        let hc = hermitian_chart(&tp, 2)?;
        let nij = hc.nijenhuis();
        let chern = hc.chern();
        let lc = hc.levi_civita();
        let scal = tp.base.scalar;
        let mut ms = vec![Measure::default(); checks.len()];
        for _ in 0..3 {
            let x = tp.random_base_vector(rng);
            let y = tp.random_base_vector(rng);
            let a = tp.random_vertical(rng);
            let m = random_matrix4(rng);
            let (xh, yh, av) = (tp.lift(&x), tp.lift(&y), tp.vertical(&a));
            let (kx, ky) = (tp.k_sigma(&x), tp.k_sigma(&y));
            let ksa_x = tp.k_tau(&tp.sigma_cross(&a), &x);

            let lhs = HermitianChart::nijenhuis_apply(&nij, 6, &xh, &yh);
            let w = frames::minus_components(&frames::add(&tp.wedge(&x, &ky), &tp.wedge(&kx, &y)));
            let rhs = tp.vertical(&scale3(&w, scal / 3.0));
            ms[0].keep(rel_vec(&lhs, &rhs), || vec![xh.to_vec(), yh.to_vec()]);

            let lhs = HermitianChart::nijenhuis_apply(&nij, 6, &xh, &av);
            let rhs = scale6(&tp.lift(&ksa_x), -2.0);
            ms[1].keep(rel_vec(&lhs, &rhs), || vec![xh.to_vec(), av.to_vec()]);

            let yfield = tp.lift_field(&affine_field(&tp, &y, &m));
            let lhs = chern.apply_field(&xh, &yfield);
            let rhs = tp.lift(&base_covariant(&tp, &x, &y, &m));
            ms[2].keep(rel_vec(&lhs, &rhs), || vec![xh.to_vec(), yh.to_vec()]);

            let xfield = tp.lift_field(&constant_field(&tp, &x));
            let lhs = chern.apply_field(&av, &xfield);
            let rhs = scale6(&tp.lift(&ksa_x), 0.5);
            ms[3].keep(rel_vec(&lhs, &rhs), || vec![av.to_vec(), xh.to_vec()]);

            let afield = constant_field(&tp, &av);
            let lhs = chern.apply_field(&xh, &afield);
            let br = bracket(&xfield, &afield);
            ms[4].keep(rel_vec(&lhs, &br), || vec![xh.to_vec(), av.to_vec()]);
            let lcv = lc.apply_field(&xh, &afield);
            let rhs = sub6(&lcv, &scale6(&tp.lift(&ksa_x), t * scal / 24.0));
            ms[5].keep(rel_vec(&lhs, &rhs), || vec![xh.to_vec(), av.to_vec()]);
        }
        let tp2 = twistor_point_at(job, s, t_alt, TWISTOR_ORDER)?;
        let other = hermitian_chart(&tp2, 2)?.chern();
        let d = chern
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(p, q)| rel(p.value(), q.value()))
            .fold(0.0, f64::max);
        ms[6].keep(d, Vec::new);
        Ok(ms)
    })?;
    Ok(finish(job, "nijenhuis_chern", Some(2), &checks, &samples, &per))
}

/// Chern-parallelism of the Nijenhuis tensor of `J_2`, with the almost/nearly
/// Kähler conditions at the special values of `t`.
pub fn prop4_parallel_nijenhuis(job: &Job) -> Result<Vec<DefectReport>> {
    let job = &job.with_n(2);
    let esd = job.spec.truth.einstein && job.spec.truth.selfdual;
    let expect = if esd { Expect::Vanish } else { Expect::Exceed };
    let mut checks = vec![Check::two_sided("parallel_nijenhuis", expect, 1e-5, 1e-3)];
    let t = job.t;
    let special = match job.spec.truth.scalar {
        Some(s) if esd && s < 0.0 && (t + 12.0 / s).abs() < 1e-9 => Some("almost_kaehler"),
        Some(s) if esd && s > 0.0 && (t - 6.0 / s).abs() < 1e-9 => Some("nearly_kaehler"),
        _ => None,
    };
    if let Some(name) = special {
        checks.push(Check::identity(name, 1e-7));
    }
    let (samples, per) = over_samples(job, |s, rng| {
        let tp = twistor_point(job, s, TWISTOR_ORDER + 1)?;
        let hc = hermitian_chart(&tp, 2)?;
        let nij = hc.nijenhuis();
        let dn = hc.chern().derivative_12(&nij);
        let mut ms = vec![Measure::default(); checks.len()];
        for _ in 0..4 {
            let [g, e, f] = std::array::from_fn(|_| tp.to_chart(&tp.random_unit(rng)));
            let v = hermitian::contract_derivative(&dn, 6, &g, &e, &f);
            ms[0].keep(hc.inner(&v, &v).sqrt(), || vec![g.to_vec(), e.to_vec(), f.to_vec()]);
        }
        match special {
            Some("almost_kaehler") => {
                let d = hc.d_omega();
                for a in 0..6 {
                    for b in 0..6 {
                        for c in 0..6 {
                            ms[1].keep(d[idx3(6, a, b, c)].abs(), || vec![unit6(a), unit6(b), unit6(c)]);
                        }
                    }
                }
            }
            Some(_) => {
                for _ in 0..4 {
                    let e = tp.to_chart(&tp.random_unit(rng));
                    let v = hc.nabla_j_apply(&e, &e);
                    ms[1].keep(hc.inner(&v, &v).sqrt(), || vec![e.to_vec()]);
                }
            }
            None => {}
        }
        Ok(ms)
    })?;
    Ok(finish(job, "prop4", Some(2), &checks, &samples, &per))
}

const AUX_CHECKS: [(&str, f64); 25] = [
    ("bracket_curvature", 1e-6),
    ("curvature_cross", 1e-9),
    ("k_sigma_wedge", 1e-9),
    ("k_sigma_product", 1e-9),
    ("levi_civita_horizontal", 1e-6),
    ("levi_civita_mixed", 1e-6),
    ("fibres_totally_geodesic", 1e-6),
    ("omega_codifferential", 1e-6),
    ("domega_horizontal", 1e-6),
    ("domega_mixed", 1e-6),
    ("domega_vertical", 1e-6),
    ("chern_difference_horizontal", 1e-6),
    ("chern_difference_vertical", 1e-6),
    ("chern_split", 1e-6),
    ("vertical_frame", 1e-6),
    ("s_tensor", 1e-8),
    ("hat_curvature", 1e-6),
    ("chern_from_hat", 1e-6),
    ("chern_hol_sect", 1e-6),
    ("chern_trace_closed", 1e-5),
    ("chern_trace_frame", 1e-9),
    ("chern_hermitian", 1e-8),
    ("nijenhuis_bracket", 1e-7),
    ("nijenhuis_integrable", 1e-7),
    ("levi_civita_hol_sect", 1e-6),
];

fn aux_index(name: &str) -> usize {
    AUX_CHECKS.iter().position(|(n, _)| *n == name).expect("aux check name")
}

/// Rotation `Q ∈ SO(3)` with `Q e_1 = y`, as columns.
fn rotation_to(y: &[f64; 3]) -> [[f64; 3]; 3] {
    let [u, _] = fibre_basis(y);
    let w = frames::cross(y, &u);
    let mut q = [[0.0; 3]; 3];
    for i in 0..3 {
        q[i][0] = y[i];
        q[i][1] = u[i];
        q[i][2] = w[i];
    }
    q
}

/// Structural identities of the twistor space: brackets of lifts, the
/// Levi-Civita connection of `h_t`, the form `ω`, Chern curvature
/// differences, the tensor `S`, first Chern form sanity and integrability.
pub fn aux_identities(job: &Job) -> Result<Vec<DefectReport>> {
    let n = job.n;
    let t = job.t;
    let spec = job.spec;
    let mut checks: Vec<Check> = AUX_CHECKS[..AUX_CHECKS.len() - 2]
        .iter()
        .map(|(name, tol)| Check::identity(name, *tol))
        .collect();
    let integrable = n == 1 && spec.truth.selfdual;
    checks.push(Check::two_sided(
        "nijenhuis_integrable",
        if integrable { Expect::Vanish } else { Expect::Exceed },
        1e-7,
        1e-3,
    ));
    let lc_constant = matches!(spec.truth.kappa, Some(k) if n == 1 && k > 0.0 && (t * k - 1.0).abs() < 1e-9);
    let lc_check = Check::two_sided(
        "levi_civita_hol_sect",
        if lc_constant { Expect::Vanish } else { Expect::Exceed },
        1e-6,
        1e-3,
    );
    let idx = aux_index;
    let (samples, per) = over_samples(job, |s, rng| {
        let tp = twistor_point(job, s, TWISTOR_ORDER + 1)?;
        let hc1 = hermitian_chart(&tp, 1)?;
        let hc2 = hermitian_chart(&tp, 2)?;
        let hc = if n == 1 { &hc1 } else { &hc2 };
        let lc = hc.levi_civita();
        let riem = lc.curvature(&hc.h)?;
        let d1 = hc1.chern();
        let d2 = hc2.chern();
        let r1 = d1.curvature(&hc1.h)?;
        let r2 = d2.curvature(&hc2.h)?;
        let (chern, rch) = if n == 1 { (&d1, &r1) } else { (&d2, &r2) };
        let curv = tp.curvature();
        let sigma = tp.sigma_bivector();
        let rsig = tp.r_on_sigma(&sigma);
        let mut ms = vec![Measure::default(); checks.len()];
        let mut lc_values = Vec::new();

        for _ in 0..2 {
            let x = tp.random_base_vector(rng);
            let y = tp.random_base_vector(rng);
            let z = tp.random_base_vector(rng);
            let w = tp.random_base_vector(rng);
            let a = tp.random_vertical(rng);
            let b = tp.random_vertical(rng);
            let mx = random_matrix4(rng);
            let my = random_matrix4(rng);
            let (xh, yh, zh, wh) = (tp.lift(&x), tp.lift(&y), tp.lift(&z), tp.lift(&w));
            let (av, bv) = (tp.vertical(&a), tp.vertical(&b));
            let (kx, ky, kz, kw) = (tp.k_sigma(&x), tp.k_sigma(&y), tp.k_sigma(&z), tp.k_sigma(&w));

            // brackets of horizontal lifts
            let xf = tp.lift_field(&affine_field(&tp, &x, &mx));
            let yf = tp.lift_field(&affine_field(&tp, &y, &my));
            let xy: [f64; 4] = std::array::from_fn(|i| (0..4).map(|j| my[i][j] * x[j] - mx[i][j] * y[j]).sum());
            let lhs = sub6(&bracket(&xf, &yf), &tp.lift(&xy));
            let rhs = tp.vertical(&tp.r_on_sigma(&tp.wedge(&x, &y)));
            ms[idx("bracket_curvature")].keep(rel_vec(&lhs, &rhs), || vec![xh.to_vec(), yh.to_vec()]);

            // pointwise algebra on Λ²
            let coeffs: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let basis = frames::lambda2_basis();
            let mut bv2 = [[0.0; 4]; 4];
            for (c, e) in coeffs.iter().zip(&basis) {
                bv2 = frames::add(&bv2, &frames::scale(e, *c));
            }
            let (p3, q3) = (tp.random_vertical(rng), TwistorPoint::random_unit_y(rng));
            ms[idx("curvature_cross")].keep(frames::residual_2_5(curv, &bv2, &p3, &q3), Vec::new);
            let (xf4, wf4) = (tp.to_frame(&x), tp.to_frame(&w));
            ms[idx("k_sigma_wedge")].keep(frames::residual_2_6(&tp.y, &a, &xf4, &wf4), Vec::new);
            ms[idx("k_sigma_product")].keep(frames::residual_2_6c(&tp.y, &q3), Vec::new);

            // Levi-Civita connection of h_t
            let lhs = lc.apply_field(&xh, &yf);
            let rhs = add6(
                &tp.lift(&base_covariant(&tp, &x, &y, &my)),
                &tp.vertical(&scale3(&tp.r_on_sigma(&tp.wedge(&x, &y)), 0.5)),
            );
            ms[idx("levi_civita_horizontal")].keep(rel_vec(&lhs, &rhs), || vec![xh.to_vec(), yh.to_vec()]);

            let xconst = tp.lift_field(&constant_field(&tp, &x));
            let afield = constant_field(&tp, &av);
            let bfield = constant_field(&tp, &bv);
            let rhs = scale6(&tp.lift(&tp.r_on_vector(&frames::from_minus(&tp.sigma_cross(&a)), &x)), 0.5 * t);
            let lhs = lc.apply_field(&av, &xconst);
            let mut r = rel_vec(&lhs, &rhs);
            let dxa = tp.decompose(&to6(&lc.apply_field(&xh, &afield)));
            r = r.max(rel_vec(&tp.lift(&dxa.x), &rhs));
            ms[idx("levi_civita_mixed")].keep(r, || vec![av.to_vec(), xh.to_vec()]);

            let dab = tp.decompose(&to6(&lc.apply_field(&av, &bfield)));
            ms[idx("fibres_totally_geodesic")].keep(rel_vec(&dab.x, &[0.0; 4]), || vec![av.to_vec(), bv.to_vec()]);

            // ω = -(1/t) δΩ and its differential
            let omega: Vec<f64> = hc.codiff_omega().iter().map(|v| -v.value() / t).collect();
            let e = tp.random_tangent(rng);
            let ec = tp.to_chart(&e);
            let lhs = linalg::dot(&omega, &ec);
            ms[idx("omega_codifferential")].keep(rel(lhs, dot3(&e.a, &rsig)), || vec![ec.to_vec()]);
            let dw = hc.d_codiff_omega();
            let dw_at = |p: &[f64], q: &[f64]| -linalg::bilinear(&dw, p, q) / t;
            let rhs = -dot3(&tp.r_on_sigma(&tp.wedge(&x, &y)), &rsig);
            ms[idx("domega_horizontal")].keep(rel(dw_at(&xh, &yh), rhs), || vec![xh.to_vec(), yh.to_vec()]);
            let nab = curv.nabla_rcal(&tp.to_frame(&x), &sigma)?;
            let rhs = -frames::inner(&nab, &frames::from_minus(&tp.sigma_cross(&b)));
            ms[idx("domega_mixed")].keep(rel(dw_at(&xh, &bv), rhs), || vec![xh.to_vec(), bv.to_vec()]);
            let rc = |p: &[f64; 3], q: &[f64; 3]| frames::inner(&curv.rcal(&frames::from_minus(p)), &frames::from_minus(q));
            let rhs = rc(&tp.sigma_cross(&a), &b) - rc(&tp.sigma_cross(&b), &a)
                + 2.0 * frames::inner(&curv.rcal(&sigma), &sigma) * dot3(&a, &tp.sigma_cross(&b));
            ms[idx("domega_vertical")].keep(rel(dw_at(&av, &bv), rhs), || vec![av.to_vec(), bv.to_vec()]);

            // Chern curvature differences between J_1 and J_2
            let (kxh, kyh) = (tp.lift(&kx), tp.lift(&ky));
            let lhs = r1.r4(&xh, &yh, &zh, &wh) - r1.r4(&kxh, &kyh, &zh, &wh);
            let dxy = frames::sub(&tp.wedge(&x, &y), &tp.wedge(&kx, &ky));
            let rhs = r2.r4(&xh, &yh, &zh, &wh) - r2.r4(&kxh, &kyh, &zh, &wh)
                - 0.5 * frames::inner(&curv.rcal(&dxy), &frames::add(&tp.wedge(&z, &w), &tp.wedge(&kz, &kw)));
            ms[idx("chern_difference_horizontal")]
                .keep(rel(lhs, rhs), || vec![xh.to_vec(), yh.to_vec(), zh.to_vec(), wh.to_vec()]);
            let na = dot3(&a, &a).sqrt() * t.sqrt();
            let v = scale3(&a, 1.0 / na);
            let sv = tp.sigma_cross(&v);
            let (vv, j1v, j2v) = (tp.vertical(&v), tp.vertical(&scale3(&sv, -1.0)), tp.vertical(&sv));
            let lhs = r1.r4(&xh, &yh, &vv, &j1v) - r1.r4(&kxh, &kyh, &vv, &j1v);
            let rhs = -r2.r4(&xh, &yh, &vv, &j2v) + r2.r4(&kxh, &kyh, &vv, &j2v) + frames::inner(&curv.rcal(&dxy), &sigma);
            ms[idx("chern_difference_vertical")].keep(rel(lhs, rhs), || vec![xh.to_vec(), yh.to_vec(), vv.to_vec()]);

            // splitting of the Chern connections along horizontal lifts
            let (va, vb) = split_vectors(&tp, &x, &y);
            let lhs2 = d2.apply_field(&xh, &yf);
            let rhs2 = add6(&tp.lift(&base_covariant(&tp, &x, &y, &my)), &tp.vertical(&add3(&va, &vb)));
            let lhs1 = d1.apply_field(&xh, &yf);
            let rhs1 = sub6(&lhs2, &scale6(&tp.vertical(&vb), 2.0));
            let r = rel_vec(&lhs2, &rhs2)
                .max(rel_vec(&lhs1, &rhs1))
                .max(rel_vec(&d1.apply_field(&av, &xconst), &d2.apply_field(&av, &xconst)));
            ms[idx("chern_split")].keep(r, || vec![xh.to_vec(), yh.to_vec(), av.to_vec()]);

            // S tensor
            let st = hc.s_tensor();
            let ds = hc.hat_connection().derivative_12(&st);
            let [p, q, rr] = std::array::from_fn(|_| tp.to_chart(&tp.random_tangent(rng)));
            let sa = |u: &[f64], v: &[f64]| hermitian::s_apply(&st, 6, u, v);
            let jp = hc.j_apply(&p);
            let mut r = rel(hc.inner(&sa(&p, &q), &rr), -hc.inner(&sa(&p, &rr), &q));
            r = r.max(rel_vec(&sa(&p, &hc.j_apply(&q)), &hc.j_apply(&sa(&p, &q))));
            let quarter: Vec<f64> = add6(&hc.nabla_j_apply(&p, &p), &hc.nabla_j_apply(&jp, &jp)).iter().map(|v| 0.25 * v).collect();
            r = r.max(rel_vec(&sa(&p, &jp), &quarter));
            r = r.max(rel_vec(&sa(&jp, &p).iter().map(|v| -v).collect::<Vec<_>>(), &quarter));
            let d8 = hermitian::contract_derivative(&ds, 6, &q, &jp, &jp);
            r = r.max(rel(hc.inner(&d8, &p), 0.0));
            ms[idx("s_tensor")].keep(r, || vec![p.to_vec(), q.to_vec(), rr.to_vec()]);

            // hat and Chern curvature
            let hat = hc.hat_connection();
            let rhat = hat.curvature(&hc.h)?;
            let s4 = tp.to_chart(&tp.random_tangent(rng));
            let nj = |u: &[f64], v: &[f64]| hc.nabla_j_apply(u, v);
            let lhs = 4.0 * rhat.r4(&p, &q, &rr, &s4);
            let rhs = 2.0 * riem.r4(&p, &q, &rr, &s4)
                + 2.0 * riem.r4(&p, &q, &hc.j_apply(&rr), &hc.j_apply(&s4))
                + hc.inner(&nj(&p, &rr), &nj(&q, &s4))
                - hc.inner(&nj(&p, &s4), &nj(&q, &rr));
            ms[idx("hat_curvature")].keep(rel(lhs, rhs), || vec![p.to_vec(), q.to_vec(), rr.to_vec(), s4.to_vec()]);
            let that = hat.torsion();
            let mut tpq = vec![0.0; 6];
            for c in 0..6 {
                for i in 0..6 {
                    for j in 0..6 {
                        tpq[c] += that[idx3(6, c, i, j)] * p[i] * q[j];
                    }
                }
            }
            let dsa = |g: &[f64], e: &[f64], f: &[f64]| hermitian::contract_derivative(&ds, 6, g, e, f);
            let lhs = rch.r4(&p, &q, &rr, &s4);
            let rhs = rhat.r4(&p, &q, &rr, &s4) - hc.inner(&dsa(&p, &q, &rr), &s4)
                + hc.inner(&dsa(&q, &p, &rr), &s4)
                + hc.inner(&sa(&p, &s4), &sa(&q, &rr))
                - hc.inner(&sa(&q, &s4), &sa(&p, &rr))
                - hc.inner(&sa(&tpq, &rr), &s4);
            ms[idx("chern_from_hat")].keep(rel(lhs, rhs), || vec![p.to_vec(), q.to_vec(), rr.to_vec(), s4.to_vec()]);

            let eu = tp.to_chart(&tp.random_unit(rng));
            let lhs = rch.holomorphic_sectional(hc.h_values(), hc.j_values(), &eu)?;
            let rhs = hc.chern_hsc_from_levi_civita(&riem, &eu)?;
            ms[idx("chern_hol_sect")].keep(rel(lhs, rhs), || vec![eu.to_vec()]);
            for _ in 0..2 {
                let eu = tp.to_chart(&tp.random_unit(rng));
                lc_values.push((riem.holomorphic_sectional(hc.h_values(), hc.j_values(), &eu)?, eu.to_vec()));
            }
        }

        // first Chern form: closed, frame independent
        let gj = rch.chern_trace_jets(&hc.j);
        let dg = hermitian::exterior_derivative_2form(&gj, 6);
        let scale = 1.0 + gj.iter().map(|v| v.value().abs()).fold(0.0, f64::max);
        ms[idx("chern_trace_closed")].keep(dg.iter().map(|v| v.abs()).fold(0.0, f64::max) / scale, Vec::new);
        let direct = rch.chern_trace(&hc.j);
        for seed in [0, 3] {
            let framed = rch.chern_trace_framed(hc.h_values(), hc.j_values(), seed)?;
            for a in 0..6 {
                for b in 0..6 {
                    ms[idx("chern_trace_frame")].keep(rel(framed[a][b], direct[a][b]), || vec![unit6(a), unit6(b)]);
                }
            }
        }
        ms[idx("chern_hermitian")].keep(chern.metric_residual(&hc.h).max(chern.j_residual(&hc.j)), Vec::new);

        // the vertical frame U, J_1 U built from a rotated fibre frame
        let q = rotation_to(&tp.y);
        let yj = &tp.y_jet;
        let yr: [Jet; 3] = std::array::from_fn(|k| {
            let mut acc = yj[0].scale(q[0][k]);
            acc += &yj[1].scale(q[1][k]);
            acc += &yj[2].scale(q[2][k]);
            acc
        });
        let one = yr[0].constant_like(1.0);
        let u_rot = [-yr[1].clone(), yr[0].clone(), yr[0].zero_like()];
        let j1u_rot = [
            yr[0].clone() * yr[2].clone(),
            yr[1].clone() * yr[2].clone(),
            -(one - yr[2].clone() * yr[2].clone()),
        ];
        let back = |v: &[Jet; 3]| -> [Jet; 3] {
            std::array::from_fn(|i| {
                let mut acc = v[0].scale(q[i][0]);
                acc += &v[1].scale(q[i][1]);
                acc += &v[2].scale(q[i][2]);
                acc
            })
        };
        let uf = tp.vertical_field(&back(&u_rot));
        let j1uf = tp.vertical_field(&back(&j1u_rot));
        let u0 = values6(&uf);
        let r = rel_vec(&lc.apply_field(&u0, &uf), &[0.0; 6]).max(rel_vec(&lc.apply_field(&u0, &j1uf), &[0.0; 6]));
        ms[idx("vertical_frame")].keep(r, || vec![u0.to_vec()]);

        // Nijenhuis tensor
        let nij = hc.nijenhuis();
        let br = hc.nijenhuis_bracket();
        let nv: Vec<f64> = nij.iter().map(Jet::value).collect();
        ms[idx("nijenhuis_bracket")].keep(rel_vec(&nv, &br), Vec::new);
        ms[idx("nijenhuis_integrable")].keep(nv.iter().map(|v| v.abs()).fold(0.0, f64::max), Vec::new);
        Ok((ms, lc_values))
    })?;
    let (per, lc_values): (Vec<_>, Vec<_>) = per.into_iter().unzip();
    let mut out = finish(job, "aux", Some(n), &checks, &samples, &per);
    let mut lc_report = spread_report(job, "aux", &lc_check, &samples, &lc_values);
    lc_report.external = true;
    out.push(lc_report);
    Ok(out)
}

/// Run one theorem by identifier.
pub fn run(id: &str, job: &Job) -> Result<Vec<DefectReport>> {
    match id {
        "prop1" => prop1_first_chern(job),
        "lemma1" => lemma1_chern_forms(job),
        "lemma2" => lemma2_nabla_j(job),
        "lemma3" => lemma3_rho_star(job),
        "prop2" => prop2_type11(job),
        "prop3" => prop3_hol_sect(job),
        "nijenhuis_chern" => nijenhuis_chern(job),
        "prop4" => prop4_parallel_nijenhuis(job),
        "aux" => aux_identities(job),
        other => Err(Error::UnknownTheorem(other.to_string())),
    }
}

/// Whether a theorem depends on the choice of `J_n`.
pub fn uses_n(id: &str) -> bool {
    !matches!(id, "nijenhuis_chern" | "prop4")
}

/// Whether the theorem's hypothesis holds for the base manifold.
pub fn applies(id: &str, spec: &ManifoldSpec) -> bool {
    id != "nijenhuis_chern" || (spec.truth.einstein && spec.truth.selfdual)
}

/// All theorems over a grid of `t` and `n`, in a fixed order.
pub fn suite(
    spec: &ManifoldSpec,
    ids: &[&str],
    ts: &[f64],
    ns: &[u8],
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<DefectReport>> {
    let mut jobs = Vec::new();
    for &id in ids {
        if !applies(id, spec) {
            continue;
        }
        for &t in ts {
            if uses_n(id) {
                for &n in ns {
                    jobs.push((id, t, n));
                }
            } else {
                jobs.push((id, t, 2));
            }
        }
    }
    let results = jobs
        .par_iter()
        .map(|&(id, t, n)| {
            let job = Job {
                spec,
                t,
                n,
                samples,
                seed,
                tol,
            };
            run(id, &job)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(results.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job<'a>(spec: &'a ManifoldSpec, tol: &'a Tolerances, t: f64, n: u8, samples: usize) -> Job<'a> {
        Job {
            spec,
            t,
            n,
            samples,
            seed: 7,
            tol,
        }
    }

    fn assert_all_pass(reports: &[DefectReport]) {
        for r in reports {
            assert!(
                r.passed(),
                "{}.{} on {} (t={}, n={:?}): {} vs tol {}",
                r.theorem,
                r.check,
                r.manifold,
                r.t,
                r.n,
                r.max_abs_residual,
                r.tolerance
            );
        }
    }

    #[test]
    fn verdicts_are_two_sided() {
        assert_eq!(verdict(Expect::Vanish, 1e-8, 1e-6, 1e-3), Verdict::Pass);
        assert_eq!(verdict(Expect::Vanish, 1e-4, 1e-6, 1e-3), Verdict::Warn);
        assert_eq!(verdict(Expect::Vanish, 1e-2, 1e-6, 1e-3), Verdict::Fail);
        assert_eq!(verdict(Expect::Exceed, 1e-2, 1e-6, 1e-3), Verdict::Pass);
        assert_eq!(verdict(Expect::Exceed, 1e-8, 1e-6, 1e-3), Verdict::Fail);
        assert_eq!(verdict(Expect::Vanish, f64::NAN, 1e-6, 1e-3), Verdict::Fail);
    }

    #[test]
    fn tolerance_overrides() {
        let mut tol = Tolerances::default();
        tol.set("prop1", 1e-3).unwrap();
        tol.set("aux.s_tensor", 1e-4).unwrap();
        assert_eq!(tol.get("prop1", "first_chern", 1e-7), 1e-3);
        assert_eq!(tol.get("aux", "s_tensor", 1e-8), 1e-4);
        assert_eq!(tol.get("aux", "chern_split", 1e-6), 1e-6);
        assert!(tol.set("prop9", 1e-3).is_err());
        assert!(tol.set("prop1", -1.0).is_err());
    }

    #[test]
    fn sweep_includes_special_values() {
        let s2 = catalogue::by_name("s2xs2").unwrap();
        assert_eq!(t_sweep(&s2), vec![0.5, 1.0, 2.0, 1.5]);
        let h4 = catalogue::by_name("h4").unwrap();
        assert_eq!(t_sweep(&h4), vec![0.5, 1.0, 2.0]);
        let flat = catalogue::by_name("flat").unwrap();
        assert_eq!(t_sweep(&flat), vec![0.5, 1.0, 2.0]);
    }

    #[test]
    fn first_chern_over_sphere() {
        let spec = catalogue::by_name("s4").unwrap();
        let tol = Tolerances::default();
        for n in [1, 2] {
            assert_all_pass(&prop1_first_chern(&job(&spec, &tol, 1.0, n, 4)).unwrap());
        }
    }

    #[test]
    fn lemmas_over_sphere_product() {
        let spec = catalogue::by_name("s2xs2").unwrap();
        let tol = Tolerances::default();
        for n in [1, 2] {
            let j = job(&spec, &tol, 0.7, n, 2);
            assert_all_pass(&lemma1_chern_forms(&j).unwrap());
            assert_all_pass(&lemma2_nabla_j(&j).unwrap());
            assert_all_pass(&lemma3_rho_star(&j).unwrap());
        }
    }

    #[test]
    fn nijenhuis_chern_needs_hypothesis() {
        let spec = catalogue::by_name("s2xs2").unwrap();
        let tol = Tolerances::default();
        assert!(matches!(nijenhuis_chern(&job(&spec, &tol, 1.0, 2, 2)), Err(Error::Hypothesis(_))));
        let h4 = catalogue::by_name("h4").unwrap();
        assert_all_pass(&nijenhuis_chern(&job(&h4, &tol, 1.0, 2, 2)).unwrap());
    }

    #[test]
    fn reports_are_deterministic() {
        let spec = catalogue::by_name("cp2").unwrap();
        let tol = Tolerances::default();
        let a = prop2_type11(&job(&spec, &tol, 1.0, 1, 3)).unwrap();
        let b = prop2_type11(&job(&spec, &tol, 1.0, 1, 3)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn invalid_jobs_rejected() {
        let spec = catalogue::by_name("flat").unwrap();
        let tol = Tolerances::default();
        assert!(prop1_first_chern(&job(&spec, &tol, -1.0, 1, 2)).is_err());
        assert!(prop1_first_chern(&job(&spec, &tol, 1.0, 3, 2)).is_err());
        assert!(prop1_first_chern(&job(&spec, &tol, 1.0, 1, 0)).is_err());
        assert!(matches!(run("prop9", &job(&spec, &tol, 1.0, 1, 1)), Err(Error::UnknownTheorem(_))));
    }
}
