//! WebAssembly bindings for the browser demo. Every export takes plain
//! values and returns a JSON string; errors come back as `{"error": ...}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use twistor_lab::catalogue;
use twistor_lab::cli;
use twistor_lab::hermitian::HermitianChart;
use twistor_lab::report;
use twistor_lab::theorems::{self, Job, Tolerances};
use twistor_lab::twistor::{Tangent, TwistorChart, TwistorPoint};
use twistor_lab::Result;

fn respond<T: Serialize>(r: Result<T>) -> String {
    match r.and_then(|v| report::to_json(&v)) {
        Ok(s) => s,
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

fn parse_point(point: &str) -> Result<Vec<f64>> {
    point
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| twistor_lab::Error::InvalidArgument(format!("bad coordinate `{s}`")))
        })
        .collect()
}

/// Singer-Thorpe blocks of a catalogue metric at a comma separated point.
#[wasm_bindgen]
pub fn decompose(manifold: &str, point: &str) -> String {
    respond(parse_point(point).and_then(|p| cli::decompose(manifold, &p)))
}

#[derive(Debug, Serialize)]
pub struct ProfilePoint {
    /// Angle between the horizontal and vertical directions.
    pub angle: f64,
    pub chern: f64,
    /// Closed form, on bases of constant curvature.
    pub closed_form: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Profile {
    pub manifold: String,
    pub t: f64,
    pub n: u8,
    pub point: Vec<f64>,
    pub sigma: [f64; 3],
    pub samples: Vec<ProfilePoint>,
}

/// Chern holomorphic sectional curvature of `(h_t, J_n)` along unit vectors
/// `cos θ X + sin θ A` turning from horizontal to vertical.
pub fn profile(manifold: &str, t: f64, n: u8, steps: usize, seed: u64) -> Result<Profile> {
    let spec = catalogue::by_name(manifold)?;
    if n != 1 && n != 2 {
        return Err(twistor_lab::Error::InvalidArgument(format!("n = {n} must be 1 or 2")));
    }
    let steps = steps.clamp(2, 181);
    let point = catalogue::sample_points(&spec, 1, seed)?.remove(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = TwistorPoint::random_unit_y(&mut rng);
    let tp = TwistorChart::new(spec.metric.as_ref(), t)?.at(&point, y)?;
    let hc = HermitianChart::new(tp.h.clone(), tp.j(n))?;
    let r = hc.chern().curvature(&hc.h)?;
    let x = tp.random_base_vector(&mut rng);
    let x = Tangent::horizontal(x).scale(1.0 / tp.norm2(&Tangent::horizontal(x)).sqrt());
    let a = Tangent::vertical(tp.random_vertical(&mut rng));
    let a = a.scale(1.0 / tp.norm2(&a).sqrt());
    let samples = (0..steps)
        .map(|i| {
            let angle = std::f64::consts::FRAC_PI_2 * i as f64 / (steps - 1) as f64;
            let e = x.scale(angle.cos()).add(&a.scale(angle.sin()));
            let chern = r.holomorphic_sectional(hc.h_values(), hc.j_values(), &tp.to_chart(&e))?;
            let closed_form = spec.truth.kappa.map(|k| {
                theorems::hol_sect_closed(k, t, n, tp.g_base(&e.x, &e.x), e.a.iter().map(|v| v * v).sum())
            });
            Ok(ProfilePoint { angle, chern, closed_form })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Profile {
        manifold: manifold.to_string(),
        t,
        n,
        point,
        sigma: tp.y,
        samples,
    })
}

#[wasm_bindgen]
pub fn hol_sect_profile(manifold: &str, t: f64, n: u8, steps: usize, seed: u64) -> String {
    respond(profile(manifold, t, n, steps, seed))
}

/// Run one theorem and return its defect reports.
#[wasm_bindgen]
pub fn verify(theorem: &str, manifold: &str, t: f64, n: u8, samples: usize, seed: u64) -> String {
    respond(catalogue::by_name(manifold).and_then(|spec| {
        let tol = Tolerances::default();
        let job = Job {
            spec: &spec,
            t,
            n,
            samples: samples.min(200),
            seed,
            tol: &tol,
        };
        theorems::run(theorem, &job)
    }))
}

/// Catalogue names and theorem identifiers for the page's menus.
#[wasm_bindgen]
pub fn menus() -> String {
    serde_json::json!({ "manifolds": catalogue::names(), "theorems": theorems::THEOREMS }).to_string()
}
