//! One pass/fail line per acceptance criterion. Runs without the libtest
//! harness so the lines are always printed; exits non-zero if any fails.

use std::process::Command;

use twistor_lab::catalogue::{self, ManifoldSpec};
use twistor_lab::oracle;
use twistor_lab::theorems::{self, DefectReport, Expect, Job, Tolerances};

const SEED: u64 = 2024;

struct Criterion {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn spec(name: &str) -> ManifoldSpec {
    catalogue::by_name(name).expect("catalogue entry")
}

fn run(id: &str, name: &str, t: f64, n: u8, samples: usize) -> Vec<DefectReport> {
    let s = spec(name);
    let tol = Tolerances::default();
    let job = Job {
        spec: &s,
        t,
        n,
        samples,
        seed: SEED,
        tol: &tol,
    };
    theorems::run(id, &job).unwrap_or_else(|e| panic!("{id} on {name}: {e}"))
}

fn pick<'a>(rs: &'a [DefectReport], check: &str) -> &'a DefectReport {
    rs.iter().find(|r| r.check == check).unwrap_or_else(|| panic!("missing check {check}"))
}

/// Tracks the worst value of a family of bounds `value < limit` or
/// `value > limit`.
#[derive(Default)]
struct Bound {
    ok: bool,
    worst_below: f64,
    worst_above: f64,
    failures: Vec<String>,
    seen: bool,
}

impl Bound {
    fn new() -> Self {
        Self {
            ok: true,
            worst_below: 0.0,
            worst_above: f64::INFINITY,
            ..Default::default()
        }
    }

    fn below(&mut self, label: &str, value: f64, limit: f64) {
        self.seen = true;
        self.worst_below = self.worst_below.max(value);
        if value.is_nan() || value >= limit {
            self.ok = false;
            self.failures.push(format!("{label}={value:.3e}>={limit:.0e}"));
        }
    }

    fn above(&mut self, label: &str, value: f64, limit: f64) {
        self.seen = true;
        self.worst_above = self.worst_above.min(value);
        if value.is_nan() || value <= limit {
            self.ok = false;
            self.failures.push(format!("{label}={value:.3e}<={limit:.0e}"));
        }
    }

    fn report(&self, id: usize, name: &'static str) -> Criterion {
        let mut detail = String::new();
        if self.worst_below > 0.0 || self.worst_above.is_infinite() {
            detail.push_str(&format!("max residual {:.3e}", self.worst_below));
        }
        if self.worst_above.is_finite() {
            if !detail.is_empty() {
                detail.push_str(", ");
            }
            detail.push_str(&format!("min separation {:.3e}", self.worst_above));
        }
        if !self.failures.is_empty() {
            detail.push_str(&format!("; failing: {}", self.failures.join(" ")));
        }
        Criterion {
            id,
            name,
            passed: self.ok && self.seen,
            detail,
        }
    }
}

fn vanishing(b: &mut Bound, rs: &[DefectReport], limit: f64) {
    for r in rs.iter().filter(|r| r.expect == Expect::Vanish) {
        b.below(&format!("{}.{}@{}/t={}/n={:?}", r.theorem, r.check, r.manifold, r.t, r.n), r.max_abs_residual, limit);
    }
}

fn first_chern_vanishes() -> Criterion {
    let mut b = Bound::new();
    for name in catalogue::names() {
        for t in [0.5, 1.0, 2.0] {
            vanishing(&mut b, &run("prop1", name, t, 2, 50), 1e-7);
        }
    }
    b.report(1, "first Chern form of (h_t, J_2) vanishes")
}

fn first_chern_closed_form() -> Criterion {
    let mut b = Bound::new();
    for name in ["flat", "s4", "h4", "s2xs2", "perturbed"] {
        vanishing(&mut b, &run("prop1", name, 1.0, 1, 50), 1e-6);
    }
    b.report(2, "first Chern form of (h_t, J_1) closed form")
}

fn chern_forms_identity() -> Criterion {
    let mut b = Bound::new();
    for n in [1, 2] {
        vanishing(&mut b, &run("lemma1", "s4", 1.0, n, 30), 1e-6);
    }
    b.report(3, "Gauduchon first Chern forms via phi, psi, d delta Omega")
}

fn nabla_j_and_rho_star() -> Criterion {
    let mut b = Bound::new();
    for name in ["s4", "h4"] {
        for n in [1, 2] {
            vanishing(&mut b, &run("lemma2", name, 1.0, n, 30), 1e-6);
            vanishing(&mut b, &run("lemma3", name, 1.0, n, 30), 1e-6);
        }
    }
    b.report(4, "covariant derivative of J_n and *-Ricci closed forms")
}

fn type11_biconditional() -> Criterion {
    let mut b = Bound::new();
    let type11 = |name: &str, n: u8| pick(&run("prop2", name, 1.0, n, 20), "type11").max_abs_residual;
    for name in ["s4", "h4", "cp2"] {
        b.below(&format!("{name}/n=1"), type11(name, 1), 1e-6);
    }
    for name in ["s4", "h4"] {
        b.below(&format!("{name}/n=2"), type11(name, 2), 1e-6);
    }
    b.above("perturbed/n=1", type11("perturbed", 1), 1e-3);
    b.above("s2xs2/n=2", type11("s2xs2", 2), 1e-3);
    b.report(5, "Chern curvature type (1,1) exactly under the stated hypotheses")
}

fn hol_sect_constancy() -> Criterion {
    let mut b = Bound::new();
    let constancy = |t: f64, n: u8| pick(&run("prop3", "s4", t, n, 30), "constancy").max_abs_residual;
    b.below("s4/t=1/n=1 variance", constancy(1.0, 1), 1e-6);
    b.above("s4/t=1/n=2 variance", constancy(1.0, 2), 1e-3);
    b.above("s4/t=2/n=1 variance", constancy(2.0, 1), 1e-3);
    for name in ["flat", "s4", "s4k2", "h4"] {
        for n in [1, 2] {
            for t in [0.5, 1.0, 2.0] {
                let rs = run("prop3", name, t, n, 20);
                b.below(&format!("{name}/t={t}/n={n} mixed"), pick(&rs, "mixed").max_abs_residual, 1e-6);
            }
        }
    }
    b.report(6, "Chern holomorphic sectional curvature closed form and constancy")
}

fn parallel_nijenhuis() -> Criterion {
    let mut b = Bound::new();
    for name in ["s4", "h4"] {
        for t in theorems::t_sweep(&spec(name)) {
            let rs = run("prop4", name, t, 2, 20);
            b.below(&format!("{name}/t={t}"), pick(&rs, "parallel_nijenhuis").max_abs_residual, 1e-5);
        }
    }
    b.above("perturbed/t=1", pick(&run("prop4", "perturbed", 1.0, 2, 20), "parallel_nijenhuis").max_abs_residual, 1e-3);
    let h4 = run("prop4", "h4", 1.0, 2, 20);
    b.below("h4/t=1 dOmega", pick(&h4, "almost_kaehler").max_abs_residual, 1e-7);
    b.below("h4/t=1 gamma", pick(&run("prop1", "h4", 1.0, 2, 20), "first_chern").max_abs_residual, 1e-7);
    b.below("h4/t=1 type11", pick(&run("prop2", "h4", 1.0, 2, 20), "type11").max_abs_residual, 1e-6);
    b.report(7, "Nijenhuis tensor of J_2 Chern-parallel; almost-Kaehler at t = -12/s")
}

fn infrastructure() -> Criterion {
    let mut b = Bound::new();
    for name in ["s4", "s2xs2", "cp2", "perturbed"] {
        for n in [1, 2] {
            vanishing(&mut b, &run("aux", name, 0.7, n, 30), 1e-6);
        }
    }
    for name in ["s4", "h4", "cp2"] {
        vanishing(&mut b, &run("nijenhuis_chern", name, 0.7, 2, 30), 1e-6);
    }
    b.report(8, "structural identities (brackets, connections, forms, S, Nijenhuis)")
}

fn oracle_agreement() -> Criterion {
    let mut b = Bound::new();
    for s in catalogue::entries() {
        let r = oracle::compare(&s, 0.8, 50, SEED, oracle::TOLERANCE).expect("oracle");
        b.below(&format!("{}/base", s.name()), r.base_discrepancy, 1e-4);
        b.below(&format!("{}/twistor", s.name()), r.twistor_discrepancy, 1e-4);
    }
    b.report(9, "jet and finite-difference curvature agree")
}

fn determinism() -> Criterion {
    let run_suite = || {
        Command::new(env!("CARGO_BIN_EXE_twistor-lab"))
            .args(["suite", "--manifold", "cp2", "--t", "1,2", "--samples", "3", "--seed", "5"])
            .env("TWISTOR_LAB_THREADS", "2")
            .output()
            .expect("run twistor-lab")
    };
    let a = run_suite();
    let b = run_suite();
    let same = a.stdout == b.stdout && !a.stdout.is_empty();
    let parsed = serde_json::from_slice::<serde_json::Value>(&a.stdout).is_ok();
    Criterion {
        id: 10,
        name: "identical suite configs give byte-identical JSON",
        passed: same && parsed && a.status.code() == Some(0),
        detail: format!("{} bytes, exit {:?}, identical={same}", a.stdout.len(), a.status.code()),
    }
}

fn main() {
    let criteria: [fn() -> Criterion; 10] = [
        first_chern_vanishes,
        first_chern_closed_form,
        chern_forms_identity,
        nabla_j_and_rho_star,
        type11_biconditional,
        hol_sect_constancy,
        parallel_nijenhuis,
        infrastructure,
        oracle_agreement,
        determinism,
    ];
    let mut failed = 0;
    for c in criteria {
        let c = c();
        if !c.passed {
            failed += 1;
        }
        println!("{} [{:>2}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name, c.detail);
    }
    println!("acceptance: {}/10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
