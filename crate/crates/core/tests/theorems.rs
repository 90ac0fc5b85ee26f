//! Worked examples: positive cases, negative controls and special parameters.

use twistor_lab::catalogue;
use twistor_lab::theorems::{self, DefectReport, Expect, Job, Tolerances, Verdict};
use twistor_lab::Error;

fn run(id: &str, name: &str, t: f64, n: u8, samples: usize) -> Vec<DefectReport> {
    let spec = catalogue::by_name(name).unwrap();
    let tol = Tolerances::default();
    let job = Job { spec: &spec, t, n, samples, seed: 11, tol: &tol };
    theorems::run(id, &job).unwrap()
}

fn check<'a>(rs: &'a [DefectReport], name: &str) -> &'a DefectReport {
    rs.iter().find(|r| r.check == name).unwrap()
}

#[test]
fn flat_base_nijenhuis() {
    // s = 0: the horizontal part vanishes identically, the mixed part does not
    let rs = run("nijenhuis_chern", "flat", 1.0, 2, 4);
    assert!(rs.iter().all(DefectReport::passed));
    let rs = run("aux", "flat", 1.0, 2, 2);
    let nij = check(&rs, "nijenhuis_integrable");
    assert_eq!(nij.expect, Expect::Exceed);
    assert!(nij.max_abs_residual > 1e-3);
}

#[test]
fn chern_connection_independent_of_t() {
    let rs = run("nijenhuis_chern", "s4", 0.5, 2, 4);
    assert!(check(&rs, "t_independence").max_abs_residual < 1e-10);
}

#[test]
fn integrability_follows_self_duality() {
    for (name, n, integrable) in [("cp2", 1, true), ("s2xs2", 1, false), ("s4", 2, false)] {
        let rs = run("aux", name, 1.0, n, 2);
        let r = check(&rs, "nijenhuis_integrable");
        assert_eq!(r.expect == Expect::Vanish, integrable, "{name}");
        assert_eq!(r.verdict, Verdict::Pass, "{name}: {}", r.max_abs_residual);
    }
}

#[test]
fn nearly_kaehler_at_six_over_s() {
    let rs = run("prop4", "s4", 0.5, 2, 4);
    let nk = check(&rs, "nearly_kaehler");
    assert!(nk.passed(), "{}", nk.max_abs_residual);
}

#[test]
fn levi_civita_remark_is_flagged_external() {
    let rs = run("aux", "s4", 1.0, 1, 3);
    let r = check(&rs, "levi_civita_hol_sect");
    assert!(r.external);
    assert_eq!(r.expect, Expect::Vanish);
    assert!(r.passed());
    let rs = run("aux", "s4", 2.0, 1, 3);
    assert_eq!(check(&rs, "levi_civita_hol_sect").expect, Expect::Exceed);
}

#[test]
fn einstein_without_self_duality_breaks_type11_for_j2() {
    let rs = run("prop2", "s2xs2", 1.0, 2, 4);
    assert_eq!(rs[0].expect, Expect::Exceed);
    assert!(rs[0].passed());
    let rs = run("prop2", "cp2", 1.0, 2, 4);
    assert_eq!(rs[0].expect, Expect::Vanish);
    assert!(rs[0].passed());
}

#[test]
fn hypothesis_is_enforced() {
    let spec = catalogue::by_name("perturbed").unwrap();
    let tol = Tolerances::default();
    let job = Job { spec: &spec, t: 1.0, n: 2, samples: 1, seed: 0, tol: &tol };
    assert!(matches!(theorems::run("nijenhuis_chern", &job), Err(Error::Hypothesis(_))));
}

#[test]
fn suite_order_is_stable() {
    let spec = catalogue::by_name("s4k2").unwrap();
    let tol = Tolerances::default();
    let a = theorems::suite(&spec, &theorems::THEOREMS, &[1.0, 0.25], &[1, 2], 2, 4, &tol).unwrap();
    let keys: Vec<_> = a.iter().map(|r| (r.theorem.clone(), r.check.clone(), r.t, r.n)).collect();
    let b = theorems::suite(&spec, &theorems::THEOREMS, &[1.0, 0.25], &[1, 2], 2, 4, &tol).unwrap();
    assert_eq!(keys, b.iter().map(|r| (r.theorem.clone(), r.check.clone(), r.t, r.n)).collect::<Vec<_>>());
    assert_eq!(a.first().unwrap().theorem, "prop1");
    assert!(a.iter().all(DefectReport::passed));
}
