//! Acceptance gate: ten end-to-end criteria, one pass/fail line each.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see every
//! line; any failing criterion also fails its test.

use std::process::Command;

use helmcheck::calculus::{d_tensor, nabla_tensor, FormField};
use helmcheck::catalog::{self, CandidateKind};
use helmcheck::expr::{homogeneity_degree, CoordIndex, PhasePoint, Rational, ScalarField};
use helmcheck::geom::{identity_battery, integrate_geodesic, Semispray, SprayGeometry};
use helmcheck::helmholtz::{
    helmholtz_residuals, homogeneous_check, multiplier_residuals, obstruction_rank, potential,
    projective_metrizability_check, ConditionName, ObstructionVerdict,
};
use helmcheck::parse_expr;
use helmcheck::sample::random_polynomial;
use helmcheck::SplitMix64;

fn report(n: usize, name: &str, ok: bool) -> bool {
    println!(
        "criterion {:02} ({name}): {}",
        n,
        if ok { "pass" } else { "FAIL" }
    );
    ok
}

fn geom_and_points(builtin: &str) -> (SprayGeometry, Vec<PhasePoint>) {
    let p = catalog::builtin(builtin).unwrap();
    let pts = p.sample();
    (SprayGeometry::new(p.spray.clone()), pts)
}

/// The variational form `theta = d_J((1/3) E^{3/2})` (components
/// 2-homogeneous, potential degree 3) for
/// the hyperbolic half-plane spray.
fn halfplane_cubic_form() -> FormField {
    FormField::semi_basic(
        2,
        &[
            parse_expr("y1*sqrt(y1^2+y2^2)/x2^3", 2).unwrap(),
            parse_expr("y2*sqrt(y1^2+y2^2)/x2^3", 2).unwrap(),
        ],
    )
}

/// Corpus for the equivalence and cross-check criteria: every catalog
/// one-form with its own geometry, plus random polynomial semi-basic
/// forms on two reference sprays.
fn equivalence_corpus() -> Vec<(SprayGeometry, Vec<PhasePoint>, FormField)> {
    let mut corpus = Vec::new();
    for name in catalog::BUILTIN_NAMES {
        let p = catalog::builtin(name).unwrap();
        let pts = p.sample();
        let geom = SprayGeometry::new(p.spray.clone());
        for c in &p.candidates {
            if c.kind == CandidateKind::OneForm {
                corpus.push((geom.clone(), pts.clone(), c.as_one_form(p.n).unwrap()));
            }
        }
    }
    let flat = catalog::builtin("flat2d").unwrap();
    let half = catalog::builtin("poincare-halfplane").unwrap();
    let mut rng = SplitMix64::new(0xACCE97);
    for _ in 0..25 {
        let theta = FormField::semi_basic(
            2,
            &[random_polynomial(&mut rng, 2, 2), random_polynomial(&mut rng, 2, 2)],
        );
        for p in [&flat, &half] {
            corpus.push((
                SprayGeometry::new(p.spray.clone()),
                p.sample(),
                theta.clone(),
            ));
        }
    }
    corpus
}

#[test]
fn criterion_01_structure_identities() {
    let mut ok = true;
    for (name, tol) in [("flat2d", 1e-12), ("poincare-halfplane", 1e-8)] {
        let (geom, pts) = geom_and_points(name);
        let (rows, verdict) = identity_battery(&geom, &pts, tol).unwrap();
        if !verdict {
            for r in rows.iter().filter(|r| !r.pass) {
                eprintln!("  {name}: {} residual {:?}", r.name, r.residual);
            }
            ok = false;
        }
    }
    assert!(report(1, "structure identities", ok));
}

#[test]
fn criterion_02_four_conditions_equivalent_to_closed_lie_derivative() {
    let mut disagreements = 0usize;
    for (geom, pts, theta) in equivalence_corpus() {
        let rep = helmholtz_residuals(&geom, &theta, &pts, 1e-9).unwrap();
        let closed = rep.condition(ConditionName::ClosedLSTheta).unwrap().pass;
        if rep.verdict != closed {
            disagreements += 1;
        }
    }
    assert!(report(2, "condition-set equivalence", disagreements == 0));
}

#[test]
fn criterion_03_homogeneity_drops_redundant_conditions() {
    let mut ok = true;
    // k = 1: both nabla_d_theta and d_Phi_theta become redundant.
    for name in ["flat2d", "poincare-halfplane"] {
        let p = catalog::builtin(name).unwrap();
        let pts = p.sample();
        let geom = SprayGeometry::new(p.spray.clone());
        let theta = p.candidate("norm").unwrap().as_one_form(p.n).unwrap();
        let rep = homogeneous_check(&geom, &theta, &pts, 1e-9).unwrap();
        ok &= rep.verdict && rep.homogeneity_degree == Some(Rational::integer(1));
        for cond in [ConditionName::NablaDTheta, ConditionName::DPhiTheta] {
            let c = rep.condition(cond).unwrap();
            ok &= c.informational && c.max_abs <= 1e-8 * (1.0 + c.scale);
        }
    }
    // k = 3: only d_Phi_theta becomes redundant.
    let (geom, pts) = geom_and_points("poincare-halfplane");
    let rep = homogeneous_check(&geom, &halfplane_cubic_form(), &pts, 1e-9).unwrap();
    ok &= rep.verdict && rep.homogeneity_degree == Some(Rational::integer(3));
    let c = rep.condition(ConditionName::DPhiTheta).unwrap();
    ok &= c.informational && c.max_abs <= 1e-8 * (1.0 + c.scale);
    let c = rep.condition(ConditionName::NablaDTheta).unwrap();
    ok &= !c.informational;
    assert!(report(3, "homogeneity reductions", ok));
}

#[test]
fn criterion_04_potential_recovery() {
    let mut ok = true;
    let cases: Vec<(&str, FormField, i64)> = vec![
        (
            "flat2d",
            catalog::builtin("flat2d")
                .unwrap()
                .candidate("norm")
                .unwrap()
                .as_one_form(2)
                .unwrap(),
            1,
        ),
        (
            "poincare-halfplane",
            catalog::builtin("poincare-halfplane")
                .unwrap()
                .candidate("norm")
                .unwrap()
                .as_one_form(2)
                .unwrap(),
            1,
        ),
        ("poincare-halfplane", halfplane_cubic_form(), 3),
    ];
    for (name, theta, k) in cases {
        let (geom, pts) = geom_and_points(name);
        let l = potential(&geom, &theta, Rational::integer(k), &pts, 1e-9).unwrap();
        // d_J L reproduces theta
        let resid = d_tensor(geom.vertical_endo(), &FormField::scalar(&l))
            .unwrap()
            .sub(&theta);
        let (r, _) = resid.max_abs(&pts).unwrap();
        let (s, _) = theta.max_abs(&pts).unwrap();
        ok &= r <= 1e-10 * (1.0 + s);
        // L is k-homogeneous
        ok &= homogeneity_degree(&l, &pts).unwrap() == Some(Rational::integer(k));
        // the potential is intrinsic to theta: a different semispray
        // over the same manifold yields the same function
        let other = SprayGeometry::new(Semispray::flat(2));
        let l2 = potential(&other, &theta, Rational::integer(k), &pts, 1e-9).unwrap();
        for p in &pts {
            ok &= (l.eval(p).unwrap() - l2.eval(p).unwrap()).abs()
                <= 1e-10 * (1.0 + l.eval(p).unwrap().abs());
        }
    }
    assert!(report(4, "potential recovery", ok));
}

#[test]
fn criterion_05_intrinsic_and_multiplier_formulations_agree() {
    let mut disagreements = 0usize;
    for (geom, pts, theta) in equivalence_corpus() {
        let intrinsic = helmholtz_residuals(&geom, &theta, &pts, 1e-9).unwrap();
        let multiplier = multiplier_residuals(&geom, &theta, &pts, 1e-9).unwrap().0;
        if intrinsic.verdict != multiplier.verdict {
            disagreements += 1;
        }
    }
    assert!(report(5, "intrinsic vs multiplier agreement", disagreements == 0));
}

#[test]
fn criterion_06_symbolic_derivatives_match_finite_differences() {
    let mut ok = true;
    let mut corpus: Vec<(usize, ScalarField, Vec<PhasePoint>)> = Vec::new();
    for name in catalog::BUILTIN_NAMES {
        let p = catalog::builtin(name).unwrap();
        let pts = p.sample();
        for g in p.spray.coefficients() {
            corpus.push((p.n, g.clone(), pts.clone()));
        }
        for c in &p.candidates {
            for f in &c.fields {
                corpus.push((p.n, f.clone(), pts.clone()));
            }
        }
    }
    let mut rng = SplitMix64::new(0xFD0F5E7);
    let flat = catalog::builtin("flat2d").unwrap();
    for _ in 0..20 {
        corpus.push((2, random_polynomial(&mut rng, 2, 3), flat.sample()));
    }
    let h = 1e-5;
    for (n, f, pts) in corpus {
        for a in 0..2 * n {
            let v = CoordIndex::from_flat(a, n);
            let sym = f.diff(v);
            for p in &pts {
                let fd = (f.eval(&p.shifted(v, h)).unwrap()
                    - f.eval(&p.shifted(v, -h)).unwrap())
                    / (2.0 * h);
                let sv = sym.eval(p).unwrap();
                if (fd - sv).abs() > 1e-6 * (1.0 + sv.abs().max(1.0)) {
                    eprintln!("  fd mismatch: {f} d/d{a} at {p:?}: sym {sv} fd {fd}");
                    ok = false;
                }
            }
        }
    }
    assert!(report(6, "finite-difference oracle", ok));
}

#[test]
fn criterion_07_obstruction_rank() {
    let mut ok = true;
    // flat spray: no constraints at all
    let (geom, pts) = geom_and_points("flat2d");
    for r in obstruction_rank(&geom, &pts, 2).unwrap() {
        ok &= r.rank == 0 && r.solution_dim == 3 && r.verdict == ObstructionVerdict::NoObstruction;
    }
    // half-plane: unobstructed, and the known metric multiplier
    // g = diag(1/x2^2, 1/x2^2) satisfies every constraint row
    let (geom, pts) = geom_and_points("poincare-halfplane");
    for r in obstruction_rank(&geom, &pts, 2).unwrap() {
        ok &= r.verdict == ObstructionVerdict::NoObstruction;
    }
    let phi = geom.jacobi().clone();
    let dphi = nabla_tensor(&geom, &phi);
    let ddphi = nabla_tensor(&geom, &dphi);
    for a in [&phi, &dphi, &ddphi] {
        let (scale, _) = a.max_abs(&pts).unwrap();
        for p in &pts {
            let m = a.eval(p).unwrap();
            let g = 1.0 / (p.x[1] * p.x[1]);
            // semi-basic block A^i_j sits at rows n.., cols ..n
            for i in 0..2 {
                for j in 0..2 {
                    let gij = g * m[2 + i][j] - g * m[2 + j][i];
                    if gij.abs() > 1e-9 * (1.0 + scale / (p.x[1] * p.x[1])) {
                        eprintln!("  constraint violated: {gij:e}");
                        ok = false;
                    }
                }
            }
        }
    }
    assert!(report(7, "obstruction rank", ok));
}

#[test]
fn criterion_08_geodesic_energy_and_convergence() {
    let mut ok = true;
    for (name, energy_src) in [
        ("flat2d", "y1^2 + y2^2"),
        ("poincare-halfplane", "(y1^2 + y2^2)/x2^2"),
    ] {
        let p = catalog::builtin(name).unwrap();
        let energy = parse_expr(energy_src, 2).unwrap();
        let start = PhasePoint::new(vec![0.0, 1.0], vec![0.6, 0.3], 0.1).unwrap();
        let traj = integrate_geodesic(&p.spray, &start, 1e-3, 1000, 0.01).unwrap();
        let e0 = energy.eval(&start).unwrap();
        let drift = traj
            .points
            .iter()
            .map(|q| (energy.eval(q).unwrap() - e0).abs())
            .fold(0.0_f64, f64::max);
        if drift > 1e-6 * (1.0 + e0.abs()) {
            eprintln!("  {name}: energy drift {drift:e}");
            ok = false;
        }
    }
    // order-4 self-convergence on the half-plane
    let p = catalog::builtin("poincare-halfplane").unwrap();
    let start = PhasePoint::new(vec![0.0, 1.0], vec![0.6, 0.3], 0.1).unwrap();
    let endpoint = |dt: f64, steps: usize| {
        let t = integrate_geodesic(&p.spray, &start, dt, steps, 0.01).unwrap();
        t.points.last().unwrap().clone()
    };
    let diff = |a: &PhasePoint, b: &PhasePoint| {
        a.x.iter()
            .chain(&a.y)
            .zip(b.x.iter().chain(&b.y))
            .map(|(u, v)| (u - v).abs())
            .fold(0.0_f64, f64::max)
    };
    let (p1, p2, p4) = (endpoint(0.02, 20), endpoint(0.01, 40), endpoint(0.005, 80));
    let ratio = diff(&p1, &p2) / diff(&p2, &p4);
    if !(12.0..=20.0).contains(&ratio) {
        eprintln!("  convergence ratio {ratio}");
        ok = false;
    }
    assert!(report(8, "geodesic cross-validation", ok));
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_helmcheck"))
}

const DEGENERATE_PROJECTIVE_PROBLEM: &str = r#"{
  "name": "degenerate",
  "n": 2,
  "spray": { "G": ["0", "0"] },
  "candidates": [
    {
      "kind": "one_form",
      "name": "bad",
      "components": ["y2/sqrt(y1^2+y2^2)", "0"]
    }
  ]
}"#;

#[test]
fn criterion_09_negative_controls() {
    let mut ok = true;
    // library: the asymmetric form fails exactly where expected
    let p = catalog::builtin("flat2d").unwrap();
    let pts = p.sample();
    let geom = SprayGeometry::new(p.spray.clone());
    let theta = p.candidate("asym").unwrap().as_one_form(2).unwrap();
    let rep = helmholtz_residuals(&geom, &theta, &pts, 1e-9).unwrap();
    ok &= !rep.verdict && !rep.condition(ConditionName::DJTheta).unwrap().pass;
    // library: a 0-homogeneous asymmetric form is not projectively variational
    let bad = FormField::semi_basic(
        2,
        &[parse_expr("y2/sqrt(y1^2+y2^2)", 2).unwrap(), ScalarField::zero(2)],
    );
    let rep = projective_metrizability_check(&geom, &bad, &pts, 1e-9).unwrap();
    ok &= !rep.verdict;
    // CLI exit codes
    let st = bin()
        .args(["check", "--builtin", "flat2d", "--candidate", "asym"])
        .output()
        .unwrap();
    ok &= st.status.code() == Some(1);
    let dir = std::env::temp_dir().join("helmcheck-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("degenerate.json");
    std::fs::write(&path, DEGENERATE_PROJECTIVE_PROBLEM).unwrap();
    let st = bin()
        .args(["metrizability", "--kind", "projective", "--file"])
        .arg(&path)
        .output()
        .unwrap();
    ok &= st.status.code() == Some(1);
    assert!(report(9, "negative controls", ok));
}

#[test]
fn criterion_10_reproducibility() {
    let mut ok = true;
    for args in [
        vec!["check", "--builtin", "flat2d", "--candidate", "norm", "--format", "json"],
        vec!["obstruction", "--builtin", "poincare-halfplane", "--format", "json"],
    ] {
        let a = bin().args(&args).output().unwrap();
        let b = bin().args(&args).output().unwrap();
        ok &= a.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    }
    // malformed problem files are a usage error, not a crash
    let dir = std::env::temp_dir().join("helmcheck-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    let st = bin()
        .args(["check", "--file"])
        .arg(&path)
        .output()
        .unwrap();
    ok &= st.status.code() == Some(2);
    assert!(report(10, "seeded reproducibility", ok));
}
