use fraclab_core::fixedpoint::{picard_iterate, IterationConfig, ProblemSpec, RhsKind, Verdict};
use fraclab_core::grid::{GridDomain, GridFunction, Shape};
use fraclab_core::nonexistence::{bump_family, certify};
use fraclab_core::poisson::{unit_ball_torsion, FactorizedSolver};
use fraclab_core::sobolev::{hardy_constant, hardy_ratio};

#[test]
fn torsion_then_picard_then_certificate() {
    let s = 0.6;
    let d = GridDomain::build(Shape::ball(1, 1.0), 1, 200, 2, true).unwrap();
    let solver = FactorizedSolver::assemble(&d, s).unwrap();
    let one = GridFunction::constant(&d, 1.0);
    let v = solver.solve(&one).unwrap();
    let exact = GridFunction::sample(&d, |x| unit_ball_torsion(1, s, x)).unwrap();
    assert!(v.sub(&exact).unwrap().max_abs() < 0.05 * exact.max_abs());

    let spec = |lambda| ProblemSpec {
        kind: RhsKind::DS2,
        s,
        lambda,
        mu: one.clone(),
        f: one.clone(),
        m: 2.0,
    };
    let small = picard_iterate(&spec(0.05), &IterationConfig::default(), &solver).unwrap();
    assert_eq!(small.verdict, Verdict::Converged);
    // the converged solution dominates the linear one
    let linear = v.scale(0.05);
    assert!(small.solution.sub(&linear).unwrap().values().iter().all(|&x| x >= 0.0));

    let family = bump_family(&d, &[vec![0.0]], &[0.5, 0.9]).unwrap();
    let (low, _) = certify(0.05, &one, 1.0, s, &family).unwrap();
    assert!(!low);
    let (high, cert) = certify(1e3, &one, 1.0, s, &family).unwrap();
    assert!(high && cert.lambda_star_star < 1e3);
}

#[test]
fn discrete_hardy_quotient_respects_the_constant() {
    let d = GridDomain::build(Shape::ball(2, 1.0), 2, 24, 2, true).unwrap();
    let lambda = hardy_constant(2, 0.5, 2.0, 1e-9).unwrap().value;
    let phi = GridFunction::sample(&d, |x| (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0)).unwrap();
    let q = hardy_ratio(&phi, 0.5, 2.0, 1.0).unwrap();
    assert!(q >= 0.98 * lambda, "{q} vs {lambda}");
}
