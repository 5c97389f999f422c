//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use fraclab_acceptance::{hardy_monte_carlo, herbst_constant, normalization_by_quadrature};
use fraclab_cli::commands::Subcommand;
use fraclab_core::fixedpoint::{
    lemma_g, lemma_g_root, picard_iterate, threshold_from_constants, IterationConfig, MeasureExponent,
    ProblemSpec, RhsKind, RhsOperator, Scheme, ThresholdInputs, Verdict,
};
use fraclab_core::grid::{GridDomain, GridFunction, Shape};
use fraclab_core::nonexistence::{bump, bump_family, certify, lambda_star_star, optimality_obstruction, cumulative_decay};
use fraclab_core::operators::{local_limit, normalization_constant};
use fraclab_core::poisson::{refinement_study, FactorizedSolver, StiffnessOperator};
use fraclab_core::regularity::{
    bound_formula, exponent_range, ratio, rational_to_f64, regularity_probe, Classification, Proposition, Upper,
};
use fraclab_core::sobolev::{gagliardo_double_sum, hardy_constant, hardy_ratio_with, Gagliardo, Region};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ball(dim: usize, radius: f64, nodes: usize) -> Arc<GridDomain> {
    GridDomain::build(Shape::ball(dim, radius), dim, nodes, 2, true).expect("grid")
}

fn normalization() -> Outcome {
    let mut worst: f64 = 0.0;
    for (n, s) in [(1, 0.5), (1, 0.75), (2, 0.5), (2, 0.75), (3, 0.9)] {
        let formula = normalization_constant(n, s).map_err(|e| e.to_string())?;
        let quad = normalization_by_quadrature(n, s);
        let e = rel(formula, quad);
        ensure(e <= 1e-3, || format!("N={n} s={s}: formula {formula} vs quadrature {quad}"))?;
        worst = worst.max(e);
    }
    let pi = std::f64::consts::PI;
    for (n, exact) in [(1, 1.0 / pi), (2, 0.5 / pi)] {
        let formula = normalization_constant(n, 0.5).unwrap();
        let quad = normalization_by_quadrature(n, 0.5);
        ensure(rel(formula, exact) <= 1e-10 && rel(quad, exact) <= 1e-10, || {
            format!("N={n} s=1/2: formula {formula}, quadrature {quad}, closed form {exact}")
        })?;
    }
    Ok(format!("max relative gap {worst:.1e}; closed forms within 1e-10"))
}

fn local_limits() -> Outcome {
    let d = ball(1, 2.5, 1024);
    let u = GridFunction::sample(&d, |x| (1.0 - x[0] * x[0] / 4.0).max(0.0).powi(4)).unwrap();
    let mut lap = Vec::new();
    let mut grad = Vec::new();
    for s in [0.8, 0.9, 0.95] {
        let r = local_limit(&u, s).map_err(|e| e.to_string())?;
        lap.push(r.laplacian);
        grad.push(r.gradient);
    }
    let down = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    ensure(down(&lap) && down(&grad), || format!("not decreasing: {lap:?} {grad:?}"))?;
    ensure(lap[2] <= 0.1 && grad[2] <= 0.1, || format!("s=0.95 errors {} {}", lap[2], grad[2]))?;
    // the coarser grid must give the same picture
    let coarse = ball(1, 2.5, 512);
    let uc = GridFunction::sample(&coarse, |x| (1.0 - x[0] * x[0] / 4.0).max(0.0).powi(4)).unwrap();
    let rc = local_limit(&uc, 0.95).map_err(|e| e.to_string())?;
    ensure((rc.laplacian - lap[2]).abs() <= 0.1 * lap[2], || {
        format!("laplacian error not grid-converged: {} at 512 vs {} at 1024", rc.laplacian, lap[2])
    })?;
    Ok(format!(
        "(-Δ)^s errors {:.3} {:.3} {:.3}, 𝔻² errors {:.3} {:.3} {:.3}",
        lap[0], lap[1], lap[2], grad[0], grad[1], grad[2]
    ))
}

fn poisson() -> Outcome {
    let s = 0.5;
    let d = ball(1, 1.0, 96);
    let op = StiffnessOperator::assemble(&d, s).map_err(|e| e.to_string())?;
    let a = op.matrix();
    let m = a.nrows();
    for i in 0..m {
        let mut off = 0.0;
        for j in 0..m {
            ensure(a[(i, j)] == a[(j, i)], || format!("asymmetric at ({i},{j})"))?;
            if i != j {
                ensure(a[(i, j)] <= 0.0, || format!("positive off-diagonal ({i},{j})"))?;
                off -= a[(i, j)];
            }
        }
        ensure(a[(i, i)] > off, || format!("row {i} not diagonally dominant"))?;
    }
    let solver = FactorizedSolver::new(op.clone()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    for _ in 0..200 {
        let h: Vec<f64> = (0..m)
            .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() })
            .collect();
        let u = solver.solve_interior(&h).map_err(|e| e.to_string())?;
        ensure(u.iter().all(|&v| v >= 0.0), || "negative value for h ≥ 0".into())?;
    }
    let v = GridFunction::from_interior(&d, &(0..m).map(|_| rng.random::<f64>() - 0.3).collect::<Vec<_>>()).unwrap();
    let energy = op.energy(&v).unwrap();
    let pairs = 0.5 * op.laplacian().normalization() * gagliardo_double_sum(&v, 2.0, s, Region::DOmega).unwrap();
    ensure(rel(energy, pairs) <= 1e-13, || format!("energy {energy} vs double sum {pairs}"))?;

    let rows = refinement_study(&Shape::ball(1, 1.0), s, 2.0, &[32, 64, 128, 256, 512, 1024], |_| 1.0)
        .map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    ensure(ratios.iter().all(|&r| r >= 1.5), || format!("self-convergence ratios {ratios:?}"))?;
    Ok(format!(
        "M-matrix, maximum principle on 200 draws, energy gap {:.1e}, ratios {}",
        rel(energy, pairs),
        ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(" ")
    ))
}

fn hardy() -> Outcome {
    let mut notes = Vec::new();
    for (n, s, p) in [(2usize, 0.5, 2.0), (2, 0.75, 2.0), (3, 0.5, 1.5)] {
        let q = hardy_constant(n, s, p, 1e-8).map_err(|e| e.to_string())?.value;
        let mc = hardy_monte_carlo(n, s, p, 20_000_000, 0x5eed + n as u64);
        ensure(rel(q, mc.mean) <= 1e-3, || {
            format!("({n},{s},{p}): quadrature {q} vs Monte Carlo {} ± {}", mc.mean, mc.std_error)
        })?;
        if p == 2.0 {
            let h = herbst_constant(n, s);
            ensure(rel(q, h) <= 1e-6, || format!("({n},{s},2): quadrature {q} vs closed form {h}"))?;
        }
        notes.push(format!("{:.1e}", rel(q, mc.mean)));
    }

    let (s, p) = (0.5, 2.0);
    let lambda = hardy_constant(2, s, p, 1e-10).unwrap().value;
    let d = ball(2, 1.0, 40);
    let g = Gagliardo::new(&d, s, p).unwrap();
    let mut worst = f64::INFINITY;
    for k in 0..50 {
        let angle = 2.399963 * k as f64;
        let r0 = 0.6 * ((k as f64 + 0.5) / 50.0).sqrt();
        let center = [r0 * angle.cos(), r0 * angle.sin()];
        let width = 0.35 + 0.6 * ((k * 7) % 50) as f64 / 50.0;
        let phi = bump(&d, &center, width).unwrap();
        let q = hardy_ratio_with(&g, &phi, p * s).map_err(|e| e.to_string())?;
        worst = worst.min(q / lambda);
    }
    ensure(worst >= 0.98, || format!("smallest quotient {worst} Λ"))?;

    let line = ball(1, 1.0, 1024);
    let rows = optimality_obstruction(&line, 0.25, 1.0, 0.1, &[1.0, 0.5, 0.25]).map_err(|e| e.to_string())?;
    let decay = cumulative_decay(&rows);
    ensure(decay >= 1.3, || format!("cumulative decay {decay}"))?;
    Ok(format!(
        "Monte Carlo gaps {}; min quotient {worst:.4} Λ; decay {decay:.3}",
        notes.join(" ")
    ))
}

fn thresholds() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(41);
    let mut worst_g: f64 = 0.0;
    for _ in 0..1000 {
        let a = 10f64.powf(rng.random_range(-1.0..1.0));
        let b = 10f64.powf(rng.random_range(-1.0..1.0));
        let p = rng.random_range(1.1..4.0);
        let (c, t) = lemma_g_root(a, b, p).map_err(|e| e.to_string())?;
        let g = lemma_g(a, b, c, p, t).abs() / t;
        worst_g = worst_g.max(g);
    }
    ensure(worst_g <= 1e-12, || format!("|g(t*)|/t* up to {worst_g}"))?;
    let ones = ThresholdInputs {
        c_main: 1.0,
        c_aux: Some(1.0),
        mu_inf: 1.0,
        f_norm: 1.0,
        ..Default::default()
    };
    let t = threshold_from_constants(&ones, Scheme::P).unwrap();
    ensure(t.lambda_star == 0.25 && t.l == 0.25, || format!("all-ones: λ* {} l {}", t.lambda_star, t.l))?;

    let mut worst = BTreeMap::new();
    let schemes = [
        ("P", Scheme::P),
        ("P~", Scheme::PTilde),
        ("Q/threshold", Scheme::Q(MeasureExponent::Threshold)),
        ("Q/radius", Scheme::Q(MeasureExponent::Radius)),
    ];
    for (name, scheme) in schemes {
        let mut w: f64 = 0.0;
        for _ in 0..1000 {
            let mut k = ThresholdInputs {
                c_main: 10f64.powf(rng.random_range(-1.0..1.0)),
                mu_inf: 10f64.powf(rng.random_range(-1.0..1.0)),
                f_norm: 10f64.powf(rng.random_range(-1.0..1.0)),
                ..Default::default()
            };
            if let Scheme::Q(_) = scheme {
                let q = rng.random_range(1.1..3.0);
                let m = rng.random_range(1.0..3.0);
                k.omega_measure = Some(10f64.powf(rng.random_range(-1.0..1.0)));
                k.q = Some(q);
                k.m = Some(m);
                k.r = Some(q * m * rng.random_range(1.05..3.0));
            } else {
                k.c_aux = Some(10f64.powf(rng.random_range(-1.0..1.0)));
            }
            let t = threshold_from_constants(&k, scheme).map_err(|e| e.to_string())?;
            w = w.max(t.identity_residual());
        }
        ensure(w <= 1e-12, || format!("{name}: identity residual {w}"))?;
        worst.insert(name, w);
    }
    Ok(format!(
        "max |g(t*)|/t* {worst_g:.1e}; identity residuals {}",
        worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect::<Vec<_>>().join(", ")
    ))
}

fn fixed_point() -> Outcome {
    let s = 0.75;
    let d = ball(1, 1.0, 64);
    let solver = FactorizedSolver::assemble(&d, s).map_err(|e| e.to_string())?;
    let lambda0 = 0.01;
    let u_star = bump(&d, &[0.0], 1.0).unwrap().scale(lambda0);
    let kinds = [
        RhsKind::DS2,
        RhsKind::UTimesDS2,
        RhsKind::AbsFracPowerQ { t: 0.5, q: 2.0 },
        RhsKind::RieszGradQ { q: 2.0 },
        RhsKind::BSqAlpha { q: 1.5, alpha: 1.5 },
    ];
    let cfg = IterationConfig {
        tolerance: 1e-12,
        max_iter: 100,
        ..Default::default()
    };
    let mut notes = Vec::new();
    for kind in kinds {
        let mut spec = ProblemSpec {
            kind,
            s,
            lambda: lambda0,
            mu: GridFunction::constant(&d, 1.0),
            f: GridFunction::zeros(&d),
            m: 2.0,
        };
        let interior = u_star.interior_values();
        let g = RhsOperator::new(&spec, &solver).map_err(|e| e.to_string())?.nonlinearity(&interior);
        let au = solver.operator().apply_interior(&interior);
        let f: Vec<f64> = au.iter().zip(&g).map(|(a, g)| (a - g) / lambda0).collect();
        spec.f = GridFunction::from_interior(&d, &f).unwrap();
        let rep = picard_iterate(&spec, &cfg, &solver).map_err(|e| e.to_string())?;
        let err = rep.solution.sub(&u_star).unwrap().max_abs() / u_star.max_abs();
        ensure(rep.verdict == Verdict::Converged && rep.iterations <= 100 && err <= 1e-6, || {
            format!("{}: {:?} after {} iterations, error {err}", kind.label(), rep.verdict, rep.iterations)
        })?;
        notes.push(format!("{} {}it", kind.label(), rep.iterations));
    }

    let mut lambda = 0.01;
    let mut diverged_at = None;
    let base = |kind, lambda| ProblemSpec {
        kind,
        s,
        lambda,
        mu: GridFunction::constant(&d, 1.0),
        f: GridFunction::constant(&d, 1.0),
        m: 2.0,
    };
    for _ in 0..30 {
        let rep = picard_iterate(&base(RhsKind::DS2, lambda), &IterationConfig::default(), &solver)
            .map_err(|e| e.to_string())?;
        if rep.verdict == Verdict::Diverged {
            diverged_at = Some(lambda);
            break;
        }
        lambda *= 2.0;
    }
    let diverged_at = diverged_at.ok_or("λ ladder never diverged")?;

    let a = picard_iterate(&base(RhsKind::DS2, 0.1), &IterationConfig::default(), &solver).unwrap();
    let b = picard_iterate(&base(RhsKind::BSqAlpha { q: 2.0, alpha: 2.0 }, 0.1), &IterationConfig::default(), &solver)
        .unwrap();
    let gap = a.solution.sub(&b.solution).unwrap().max_abs() / a.solution.max_abs();
    ensure(gap <= 4.0 * f64::EPSILON && a.iterations == b.iterations, || {
        format!("𝔻² vs 𝔹² gap {gap}, iterations {} vs {}", a.iterations, b.iterations)
    })?;
    Ok(format!("{}; diverged at λ = {diverged_at}; 𝔹² gap {gap:.1e}", notes.join(", ")))
}

fn nonexistence() -> Outcome {
    let s = 0.75;
    let d = ball(1, 1.0, 64);
    let f = GridFunction::constant(&d, 1.0);
    let phi = bump(&d, &[0.1], 0.7).unwrap();
    let base = lambda_star_star(&phi, &f, 2.0, s).map_err(|e| e.to_string())?.lambda_star_star;
    for c in [1e-3, 7.5, 1e3] {
        let v = lambda_star_star(&phi.scale(c), &f, 2.0, s).unwrap().lambda_star_star;
        ensure(rel(v, base) <= 1e-10, || format!("scale {c}: {v} vs {base}"))?;
    }
    let halved = lambda_star_star(&phi, &f, 1.0, s).unwrap().lambda_star_star;
    ensure(halved == 2.0 * base, || format!("μ₁/2 gives {halved}, expected {}", 2.0 * base))?;

    let family = bump_family(&d, &[vec![0.0], vec![0.3], vec![-0.4]], &[0.4, 0.6, 0.9]).unwrap();
    let mut seen = false;
    let mut flips = 0;
    for k in 0..40 {
        let lambda = 0.05 * 1.25f64.powi(k);
        let (yes, _) = certify(lambda, &f, 2.0, s, &family).map_err(|e| e.to_string())?;
        ensure(!seen || yes, || format!("certificate lost at λ = {lambda}"))?;
        if yes && !seen {
            flips += 1;
        }
        seen |= yes;
    }
    ensure(flips == 1, || "certify never switched on".into())?;
    Ok(format!("λ** = {base:.6}, exact halving, certify monotone over 40 λ"))
}

fn exponents() -> Outcome {
    use Proposition::*;
    let r = |t: &str| fraclab_core::regularity::parse_rational(t).unwrap();
    // (proposition, N, s, t, m, case, upper, inclusive); upper "inf" for ∞
    #[rustfmt::skip]
    let cases: [(Proposition, u32, &str, Option<&str>, &str, Option<u8>, &str, bool); 40] = [
        (P31, 2, "3/4", Some("1/2"), "1", Some(1), "2", false),
        (P31, 2, "3/4", Some("1/2"), "6/5", Some(2), "3", true),
        (P31, 2, "3/4", Some("1/2"), "2", Some(3), "8", false),
        (P31, 2, "3/4", Some("1/2"), "4", Some(4), "inf", false),
        (P31, 2, "3/4", Some("1/2"), "4/3", Some(3), "4", false),
        (P31, 3, "2/3", Some("1/3"), "1", Some(1), "3/2", false),
        (P31, 3, "2/3", Some("1/3"), "2", Some(2), "6", true),
        (P31, 3, "2/3", Some("1/3"), "3", Some(3), "27/2", false),
        (P31, 3, "2/3", Some("1/3"), "9", Some(4), "inf", false),
        (P31, 2, "9/10", Some("1/5"), "1", Some(1), "5", false),
        (CorTEqS, 2, "3/4", None, "1", None, "8/5", false),
        (CorTEqS, 2, "3/4", None, "6/5", None, "24/11", true),
        (CorTEqS, 2, "3/4", None, "2", None, "16/3", false),
        (CorTEqS, 3, "2/3", None, "10", None, "inf", false),
        (Cr2, 2, "3/4", Some("1/2"), "3/2", None, "6", false),
        (Cr2, 2, "3/4", Some("1/2"), "2", None, "inf", false),
        (Cr2, 3, "2/3", Some("1/3"), "5/2", None, "15", false),
        (Cr3, 2, "3/4", Some("7/8"), "3/2", None, "48/17", false),
        (Cr3, 3, "2/3", Some("5/6"), "3", None, "6", false),
        (Rg1, 2, "3/4", Some("1/2"), "1", None, "2", false),
        (Rg1, 2, "3/4", Some("1/2"), "3/2", None, "6", true),
        (Rg1, 2, "3/4", Some("3/4"), "2", None, "8", true),
        (Rg1, 2, "3/4", Some("1/2"), "2", None, "inf", false),
        (Rg1, 3, "2/3", Some("1/3"), "2", None, "6", true),
        (CorRg1, 2, "3/4", None, "1", None, "8/5", false),
        (CorRg1, 2, "3/4", None, "2", None, "8", true),
        (CorRg1, 2, "3/4", None, "3", None, "inf", false),
        (CorRg1, 3, "3/5", None, "2", None, "10/3", true),
        (Lpps, 2, "3/4", None, "1", None, "4", false),
        (Lpps, 2, "1/4", None, "2", None, "4", true),
        (Lpps, 2, "1/4", None, "1", None, "4/3", false),
        (Lpps, 3, "3/4", None, "2", None, "inf", false),
        (Lpps, 2, "1/4", None, "4", None, "inf", false),
        (Ap, 2, "3/4", None, "1", None, "4/3", false),
        (Ap, 2, "3/4", None, "3", None, "12", true),
        (Ap, 2, "3/4", None, "4", None, "inf", false),
        (Cr2, 2, "3/4", Some("1/2"), "1", None, "reject", false),
        (Cr2, 2, "3/4", Some("3/4"), "2", None, "reject", false),
        (Cr3, 2, "3/4", Some("7/8"), "3", None, "reject", false),
        (Cr3, 2, "3/4", Some("1/2"), "3/2", None, "reject", false),
    ];
    let mut hit = BTreeMap::new();
    for (k, &(prop, n, s, t, m, case, upper, incl)) in cases.iter().enumerate() {
        let t = t.map(r);
        let got = exponent_range(prop, n, &r(s), t.as_ref(), &r(m));
        let label = format!("#{} {prop} N={n} s={s} m={m}", k + 1);
        if upper == "reject" {
            ensure(got.is_err(), || format!("{label}: accepted"))?;
            continue;
        }
        let got = got.map_err(|e| format!("{label}: {e}"))?;
        let want = if upper == "inf" { Upper::Infinite } else { Upper::Finite(r(upper)) };
        ensure(got.upper == want, || format!("{label}: upper {} expected {upper}", got.upper))?;
        if want != Upper::Infinite {
            ensure(got.upper_inclusive == incl, || format!("{label}: inclusive flag {}", got.upper_inclusive))?;
        }
        if let Some(c) = case {
            ensure(got.case == c, || format!("{label}: case {} expected {c}", got.case))?;
        }
        ensure(got.lower == ratio(1, 1), || format!("{label}: lower {}", got.lower))?;
        hit.entry(prop.id()).or_insert_with(Vec::new).push(got.case);
    }
    ensure(exponent_range(P31, 1, &r("3/4"), Some(&r("1/2")), &r("1")).is_err(), || "N = 1 accepted".into())?;
    ensure(exponent_range(P31, 2, &r("1/2"), Some(&r("1/4")), &r("1")).is_err(), || "s = 1/2 accepted".into())?;

    for (n, s) in [(2u32, "3/4"), (3, "2/3"), (2, "9/10")] {
        for m in ["1", "6/5", "4/3", "2", "3", "5", "10"] {
            let a = exponent_range(CorTEqS, n, &r(s), None, &r(m)).unwrap();
            let b = exponent_range(P31, n, &r(s), Some(&r(s)), &r(m)).unwrap();
            ensure((a.upper.clone(), a.upper_inclusive, a.case) == (b.upper.clone(), b.upper_inclusive, b.case), || {
                format!("t = s mismatch at N={n} s={s} m={m}")
            })?;
            let p = bound_formula(P31, 2, n, &r(s), &r("1"), &r(m));
            let q = bound_formula(Ap, 2, n, &r(s), &r("1"), &r(m));
            ensure(p == q, || format!("t = 1 mismatch at N={n} s={s} m={m}"))?;
        }
    }
    Ok(format!("40 cases over {} results, consistency relations exact", hit.len()))
}

fn probe() -> Outcome {
    let (s, t) = (0.2, 0.18);
    let eps = 0.05;
    let m = 1.0;
    let beta = (1.0 - eps) / m;
    let threshold = rational_to_f64(
        &bound_formula(Proposition::P31, 1, 1, &ratio(1, 5), &ratio(9, 50), &ratio(1, 1)).unwrap(),
    );
    let levels = [256, 1024, 4096];
    let run = |beta: f64, p: f64| regularity_probe(beta, s, t, p, &levels).map_err(|e| e.to_string());
    let mut out = Vec::new();
    for (b, p, want) in [
        (0.0, 1.2 * threshold, Classification::Bounded),
        (beta, 1.2 * threshold, Classification::Growing),
        (beta, 0.8 * threshold, Classification::Bounded),
    ] {
        let rep = run(b, p)?;
        ensure(rep.classification == want, || {
            format!("β={b} p={p}: {} with growth {:?}", rep.classification.label(), rep.growth)
        })?;
        out.push(format!(
            "β={b} p={p:.3} {} [{}]",
            rep.classification.label(),
            rep.growth.iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>().join(" ")
        ));
    }
    Ok(out.join("; "))
}

fn csvs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension().and_then(|x| x.to_str()) == Some("csv"))
                .then(|| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        })
        .collect()
}

fn determinism() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&configs)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().and_then(|x| x.to_str()) == Some("toml"))
        .collect();
    paths.sort();
    ensure(!paths.is_empty(), || "no configs found".into())?;
    let all = [
        Subcommand::Solve,
        Subcommand::Iterate,
        Subcommand::Sweep,
        Subcommand::Hardy,
        Subcommand::Exponents,
        Subcommand::Certify,
        Subcommand::Probe,
        Subcommand::Limits,
    ];
    let mut files = 0;
    for path in &paths {
        let text = std::fs::read_to_string(path).unwrap();
        let cfg = fraclab_cli::config::ExperimentConfig::parse(&text).map_err(|e| e.to_string())?;
        let name = cfg.subcommand.clone().ok_or_else(|| format!("{}: no subcommand key", path.display()))?;
        let cmd = *all.iter().find(|c| c.name() == name).ok_or("unknown subcommand")?;
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        fraclab_cli::execute(cmd, path, a.path()).map_err(|e| format!("{}: {e}", path.display()))?;
        fraclab_cli::execute(cmd, path, b.path()).map_err(|e| format!("{}: {e}", path.display()))?;
        let first = csvs(a.path());
        ensure(!first.is_empty() && first == csvs(b.path()), || format!("{}: CSVs differ", path.display()))?;
        // a warm kernel cache must not change the bytes either
        fraclab_cli::execute(cmd, path, a.path()).map_err(|e| e.to_string())?;
        ensure(first == csvs(a.path()), || format!("{}: cached rerun differs", path.display()))?;
        files += first.len();
    }
    Ok(format!("{} configs, {files} CSVs identical across cold and warm reruns", paths.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("normalization cross-check", normalization, 60),
        ("local limits", local_limits, 300),
        ("Poisson solver identities", poisson, 300),
        ("Hardy suite", hardy, 600),
        ("threshold constants", thresholds, 600),
        ("fixed point", fixed_point, 900),
        ("non-existence certificates", nonexistence, 600),
        ("exponent oracle", exponents, 600),
        ("regularity probe", probe, 600),
        ("determinism", determinism, 1800),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, check, budget)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match result {
            Ok(msg) if elapsed > Duration::from_secs(*budget) => {
                Err(format!("{msg}; took {elapsed:.0?}, budget {budget}s"))
            }
            r => r,
        };
        match result {
            Ok(msg) => println!("PASS criterion {id:>2} ({name}, {:.1}s): {msg}", elapsed.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {id:>2} ({name}, {:.1}s): {msg}", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
