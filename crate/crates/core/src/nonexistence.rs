//! Test-function certificates of non-existence for large `λ`, and the
//! shrinking-support obstruction behind the optimality of the Hardy weight.
//!
//! For a test function `φ` with `∫ f φ² > 0`,
//!
//! `λ**(φ) = [φ]²_{s,2,D_Ω} / (μ₁ ∫ f φ²)`
//!
//! and any `λ > λ**(φ)` is incompatible with a solution in the energy class.
//! Everything here is computed on the grid, so a certificate speaks about the
//! discrete problem only.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{check_unit_order, Error, Result};
use crate::grid::{GridDomain, GridFunction};
use crate::sobolev::{hardy_ratio_with, Gagliardo, Region};

/// Caveat attached to every certificate report.
pub const CAVEAT: &str =
    "certificate refers to discrete energy-class solvability; the continuum statement is not asserted";

/// A named test function.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub id: String,
    pub phi: GridFunction,
}

/// The value `λ**(φ)` and the two quadratic forms it is made of.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub id: String,
    pub lambda_star_star: f64,
    pub mu1: f64,
    /// `[φ]²_{s,2,D_Ω}`.
    pub numerator: f64,
    /// `∫ f φ²`.
    pub denominator: f64,
}

/// `(1 - |x-c|²/ρ²)²₊`.
pub fn bump(domain: &Arc<GridDomain>, center: &[f64], radius: f64) -> Result<GridFunction> {
    if center.len() != domain.dim() {
        return Err(Error::param(format!(
            "bump center has {} coordinates, grid has N = {}",
            center.len(),
            domain.dim()
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::param(format!("bump radius ρ > 0 required, got {radius}")));
    }
    GridFunction::sample(domain, |x| {
        let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        (1.0 - r2 / (radius * radius)).max(0.0).powi(2)
    })
}

/// Bumps over every (center, width) pair, with ids `bump[c=(..),rho=..]`.
pub fn bump_family(domain: &Arc<GridDomain>, centers: &[Vec<f64>], widths: &[f64]) -> Result<Vec<TestFunction>> {
    let mut out = Vec::with_capacity(centers.len() * widths.len());
    for c in centers {
        for &w in widths {
            let coords: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
            out.push(TestFunction {
                id: format!("bump[c=({}),rho={w}]", coords.join(",")),
                phi: bump(domain, c, w)?,
            });
        }
    }
    Ok(out)
}

fn check_mu1(mu1: f64) -> Result<()> {
    if mu1 > 0.0 && mu1.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("μ₁ > 0 required, got {mu1}")))
    }
}

fn certificate_with(g: &Gagliardo, id: &str, phi: &GridFunction, f: &GridFunction, mu1: f64) -> Result<Certificate> {
    let denominator = f.mul(&phi.mul(phi)?)?.integrate();
    if !(denominator > 0.0) {
        return Err(Error::param(format!(
            "∫ f φ² > 0 required for test function {id}, got {denominator:e}"
        )));
    }
    let numerator = g.evaluate(phi, Region::DOmega)?;
    Ok(Certificate {
        id: id.to_string(),
        lambda_star_star: numerator / (mu1 * denominator),
        mu1,
        numerator,
        denominator,
    })
}

/// `λ**(φ)` for one test function.
///
/// ```
/// use fraclab_core::grid::{GridDomain, GridFunction, Shape};
/// use fraclab_core::nonexistence::{bump, lambda_star_star};
/// let d = GridDomain::build(Shape::ball(1, 1.0), 1, 64, 2, true).unwrap();
/// let phi = bump(&d, &[0.0], 0.8).unwrap();
/// let f = GridFunction::constant(&d, 1.0);
/// let a = lambda_star_star(&phi, &f, 1.0, 0.75).unwrap();
/// let b = lambda_star_star(&phi.scale(3.0), &f, 1.0, 0.75).unwrap();
/// assert!((a.lambda_star_star - b.lambda_star_star).abs() < 1e-10 * a.lambda_star_star);
/// ```
pub fn lambda_star_star(phi: &GridFunction, f: &GridFunction, mu1: f64, s: f64) -> Result<Certificate> {
    check_mu1(mu1)?;
    let g = Gagliardo::new(phi.domain(), s, 2.0)?;
    certificate_with(&g, "phi", phi, f, mu1)
}

/// Whether `λ` exceeds the smallest `λ**` over the admissible members of
/// `family`, together with the minimizing certificate.
///
/// Members with `∫ f φ² ≤ 0` are not admissible and are skipped.
pub fn certify(
    lambda: f64,
    f: &GridFunction,
    mu1: f64,
    s: f64,
    family: &[TestFunction],
) -> Result<(bool, Certificate)> {
    check_mu1(mu1)?;
    if !lambda.is_finite() {
        return Err(Error::param(format!("λ must be finite, got {lambda}")));
    }
    let g = Gagliardo::new(f.domain(), s, 2.0)?;
    let certs: Vec<Certificate> = family
        .par_iter()
        .map(|t| certificate_with(&g, &t.id, &t.phi, f, mu1))
        .collect::<Vec<_>>()
        .into_iter()
        .filter_map(|c| match c {
            Ok(c) => Some(Ok(c)),
            Err(Error::Parameter(_)) => None,
            Err(e) => Some(Err(e)),
        })
        .collect::<Result<_>>()?;
    // First minimum in family order, so ties resolve deterministically.
    let best = certs
        .into_iter()
        .reduce(|a, b| if b.lambda_star_star < a.lambda_star_star { b } else { a })
        .ok_or_else(|| Error::param("no test function in the family has ∫ f φ² > 0"))?;
    Ok((lambda > best.lambda_star_star, best))
}

/// One row of an obstruction table.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientRow {
    pub radius: f64,
    pub quotient: f64,
    /// `quotient(previous radius) / quotient(radius)`.
    pub decay: Option<f64>,
}

/// `[φ_r]²_{s,2,D_Ω} / ∫ φ_r² |x|^{-β}` for centered bumps `φ_r` of radius
/// `r`, in the given order of radii.
pub fn weighted_quotients(domain: &Arc<GridDomain>, s: f64, beta: f64, radii: &[f64]) -> Result<Vec<QuotientRow>> {
    check_unit_order("s", s)?;
    if radii.is_empty() {
        return Err(Error::param("at least one radius is required"));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param("radii must be strictly decreasing"));
    }
    let g = Gagliardo::new(domain, s, 2.0)?;
    let center = vec![0.0; domain.dim()];
    let quotients = radii
        .par_iter()
        .map(|&r| hardy_ratio_with(&g, &bump(domain, &center, r)?, beta))
        .collect::<Result<Vec<f64>>>()?;
    Ok(radii
        .iter()
        .zip(&quotients)
        .enumerate()
        .map(|(k, (&radius, &quotient))| QuotientRow {
            radius,
            quotient,
            decay: (k > 0).then(|| quotients[k - 1] / quotient),
        })
        .collect())
}

/// Obstruction table for the weight `|x|^{-(N-ε)/m}`; needs `(N-ε)/m > 2s`.
///
/// The continuum quotient scales like `r^{(N-ε)/m - 2s}`, so it tends to
/// zero and no positive lower bound can hold.
pub fn optimality_obstruction(
    domain: &Arc<GridDomain>,
    s: f64,
    m: f64,
    eps: f64,
    radii: &[f64],
) -> Result<Vec<QuotientRow>> {
    check_unit_order("s", s)?;
    check_unit_order("ε", eps)?;
    let n = domain.dim() as f64;
    if !(m >= 1.0) {
        return Err(Error::param(format!("m ≥ 1 required, got {m}")));
    }
    let beta = (n - eps) / m;
    if !(beta > 2.0 * s) {
        return Err(Error::param(format!(
            "(N-ε)/m > 2s required, got (N-ε)/m = {beta} and 2s = {}",
            2.0 * s
        )));
    }
    weighted_quotients(domain, s, beta, radii)
}

/// Cumulative decay `quotient(first) / quotient(last)`.
pub fn cumulative_decay(rows: &[QuotientRow]) -> f64 {
    match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => a.quotient / b.quotient,
        _ => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Shape;

    fn line(n: usize) -> Arc<GridDomain> {
        GridDomain::build(Shape::ball(1, 1.0), 1, n, 2, true).unwrap()
    }

    #[test]
    fn mu1_doubling_halves() {
        let d = line(80);
        let phi = bump(&d, &[0.1], 0.6).unwrap();
        let f = GridFunction::sample(&d, |x| 1.0 + x[0]).unwrap();
        let a = lambda_star_star(&phi, &f, 1.0, 0.75).unwrap();
        let b = lambda_star_star(&phi, &f, 2.0, 0.75).unwrap();
        assert_eq!(a.lambda_star_star, 2.0 * b.lambda_star_star);
        assert_eq!(a.numerator, b.numerator);
    }

    #[test]
    fn nonpositive_pairing_is_rejected() {
        let d = line(40);
        let phi = bump(&d, &[0.0], 0.5).unwrap();
        let f = GridFunction::constant(&d, -1.0);
        let e = lambda_star_star(&phi, &f, 1.0, 0.5).unwrap_err();
        assert!(e.to_string().contains("∫ f φ² > 0"));
        let fam = vec![TestFunction { id: "a".into(), phi }];
        assert!(certify(1.0, &f, 1.0, 0.5, &fam).is_err());
    }

    #[test]
    fn wider_bumps_lower_the_threshold() {
        let d = line(120);
        let f = GridFunction::constant(&d, 1.0);
        let vals: Vec<f64> = [0.3, 0.6, 0.95]
            .iter()
            .map(|&w| lambda_star_star(&bump(&d, &[0.0], w).unwrap(), &f, 1.0, 0.75).unwrap().lambda_star_star)
            .collect();
        assert!(vals[0] > vals[1] && vals[1] > vals[2] && vals[2] > 0.0, "{vals:?}");
    }

    #[test]
    fn certify_is_monotone_and_family_min_is_antitone() {
        let d = line(60);
        let f = GridFunction::constant(&d, 1.0);
        let small = bump_family(&d, &[vec![0.0]], &[0.4]).unwrap();
        let large = bump_family(&d, &[vec![0.0], vec![0.2]], &[0.4, 0.8]).unwrap();
        let (_, c_small) = certify(0.0, &f, 1.0, 0.6, &small).unwrap();
        let (_, c_large) = certify(0.0, &f, 1.0, 0.6, &large).unwrap();
        assert!(c_large.lambda_star_star <= c_small.lambda_star_star);
        let m = c_large.lambda_star_star;
        assert!(!certify(0.5 * m, &f, 1.0, 0.6, &large).unwrap().0);
        assert!(certify(2.0 * m, &f, 1.0, 0.6, &large).unwrap().0);
        assert!(!certify(m, &f, 1.0, 0.6, &large).unwrap().0);
    }

    #[test]
    fn obstruction_rejects_flat_weights() {
        let d = line(40);
        let e = optimality_obstruction(&d, 0.75, 1.0, 0.5, &[1.0, 0.5]).unwrap_err();
        assert!(e.to_string().contains("(N-ε)/m > 2s"));
    }

    #[test]
    fn obstruction_decays_in_one_dimension() {
        let d = line(1024);
        // (1 - 0.1)/1 - 2·0.3 = 0.3
        let rows = optimality_obstruction(&d, 0.3, 1.0, 0.1, &[1.0, 0.5, 0.25, 0.125]).unwrap();
        for r in &rows[1..] {
            assert!(r.decay.unwrap() > 1.0, "{rows:?}");
        }
        assert!(cumulative_decay(&rows) >= 1.3, "{rows:?}");
    }
}
