//! Gagliardo seminorms, the Sobolev quotient and the sharp fractional Hardy
//! constant.
//!
//! The seminorm of order `s` and power `p` reuses the cell-averaged kernel of
//! order `σ = sp`, so it shares every weight with the operators of
//! [`crate::operators`]. The Hardy constant is the one-dimensional double
//! integral
//!
//! `Λ_{N,s,p} = 2 ∫_0^1 σ^{ps-1} |1 - σ^{(N-ps)/p}|^p Φ_{N,s,p}(σ) dσ`,
//!
//! `Φ_{N,s,p}(σ) = |S^{N-2}| ∫_{-1}^1 (1-t²)^{(N-3)/2} (1 - 2σt + σ²)^{-(N+ps)/2} dt`,
//!
//! evaluated by nested tanh–sinh quadrature. Near `σ = 1` the inner
//! integrand peaks at `t = 1` on a scale `(1-σ)²`, so the inner interval is
//! split geometrically from that scale outward.

use std::sync::Arc;

use crate::error::{check_unit_order, Error, Result};
use crate::grid::GridFunction;
use crate::kernel::{sphere_area, KernelTable};
use crate::operators::{pair_sums, Region as PairRegion};
use crate::quadrature::{Estimate, TanhSinh};

/// Pair region of a seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `Ω × Ω`.
    OmegaOmega,
    /// `(Ω × ℝ^N) ∪ (CΩ × Ω)`.
    DOmega,
    /// `ℝ^N × ℝ^N` for a function vanishing outside `Ω`; equal to `DOmega`.
    FullSpace,
}

/// Parameters of a Gagliardo seminorm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormSpec {
    pub s: f64,
    pub p: f64,
    pub region: Region,
}

/// Reusable evaluator of `Σ |u(x)-u(y)|^p / |x-y|^{N+sp}` on one domain.
#[derive(Debug, Clone)]
pub struct Gagliardo {
    table: Arc<KernelTable>,
    p: f64,
    own: f64,
}

impl Gagliardo {
    /// Evaluator for order `s` and power `p`; requires `sp < 2`.
    pub fn new(domain: &Arc<crate::grid::GridDomain>, s: f64, p: f64) -> Result<Gagliardo> {
        check_unit_order("s", s)?;
        if !(p >= 1.0) {
            return Err(Error::param(format!("p ≥ 1 required, got {p}")));
        }
        if s * p >= 2.0 {
            return Err(Error::param(format!(
                "kernel order sp = {} is outside the supported range sp < 2",
                s * p
            )));
        }
        Self::with_order(domain, s * p, p)
    }

    /// Evaluator for an arbitrary kernel order `σ < p`.
    pub(crate) fn with_order(domain: &Arc<crate::grid::GridDomain>, order: f64, p: f64) -> Result<Gagliardo> {
        let table = Arc::new(KernelTable::build(domain, order, None)?);
        Self::from_table(table, p)
    }

    /// Evaluator sharing an existing table of order `sp`.
    pub fn from_table(table: Arc<KernelTable>, p: f64) -> Result<Gagliardo> {
        let own = table.origin_moment(p)?;
        Ok(Gagliardo { table, p, own })
    }

    pub fn table(&self) -> &Arc<KernelTable> {
        &self.table
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Discrete seminorm to the power `p`.
    pub fn evaluate(&self, u: &GridFunction, region: Region) -> Result<f64> {
        let d = u.domain();
        self.table.check_domain(d)?;
        let vals = u.interior_values();
        let sums = match region {
            Region::OmegaOmega => {
                pair_sums(d, &self.table, &vals, self.p, self.own, PairRegion::OmegaOmega, false)
            }
            Region::DOmega | Region::FullSpace => {
                pair_sums(d, &self.table, &vals, self.p, self.own, PairRegion::DOmega, true)
            }
        };
        Ok(sums.iter().sum::<f64>() * d.cell_volume())
    }
}

/// `Σ |u_i - u_j|^p w^{(sp)}_{ij} h^N` plus exterior blocks, per `region`.
///
/// ```
/// use fraclab_core::grid::{GridDomain, GridFunction, Shape};
/// use fraclab_core::sobolev::{gagliardo_double_sum, Region};
/// let d = GridDomain::build(Shape::ball(1, 1.0), 1, 24, 1, true).unwrap();
/// let u = GridFunction::sample(&d, |x| 1.0 - x[0] * x[0]).unwrap();
/// let inner = gagliardo_double_sum(&u, 2.0, 0.5, Region::OmegaOmega).unwrap();
/// let outer = gagliardo_double_sum(&u, 2.0, 0.5, Region::DOmega).unwrap();
/// assert!(0.0 < inner && inner < outer);
/// ```
pub fn gagliardo_double_sum(u: &GridFunction, p: f64, s: f64, region: Region) -> Result<f64> {
    Gagliardo::new(u.domain(), s, p)?.evaluate(u, region)
}

/// Outcome of [`sobolev_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevCheckResult {
    /// `‖u‖_{p*} / [u]_{s,p}`.
    pub ratio: f64,
    /// `p* = Np / (N - sp)`.
    pub critical_exponent: f64,
}

/// Sobolev critical exponent `Np/(N - sp)`; requires `sp < N`.
pub fn critical_exponent(dim: usize, s: f64, p: f64) -> Result<f64> {
    let n = dim as f64;
    if !(s * p < n) {
        return Err(Error::param(format!("sp < N required, got sp = {}", s * p)));
    }
    Ok(n * p / (n - s * p))
}

/// Empirical Sobolev quotient `‖u‖_{L^{p*}} / [u]_{W^{s,p}}`.
pub fn sobolev_check(u: &GridFunction, s: f64, p: f64) -> Result<SobolevCheckResult> {
    let pstar = critical_exponent(u.domain().dim(), s, p)?;
    let semi = gagliardo_double_sum(u, p, s, Region::DOmega)?;
    if semi == 0.0 {
        return Err(Error::param("seminorm vanishes; the quotient is undefined for u ≡ 0"));
    }
    Ok(SobolevCheckResult {
        ratio: u.lp_norm(pstar)? / semi.powf(1.0 / p),
        critical_exponent: pstar,
    })
}

/// Value and quadrature error of the Hardy constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyResult {
    pub value: f64,
    pub error: f64,
    pub dim: usize,
    pub s: f64,
    pub p: f64,
}

fn check_hardy(dim: usize, s: f64, p: f64) -> Result<()> {
    if dim < 2 {
        return Err(Error::param(format!("the Hardy constant needs N ≥ 2, got {dim}")));
    }
    check_unit_order("s", s)?;
    if !(p > 1.0) {
        return Err(Error::param(format!("p > 1 required, got {p}")));
    }
    if !(s * p < dim as f64) {
        return Err(Error::param(format!("ps < N required, got ps = {}", s * p)));
    }
    Ok(())
}

/// `Φ_{N,s,p}(σ)` for `σ ∈ [0, 1)`.
pub fn hardy_phi(dim: usize, s: f64, p: f64, sigma: f64, tol: f64) -> Result<Estimate> {
    check_hardy(dim, s, p)?;
    if !(0.0..1.0).contains(&sigma) {
        return Err(Error::param(format!("σ ∈ [0,1) required, got {sigma}")));
    }
    let (est, log_scale) = phi_inner(dim, s * p, sigma, 1.0 - sigma, tol)?;
    let k = log_scale.exp();
    Ok(Estimate {
        value: est.value * k,
        error: est.error * k,
    })
}

/// Inner integral in `w = 1 - t ∈ (0, 2)` with `gap = 1 - σ` given exactly.
/// Returned value is scaled by `gap^{N+ps}`; the second field is that log factor.
fn phi_inner(dim: usize, ps: f64, sigma: f64, gap: f64, tol: f64) -> Result<(Estimate, f64)> {
    let n = dim as f64;
    let a = 0.5 * (n - 3.0);
    let b = -0.5 * (n + ps);
    let front = sphere_area(dim - 1);
    let lg = 2.0 * gap.ln();
    let ts = TanhSinh {
        max_level: 10,
        min_level: 3,
    };
    // geometric breakpoints from the peak width outward
    let mut cuts = vec![0.0];
    if sigma > 0.0 {
        let mut w = ((lg - (2.0 * sigma).ln()).exp()).max(1e-300);
        while w < 2.0 {
            cuts.push(w);
            w *= 8.0;
        }
    }
    cuts.push(2.0);
    let mut total = 0.0;
    let mut err = 0.0;
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let est = ts.integrate_lenient(lo, hi, tol, |_, da, db| {
            let w = lo + da;
            let v = (2.0 - hi) + db;
            // ln(gap² + 2σw) - ln gap²
            let lw = (2.0 * sigma * w).ln();
            let rel = if lw > lg {
                lw - lg + (lg - lw).exp().ln_1p()
            } else {
                (lw - lg).exp().ln_1p()
            };
            (a * (w * v).ln() + b * rel).exp()
        });
        total += est.value;
        err += est.error;
    }
    if !total.is_finite() || err > tol * total {
        return Err(Error::numerical(format!(
            "Hardy inner integral did not converge at σ = {sigma}: estimate {total:e}, error {err:e}"
        )));
    }
    Ok((
        Estimate {
            value: front * total,
            error: front * err,
        },
        b * lg,
    ))
}

const HARDY_GAP_CUT: f64 = 1e-120;

/// Sharp constant `Λ_{N,s,p}` of the fractional Hardy inequality
/// `[u]^p_{W^{s,p}(ℝ^N)} ≥ Λ ∫ |u|^p |x|^{-ps}`.
///
/// ```
/// let r = fraclab_core::sobolev::hardy_constant(2, 0.5, 2.0, 1e-9).unwrap();
/// assert!(r.value > 0.0 && r.error < 1e-9 * r.value);
/// ```
pub fn hardy_constant(dim: usize, s: f64, p: f64, tol: f64) -> Result<HardyResult> {
    check_hardy(dim, s, p)?;
    if !(tol > 0.0) {
        return Err(Error::param("tolerance must be positive"));
    }
    let ps = s * p;
    let alpha = (dim as f64 - ps) / p;
    let inner_tol = 0.1 * tol;
    let mut inner_err = 0.0f64;
    let mut failure = None;
    let ts = TanhSinh {
        max_level: 9,
        min_level: 3,
    };
    let outer = ts.integrate_lenient(0.0, 1.0, tol, |_, da, db| {
        let sigma = if da < 0.5 { da } else { 1.0 - db };
        let gap = db;
        if gap < HARDY_GAP_CUT {
            return 0.0;
        }
        match phi_inner(dim, ps, sigma, gap, inner_tol) {
            Ok((phi, log_scale)) => {
                if !(phi.value > 0.0) {
                    return 0.0;
                }
                // 1 - σ^α without cancellation near σ = 1
                let one_minus = -(alpha * (-gap).ln_1p()).exp_m1();
                let lf = (2.0f64).ln()
                    + (ps - 1.0) * sigma.ln()
                    + p * one_minus.abs().ln()
                    + phi.value.ln()
                    + log_scale;
                inner_err = inner_err.max(phi.error / phi.value);
                lf.exp()
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    // (0, ε) in gap: Φ·gap^{1+ps} is constant to O(ε) there
    let eps = HARDY_GAP_CUT;
    let (phi, log_scale) = phi_inner(dim, ps, 1.0 - eps, eps, inner_tol)?;
    let q = p * (1.0 - s);
    let tail = 2.0 * alpha.powf(p) / q
        * (phi.value.ln() + log_scale + (1.0 + ps) * eps.ln() + q * eps.ln()).exp();
    let value = outer.value + tail;
    let error = outer.error + inner_err * value.abs() + tail * 1e-3;
    if !(value > 0.0) || !(error <= tol * value) {
        return Err(Error::numerical(format!(
            "Hardy quadrature did not converge: estimate {value:e}, achieved error {error:e}"
        )));
    }
    Ok(HardyResult {
        value,
        error,
        dim,
        s,
        p,
    })
}

/// Hardy quotient `[φ]^p_{s,p,D_Ω} / Σ |φ_i|^p |x_i|^{-β} h^N`.
pub fn hardy_ratio(phi: &GridFunction, s: f64, p: f64, beta: f64) -> Result<f64> {
    let g = Gagliardo::new(phi.domain(), s, p)?;
    hardy_ratio_with(&g, phi, beta)
}

/// [`hardy_ratio`] with a prebuilt seminorm evaluator.
pub fn hardy_ratio_with(g: &Gagliardo, phi: &GridFunction, beta: f64) -> Result<f64> {
    let d = phi.domain();
    if d.has_origin_node() {
        return Err(Error::param("Hardy quotients need an origin-offset grid"));
    }
    let p = g.p();
    let mut den = 0.0;
    for (k, &node) in d.interior_nodes().iter().enumerate() {
        let v = phi.value(node);
        if v != 0.0 {
            let r = d.interior_position(k).iter().map(|x| x * x).sum::<f64>().sqrt();
            den += v.abs().powf(p) * r.powf(-beta);
        }
    }
    den *= d.cell_volume();
    if den == 0.0 {
        return Err(Error::param("weighted denominator vanishes"));
    }
    Ok(g.evaluate(phi, Region::DOmega)? / den)
}
