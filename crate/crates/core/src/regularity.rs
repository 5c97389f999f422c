//! Integrability ranges for solutions of `(-Δ)^s v = h`, `h ∈ L^m`, in
//! exact rational arithmetic, and refinement probes with power-law data.

use std::fmt;
use std::sync::Arc;

use num::{BigInt, BigRational, One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridDomain, GridFunction, Shape};
use crate::operators::FracLaplacian;
use crate::poisson::FactorizedSolver;
use crate::sobolev::{Gagliardo, Region};

pub type Rational = BigRational;

/// Builds `num/den`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact value of a finite `f64`.
pub fn exact(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::param(format!("{x} is not a finite number")))
}

/// Parses `"3/4"`, `"0.75"` or `"2"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::param(format!("cannot read {t:?} as a rational number"));
    if let Some((a, b)) = t.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(a, b));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let d = num::pow(BigInt::from(10), frac.len());
    let r = Rational::new(n, d);
    Ok(if neg { -r } else { r })
}

/// Results whose ranges are tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Proposition {
    /// `v ∈ W^{t,p}_0`, `t ∈ (0,1)`; four cases in `m`.
    P31,
    /// [`Proposition::P31`] with `t = s`.
    CorTEqS,
    /// `v ∈ W^{t,p}_0` for `t ∈ (0,s)`, `m ≥ N/2s`.
    Cr2,
    /// `v ∈ W^{t,p}_0` for `t ∈ (s,1)`, `N/2s ≤ m < N/s`.
    Cr3,
    /// `(-Δ)^{t/2} v ∈ L^p`, `t ∈ (0,s]`.
    Rg1,
    /// `|∇^s v| ∈ L^p`.
    CorRg1,
    /// `v ∈ L^p`, any `s ∈ (0,1)`.
    Lpps,
    /// `v ∈ W^{1,p}`.
    Ap,
}

impl Proposition {
    pub const ALL: [Proposition; 8] = [
        Proposition::P31,
        Proposition::CorTEqS,
        Proposition::Cr2,
        Proposition::Cr3,
        Proposition::Rg1,
        Proposition::CorRg1,
        Proposition::Lpps,
        Proposition::Ap,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Proposition::P31 => "P3.1",
            Proposition::CorTEqS => "Cor-t=s",
            Proposition::Cr2 => "P-cr2",
            Proposition::Cr3 => "P-cr3",
            Proposition::Rg1 => "P-rg1",
            Proposition::CorRg1 => "Cor-rg1",
            Proposition::Lpps => "L-LPPS",
            Proposition::Ap => "L-AP",
        }
    }

    pub fn from_id(id: &str) -> Result<Proposition> {
        Proposition::ALL
            .into_iter()
            .find(|p| p.id().eq_ignore_ascii_case(id))
            .ok_or_else(|| Error::param(format!("unknown proposition id {id:?}")))
    }

    /// Whether the proposition takes a `t` argument.
    pub fn uses_t(&self) -> bool {
        matches!(self, Proposition::P31 | Proposition::Cr2 | Proposition::Cr3 | Proposition::Rg1)
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Upper {
    Finite(Rational),
    Infinite,
}

impl Upper {
    pub fn to_f64(&self) -> f64 {
        match self {
            Upper::Finite(r) => rational_to_f64(r),
            Upper::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Upper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Upper::Finite(r) => write!(f, "{r}"),
            Upper::Infinite => f.write_str("inf"),
        }
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// `1 ≤ p < upper` or `1 ≤ p ≤ upper`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentRange {
    pub proposition: Proposition,
    pub dim: u32,
    pub s: Rational,
    pub t: Option<Rational>,
    pub m: Rational,
    pub lower: Rational,
    pub upper: Upper,
    pub upper_inclusive: bool,
    /// One-based case index within the proposition.
    pub case: u8,
}

impl ExponentRange {
    /// Whether `p` lies in the range.
    pub fn admits(&self, p: &Rational) -> bool {
        if p < &self.lower {
            return false;
        }
        match &self.upper {
            Upper::Infinite => true,
            Upper::Finite(u) => {
                if self.upper_inclusive {
                    p <= u
                } else {
                    p < u
                }
            }
        }
    }
}

fn open_interval(name: &str, v: &Rational, lo: &Rational, hi: &Rational) -> Result<()> {
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(Error::param(format!("{name} ∈ ({lo}, {hi}) required, got {v}")))
    }
}

fn n_over(n: &Rational, d: &Rational) -> Rational {
    n / d
}

/// `mN / (N - m a)`; `a` is the order gap.
fn gap_formula(n: &Rational, m: &Rational, a: &Rational) -> Rational {
    m * n / (n - m * a)
}

/// Raw bound formulas without hypothesis checks, indexed like the cases.
pub fn bound_formula(
    prop: Proposition,
    case: u8,
    dim: u32,
    s: &Rational,
    t: &Rational,
    m: &Rational,
) -> Option<Rational> {
    let n = Rational::from_integer(BigInt::from(dim));
    let one = Rational::one();
    let two = ratio(2, 1);
    let two_s = &two * s;
    let b = match (prop, case) {
        (Proposition::P31, 1) | (Proposition::Rg1, 1) => gap_formula(&n, &one, &(&two_s - t)),
        (Proposition::P31, 2) | (Proposition::Rg1, 2) | (Proposition::Cr2, 1) | (Proposition::Cr3, 1) => {
            gap_formula(&n, m, &(&two_s - t))
        }
        (Proposition::P31, 3) => m * &n / (t * (&n - m * (&two_s - &one))),
        (Proposition::CorTEqS, c) => return bound_formula(Proposition::P31, c, dim, s, s, m),
        (Proposition::CorRg1, 1) => gap_formula(&n, &one, s),
        (Proposition::CorRg1, 2) => gap_formula(&n, m, s),
        (Proposition::Lpps, 1) => gap_formula(&n, &one, &two_s),
        (Proposition::Lpps, 2) => gap_formula(&n, m, &two_s),
        (Proposition::Ap, 1) => gap_formula(&n, &one, &(&two_s - &one)),
        (Proposition::Ap, 2) => gap_formula(&n, m, &(&two_s - &one)),
        _ => return None,
    };
    Some(b)
}

/// Range of `p` guaranteed by `prop` for the data `(N, s, t, m)`.
///
/// ```
/// use fraclab_core::regularity::{exponent_range, ratio, Proposition, Upper};
/// let r = exponent_range(Proposition::P31, 2, &ratio(3, 4), Some(&ratio(1, 2)), &ratio(1, 1)).unwrap();
/// assert_eq!(r.upper, Upper::Finite(ratio(2, 1)));
/// assert!(!r.upper_inclusive);
/// ```
pub fn exponent_range(
    prop: Proposition,
    dim: u32,
    s: &Rational,
    t: Option<&Rational>,
    m: &Rational,
) -> Result<ExponentRange> {
    if dim < 2 {
        return Err(Error::param(format!("N ≥ 2 required, got {dim}")));
    }
    let zero = Rational::zero();
    let one = Rational::one();
    let half = ratio(1, 2);
    match prop {
        Proposition::Lpps => open_interval("s", s, &zero, &one)?,
        _ => open_interval("s", s, &half, &one)?,
    }
    if m < &one {
        return Err(Error::param(format!("m ≥ 1 required, got {m}")));
    }
    let t = match (prop.uses_t(), t, prop) {
        (true, Some(t), Proposition::P31) => {
            open_interval("t", t, &zero, &one)?;
            t.clone()
        }
        (true, Some(t), Proposition::Cr2) => {
            open_interval("t", t, &zero, s)?;
            t.clone()
        }
        (true, Some(t), Proposition::Cr3) => {
            open_interval("t", t, s, &one)?;
            t.clone()
        }
        (true, Some(t), _) => {
            if !(t > &zero && t <= s) {
                return Err(Error::param(format!("t ∈ (0, {s}] required, got {t}")));
            }
            t.clone()
        }
        (true, None, _) => return Err(Error::param(format!("{prop} needs t"))),
        (false, Some(t), Proposition::CorTEqS) if t == s => s.clone(),
        (false, Some(_), _) => return Err(Error::param(format!("{prop} takes no t"))),
        (false, None, _) => s.clone(),
    };
    let n = Rational::from_integer(BigInt::from(dim));
    let two_s = ratio(2, 1) * s;
    let is_one = m == &one;
    // (case, inclusive) or the infinite case
    let (case, inclusive, infinite) = match prop {
        Proposition::P31 | Proposition::CorTEqS => {
            let a = n_over(&n, &two_s);
            let b = n_over(&n, &(&two_s - &one));
            if is_one {
                (1, false, false)
            } else if m < &a {
                (2, true, false)
            } else if m < &b {
                (3, false, false)
            } else {
                (4, false, true)
            }
        }
        Proposition::Cr2 => {
            let a = n_over(&n, &two_s);
            if m < &a {
                return Err(Error::param(format!("m ≥ N/2s = {a} required, got {m}")));
            }
            if m < &n_over(&n, &(&two_s - &t)) {
                (1, false, false)
            } else {
                (2, false, true)
            }
        }
        Proposition::Cr3 => {
            let a = n_over(&n, &two_s);
            let b = n_over(&n, s);
            if !(m >= &a && m < &b) {
                return Err(Error::param(format!("N/2s ≤ m < N/s required, got m = {m} outside [{a}, {b})")));
            }
            (1, false, false)
        }
        Proposition::Rg1 => {
            if is_one {
                (1, false, false)
            } else if m < &n_over(&n, &(&two_s - &t)) {
                (2, true, false)
            } else {
                (3, false, true)
            }
        }
        Proposition::CorRg1 => {
            if is_one {
                (1, false, false)
            } else if m < &n_over(&n, s) {
                (2, true, false)
            } else {
                (3, false, true)
            }
        }
        Proposition::Lpps => {
            if is_one {
                (1, false, false)
            } else if m < &n_over(&n, &two_s) {
                (2, true, false)
            } else {
                (3, false, true)
            }
        }
        Proposition::Ap => {
            if is_one {
                (1, false, false)
            } else if m < &n_over(&n, &(&two_s - &one)) {
                (2, true, false)
            } else {
                (3, false, true)
            }
        }
    };
    let upper = if infinite {
        Upper::Infinite
    } else {
        let b = bound_formula(prop, case, dim, s, &t, m).expect("case has a formula");
        if !b.is_positive() || b <= one {
            return Err(Error::Internal(format!("{prop} case {case} produced bound {b}")));
        }
        Upper::Finite(b)
    };
    Ok(ExponentRange {
        proposition: prop,
        dim,
        s: s.clone(),
        t: if prop.uses_t() { Some(t) } else { None },
        m: m.clone(),
        lower: one,
        upper,
        upper_inclusive: inclusive,
        case,
    })
}

/// The two bounds of [`Proposition::P31`] case 3 and [`Proposition::Cr2`]
/// case 1 where both apply, in that order.
pub fn discrepancy_window(dim: u32, s: &Rational, t: &Rational, m: &Rational) -> Option<(Rational, Rational)> {
    let a = exponent_range(Proposition::P31, dim, s, Some(t), m).ok()?;
    let b = exponent_range(Proposition::Cr2, dim, s, Some(t), m).ok()?;
    match (a.case, b.case, a.upper, b.upper) {
        (3, 1, Upper::Finite(x), Upper::Finite(y)) => Some((x, y)),
        _ => None,
    }
}

/// `p* = N / (t - 2s + β)`, the `W^{t,p}` integrability limit of the
/// `|x|^{2s-β}` singularity produced by `f = |x|^{-β}`.
pub fn power_law_threshold(dim: usize, s: f64, t: f64, beta: f64) -> f64 {
    let d = t - 2.0 * s + beta;
    if d > 0.0 {
        dim as f64 / d
    } else {
        f64::INFINITY
    }
}

/// `f = |x|^{-(N-ε)/m}` sampled on an origin-offset grid.
pub fn counterexample_data(dim: usize, m: f64, eps: f64, domain: &Arc<GridDomain>) -> Result<GridFunction> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("ε ∈ (0,1) required, got {eps}")));
    }
    if !(m >= 1.0) {
        return Err(Error::param(format!("m ≥ 1 required, got {m}")));
    }
    if domain.dim() != dim {
        return Err(Error::param(format!("grid has dimension {}, expected {dim}", domain.dim())));
    }
    power_law_data(domain, (dim as f64 - eps) / m)
}

/// `|x|^{-β}` on an origin-offset grid with `0 ∈ Ω`, sampled at nodes.
pub fn power_law_data(domain: &Arc<GridDomain>, beta: f64) -> Result<GridFunction> {
    check_power_law_grid(domain)?;
    GridFunction::sample(domain, |x| {
        let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        r.powf(-beta)
    })
}

/// Cell averages of `|x|^{-β}`, `β < 1`, on a 1D origin-offset grid.
///
/// Averages keep the data mass exact near the singularity, where point
/// values lose a fraction of order one of the mass in the origin cells.
pub fn power_law_cell_averages(domain: &Arc<GridDomain>, beta: f64) -> Result<GridFunction> {
    check_power_law_grid(domain)?;
    if domain.dim() != 1 || !(beta < 1.0) {
        return Err(Error::param("cell averages are available for N = 1 and β < 1"));
    }
    let h = domain.h();
    let e = 1.0 - beta;
    let prim = |x: f64| x.signum() * x.abs().powf(e) / e;
    GridFunction::sample(domain, |x| (prim(x[0] + 0.5 * h) - prim(x[0] - 0.5 * h)) / h)
}

fn check_power_law_grid(domain: &Arc<GridDomain>) -> Result<()> {
    if domain.has_origin_node() {
        return Err(Error::param("power-law data needs a grid without a node at the origin"));
    }
    if !domain.shape().contains(&vec![0.0; domain.dim()]) {
        return Err(Error::param("power-law data needs 0 ∈ Ω"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Bounded,
    Growing,
    Inconclusive,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Bounded => "bounded",
            Classification::Growing => "growing",
            Classification::Inconclusive => "inconclusive",
        }
    }
}

/// Growth factor at or above which a level counts as growing.
pub const GROWING_FACTOR: f64 = 1.2;
/// Growth factor at or below which a level counts as bounded.
pub const BOUNDED_FACTOR: f64 = 1.05;

/// Classifies by the last two inter-level growth factors.
pub fn classify(growth: &[f64]) -> Classification {
    if growth.len() < 2 {
        return Classification::Inconclusive;
    }
    let last = &growth[growth.len() - 2..];
    if last.iter().all(|&g| g >= GROWING_FACTOR) {
        Classification::Growing
    } else if last.iter().all(|&g| g <= BOUNDED_FACTOR) {
        Classification::Bounded
    } else {
        Classification::Inconclusive
    }
}

/// What a probe measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeRoute {
    /// `[u]^p_{t,p,D_Ω}`.
    Seminorm,
    /// `‖(-Δ)^{t/2} u‖^p_{L^p(Ω)}`, used when `tp ≥ 2`.
    FracPowerLp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeLevel {
    pub cells: usize,
    pub h: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub beta: f64,
    pub s: f64,
    pub t: f64,
    pub p: f64,
    pub route: ProbeRoute,
    pub levels: Vec<ProbeLevel>,
    pub growth: Vec<f64>,
    pub classification: Classification,
}

/// Grid over `[-2, 2]` for the unit interval `Ω = (-1, 1)` with `cells`
/// cells; `cells` must be a multiple of 4.
pub fn probe_domain(cells: usize) -> Result<Arc<GridDomain>> {
    if cells % 4 != 0 || cells < 8 {
        return Err(Error::param(format!("probe levels need a multiple of 4 cells ≥ 8, got {cells}")));
    }
    GridDomain::with_bounds(Shape::ball(1, 1.0), &[-2.0], &[2.0], cells, true)
}

/// Solves with `f = |x|^{-β}` on `Ω = (-1,1)` at every level and tracks the
/// order-`t` norm of the solution.
pub fn regularity_probe(beta: f64, s: f64, t: f64, p: f64, levels: &[usize]) -> Result<ProbeReport> {
    crate::error::check_unit_order("s", s)?;
    crate::error::check_unit_order("t", t)?;
    if !(p >= 1.0) {
        return Err(Error::param(format!("p ≥ 1 required, got {p}")));
    }
    if !(beta >= 0.0 && beta < 1.0) {
        return Err(Error::param(format!("0 ≤ β < N = 1 required, got {beta}")));
    }
    if levels.len() < 2 {
        return Err(Error::param("a probe needs at least two refinement levels"));
    }
    let route = if t * p < 2.0 {
        ProbeRoute::Seminorm
    } else {
        ProbeRoute::FracPowerLp
    };
    let domains = levels.iter().map(|&c| probe_domain(c)).collect::<Result<Vec<_>>>()?;
    let values = domains
        .par_iter()
        .map(|d| -> Result<f64> {
            let solver = FactorizedSolver::assemble(d, s)?;
            let f = power_law_cell_averages(d, beta)?;
            let u = solver.solve(&f)?;
            match route {
                ProbeRoute::Seminorm => Gagliardo::new(d, t, p)?.evaluate(&u, Region::DOmega),
                ProbeRoute::FracPowerLp => {
                    let w = FracLaplacian::frac_power(d, t)?.apply(&u)?;
                    Ok(w.lp_norm(p)?.powf(p))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let levels: Vec<ProbeLevel> = levels
        .iter()
        .zip(&domains)
        .zip(&values)
        .map(|((&cells, d), &value)| ProbeLevel { cells, h: d.h(), value })
        .collect();
    let growth: Vec<f64> = values.windows(2).map(|w| w[1] / w[0]).collect();
    let classification = classify(&growth);
    Ok(ProbeReport {
        beta,
        s,
        t,
        p,
        route,
        levels,
        growth,
        classification,
    })
}
