//! Picard iteration `u_{k+1} = S(μ G(u_k) + λ f)` for the semilinear
//! problems, the root formula behind the existence thresholds, and
//! invariant-ball membership.

use std::sync::Arc;

use log::warn;

use crate::error::{check_unit_order, Error, Result};
use crate::grid::{GridDomain, GridFunction};
use crate::operators::{FracLaplacian, NonlocalGradient, RieszGradient};
use crate::poisson::FactorizedSolver;
use crate::sobolev::{Gagliardo, Region};

/// The nonlinearity `G` in `(-Δ)^s u = μ G(u) + λ f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhsKind {
    /// `𝔻_s²(u)`.
    DS2,
    /// `u 𝔻_s²(u)`.
    UTimesDS2,
    /// `|(-Δ)^{t/2} u|^q`.
    AbsFracPowerQ { t: f64, q: f64 },
    /// `|∇^s u|^q`.
    RieszGradQ { q: f64 },
    /// `(𝔹_s^q u)^α` with `1 < α ≤ q`.
    BSqAlpha { q: f64, alpha: f64 },
}

impl RhsKind {
    pub fn label(&self) -> &'static str {
        match self {
            RhsKind::DS2 => "D_s2",
            RhsKind::UTimesDS2 => "u_times_D_s2",
            RhsKind::AbsFracPowerQ { .. } => "abs_frac_power_q",
            RhsKind::RieszGradQ { .. } => "riesz_grad_q",
            RhsKind::BSqAlpha { .. } => "B_sq_alpha",
        }
    }
}

/// A semilinear problem on a fixed grid.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub kind: RhsKind,
    pub s: f64,
    pub lambda: f64,
    pub mu: GridFunction,
    pub f: GridFunction,
    /// Integrability exponent attached to `f`.
    pub m: f64,
}

impl ProblemSpec {
    /// Checks hard preconditions; returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        check_unit_order("s", self.s)?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param(format!("λ > 0 required, got {}", self.lambda)));
        }
        if !(self.m >= 1.0) {
            return Err(Error::param(format!("m ≥ 1 required, got {}", self.m)));
        }
        self.mu.domain().check_same(self.f.domain())?;
        match self.kind {
            RhsKind::DS2 | RhsKind::UTimesDS2 => {}
            RhsKind::AbsFracPowerQ { t, q } => {
                check_unit_order("t", t)?;
                check_q(q)?;
            }
            RhsKind::RieszGradQ { q } => check_q(q)?,
            RhsKind::BSqAlpha { q, alpha } => {
                check_q(q)?;
                if !(alpha > 1.0 && alpha <= q) {
                    return Err(Error::param(format!("1 < α ≤ q required, got α = {alpha}, q = {q}")));
                }
            }
        }
        let n = self.mu.domain().dim() as f64;
        let s = self.s;
        let mut notes = Vec::new();
        if s <= 0.5 {
            notes.push(format!("s = {s} is outside (1/2, 1), beyond the nonlinear existence hypotheses"));
        }
        let (lo, hi, lo_open) = match self.kind {
            RhsKind::DS2 => (n / (2.0 * s), n / (2.0 * s - 1.0), true),
            RhsKind::UTimesDS2 => (n / (2.0 * s), n / s, true),
            _ => (1.0, n / s, false),
        };
        let hi = if hi > 0.0 { hi } else { f64::INFINITY };
        let below = if lo_open { self.m <= lo } else { self.m < lo };
        if below || self.m >= hi {
            notes.push(format!(
                "m = {} lies outside the reduced window ({lo}, {hi}) for {}",
                self.m,
                self.kind.label()
            ));
        }
        Ok(notes)
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("q > 1 required, got {q}")))
    }
}

/// Norms recorded per iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monitor {
    LInf,
    /// `⟨(-Δ)^s_h u, u⟩`.
    Energy,
    /// `‖(-Δ)^{s/2} u‖_{L^r}`.
    FracPowerLr { r: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationConfig {
    /// Relative successive-difference and residual tolerance.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Abort threshold on `‖u_k‖_∞`; defaults to `10⁶ ‖S(λf)‖_∞`.
    pub divergence_norm: Option<f64>,
    pub monitors: Vec<Monitor>,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            tolerance: 1e-10,
            max_iter: 200,
            divergence_norm: None,
            monitors: vec![Monitor::LInf],
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::param(format!("tolerance > 0 required, got {}", self.tolerance)));
        }
        if self.max_iter < 1 {
            return Err(Error::param("max_iter ≥ 1 required"));
        }
        if let Some(d) = self.divergence_norm {
            if !(d > 0.0) {
                return Err(Error::param(format!("divergence_norm > 0 required, got {d}")));
            }
        }
        for m in &self.monitors {
            if let Monitor::FracPowerLr { r } = m {
                if *r < 1 {
                    return Err(Error::param("monitor exponent r ≥ 1 required"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    Diverged,
    MaxIter,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Converged => "converged",
            Verdict::Diverged => "diverged",
            Verdict::MaxIter => "max_iter",
        }
    }
}

/// One line of the iterate history.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub iteration: usize,
    /// Values in the order of [`IterationConfig::monitors`].
    pub norms: Vec<f64>,
    /// `‖u_k - u_{k-1}‖₂ / ‖u_k‖₂`.
    pub difference: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct IterationReport {
    pub verdict: Verdict,
    pub iterations: usize,
    pub history: Vec<IterateRecord>,
    /// `‖A u - rhs(u)‖₂ / ‖rhs(u)‖₂` at the last iterate.
    pub final_residual: f64,
    pub solution: GridFunction,
    pub warnings: Vec<String>,
}

/// Prebuilt evaluator of `rhs(u) = μ G(u) + λ f`.
#[derive(Debug, Clone)]
pub struct RhsOperator {
    kind: RhsKind,
    lambda: f64,
    mu: Vec<f64>,
    f: Vec<f64>,
    nonlinearity: Nonlinearity,
}

#[derive(Debug, Clone)]
enum Nonlinearity {
    Gradient(NonlocalGradient),
    Power(FracLaplacian, f64),
    Riesz(RieszGradient, f64),
}

impl RhsOperator {
    pub fn new(spec: &ProblemSpec, solver: &FactorizedSolver) -> Result<RhsOperator> {
        let domain = solver.domain();
        domain.check_same(spec.f.domain())?;
        if (solver.operator().s() - spec.s).abs() > 0.0 {
            return Err(Error::param(format!(
                "solver order s = {} differs from problem s = {}",
                solver.operator().s(),
                spec.s
            )));
        }
        let nonlinearity = match spec.kind {
            RhsKind::DS2 | RhsKind::UTimesDS2 => {
                Nonlinearity::Gradient(NonlocalGradient::d_s2_from(solver.operator().laplacian())?)
            }
            RhsKind::AbsFracPowerQ { t, q } => Nonlinearity::Power(FracLaplacian::frac_power(domain, t)?, q),
            RhsKind::RieszGradQ { q } => Nonlinearity::Riesz(RieszGradient::new(domain, spec.s)?, q),
            RhsKind::BSqAlpha { q, .. } => Nonlinearity::Gradient(NonlocalGradient::b_sq(domain, spec.s, q)?),
        };
        Ok(RhsOperator {
            kind: spec.kind,
            lambda: spec.lambda,
            mu: spec.mu.interior_values(),
            f: spec.f.interior_values(),
            nonlinearity,
        })
    }

    /// `G(u)` on interior values.
    pub fn nonlinearity(&self, u: &[f64]) -> Vec<f64> {
        match (&self.nonlinearity, self.kind) {
            (Nonlinearity::Gradient(g), RhsKind::DS2) => g.apply_interior(u),
            (Nonlinearity::Gradient(g), RhsKind::UTimesDS2) => {
                g.apply_interior(u).iter().zip(u).map(|(d, v)| d * v).collect()
            }
            (Nonlinearity::Gradient(g), RhsKind::BSqAlpha { alpha, .. }) => g.apply_power_interior(u, alpha),
            (Nonlinearity::Power(op, q), _) => op.apply_interior(u).iter().map(|v| v.abs().powf(*q)).collect(),
            (Nonlinearity::Riesz(op, q), _) => op
                .apply_interior(u)
                .iter()
                .map(|c| c[0].hypot(c[1]).powf(*q))
                .collect(),
            _ => unreachable!("nonlinearity built for its kind"),
        }
    }

    /// `μ G(u) + λ f` on interior values.
    pub fn evaluate(&self, u: &[f64]) -> Vec<f64> {
        self.nonlinearity(u)
            .iter()
            .zip(self.mu.iter().zip(&self.f))
            .map(|(g, (mu, f))| mu * g + self.lambda * f)
            .collect()
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn relative_residual(solver: &FactorizedSolver, u: &[f64], rhs: &[f64]) -> f64 {
    let au = solver.operator().apply_interior(u);
    let nr = norm2(rhs);
    if nr == 0.0 {
        return norm2(&au);
    }
    diff2(&au, rhs) / nr
}

struct MonitorSet {
    monitors: Vec<Monitor>,
    half: Option<FracLaplacian>,
    cell: f64,
}

impl MonitorSet {
    fn new(monitors: &[Monitor], domain: &Arc<GridDomain>, s: f64) -> Result<MonitorSet> {
        let half = if monitors.iter().any(|m| matches!(m, Monitor::FracPowerLr { .. })) {
            Some(FracLaplacian::frac_power(domain, s)?)
        } else {
            None
        };
        Ok(MonitorSet {
            monitors: monitors.to_vec(),
            half,
            cell: domain.cell_volume(),
        })
    }

    fn measure(&self, solver: &FactorizedSolver, u: &[f64]) -> Vec<f64> {
        self.monitors
            .iter()
            .map(|m| match m {
                Monitor::LInf => u.iter().fold(0.0f64, |a, v| a.max(v.abs())),
                Monitor::Energy => {
                    let au = solver.operator().apply_interior(u);
                    au.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() * self.cell
                }
                Monitor::FracPowerLr { r } => {
                    let op = self.half.as_ref().expect("built when monitored");
                    let r = *r as f64;
                    let sum: f64 = op.apply_interior(u).iter().map(|v| v.abs().powf(r)).sum();
                    (sum * self.cell).powf(1.0 / r)
                }
            })
            .collect()
    }
}

/// Runs the Picard iteration from `u₀ = 0`.
pub fn picard_iterate(
    spec: &ProblemSpec,
    config: &IterationConfig,
    solver: &FactorizedSolver,
) -> Result<IterationReport> {
    let warnings = spec.validate()?;
    config.validate()?;
    for w in &warnings {
        warn!("{w}");
    }
    let rhs_op = RhsOperator::new(spec, solver)?;
    let domain = solver.domain();
    let monitors = MonitorSet::new(&config.monitors, domain, spec.s)?;
    let m = domain.interior_count();
    let mut u = vec![0.0; m];
    let mut rhs = rhs_op.evaluate(&u);
    let mut history = vec![IterateRecord {
        iteration: 0,
        norms: monitors.measure(solver, &u),
        difference: 0.0,
        residual: 0.0,
    }];
    if rhs.iter().all(|&v| v == 0.0) {
        return Ok(IterationReport {
            verdict: Verdict::Converged,
            iterations: 0,
            history,
            final_residual: 0.0,
            solution: GridFunction::zeros(domain),
            warnings,
        });
    }
    let mut limit = config.divergence_norm;
    let mut verdict = Verdict::MaxIter;
    let mut residual = f64::NAN;
    let mut iterations = 0;
    for k in 1..=config.max_iter {
        let next = match solver.solve_interior(&rhs) {
            Ok(v) => v,
            Err(_) if rhs.iter().any(|v| !v.is_finite()) => {
                verdict = Verdict::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        iterations = k;
        let sup = next.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let bound = *limit.get_or_insert(1e6 * sup);
        if !sup.is_finite() || sup > bound || next.iter().any(|v| !v.is_finite()) {
            u = next;
            verdict = Verdict::Diverged;
            break;
        }
        let difference = diff2(&next, &u) / norm2(&next).max(f64::MIN_POSITIVE);
        u = next;
        rhs = rhs_op.evaluate(&u);
        residual = relative_residual(solver, &u, &rhs);
        history.push(IterateRecord {
            iteration: k,
            norms: monitors.measure(solver, &u),
            difference,
            residual,
        });
        if !residual.is_finite() {
            verdict = Verdict::Diverged;
            break;
        }
        if difference <= config.tolerance && residual <= config.tolerance {
            verdict = Verdict::Converged;
            break;
        }
    }
    let solution = if u.iter().all(|v| v.is_finite()) {
        GridFunction::from_interior(domain, &u)?
    } else {
        GridFunction::zeros(domain)
    };
    Ok(IterationReport {
        verdict,
        iterations,
        history,
        final_residual: residual,
        solution,
        warnings,
    })
}

/// Critical point `t*` and matching constant `c*` of
/// `g(t) = a^p (b t + c)^p - t`.
///
/// ```
/// let (c, t) = fraclab_core::fixedpoint::lemma_g_root(1.0, 1.0, 2.0).unwrap();
/// assert!((c - 0.25).abs() < 1e-15 && (t - 0.25).abs() < 1e-15);
/// ```
pub fn lemma_g_root(a: f64, b: f64, p: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::param(format!("a, b > 0 required, got a = {a}, b = {b}")));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p > 1 required, got {p}")));
    }
    let k = (1.0 / (p * a.powf(p) * b)).powf(1.0 / (p - 1.0));
    Ok(((p - 1.0) / p * k, k / (p * b)))
}

/// `g(t) = a^p (b t + c)^p - t`.
pub fn lemma_g(a: f64, b: f64, c: f64, p: f64, t: f64) -> f64 {
    (a * (b * t + c)).powf(p) - t
}

/// Which power of `|Ω|` enters the `Q_λ` scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureExponent {
    /// `(r - qm)/r`, as in the threshold `λ*`.
    Threshold,
    /// `(r - qm)/(mr)`, as in the equation for `l`.
    Radius,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    P,
    PTilde,
    Q(MeasureExponent),
}

/// Inputs for [`threshold_from_constants`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThresholdInputs {
    /// `C₁`, `C₂` or `C₃`.
    pub c_main: f64,
    /// `C₁₀` for `P_λ`, `C₁₁` for `P̃_λ`; unused for `Q_λ`.
    pub c_aux: Option<f64>,
    pub mu_inf: f64,
    pub f_norm: f64,
    /// `|Ω|`, `r`, `q`, `m`; used by `Q_λ` only.
    pub omega_measure: Option<f64>,
    pub r: Option<f64>,
    pub q: Option<f64>,
    pub m: Option<f64>,
}

/// Completed threshold constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConstants {
    pub scheme: Scheme,
    pub inputs: ThresholdInputs,
    /// Arguments handed to [`lemma_g_root`].
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub lambda_star: f64,
    pub l: f64,
    pub c_star: f64,
    pub t_star: f64,
}

impl ThresholdConstants {
    /// Relative defect of `a (b l + λ* ‖f‖) = l^{1/p}`.
    pub fn identity_residual(&self) -> f64 {
        let lhs = self.a * (self.b * self.l + self.lambda_star * self.inputs.f_norm);
        let rhs = self.l.powf(1.0 / self.p);
        (lhs - rhs).abs() / rhs
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(format!("{name} > 0 required, got {v}")))
    }
}

fn needed(name: &str, v: Option<f64>, scheme: &str) -> Result<f64> {
    match v {
        Some(x) => positive(name, x),
        None => Err(Error::param(format!("{scheme} needs {name}"))),
    }
}

fn unused(name: &str, v: Option<f64>, scheme: &str) -> Result<()> {
    match v {
        None => Ok(()),
        Some(_) => Err(Error::param(format!("{name} does not belong to the {scheme} scheme"))),
    }
}

/// Derives `λ*` and `l` from user-supplied constants.
///
/// ```
/// use fraclab_core::fixedpoint::{threshold_from_constants, Scheme, ThresholdInputs};
/// let k = ThresholdInputs { c_main: 1.0, c_aux: Some(1.0), mu_inf: 1.0, f_norm: 1.0, ..Default::default() };
/// let t = threshold_from_constants(&k, Scheme::P).unwrap();
/// assert_eq!((t.lambda_star, t.l), (0.25, 0.25));
/// ```
pub fn threshold_from_constants(inputs: &ThresholdInputs, scheme: Scheme) -> Result<ThresholdConstants> {
    let a = positive("leading constant", inputs.c_main)?;
    let mu = positive("‖μ‖_∞", inputs.mu_inf)?;
    let f = positive("‖f‖_{L^m}", inputs.f_norm)?;
    let (b, p) = match scheme {
        Scheme::P | Scheme::PTilde => {
            let name = if scheme == Scheme::P { "P_λ" } else { "P̃_λ" };
            let aux = needed("the auxiliary constant", inputs.c_aux, name)?;
            for (n, v) in [("|Ω|", inputs.omega_measure), ("r", inputs.r), ("q", inputs.q), ("m", inputs.m)] {
                unused(n, v, name)?;
            }
            (aux * mu, if scheme == Scheme::P { 2.0 } else { 3.0 })
        }
        Scheme::Q(which) => {
            unused("the auxiliary constant", inputs.c_aux, "Q_λ")?;
            let omega = needed("|Ω|", inputs.omega_measure, "Q_λ")?;
            let r = needed("r", inputs.r, "Q_λ")?;
            let q = needed("q", inputs.q, "Q_λ")?;
            let m = needed("m", inputs.m, "Q_λ")?;
            if !(q > 1.0) {
                return Err(Error::param(format!("q > 1 required, got {q}")));
            }
            let e = match which {
                MeasureExponent::Threshold => (r - q * m) / r,
                MeasureExponent::Radius => (r - q * m) / (m * r),
            };
            (omega.powf(e) * mu, q)
        }
    };
    let (c_star, t_star) = lemma_g_root(a, b, p)?;
    Ok(ThresholdConstants {
        scheme,
        inputs: *inputs,
        a,
        b,
        p,
        lambda_star: c_star / f,
        l: t_star,
        c_star,
        t_star,
    })
}

/// `min_t g(t)` when `λ*` is built with one `|Ω|` exponent and `l` with the
/// other; zero means the pairing admits the root `l`.
pub fn mixed_pairing_minimum(inputs: &ThresholdInputs) -> Result<f64> {
    let lam = threshold_from_constants(inputs, Scheme::Q(MeasureExponent::Threshold))?;
    let rad = threshold_from_constants(inputs, Scheme::Q(MeasureExponent::Radius))?;
    // critical point of g for the radius b with c = λ*_threshold ‖f‖
    let c = lam.lambda_star * inputs.f_norm;
    let (a, b, p) = (rad.a, rad.b, rad.p);
    let t = ((1.0 / (p * a.powf(p) * b)).powf(1.0 / (p - 1.0)) - c) / b;
    Ok(lemma_g(a, b, c, p, t.max(0.0)))
}

/// Result of [`ball_membership`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallMembership {
    pub seminorm: f64,
    pub bound: f64,
    pub member: bool,
}

/// Tests `Σ_{D_Ω} |u(x)-u(y)|^r / |x-y|^{N+(s+ε)r} ≤ radius^{r/2}`.
pub fn ball_membership(u: &GridFunction, s: f64, eps: f64, r: f64, radius: f64) -> Result<BallMembership> {
    check_unit_order("s", s)?;
    if !(eps > 0.0 && s + eps < 1.0) {
        return Err(Error::param(format!("ε > 0 with s + ε < 1 required, got ε = {eps}")));
    }
    if !(r >= 1.0) {
        return Err(Error::param(format!("r ≥ 1 required, got {r}")));
    }
    positive("radius", radius)?;
    let d = u.domain();
    let order = (s + eps) * r;
    if order >= d.dim() as f64 + 2.0 {
        return Err(Error::param(format!(
            "kernel order (s+ε)r = {order} is outside the supported range < N + 2"
        )));
    }
    let seminorm = Gagliardo::with_order(d, order, r)?.evaluate(u, Region::DOmega)?;
    let bound = radius.powf(0.5 * r);
    Ok(BallMembership {
        seminorm,
        bound,
        member: seminorm <= bound,
    })
}
