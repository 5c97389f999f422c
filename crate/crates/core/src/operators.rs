//! Discrete nonlocal operators on a [`GridDomain`].
//!
//! Every operator is a dense sum over interior node pairs with weights from
//! a [`KernelTable`], plus the exterior mass `κ_i` and a correction for the
//! node's own cell. In the own cell a smooth `u` is replaced by its Taylor
//! expansion, which for the signed operators gives the second difference
//! `Σ_k (c_0 / 2h²)(2u_i - u_{i+e_k} - u_{i-e_k})` and for the gradient-type
//! operators the one-sided differences `|D^±_k u_i|^q` weighted by
//! `c_0 = ∫_{cell(0)} |z_1|^q |z|^{-(N+σ)} dz`.
//!
//! Edges from an interior node to an exterior neighbor carry weight one in
//! the gradient-type sums and one half between two interior nodes. With this
//! choice `⟨(-Δ)^s_h u, u⟩_h` equals `a_{N,s}/2` times the discrete Gagliardo
//! sum over `D_Ω` identically.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{check_unit_order, Error, Result};
use crate::grid::{GridDomain, GridFunction};
use crate::kernel::{KernelTable, OddKernelTable, PotentialTable};

/// `a_{N,s} = 2^{2s} s Γ(N/2 + s) / (π^{N/2} Γ(1 - s))`.
///
/// ```
/// let a = fraclab_core::operators::normalization_constant(1, 0.5).unwrap();
/// assert!((a - 1.0 / std::f64::consts::PI).abs() < 1e-14);
/// ```
pub fn normalization_constant(dim: usize, s: f64) -> Result<f64> {
    if dim == 0 {
        return Err(Error::param("dimension N ≥ 1 required"));
    }
    check_unit_order("s", s)?;
    let n = dim as f64;
    Ok(4f64.powf(s) * s * gamma(0.5 * n + s) / (PI.powf(0.5 * n) * gamma(1.0 - s)))
}

/// Which operator a handle realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    FracLaplacian,
    FracPowerHalf,
    DS2,
    BSq,
    RieszGradient,
    RieszPotential,
}

/// Any of the discrete operators, tagged by kind.
#[derive(Debug, Clone)]
pub enum OperatorHandle {
    FracLaplacian(FracLaplacian),
    FracPowerHalf(FracLaplacian),
    DS2(NonlocalGradient),
    BSq(NonlocalGradient),
    RieszGradient(RieszGradient),
    RieszPotential(RieszPotential),
}

impl OperatorHandle {
    pub fn kind(&self) -> OperatorKind {
        match self {
            OperatorHandle::FracLaplacian(_) => OperatorKind::FracLaplacian,
            OperatorHandle::FracPowerHalf(_) => OperatorKind::FracPowerHalf,
            OperatorHandle::DS2(_) => OperatorKind::DS2,
            OperatorHandle::BSq(_) => OperatorKind::BSq,
            OperatorHandle::RieszGradient(_) => OperatorKind::RieszGradient,
            OperatorHandle::RieszPotential(_) => OperatorKind::RieszPotential,
        }
    }

    /// Applies a scalar-valued operator. For the Riesz gradient this returns
    /// the pointwise Euclidean norm.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        match self {
            OperatorHandle::FracLaplacian(op) | OperatorHandle::FracPowerHalf(op) => op.apply(u),
            OperatorHandle::DS2(op) | OperatorHandle::BSq(op) => op.apply(u),
            OperatorHandle::RieszGradient(op) => op.magnitude(u),
            OperatorHandle::RieszPotential(op) => op.apply(u),
        }
    }
}

/// Signed operator `a Σ_j (u_i - u_j) w_ij + a u_i κ_i + own-cell term`.
///
/// With order `σ = 2s` and `a = a_{N,s}` this is `(-Δ)^s`; with `σ = t` and
/// `a = a_{N,t/2}` it is `(-Δ)^{t/2}`.
#[derive(Debug, Clone)]
pub struct FracLaplacian {
    domain: Arc<GridDomain>,
    table: Arc<KernelTable>,
    exponent: f64,
    norm: f64,
    own: f64,
}

impl FracLaplacian {
    /// `(-Δ)^s` on `domain`.
    pub fn new(domain: &Arc<GridDomain>, s: f64) -> Result<FracLaplacian> {
        check_unit_order("s", s)?;
        let table = Arc::new(KernelTable::build(domain, 2.0 * s, None)?);
        Self::with_table(domain, table, s)
    }

    /// `(-Δ)^{t/2}` on `domain`, kernel order `t`.
    pub fn frac_power(domain: &Arc<GridDomain>, t: f64) -> Result<FracLaplacian> {
        check_unit_order("t", t)?;
        let table = Arc::new(KernelTable::build(domain, t, None)?);
        Self::with_table(domain, table, 0.5 * t)
    }

    /// `(-Δ)^s` from an existing table of order `2s`.
    pub fn with_table(domain: &Arc<GridDomain>, table: Arc<KernelTable>, s: f64) -> Result<FracLaplacian> {
        check_unit_order("s", s)?;
        table.check_domain(domain)?;
        if (table.order() - 2.0 * s).abs() > 1e-15 {
            return Err(Error::param(format!(
                "table order {} does not match 2s = {}",
                table.order(),
                2.0 * s
            )));
        }
        let norm = normalization_constant(domain.dim(), s)?;
        let h = domain.h();
        let own = table.origin_moment(2.0)? / (2.0 * h * h);
        Ok(FracLaplacian {
            domain: Arc::clone(domain),
            table,
            exponent: s,
            norm,
            own,
        })
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn table(&self) -> &Arc<KernelTable> {
        &self.table
    }

    /// The exponent `s` of `(-Δ)^s`.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.domain.check_same(u.domain())?;
        let out = self.apply_interior(&u.interior_values());
        GridFunction::from_interior(&self.domain, &out)
    }

    /// Applies the operator to interior values.
    pub fn apply_interior(&self, u: &[f64]) -> Vec<f64> {
        let d = &*self.domain;
        let t = &*self.table;
        let m = d.interior_count();
        let kappa = t.kappa();
        (0..m)
            .into_par_iter()
            .map(|i| {
                let ci = d.interior_index(i);
                let ui = u[i];
                let mut acc = 0.0;
                for j in 0..m {
                    if j != i {
                        acc += (ui - u[j]) * t.weight_between(ci, d.interior_index(j));
                    }
                }
                acc += ui * kappa[i];
                let mut local = 0.0;
                for axis in 0..d.dim() {
                    let up = d.neighbor_slot(i, axis, 1).map_or(0.0, |k| u[k]);
                    let dn = d.neighbor_slot(i, axis, -1).map_or(0.0, |k| u[k]);
                    local += 2.0 * ui - up - dn;
                }
                self.norm * (acc + self.own * local)
            })
            .collect()
    }

    /// Row-major dense matrix over interior nodes.
    pub fn dense_matrix(&self) -> Vec<f64> {
        let d = &*self.domain;
        let t = &*self.table;
        let m = d.interior_count();
        let mut rows = vec![0.0; m * m];
        rows.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let ci = d.interior_index(i);
            let mut diag = 0.0;
            for j in 0..m {
                if j != i {
                    let w = t.weight_between(ci, d.interior_index(j));
                    row[j] = -self.norm * w;
                    diag += w;
                }
            }
            diag += t.kappa()[i];
            let mut local = 0.0;
            for axis in 0..d.dim() {
                for step in [1, -1] {
                    local += 1.0;
                    if let Some(k) = d.neighbor_slot(i, axis, step) {
                        row[k] -= self.norm * self.own;
                    }
                }
            }
            row[i] = self.norm * (diag + self.own * local);
        });
        rows
    }
}

/// Gradient-type operator built from `|u_i - u_j|^q` sums.
///
/// With `q = 2` and [`NonlocalGradient::d_s2`] it is `𝔻_s²`,
/// `(a/2)[Σ_j (u_i-u_j)² w_ij + u_i² κ_i + own]`. With
/// [`NonlocalGradient::b_sq`] it is `𝔹_s^q`,
/// `((a/q)[Σ_j |u_i-u_j|^q w_ij + |u_i|^q κ_i + own])^{1/q}` with kernel order
/// `sq`.
#[derive(Debug, Clone)]
pub struct NonlocalGradient {
    domain: Arc<GridDomain>,
    table: Arc<KernelTable>,
    s: f64,
    q: f64,
    norm: f64,
    own: f64,
    squared: bool,
}

impl NonlocalGradient {
    /// `𝔻_s²` on `domain`.
    pub fn d_s2(domain: &Arc<GridDomain>, s: f64) -> Result<NonlocalGradient> {
        check_unit_order("s", s)?;
        let table = Arc::new(KernelTable::build(domain, 2.0 * s, None)?);
        Self::from_table(domain, table, s, 2.0, true)
    }

    /// `𝔻_s²` sharing the table of an existing `(-Δ)^s`.
    pub fn d_s2_from(lap: &FracLaplacian) -> Result<NonlocalGradient> {
        Self::from_table(lap.domain(), Arc::clone(lap.table()), lap.exponent(), 2.0, true)
    }

    /// `𝔹_s^q` on `domain`; kernel order `sq`.
    pub fn b_sq(domain: &Arc<GridDomain>, s: f64, q: f64) -> Result<NonlocalGradient> {
        check_unit_order("s", s)?;
        if !(q > 1.0) {
            return Err(Error::param(format!("q > 1 required, got {q}")));
        }
        let table = Arc::new(KernelTable::build(domain, s * q, None)?);
        Self::from_table(domain, table, s, q, false)
    }

    fn from_table(
        domain: &Arc<GridDomain>,
        table: Arc<KernelTable>,
        s: f64,
        q: f64,
        squared: bool,
    ) -> Result<NonlocalGradient> {
        table.check_domain(domain)?;
        let norm = normalization_constant(domain.dim(), s)?;
        let own = table.origin_moment(q)?;
        Ok(NonlocalGradient {
            domain: Arc::clone(domain),
            table,
            s,
            q,
            norm,
            own,
            squared,
        })
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn table(&self) -> &Arc<KernelTable> {
        &self.table
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.domain.check_same(u.domain())?;
        GridFunction::from_interior(&self.domain, &self.apply_interior(&u.interior_values()))
    }

    /// Operator values at interior nodes.
    pub fn apply_interior(&self, u: &[f64]) -> Vec<f64> {
        let raw = pair_sums(&self.domain, &self.table, u, self.q, self.own, Region::DOmega, false);
        if self.squared {
            raw.into_iter().map(|v| 0.5 * self.norm * v).collect()
        } else {
            let c = self.norm / self.q;
            raw.into_iter().map(|v| (c * v).powf(1.0 / self.q)).collect()
        }
    }

    /// For `𝔹_s^q` returns `(𝔹_s^q u)^α` without taking the root first;
    /// for `𝔻_s²` returns `(𝔻_s² u)^{α/2}`.
    pub fn apply_power_interior(&self, u: &[f64], alpha: f64) -> Vec<f64> {
        let raw = pair_sums(&self.domain, &self.table, u, self.q, self.own, Region::DOmega, false);
        let (c, e) = if self.squared {
            (0.5 * self.norm, 0.5 * alpha)
        } else {
            (self.norm / self.q, alpha / self.q)
        };
        raw.into_iter()
            .map(|v| {
                let x = c * v;
                if e == 1.0 {
                    x
                } else {
                    x.powf(e)
                }
            })
            .collect()
    }
}

/// Pair region for the raw sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Region {
    /// Pairs inside `Ω × Ω` only.
    OmegaOmega,
    /// Pairs with at least one point in `Ω`.
    DOmega,
}

/// Per-node sums `Σ_j |u_i - u_j|^q w_ij + |u_i|^q κ_i (·2 if doubled) + own`.
///
/// `own` multiplies the edge-weighted one-sided differences. For
/// [`Region::OmegaOmega`] exterior edges and `κ` are dropped.
pub(crate) fn pair_sums(
    domain: &GridDomain,
    table: &KernelTable,
    u: &[f64],
    q: f64,
    own: f64,
    region: Region,
    double_exterior: bool,
) -> Vec<f64> {
    let m = domain.interior_count();
    let h = domain.h();
    let kappa = table.kappa();
    let pw = |x: f64| -> f64 {
        if q == 2.0 {
            x * x
        } else {
            x.abs().powf(q)
        }
    };
    (0..m)
        .into_par_iter()
        .map(|i| {
            let ci = domain.interior_index(i);
            let ui = u[i];
            let mut acc = 0.0;
            for j in 0..m {
                if j != i {
                    acc += pw(ui - u[j]) * table.weight_between(ci, domain.interior_index(j));
                }
            }
            let mut local = 0.0;
            for axis in 0..domain.dim() {
                for step in [1, -1] {
                    match domain.neighbor_slot(i, axis, step) {
                        Some(k) => local += 0.5 * pw((u[k] - ui) / h),
                        None => {
                            if region == Region::DOmega {
                                local += pw(ui / h);
                            }
                        }
                    }
                }
            }
            acc += own * local;
            if region == Region::DOmega {
                let ext = pw(ui) * kappa[i];
                acc += if double_exterior { 2.0 * ext } else { ext };
            }
            acc
        })
        .collect()
}

/// Riesz fractional gradient `∫ (u(x) - u(y)) (x-y)/|x-y|^{N+1+s} dy`.
#[derive(Debug, Clone)]
pub struct RieszGradient {
    domain: Arc<GridDomain>,
    table: Arc<OddKernelTable>,
}

impl RieszGradient {
    pub fn new(domain: &Arc<GridDomain>, s: f64) -> Result<RieszGradient> {
        let table = Arc::new(OddKernelTable::build(domain, s)?);
        Ok(RieszGradient {
            domain: Arc::clone(domain),
            table,
        })
    }

    pub fn s(&self) -> f64 {
        self.table.order()
    }

    /// One grid function per component.
    pub fn apply(&self, u: &GridFunction) -> Result<Vec<GridFunction>> {
        self.domain.check_same(u.domain())?;
        self.table.check_domain(&self.domain)?;
        let comps = self.apply_interior(&u.interior_values());
        let dim = self.domain.dim();
        (0..dim)
            .map(|k| {
                let vals: Vec<f64> = comps.iter().map(|c| c[k]).collect();
                GridFunction::from_interior(&self.domain, &vals)
            })
            .collect()
    }

    /// Pointwise Euclidean norm `|∇^s u|`.
    pub fn magnitude(&self, u: &GridFunction) -> Result<GridFunction> {
        self.domain.check_same(u.domain())?;
        let vals: Vec<f64> = self
            .apply_interior(&u.interior_values())
            .iter()
            .map(|c| c[0].hypot(c[1]))
            .collect();
        GridFunction::from_interior(&self.domain, &vals)
    }

    /// Component values at interior nodes.
    ///
    /// The exterior cells contribute `u_i ∫_{CΩ} K`, and because the odd
    /// kernel integrates to zero over `ℝ^N ∖ cell(0)` this cancels the
    /// `u_i` part of the interior pair sum, leaving `-Σ_j u_j V_{i-j}`.
    pub fn apply_interior(&self, u: &[f64]) -> Vec<[f64; 2]> {
        let d = &*self.domain;
        let t = &*self.table;
        let m = d.interior_count();
        let dim = d.dim();
        let h = d.h();
        let diag = t.diagonal_moment();
        (0..m)
            .into_par_iter()
            .map(|i| {
                let ci = d.interior_index(i);
                let mut acc = [0.0, 0.0];
                let mut z = [0i64; 2];
                for j in 0..m {
                    if j == i {
                        continue;
                    }
                    let cj = d.interior_index(j);
                    for k in 0..dim {
                        z[k] = ci[k] - cj[k];
                    }
                    let v = t.weight(&z[..dim]);
                    acc[0] -= u[j] * v[0];
                    acc[1] -= u[j] * v[1];
                }
                for (k, a) in acc.iter_mut().enumerate().take(dim) {
                    let up = d.neighbor_slot(i, k, 1).map_or(0.0, |s| u[s]);
                    let dn = d.neighbor_slot(i, k, -1).map_or(0.0, |s| u[s]);
                    *a += diag * (up - dn) / (2.0 * h);
                }
                acc
            })
            .collect()
    }
}

/// Riesz potential `J_λ g(x) = ∫ g(y) |x-y|^{-λ} dy`, `0 < λ < N`.
#[derive(Debug, Clone)]
pub struct RieszPotential {
    domain: Arc<GridDomain>,
    table: Arc<PotentialTable>,
}

impl RieszPotential {
    pub fn new(domain: &Arc<GridDomain>, lambda: f64) -> Result<RieszPotential> {
        let table = Arc::new(PotentialTable::build(domain, lambda)?);
        Ok(RieszPotential {
            domain: Arc::clone(domain),
            table,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.table.lambda()
    }

    pub fn apply(&self, g: &GridFunction) -> Result<GridFunction> {
        self.domain.check_same(g.domain())?;
        self.table.check_domain(&self.domain)?;
        GridFunction::from_interior(&self.domain, &self.apply_interior(&g.interior_values()))
    }

    pub fn apply_interior(&self, g: &[f64]) -> Vec<f64> {
        let d = &*self.domain;
        let t = &*self.table;
        let m = d.interior_count();
        let dim = d.dim();
        (0..m)
            .into_par_iter()
            .map(|i| {
                let ci = d.interior_index(i);
                let mut z = [0i64; 2];
                let mut acc = 0.0;
                for (j, gj) in g.iter().enumerate() {
                    if *gj == 0.0 {
                        continue;
                    }
                    let cj = d.interior_index(j);
                    for k in 0..dim {
                        z[k] = ci[k] - cj[k];
                    }
                    acc += gj * t.weight(&z[..dim]);
                }
                acc
            })
            .collect()
    }
}

/// Standard discrete `-Δ_h` with zero exterior values.
pub fn discrete_laplacian(u: &GridFunction) -> GridFunction {
    let d = u.domain();
    let vals = u.interior_values();
    let h2 = d.h() * d.h();
    let out: Vec<f64> = (0..d.interior_count())
        .map(|i| {
            let mut acc = 0.0;
            for axis in 0..d.dim() {
                let up = d.neighbor_slot(i, axis, 1).map_or(0.0, |k| vals[k]);
                let dn = d.neighbor_slot(i, axis, -1).map_or(0.0, |k| vals[k]);
                acc += 2.0 * vals[i] - up - dn;
            }
            acc / h2
        })
        .collect();
    GridFunction::from_interior(d, &out).expect("interior length matches")
}

/// Central-difference gradient, one grid function per axis.
pub fn central_gradient(u: &GridFunction) -> Vec<GridFunction> {
    let d = u.domain();
    let vals = u.interior_values();
    let h = d.h();
    (0..d.dim())
        .map(|axis| {
            let comp: Vec<f64> = (0..d.interior_count())
                .map(|i| {
                    let up = d.neighbor_slot(i, axis, 1).map_or(0.0, |k| vals[k]);
                    let dn = d.neighbor_slot(i, axis, -1).map_or(0.0, |k| vals[k]);
                    (up - dn) / (2.0 * h)
                })
                .collect();
            GridFunction::from_interior(d, &comp).expect("interior length matches")
        })
        .collect()
}

/// `|∇_h u|²` with central differences.
pub fn central_gradient_square(u: &GridFunction) -> GridFunction {
    let grads = central_gradient(u);
    let mut out = GridFunction::zeros(u.domain());
    for g in &grads {
        out = out.zip_map(g, |a, b| a + b * b).expect("same domain");
    }
    out
}

/// Distances of the nonlocal operators from their local limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalLimit {
    pub s: f64,
    /// `‖(-Δ)^s u + Δ_h u‖_∞ / ‖Δ_h u‖_∞`.
    pub laplacian: f64,
    /// `‖𝔻_s²(u) - |∇_h u|²‖_∞ / ‖∇_h u‖²_∞`.
    pub gradient: f64,
}

/// Relative sup-norm errors against the standard difference operators; both
/// tend to zero as `s → 1` for smooth `u`.
pub fn local_limit(u: &GridFunction, s: f64) -> Result<LocalLimit> {
    let lap = FracLaplacian::new(u.domain(), s)?;
    let grad = NonlocalGradient::d_s2_from(&lap)?;
    let local = discrete_laplacian(u);
    let local_grad = central_gradient_square(u);
    let scale = local.max_abs();
    let grad_scale = local_grad.max_abs();
    if scale == 0.0 || grad_scale == 0.0 {
        return Err(Error::param("local-limit errors need a non-affine u"));
    }
    Ok(LocalLimit {
        s,
        laplacian: lap.apply(u)?.sub(&local)?.max_abs() / scale,
        gradient: grad.apply(u)?.sub(&local_grad)?.max_abs() / grad_scale,
    })
}
