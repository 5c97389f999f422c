//! Cell-averaged weights for the singular kernels `|y|^{-(N+σ)}`,
//! `y |y|^{-(N+1+s)}` and `|y|^{-λ}`.
//!
//! All integrals are computed on the unit lattice and rescaled by the
//! homogeneity of the kernel. In one dimension every cell integral has a
//! closed form. In two dimensions off-origin cells use a subdivided tensor
//! Gauss–Legendre rule and the origin cell uses polar coordinates over the
//! eight triangles of the square.
//!
//! The exterior mass of an interior node is the integral of the kernel over
//! all cells that are not interior, which equals the full-space integral
//! outside the node's own cell minus the interior weights. The full-space
//! integral is known in closed form (a 1D integral in 2D), so no radial
//! truncation is involved.

use std::f64::consts::{FRAC_PI_4, PI};
use std::io::{Read, Write};
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridDomain;
use crate::quadrature::{GaussLegendre, KahanSum, TanhSinh};

fn gl10() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(10))
}

fn gl40() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(40))
}

/// Surface area of the unit sphere `S^{N-1}` in `ℝ^N`.
pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(0.5 * n) / statrs::function::gamma::gamma(0.5 * n)
}

/// Integrals over unit lattice cells `z + [-1/2, 1/2]^N`.
pub mod cells {
    use super::*;

    /// Subdivisions per axis for a cell at distance `dist` from the origin.
    fn splits(dist: f64) -> usize {
        ((2.0 / dist).ceil() as usize).clamp(1, 24)
    }

    fn cell_distance(z: &[i64]) -> f64 {
        z.iter()
            .map(|&c| (c.abs() as f64 - 0.5).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `∫_a^{a+1} y^{-alpha} dy` for `a > 0`, written to avoid cancellation.
    fn power_1d(a: f64, alpha: f64) -> f64 {
        let l = (1.0 / a).ln_1p();
        if (alpha - 1.0).abs() < 1e-14 {
            l
        } else {
            let e = 1.0 - alpha;
            a.powf(e) * (e * l).exp_m1() / e
        }
    }

    /// Tensor rule over the 2D cell centered at `z` with integrand `f`.
    fn tensor_2d(z: &[i64], mut f: impl FnMut(f64, f64) -> [f64; 2]) -> [f64; 2] {
        let gl = gl10();
        let k = splits(cell_distance(z));
        let step = 1.0 / k as f64;
        let half = 0.5 * step;
        let mut acc = [KahanSum::default(), KahanSum::default()];
        for a in 0..k {
            let ca = z[0] as f64 - 0.5 + (a as f64 + 0.5) * step;
            for b in 0..k {
                let cb = z[1] as f64 - 0.5 + (b as f64 + 0.5) * step;
                let mut s = [0.0, 0.0];
                for (xi, wi) in gl.nodes().iter().zip(gl.weights()) {
                    let y1 = ca + half * xi;
                    let mut inner = [0.0, 0.0];
                    for (xj, wj) in gl.nodes().iter().zip(gl.weights()) {
                        let v = f(y1, cb + half * xj);
                        inner[0] += wj * v[0];
                        inner[1] += wj * v[1];
                    }
                    s[0] += wi * inner[0];
                    s[1] += wi * inner[1];
                }
                acc[0].add(s[0] * half * half);
                acc[1].add(s[1] * half * half);
            }
        }
        [acc[0].value(), acc[1].value()]
    }

    /// `∫_{cell(z)} |y|^{-alpha} dy` for `z ≠ 0`.
    pub fn power(z: &[i64], alpha: f64) -> f64 {
        match z.len() {
            1 => {
                let c = z[0].unsigned_abs() as f64;
                power_1d(c - 0.5, alpha)
            }
            2 => {
                tensor_2d(z, |a, b| {
                    let r2 = a * a + b * b;
                    [r2.powf(-0.5 * alpha), 0.0]
                })[0]
            }
            d => panic!("cell integrals support N ≤ 2, got {d}"),
        }
    }

    /// `∫_{cell(z)} y |y|^{-(alpha+1)} dy` for `z ≠ 0`.
    pub fn odd(z: &[i64], alpha: f64) -> [f64; 2] {
        match z.len() {
            1 => {
                let c = z[0].unsigned_abs() as f64;
                let v = power_1d(c - 0.5, alpha);
                [v * z[0].signum() as f64, 0.0]
            }
            2 => tensor_2d(z, |a, b| {
                let r2 = a * a + b * b;
                let k = r2.powf(-0.5 * (alpha + 1.0));
                [a * k, b * k]
            }),
            d => panic!("cell integrals support N ≤ 2, got {d}"),
        }
    }

    /// `∫_{cell(0)} |y_1|^p |y|^{-alpha} dy`; requires `p - alpha + N > 0`.
    pub fn origin_moment(dim: usize, p: f64, alpha: f64) -> f64 {
        let beta = p - alpha;
        match dim {
            1 => {
                let e = beta + 1.0;
                2.0 * 0.5f64.powf(e) / e
            }
            2 => {
                let e = beta + 2.0;
                let ts = TanhSinh::default();
                let est = ts.integrate_lenient(0.0, FRAC_PI_4, 1e-15, |th, da, _| {
                    let c = th.cos();
                    let s = da.sin();
                    (c.powf(p) + s.powf(p)) * (2.0 * c).powf(-e)
                });
                4.0 * est.value / e
            }
            d => panic!("cell integrals support N ≤ 2, got {d}"),
        }
    }

    /// `∫_{cell(0)} |y|^{-alpha} dy`; requires `alpha < N`.
    pub fn origin_power(dim: usize, alpha: f64) -> f64 {
        match dim {
            1 => 2.0 * 0.5f64.powf(1.0 - alpha) / (1.0 - alpha),
            2 => {
                let v = gl40().integrate(0.0, FRAC_PI_4, |th| (2.0 * th.cos()).powf(alpha - 2.0));
                8.0 * v / (2.0 - alpha)
            }
            d => panic!("cell integrals support N ≤ 2, got {d}"),
        }
    }

    /// `∫_{ℝ^N ∖ cell(0)} |y|^{-alpha} dy`; requires `alpha > N`.
    pub fn complement(dim: usize, alpha: f64) -> f64 {
        match dim {
            1 => 2.0 * 0.5f64.powf(1.0 - alpha) / (alpha - 1.0),
            2 => {
                let v = gl40().integrate(0.0, FRAC_PI_4, |th| (2.0 * th.cos()).powf(alpha - 2.0));
                8.0 * v / (alpha - 2.0)
            }
            d => panic!("cell integrals support N ≤ 2, got {d}"),
        }
    }
}

/// Weights of the even kernel `|y|^{-(N+σ)}` on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    dim: usize,
    extent: usize,
    order: f64,
    h: f64,
    cutoff: f64,
    shape_digest: u64,
    domain_fingerprint: u64,
    complement: f64,
    weights: Vec<f64>,
    kappa: Vec<f64>,
}

/// Identifies a table for caching purposes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableKey {
    pub dim: usize,
    pub order: f64,
    pub h: f64,
    pub cutoff: f64,
    pub shape_digest: u64,
    pub domain_fingerprint: u64,
}

impl TableKey {
    /// Key of the table [`KernelTable::build`] would produce for these inputs.
    pub fn for_domain(domain: &GridDomain, order: f64, cutoff: Option<f64>) -> TableKey {
        TableKey {
            dim: domain.dim(),
            order,
            h: domain.h(),
            cutoff: cutoff.unwrap_or_else(|| KernelTable::default_cutoff(domain)),
            shape_digest: domain.shape().digest(),
            domain_fingerprint: domain.fingerprint(),
        }
    }
}

const MAGIC: &[u8; 4] = b"FLKT";
/// Version of the binary table format.
pub const CACHE_VERSION: u32 = 1;

impl KernelTable {
    /// Default cutoff radius: four bounding-box diameters.
    pub fn default_cutoff(domain: &GridDomain) -> f64 {
        4.0 * domain.bounding_diameter()
    }

    /// Builds the table of order `σ > 0` for `domain`.
    ///
    /// `cutoff` is the radius within which pair weights are tabulated; it must
    /// cover the interior diameter plus one cell.
    pub fn build(domain: &Arc<GridDomain>, order: f64, cutoff: Option<f64>) -> Result<KernelTable> {
        if !(order > 0.0 && order.is_finite()) {
            return Err(Error::param(format!("kernel order σ > 0 required, got {order}")));
        }
        let cutoff = cutoff.unwrap_or_else(|| Self::default_cutoff(domain));
        let need = domain.interior_diameter() + domain.h();
        if !(cutoff >= need) {
            return Err(Error::config(format!(
                "cutoff R = {cutoff} is below the domain diameter plus one cell ({need})"
            )));
        }
        let dim = domain.dim();
        let n = domain.nodes_per_axis();
        let h = domain.h();
        let alpha = dim as f64 + order;
        let scale = h.powf(-order);
        let total = n.pow(dim as u32);
        let weights: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let z = offset_of(flat, n, dim);
                if z.iter().all(|&c| c == 0) {
                    0.0
                } else {
                    cells::power(&z, alpha) * scale
                }
            })
            .collect();
        let complement = cells::complement(dim, alpha) * scale;
        let mut table = KernelTable {
            dim,
            extent: n,
            order,
            h,
            cutoff,
            shape_digest: domain.shape().digest(),
            domain_fingerprint: domain.fingerprint(),
            complement,
            weights,
            kappa: Vec::new(),
        };
        let m = domain.interior_count();
        let kappa: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|i| {
                let ci = domain.interior_index(i);
                let mut acc = KahanSum::default();
                for j in 0..m {
                    if j != i {
                        acc.add(table.weight_between(ci, domain.interior_index(j)));
                    }
                }
                complement - acc.value()
            })
            .collect();
        if let Some((i, k)) = kappa.iter().enumerate().find(|(_, k)| !(**k > 0.0)) {
            return Err(Error::Internal(format!(
                "exterior mass κ = {k} is not positive at interior node {i}"
            )));
        }
        table.kappa = kappa;
        Ok(table)
    }

    pub fn key(&self) -> TableKey {
        TableKey {
            dim: self.dim,
            order: self.order,
            h: self.h,
            cutoff: self.cutoff,
            shape_digest: self.shape_digest,
            domain_fingerprint: self.domain_fingerprint,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Kernel order `σ`; the kernel is `|y|^{-(N+σ)}`.
    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Weights for nonnegative offsets, axis 0 fastest.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Exterior mass per interior node, in interior order.
    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// `∫_{ℝ^N ∖ cell(0)} |y|^{-(N+σ)} dy` at spacing `h`.
    pub fn complement_mass(&self) -> f64 {
        self.complement
    }

    /// Weight of the lattice offset `z` (any signs, not all zero).
    pub fn weight(&self, z: &[i64]) -> f64 {
        let mut flat = 0usize;
        let mut stride = 1usize;
        for &c in z {
            flat += c.unsigned_abs() as usize * stride;
            stride *= self.extent;
        }
        self.weights[flat]
    }

    #[inline]
    pub(crate) fn weight_between(&self, a: &[i64], b: &[i64]) -> f64 {
        if self.dim == 1 {
            self.weights[(a[0] - b[0]).unsigned_abs() as usize]
        } else {
            let d0 = (a[0] - b[0]).unsigned_abs() as usize;
            let d1 = (a[1] - b[1]).unsigned_abs() as usize;
            self.weights[d0 + self.extent * d1]
        }
    }

    /// `∫_{cell(0)} |y_1|^p |y|^{-(N+σ)} dy` at spacing `h`; needs `p > σ`.
    pub fn origin_moment(&self, p: f64) -> Result<f64> {
        if !(p > self.order) {
            return Err(Error::param(format!(
                "origin moment needs p > σ, got p = {p}, σ = {}",
                self.order
            )));
        }
        let alpha = self.dim as f64 + self.order;
        Ok(cells::origin_moment(self.dim, p, alpha) * self.h.powf(p - self.order))
    }

    /// Radial tail `ω_{N-1} R^{-σ} / σ` beyond radius `r`.
    pub fn tail(&self, r: f64) -> f64 {
        radial_tail(self.dim, self.order, r)
    }

    pub(crate) fn check_domain(&self, domain: &GridDomain) -> Result<()> {
        if domain.fingerprint() == self.domain_fingerprint {
            Ok(())
        } else {
            Err(Error::param("kernel table was built for a different domain"))
        }
    }

    /// Serializes the table in the cache format.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.extent as u32).to_le_bytes())?;
        for v in [self.order, self.h, self.cutoff] {
            w.write_all(&v.to_bits().to_le_bytes())?;
        }
        w.write_all(&self.shape_digest.to_le_bytes())?;
        w.write_all(&self.domain_fingerprint.to_le_bytes())?;
        w.write_all(&self.complement.to_bits().to_le_bytes())?;
        w.write_all(&(self.weights.len() as u64).to_le_bytes())?;
        w.write_all(&(self.kappa.len() as u64).to_le_bytes())?;
        for v in self.weights.iter().chain(&self.kappa) {
            w.write_all(&v.to_bits().to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a table written by [`KernelTable::write_to`] and checks its key.
    pub fn read_from(mut r: impl Read, expected: &TableKey) -> std::result::Result<KernelTable, CacheError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| CacheError::Corrupt("truncated header"))?;
        if &magic != MAGIC {
            return Err(CacheError::Corrupt("bad magic"));
        }
        let version = read_u32(&mut r)?;
        if version != CACHE_VERSION {
            return Err(CacheError::Version(version));
        }
        let dim = read_u32(&mut r)? as usize;
        let extent = read_u32(&mut r)? as usize;
        let order = read_f64(&mut r)?;
        let h = read_f64(&mut r)?;
        let cutoff = read_f64(&mut r)?;
        let shape_digest = read_u64(&mut r)?;
        let domain_fingerprint = read_u64(&mut r)?;
        let key = TableKey {
            dim,
            order,
            h,
            cutoff,
            shape_digest,
            domain_fingerprint,
        };
        if key.dim != expected.dim
            || key.order.to_bits() != expected.order.to_bits()
            || key.h.to_bits() != expected.h.to_bits()
            || key.cutoff.to_bits() != expected.cutoff.to_bits()
            || key.shape_digest != expected.shape_digest
            || key.domain_fingerprint != expected.domain_fingerprint
        {
            return Err(CacheError::KeyMismatch);
        }
        let complement = read_f64(&mut r)?;
        let nw = read_u64(&mut r)? as usize;
        let nk = read_u64(&mut r)? as usize;
        if dim == 0 || dim > 2 || nw != extent.pow(dim as u32) || nk > nw {
            return Err(CacheError::Corrupt("inconsistent array lengths"));
        }
        let mut weights = Vec::with_capacity(nw);
        for _ in 0..nw {
            weights.push(read_f64(&mut r)?);
        }
        let mut kappa = Vec::with_capacity(nk);
        for _ in 0..nk {
            kappa.push(read_f64(&mut r)?);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest).map_err(|_| CacheError::Corrupt("read failure"))? != 0 {
            return Err(CacheError::Corrupt("trailing bytes"));
        }
        Ok(KernelTable {
            dim,
            extent,
            order,
            h,
            cutoff,
            shape_digest,
            domain_fingerprint,
            complement,
            weights,
            kappa,
        })
    }
}

/// Reasons a cached table cannot be used.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CacheError {
    #[error("corrupt cache file: {0}")]
    Corrupt(&'static str),
    #[error("cache format version {0} is not supported")]
    Version(u32),
    #[error("cache key does not match the requested table")]
    KeyMismatch,
}

fn read_u32(r: &mut impl Read) -> std::result::Result<u32, CacheError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| CacheError::Corrupt("truncated file"))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> std::result::Result<u64, CacheError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| CacheError::Corrupt("truncated file"))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> std::result::Result<f64, CacheError> {
    read_u64(r).map(f64::from_bits)
}

/// `ω_{N-1} R^{-σ} / σ`, the kernel mass outside the ball of radius `r`.
pub fn radial_tail(dim: usize, order: f64, r: f64) -> f64 {
    sphere_area(dim) * r.powf(-order) / order
}

pub(crate) fn offset_of(flat: usize, n: usize, dim: usize) -> Vec<i64> {
    let mut z = Vec::with_capacity(dim);
    let mut rem = flat;
    for _ in 0..dim {
        z.push((rem % n) as i64);
        rem /= n;
    }
    z
}

/// Weights of the odd kernel `y |y|^{-(N+1+s)}` on nonnegative offsets.
#[derive(Debug, Clone)]
pub struct OddKernelTable {
    dim: usize,
    extent: usize,
    order: f64,
    weights: Vec<[f64; 2]>,
    diagonal: f64,
    domain_fingerprint: u64,
}

impl OddKernelTable {
    pub fn build(domain: &Arc<GridDomain>, s: f64) -> Result<OddKernelTable> {
        crate::error::check_unit_order("s", s)?;
        let dim = domain.dim();
        let n = domain.nodes_per_axis();
        let h = domain.h();
        let alpha = dim as f64 + s;
        let scale = h.powf(-s);
        let weights: Vec<[f64; 2]> = (0..n.pow(dim as u32))
            .into_par_iter()
            .map(|flat| {
                let z = offset_of(flat, n, dim);
                if z.iter().all(|&c| c == 0) {
                    [0.0, 0.0]
                } else {
                    let v = cells::odd(&z, alpha);
                    [v[0] * scale, v[1] * scale]
                }
            })
            .collect();
        // ∫_{cell(0)} y_k² |y|^{-(N+1+s)} dy at spacing h
        let diagonal = cells::origin_moment(dim, 2.0, alpha + 1.0) * h.powf(1.0 - s);
        Ok(OddKernelTable {
            dim,
            extent: n,
            order: s,
            weights,
            diagonal,
            domain_fingerprint: domain.fingerprint(),
        })
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    /// Vector weight of the offset `z`, with signs restored.
    #[inline]
    pub fn weight(&self, z: &[i64]) -> [f64; 2] {
        let mut flat = 0usize;
        let mut stride = 1usize;
        for &c in z {
            flat += c.unsigned_abs() as usize * stride;
            stride *= self.extent;
        }
        let w = self.weights[flat];
        let mut out = [0.0, 0.0];
        for k in 0..self.dim {
            out[k] = w[k] * z[k].signum() as f64;
        }
        out
    }

    /// `∫_{cell(0)} y_k² |y|^{-(N+1+s)} dy`, identical for every axis.
    pub fn diagonal_moment(&self) -> f64 {
        self.diagonal
    }

    pub(crate) fn check_domain(&self, domain: &GridDomain) -> Result<()> {
        if domain.fingerprint() == self.domain_fingerprint {
            Ok(())
        } else {
            Err(Error::param("kernel table was built for a different domain"))
        }
    }
}

/// Cell integrals of `|y|^{-λ}` with `0 < λ < N`, origin cell included.
#[derive(Debug, Clone)]
pub struct PotentialTable {
    extent: usize,
    lambda: f64,
    weights: Vec<f64>,
    domain_fingerprint: u64,
}

impl PotentialTable {
    pub fn build(domain: &Arc<GridDomain>, lambda: f64) -> Result<PotentialTable> {
        let dim = domain.dim();
        if !(lambda > 0.0 && lambda < dim as f64) {
            return Err(Error::param(format!(
                "Riesz exponent λ ∈ (0, N) = (0, {dim}) required, got {lambda}"
            )));
        }
        let n = domain.nodes_per_axis();
        let h = domain.h();
        let scale = h.powf(dim as f64 - lambda);
        let weights: Vec<f64> = (0..n.pow(dim as u32))
            .into_par_iter()
            .map(|flat| {
                let z = offset_of(flat, n, dim);
                if z.iter().all(|&c| c == 0) {
                    cells::origin_power(dim, lambda) * scale
                } else {
                    cells::power(&z, lambda) * scale
                }
            })
            .collect();
        Ok(PotentialTable {
            extent: n,
            lambda,
            weights,
            domain_fingerprint: domain.fingerprint(),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn weight(&self, z: &[i64]) -> f64 {
        let mut flat = 0usize;
        let mut stride = 1usize;
        for &c in z {
            flat += c.unsigned_abs() as usize * stride;
            stride *= self.extent;
        }
        self.weights[flat]
    }

    pub(crate) fn check_domain(&self, domain: &GridDomain) -> Result<()> {
        if domain.fingerprint() == self.domain_fingerprint {
            Ok(())
        } else {
            Err(Error::param("kernel table was built for a different domain"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Shape;

    #[test]
    fn one_dimensional_weight_matches_antiderivative() {
        // σ = 1, cell [h/2, 3h/2]: (2/h)(1 - 1/3)
        let d = GridDomain::build(Shape::ball(1, 1.0), 1, 10, 1, true).unwrap();
        let t = KernelTable::build(&d, 1.0, None).unwrap();
        let h = d.h();
        let expect = (2.0 / h) * (1.0 - 1.0 / 3.0);
        assert!((t.weight(&[1]) - expect).abs() < 1e-13 * expect);
        assert_eq!(t.weight(&[-3]), t.weight(&[3]));
    }

    #[test]
    fn planar_lattice_sum_matches_square_complement() {
        // Σ_{0<|z|_∞≤K} w_z = T (1 - (2K+1)^{-σ}) by homogeneity
        for sigma in [0.5, 1.2, 1.9] {
            let alpha = 2.0 + sigma;
            let total = cells::complement(2, alpha);
            let k = 6i64;
            let mut acc = KahanSum::default();
            for a in -k..=k {
                for b in -k..=k {
                    if a != 0 || b != 0 {
                        acc.add(cells::power(&[a, b], alpha));
                    }
                }
            }
            let expect = total * (1.0 - ((2 * k + 1) as f64).powf(-sigma));
            assert!(
                (acc.value() - expect).abs() < 1e-12 * expect,
                "σ={sigma}: {} vs {expect}",
                acc.value()
            );
        }
    }

    #[test]
    fn planar_origin_power_matches_square_scaling() {
        // ∫_{[-1/2,1/2]^2}|y|^{-λ} equals the sum over the 3×3 block scaled by 3^{λ-2}
        let lambda = 1.3;
        let mut block = cells::origin_power(2, lambda);
        for a in -1i64..=1 {
            for b in -1i64..=1 {
                if a != 0 || b != 0 {
                    block += cells::power(&[a, b], lambda);
                }
            }
        }
        let origin = cells::origin_power(2, lambda);
        assert!((block * 3f64.powf(lambda - 2.0) - origin).abs() < 1e-12 * origin);
    }

    #[test]
    fn planar_origin_moment_matches_tensor_rule_on_block() {
        // same idea with |y_1|^2 |y|^{-α}: homogeneity of degree 2 - α + 2
        let (p, alpha) = (2.0, 3.5);
        let mut block = cells::origin_moment(2, p, alpha);
        for a in -1i64..=1 {
            for b in -1i64..=1 {
                if a != 0 || b != 0 {
                    let z = [a, b];
                    block += moment_cell(&z, p, alpha);
                }
            }
        }
        let origin = cells::origin_moment(2, p, alpha);
        let scaled = block * 3f64.powf(-(p - alpha + 2.0));
        assert!((scaled - origin).abs() < 1e-11 * origin, "{scaled} vs {origin}");
    }

    fn moment_cell(z: &[i64], p: f64, alpha: f64) -> f64 {
        let gl = GaussLegendre::new(12);
        let mut s = 0.0;
        for k1 in 0..8 {
            for k2 in 0..8 {
                let a0 = z[0] as f64 - 0.5 + k1 as f64 / 8.0;
                let b0 = z[1] as f64 - 0.5 + k2 as f64 / 8.0;
                s += gl.integrate(a0, a0 + 0.125, |a| {
                    gl.integrate(b0, b0 + 0.125, |b| a.abs().powf(p) * (a * a + b * b).powf(-0.5 * alpha))
                });
            }
        }
        s
    }

    #[test]
    fn exterior_mass_is_positive_and_bounded_by_complement() {
        let d = GridDomain::build(Shape::ball(2, 1.0), 2, 20, 2, true).unwrap();
        let t = KernelTable::build(&d, 1.5, None).unwrap();
        for (i, k) in t.kappa().iter().enumerate() {
            assert!(*k > 0.0);
            let ci = d.interior_index(i);
            let interior: f64 = (0..d.interior_count())
                .filter(|&j| j != i)
                .map(|j| t.weight_between(ci, d.interior_index(j)))
                .sum();
            assert!(interior + k <= t.complement_mass() * (1.0 + 1e-14));
        }
    }

    #[test]
    fn tail_formula() {
        let v = radial_tail(2, 1.5, 10.0);
        assert!((v - 2.0 * PI * 10f64.powf(-1.5) / 1.5).abs() < 1e-15);
        assert!(radial_tail(2, 1.5, 20.0) < v);
    }

    #[test]
    fn small_cutoff_is_rejected() {
        let d = GridDomain::build(Shape::ball(1, 1.0), 1, 12, 1, true).unwrap();
        assert!(matches!(KernelTable::build(&d, 1.0, Some(1.0)), Err(Error::Configuration(_))));
    }

    #[test]
    fn cache_round_trip_is_bit_exact() {
        let d = GridDomain::build(Shape::ball(2, 1.0), 2, 12, 1, true).unwrap();
        let t = KernelTable::build(&d, 0.8, None).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(TableKey::for_domain(&d, 0.8, None), t.key());
        let back = KernelTable::read_from(buf.as_slice(), &t.key()).unwrap();
        assert_eq!(back, t);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(buf, again);

        let mut other = t.key();
        other.h *= 2.0;
        assert_eq!(KernelTable::read_from(buf.as_slice(), &other), Err(CacheError::KeyMismatch));
        buf[0] = b'X';
        assert!(matches!(KernelTable::read_from(buf.as_slice(), &t.key()), Err(CacheError::Corrupt(_))));
    }
}
