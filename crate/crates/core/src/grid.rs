//! Uniform Cartesian grids on bounded domains and functions sampled on them.
//!
//! A [`GridDomain`] is a cube of `n^N` nodes with one spacing `h` on every
//! axis. Nodes whose centers satisfy the shape predicate strictly are
//! interior; all others are exterior, and every [`GridFunction`] vanishes
//! there. In offset mode the nodes sit at cell centers, so a bounding box
//! symmetric about the origin with an even node count has no node at `0`.

use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Maximum supported dimension for grids.
pub const MAX_DIM: usize = 2;

/// Geometric description of `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Annulus { center: Vec<f64>, r_in: f64, r_out: f64 },
}

impl Shape {
    /// Ball of the given radius centered at the origin.
    pub fn ball(dim: usize, radius: f64) -> Shape {
        Shape::Ball {
            center: vec![0.0; dim],
            radius,
        }
    }

    /// The cube `(-half, half)^N`.
    pub fn cube(dim: usize, half: f64) -> Shape {
        Shape::Box {
            lo: vec![-half; dim],
            hi: vec![half; dim],
        }
    }

    pub fn annulus(dim: usize, r_in: f64, r_out: f64) -> Shape {
        Shape::Annulus {
            center: vec![0.0; dim],
            r_in,
            r_out,
        }
    }

    /// Dimension of the shape's center or corners.
    pub fn dim(&self) -> usize {
        match self {
            Shape::Ball { center, .. } | Shape::Annulus { center, .. } => center.len(),
            Shape::Box { lo, .. } => lo.len(),
        }
    }

    /// Strict membership test for a point.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Ball { center, radius } => dist2(x, center) < radius * radius,
            Shape::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *l < *v && *v < *h),
            Shape::Annulus { center, r_in, r_out } => {
                let d2 = dist2(x, center);
                r_in * r_in < d2 && d2 < r_out * r_out
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let check_len = |v: &Vec<f64>, what: &str| {
            if v.len() == dim {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "shape {what} has {} components, dimension is {dim}",
                    v.len()
                )))
            }
        };
        match self {
            Shape::Ball { center, radius } => {
                check_len(center, "center")?;
                if !(*radius > 0.0) {
                    return Err(Error::config(format!("ball radius > 0 required, got {radius}")));
                }
            }
            Shape::Box { lo, hi } => {
                check_len(lo, "lo")?;
                check_len(hi, "hi")?;
                if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                    return Err(Error::config("box requires lo < hi on every axis"));
                }
            }
            Shape::Annulus { center, r_in, r_out } => {
                check_len(center, "center")?;
                if !(*r_in >= 0.0 && r_in < r_out) {
                    return Err(Error::config(format!(
                        "annulus requires 0 ≤ r_in < r_out, got r_in={r_in}, r_out={r_out}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Axis-aligned bounds of the shape.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Shape::Ball { center, radius } | Shape::Annulus { center, r_out: radius, .. } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Shape::Box { lo, hi } => (lo.clone(), hi.clone()),
        }
    }

    /// Stable digest of the shape parameters, used in cache keys.
    pub fn digest(&self) -> u64 {
        let mut hasher = Sha256::new();
        let mut put = |tag: u8, vals: &[f64]| {
            hasher.update([tag]);
            for v in vals {
                hasher.update(v.to_bits().to_le_bytes());
            }
        };
        match self {
            Shape::Ball { center, radius } => {
                put(1, center);
                put(1, &[*radius]);
            }
            Shape::Box { lo, hi } => {
                put(2, lo);
                put(2, hi);
            }
            Shape::Annulus { center, r_in, r_out } => {
                put(3, center);
                put(3, &[*r_in, *r_out]);
            }
        }
        let out = hasher.finalize();
        u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
    }
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Uniform grid with an interior mask.
#[derive(Debug, Clone)]
pub struct GridDomain {
    dim: usize,
    n: usize,
    lo: Vec<f64>,
    h: f64,
    offset: bool,
    shape: Shape,
    mask: Vec<bool>,
    interior: Vec<usize>,
    slot: Vec<usize>,
    coords: Vec<i64>,
    fingerprint: u64,
}

const NO_SLOT: usize = usize::MAX;

impl GridDomain {
    /// Grid with an explicit bounding box.
    ///
    /// Without `offset` the nodes include both ends of every axis,
    /// `x_k = lo + k h` with `h = (hi - lo)/(n - 1)`. With `offset` the box
    /// is split into `n` cells per axis and nodes sit at the cell centers.
    pub fn with_bounds(
        shape: Shape,
        lo: &[f64],
        hi: &[f64],
        nodes_per_axis: usize,
        offset: bool,
    ) -> Result<Arc<GridDomain>> {
        let dim = lo.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::config(format!(
                "dimension N ∈ {{1, 2}} supported for grids, got {dim}"
            )));
        }
        if hi.len() != dim {
            return Err(Error::config("bounding box lo/hi lengths differ"));
        }
        shape.validate(dim)?;
        if nodes_per_axis < 3 {
            return Err(Error::config(format!(
                "nodes_per_axis ≥ 3 required, got {nodes_per_axis}"
            )));
        }
        let cells = if offset { nodes_per_axis } else { nodes_per_axis - 1 } as f64;
        let h = (hi[0] - lo[0]) / cells;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::config("bounding box must have hi > lo"));
        }
        for k in 1..dim {
            let hk = (hi[k] - lo[k]) / cells;
            if (hk - h).abs() > 1e-12 * h {
                return Err(Error::config(
                    "spacing must be identical on all axes; use a cubic bounding box",
                ));
            }
        }
        let first: Vec<f64> = if offset {
            lo.iter().map(|l| l + 0.5 * h).collect()
        } else {
            lo.to_vec()
        };
        Self::assemble(shape, dim, nodes_per_axis, first, h, offset)
    }

    /// Grid whose bounding box is the shape's bounding cube padded by
    /// `margin_cells` cells on each side.
    pub fn build(
        shape: Shape,
        dim: usize,
        nodes_per_axis: usize,
        margin_cells: usize,
        offset: bool,
    ) -> Result<Arc<GridDomain>> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::config(format!(
                "dimension N ∈ {{1, 2}} supported for grids, got {dim}"
            )));
        }
        shape.validate(dim)?;
        if margin_cells < 1 {
            return Err(Error::config("margin_cells ≥ 1 required"));
        }
        let (slo, shi) = shape.bounds();
        let width = slo
            .iter()
            .zip(&shi)
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max);
        let inner = if offset {
            nodes_per_axis as f64 - 2.0 * margin_cells as f64
        } else {
            nodes_per_axis as f64 - 1.0 - 2.0 * margin_cells as f64
        };
        if inner < 1.0 {
            return Err(Error::config(format!(
                "{nodes_per_axis} nodes per axis cannot hold a margin of {margin_cells} cells"
            )));
        }
        let h = width / inner;
        let pad = margin_cells as f64 * h;
        let lo: Vec<f64> = slo
            .iter()
            .zip(&shi)
            .map(|(l, u)| 0.5 * (l + u) - 0.5 * width - pad)
            .collect();
        let hi: Vec<f64> = lo
            .iter()
            .map(|l| l + if offset { nodes_per_axis as f64 } else { nodes_per_axis as f64 - 1.0 } * h)
            .collect();
        Self::with_bounds(shape, &lo, &hi, nodes_per_axis, offset)
    }

    fn assemble(
        shape: Shape,
        dim: usize,
        n: usize,
        lo: Vec<f64>,
        h: f64,
        offset: bool,
    ) -> Result<Arc<GridDomain>> {
        let total = n.pow(dim as u32);
        let mut mask = vec![false; total];
        let mut interior = Vec::new();
        let mut slot = vec![NO_SLOT; total];
        let mut coords = Vec::new();
        let mut x = vec![0.0; dim];
        let mut idx = vec![0usize; dim];
        for node in 0..total {
            unflatten(node, n, &mut idx);
            for k in 0..dim {
                x[k] = lo[k] + idx[k] as f64 * h;
            }
            if shape.contains(&x) {
                if idx.iter().any(|&i| i == 0 || i == n - 1) {
                    return Err(Error::config(
                        "an interior node lies on the outer layer of the grid; margin ≥ 1 cell required",
                    ));
                }
                mask[node] = true;
                slot[node] = interior.len();
                interior.push(node);
                coords.extend(idx.iter().map(|&i| i as i64));
            }
        }
        if interior.is_empty() {
            return Err(Error::config(
                "empty interior: no node center lies inside the shape",
            ));
        }
        let mut hasher = Sha256::new();
        hasher.update((dim as u64).to_le_bytes());
        hasher.update((n as u64).to_le_bytes());
        hasher.update(h.to_bits().to_le_bytes());
        hasher.update([offset as u8]);
        for l in &lo {
            hasher.update(l.to_bits().to_le_bytes());
        }
        hasher.update(shape.digest().to_le_bytes());
        for m in &mask {
            hasher.update([*m as u8]);
        }
        let digest = hasher.finalize();
        let fingerprint = u64::from_le_bytes(digest[..8].try_into().expect("32-byte digest"));
        Ok(Arc::new(GridDomain {
            dim,
            n,
            lo,
            h,
            offset,
            shape,
            mask,
            interior,
            slot,
            coords,
            fingerprint,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.n
    }

    pub fn is_offset(&self) -> bool {
        self.offset
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn node_count(&self) -> usize {
        self.mask.len()
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.mask[node]
    }

    /// Linear node indices of the interior nodes, in storage order.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// Position of `node` in the interior ordering.
    pub fn interior_slot(&self, node: usize) -> Option<usize> {
        match self.slot[node] {
            NO_SLOT => None,
            s => Some(s),
        }
    }

    /// Integer multi-index of the `k`-th interior node.
    pub fn interior_index(&self, k: usize) -> &[i64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    /// Center of the first node along each axis.
    pub fn origin(&self) -> &[f64] {
        &self.lo
    }

    /// Center of `node`.
    pub fn position(&self, node: usize) -> Vec<f64> {
        let mut idx = vec![0usize; self.dim];
        unflatten(node, self.n, &mut idx);
        idx.iter()
            .zip(&self.lo)
            .map(|(&i, l)| l + i as f64 * self.h)
            .collect()
    }

    /// Center of the `k`-th interior node.
    pub fn interior_position(&self, k: usize) -> Vec<f64> {
        self.interior_index(k)
            .iter()
            .zip(&self.lo)
            .map(|(&i, l)| l + i as f64 * self.h)
            .collect()
    }

    /// Node reached from `node` by moving `step` cells along `axis`.
    pub fn neighbor(&self, node: usize, axis: usize, step: i64) -> Option<usize> {
        let stride = self.n.pow(axis as u32);
        let i = (node / stride) % self.n;
        let j = i as i64 + step;
        if j < 0 || j >= self.n as i64 {
            None
        } else {
            Some((node as i64 + step * stride as i64) as usize)
        }
    }

    /// Interior slot of the neighbor of interior node `k` along `axis`, or
    /// `None` when that neighbor is exterior.
    #[inline]
    pub fn neighbor_slot(&self, k: usize, axis: usize, step: i64) -> Option<usize> {
        let node = self.interior[k];
        self.neighbor(node, axis, step).and_then(|m| self.interior_slot(m))
    }

    /// Volume `h^N` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Discrete measure `|Ω_h|`.
    pub fn measure(&self) -> f64 {
        self.interior.len() as f64 * self.cell_volume()
    }

    /// Largest distance between two interior node centers.
    pub fn interior_diameter(&self) -> f64 {
        let mut lo = vec![i64::MAX; self.dim];
        let mut hi = vec![i64::MIN; self.dim];
        for k in 0..self.interior.len() {
            for (a, &c) in self.interior_index(k).iter().enumerate() {
                lo[a] = lo[a].min(c);
                hi[a] = hi[a].max(c);
            }
        }
        let d2: f64 = lo
            .iter()
            .zip(&hi)
            .map(|(l, u)| ((u - l) as f64 * self.h).powi(2))
            .sum();
        d2.sqrt()
    }

    /// Diagonal of the bounding box spanned by the node cells.
    pub fn bounding_diameter(&self) -> f64 {
        let side = self.n as f64 * self.h;
        side * (self.dim as f64).sqrt()
    }

    /// True when some node center is exactly the origin.
    pub fn has_origin_node(&self) -> bool {
        self.lo.iter().all(|l| {
            let k = -l / self.h;
            k >= 0.0 && k <= (self.n - 1) as f64 && k.fract() == 0.0 && *l + k * self.h == 0.0
        })
    }

    /// Identity of the grid geometry and mask.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub(crate) fn check_same(&self, other: &GridDomain) -> Result<()> {
        if self.fingerprint == other.fingerprint {
            Ok(())
        } else {
            Err(Error::param("grid functions or tables belong to different domains"))
        }
    }
}

fn unflatten(mut node: usize, n: usize, idx: &mut [usize]) {
    for v in idx.iter_mut() {
        *v = node % n;
        node /= n;
    }
}

/// Real values on all nodes of a domain, zero on exterior nodes.
#[derive(Debug, Clone)]
pub struct GridFunction {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.domain.fingerprint == other.domain.fingerprint && self.values == other.values
    }
}

impl GridFunction {
    pub fn zeros(domain: &Arc<GridDomain>) -> GridFunction {
        GridFunction {
            domain: Arc::clone(domain),
            values: vec![0.0; domain.node_count()],
        }
    }

    /// Constant `c` on the interior.
    pub fn constant(domain: &Arc<GridDomain>, c: f64) -> GridFunction {
        let mut g = GridFunction::zeros(domain);
        for &node in domain.interior_nodes() {
            g.values[node] = c;
        }
        g
    }

    /// Builds a function from its interior values, in interior order.
    pub fn from_interior(domain: &Arc<GridDomain>, interior: &[f64]) -> Result<GridFunction> {
        if interior.len() != domain.interior_count() {
            return Err(Error::param(format!(
                "expected {} interior values, got {}",
                domain.interior_count(),
                interior.len()
            )));
        }
        let mut g = GridFunction::zeros(domain);
        for (&node, &v) in domain.interior_nodes().iter().zip(interior) {
            g.values[node] = v;
        }
        Ok(g)
    }

    /// Samples `expr` at interior node centers.
    pub fn sample<F>(domain: &Arc<GridDomain>, expr: F) -> Result<GridFunction>
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut g = GridFunction::zeros(domain);
        for (k, &node) in domain.interior_nodes().iter().enumerate() {
            let x = domain.interior_position(k);
            let v = expr(&x);
            if !v.is_finite() {
                return Err(Error::param(format!(
                    "non-finite sample at node {x:?}; use an origin-offset grid for singular data"
                )));
            }
            g.values[node] = v;
        }
        Ok(g)
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    /// Values on all nodes.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    /// Values at interior nodes, in interior order.
    pub fn interior_values(&self) -> Vec<f64> {
        self.domain
            .interior_nodes()
            .iter()
            .map(|&n| self.values[n])
            .collect()
    }

    /// Applies `f` to interior values; exterior values stay zero.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> GridFunction {
        let mut g = GridFunction::zeros(&self.domain);
        for &node in self.domain.interior_nodes() {
            g.values[node] = f(self.values[node]);
        }
        g
    }

    /// Combines two functions on the same domain node by node.
    pub fn zip_map(
        &self,
        other: &GridFunction,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<GridFunction> {
        self.domain.check_same(&other.domain)?;
        let mut g = GridFunction::zeros(&self.domain);
        for &node in self.domain.interior_nodes() {
            g.values[node] = f(self.values[node], other.values[node]);
        }
        Ok(g)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Midpoint rule `Σ u_i h^N` over interior nodes.
    pub fn integrate(&self) -> f64 {
        let s: f64 = self
            .domain
            .interior_nodes()
            .iter()
            .map(|&n| self.values[n])
            .sum();
        s * self.domain.cell_volume()
    }

    /// Discrete `L^p` norm; `p = f64::INFINITY` gives the maximum modulus.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_infinite() && p > 0.0 {
            return Ok(self.max_abs());
        }
        if !(p >= 1.0) {
            return Err(Error::param(format!("p ≥ 1 or p = ∞ required, got {p}")));
        }
        let s: f64 = self
            .domain
            .interior_nodes()
            .iter()
            .map(|&n| self.values[n].abs().powf(p))
            .sum();
        Ok((s * self.domain.cell_volume()).powf(1.0 / p))
    }

    pub fn max_abs(&self) -> f64 {
        self.domain
            .interior_nodes()
            .iter()
            .map(|&n| self.values[n].abs())
            .fold(0.0, f64::max)
    }

    /// Discrete inner product `Σ u_i v_i h^N`.
    pub fn dot(&self, other: &GridFunction) -> Result<f64> {
        self.domain.check_same(&other.domain)?;
        let s: f64 = self
            .domain
            .interior_nodes()
            .iter()
            .map(|&n| self.values[n] * other.values[n])
            .sum();
        Ok(s * self.domain.cell_volume())
    }

    /// Averages this function onto a coarser grid.
    ///
    /// On offset grids the coarse cell must be a union of `r^N` fine cells and
    /// the result is the cell average. On node-centered grids coarse nodes
    /// must coincide with fine nodes and the result is injection.
    pub fn restrict_to(&self, coarse: &Arc<GridDomain>) -> Result<GridFunction> {
        let fine = &self.domain;
        if fine.dim != coarse.dim || fine.offset != coarse.offset {
            return Err(Error::param("restriction needs grids of the same kind"));
        }
        let ratio = coarse.h / fine.h;
        let r = ratio.round() as i64;
        if r < 1 || (ratio - r as f64).abs() > 1e-9 * ratio {
            return Err(Error::param("coarse spacing must be an integer multiple of the fine spacing"));
        }
        let dim = fine.dim;
        let mut out = GridFunction::zeros(coarse);
        for (k, &node) in coarse.interior_nodes().iter().enumerate() {
            let x = coarse.interior_position(k);
            let mut acc = 0.0;
            let mut count = 0usize;
            if fine.offset {
                // fine cell centers inside the coarse cell
                let base: Vec<i64> = (0..dim)
                    .map(|a| {
                        let first = x[a] - 0.5 * coarse.h + 0.5 * fine.h;
                        ((first - fine.lo[a]) / fine.h).round() as i64
                    })
                    .collect();
                let total = (r as usize).pow(dim as u32);
                for m in 0..total {
                    let mut flat = 0usize;
                    let mut rem = m;
                    let mut stride = 1usize;
                    let mut inside = true;
                    for &b in &base {
                        let i = b + (rem % r as usize) as i64;
                        rem /= r as usize;
                        if i < 0 || i >= fine.n as i64 {
                            inside = false;
                            break;
                        }
                        flat += i as usize * stride;
                        stride *= fine.n;
                    }
                    if inside {
                        acc += self.values[flat];
                    }
                    count += 1;
                }
            } else {
                let mut flat = 0usize;
                let mut stride = 1usize;
                for a in 0..dim {
                    let i = ((x[a] - fine.lo[a]) / fine.h).round() as i64;
                    if i < 0 || i >= fine.n as i64 {
                        return Err(Error::param("coarse node outside the fine grid"));
                    }
                    flat += i as usize * stride;
                    stride *= fine.n;
                }
                acc = self.values[flat];
                count = 1;
            }
            out.values[node] = acc / count as f64;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_nodes_on_symmetric_box_give_seven_interior() {
        let d = GridDomain::with_bounds(Shape::ball(1, 1.0), &[-1.25], &[1.25], 9, false).unwrap();
        assert_eq!(d.interior_count(), 7);
        assert!((d.h() - 0.3125).abs() < 1e-15);
        assert!(d.has_origin_node());
    }

    #[test]
    fn box_interior_is_a_product() {
        let d = GridDomain::build(Shape::cube(2, 1.0), 2, 12, 2, true).unwrap();
        let per_axis = (0..12)
            .filter(|&i| {
                let x = d.origin()[0] + i as f64 * d.h();
                -1.0 < x && x < 1.0
            })
            .count();
        assert_eq!(d.interior_count(), per_axis * per_axis);
    }

    #[test]
    fn tiny_ball_is_rejected() {
        let err = GridDomain::with_bounds(Shape::ball(1, 0.01), &[-1.25], &[1.25], 6, true).unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
    }

    #[test]
    fn offset_grid_avoids_origin() {
        let d = GridDomain::build(Shape::ball(2, 1.0), 2, 24, 2, true).unwrap();
        assert!(!d.has_origin_node());
        assert!(GridFunction::sample(&d, |x| 1.0 / x[0].hypot(x[1])).is_ok());
        let e = GridDomain::with_bounds(Shape::ball(1, 1.0), &[-1.5], &[1.5], 7, false).unwrap();
        assert!(GridFunction::sample(&e, |x| 1.0 / x[0].abs()).is_err());
    }

    #[test]
    fn mask_is_reproduced_by_the_predicate() {
        let d = GridDomain::build(Shape::annulus(2, 0.3, 1.0), 2, 30, 1, true).unwrap();
        for node in 0..d.node_count() {
            assert_eq!(d.shape().contains(&d.position(node)), d.is_interior(node));
        }
    }

    #[test]
    fn integrate_tent_converges_at_first_order() {
        for n in [23usize, 47, 95, 191] {
            let d = GridDomain::with_bounds(Shape::cube(1, 1.0), &[-1.17], &[1.17], n, true).unwrap();
            let u = GridFunction::sample(&d, |x| 1.0 - x[0].abs()).unwrap();
            let err = (u.integrate() - 1.0).abs();
            assert!(err <= d.h(), "n={n}: error {err} vs h {}", d.h());
        }
        let d = GridDomain::with_bounds(Shape::cube(1, 1.0), &[-1.17], &[1.17], 50, true).unwrap();
        assert_eq!(GridFunction::zeros(&d).integrate(), 0.0);
    }

    #[test]
    fn lp_norm_of_constant_and_rejects_small_p() {
        let d = GridDomain::build(Shape::ball(2, 1.0), 2, 20, 1, true).unwrap();
        let u = GridFunction::constant(&d, 3.0);
        let expect = 3.0 * d.measure().powf(0.5);
        assert!((u.lp_norm(2.0).unwrap() - expect).abs() < 1e-12);
        assert_eq!(u.lp_norm(f64::INFINITY).unwrap(), 3.0);
        assert!(u.lp_norm(0.5).is_err());
    }

    #[test]
    fn restriction_averages_fine_cells() {
        let coarse = GridDomain::build(Shape::cube(1, 1.0), 1, 10, 1, true).unwrap();
        let fine = GridDomain::build(Shape::cube(1, 1.0), 1, 20, 2, true).unwrap();
        let u = GridFunction::sample(&fine, |x| x[0]).unwrap();
        let c = u.restrict_to(&coarse).unwrap();
        for (k, &node) in coarse.interior_nodes().iter().enumerate() {
            let x = coarse.interior_position(k)[0];
            assert!((c.value(node) - x).abs() < 1e-12);
        }
    }
}
