//! Dense discrete fractional Poisson problem `(-Δ)^s v = h` in `Ω`, `v = 0`
//! outside, and its solution operator `S`.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::grid::{GridDomain, GridFunction, Shape};
use crate::operators::FracLaplacian;
use crate::sobolev::{Gagliardo, Region};

/// Relative residual every solve must reach.
pub const SOLVE_RESIDUAL: f64 = 1e-10;

/// Dense matrix of the discrete `(-Δ)^s` over interior nodes.
#[derive(Debug, Clone)]
pub struct StiffnessOperator {
    lap: FracLaplacian,
    matrix: DMatrix<f64>,
}

impl StiffnessOperator {
    /// Builds the kernel table and assembles the matrix.
    pub fn assemble(domain: &Arc<GridDomain>, s: f64) -> Result<StiffnessOperator> {
        Self::from_laplacian(FracLaplacian::new(domain, s)?)
    }

    /// Assembles the rows of an existing operator and checks the M-matrix
    /// invariants.
    pub fn from_laplacian(lap: FracLaplacian) -> Result<StiffnessOperator> {
        let m = lap.domain().interior_count();
        let rows = lap.dense_matrix();
        let matrix = DMatrix::from_row_slice(m, m, &rows);
        check_m_matrix(&matrix)?;
        Ok(StiffnessOperator { lap, matrix })
    }

    pub fn laplacian(&self) -> &FracLaplacian {
        &self.lap
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        self.lap.domain()
    }

    pub fn s(&self) -> f64 {
        self.lap.exponent()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `A·u` on interior values.
    pub fn apply_interior(&self, u: &[f64]) -> Vec<f64> {
        let v = &self.matrix * DVector::from_column_slice(u);
        v.as_slice().to_vec()
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        let d = self.domain();
        d.check_same(u.domain())?;
        GridFunction::from_interior(d, &self.apply_interior(&u.interior_values()))
    }

    /// `⟨A v, v⟩ h^N`.
    pub fn energy(&self, v: &GridFunction) -> Result<f64> {
        let av = self.apply(v)?;
        av.dot(v)
    }
}

fn check_m_matrix(a: &DMatrix<f64>) -> Result<()> {
    let m = a.nrows();
    for i in 0..m {
        let diag = a[(i, i)];
        if !(diag > 0.0) {
            return Err(Error::Internal(format!("stiffness diagonal {i} is {diag}")));
        }
        let mut off = 0.0;
        for j in 0..m {
            if j == i {
                continue;
            }
            let v = a[(i, j)];
            if v > 0.0 {
                return Err(Error::Internal(format!("positive off-diagonal entry ({i},{j}) = {v}")));
            }
            if v != a[(j, i)] {
                return Err(Error::Internal(format!("stiffness matrix not symmetric at ({i},{j})")));
            }
            off -= v;
        }
        if !(diag > off) {
            return Err(Error::Internal(format!(
                "row {i} not strictly diagonally dominant: {diag} vs {off}"
            )));
        }
    }
    Ok(())
}

/// Cholesky factorization of a [`StiffnessOperator`], reused across
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct FactorizedSolver {
    op: StiffnessOperator,
    chol: Cholesky<f64, Dyn>,
}

impl FactorizedSolver {
    pub fn new(op: StiffnessOperator) -> Result<FactorizedSolver> {
        let chol = Cholesky::new(op.matrix.clone())
            .ok_or_else(|| Error::numerical("stiffness matrix is not positive definite"))?;
        Ok(FactorizedSolver { op, chol })
    }

    /// Assembles and factorizes in one step.
    pub fn assemble(domain: &Arc<GridDomain>, s: f64) -> Result<FactorizedSolver> {
        Self::new(StiffnessOperator::assemble(domain, s)?)
    }

    pub fn operator(&self) -> &StiffnessOperator {
        &self.op
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        self.op.domain()
    }

    /// Solves on interior values and checks the relative residual.
    pub fn solve_interior(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let b = DVector::from_column_slice(rhs);
        let norm_b = b.norm();
        if !norm_b.is_finite() {
            return Err(Error::numerical("right-hand side has non-finite values"));
        }
        if norm_b == 0.0 {
            return Ok(vec![0.0; rhs.len()]);
        }
        let x = self.chol.solve(&b);
        let res = (&self.op.matrix * &x - &b).norm() / norm_b;
        if !(res <= SOLVE_RESIDUAL) {
            return Err(Error::numerical(format!(
                "solve residual {res:e} exceeds {SOLVE_RESIDUAL:e}"
            )));
        }
        Ok(x.as_slice().to_vec())
    }

    pub fn solve(&self, rhs: &GridFunction) -> Result<GridFunction> {
        let d = self.domain();
        d.check_same(rhs.domain())?;
        let x = self.solve_interior(&rhs.interior_values())?;
        GridFunction::from_interior(d, &x)
    }

    /// Smallest eigenvalue of `A` by inverse iteration.
    pub fn smallest_eigenvalue(&self, tol: f64, max_iter: usize) -> Result<f64> {
        let m = self.op.matrix.nrows();
        let mut x = DVector::from_element(m, 1.0 / (m as f64).sqrt());
        let mut last = f64::INFINITY;
        for _ in 0..max_iter {
            let y = self.chol.solve(&x);
            let ny = y.norm();
            x = y / ny;
            let lambda = x.dot(&(&self.op.matrix * &x));
            if (lambda - last).abs() <= tol * lambda.abs() {
                return Ok(lambda);
            }
            last = lambda;
        }
        Err(Error::numerical(format!(
            "inverse iteration did not settle in {max_iter} steps"
        )))
    }
}

/// `v = S(h)`.
pub fn solve_poisson(solver: &FactorizedSolver, h: &GridFunction) -> Result<GridFunction> {
    solver.solve(h)
}

/// One row of a refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementLevel {
    pub level: usize,
    pub h: f64,
    pub interior_nodes: usize,
    /// `L²` distance to the cell-averaged finest solution.
    pub l2_error: f64,
    /// `error(level-1)/error(level)`; absent on the first and finest levels.
    pub ratio: Option<f64>,
}

/// Solves on nested offset grids over `[-half_width, half_width]^N` with the
/// given cells per axis and compares each level with the finest one.
pub fn refinement_study<F>(
    shape: &Shape,
    s: f64,
    half_width: f64,
    cells: &[usize],
    rhs: F,
) -> Result<Vec<RefinementLevel>>
where
    F: Fn(&[f64]) -> f64,
{
    if cells.len() < 2 {
        return Err(Error::param("a refinement study needs at least two levels"));
    }
    for w in cells.windows(2) {
        if w[1] <= w[0] || w[1] % w[0] != 0 {
            return Err(Error::param(format!(
                "levels must be strictly nested, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let dim = shape.dim();
    let lo = vec![-half_width; dim];
    let hi = vec![half_width; dim];
    let mut solutions = Vec::with_capacity(cells.len());
    for &n in cells {
        let d = GridDomain::with_bounds(shape.clone(), &lo, &hi, n, true)?;
        let solver = FactorizedSolver::assemble(&d, s)?;
        let f = GridFunction::sample(&d, &rhs)?;
        solutions.push(solver.solve(&f)?);
    }
    let finest = solutions.last().expect("at least two levels");
    let mut rows = Vec::with_capacity(cells.len());
    for (level, u) in solutions.iter().enumerate() {
        let d = u.domain();
        let reference = finest.restrict_to(d)?;
        let l2_error = u.sub(&reference)?.lp_norm(2.0)?;
        rows.push(RefinementLevel {
            level,
            h: d.h(),
            interior_nodes: d.interior_count(),
            l2_error,
            ratio: None,
        });
    }
    for k in 1..rows.len() - 1 {
        rows[k].ratio = Some(rows[k - 1].l2_error / rows[k].l2_error);
    }
    Ok(rows)
}

/// Outcome of [`solution_operator_continuity`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub p: f64,
    /// `‖h_n - h‖_{L¹}` per entry.
    pub data_l1: Vec<f64>,
    /// `[S h_n - S h]^p_{s,p,D_Ω}` per entry.
    pub seminorm: Vec<f64>,
}

impl ContinuityReport {
    pub fn is_decreasing(&self) -> bool {
        self.seminorm.windows(2).all(|w| w[1] < w[0])
    }
}

/// Tracks `S h_n → S h` in `W_0^{s,p}` for `1 ≤ p < N/(N-s)`.
pub fn solution_operator_continuity(
    solver: &FactorizedSolver,
    limit: &GridFunction,
    sequence: &[GridFunction],
    p: f64,
) -> Result<ContinuityReport> {
    let d = solver.domain();
    let n = d.dim() as f64;
    let s = solver.operator().s();
    let bound = n / (n - s);
    if !(p >= 1.0 && p < bound) {
        return Err(Error::param(format!(
            "1 ≤ p < N/(N-s) = {bound} required, got {p}"
        )));
    }
    let g = Gagliardo::with_order(d, s * p, p)?;
    let v = solver.solve(limit)?;
    let mut data_l1 = Vec::with_capacity(sequence.len());
    let mut seminorm = Vec::with_capacity(sequence.len());
    for h in sequence {
        data_l1.push(h.sub(limit)?.lp_norm(1.0)?);
        let vn = solver.solve(h)?;
        seminorm.push(g.evaluate(&vn.sub(&v)?, Region::DOmega)?);
    }
    Ok(ContinuityReport {
        p,
        data_l1,
        seminorm,
    })
}

/// `Γ(N/2) / (4^s Γ(1+s) Γ(N/2+s)) (1-|x|²)^s`, the solution with `h ≡ 1`
/// on the unit ball.
pub fn unit_ball_torsion(dim: usize, s: f64, x: &[f64]) -> f64 {
    use statrs::function::gamma::gamma;
    let n = dim as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 >= 1.0 {
        return 0.0;
    }
    gamma(0.5 * n) / (4f64.powf(s) * gamma(1.0 + s) * gamma(0.5 * n + s)) * (1.0 - r2).powf(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sobolev::gagliardo_double_sum;

    fn ball_1d(n: usize) -> Arc<GridDomain> {
        GridDomain::with_bounds(Shape::ball(1, 1.0), &[-2.0], &[2.0], n, true).unwrap()
    }

    #[test]
    fn matrix_matches_operator() {
        let d = ball_1d(64);
        let op = StiffnessOperator::assemble(&d, 0.7).unwrap();
        let u = GridFunction::sample(&d, |x| (1.0 - x[0] * x[0]) * (2.0 + x[0])).unwrap();
        let a = op.apply(&u).unwrap();
        let b = op.laplacian().apply(&u).unwrap();
        let scale = b.max_abs();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-13 * scale);
        }
        let m = op.matrix();
        assert_eq!((m - m.transpose()).amax(), 0.0);
    }

    #[test]
    fn smallest_eigenvalue_is_positive() {
        let d = ball_1d(80);
        let solver = FactorizedSolver::assemble(&d, 0.6).unwrap();
        let lam = solver.smallest_eigenvalue(1e-12, 500).unwrap();
        assert!(lam > 0.0);
        let m = solver.operator().matrix();
        let min_row = (0..m.nrows())
            .map(|i| m.row(i).sum())
            .fold(f64::INFINITY, f64::min);
        // dominance bound
        assert!(lam >= min_row * (1.0 - 1e-9));
    }

    #[test]
    fn zero_and_positive_data() {
        let d = ball_1d(48);
        let solver = FactorizedSolver::assemble(&d, 0.4).unwrap();
        let v = solve_poisson(&solver, &GridFunction::zeros(&d)).unwrap();
        assert_eq!(v.max_abs(), 0.0);
        let h = GridFunction::sample(&d, |x| if x[0] > 0.3 { 1.0 } else { 0.0 }).unwrap();
        let v = solve_poisson(&solver, &h).unwrap();
        assert!(v.values().iter().all(|&x| x >= 0.0));
        assert!(v.max_abs() > 0.0);
    }

    #[test]
    fn energy_equals_half_normalized_seminorm() {
        for (dim, n) in [(1, 60), (2, 20)] {
            let shape = Shape::ball(dim, 1.0);
            let d = GridDomain::build(shape, dim, n, 1, true).unwrap();
            let s = 0.65;
            let op = StiffnessOperator::assemble(&d, s).unwrap();
            let v = GridFunction::sample(&d, |x| {
                let r2: f64 = x.iter().map(|t| t * t).sum();
                (1.0 - r2) * (1.0 + 0.5 * x[0])
            })
            .unwrap();
            let lhs = op.energy(&v).unwrap();
            let rhs = 0.5 * op.laplacian().normalization()
                * gagliardo_double_sum(&v, 2.0, s, Region::DOmega).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs, "{dim}: {lhs} {rhs}");
        }
    }

    #[test]
    fn torsion_profile_is_reached() {
        let s = 0.5;
        let d = ball_1d(400);
        let solver = FactorizedSolver::assemble(&d, s).unwrap();
        let v = solver.solve(&GridFunction::constant(&d, 1.0)).unwrap();
        let exact = GridFunction::sample(&d, |x| unit_ball_torsion(1, s, x)).unwrap();
        let rel = v.sub(&exact).unwrap().lp_norm(2.0).unwrap() / exact.lp_norm(2.0).unwrap();
        assert!(rel < 0.02, "relative L2 error {rel}");
    }

    #[test]
    fn refinement_ratios() {
        let rows = refinement_study(&Shape::ball(1, 1.0), 0.5, 2.0, &[32, 64, 128, 256, 512], |_| 1.0).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[4].l2_error, 0.0);
        for r in &rows[1..4] {
            assert!(r.ratio.unwrap() >= 1.5, "{rows:?}");
        }
        assert!(refinement_study(&Shape::ball(1, 1.0), 0.5, 2.0, &[32, 48], |_| 1.0).is_err());
    }

    #[test]
    fn continuity_sequence() {
        let d = ball_1d(64);
        let solver = FactorizedSolver::assemble(&d, 0.6).unwrap();
        let h = GridFunction::constant(&d, 1.0);
        let bump = GridFunction::sample(&d, |x| (1.0 - x[0] * x[0]).max(0.0).powi(2)).unwrap();
        let seq: Vec<_> = (1..6).map(|n| h.add(&bump.scale(1.0 / n as f64)).unwrap()).collect();
        let rep = solution_operator_continuity(&solver, &h, &seq, 1.5).unwrap();
        assert!(rep.is_decreasing());
        let same = vec![h.clone(); 3];
        let rep = solution_operator_continuity(&solver, &h, &same, 1.2).unwrap();
        assert!(rep.seminorm.iter().all(|&v| v == 0.0));
        assert!(solution_operator_continuity(&solver, &h, &same, 2.6).is_err());
    }
}
