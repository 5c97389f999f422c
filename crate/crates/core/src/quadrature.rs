//! One-dimensional quadrature rules used by the kernel tables and the
//! Hardy constant.
//!
//! Two rules are provided. [`GaussLegendre`] is a fixed-order rule for smooth
//! integrands. [`TanhSinh`] is a doubly exponential rule that tolerates
//! algebraic endpoint singularities; its integrand receives the distance to
//! each endpoint so that factors like `(1 - x)^a` can be evaluated without
//! cancellation.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }

    /// Composite rule with `panels` equal panels.
    pub fn integrate_composite(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let step = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * step;
                self.integrate(lo, lo + step, &mut f)
            })
            .sum()
    }
}

/// Evaluates `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Tanh–sinh (double exponential) quadrature on a finite interval.
#[derive(Debug, Clone, Copy)]
pub struct TanhSinh {
    pub max_level: usize,
    pub min_level: usize,
}

impl Default for TanhSinh {
    fn default() -> Self {
        TanhSinh {
            max_level: 12,
            min_level: 3,
        }
    }
}

impl TanhSinh {
    /// Integrates `f(x, x - a, b - x)` over `(a, b)` to relative tolerance
    /// `tol`.
    pub fn integrate<F>(&self, a: f64, b: f64, tol: f64, f: F) -> Result<Estimate>
    where
        F: FnMut(f64, f64, f64) -> f64,
    {
        let (est, converged) = self.run(a, b, tol, f);
        if !est.value.is_finite() {
            return Err(Error::numerical("tanh-sinh quadrature produced a non-finite value"));
        }
        if converged {
            Ok(est)
        } else {
            Err(Error::numerical(format!(
                "tanh-sinh quadrature did not reach tolerance {tol:e}; estimate {:e}, achieved error {:e}",
                est.value, est.error
            )))
        }
    }

    /// Like [`TanhSinh::integrate`] but returns the last estimate even when
    /// the tolerance is not met.
    pub fn integrate_lenient<F>(&self, a: f64, b: f64, tol: f64, f: F) -> Estimate
    where
        F: FnMut(f64, f64, f64) -> f64,
    {
        self.run(a, b, tol, f).0
    }

    fn run<F>(&self, a: f64, b: f64, tol: f64, mut f: F) -> (Estimate, bool)
    where
        F: FnMut(f64, f64, f64) -> f64,
    {
        if b <= a {
            return (Estimate { value: 0.0, error: 0.0 }, true);
        }
        let half = 0.5 * (b - a);
        let t_max = 6.5;
        let mut eval = |t: f64| -> f64 {
            let u = FRAC_PI_2 * t.sinh();
            let cu = u.cosh();
            let w = half * FRAC_PI_2 * t.cosh() / (cu * cu);
            if w == 0.0 || !w.is_finite() {
                return 0.0;
            }
            // endpoint distances without cancellation
            let da = half * 2.0 / (1.0 + (-2.0 * u).exp());
            let db = half * 2.0 / (1.0 + (2.0 * u).exp());
            if da <= 0.0 || db <= 0.0 {
                return 0.0;
            }
            let x = if da < db { a + da } else { b - db };
            w * f(x, da, db)
        };
        let mut h = 1.0;
        let mut sum = eval(0.0);
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 1;
        }
        let mut prev = sum * h;
        let mut err = f64::INFINITY;
        for level in 1..=self.max_level {
            h *= 0.5;
            let mut k = 1;
            while k as f64 * h <= t_max {
                let t = k as f64 * h;
                sum += eval(t) + eval(-t);
                k += 2;
            }
            let cur = sum * h;
            err = (cur - prev).abs();
            if !cur.is_finite() {
                return (Estimate { value: cur, error: f64::INFINITY }, false);
            }
            prev = cur;
            if level >= self.min_level && err <= tol * cur.abs().max(f64::MIN_POSITIVE) {
                return (Estimate { value: cur, error: err }, true);
            }
        }
        (Estimate { value: prev, error: err }, false)
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
