//! Reference values computed without the code paths they check.
//!
//! The normalization oracle integrates the defining integral of `a_{N,s}`
//! directly; the Hardy oracle is an importance-sampled Monte Carlo estimate of
//! the double integral; the Herbst value combines the closed-form `p = 2`
//! Hardy constant with the quadrature normalization.

use std::f64::consts::PI;

use fraclab_core::quadrature::{GaussLegendre, TanhSinh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// `|S^{d}|` for the spheres the oracles need.
fn sphere(d: usize) -> f64 {
    match d {
        0 => 2.0,
        1 => 2.0 * PI,
        2 => 4.0 * PI,
        _ => panic!("sphere S^{d} not tabulated"),
    }
}

/// Wynn's epsilon algorithm on a sequence of partial sums.
pub fn wynn_epsilon(partial: &[f64]) -> f64 {
    let n = partial.len();
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial.to_vec();
    let mut best = *partial.last().expect("non-empty sequence");
    let mut col = 0;
    while cur.len() > 1 {
        let next: Vec<f64> = (0..cur.len() - 1)
            .map(|i| {
                let d = cur[i + 1] - cur[i];
                prev[i + 1] + if d == 0.0 { f64::INFINITY } else { 1.0 / d }
            })
            .collect();
        col += 1;
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        if col % 2 == 0 {
            best = *next.last().unwrap();
        }
        prev = cur;
        cur = next;
    }
    best
}

/// `∫_0^∞ (1 - cos z) z^{-1-2s} dz`.
pub fn one_minus_cos_moment(s: f64) -> f64 {
    // (0, 1): termwise integration of the cosine series
    let mut head = 0.0;
    let mut fact = 1.0;
    for k in 1..40 {
        let kk = 2 * k;
        fact *= ((kk - 1) * kk) as f64;
        let term = 1.0 / (fact * (kk as f64 - 2.0 * s));
        head += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    // (1, ∞): z^{-1-2s} exactly, minus the oscillatory part split at the
    // zeros of cos and accelerated
    let gl = GaussLegendre::new(32);
    let f = |z: f64| z.cos() * z.powf(-1.0 - 2.0 * s);
    let mut sum = gl.integrate(1.0, 0.5 * PI, f);
    let mut partial = Vec::new();
    for k in 1..=48 {
        let a = (k as f64 - 0.5) * PI;
        sum += gl.integrate(a, a + PI, f);
        partial.push(sum);
    }
    let osc = wynn_epsilon(&partial);
    head + 1.0 / (2.0 * s) - osc
}

/// `a_{N,s} = (∫_{ℝ^N} (1 - cos ζ₁) |ζ|^{-N-2s} dζ)^{-1}` by quadrature.
pub fn normalization_by_quadrature(dim: usize, s: f64) -> f64 {
    let radial = one_minus_cos_moment(s);
    let angular = if dim == 1 {
        2.0
    } else {
        let ts = TanhSinh::default();
        let k = ts
            .integrate(0.0, 0.5 * PI, 1e-14, |t, _, db| {
                t.sin().powi(dim as i32 - 2) * db.sin().powf(2.0 * s)
            })
            .expect("angular quadrature converges")
            .value;
        2.0 * sphere(dim - 2) * k
    };
    1.0 / (radial * angular)
}

/// Closed-form `p = 2` Hardy constant,
/// `2 · 4^s Γ((N+2s)/4)² / Γ((N-2s)/4)² / a_{N,s}`, with the quadrature
/// normalization.
pub fn herbst_constant(dim: usize, s: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let n = dim as f64;
    let ratio = gamma(0.25 * (n + 2.0 * s)) / gamma(0.25 * (n - 2.0 * s));
    2.0 * 4f64.powf(s) * ratio * ratio / normalization_by_quadrature(dim, s)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// `Λ_{N,s,p} = 2 ∫_0^1 σ^{ps-1} |1 - σ^{(N-ps)/p}|^p Φ(σ) dσ` with
/// `Φ(σ) = |S^{N-2}| ∫_0^π sin^{N-2}θ (1 - 2σ cos θ + σ²)^{-(N+ps)/2} dθ`,
/// sampled with proposals matching both endpoint singularities in `σ` and
/// the `θ ~ 1 - σ` peak.
pub fn hardy_monte_carlo(dim: usize, s: f64, p: f64, samples: usize, seed: u64) -> McEstimate {
    assert!(dim >= 2);
    let n = dim as f64;
    let ps = p * s;
    let alpha = (n - ps) / p;
    let a = p * (1.0 - s);
    let b = ps.min(1.0);
    let area = sphere(dim - 2);
    let inner_mass = 1.0 / (n - 1.0);
    let outer_mass = 1.0 / (1.0 + ps);
    let z = inner_mass + outer_mass;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..samples {
        let (sigma, u) = if rng.random::<bool>() {
            let u = (1.0 - rng.random::<f64>()).powf(1.0 / a);
            (1.0 - u, u)
        } else {
            let sg = (1.0 - rng.random::<f64>()).powf(1.0 / b);
            (sg, 1.0 - sg)
        };
        let q_sigma = 0.5 * a * u.powf(a - 1.0) + 0.5 * b * sigma.powf(b - 1.0);
        let (phi, g_phi) = if rng.random::<f64>() * z < inner_mass {
            let f = (1.0 - rng.random::<f64>()).powf(1.0 / (n - 1.0));
            (f, f.powf(n - 2.0) / z)
        } else {
            let f = (1.0 - rng.random::<f64>()).powf(-1.0 / (1.0 + ps));
            (f, f.powf(-2.0 - ps) / z)
        };
        let theta = u * phi;
        let w = if theta >= PI || sigma <= 0.0 || u <= 0.0 {
            0.0
        } else {
            let half = (0.5 * theta).sin();
            let dist2 = u * u + 4.0 * sigma * half * half;
            let gap = -(alpha * sigma.ln()).exp_m1();
            let f = 2.0
                * sigma.powf(ps - 1.0)
                * gap.abs().powf(p)
                * area
                * theta.sin().powi(dim as i32 - 2)
                * dist2.powf(-0.5 * (n + ps));
            f / (q_sigma * g_phi / u)
        };
        let d = w - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (w - mean);
    }
    let var = m2 / (samples - 1) as f64;
    McEstimate {
        mean,
        std_error: (var / samples as f64).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wynn_sums_the_alternating_harmonic_series() {
        let mut s = 0.0;
        let partial: Vec<f64> = (1..=20)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        assert!((wynn_epsilon(&partial) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn half_order_moment_is_half_pi() {
        assert!((one_minus_cos_moment(0.5) - 0.5 * PI).abs() < 1e-12);
    }
}
