//! Integral kernels of the shifted Hermite operator `L + α`.
//!
//! The heat kernel is Mehler's formula. Poisson-type kernels come from the
//! subordination integral
//!
//! ```text
//! P_t(x,y) = t/√(4π) ∫_0^∞ s^{-3/2} e^{-t²/4s} e^{-αs} W_s(x,y) ds.
//! ```
//!
//! The singular Gaussian `e^{-|x−y|²/4s}` of the Mehler kernel is merged
//! with `e^{-t²/4s}` into `e^{-a/s}`, `a = (t² + |x−y|²)/4`. What remains
//! behaves like `s^{-3/2} e^{-a/s − (n+α)s}` times a factor that is smooth in
//! `log s`, so the integral is computed with the trapezoid rule in `τ = ln s`
//! on a window chosen from `a` and `n + α`. That rule converges
//! geometrically in the node count for every `t` and `|x − y|`.

use crate::basis::Sign;
use crate::error::{check_coordinate, check_time, Error, Result};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Default number of subordination nodes.
pub const DEFAULT_NODES: usize = 64;

/// Logarithmic decay below which the integrand is dropped.
const WINDOW_DECAY: f64 = 46.0;

/// The operator `L + α` on ℝⁿ with `α > −n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedOperator {
    alpha: f64,
    n: usize,
}

impl ShiftedOperator {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(alpha > -(n as f64)) || !alpha.is_finite() {
            return Err(Error::InvalidShift { alpha, n });
        }
        Ok(ShiftedOperator { alpha, n })
    }

    /// The unshifted Hermite operator `L`.
    pub fn hermite(n: usize) -> Self {
        ShiftedOperator::new(0.0, n).expect("zero shift is admissible")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_points(&self, x: &[f64], y: &[f64]) -> Result<()> {
        for p in [x, y] {
            if p.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    found: p.len(),
                });
            }
        }
        Ok(())
    }
}

/// Quadrature for `∫_0^∞ s^{-3/2} e^{-a/s − μs} g(s) ds` with `q` nodes.
///
/// The nodes are equispaced in `ln s` between `a/(L+z)` and `(L+z)/μ`,
/// `z = 2√(aμ)`, `L = 46`; outside that window `e^{-a/s − μs}` is below
/// `e^{-L}` times its peak `e^{-z}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubordinationRule {
    q: usize,
}

impl Default for SubordinationRule {
    fn default() -> Self {
        SubordinationRule { q: DEFAULT_NODES }
    }
}

impl SubordinationRule {
    pub fn new(q: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::EmptyQuadrature);
        }
        Ok(SubordinationRule { q })
    }

    pub fn len(&self) -> usize {
        self.q
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Nodes `s_i` and weights `w_i` with
    /// `∫ s^{-3/2} g(s) ds ≈ Σ w_i g(s_i)` for `g` carrying `e^{-a/s − μs}`.
    pub fn nodes(&self, a: f64, mu: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = window(a, mu);
        self.trapezoid(lo, hi)
    }

    /// Like [`SubordinationRule::nodes`], but shrinks the window to where
    /// `log_g(s)` is within `L` of its maximum, located by a coarse scan.
    /// Used when `g` decays faster than `e^{-a/s − μs}`.
    pub fn nodes_adapted(&self, a: f64, mu: f64, log_g: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        const SCAN: usize = 48;
        let (mut lo, mut hi) = window(a, mu);
        let phi = |tau: f64| log_g(tau.exp()) - 0.5 * tau;
        // Widen until both ends are negligible against the scanned peak.
        for _ in 0..8 {
            let step = (hi - lo) / (SCAN - 1) as f64;
            let values: Vec<f64> = (0..SCAN).map(|i| phi(lo + i as f64 * step)).collect();
            let peak = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let keep = |v: &f64| *v > peak - WINDOW_DECAY;
            let first = values.iter().position(keep).unwrap_or(0);
            let last = values.iter().rposition(keep).unwrap_or(SCAN - 1);
            let width = hi - lo;
            if first == 0 || last == SCAN - 1 {
                if first == 0 {
                    lo -= 0.5 * width;
                }
                if last == SCAN - 1 {
                    hi += 0.5 * width;
                }
                continue;
            }
            return self.trapezoid(lo + (first - 1) as f64 * step, lo + (last + 1) as f64 * step);
        }
        self.trapezoid(lo, hi)
    }

    fn trapezoid(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let h = (hi - lo) / (self.q - 1) as f64;
        (0..self.q)
            .map(|i| {
                let s = (lo + i as f64 * h).exp();
                let end = if i == 0 || i + 1 == self.q { 0.5 } else { 1.0 };
                // ds = s dτ
                (s, end * h / s.sqrt())
            })
            .collect()
    }

    /// `t/√(4π) ∫ s^{-3/2} e^{-t²/4s} e^{-αs} W_s(x,y) m(s) ds`
    fn subordinate(
        &self,
        x: &[f64],
        y: &[f64],
        t: f64,
        alpha: f64,
        mut factor: impl FnMut(f64) -> f64,
    ) -> f64 {
        let n = x.len() as f64;
        let (dist2, sum2) = distances(x, y);
        let a = 0.25 * (t * t + dist2);
        let log_g = |s: f64| {
            -a / s + 0.5 * n * log_mehler_prefactor(s)
                - alpha * s
                - 0.25 * coth_minus_inverse(s) * dist2
                - 0.25 * s.tanh() * sum2
        };
        let mut acc = 0.0;
        for (s, w) in self.nodes_adapted(a, n + alpha, log_g) {
            acc += w * log_g(s).exp() * factor(s);
        }
        t / (4.0 * PI).sqrt() * acc
    }

    /// Subordinated Poisson kernel `P_t^{L+α}(x,y)`.
    pub fn poisson_kernel(&self, x: &[f64], y: &[f64], t: f64, op: &ShiftedOperator) -> Result<f64> {
        check_time(t)?;
        op.check_points(x, y)?;
        Ok(self.subordinate(x, y, t, op.alpha, |_| 1.0))
    }

    /// `t ∂_t P_t^{L+α}(x,y)`.
    pub fn g_kernel(&self, x: &[f64], y: &[f64], t: f64, op: &ShiftedOperator) -> Result<f64> {
        check_time(t)?;
        op.check_points(x, y)?;
        Ok(self.subordinate(x, y, t, op.alpha, |s| 1.0 - t * t / (2.0 * s)))
    }

    /// `t (∂_{x_j} ± x_j) P_t^L(x,y)` with zero-based `j`.
    pub fn ladder_kernel(&self, x: &[f64], y: &[f64], t: f64, j: usize, sign: Sign) -> Result<f64> {
        check_time(t)?;
        let op = ShiftedOperator::hermite(x.len().max(1));
        op.check_points(x, y)?;
        check_coordinate(j, x.len())?;
        let (xj, yj) = (x[j], y[j]);
        let sgn = sign.as_f64();
        let value = self.subordinate(x, y, t, 0.0, |s| {
            let coth = coth_minus_inverse(s) + 1.0 / s;
            sgn * xj - 0.5 * coth * (xj - yj) - 0.5 * s.tanh() * (xj + yj)
        });
        Ok(t * value)
    }
}

/// `(ln s_lo, ln s_hi)` for `∫ s^{-3/2} e^{-a/s − μs} ds`.
fn window(a: f64, mu: f64) -> (f64, f64) {
    let z = 2.0 * (a * mu).sqrt();
    ((a / (WINDOW_DECAY + z)).ln(), ((WINDOW_DECAY + z) / mu).ln())
}

fn distances(x: &[f64], y: &[f64]) -> (f64, f64) {
    x.iter().zip(y).fold((0.0, 0.0), |(d, s), (a, b)| {
        (d + (a - b) * (a - b), s + (a + b) * (a + b))
    })
}

/// `log(e^{-2s} / (π(1 − e^{-4s})))`, cancellation-free for small `s`.
pub(crate) fn log_mehler_prefactor(s: f64) -> f64 {
    -2.0 * s - PI.ln() - (-(-4.0 * s).exp_m1()).ln()
}

/// `coth s − 1/s`
pub(crate) fn coth_minus_inverse(s: f64) -> f64 {
    if s < 0.05 {
        let s2 = s * s;
        s * (1.0 / 3.0 + s2 * (-1.0 / 45.0 + s2 * (2.0 / 945.0 - s2 / 4725.0)))
    } else {
        1.0 / s.tanh() - 1.0 / s
    }
}

/// Mehler heat kernel `W_t(x,y)` of `L`.
pub fn heat_kernel(x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let n = x.len() as f64;
    let (dist2, sum2) = distances(x, y);
    let log_w = 0.5 * n * log_mehler_prefactor(t) - 0.25 * (dist2 / t.tanh() + sum2 * t.tanh());
    Ok(log_w.exp())
}

/// `W_t(1)(x) = sech(2t)^{n/2} exp(−tanh(2t)|x|²/2)`.
pub fn heat_kernel_one(x: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(heat_one_unchecked(x, t, 0.0))
}

/// `e^{-αs} W_s(1)(x)`
fn heat_one_unchecked(x: &[f64], s: f64, alpha: f64) -> f64 {
    let n = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let e4 = (-4.0 * s).exp();
    // sech(2s) = 2e^{-2s}/(1 + e^{-4s})
    let log_sech = std::f64::consts::LN_2 - 2.0 * s - e4.ln_1p();
    (0.5 * n * log_sech - 0.5 * (2.0 * s).tanh() * r2 - alpha * s).exp()
}

/// Classical Poisson kernel `P_t(x) = Γ((n+1)/2) π^{-(n+1)/2} t (t² + |x|²)^{-(n+1)/2}`.
pub fn classical_poisson(x: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    let n = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let half = 0.5 * (n + 1.0);
    Ok((ln_gamma(half) - half * PI.ln() - half * (t * t + r2).ln()).exp() * t)
}

/// `P_t^{L+α}(x,y)` with the default rule.
pub fn poisson_kernel(x: &[f64], y: &[f64], t: f64, op: &ShiftedOperator) -> Result<f64> {
    SubordinationRule::default().poisson_kernel(x, y, t, op)
}

/// `t ∂_t P_t^{L+α}(x,y)` with the default rule.
pub fn g_kernel(x: &[f64], y: &[f64], t: f64, op: &ShiftedOperator) -> Result<f64> {
    SubordinationRule::default().g_kernel(x, y, t, op)
}

/// `t (∂_{x_j} ± x_j) P_t^L(x,y)` with the default rule.
pub fn ladder_kernel(x: &[f64], y: &[f64], t: f64, j: usize, sign: Sign) -> Result<f64> {
    SubordinationRule::default().ladder_kernel(x, y, t, j, sign)
}

/// Trapezoid rule in `τ = ln s` over the range where
/// `s^{-1/2} e^{-t²/4s} e^{-(n+α)s}` is not negligible.
fn log_time_nodes(t: f64, decay: f64) -> impl Iterator<Item = (f64, f64)> {
    let lo = (t * t / 400.0).ln();
    let hi = (80.0 / decay).ln();
    let steps = (((hi - lo) / 0.05).ceil() as usize).max(8);
    let dtau = (hi - lo) / steps as f64;
    (0..=steps).map(move |i| {
        let w = if i == 0 || i == steps { 0.5 * dtau } else { dtau };
        ((lo + i as f64 * dtau).exp(), w)
    })
}

/// `P_t^{L+α}(1)(x)`.
pub fn poisson_of_one(x: &[f64], t: f64, op: &ShiftedOperator) -> Result<f64> {
    check_time(t)?;
    if x.len() != op.n {
        return Err(Error::DimensionMismatch {
            expected: op.n,
            found: x.len(),
        });
    }
    let decay = op.n as f64 + op.alpha;
    // ds = s dτ, so s^{-3/2} ds = s^{-1/2} dτ.
    let sum: f64 = log_time_nodes(t, decay)
        .map(|(s, w)| w * s.powf(-0.5) * (-t * t / (4.0 * s)).exp() * heat_one_unchecked(x, s, op.alpha))
        .sum();
    Ok(t / (4.0 * PI).sqrt() * sum)
}

/// `G_{L+α}(1)(x,t) = t ∂_t P_t^{L+α}(1)(x)`.
///
/// After integrating by parts in `s` this is
/// `t/√π ∫ s^{-1/2} e^{-t²/4s} ∂_s(e^{-αs} W_s(1)(x)) ds`, which has no
/// cancellation between the two terms of `1 − t²/2s`.
pub fn g_of_one(x: &[f64], t: f64, op: &ShiftedOperator) -> Result<f64> {
    check_time(t)?;
    if x.len() != op.n {
        return Err(Error::DimensionMismatch {
            expected: op.n,
            found: x.len(),
        });
    }
    let n = op.n as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let decay = n + op.alpha;
    let sum: f64 = log_time_nodes(t, decay)
        .map(|(s, w)| {
            let sech = 1.0 / (2.0 * s).cosh();
            let rate = op.alpha + n * (2.0 * s).tanh() + r2 * sech * sech;
            -w * s.sqrt() * (-t * t / (4.0 * s)).exp() * rate * heat_one_unchecked(x, s, op.alpha)
        })
        .sum();
    Ok(t / PI.sqrt() * sum)
}
