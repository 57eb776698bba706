//! Hermite functions on ℝⁿ.
//!
//! The one-dimensional functions are generated by the orthonormal three-term
//! recurrence
//!
//! ```text
//! h_0(x)     = π^{-1/4} e^{-x²/2}
//! h_1(x)     = √2 x h_0(x)
//! h_{m+1}(x) = x √(2/(m+1)) h_m(x) − √(m/(m+1)) h_{m-1}(x)
//! ```
//!
//! run on the scaled values `e^{x²/2} h_m(x)`. The Gaussian factor is
//! reattached once at the end, together with a running power-of-two scale, so
//! neither overflow of the polynomial part nor underflow of the Gaussian part
//! can destroy the result. Multidimensional functions are tensor products.

mod expansion;
mod grid;
mod quadrature;

pub use expansion::{analyze, synthesize, synthesize_on_grid, HermiteExpansion};
pub use grid::SpatialGrid;
pub use quadrature::{gauss_nodes, GaussFamily, GaussRule};

pub(crate) use expansion::{check_resolution, contract_leading, AxisTable};

use crate::error::{check_coordinate, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// π^{-1/4}
pub const PI_POW_MINUS_QUARTER: f64 = 0.751_125_544_464_942_5;

const RESCALE_ABOVE: f64 = 1e250;

/// Multi-index `k = (k_1, …, k_n) ∈ ℕⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        assert!(!components.is_empty(), "multi-index needs dimension >= 1");
        MultiIndex(components)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex::new(vec![0; n])
    }

    /// One-dimensional index `k`.
    pub fn scalar(k: u32) -> Self {
        MultiIndex(vec![k])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|k|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn component(&self, j: usize) -> u32 {
        self.0[j]
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    /// `k + e_j`
    pub fn raised(&self, j: usize) -> Self {
        let mut c = self.0.clone();
        c[j] += 1;
        MultiIndex(c)
    }

    /// `k − e_j`, or `None` when `k_j = 0`.
    pub fn lowered(&self, j: usize) -> Option<Self> {
        if self.0[j] == 0 {
            return None;
        }
        let mut c = self.0.clone();
        c[j] -= 1;
        Some(MultiIndex(c))
    }

    /// Eigenvalue of `L + α` on `h_k`: `2|k| + n + α`.
    pub fn eigenvalue(&self, alpha: f64) -> f64 {
        2.0 * self.order() as f64 + self.dim() as f64 + alpha
    }

    /// All indices in dimension `n` with `|k| ≤ max_degree`, ordered by total
    /// degree and then lexicographically.
    pub fn up_to_degree(n: usize, max_degree: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for total in 0..=max_degree as u32 {
            let mut current = vec![0u32; n];
            compositions(total, 0, &mut current, &mut out);
        }
        out
    }
}

fn compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        compositions(remaining - v, pos + 1, current, out);
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Sign selecting the annihilation (`∂ + x`) or creation (`∂ − x`) operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Additive perturbation of one recurrence coefficient. Only used to check
/// that the verification suites are sensitive to a broken recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RecurrenceDefect {
    pub step: usize,
    pub delta: f64,
}

/// Scaled values `e^{x²/2} h_m(x)`, `m = 0..=kmax`, sharing the factor
/// `2^{log2_scale}`: `h_m(x) = out[m] · 2^{log2_scale} · e^{-x²/2}`.
pub(crate) fn scaled_hermite_1d(
    kmax: usize,
    x: f64,
    defect: Option<RecurrenceDefect>,
) -> (Vec<f64>, f64) {
    let mut out = Vec::with_capacity(kmax + 1);
    let mut log2_scale = 0.0;
    out.push(PI_POW_MINUS_QUARTER);
    if kmax == 0 {
        return (out, log2_scale);
    }
    out.push(std::f64::consts::SQRT_2 * x * out[0]);
    for m in 1..kmax {
        let mf = m as f64;
        let mut a = (2.0 / (mf + 1.0)).sqrt();
        if let Some(d) = defect {
            if d.step == m {
                a += d.delta;
            }
        }
        let b = (mf / (mf + 1.0)).sqrt();
        let next = x * a * out[m] - b * out[m - 1];
        out.push(next);
        if next.abs() > RESCALE_ABOVE {
            let shift = next.abs().log2().floor();
            let factor = (-shift).exp2();
            for v in out.iter_mut() {
                *v *= factor;
            }
            log2_scale += shift;
        }
    }
    (out, log2_scale)
}

/// `h_m(x)` for `m = 0..=kmax`.
pub fn hermite_functions_1d(kmax: usize, x: f64) -> Vec<f64> {
    hermite_functions_1d_with(kmax, x, None)
}

pub(crate) fn hermite_functions_1d_with(
    kmax: usize,
    x: f64,
    defect: Option<RecurrenceDefect>,
) -> Vec<f64> {
    let (mut v, log2_scale) = scaled_hermite_1d(kmax, x, defect);
    let factor = (log2_scale * std::f64::consts::LN_2 - 0.5 * x * x).exp();
    for e in v.iter_mut() {
        *e *= factor;
    }
    v
}

/// Multidimensional Hermite function `h_k(x) = Π_i h_{k_i}(x_i)`.
///
/// The per-coordinate scaled values are multiplied first and the Gaussian
/// `e^{-|x|²/2}` is attached once, so small factors in one coordinate cannot
/// underflow the product prematurely.
pub fn hermite_eval(k: &MultiIndex, x: &[f64]) -> f64 {
    assert_eq!(k.dim(), x.len(), "index and point dimensions differ");
    let mut prod = 1.0;
    let mut log_factor = 0.0;
    for (&kj, &xj) in k.components().iter().zip(x) {
        let (v, log2_scale) = scaled_hermite_1d(kj as usize, xj, None);
        prod *= v[kj as usize];
        log_factor += log2_scale * std::f64::consts::LN_2 - 0.5 * xj * xj;
    }
    prod * log_factor.exp()
}

/// `(∂_{x_j} + x_j) h_k(x) = √(2k_j) h_{k−e_j}(x)` for [`Sign::Plus`] and
/// `(∂_{x_j} − x_j) h_k(x) = −√(2k_j+2) h_{k+e_j}(x)` for [`Sign::Minus`].
/// `j` is zero-based.
pub fn hermite_ladder_eval(k: &MultiIndex, x: &[f64], j: usize, sign: Sign) -> Result<f64> {
    check_coordinate(j, k.dim())?;
    let kj = k.component(j) as f64;
    Ok(match sign {
        Sign::Plus => match k.lowered(j) {
            Some(lower) => (2.0 * kj).sqrt() * hermite_eval(&lower, x),
            None => 0.0,
        },
        Sign::Minus => -(2.0 * kj + 2.0).sqrt() * hermite_eval(&k.raised(j), x),
    })
}

/// `h_k'(x) = ½[√(2k) h_{k−1}(x) − √(2k+2) h_{k+1}(x)]` in one dimension.
pub fn hermite_derivative_1d(k: usize, x: f64) -> f64 {
    let h = hermite_functions_1d(k + 1, x);
    derivative_from_table(&h, k)
}

pub(crate) fn derivative_from_table(h: &[f64], k: usize) -> f64 {
    let kf = k as f64;
    let lower = if k == 0 { 0.0 } else { (2.0 * kf).sqrt() * h[k - 1] };
    0.5 * (lower - (2.0 * kf + 2.0).sqrt() * h[k + 1])
}
