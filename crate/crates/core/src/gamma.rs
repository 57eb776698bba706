//! Discretized `H = L²((0,∞), dt/t)` and γ-radonifying norms of operators
//! `H → ℓ^q_d`.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Log-spaced nodes on `[t_min, t_max]` with trapezoid weights for `dt/t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_min: f64,
    t_max: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, count: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time grid needs 0 < t_min < t_max, got [{t_min}, {t_max}]"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidParameter(format!(
                "time grid needs at least 2 nodes, got {count}"
            )));
        }
        let (lo, hi) = (t_min.ln(), t_max.ln());
        let h = (hi - lo) / (count - 1) as f64;
        let nodes = (0..count)
            .map(|i| match i {
                0 => t_min,
                i if i + 1 == count => t_max,
                i => (lo + i as f64 * h).exp(),
            })
            .collect();
        let weights = (0..count)
            .map(|i| if i == 0 || i + 1 == count { 0.5 * h } else { h })
            .collect();
        Ok(TimeGrid {
            t_min,
            t_max,
            nodes,
            weights,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same range with twice the node count.
    pub fn refined(&self) -> Self {
        TimeGrid::new(self.t_min, self.t_max, 2 * self.len()).expect("refining keeps a valid grid")
    }
}

impl Default for TimeGrid {
    /// `[1e-4, 40]` with 512 nodes.
    fn default() -> Self {
        TimeGrid::new(1e-4, 40.0, 512).expect("default time grid is valid")
    }
}

/// `ℝ^d` with the `ℓ^q` norm, `1 ≤ q ≤ ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanachModel {
    d: usize,
    q: f64,
}

impl BanachModel {
    pub fn new(d: usize, q: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("Banach dimension must be >= 1".into()));
        }
        if !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!("exponent q must lie in [1, inf], got {q}")));
        }
        Ok(BanachModel { d, q })
    }

    /// The real line.
    pub fn scalar() -> Self {
        BanachModel { d: 1, q: 2.0 }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// True when the norm is Euclidean, so γ-norms have a closed form.
    pub fn is_hilbert(&self) -> bool {
        self.d == 1 || self.q == 2.0
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        lq_norm(v, self.q)
    }
}

fn lq_norm(v: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    } else if q == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else if q == 2.0 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else {
        let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * v.iter().map(|x| (x.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `d × N` matrix whose column `i` is `F(t_i)√w_i`, representing the
/// operator `H → ℝ^d` induced by a profile `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGammaOperator {
    model: BanachModel,
    matrix: DMatrix<f64>,
}

impl DiscreteGammaOperator {
    /// From profile samples `F(t_i)`, time-major with `d` values per node.
    pub fn from_samples(model: BanachModel, times: &TimeGrid, samples: &[f64]) -> Result<Self> {
        let (d, n) = (model.d(), times.len());
        if samples.len() != d * n {
            return Err(Error::DimensionMismatch {
                expected: d * n,
                found: samples.len(),
            });
        }
        let matrix = DMatrix::from_fn(d, n, |c, i| samples[i * d + c] * times.weights()[i].sqrt());
        DiscreteGammaOperator::from_matrix(model, matrix)
    }

    /// From a profile function.
    pub fn from_profile(model: BanachModel, times: &TimeGrid, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let samples: Vec<f64> = times.nodes().iter().flat_map(|&t| f(t)).collect();
        DiscreteGammaOperator::from_samples(model, times, &samples)
    }

    pub fn from_matrix(model: BanachModel, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != model.d() {
            return Err(Error::DimensionMismatch {
                expected: model.d(),
                found: matrix.nrows(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("operator entries must be finite".into()));
        }
        Ok(DiscreteGammaOperator { model, matrix })
    }

    pub fn model(&self) -> BanachModel {
        self.model
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `A Aᵀ`, the covariance of `Σ_i γ_i a_i`.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.matrix * self.matrix.transpose()
    }

    /// Symmetric square root `S` of the Gram matrix, so `Σ_i γ_i a_i` has
    /// the law of `S ξ` with `ξ` standard normal in `ℝ^d`.
    fn covariance_root(&self) -> DMatrix<f64> {
        let eig = SymmetricEigen::new(self.gram());
        let mut root = eig.eigenvectors.clone();
        for (j, lambda) in eig.eigenvalues.iter().enumerate() {
            let s = lambda.max(0.0).sqrt();
            for i in 0..root.nrows() {
                root[(i, j)] *= s;
            }
        }
        root
    }
}

/// `(Σ_i F(t_i)² w_i)^{1/2}`
pub fn h_norm(profile: &[f64], times: &TimeGrid) -> f64 {
    assert_eq!(profile.len(), times.len(), "profile length differs from time grid");
    profile
        .iter()
        .zip(times.weights())
        .map(|(f, w)| f * f * w)
        .sum::<f64>()
        .sqrt()
}

/// The rank-one operator `h ↦ ⟨h, F⟩ b`.
pub fn rank_one(profile: &[f64], b: &[f64], model: BanachModel, times: &TimeGrid) -> Result<DiscreteGammaOperator> {
    if b.len() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            found: b.len(),
        });
    }
    if profile.len() != times.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: profile.len(),
        });
    }
    let matrix = DMatrix::from_fn(model.d(), times.len(), |c, i| profile[i] * times.weights()[i].sqrt() * b[c]);
    DiscreteGammaOperator::from_matrix(model, matrix)
}

/// Frobenius norm: the γ-norm when the target is Euclidean.
pub fn gamma_norm_hilbert(op: &DiscreteGammaOperator) -> f64 {
    op.matrix.norm()
}

/// Monte-Carlo γ-norm estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    /// `(mean ‖Σ γ_i a_i‖²)^{1/2}`
    pub estimate: f64,
    /// Standard error of the mean of the squared norms.
    pub std_error: f64,
    pub samples: usize,
}

impl GammaEstimate {
    pub fn mean_square(&self) -> f64 {
        self.estimate * self.estimate
    }
}

const BATCH: usize = 4096;

/// Draws `m` standard normal vectors in `ℝ^d`, row-major. Batch `b` uses
/// its own ChaCha stream derived from `(seed, b)`, so the result does not
/// depend on the thread count.
pub(crate) fn gaussian_draws(m: usize, d: usize, seed: u64) -> Vec<f64> {
    let batches = m.div_ceil(BATCH);
    let mut out = vec![0.0; m * d];
    out.par_chunks_mut(BATCH * d)
        .enumerate()
        .for_each(|(b, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            for v in chunk.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
        });
    debug_assert!(batches * BATCH >= m);
    out
}

/// Monte-Carlo estimate of `‖T‖_γ = (E‖Σ_i γ_i T e_i‖²_B)^{1/2}`.
///
/// The Gaussian sum `Σ_i γ_i a_i` over the `N` columns has the same law as
/// `S ξ`, where `S` is the square root of the `d × d` Gram matrix and `ξ` is
/// standard normal in `ℝ^d`. Each of the `m` draws samples `ξ`, so the cost
/// is independent of `N`.
pub fn gamma_norm_mc(op: &DiscreteGammaOperator, m: usize, seed: u64) -> Result<GammaEstimate> {
    let sampler = GammaSampler::new(op.model, m, seed)?;
    Ok(sampler.estimate(op))
}

/// Reusable Gaussian draws for many γ-norm evaluations in the same model.
/// Evaluations sharing a sampler use common random numbers.
#[derive(Debug, Clone)]
pub struct GammaSampler {
    model: BanachModel,
    draws: Vec<f64>,
    m: usize,
}

impl GammaSampler {
    pub fn new(model: BanachModel, m: usize, seed: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::TooFewSamples(m));
        }
        Ok(GammaSampler {
            model,
            draws: gaussian_draws(m, model.d(), seed),
            m,
        })
    }

    pub fn model(&self) -> BanachModel {
        self.model
    }

    pub fn estimate(&self, op: &DiscreteGammaOperator) -> GammaEstimate {
        assert_eq!(op.model.d(), self.model.d(), "sampler and operator dimensions differ");
        let d = self.model.d();
        let root = op.covariance_root();
        let q = self.model.q();
        let (sum, sum_sq) = self
            .draws
            .par_chunks(BATCH * d)
            .map(|chunk| {
                let mut v = vec![0.0; d];
                let (mut s, mut s2) = (0.0, 0.0);
                for xi in chunk.chunks_exact(d) {
                    for (r, slot) in v.iter_mut().enumerate() {
                        *slot = (0..d).map(|c| root[(r, c)] * xi[c]).sum();
                    }
                    let x = lq_norm(&v, q).powi(2);
                    s += x;
                    s2 += x * x;
                }
                (s, s2)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let mf = self.m as f64;
        let mean = sum / mf;
        let var = ((sum_sq - mf * mean * mean) / (mf - 1.0)).max(0.0);
        GammaEstimate {
            estimate: mean.sqrt(),
            std_error: (var / mf).sqrt(),
            samples: self.m,
        }
    }

    /// Closed form when the model is Euclidean, Monte Carlo otherwise.
    pub fn norm(&self, op: &DiscreteGammaOperator) -> f64 {
        if self.model.is_hilbert() {
            gamma_norm_hilbert(op)
        } else {
            self.estimate(op).estimate
        }
    }
}
