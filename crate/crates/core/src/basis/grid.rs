use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform tensor lattice on `[−R, R]ⁿ` with trapezoid weights.
///
/// The requested spacing is rounded down so that an integer number of
/// intervals fits exactly into `[−R, R]`. Points are stored row-major with
/// the last coordinate varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    half_width: f64,
    spacing: f64,
    dim: usize,
    per_axis: usize,
}

impl SpatialGrid {
    pub fn new(half_width: f64, spacing: f64, dim: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid half-width must be positive, got {half_width}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive, got {spacing}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("grid dimension must be >= 1".into()));
        }
        let intervals = ((2.0 * half_width / spacing) - 1e-9).ceil().max(1.0) as usize;
        Ok(SpatialGrid {
            half_width,
            spacing: 2.0 * half_width / intervals as f64,
            dim,
            per_axis: intervals + 1,
        })
    }

    /// Defaults resolving Hermite functions up to total degree `max_degree`:
    /// `R = √(2K+n) + 4`, spacing 0.005 in one dimension and 0.05 otherwise.
    pub fn default_for(dim: usize, max_degree: usize) -> Self {
        let half_width = (2.0 * max_degree as f64 + dim as f64).sqrt() + 4.0;
        let spacing = if dim == 1 { 0.005 } else { 0.05 };
        SpatialGrid::new(half_width, spacing, dim).expect("default grid parameters are valid")
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn len(&self) -> usize {
        self.per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lattice coordinates along one axis.
    pub fn axis(&self) -> Vec<f64> {
        (0..self.per_axis).map(|i| self.axis_point(i)).collect()
    }

    pub(crate) fn axis_point(&self, i: usize) -> f64 {
        if i + 1 == self.per_axis {
            self.half_width
        } else {
            -self.half_width + i as f64 * self.spacing
        }
    }

    /// One-dimensional trapezoid weights along an axis.
    pub fn axis_weights(&self) -> Vec<f64> {
        (0..self.per_axis).map(|i| self.axis_weight(i)).collect()
    }

    pub(crate) fn axis_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.per_axis {
            0.5 * self.spacing
        } else {
            self.spacing
        }
    }

    /// Per-axis lattice positions of a flat point index.
    pub fn axis_indices(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.per_axis;
            flat /= self.per_axis;
        }
        idx
    }

    pub fn flat_index(&self, axis_indices: &[usize]) -> usize {
        axis_indices.iter().fold(0, |acc, &i| acc * self.per_axis + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.axis_indices(flat)
            .into_iter()
            .map(|i| self.axis_point(i))
            .collect()
    }

    pub fn weight(&self, flat: usize) -> f64 {
        self.axis_indices(flat)
            .into_iter()
            .map(|i| self.axis_weight(i))
            .product()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Index of the lattice point nearest to `x` along one axis, if `x` lies
    /// inside `[−R, R]`.
    pub fn nearest_axis_index(&self, x: f64) -> Option<usize> {
        if x < -self.half_width - 1e-12 || x > self.half_width + 1e-12 {
            return None;
        }
        let i = ((x + self.half_width) / self.spacing).round() as usize;
        Some(i.min(self.per_axis - 1))
    }

    /// Same grid with the spacing halved.
    pub fn refined(&self) -> Self {
        SpatialGrid::new(self.half_width, 0.5 * self.spacing, self.dim)
            .expect("refining a valid grid stays valid")
    }

    /// Multilinear interpolation of point-major samples with `d` components.
    /// Returns `None` outside the grid.
    pub fn interpolate(&self, samples: &[f64], d: usize, x: &[f64]) -> Option<Vec<f64>> {
        debug_assert_eq!(samples.len(), self.len() * d);
        let mut lower = Vec::with_capacity(self.dim);
        let mut frac = Vec::with_capacity(self.dim);
        for &xi in x {
            if xi < -self.half_width - 1e-12 || xi > self.half_width + 1e-12 {
                return None;
            }
            let pos = ((xi + self.half_width) / self.spacing).max(0.0);
            let i = (pos.floor() as usize).min(self.per_axis - 2);
            lower.push(i);
            frac.push((pos - i as f64).clamp(0.0, 1.0));
        }
        let mut out = vec![0.0; d];
        let mut corner = vec![0usize; self.dim];
        for mask in 0..(1usize << self.dim) {
            let mut w = 1.0;
            for a in 0..self.dim {
                let up = (mask >> a) & 1 == 1;
                corner[a] = lower[a] + up as usize;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            let base = self.flat_index(&corner) * d;
            for c in 0..d {
                out[c] += w * samples[base + c];
            }
        }
        Some(out)
    }
}
