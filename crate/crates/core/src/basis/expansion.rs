use super::{scaled_hermite_1d, MultiIndex, SpatialGrid};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Finite Hermite expansion `Σ_k c_k h_k` with `ℝ^d`-valued coefficients.
///
/// Indices whose coefficients are all zero are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteExpansion {
    n: usize,
    d: usize,
    max_degree: usize,
    coeffs: BTreeMap<MultiIndex, Vec<f64>>,
}

impl HermiteExpansion {
    pub fn zero(n: usize, d: usize, max_degree: usize) -> Self {
        assert!(n >= 1 && d >= 1, "dimensions must be positive");
        HermiteExpansion {
            n,
            d,
            max_degree,
            coeffs: BTreeMap::new(),
        }
    }

    /// Scalar expansion from `(index, coefficient)` pairs; the degree cap is
    /// the largest order present.
    pub fn scalar(n: usize, terms: &[(MultiIndex, f64)]) -> Self {
        let max_degree = terms.iter().map(|(k, _)| k.order() as usize).max().unwrap_or(0);
        let mut e = HermiteExpansion::zero(n, 1, max_degree);
        for (k, c) in terms {
            e.add(k.clone(), &[*c]);
        }
        e
    }

    /// One-dimensional scalar expansion from a dense coefficient list.
    pub fn from_dense_1d(coeffs: &[f64]) -> Self {
        let mut e = HermiteExpansion::zero(1, 1, coeffs.len().saturating_sub(1));
        for (k, &c) in coeffs.iter().enumerate() {
            e.add(MultiIndex::scalar(k as u32), &[c]);
        }
        e
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Number of stored terms.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, k: &MultiIndex) -> Option<&[f64]> {
        self.coeffs.get(k).map(Vec::as_slice)
    }

    /// Scalar coefficient at `k` (first value coordinate), zero if absent.
    pub fn coeff(&self, k: &MultiIndex) -> f64 {
        self.coeffs.get(k).map_or(0.0, |c| c[0])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &[f64])> {
        self.coeffs.iter().map(|(k, c)| (k, c.as_slice()))
    }

    /// Adds `c` to the coefficient at `k`, raising the degree cap if needed.
    pub fn add(&mut self, k: MultiIndex, c: &[f64]) {
        assert_eq!(k.dim(), self.n, "index dimension differs from expansion");
        assert_eq!(c.len(), self.d, "coefficient length differs from value dimension");
        assert!(c.iter().all(|v| v.is_finite()), "coefficients must be finite");
        self.max_degree = self.max_degree.max(k.order() as usize);
        let entry = self.coeffs.entry(k).or_insert_with(|| vec![0.0; c.len()]);
        for (e, v) in entry.iter_mut().zip(c) {
            *e += v;
        }
        self.coeffs.retain(|_, v| v.iter().any(|&x| x != 0.0));
    }

    /// `λ_α(k) = 2|k| + n + α`
    pub fn eigenvalue(&self, k: &MultiIndex, alpha: f64) -> f64 {
        k.eigenvalue(alpha)
    }

    /// New expansion with every coefficient vector transformed by `f(k, c)`.
    pub fn map(&self, f: impl Fn(&MultiIndex, &[f64]) -> Vec<f64>) -> Self {
        let mut out = HermiteExpansion::zero(self.n, self.d, self.max_degree);
        for (k, c) in &self.coeffs {
            let v = f(k, c);
            if v.iter().any(|&x| x != 0.0) {
                out.coeffs.insert(k.clone(), v);
            }
        }
        out
    }

    /// Multiplies every coefficient by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        self.map(|_, c| c.iter().map(|v| v * s).collect())
    }

    /// `Σ_k |c_k|²` over all value coordinates.
    pub fn l2_norm_squared(&self) -> f64 {
        self.coeffs.values().flatten().map(|v| v * v).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_squared().sqrt()
    }

    /// Largest coefficient magnitude difference against `other`.
    pub fn max_abs_diff(&self, other: &HermiteExpansion) -> f64 {
        let zero = vec![0.0; self.d.max(other.d)];
        let mut m: f64 = 0.0;
        for k in self.coeffs.keys().chain(other.coeffs.keys()) {
            let a = self.coeffs.get(k).unwrap_or(&zero);
            let b = other.coeffs.get(k).unwrap_or(&zero);
            for (x, y) in a.iter().zip(b) {
                m = m.max((x - y).abs());
            }
        }
        m
    }

    /// Sum of two expansions of equal shape.
    pub fn plus(&self, other: &HermiteExpansion) -> Self {
        assert_eq!((self.n, self.d), (other.n, other.d));
        let mut out = self.clone();
        for (k, c) in &other.coeffs {
            out.add(k.clone(), c);
        }
        out
    }

    pub(crate) fn insert_raw(&mut self, k: MultiIndex, c: Vec<f64>) {
        if c.iter().any(|&x| x != 0.0) {
            self.max_degree = self.max_degree.max(k.order() as usize);
            self.coeffs.insert(k, c);
        }
    }

    /// Largest single-coordinate degree present.
    pub(crate) fn max_component(&self) -> usize {
        self.coeffs
            .keys()
            .flat_map(|k| k.components().iter().copied())
            .max()
            .unwrap_or(0) as usize
    }
}

/// Values of `h_m` at the points of one grid axis, `m = 0..=kmax`.
/// Stored point-major: `values[i * (kmax + 1) + m]`.
#[derive(Debug, Clone)]
pub(crate) struct AxisTable {
    pub kmax: usize,
    pub values: Vec<f64>,
}

impl AxisTable {
    pub fn new(points: &[f64], kmax: usize) -> Self {
        let values = points
            .par_iter()
            .flat_map_iter(|&x| super::hermite_functions_1d(kmax, x))
            .collect();
        AxisTable { kmax, values }
    }

    #[inline]
    pub fn get(&self, i: usize, m: usize) -> f64 {
        self.values[i * (self.kmax + 1) + m]
    }
}

/// Contracts the leading axis of a tensor `[a_0, rest…, d]` against the
/// matrix `mat[out][in]` and moves the result axis behind `rest`.
pub(crate) fn contract_leading(tensor: &[f64], lead: usize, d: usize, mat: &[f64], out_len: usize) -> Vec<f64> {
    let rest = tensor.len() / (lead * d);
    let mut out = vec![0.0; rest * out_len * d];
    out.par_chunks_mut(out_len * d)
        .enumerate()
        .for_each(|(r, block)| {
            for i in 0..lead {
                let src = &tensor[(i * rest + r) * d..(i * rest + r + 1) * d];
                if src.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for m in 0..out_len {
                    let a = mat[m * lead + i];
                    for c in 0..d {
                        block[m * d + c] += a * src[c];
                    }
                }
            }
        });
    out
}

pub(crate) fn check_resolution(grid: &SpatialGrid, max_degree: usize) -> Result<()> {
    let scale = (2.0 * max_degree as f64 + grid.dim() as f64).sqrt();
    if grid.spacing() > 0.5 / scale + 1e-15 {
        return Err(Error::UnresolvedDegree {
            degree: max_degree,
            reason: format!(
                "spacing {} exceeds 0.5/sqrt(2K+n) = {}",
                grid.spacing(),
                0.5 / scale
            ),
        });
    }
    if grid.half_width() < scale + 4.0 - 1e-9 {
        return Err(Error::UnresolvedDegree {
            degree: max_degree,
            reason: format!(
                "half-width {} is below sqrt(2K+n) + 4 = {}",
                grid.half_width(),
                scale + 4.0
            ),
        });
    }
    Ok(())
}

/// Trapezoid projections `∫ f h_k dx` for all `|k| ≤ max_degree`.
///
/// `samples` are point-major with `d` values per grid point.
pub fn analyze(
    grid: &SpatialGrid,
    samples: &[f64],
    d: usize,
    max_degree: usize,
) -> Result<HermiteExpansion> {
    if d == 0 {
        return Err(Error::InvalidParameter("value dimension must be >= 1".into()));
    }
    if samples.len() != grid.len() * d {
        return Err(Error::DimensionMismatch {
            expected: grid.len() * d,
            found: samples.len(),
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }
    check_resolution(grid, max_degree)?;
    let n = grid.dim();
    let p = grid.per_axis();
    let kp = max_degree + 1;
    let table = AxisTable::new(&grid.axis(), max_degree);
    let weights = grid.axis_weights();
    let mut mat = vec![0.0; kp * p];
    for m in 0..kp {
        for i in 0..p {
            mat[m * p + i] = table.get(i, m) * weights[i];
        }
    }
    let mut tensor = samples.to_vec();
    for _ in 0..n {
        tensor = contract_leading(&tensor, p, d, &mat, kp);
    }
    let mut e = HermiteExpansion::zero(n, d, max_degree);
    for k in MultiIndex::up_to_degree(n, max_degree) {
        let flat = k.components().iter().fold(0, |acc, &c| acc * kp + c as usize);
        e.insert_raw(k, tensor[flat * d..(flat + 1) * d].to_vec());
    }
    Ok(e)
}

/// `Σ_k c_k h_k(x)`.
pub fn synthesize(e: &HermiteExpansion, x: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), e.n(), "point dimension differs from expansion");
    let mut out = vec![0.0; e.d()];
    if e.is_zero() {
        return out;
    }
    let kmax = e.max_component();
    let mut tables = Vec::with_capacity(x.len());
    let mut log_factor = 0.0;
    for &xj in x {
        let (v, log2_scale) = scaled_hermite_1d(kmax, xj, None);
        log_factor += log2_scale * std::f64::consts::LN_2 - 0.5 * xj * xj;
        tables.push(v);
    }
    let factor = log_factor.exp();
    for (k, c) in e.iter() {
        let mut prod = factor;
        for (j, &kj) in k.components().iter().enumerate() {
            prod *= tables[j][kj as usize];
        }
        for (o, v) in out.iter_mut().zip(c) {
            *o += prod * v;
        }
    }
    out
}

/// `Σ_k c_k h_k` at every grid point, point-major with `d` values each.
pub fn synthesize_on_grid(e: &HermiteExpansion, grid: &SpatialGrid) -> Vec<f64> {
    assert_eq!(grid.dim(), e.n(), "grid dimension differs from expansion");
    let d = e.d();
    if e.is_zero() {
        return vec![0.0; grid.len() * d];
    }
    let n = e.n();
    let kp = e.max_component() + 1;
    let p = grid.per_axis();
    let mut tensor = vec![0.0; kp.pow(n as u32) * d];
    for (k, c) in e.iter() {
        let flat = k.components().iter().fold(0, |acc, &c| acc * kp + c as usize);
        tensor[flat * d..(flat + 1) * d].copy_from_slice(c);
    }
    let table = AxisTable::new(&grid.axis(), kp - 1);
    let mut mat = vec![0.0; p * kp];
    for i in 0..p {
        for m in 0..kp {
            mat[i * kp + m] = table.get(i, m);
        }
    }
    for _ in 0..n {
        tensor = contract_leading(&tensor, kp, d, &mat, p);
    }
    tensor
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::hermite_eval;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn default_1d() -> SpatialGrid {
        SpatialGrid::default_for(1, 60)
    }

    #[test]
    fn analyze_single_mode() {
        let grid = default_1d();
        let k2 = MultiIndex::scalar(2);
        let samples: Vec<f64> = grid.points().iter().map(|p| hermite_eval(&k2, p)).collect();
        let e = analyze(&grid, &samples, 1, 60).unwrap();
        for k in MultiIndex::up_to_degree(1, 60) {
            let expected = if k == k2 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(e.coeff(&k), expected, epsilon = 1e-8);
        }
    }

    #[test]
    fn analyze_zero_is_empty() {
        let grid = SpatialGrid::default_for(1, 20);
        let e = analyze(&grid, &vec![0.0; grid.len()], 1, 20).unwrap();
        assert!(e.is_zero());
    }

    #[test]
    fn analyze_linear_combination() {
        let grid = default_1d();
        let samples: Vec<f64> = grid
            .points()
            .iter()
            .map(|p| hermite_eval(&MultiIndex::scalar(0), p) + 2.0 * hermite_eval(&MultiIndex::scalar(1), p))
            .collect();
        let e = analyze(&grid, &samples, 1, 60).unwrap();
        assert_abs_diff_eq!(e.coeff(&MultiIndex::scalar(0)), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(e.coeff(&MultiIndex::scalar(1)), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn analyze_rejects_coarse_grid() {
        let grid = SpatialGrid::new(15.0, 0.1, 1).unwrap();
        let err = analyze(&grid, &vec![0.0; grid.len()], 1, 60).unwrap_err();
        assert!(matches!(err, Error::UnresolvedDegree { degree: 60, .. }));
        let narrow = SpatialGrid::new(5.0, 0.005, 1).unwrap();
        assert!(analyze(&narrow, &vec![0.0; narrow.len()], 1, 60).is_err());
    }

    #[test]
    fn orthonormality_on_default_grid() {
        let grid = default_1d();
        let table = AxisTable::new(&grid.axis(), 20);
        let w = grid.axis_weights();
        for j in 0..=20 {
            for k in 0..=20 {
                let ip: f64 = (0..grid.len()).map(|i| w[i] * table.get(i, j) * table.get(i, k)).sum();
                let expected = if j == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip, expected, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn synthesize_examples() {
        let e = HermiteExpansion::scalar(1, &[(MultiIndex::scalar(0), 1.0)]);
        assert_abs_diff_eq!(synthesize(&e, &[0.0])[0], super::super::PI_POW_MINUS_QUARTER, epsilon = 1e-15);
        assert_eq!(synthesize(&HermiteExpansion::zero(1, 1, 4), &[0.3]), vec![0.0]);
        let e = HermiteExpansion::from_dense_1d(&[1.0, 0.0, -1.0]);
        let expected = hermite_eval(&MultiIndex::scalar(0), &[0.7]) - hermite_eval(&MultiIndex::scalar(2), &[0.7]);
        assert_abs_diff_eq!(synthesize(&e, &[0.7])[0], expected, epsilon = 1e-15);
    }

    #[test]
    fn grid_synthesis_matches_pointwise() {
        let grid = SpatialGrid::new(3.0, 0.25, 2).unwrap();
        let mut e = HermiteExpansion::zero(2, 2, 4);
        e.add(MultiIndex::new(vec![1, 2]), &[0.5, -1.0]);
        e.add(MultiIndex::new(vec![3, 0]), &[2.0, 0.25]);
        let values = synthesize_on_grid(&e, &grid);
        for flat in [0, 17, 300, grid.len() - 1] {
            let v = synthesize(&e, &grid.point(flat));
            assert_abs_diff_eq!(values[2 * flat], v[0], epsilon = 1e-14);
            assert_abs_diff_eq!(values[2 * flat + 1], v[1], epsilon = 1e-14);
        }
    }

    #[test]
    fn roundtrip_in_two_dimensions() {
        let grid = SpatialGrid::default_for(2, 20);
        let mut e = HermiteExpansion::zero(2, 1, 20);
        e.add(MultiIndex::new(vec![0, 0]), &[1.0]);
        e.add(MultiIndex::new(vec![7, 13]), &[-0.3]);
        e.add(MultiIndex::new(vec![2, 1]), &[0.8]);
        let back = analyze(&grid, &synthesize_on_grid(&e, &grid), 1, 20).unwrap();
        assert!(back.max_abs_diff(&e) < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn roundtrip_band_limited(coeffs in proptest::collection::vec(-2.0f64..2.0, 1..=31)) {
            let grid = SpatialGrid::default_for(1, 30);
            let e = HermiteExpansion::from_dense_1d(&coeffs);
            let back = analyze(&grid, &synthesize_on_grid(&e, &grid), 1, 30).unwrap();
            prop_assert!(back.max_abs_diff(&e) < 1e-8);
        }
    }
}
