//! Exact spectral calculus on Hermite expansions.
//!
//! Every operator here is diagonal or index-shifting in the Hermite basis,
//! so it acts on coefficients with closed-form multipliers. Fields depending
//! on `(x, t)` are synthesized from time-dependent coefficient tables.

use crate::basis::{
    contract_leading, scaled_hermite_1d, synthesize_on_grid, AxisTable, HermiteExpansion, MultiIndex, Sign,
    SpatialGrid,
};
use crate::error::{check_coordinate, check_time, Error, Result};
use crate::gamma::{BanachModel, DiscreteGammaOperator, GammaSampler, TimeGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SemigroupKind {
    /// `e^{-t(L+α)}`
    Heat,
    /// `e^{-t√(L+α)}`
    Poisson,
}

/// Transform composed with the Poisson semigroup in [`composed_maximal`].
/// Coordinates are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InnerTransform {
    /// `t ∂_t P_t^{L+α}`
    G,
    /// `t (∂_{x_j} ± x_j) P_t^L`
    Ladder { j: usize, sign: Sign },
    /// `R_{j,±} = (∂_{x_j} ± x_j) L^{-1/2}`
    Riesz { j: usize, sign: Sign },
}

/// Rejects `α` unless every stored mode has `2|k| + n + α > 0`.
///
/// For `α > −n` this always holds; smaller shifts are accepted mode by mode.
pub(crate) fn check_modes(e: &HermiteExpansion, alpha: f64) -> Result<()> {
    if !alpha.is_finite() {
        return Err(Error::InvalidShift { alpha, n: e.n() });
    }
    if alpha > -(e.n() as f64) {
        return Ok(());
    }
    match e.iter().find(|(k, _)| k.eigenvalue(alpha) <= 0.0) {
        Some((k, _)) => Err(Error::InadmissibleMode {
            alpha,
            index: k.to_string(),
            eigenvalue: k.eigenvalue(alpha),
        }),
        None => Ok(()),
    }
}

fn multiplier(kind: SemigroupKind, t: f64, lambda: f64) -> f64 {
    match kind {
        SemigroupKind::Heat => (-t * lambda).exp(),
        SemigroupKind::Poisson => (-t * lambda.sqrt()).exp(),
    }
}

/// `e^{-t(L+α)} f` or `e^{-t√(L+α)} f`.
pub fn apply_semigroup(e: &HermiteExpansion, kind: SemigroupKind, t: f64, alpha: f64) -> Result<HermiteExpansion> {
    check_time(t)?;
    check_modes(e, alpha)?;
    Ok(e.map(|k, c| {
        let m = multiplier(kind, t, k.eigenvalue(alpha));
        c.iter().map(|v| v * m).collect()
    }))
}

/// `(L+α)^{-1/2} f`
pub fn inv_sqrt(e: &HermiteExpansion, alpha: f64) -> Result<HermiteExpansion> {
    check_modes(e, alpha)?;
    Ok(e.map(|k, c| {
        let m = 1.0 / k.eigenvalue(alpha).sqrt();
        c.iter().map(|v| v * m).collect()
    }))
}

/// `(∂_{x_j} ± x_j) f`, using `(∂+x)h_k = √(2k_j) h_{k−e_j}` and
/// `(∂−x)h_k = −√(2k_j+2) h_{k+e_j}`.
pub fn ladder_apply(e: &HermiteExpansion, j: usize, sign: Sign) -> Result<HermiteExpansion> {
    check_coordinate(j, e.n())?;
    let mut out = HermiteExpansion::zero(e.n(), e.d(), e.max_degree() + usize::from(sign == Sign::Minus));
    for (k, c) in e.iter() {
        let kj = k.component(j) as f64;
        let (target, factor) = match sign {
            Sign::Plus => match k.lowered(j) {
                Some(lower) => (lower, (2.0 * kj).sqrt()),
                None => continue,
            },
            Sign::Minus => (k.raised(j), -(2.0 * kj + 2.0).sqrt()),
        };
        out.insert_raw(target, c.iter().map(|v| v * factor).collect());
    }
    Ok(out)
}

/// Riesz transform `R_{j,±} f = (∂_{x_j} ± x_j) L^{-1/2} f`: the coefficient
/// at `k` moves to `k ∓ e_j` with factor `√(2k_j/(2|k|+n))` or
/// `−√((2k_j+2)/(2|k|+n))`.
pub fn riesz(e: &HermiteExpansion, j: usize, sign: Sign) -> Result<HermiteExpansion> {
    check_coordinate(j, e.n())?;
    ladder_apply(&inv_sqrt(e, 0.0)?, j, sign)
}

/// Samples of `x_j L^{-1/2} f` on the grid, point-major.
pub fn coordinate_invsqrt(e: &HermiteExpansion, j: usize, grid: &SpatialGrid) -> Result<Vec<f64>> {
    check_coordinate(j, e.n())?;
    let mut values = synthesize_on_grid(&inv_sqrt(e, 0.0)?, grid);
    let d = e.d();
    for (p, chunk) in values.chunks_mut(d).enumerate() {
        let xj = grid.point(p)[j];
        for v in chunk {
            *v *= xj;
        }
    }
    Ok(values)
}

/// Closed form of `∫_a^b λ t e^{-2t√λ} dt`; the full integral over
/// `(0, ∞)` is `¼` for every `λ > 0`.
pub fn g_energy_factor(lambda: f64, a: f64, b: f64) -> f64 {
    let r = lambda.sqrt();
    let part = |t: f64| {
        if t.is_infinite() {
            0.0
        } else {
            (0.5 * t * r + 0.25) * (-2.0 * t * r).exp()
        }
    };
    part(a) - part(b)
}

/// `∫_a^b ‖G_{L+α} f(·,t)‖²_{L²} dt/t` computed spectrally. Over `(0, ∞)`
/// this is `¼ Σ_k |c_k|²`.
pub fn g_energy(e: &HermiteExpansion, alpha: f64, a: f64, b: f64) -> Result<f64> {
    check_modes(e, alpha)?;
    Ok(e.iter()
        .map(|(k, c)| g_energy_factor(k.eigenvalue(alpha), a, b) * c.iter().map(|v| v * v).sum::<f64>())
        .sum())
}

/// Coefficients depending on time: term `(k, table)` contributes
/// `table[i·d + c] h_k(x)` to component `c` at time node `i`.
#[derive(Debug, Clone)]
pub(crate) struct TimeSeries {
    n: usize,
    d: usize,
    ntimes: usize,
    terms: Vec<(MultiIndex, Vec<f64>)>,
}

impl TimeSeries {
    /// Series `Σ_k φ(k, t) c_k h_{target(k)}` sampled at the given times.
    fn build(
        e: &HermiteExpansion,
        times: &[f64],
        target: impl Fn(&MultiIndex) -> Option<MultiIndex>,
        phi: impl Fn(&MultiIndex, f64) -> f64,
    ) -> TimeSeries {
        let d = e.d();
        let mut terms: Vec<(MultiIndex, Vec<f64>)> = Vec::new();
        for (k, c) in e.iter() {
            let Some(out) = target(k) else { continue };
            let mut table = vec![0.0; times.len() * d];
            for (i, &t) in times.iter().enumerate() {
                let f = phi(k, t);
                for (slot, v) in table[i * d..(i + 1) * d].iter_mut().zip(c) {
                    *slot = f * v;
                }
            }
            match terms.iter_mut().find(|(idx, _)| *idx == out) {
                Some((_, existing)) => existing.iter_mut().zip(&table).for_each(|(a, b)| *a += b),
                None => terms.push((out, table)),
            }
        }
        TimeSeries {
            n: e.n(),
            d,
            ntimes: times.len(),
            terms,
        }
    }

    fn max_component(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|(k, _)| k.components().iter().copied())
            .max()
            .unwrap_or(0) as usize
    }

    /// Time-major samples (`ntimes × d`) at one point.
    pub fn at_point(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "point dimension differs from series");
        let mut out = vec![0.0; self.ntimes * self.d];
        if self.terms.is_empty() {
            return out;
        }
        let h = hermite_values(x, self.max_component());
        for (k, table) in &self.terms {
            let hk = h.eval(k);
            if hk == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(table) {
                *o += hk * v;
            }
        }
        out
    }

    /// Value at one point and the time node with index `i`.
    pub fn at_time(&self, x: &[f64], i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        if self.terms.is_empty() {
            return out;
        }
        let h = hermite_values(x, self.max_component());
        for (k, table) in &self.terms {
            let hk = h.eval(k);
            for (o, v) in out.iter_mut().zip(&table[i * self.d..(i + 1) * self.d]) {
                *o += hk * v;
            }
        }
        out
    }

    /// Samples at every grid point, point-major then time-major.
    pub fn on_grid(&self, grid: &SpatialGrid) -> Vec<f64> {
        let width = self.ntimes * self.d;
        if self.terms.is_empty() {
            return vec![0.0; grid.len() * width];
        }
        let n = self.n;
        let kp = self.max_component() + 1;
        let p = grid.per_axis();
        let mut tensor = vec![0.0; kp.pow(n as u32) * width];
        for (k, table) in &self.terms {
            let flat = k.components().iter().fold(0, |acc, &c| acc * kp + c as usize);
            tensor[flat * width..(flat + 1) * width].copy_from_slice(table);
        }
        let axis = AxisTable::new(&grid.axis(), kp - 1);
        let mut mat = vec![0.0; p * kp];
        for i in 0..p {
            for m in 0..kp {
                mat[i * kp + m] = axis.get(i, m);
            }
        }
        for _ in 0..n {
            tensor = contract_leading(&tensor, kp, width, &mat, p);
        }
        tensor
    }
}

/// Hermite values at one point, with the Gaussian factor shared.
struct PointValues {
    tables: Vec<Vec<f64>>,
    factor: f64,
}

impl PointValues {
    fn eval(&self, k: &MultiIndex) -> f64 {
        k.components()
            .iter()
            .enumerate()
            .fold(self.factor, |acc, (j, &kj)| acc * self.tables[j][kj as usize])
    }
}

fn hermite_values(x: &[f64], kmax: usize) -> PointValues {
    let mut log_factor = 0.0;
    let tables = x
        .iter()
        .map(|&xj| {
            let (v, log2_scale) = scaled_hermite_1d(kmax, xj, None);
            log_factor += log2_scale * std::f64::consts::LN_2 - 0.5 * xj * xj;
            v
        })
        .collect();
    PointValues {
        tables,
        factor: f64::exp(log_factor),
    }
}

/// `−t√λ e^{−t√λ}`, the multiplier of `t ∂_t e^{−t√λ}`.
fn g_multiplier(lambda: f64, t: f64) -> f64 {
    let r = lambda.sqrt();
    -t * r * (-t * r).exp()
}

pub(crate) fn gfunction_series(e: &HermiteExpansion, alpha: f64, times: &[f64]) -> Result<TimeSeries> {
    check_modes(e, alpha)?;
    Ok(TimeSeries::build(e, times, |k| Some(k.clone()), |k, t| g_multiplier(k.eigenvalue(alpha), t)))
}

/// `t (∂_j ± x_j) P_t^L P_s^{L+α} f`
fn ladder_series(e: &HermiteExpansion, j: usize, sign: Sign, times: &[f64], s: f64, alpha: f64) -> Result<TimeSeries> {
    check_coordinate(j, e.n())?;
    Ok(TimeSeries::build(
        e,
        times,
        |k| match sign {
            Sign::Plus => k.lowered(j),
            Sign::Minus => Some(k.raised(j)),
        },
        |k, t| {
            let kj = k.component(j) as f64;
            let ladder = match sign {
                Sign::Plus => (2.0 * kj).sqrt(),
                Sign::Minus => -(2.0 * kj + 2.0).sqrt(),
            };
            let outer = if s > 0.0 { (-s * k.eigenvalue(alpha).sqrt()).exp() } else { 1.0 };
            t * ladder * (-t * k.eigenvalue(0.0).sqrt()).exp() * outer
        },
    ))
}

/// Samples of a function of `(x, t)` on `SpatialGrid × TimeGrid` with
/// `d` values per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeField {
    grid: SpatialGrid,
    times: TimeGrid,
    d: usize,
    values: Vec<f64>,
}

impl TimeField {
    pub fn new(grid: SpatialGrid, times: TimeGrid, d: usize, values: Vec<f64>) -> Result<Self> {
        let expected = grid.len() * times.len() * d;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field values must be finite".into()));
        }
        Ok(TimeField { grid, times, d, values })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at grid point `p` and time node `i`.
    pub fn value(&self, p: usize, i: usize) -> &[f64] {
        let w = self.times.len() * self.d;
        &self.values[p * w + i * self.d..p * w + (i + 1) * self.d]
    }

    /// Time-major samples at grid point `p`.
    pub fn profile(&self, p: usize) -> &[f64] {
        let w = self.times.len() * self.d;
        &self.values[p * w..(p + 1) * w]
    }

    /// `‖F(x_p, ·)‖_{L²(dt/t; ℓ²_d)}`
    pub fn h_norm_at(&self, p: usize) -> f64 {
        let prof = self.profile(p);
        self.times
            .weights()
            .iter()
            .enumerate()
            .map(|(i, w)| w * prof[i * self.d..(i + 1) * self.d].iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// `γ(H, B)` norm of the profile at grid point `p`.
    pub fn gamma_norm_at(&self, p: usize, sampler: &GammaSampler) -> Result<f64> {
        let op = DiscreteGammaOperator::from_samples(sampler.model(), &self.times, self.profile(p))?;
        Ok(sampler.norm(&op))
    }

    /// `(∫ ‖F(x, ·)‖²_{L²(dt/t; ℓ²_d)} dx)^{1/2}`
    pub fn l2_h_norm(&self) -> f64 {
        let terms: Vec<f64> = (0..self.grid.len())
            .into_par_iter()
            .map(|p| self.grid.weight(p) * self.h_norm_at(p).powi(2))
            .collect();
        terms.iter().sum::<f64>().sqrt()
    }

    /// Largest absolute difference against another field of equal shape.
    pub fn max_abs_diff(&self, other: &TimeField) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "field shapes differ");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn from_series(series: &TimeSeries, grid: &SpatialGrid, times: &TimeGrid) -> Result<Self> {
        TimeField::new(grid.clone(), times.clone(), series.d, series.on_grid(grid))
    }
}

fn check_grid(e: &HermiteExpansion, grid: &SpatialGrid) -> Result<()> {
    if grid.dim() != e.n() {
        return Err(Error::DimensionMismatch {
            expected: e.n(),
            found: grid.dim(),
        });
    }
    Ok(())
}

/// `G_{L+α} f(x, t) = t ∂_t P_t^{L+α} f(x)`, with multiplier
/// `−t√λ e^{−t√λ}`, `λ = 2|k| + n + α`.
pub fn gfunction(e: &HermiteExpansion, alpha: f64, grid: &SpatialGrid, times: &TimeGrid) -> Result<TimeField> {
    check_grid(e, grid)?;
    TimeField::from_series(&gfunction_series(e, alpha, times.nodes())?, grid, times)
}

/// `T_{j,±} f(x, t) = t (∂_{x_j} ± x_j) P_t^L f(x)` with zero-based `j`.
pub fn ladder_transform(
    e: &HermiteExpansion,
    j: usize,
    sign: Sign,
    grid: &SpatialGrid,
    times: &TimeGrid,
) -> Result<TimeField> {
    check_grid(e, grid)?;
    TimeField::from_series(&ladder_series(e, j, sign, times.nodes(), 0.0, 0.0)?, grid, times)
}

/// `G_{L+α} f(x, ·)` sampled on the time grid at a single point.
pub fn gfunction_at(e: &HermiteExpansion, alpha: f64, x: &[f64], times: &TimeGrid) -> Result<Vec<f64>> {
    Ok(gfunction_series(e, alpha, times.nodes())?.at_point(x))
}

/// `sup_t ‖S_t f(x)‖_B` over the time grid and the `t → 0⁺` limit `‖f(x)‖_B`.
pub fn maximal_norm(
    e: &HermiteExpansion,
    x: &[f64],
    kind: SemigroupKind,
    alpha: f64,
    model: BanachModel,
    times: &TimeGrid,
) -> Result<f64> {
    check_modes(e, alpha)?;
    if model.d() != e.d() {
        return Err(Error::DimensionMismatch {
            expected: e.d(),
            found: model.d(),
        });
    }
    let mut with_zero = Vec::with_capacity(times.len() + 1);
    with_zero.push(0.0);
    with_zero.extend_from_slice(times.nodes());
    let series = TimeSeries::build(e, &with_zero, |k| Some(k.clone()), |k, t| {
        if t == 0.0 {
            1.0
        } else {
            multiplier(kind, t, k.eigenvalue(alpha))
        }
    });
    let samples = series.at_point(x);
    Ok(samples
        .chunks_exact(e.d())
        .map(|v| model.norm(v))
        .fold(0.0, f64::max))
}

/// `sup_s ‖P_s^{L+α} ∘ inner (f)(x)‖` over `s ∈ {0⁺} ∪ sgrid`.
///
/// For `G` and ladder inner transforms the inner value is a `t`-profile on
/// `times` and is measured in `γ(H, B)`; for Riesz transforms it is a
/// vector in `B`.
pub fn composed_maximal(
    e: &HermiteExpansion,
    x: &[f64],
    alpha: f64,
    inner: InnerTransform,
    sampler: &GammaSampler,
    times: &TimeGrid,
    sgrid: &TimeGrid,
) -> Result<f64> {
    check_modes(e, alpha)?;
    let model = sampler.model();
    if model.d() != e.d() {
        return Err(Error::DimensionMismatch {
            expected: e.d(),
            found: model.d(),
        });
    }
    let mut svals = Vec::with_capacity(sgrid.len() + 1);
    svals.push(0.0);
    svals.extend_from_slice(sgrid.nodes());
    match inner {
        InnerTransform::Riesz { j, sign } => {
            let r = riesz(e, j, sign)?;
            check_modes(&r, alpha)?;
            let series = TimeSeries::build(&r, &svals, |k| Some(k.clone()), |k, s| {
                if s == 0.0 {
                    1.0
                } else {
                    (-s * k.eigenvalue(alpha).sqrt()).exp()
                }
            });
            Ok(series
                .at_point(x)
                .chunks_exact(e.d())
                .map(|v| model.norm(v))
                .fold(0.0, f64::max))
        }
        InnerTransform::G | InnerTransform::Ladder { .. } => {
            let norms: Result<Vec<f64>> = svals
                .par_iter()
                .map(|&s| {
                    let series = match inner {
                        InnerTransform::Ladder { j, sign } => ladder_series(e, j, sign, times.nodes(), s, alpha)?,
                        _ => TimeSeries::build(e, times.nodes(), |k| Some(k.clone()), |k, t| {
                            let lambda = k.eigenvalue(alpha);
                            g_multiplier(lambda, t) * (-s * lambda.sqrt()).exp()
                        }),
                    };
                    let op = DiscreteGammaOperator::from_samples(model, times, &series.at_point(x))?;
                    Ok(sampler.norm(&op))
                })
                .collect();
            Ok(norms?.into_iter().fold(0.0, f64::max))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{hermite_eval, synthesize, PI_POW_MINUS_QUARTER};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn single(k: u32, c: f64) -> HermiteExpansion {
        HermiteExpansion::scalar(1, &[(MultiIndex::scalar(k), c)])
    }

    fn h(k: u32, x: f64) -> f64 {
        hermite_eval(&MultiIndex::scalar(k), &[x])
    }

    fn small_grid() -> SpatialGrid {
        SpatialGrid::new(6.0, 0.25, 1).unwrap()
    }

    #[test]
    fn semigroup_multipliers() {
        let e = single(0, 1.0);
        let p = apply_semigroup(&e, SemigroupKind::Poisson, 1.0, 0.0).unwrap();
        assert_relative_eq!(p.coeff(&MultiIndex::scalar(0)), (-1.0f64).exp(), max_relative = 1e-15);
        let tiny = apply_semigroup(&single(3, 2.0), SemigroupKind::Heat, 1e-14, 0.0).unwrap();
        assert_relative_eq!(tiny.coeff(&MultiIndex::scalar(3)), 2.0, max_relative = 1e-12);
        assert!(apply_semigroup(&e, SemigroupKind::Heat, 0.0, 0.0).is_err());
        assert!(apply_semigroup(&e, SemigroupKind::Poisson, 1.0, -1.0).is_err());
        // α = −2 is admissible for n = 1 as long as no stored mode has λ ≤ 0.
        assert!(apply_semigroup(&single(1, 1.0), SemigroupKind::Poisson, 1.0, -2.0).is_ok());
        assert!(matches!(
            apply_semigroup(&single(0, 1.0), SemigroupKind::Poisson, 1.0, -2.0),
            Err(Error::InadmissibleMode { .. })
        ));
    }

    #[test]
    fn gfunction_spectral_value() {
        let grid = SpatialGrid::new(2.0, 0.5, 1).unwrap();
        let times = TimeGrid::new(0.5, 2.0, 3).unwrap();
        let field = gfunction(&single(0, 1.0), 0.0, &grid, &times).unwrap();
        let origin = grid.nearest_axis_index(0.0).unwrap();
        assert_abs_diff_eq!(field.value(origin, 1)[0], -(-1.0f64).exp() * PI_POW_MINUS_QUARTER, epsilon = 1e-15);
        let zero = gfunction(&HermiteExpansion::zero(1, 1, 3), 0.0, &grid, &times).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn ladder_transform_values() {
        let grid = small_grid();
        let times = TimeGrid::new(0.1, 5.0, 9).unwrap();
        let zero = ladder_transform(&single(0, 1.0), 0, Sign::Plus, &grid, &times).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        let field = ladder_transform(&single(1, 1.0), 0, Sign::Plus, &grid, &times).unwrap();
        for p in [0, 10, 30] {
            let x = grid.point(p)[0];
            for (i, &t) in times.nodes().iter().enumerate() {
                let expected = t * 2f64.sqrt() * (-t * 3f64.sqrt()).exp() * h(0, x);
                assert_abs_diff_eq!(field.value(p, i)[0], expected, epsilon = 1e-15);
            }
        }
        assert!(ladder_transform(&single(1, 1.0), 1, Sign::Plus, &grid, &times).is_err());
    }

    #[test]
    fn riesz_examples() {
        let r = riesz(&single(1, 1.0), 0, Sign::Plus).unwrap();
        assert_relative_eq!(r.coeff(&MultiIndex::scalar(0)), (2.0f64 / 3.0).sqrt(), max_relative = 1e-15);
        assert!(riesz(&single(0, 1.0), 0, Sign::Plus).unwrap().is_zero());
        let mut e = HermiteExpansion::zero(2, 1, 6);
        e.add(MultiIndex::new(vec![2, 3]), &[1.5]);
        let minus = riesz(&e, 1, Sign::Minus).unwrap();
        let expected = -1.5 * (8.0f64 / 12.0).sqrt();
        assert_relative_eq!(minus.coeff(&MultiIndex::new(vec![2, 4])), expected, max_relative = 1e-15);
    }

    #[test]
    fn inv_sqrt_examples() {
        let e = inv_sqrt(&single(0, 1.0), 0.0).unwrap();
        assert_eq!(e.coeff(&MultiIndex::scalar(0)), 1.0);
        let f = HermiteExpansion::from_dense_1d(&[0.3, -1.0, 2.0]);
        let twice = inv_sqrt(&inv_sqrt(&f, 1.5).unwrap(), 1.5).unwrap();
        for (k, c) in f.iter() {
            assert_relative_eq!(twice.coeff(k), c[0] / k.eigenvalue(1.5), max_relative = 1e-15);
        }
    }

    #[test]
    fn riesz_is_ladder_after_inv_sqrt() {
        let f = HermiteExpansion::from_dense_1d(&[0.3, -1.0, 2.0, 0.7]);
        for sign in [Sign::Plus, Sign::Minus] {
            let lhs = riesz(&f, 0, sign).unwrap();
            let rhs = ladder_apply(&inv_sqrt(&f, 0.0).unwrap(), 0, sign).unwrap();
            assert_eq!(lhs.max_abs_diff(&rhs), 0.0);
        }
    }

    #[test]
    fn coordinate_invsqrt_difference_is_derivative() {
        // R_{j,+} f − x_j L^{-1/2} f = ∂_j L^{-1/2} f
        let f = HermiteExpansion::from_dense_1d(&[1.0, 0.5, -0.25, 0.1]);
        let grid = SpatialGrid::new(5.0, 0.05, 1).unwrap();
        let riesz_samples = synthesize_on_grid(&riesz(&f, 0, Sign::Plus).unwrap(), &grid);
        let coord = coordinate_invsqrt(&f, 0, &grid).unwrap();
        let u = inv_sqrt(&f, 0.0).unwrap();
        let step = 1e-5;
        for p in (0..grid.len()).step_by(7) {
            let x = grid.point(p)[0];
            let fd = (synthesize(&u, &[x + step])[0] - synthesize(&u, &[x - step])[0]) / (2.0 * step);
            assert_abs_diff_eq!(riesz_samples[p] - coord[p], fd, epsilon = 1e-5);
        }
        let origin = grid.nearest_axis_index(0.0).unwrap();
        assert_eq!(coord[origin], 0.0);
        assert!(coordinate_invsqrt(&HermiteExpansion::zero(1, 1, 0), 0, &grid).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn energy_closed_form() {
        for &lambda in &[0.5, 1.0, 21.0] {
            assert_eq!(g_energy_factor(lambda, 0.0, f64::INFINITY), 0.25);
        }
        let f = HermiteExpansion::from_dense_1d(&[1.0, 2.0, -0.5]);
        assert_relative_eq!(g_energy(&f, 0.0, 0.0, f64::INFINITY).unwrap(), 0.25 * f.l2_norm_squared(), max_relative = 1e-15);
    }

    #[test]
    fn plancherel_by_quadrature() {
        let grid = SpatialGrid::default_for(1, 30);
        let times = TimeGrid::default();
        let f = HermiteExpansion::from_dense_1d(&[0.4, 0.0, -1.0, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.2]);
        let field = gfunction(&f, 0.0, &grid, &times).unwrap();
        assert_relative_eq!(field.l2_h_norm() / f.l2_norm(), 0.5, max_relative = 1e-3);
    }

    #[test]
    fn maximal_norm_examples() {
        let times = TimeGrid::default();
        let model = BanachModel::scalar();
        let e = single(0, 1.0);
        for &x in &[0.0, 0.8, -2.0] {
            let m = maximal_norm(&e, &[x], SemigroupKind::Heat, 0.0, model, &times).unwrap();
            assert_relative_eq!(m, h(0, x), max_relative = 1e-15);
            let p0 = maximal_norm(&e, &[x], SemigroupKind::Poisson, 0.0, model, &times).unwrap();
            let p2 = maximal_norm(&e, &[x], SemigroupKind::Poisson, 2.0, model, &times).unwrap();
            assert!(p2 <= p0);
        }
        let zero = HermiteExpansion::zero(1, 1, 0);
        assert_eq!(maximal_norm(&zero, &[0.3], SemigroupKind::Heat, 0.0, model, &times).unwrap(), 0.0);
    }

    #[test]
    fn composed_maximal_examples() {
        let times = TimeGrid::default();
        let sgrid = TimeGrid::new(1e-3, 10.0, 32).unwrap();
        let sampler = GammaSampler::new(BanachModel::scalar(), 2, 0).unwrap();
        let e = single(0, 1.0);
        for &x in &[0.0, 1.0] {
            let v = composed_maximal(&e, &[x], 0.0, InnerTransform::G, &sampler, &times, &sgrid).unwrap();
            assert_abs_diff_eq!(v, 0.5 * h(0, x), epsilon = 1e-5);
        }
        let zero = HermiteExpansion::zero(1, 1, 0);
        assert_eq!(composed_maximal(&zero, &[0.0], 0.0, InnerTransform::G, &sampler, &times, &sgrid).unwrap(), 0.0);
        let ladder = composed_maximal(&single(1, 1.0), &[0.2], 0.0, InnerTransform::Ladder { j: 0, sign: Sign::Plus }, &sampler, &times, &sgrid).unwrap();
        assert!(ladder > 0.0);
        let r = composed_maximal(&single(1, 1.0), &[0.2], 0.0, InnerTransform::Riesz { j: 0, sign: Sign::Plus }, &sampler, &times, &sgrid).unwrap();
        assert_relative_eq!(r, (2.0f64 / 3.0).sqrt() * h(0, 0.2), max_relative = 1e-14);
    }

    #[test]
    fn ladder_riesz_operator_identity() {
        let grid = small_grid();
        let times = TimeGrid::new(1e-3, 20.0, 40).unwrap();
        let f = HermiteExpansion::from_dense_1d(&[0.5, -1.0, 0.25, 2.0, 0.0, 0.3]);
        let lhs = ladder_transform(&f, 0, Sign::Plus, &grid, &times).unwrap();
        let rhs = gfunction(&riesz(&f, 0, Sign::Plus).unwrap(), 2.0, &grid, &times).unwrap();
        let diff = lhs.values().iter().zip(rhs.values()).fold(0.0f64, |m, (a, b)| m.max((a + b).abs()));
        assert!(diff <= 1e-12, "{diff}");
    }

    #[test]
    fn creation_ladder_identity_with_negative_shift() {
        let grid = SpatialGrid::new(3.0, 0.5, 3).unwrap();
        let times = TimeGrid::new(1e-2, 10.0, 12).unwrap();
        let mut f = HermiteExpansion::zero(3, 1, 3);
        f.add(MultiIndex::new(vec![0, 0, 0]), &[1.0]);
        f.add(MultiIndex::new(vec![1, 0, 2]), &[-0.5]);
        f.add(MultiIndex::new(vec![0, 2, 0]), &[0.75]);
        for j in 0..3 {
            let lhs = ladder_transform(&f, j, Sign::Minus, &grid, &times).unwrap();
            let rhs = gfunction(&riesz(&f, j, Sign::Minus).unwrap(), -2.0, &grid, &times).unwrap();
            let diff = lhs.values().iter().zip(rhs.values()).fold(0.0f64, |m, (a, b)| m.max((a + b).abs()));
            assert!(diff <= 1e-12, "{diff}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn semigroup_law(coeffs in proptest::collection::vec(-2.0f64..2.0, 1..12), t in 0.01f64..3.0, s in 0.01f64..3.0, alpha in 0.0f64..3.0) {
            let e = HermiteExpansion::from_dense_1d(&coeffs);
            for kind in [SemigroupKind::Heat, SemigroupKind::Poisson] {
                let two = apply_semigroup(&apply_semigroup(&e, kind, t, alpha).unwrap(), kind, s, alpha).unwrap();
                let one = apply_semigroup(&e, kind, t + s, alpha).unwrap();
                prop_assert!(two.max_abs_diff(&one) <= 1e-14);
            }
        }

        #[test]
        fn riesz_contracts(coeffs in proptest::collection::vec(-2.0f64..2.0, 1..16)) {
            let e = HermiteExpansion::from_dense_1d(&coeffs);
            prop_assert!(riesz(&e, 0, Sign::Plus).unwrap().l2_norm() <= e.l2_norm() + 1e-15);
        }

        #[test]
        fn composed_g_nonincreasing_in_s(k in 0u32..8, x in -3.0f64..3.0) {
            let times = TimeGrid::new(1e-3, 30.0, 128).unwrap();
            let e = single(k, 1.0);
            let sampler = GammaSampler::new(BanachModel::scalar(), 2, 0).unwrap();
            let mut last = f64::INFINITY;
            for s in [0.01, 0.1, 0.5, 2.0] {
                let series = TimeSeries::build(&e, times.nodes(), |k| Some(k.clone()), |k, t| {
                    let lambda = k.eigenvalue(0.0);
                    g_multiplier(lambda, t) * (-s * lambda.sqrt()).exp()
                });
                let op = DiscreteGammaOperator::from_samples(sampler.model(), &times, &series.at_point(&[x])).unwrap();
                let v = sampler.norm(&op);
                prop_assert!(v <= last + 1e-15);
                last = v;
            }
        }

        #[test]
        fn heat_preserves_positivity(c1 in -0.3f64..0.3, c2 in -0.2f64..0.2, t in 0.05f64..3.0) {
            // h_0 + c1 h_2 + c2 h_4 stays positive for these small perturbations
            let e = HermiteExpansion::from_dense_1d(&[1.0, 0.0, c1, 0.0, c2]);
            let grid = SpatialGrid::new(4.0, 0.1, 1).unwrap();
            let before = synthesize_on_grid(&e, &grid);
            prop_assume!(before.iter().all(|v| *v > 0.0));
            for kind in [SemigroupKind::Heat, SemigroupKind::Poisson] {
                let after = synthesize_on_grid(&apply_semigroup(&e, kind, t, 0.0).unwrap(), &grid);
                prop_assert!(after.iter().all(|v| *v > 0.0));
            }
        }
    }
}
