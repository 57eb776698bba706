//! Critical radius, `H¹_L` atoms and estimators for the `H¹_L` and `BMO_L`
//! norms, the area integral and the Carleson functional.

use crate::basis::{check_resolution, HermiteExpansion, SpatialGrid};
use crate::error::{Error, Result};
use crate::gamma::{BanachModel, DiscreteGammaOperator, GammaSampler, TimeGrid};
use crate::kernels::log_mehler_prefactor;
use crate::semigroups::{check_modes, gfunction_series, maximal_norm, SemigroupKind};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;
use std::fmt;

/// `ρ(x) = 1/(1+|x|)` for `|x| ≥ 1` and `½` otherwise.
pub fn critical_radius(x: &[f64]) -> f64 {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r >= 1.0 {
        1.0 / (1.0 + r)
    } else {
        0.5
    }
}

/// Lebesgue measure of a ball of radius `r` in `ℝ^n`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    match n {
        1 => 2.0 * r,
        2 => std::f64::consts::PI * r * r,
        _ => {
            let half = n as f64 / 2.0;
            std::f64::consts::PI.powf(half) / gamma(half + 1.0) * r.powi(n as i32)
        }
    }
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn check_samples(grid: &SpatialGrid, samples: &[f64], width: usize) -> Result<()> {
    if width == 0 || samples.len() != grid.len() * width {
        return Err(Error::DimensionMismatch {
            expected: grid.len() * width,
            found: samples.len(),
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomKind {
    /// Radius at most `ρ(x₀)/2`, mean zero.
    Cancel,
    /// Radius in `(ρ(x₀)/2, ρ(x₀)]`, no cancellation.
    Local,
}

/// `ℓ^q_d`-valued function sampled on a grid, meant to be supported in
/// `B(x₀, r₀)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    center: Vec<f64>,
    radius: f64,
    kind: AtomKind,
    grid: SpatialGrid,
    d: usize,
    values: Vec<f64>,
}

impl Atom {
    pub fn new(center: Vec<f64>, radius: f64, kind: AtomKind, grid: SpatialGrid, d: usize, values: Vec<f64>) -> Result<Self> {
        if center.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found: center.len(),
            });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("atom radius must be positive, got {radius}")));
        }
        check_samples(&grid, &values, d)?;
        Ok(Atom {
            center,
            radius,
            kind,
            grid,
            d,
            values,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn kind(&self) -> AtomKind {
        self.kind
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Trapezoid integral of each component.
    pub fn integral(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for (p, chunk) in self.values.chunks_exact(self.d).enumerate() {
            let w = self.grid.weight(p);
            out.iter_mut().zip(chunk).for_each(|(o, v)| *o += w * v);
        }
        out
    }

    pub fn sup_norm(&self, model: BanachModel) -> f64 {
        self.values.chunks_exact(self.d).map(|v| model.norm(v)).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Atom {
        Atom {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }
}

/// A failed clause of the atom definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AtomViolation {
    Support { outside: usize },
    Radius { radius: f64, critical: f64 },
    SupNorm { sup: f64, bound: f64 },
    MeanZero { mean: Vec<f64> },
}

impl fmt::Display for AtomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomViolation::Support { outside } => write!(f, "support violated ({outside} samples outside the ball)"),
            AtomViolation::Radius { radius, critical } => {
                write!(f, "radius violated ({radius} > rho = {critical})")
            }
            AtomViolation::SupNorm { sup, bound } => write!(f, "sup-norm violated ({sup} > {bound})"),
            AtomViolation::MeanZero { mean } => write!(f, "mean-zero violated (integral {mean:?})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomCheck {
    pub violations: Vec<AtomViolation>,
}

impl AtomCheck {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Mean-zero tolerance on the quadrature integral of each component.
pub const ATOM_MEAN_TOLERANCE: f64 = 1e-10;

/// Checks support, radius, sup bound and the conditional cancellation, and
/// reports every failed clause.
pub fn validate_atom(a: &Atom, model: BanachModel) -> Result<AtomCheck> {
    if model.d() != a.d {
        return Err(Error::DimensionMismatch {
            expected: a.d,
            found: model.d(),
        });
    }
    let mut violations = Vec::new();
    let outside = a
        .values
        .chunks_exact(a.d)
        .enumerate()
        .filter(|(p, v)| v.iter().any(|x| *x != 0.0) && distance(&a.grid.point(*p), &a.center) > a.radius * (1.0 + 1e-12))
        .count();
    if outside > 0 {
        violations.push(AtomViolation::Support { outside });
    }
    let critical = critical_radius(&a.center);
    if a.radius > critical * (1.0 + 1e-12) {
        violations.push(AtomViolation::Radius {
            radius: a.radius,
            critical,
        });
    }
    let bound = 1.0 / ball_volume(a.grid.dim(), a.radius);
    let sup = a.sup_norm(model);
    if sup > bound * (1.0 + 1e-12) {
        violations.push(AtomViolation::SupNorm { sup, bound });
    }
    if a.radius <= critical / 2.0 {
        let mean = a.integral();
        if mean.iter().any(|m| m.abs() > ATOM_MEAN_TOLERANCE) {
            violations.push(AtomViolation::MeanZero { mean });
        }
    }
    Ok(AtomCheck { violations })
}

/// Smooth bump `exp(1 − 1/(1−|u|²))` on the unit ball.
fn bump(u2: f64) -> f64 {
    if u2 < 1.0 {
        (1.0 - 1.0 / (1.0 - u2)).exp()
    } else {
        0.0
    }
}

/// Random atom: a random polynomial in `u = (x−x₀)/r₀` times a bump,
/// mean-corrected for [`AtomKind::Cancel`], scaled to a sup norm between half
/// and all of `|B|^{-1}`. The center is uniform in `|x₀| ≤ max_center`.
pub fn random_atom<R: Rng + ?Sized>(
    rng: &mut R,
    grid: &SpatialGrid,
    model: BanachModel,
    kind: AtomKind,
    max_center: f64,
) -> Result<Atom> {
    let n = grid.dim();
    let d = model.d();
    let center: Vec<f64> = loop {
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-max_center..=max_center)).collect();
        if c.iter().map(|v| v * v).sum::<f64>().sqrt() <= max_center {
            break c;
        }
    };
    let rho = critical_radius(&center);
    let radius = match kind {
        AtomKind::Cancel => rho * rng.random_range(0.125..=0.5),
        AtomKind::Local => rho * rng.random_range(0.55..=1.0),
    };
    // Per component: constant, linear and quadratic terms in each u_j, and a cubic in u_0.
    let coeffs: Vec<f64> = (0..d * (2 + 2 * n)).map(|_| rng.sample(StandardNormal)).collect();
    let poly = |u: &[f64], c: usize| {
        let a = &coeffs[c * (2 + 2 * n)..(c + 1) * (2 + 2 * n)];
        let mut v = a[0] + a[1] * u[0].powi(3);
        for (j, uj) in u.iter().enumerate() {
            v += a[2 + j] * uj + a[2 + n + j] * uj * uj;
        }
        v
    };
    let mut values = vec![0.0; grid.len() * d];
    let mut bump_mass = 0.0;
    let mut poly_mass = vec![0.0; d];
    let mut inside = Vec::new();
    for p in 0..grid.len() {
        let x = grid.point(p);
        let u: Vec<f64> = x.iter().zip(&center).map(|(a, b)| (a - b) / radius).collect();
        let psi = bump(u.iter().map(|v| v * v).sum());
        if psi == 0.0 {
            continue;
        }
        inside.push((p, psi));
        bump_mass += grid.weight(p) * psi;
        for c in 0..d {
            let v = poly(&u, c) * psi;
            values[p * d + c] = v;
            poly_mass[c] += grid.weight(p) * v;
        }
    }
    if inside.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if kind == AtomKind::Cancel {
        for &(p, psi) in &inside {
            for c in 0..d {
                values[p * d + c] -= poly_mass[c] / bump_mass * psi;
            }
        }
    }
    let sup = values.chunks_exact(d).map(|v| model.norm(v)).fold(0.0, f64::max);
    if sup == 0.0 {
        return Err(Error::InvalidParameter("degenerate atom profile".into()));
    }
    let target = rng.random_range(0.5..=1.0) / ball_volume(n, radius);
    values.iter_mut().for_each(|v| *v *= target / sup);
    Atom::new(center, radius, kind, grid.clone(), d, values)
}

/// `count` atoms alternating between the two kinds, reproducible from `seed`.
pub fn random_atoms(count: usize, seed: u64, grid: &SpatialGrid, model: BanachModel, max_center: f64) -> Result<Vec<Atom>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let kind = if i % 2 == 0 { AtomKind::Cancel } else { AtomKind::Local };
            random_atom(&mut rng, grid, model, kind, max_center)
        })
        .collect()
}

/// Semigroup whose pointwise supremum is taken by the sampled estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaximalKind {
    Heat,
    Poisson { alpha: f64 },
}

/// Heat flow `W_s f(x) = ∫ W_s(x,y) f(y) dy` of a sampled function, by
/// trapezoid quadrature over its nonzero samples.
#[derive(Debug, Clone)]
pub struct SampledHeatFlow {
    grid: SpatialGrid,
    d: usize,
    samples: Vec<f64>,
    nodes: Vec<Vec<f64>>,
    masses: Vec<f64>,
}

/// Exponent below which a kernel value is dropped.
const KERNEL_CUTOFF: f64 = 60.0;

impl SampledHeatFlow {
    pub fn new(grid: &SpatialGrid, samples: &[f64], d: usize) -> Result<Self> {
        check_samples(grid, samples, d)?;
        let mut nodes = Vec::new();
        let mut masses = Vec::new();
        for (p, v) in samples.chunks_exact(d).enumerate() {
            if v.iter().any(|x| *x != 0.0) {
                nodes.push(grid.point(p));
                let w = grid.weight(p);
                masses.extend(v.iter().map(|x| w * x));
            }
        }
        Ok(SampledHeatFlow {
            grid: grid.clone(),
            d,
            samples: samples.to_vec(),
            nodes,
            masses,
        })
    }

    pub fn from_atom(a: &Atom) -> Self {
        SampledHeatFlow::new(&a.grid, &a.values, a.d).expect("atoms hold consistent samples")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// The `s → 0⁺` limit, by multilinear interpolation; zero off the grid.
    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        self.grid
            .interpolate(&self.samples, self.d, x)
            .unwrap_or_else(|| vec![0.0; self.d])
    }

    /// `W_s f(x)`
    pub fn heat(&self, x: &[f64], s: f64) -> Vec<f64> {
        let n = x.len() as f64;
        let log_pref = 0.5 * n * log_mehler_prefactor(s);
        let (coth, tanh) = (1.0 / s.tanh(), s.tanh());
        let mut out = vec![0.0; self.d];
        for (y, m) in self.nodes.iter().zip(self.masses.chunks_exact(self.d)) {
            let (mut minus, mut plus) = (0.0, 0.0);
            for (a, b) in x.iter().zip(y) {
                minus += (a - b) * (a - b);
                plus += (a + b) * (a + b);
            }
            let expo = 0.25 * (coth * minus + tanh * plus);
            if expo > KERNEL_CUTOFF {
                continue;
            }
            let k = (log_pref - expo).exp();
            out.iter_mut().zip(m).for_each(|(o, v)| *o += k * v);
        }
        out
    }

    /// `sup_t ‖S_t f(x)‖_B` over the time grid and `t → 0⁺`.
    ///
    /// The Poisson values subordinate the heat values on the same grid,
    /// `P_t = ∫ t/(2√π) s^{-3/2} e^{-t²/4s} e^{-αs} W_s ds`, with the piece
    /// `s < t_min` replaced by its exact weight `erfc(t/(2√t_min))` times
    /// `W_{t_min} f(x)`.
    pub fn maximal(&self, x: &[f64], model: BanachModel, times: &TimeGrid, kind: MaximalKind) -> f64 {
        let weights = SubordinationWeights::new(times, kind);
        self.maximal_many(x, model, times, std::slice::from_ref(&weights))[0]
    }

    fn maximal_many(&self, x: &[f64], model: BanachModel, times: &TimeGrid, kinds: &[SubordinationWeights]) -> Vec<f64> {
        let d = self.d;
        let start = model.norm(&self.value(x));
        let heat: Vec<Vec<f64>> = times.nodes().iter().map(|&s| self.heat(x, s)).collect();
        kinds
            .iter()
            .map(|weights| match weights {
                SubordinationWeights::Heat => heat.iter().map(|v| model.norm(v)).fold(start, f64::max),
                SubordinationWeights::Poisson { head, matrix } => {
                    let ns = heat.len();
                    let mut best = start;
                    let mut v = vec![0.0; d];
                    for (i, &hd) in head.iter().enumerate() {
                        v.iter_mut().zip(&heat[0]).for_each(|(o, h)| *o = hd * h);
                        for (q, h) in matrix[i * ns..(i + 1) * ns].iter().zip(&heat) {
                            v.iter_mut().zip(h).for_each(|(o, hv)| *o += q * hv);
                        }
                        best = best.max(model.norm(&v));
                    }
                    best
                }
            })
            .collect()
    }
}

/// Weights turning heat values on a time grid into semigroup values.
enum SubordinationWeights {
    Heat,
    Poisson { head: Vec<f64>, matrix: Vec<f64> },
}

impl SubordinationWeights {
    fn new(times: &TimeGrid, kind: MaximalKind) -> Self {
        match kind {
            MaximalKind::Heat => SubordinationWeights::Heat,
            MaximalKind::Poisson { alpha } => {
                let s_min = times.t_min();
                let head = times.nodes().iter().map(|&t| erfc(t / (2.0 * s_min.sqrt()))).collect();
                let matrix = times
                    .nodes()
                    .iter()
                    .flat_map(|&t| {
                        times.nodes().iter().zip(times.weights()).map(move |(&s, &w)| {
                            t / (2.0 * std::f64::consts::PI.sqrt()) * w / s.sqrt() * (-t * t / (4.0 * s) - alpha * s).exp()
                        })
                    })
                    .collect();
                SubordinationWeights::Poisson { head, matrix }
            }
        }
    }
}

/// `∫ sup_t ‖W_t f(x)‖_B dx` by the spatial trapezoid rule, `t → 0⁺` included.
pub fn h1_norm(e: &HermiteExpansion, model: BanachModel, grid: &SpatialGrid, times: &TimeGrid) -> Result<f64> {
    if grid.dim() != e.n() {
        return Err(Error::DimensionMismatch {
            expected: e.n(),
            found: grid.dim(),
        });
    }
    check_resolution(grid, e.max_degree())?;
    let values: Result<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|p| Ok(grid.weight(p) * maximal_norm(e, &grid.point(p), SemigroupKind::Heat, 0.0, model, times)?))
        .collect();
    Ok(values?.iter().sum())
}

/// `∫ sup_t ‖S_t f(x)‖_B dx` for a sampled function, with `x` on `eval`.
pub fn h1_norm_sampled(
    flow: &SampledHeatFlow,
    model: BanachModel,
    eval: &SpatialGrid,
    times: &TimeGrid,
    kind: MaximalKind,
) -> Result<f64> {
    Ok(h1_norms_sampled(flow, model, eval, times, &[kind])?[0])
}

/// [`h1_norm_sampled`] for several semigroups, sharing the heat values.
pub fn h1_norms_sampled(
    flow: &SampledHeatFlow,
    model: BanachModel,
    eval: &SpatialGrid,
    times: &TimeGrid,
    kinds: &[MaximalKind],
) -> Result<Vec<f64>> {
    if model.d() != flow.d {
        return Err(Error::DimensionMismatch {
            expected: flow.d,
            found: model.d(),
        });
    }
    if eval.dim() != flow.grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: flow.grid.dim(),
            found: eval.dim(),
        });
    }
    let weights: Vec<SubordinationWeights> = kinds.iter().map(|&k| SubordinationWeights::new(times, k)).collect();
    let per_point: Vec<Vec<f64>> = (0..eval.len())
        .into_par_iter()
        .map(|p| flow.maximal_many(&eval.point(p), model, times, &weights))
        .collect();
    let mut totals = vec![0.0; kinds.len()];
    for (p, values) in per_point.iter().enumerate() {
        totals.iter_mut().zip(values).for_each(|(t, v)| *t += eval.weight(p) * v);
    }
    Ok(totals)
}

/// `∫ sup_s ‖W_s(G_{L+α} f)(x, ·)‖_{γ(H,B)} dx` on `grid`, with the sup taken
/// over `s ∈ {0⁺} ∪ sgrid` and `t` discretized by `times`.
pub fn h1_norm_square_function(
    e: &HermiteExpansion,
    alpha: f64,
    sampler: &GammaSampler,
    grid: &SpatialGrid,
    times: &TimeGrid,
    sgrid: &TimeGrid,
) -> Result<f64> {
    check_modes(e, alpha)?;
    let model = sampler.model();
    if model.d() != e.d() || grid.dim() != e.n() {
        return Err(Error::DimensionMismatch {
            expected: e.d(),
            found: model.d(),
        });
    }
    let d = e.d();
    let nt = times.len();
    let terms: Vec<_> = e.iter().collect();
    let mut svals = vec![0.0];
    svals.extend_from_slice(sgrid.nodes());
    let decay = DMatrix::from_fn(svals.len(), terms.len(), |i, k| (-svals[i] * terms[k].0.eigenvalue(0.0)).exp());
    let profiles: Vec<Vec<f64>> = terms
        .iter()
        .map(|(k, _)| {
            let r = k.eigenvalue(alpha).sqrt();
            times.nodes().iter().map(|&t| -t * r * (-t * r).exp()).collect()
        })
        .collect();
    let values: Result<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|p| {
            let x = grid.point(p);
            let mut m = DMatrix::zeros(terms.len(), nt * d);
            for (row, (k, c)) in terms.iter().enumerate() {
                let hk = crate::basis::hermite_eval(k, &x);
                for (i, g) in profiles[row].iter().enumerate() {
                    for (ci, cv) in c.iter().enumerate() {
                        m[(row, i * d + ci)] = g * cv * hk;
                    }
                }
            }
            let fields = &decay * m;
            let mut best: f64 = 0.0;
            for i in 0..svals.len() {
                let samples: Vec<f64> = fields.row(i).iter().copied().collect();
                let op = DiscreteGammaOperator::from_samples(model, times, &samples)?;
                best = best.max(sampler.norm(&op));
            }
            Ok(grid.weight(p) * best)
        })
        .collect();
    Ok(values?.iter().sum())
}

/// Whether a ball was sampled for mean oscillation or for mean size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BallRole {
    Oscillation,
    Size,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
    pub role: BallRole,
}

impl Ball {
    /// Cell midpoints of the bounding cube that fall inside the ball, with
    /// between 16 and 128 cells per axis and spacing near `h` when allowed.
    pub fn lattice(&self, h: f64) -> Vec<Vec<f64>> {
        let cells = (2.0 * self.radius / h).ceil().clamp(16.0, 128.0) as usize;
        ball_midpoints(&self.center, self.radius, cells).0
    }
}

/// Ball family on a lattice of centers in `[-extent, extent]^n`, with radii
/// `ρ(a)2^{-m}`, `m = 1..=levels` for oscillation and `ρ(a)2^m`,
/// `m = 0..=levels` for size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    spacing: f64,
    extent: f64,
    levels: u32,
}

impl BallSpec {
    pub fn new(spacing: f64, extent: f64, levels: u32) -> Result<Self> {
        if !(spacing > 0.0 && extent >= 0.0 && spacing.is_finite() && extent.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ball lattice needs spacing > 0 and extent ≥ 0, got {spacing}, {extent}"
            )));
        }
        Ok(BallSpec { spacing, extent, levels })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Half the center spacing.
    pub fn refined(&self) -> Self {
        BallSpec {
            spacing: self.spacing / 2.0,
            ..self.clone()
        }
    }

    pub fn centers(&self, n: usize) -> Vec<Vec<f64>> {
        let m = (self.extent / self.spacing + 1e-9).floor() as i64;
        let side = (2 * m + 1) as usize;
        (0..side.pow(n as u32))
            .map(|mut flat| {
                let mut c = vec![0.0; n];
                for slot in c.iter_mut().rev() {
                    *slot = ((flat % side) as i64 - m) as f64 * self.spacing;
                    flat /= side;
                }
                c
            })
            .collect()
    }

    pub fn balls(&self, n: usize) -> Vec<Ball> {
        let mut out = Vec::new();
        for a in self.centers(n) {
            let rho = critical_radius(&a);
            for m in 1..=self.levels {
                out.push(Ball {
                    center: a.clone(),
                    radius: rho * 0.5f64.powi(m as i32),
                    role: BallRole::Oscillation,
                });
            }
            for m in 0..=self.levels {
                out.push(Ball {
                    center: a.clone(),
                    radius: rho * 2f64.powi(m as i32),
                    role: BallRole::Size,
                });
            }
        }
        out
    }
}

impl Default for BallSpec {
    /// Centers every 0.25 in `[-4, 4]^n`, four levels.
    fn default() -> Self {
        BallSpec::new(0.25, 4.0, 4).expect("default ball family is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmoEstimate {
    /// Larger of the two suprema.
    pub value: f64,
    /// `sup ⨍_B ‖f − f_B‖` over balls with `r < ρ(a)`.
    pub oscillation: f64,
    /// `sup ⨍_B ‖f‖` over balls with `r ≥ ρ(a)`.
    pub size: f64,
    /// Balls with no interior sample inside the grid.
    pub skipped: usize,
}

/// `BMO_L` estimate of `ℓ^q_d`-valued samples.
pub fn bmo_norm(samples: &[f64], d: usize, grid: &SpatialGrid, model: BanachModel, balls: &BallSpec) -> Result<BmoEstimate> {
    if model.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: model.d(),
        });
    }
    bmo_norm_with(samples, d, grid, balls, |v| model.norm(v))
}

/// `BMO_L` estimate of samples with `width` values per point, measured by
/// an arbitrary norm.
pub fn bmo_norm_with(
    samples: &[f64],
    width: usize,
    grid: &SpatialGrid,
    balls: &BallSpec,
    norm: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<BmoEstimate> {
    check_samples(grid, samples, width)?;
    let family = balls.balls(grid.dim());
    let results: Vec<Option<(BallRole, f64)>> = family
        .par_iter()
        .map(|ball| {
            let values: Vec<Vec<f64>> = ball
                .lattice(grid.spacing())
                .iter()
                .filter_map(|x| grid.interpolate(samples, width, x))
                .collect();
            if values.is_empty() {
                return None;
            }
            let count = values.len() as f64;
            let avg = match ball.role {
                BallRole::Size => values.iter().map(|v| norm(v)).sum::<f64>() / count,
                BallRole::Oscillation => {
                    let mut mean = vec![0.0; width];
                    for v in &values {
                        mean.iter_mut().zip(v).for_each(|(m, x)| *m += x / count);
                    }
                    values
                        .iter()
                        .map(|v| {
                            let diff: Vec<f64> = v.iter().zip(&mean).map(|(a, b)| a - b).collect();
                            norm(&diff)
                        })
                        .sum::<f64>()
                        / count
                }
            };
            Some((ball.role, avg))
        })
        .collect();
    let mut est = BmoEstimate {
        value: 0.0,
        oscillation: 0.0,
        size: 0.0,
        skipped: 0,
    };
    for r in results {
        match r {
            None => est.skipped += 1,
            Some((BallRole::Oscillation, v)) => est.oscillation = est.oscillation.max(v),
            Some((BallRole::Size, v)) => est.size = est.size.max(v),
        }
    }
    est.value = est.oscillation.max(est.size);
    Ok(est)
}

/// Time discretization and per-axis midpoint count for cone and box integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeConfig {
    pub times: TimeGrid,
    pub nodes: usize,
}

impl ConeConfig {
    pub fn new(times: TimeGrid, nodes: usize) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::InvalidParameter("cone quadrature needs at least one node".into()));
        }
        Ok(ConeConfig { times, nodes })
    }

    /// Twice the time nodes and twice the spatial nodes.
    pub fn refined(&self) -> Self {
        ConeConfig {
            times: self.times.refined(),
            nodes: 2 * self.nodes,
        }
    }
}

impl Default for ConeConfig {
    /// 128 times on `[1e-4, 40]`, 32 nodes per axis.
    fn default() -> Self {
        ConeConfig {
            times: TimeGrid::new(1e-4, 40.0, 128).expect("valid time grid"),
            nodes: 32,
        }
    }
}

/// Midpoint nodes of the cube `[c−r, c+r]^n` that fall in the open ball.
fn ball_midpoints(center: &[f64], r: f64, m: usize) -> (Vec<Vec<f64>>, f64) {
    let n = center.len();
    let step = 2.0 * r / m as f64;
    let mut out = Vec::new();
    for flat in 0..m.pow(n as u32) {
        let mut rest = flat;
        let mut y = vec![0.0; n];
        for j in (0..n).rev() {
            y[j] = center[j] - r + step * ((rest % m) as f64 + 0.5);
            rest /= m;
        }
        if distance(&y, center) < r {
            out.push(y);
        }
    }
    (out, step.powi(n as i32))
}

fn check_scalar(e: &HermiteExpansion) -> Result<()> {
    if e.d() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: e.d(),
        });
    }
    Ok(())
}

/// `S_α f(x) = (∫∫_{|x−y|<t} |G_{L+α} f(y,t)|² dy dt / t^{n+1})^{1/2}`.
pub fn area_integral(e: &HermiteExpansion, x: &[f64], alpha: f64, cfg: &ConeConfig) -> Result<f64> {
    check_scalar(e)?;
    if x.len() != e.n() {
        return Err(Error::DimensionMismatch {
            expected: e.n(),
            found: x.len(),
        });
    }
    let series = gfunction_series(e, alpha, cfg.times.nodes())?;
    let n = e.n() as i32;
    let terms: Vec<f64> = cfg
        .times
        .nodes()
        .par_iter()
        .zip(cfg.times.weights())
        .enumerate()
        .map(|(i, (&t, &w))| {
            let (ys, vol) = ball_midpoints(x, t, cfg.nodes);
            let inner: f64 = ys.iter().map(|y| series.at_time(y, i)[0].powi(2)).sum();
            w * t.powi(-n) * vol * inner
        })
        .collect();
    Ok(terms.iter().sum::<f64>().sqrt())
}

/// `sup_{B ∋ x} (|B|^{-1} ∫_0^{r(B)} ∫_B |G_{L+α} f(y,t)|² dy dt/t)^{1/2}` over
/// the balls of `balls` that contain `x`; zero when none does.
pub fn carleson_functional(e: &HermiteExpansion, x: &[f64], alpha: f64, balls: &BallSpec, cfg: &ConeConfig) -> Result<f64> {
    check_scalar(e)?;
    check_modes(e, alpha)?;
    if x.len() != e.n() {
        return Err(Error::DimensionMismatch {
            expected: e.n(),
            found: x.len(),
        });
    }
    let family: Vec<Ball> = balls
        .balls(e.n())
        .into_iter()
        .filter(|b| distance(&b.center, x) < b.radius && b.radius > cfg.times.t_min())
        .collect();
    let values: Result<Vec<f64>> = family
        .par_iter()
        .map(|ball| {
            let times = TimeGrid::new(cfg.times.t_min(), ball.radius, cfg.times.len())?;
            let series = gfunction_series(e, alpha, times.nodes())?;
            let (ys, vol) = ball_midpoints(&ball.center, ball.radius, cfg.nodes);
            let mut box_integral = 0.0;
            for y in &ys {
                let prof = series.at_point(y);
                box_integral += vol * prof.iter().zip(times.weights()).map(|(v, w)| w * v * v).sum::<f64>();
            }
            Ok((box_integral / ball_volume(e.n(), ball.radius)).sqrt())
        })
        .collect();
    Ok(values?.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{hermite_eval, synthesize_on_grid, MultiIndex, PI_POW_MINUS_QUARTER};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn h0() -> HermiteExpansion {
        HermiteExpansion::from_dense_1d(&[1.0])
    }

    #[test]
    fn critical_radius_values() {
        assert_eq!(critical_radius(&[0.0]), 0.5);
        assert_eq!(critical_radius(&[1.0]), 0.5);
        assert_eq!(critical_radius(&[-3.0]), 0.25);
        assert_eq!(critical_radius(&[3.0, 4.0]), 1.0 / 6.0);
        assert_relative_eq!(ball_volume(2, 1.0), std::f64::consts::PI, max_relative = 1e-14);
        assert_eq!(ball_volume(1, 0.3), 0.6);
    }

    fn constant_atom(center: f64, radius: f64) -> Atom {
        let grid = SpatialGrid::new(6.0, 0.005, 1).unwrap();
        let height = 1.0 / ball_volume(1, radius);
        let values = grid
            .points()
            .iter()
            .map(|x| if (x[0] - center).abs() < radius { height } else { 0.0 })
            .collect();
        Atom::new(vec![center], radius, AtomKind::Local, grid, 1, values).unwrap()
    }

    #[test]
    fn atom_validation() {
        let model = BanachModel::scalar();
        let rho = critical_radius(&[2.0]);
        assert!(validate_atom(&constant_atom(2.0, rho), model).unwrap().is_valid());
        let small = validate_atom(&constant_atom(2.0, rho / 4.0), model).unwrap();
        assert_eq!(small.violations.len(), 1);
        assert!(small.violations[0].to_string().starts_with("mean-zero violated"));
        let big = validate_atom(&constant_atom(2.0, 2.0 * rho), model).unwrap();
        assert!(matches!(big.violations[0], AtomViolation::Radius { .. }));
        let tall = validate_atom(&constant_atom(2.0, rho).scaled(1.5), model).unwrap();
        assert!(matches!(tall.violations[0], AtomViolation::SupNorm { .. }));
        let grid = SpatialGrid::new(3.0, 0.01, 1).unwrap();
        let zero = Atom::new(vec![0.0], 0.1, AtomKind::Cancel, grid.clone(), 1, vec![0.0; grid.len()]).unwrap();
        assert!(validate_atom(&zero, model).unwrap().is_valid());
        let mut stray = vec![0.0; grid.len()];
        stray[0] = 1e-3;
        let off = Atom::new(vec![0.0], 0.5, AtomKind::Local, grid, 1, stray).unwrap();
        assert!(matches!(validate_atom(&off, model).unwrap().violations[0], AtomViolation::Support { .. }));
    }

    #[test]
    fn random_atoms_are_valid() {
        let grid = SpatialGrid::new(6.0, 0.005, 1).unwrap();
        for model in [BanachModel::scalar(), BanachModel::new(3, 1.5).unwrap()] {
            let atoms = random_atoms(20, 7, &grid, model, 4.0).unwrap();
            for a in &atoms {
                let check = validate_atom(a, model).unwrap();
                assert!(check.is_valid(), "{:?}", check.violations);
                assert!(a.sup_norm(model) >= 0.5 / ball_volume(1, a.radius()) * (1.0 - 1e-12));
            }
            assert_eq!(atoms, random_atoms(20, 7, &grid, model, 4.0).unwrap());
        }
        let grid2 = SpatialGrid::new(3.0, 0.02, 2).unwrap();
        let atoms = random_atoms(4, 1, &grid2, BanachModel::scalar(), 1.5).unwrap();
        assert!(atoms.iter().all(|a| validate_atom(a, BanachModel::scalar()).unwrap().is_valid()));
    }

    #[test]
    fn h1_norm_of_ground_state() {
        let grid = SpatialGrid::default_for(1, 2);
        let times = TimeGrid::default();
        let v = h1_norm(&h0(), BanachModel::scalar(), &grid, &times).unwrap();
        assert_abs_diff_eq!(v, 2f64.sqrt() * std::f64::consts::PI.powf(0.25), epsilon = 1e-3);
        let zero = HermiteExpansion::zero(1, 1, 0);
        assert_eq!(h1_norm(&zero, BanachModel::scalar(), &grid, &times).unwrap(), 0.0);
        let e = HermiteExpansion::from_dense_1d(&[0.5, -1.0, 0.25]);
        let coarse = TimeGrid::new(1e-3, 20.0, 40).unwrap();
        let base = h1_norm(&e, BanachModel::scalar(), &grid, &coarse).unwrap();
        let scaled = h1_norm(&e.scaled(-3.0), BanachModel::scalar(), &grid, &coarse).unwrap();
        assert_relative_eq!(scaled, 3.0 * base, max_relative = 1e-13);
        let rough = SpatialGrid::new(10.0, 0.2, 1).unwrap();
        assert!(matches!(h1_norm(&HermiteExpansion::scalar(1, &[(MultiIndex::scalar(29), 1.0)]), BanachModel::scalar(), &rough, &coarse), Err(Error::UnresolvedDegree { .. })));
    }

    #[test]
    fn sampled_heat_flow_matches_spectral() {
        let grid = SpatialGrid::new(9.0, 0.005, 1).unwrap();
        let samples = synthesize_on_grid(&h0(), &grid);
        let flow = SampledHeatFlow::new(&grid, &samples, 1).unwrap();
        for &s in &[1e-3f64, 0.1, 1.0, 5.0] {
            for &x in &[0.0, 0.7, -2.0] {
                let expected = (-s).exp() * hermite_eval(&MultiIndex::scalar(0), &[x]);
                assert_abs_diff_eq!(flow.heat(&[x], s)[0], expected, epsilon = 1e-9);
            }
        }
        let times = TimeGrid::new(1e-4, 40.0, 256).unwrap();
        for &x in &[0.0, 1.0] {
            let heat = flow.maximal(&[x], BanachModel::scalar(), &times, MaximalKind::Heat);
            assert_relative_eq!(heat, hermite_eval(&MultiIndex::scalar(0), &[x]), max_relative = 1e-6);
        }
        // Poisson of h_0 at a fixed t against the spectral factor e^{-t}.
        let x = [0.3];
        let t = 0.8;
        let s_min = times.t_min();
        let heat: Vec<f64> = times.nodes().iter().map(|&s| flow.heat(&x, s)[0]).collect();
        let mut v = erfc(t / (2.0 * s_min.sqrt())) * heat[0];
        for ((&s, &w), h) in times.nodes().iter().zip(times.weights()).zip(&heat) {
            v += t / (2.0 * std::f64::consts::PI.sqrt()) * w / s.sqrt() * (-t * t / (4.0 * s)).exp() * h;
        }
        assert_relative_eq!(v, (-t).exp() * hermite_eval(&MultiIndex::scalar(0), &x), max_relative = 1e-4);
    }

    #[test]
    fn h1_sampled_agrees_with_spectral() {
        let grid = SpatialGrid::new(9.0, 0.005, 1).unwrap();
        let e = HermiteExpansion::from_dense_1d(&[1.0, 0.4, -0.3]);
        let flow = SampledHeatFlow::new(&grid, &synthesize_on_grid(&e, &grid), 1).unwrap();
        let eval = SpatialGrid::new(9.0, 0.05, 1).unwrap();
        let times = TimeGrid::new(1e-4, 40.0, 96).unwrap();
        let sampled = h1_norm_sampled(&flow, BanachModel::scalar(), &eval, &times, MaximalKind::Heat).unwrap();
        let spectral = h1_norm(&e, BanachModel::scalar(), &SpatialGrid::new(9.0, 0.05, 1).unwrap(), &times).unwrap();
        assert_relative_eq!(sampled, spectral, max_relative = 1e-6);
    }

    #[test]
    fn square_function_h1_of_ground_state() {
        // ‖W_s G h_0(x, ·)‖_H = ½ e^{-s} h_0(x), so the sup sits at s → 0.
        let grid = SpatialGrid::new(9.0, 0.05, 1).unwrap();
        let times = TimeGrid::new(1e-4, 40.0, 256).unwrap();
        let sgrid = TimeGrid::new(1e-3, 10.0, 16).unwrap();
        let sampler = GammaSampler::new(BanachModel::scalar(), 2, 0).unwrap();
        let v = h1_norm_square_function(&h0(), 0.0, &sampler, &grid, &times, &sgrid).unwrap();
        assert_relative_eq!(v, 0.5 * 2f64.sqrt() * std::f64::consts::PI.powf(0.25), max_relative = 1e-4);
    }

    #[test]
    fn bmo_examples() {
        let grid = SpatialGrid::new(8.0, 0.02, 1).unwrap();
        let balls = BallSpec::new(0.5, 4.0, 3).unwrap();
        let model = BanachModel::scalar();
        let one = vec![1.0; grid.len()];
        let est = bmo_norm(&one, 1, &grid, model, &balls).unwrap();
        assert_abs_diff_eq!(est.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.oscillation, 0.0, epsilon = 1e-12);
        assert_eq!(est.skipped, 0);
        let zero = bmo_norm(&vec![0.0; grid.len()], 1, &grid, model, &balls).unwrap();
        assert_eq!(zero.value, 0.0);
        let g = synthesize_on_grid(&h0(), &grid);
        let coarse = bmo_norm(&g, 1, &grid, model, &balls).unwrap().value;
        let fine = bmo_norm(&g, 1, &grid, model, &balls.refined()).unwrap().value;
        assert!(coarse > 0.0 && coarse <= PI_POW_MINUS_QUARTER);
        assert!((fine / coarse - 1.0).abs() <= 0.05);
        let far = BallSpec::new(1.0, 30.0, 0).unwrap();
        assert!(bmo_norm(&one, 1, &grid, model, &far).unwrap().skipped > 0);
    }

    #[test]
    fn bmo_against_dense_ball_average() {
        // Size average of h_0 over B(0, ½) by a dense independent midpoint rule.
        let grid = SpatialGrid::new(4.0, 0.005, 1).unwrap();
        let g = synthesize_on_grid(&h0(), &grid);
        let balls = BallSpec::new(1.0, 0.0, 0).unwrap();
        let est = bmo_norm(&g, 1, &grid, BanachModel::scalar(), &balls).unwrap();
        let dense: f64 = (0..100_000)
            .map(|i| hermite_eval(&MultiIndex::scalar(0), &[-0.5 + (i as f64 + 0.5) * 1e-5]))
            .sum::<f64>()
            / 100_000.0;
        assert_relative_eq!(est.size, dense, max_relative = 1e-4);
    }

    #[test]
    fn area_integral_examples() {
        let cfg = ConeConfig::new(TimeGrid::new(1e-4, 40.0, 96).unwrap(), 24).unwrap();
        assert_eq!(area_integral(&HermiteExpansion::zero(1, 1, 0), &[0.2], 0.0, &cfg).unwrap(), 0.0);
        for &x in &[0.3, 1.7] {
            let a = area_integral(&h0(), &[x], 0.0, &cfg).unwrap();
            let b = area_integral(&h0(), &[-x], 0.0, &cfg).unwrap();
            assert!(a.is_finite() && a > 0.0);
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
        assert!(area_integral(&h0(), &[0.0], -1.0, &cfg).is_err());
    }

    #[test]
    fn carleson_examples() {
        let cfg = ConeConfig::new(TimeGrid::new(1e-4, 40.0, 48).unwrap(), 16).unwrap();
        let balls = BallSpec::new(0.5, 2.0, 2).unwrap();
        assert_eq!(carleson_functional(&HermiteExpansion::zero(1, 1, 0), &[0.1], 0.0, &balls, &cfg).unwrap(), 0.0);
        let e = h0();
        let small = carleson_functional(&e, &[0.1], 0.0, &balls, &cfg).unwrap();
        let larger = carleson_functional(&e, &[0.1], 0.0, &BallSpec::new(0.5, 3.0, 3).unwrap(), &cfg).unwrap();
        assert!(small > 0.0 && larger >= small);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn h1_dominates_l1(coeffs in proptest::collection::vec(-1.0f64..1.0, 1..5)) {
            let e = HermiteExpansion::from_dense_1d(&coeffs);
            let grid = SpatialGrid::new(8.0, 0.05, 1).unwrap();
            let times = TimeGrid::new(1e-3, 20.0, 24).unwrap();
            let l1: f64 = synthesize_on_grid(&e, &grid).iter().enumerate().map(|(p, v)| grid.weight(p) * v.abs()).sum();
            let h1 = h1_norm(&e, BanachModel::scalar(), &grid, &times).unwrap();
            prop_assert!(h1 >= l1 - 1e-14);
        }

        #[test]
        fn bmo_vanishes_only_at_zero(values in proptest::collection::vec(-1.0f64..1.0, 81)) {
            let grid = SpatialGrid::new(2.0, 0.05, 1).unwrap();
            let balls = BallSpec::new(0.25, 2.0, 2).unwrap();
            let est = bmo_norm(&values, 1, &grid, BanachModel::scalar(), &balls).unwrap();
            prop_assert_eq!(est.value == 0.0, values.iter().all(|v| *v == 0.0));
        }
    }
}
