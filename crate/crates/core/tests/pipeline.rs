use approx::assert_abs_diff_eq;
use hermite_core::basis::{analyze, synthesize, synthesize_on_grid, HermiteExpansion, SpatialGrid};
use hermite_core::gamma::{BanachModel, GammaSampler, TimeGrid};
use hermite_core::kernels::{heat_kernel, poisson_kernel, ShiftedOperator};
use hermite_core::semigroups::{apply_semigroup, gfunction, SemigroupKind};
use hermite_core::spaces::{bmo_norm, h1_norm, BallSpec};
use hermite_core::verify::{check_eigen_ladder, CheckReport};

fn projected_bump() -> (SpatialGrid, HermiteExpansion) {
    let grid = SpatialGrid::default_for(1, 40);
    let samples: Vec<f64> = grid.points().iter().map(|x| (-(x[0] - 0.7).powi(2)).exp()).collect();
    let e = analyze(&grid, &samples, 1, 40).unwrap();
    (grid, e)
}

#[test]
fn projection_reconstructs_smooth_input() {
    let (_, e) = projected_bump();
    for x in [-1.0, 0.0, 0.7, 2.0] {
        assert_abs_diff_eq!(synthesize(&e, &[x])[0], (-(x - 0.7f64).powi(2)).exp(), epsilon = 1e-8);
    }
}

#[test]
fn spectral_semigroups_match_kernel_quadrature() {
    let (_, e) = projected_bump();
    let ygrid = SpatialGrid::new(9.0, 0.01, 1).unwrap();
    let f = synthesize_on_grid(&e, &ygrid);
    let op = ShiftedOperator::hermite(1);
    for t in [0.2, 1.0] {
        let heat = apply_semigroup(&e, SemigroupKind::Heat, t, 0.0).unwrap();
        let poisson = apply_semigroup(&e, SemigroupKind::Poisson, t, 0.0).unwrap();
        for x in [-0.5, 0.7, 1.5] {
            let mut qh = 0.0;
            let mut qp = 0.0;
            for (p, y) in ygrid.points().iter().enumerate() {
                let w = ygrid.weight(p) * f[p];
                qh += w * heat_kernel(&[x], y, t).unwrap();
                qp += w * poisson_kernel(&[x], y, t, &op).unwrap();
            }
            assert_abs_diff_eq!(qh, synthesize(&heat, &[x])[0], epsilon = 1e-8);
            assert_abs_diff_eq!(qp, synthesize(&poisson, &[x])[0], epsilon = 1e-6);
        }
    }
}

#[test]
fn scalar_gamma_norm_of_gfield_is_h_norm() {
    let (_, e) = projected_bump();
    let grid = SpatialGrid::new(6.0, 0.5, 1).unwrap();
    let times = TimeGrid::new(1e-3, 30.0, 96).unwrap();
    let field = gfunction(&e, 0.0, &grid, &times).unwrap();
    let sampler = GammaSampler::new(BanachModel::scalar(), 2, 0).unwrap();
    for p in 0..grid.len() {
        assert_abs_diff_eq!(field.gamma_norm_at(p, &sampler).unwrap(), field.h_norm_at(p), epsilon = 1e-12);
    }
}

#[test]
fn bmo_below_sup_and_h1_above_l1() {
    let (_, e) = projected_bump();
    let grid = SpatialGrid::new(8.0, 0.02, 1).unwrap();
    let samples = synthesize_on_grid(&e, &grid);
    let bmo = bmo_norm(&samples, 1, &grid, BanachModel::scalar(), &BallSpec::default()).unwrap();
    assert!(bmo.value > 0.0 && bmo.value <= 1.0 + 1e-9);
    let l1 = std::f64::consts::PI.sqrt();
    let h1 = h1_norm(&e, BanachModel::scalar(), &SpatialGrid::default_for(1, 40), &TimeGrid::default()).unwrap();
    assert!(h1 >= l1 - 1e-3, "{h1}");
}

#[test]
fn reports_survive_json() {
    let report = check_eigen_ladder(5, 1).unwrap();
    let back: CheckReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(back, report);
    assert!(back.pass);
}
