//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach stdout; exits nonzero if any fails.

use hermite_core::basis::{HermiteExpansion, SpatialGrid};
use hermite_core::gamma::{BanachModel, GammaSampler, TimeGrid};
use hermite_core::verify::*;
use hermite_core::Result;
use std::process::ExitCode;
use std::time::{Duration, Instant};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn summarize(reports: &[CheckReport]) -> Outcome {
    let pass = reports.iter().all(|r| r.pass);
    let detail = reports
        .iter()
        .map(|r| format!("{}: {} {:?}", r.name, if r.pass { "ok" } else { "FAILED" }, r.computed))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { pass, detail }
}

fn eigen_ladder() -> Result<Outcome> {
    Ok(summarize(&[check_eigen_ladder(20, 1)?, check_eigen_ladder(20, 2)?]))
}

fn mehler_vs_spectral() -> Result<Outcome> {
    let report = check_heat_vs_spectral_sum(&[0.1, 0.5, 1.0, 2.0, 5.0], 60)?;
    let mut out = summarize(std::slice::from_ref(&report));
    if !report.pass {
        out.detail = format!("{} ({})", out.detail, report.notes.join("; "));
    }
    Ok(out)
}

fn subordination() -> Result<Outcome> {
    Ok(summarize(&[check_kernel_vs_spectral(&[0.1, 0.5, 1.0, 2.0, 5.0], &[0.0, 2.0], 10)?]))
}

fn polarization() -> Result<Outcome> {
    let grid = SpatialGrid::new(10.0, 0.01, 1)?;
    let times = TimeGrid::default();
    let h0 = HermiteExpansion::from_dense_1d(&[1.0]);
    let h1 = HermiteExpansion::from_dense_1d(&[0.0, 1.0]);
    let same = check_polarization(&h0, &h0, 0.0, 1e3, &grid, &times)?;
    let orth = check_polarization(&h0, &h1, 0.0, 1e3, &grid, &times)?;
    let scaled = 4.0 * same.computed[0];
    let pass = same.pass && orth.pass && (scaled - 1.0).abs() <= 1e-3 && orth.computed[0].abs() <= 1e-6;
    Ok(Outcome {
        pass,
        detail: format!("4 x quadrature = {scaled:.10}, orthogonal pair = {:e}", orth.computed[0]),
    })
}

fn plancherel() -> Result<Outcome> {
    let family = random_family(10, 1, 30, SEED);
    Ok(summarize(&[check_plancherel(&family, 0.0, &SpatialGrid::new(12.0, 0.02, 1)?, &TimeGrid::default())?]))
}

fn operator_identity() -> Result<Outcome> {
    Ok(summarize(&[check_operator_identities(15, 1, 0, SEED)?, check_operator_identities(15, 3, 0, SEED)?]))
}

fn gamma_norm() -> Result<Outcome> {
    let seeds: Vec<u64> = (0..10).map(|i| SEED + i).collect();
    Ok(summarize(&[
        check_gamma_hilbert(GAMMA_SAMPLES, &seeds)?,
        check_gamma_rank_one(&[1.5, 2.0, 4.0], GAMMA_SAMPLES, SEED)?,
    ]))
}

fn kernel_envelopes() -> Result<Outcome> {
    let region = BoundRegion::default();
    let reports = KernelKind::ALL
        .iter()
        .map(|&kind| kernel_bound_ratio(kind, &region))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&reports))
}

fn function_spaces() -> Result<Outcome> {
    Ok(summarize(&[
        check_space_spot_values()?,
        atom_bound_suite(50, SEED, BanachModel::scalar(), &AtomSuiteConfig::default())?,
    ]))
}

fn norm_equivalence() -> Result<Outcome> {
    let sampler = GammaSampler::new(BanachModel::scalar(), 2, SEED)?;
    let reports = [Space::H1, Space::Bmo]
        .iter()
        .map(|&space| {
            equivalence_suite(space, &default_family(space, SEED)?, 0.0, &sampler, &EquivalenceConfig::for_space(space))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&reports))
}

type Criterion = (&'static str, Duration, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("AC-1 eigen/ladder residuals", Duration::from_secs(10), eigen_ladder),
        ("AC-2 Mehler vs spectral sum", Duration::from_secs(30), mehler_vs_spectral),
        ("AC-3 subordinated kernels vs spectral", Duration::from_secs(60), subordination),
        ("AC-4 polarization", Duration::from_secs(30), polarization),
        ("AC-5 square-function Plancherel", Duration::from_secs(600), plancherel),
        ("AC-6 operator identity", Duration::from_secs(20), operator_identity),
        ("AC-7 gamma norm", Duration::from_secs(60), gamma_norm),
        ("AC-8 kernel envelopes", Duration::from_secs(120), kernel_envelopes),
        ("AC-9 function spaces", Duration::from_secs(300), function_spaces),
        ("AC-10 norm equivalence", Duration::from_secs(600), norm_equivalence),
    ];
    let mut failures = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(o) => (o.pass && elapsed <= budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} {name} [{:.2}s / {}s] {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failures} failed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
