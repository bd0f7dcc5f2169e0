use std::time::Instant;

use super::config::{Case, CaseKind, RunConfig};
use super::report::ReportRecord;
use crate::geometry::{boundary_vanishing_check, BoundaryFrame};
use crate::integrate::{
    radius_sweep, spin_probe, verify_theorem, TolerancePolicy, Verdict, VerifyOptions, DEFAULT_ORDERS,
};
use crate::seed::{derive_seed, label, SeedStream};
use crate::spaces::SpaceSpec;

/// Largest accepted `|Ω pullback| / reference` on a homotopy boundary.
pub const BOUNDARY_TOL: f64 = 1e-8;
/// Smallest accepted ratio for interior-displaced frames.
pub const POWER_MIN: f64 = 1e-3;
pub const DEFAULT_FRAMES: usize = 20;
pub const DEFAULT_BUDGET: u64 = 100_000;
pub const DEFAULT_CHUNKS: usize = 16;

fn fill_spec(row: &mut ReportRecord, spec: &SpaceSpec) {
    row.family = spec.family().to_string();
    row.p = spec.p();
    row.q = spec.q();
    row.big_n = spec.big_n();
    row.sign = spec.sign().to_string();
}

fn options(case: &Case, seed: u64, policy: TolerancePolicy) -> VerifyOptions {
    let c = &case.config;
    VerifyOptions {
        lhs: c.lhs_method,
        rhs: c.rhs_method,
        orders: c.order.clone().unwrap_or_else(|| DEFAULT_ORDERS.to_vec()),
        budget: c.budget.unwrap_or(DEFAULT_BUDGET),
        chunks: c.chunks.unwrap_or(DEFAULT_CHUNKS),
        seed,
        radius: 1.0,
        sigma: c.sigma,
        policy,
    }
}

/// Runs one validated case. Numerical failures become ERROR rows.
pub fn run_case(case: &Case, master_seed: u64, policy: TolerancePolicy) -> Vec<ReportRecord> {
    let start = Instant::now();
    let seed = derive_seed(master_seed, &[label(&case.config.name)]);
    let blank = |verdict| ReportRecord::blank(&case.config, verdict, seed, master_seed);
    let error_row = |spec: Option<&SpaceSpec>, message: String| {
        let mut row = blank(Verdict::Error);
        if let Some(spec) = spec {
            fill_spec(&mut row, spec);
        }
        row.reason = Some(message);
        vec![row]
    };

    let mut rows = match case.kind {
        CaseKind::Theorem => {
            let spec = case.spec.expect("validated");
            match verify_theorem(&spec, &case.functions, &case.t_grid, &options(case, seed, policy)) {
                Err(e) => error_row(Some(&spec), e.to_string()),
                Ok(report) => report
                    .cells
                    .iter()
                    .map(|cell| {
                        let mut row = blank(cell.verdict);
                        fill_spec(&mut row, &spec);
                        row.f_name = cell.f_name.clone();
                        row.t = Some(cell.t);
                        row.method = report.rhs_method.as_str().to_string();
                        row.lhs_method = report.lhs_method.map(|m| m.as_str().to_string());
                        if let Some(l) = &cell.lhs {
                            row.set_lhs(l);
                        }
                        if let Some(r) = &cell.rhs {
                            row.set_rhs(r);
                        }
                        row.ratio = cell.ratio.map(|r| r.re);
                        row.c_hat = report.c_hat.map(|c| c.re);
                        row.sigma_distance = cell.sigma_distance;
                        row.reason = cell.reason.clone();
                        row
                    })
                    .collect(),
            }
        }
        CaseKind::RadiusSweep => {
            let spec = case.spec.expect("validated");
            let radii = case.config.radii.clone().expect("validated");
            let opts = options(case, seed, policy);
            match radius_sweep(&spec, &case.functions, &case.t_grid, &radii, &opts) {
                Err(e) => error_row(Some(&spec), e.to_string()),
                Ok(sweep) => {
                    let nt = case.t_grid.len();
                    let mut rows = Vec::new();
                    for point in &sweep.points {
                        for (i, f) in case.functions.iter().enumerate() {
                            let sigma = point.values[i * nt..(i + 1) * nt]
                                .iter()
                                .map(|e| e.stderr)
                                .fold(0.0, f64::max);
                            let gap = point.max_t_gap[i];
                            for (j, &t) in case.t_grid.iter().enumerate() {
                                let k = i * nt + j;
                                let flat_in_t = policy.accepts(gap, sigma);
                                let monotone = sweep.monotone[k];
                                let mut row = blank(if flat_in_t && monotone {
                                    Verdict::Pass
                                } else {
                                    Verdict::Fail
                                });
                                fill_spec(&mut row, &spec);
                                row.f_name = f.name().to_string();
                                row.t = Some(t);
                                row.radius = Some(point.radius);
                                row.set_rhs(&point.values[k]);
                                let limit = sweep.limit[k].value;
                                row.reference_value = Some(limit.re);
                                if limit.norm() > policy.abs_tol {
                                    row.ratio = Some((point.values[k].value / limit).re);
                                }
                                row.reason = Some(format!(
                                    "max t-gap {gap:.3e}; distance to r = 1 value {}",
                                    if monotone { "non-increasing" } else { "not monotone" }
                                ));
                                rows.push(row);
                            }
                        }
                    }
                    rows
                }
            }
        }
        CaseKind::Boundary => {
            let spec = case.spec.expect("validated");
            let radii = case.config.radii.clone().expect("validated");
            let frames = case.config.frames.unwrap_or(DEFAULT_FRAMES);
            let mut rows = Vec::new();
            for (ri, &r) in radii.iter().enumerate() {
                let mut stream = SeedStream::derive(seed, &[ri as u64]);
                let drawn: Result<Vec<BoundaryFrame>, _> =
                    (0..frames).map(|_| BoundaryFrame::random(&spec, r, &mut stream)).collect();
                for &t in &case.t_grid {
                    let mut row = blank(Verdict::Pass);
                    fill_spec(&mut row, &spec);
                    row.f_name = "omega_pullback".into();
                    row.t = Some(t);
                    row.radius = Some(r);
                    row.method = "closed-form-tangents".into();
                    row.n = frames as u64;
                    let checks = drawn.as_ref().map_err(|e| e.clone()).and_then(|fs| {
                        fs.iter()
                            .map(|f| boundary_vanishing_check(&spec, r, f, t))
                            .collect::<Result<Vec<_>, _>>()
                    });
                    match checks {
                        Err(e) => {
                            row.verdict = Verdict::Error;
                            row.reason = Some(e.to_string());
                        }
                        Ok(checks) => {
                            let worst = checks.iter().map(|c| c.ratio.max(c.ratio_fd)).fold(0.0, f64::max);
                            let power = checks.iter().map(|c| c.power_ratio).fold(f64::INFINITY, f64::min);
                            row.rhs_value = Some(worst);
                            row.reference_value = Some(power);
                            let ok = worst <= BOUNDARY_TOL && power > POWER_MIN;
                            row.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
                            row.reason = Some(format!(
                                "max boundary ratio {worst:.3e} (tol {BOUNDARY_TOL:e}); min interior ratio {power:.3e}"
                            ));
                        }
                    }
                    rows.push(row);
                }
            }
            rows
        }
        CaseKind::Spin => {
            let spins = case.config.spins.clone().expect("validated");
            let orders = case.config.order.clone().unwrap_or_else(|| DEFAULT_ORDERS.to_vec());
            let mut rows = Vec::new();
            for s in spins {
                match spin_probe(s, &case.spin_functions, &orders) {
                    Err(e) => rows.extend(error_row(None, e.to_string())),
                    Ok(report) => {
                        for r in &report.rows {
                            let mut row = blank(Verdict::Pass);
                            row.family = "spin".into();
                            row.p = 1;
                            row.q = 1;
                            row.sign = "compact".into();
                            row.f_name = r.function.name().to_string();
                            row.radius = Some(2.0 * s);
                            row.set_lhs(&r.lhs);
                            row.set_rhs(&r.rhs);
                            row.ratio = r.ratio;
                            row.reference_value = Some(s);
                            let mut reason = format!(
                                "S = {s}; no equality asserted; ratios {}",
                                if report.f_independent { "f-independent" } else { "f-dependent" }
                            );
                            if r.function == crate::integrate::SpinFunction::One {
                                let pi = std::f64::consts::PI;
                                let ok = (r.lhs.value.re - pi).abs() <= 1e-8
                                    && (r.rhs.value.re - 4.0 * pi * s * s).abs() <= 1e-8;
                                if !ok {
                                    row.verdict = Verdict::Fail;
                                    reason.push_str("; disc areas not reproduced");
                                }
                            }
                            row.reason = Some(reason);
                            rows.push(row);
                        }
                    }
                }
            }
            rows
        }
    };
    let ms = start.elapsed().as_secs_f64() * 1e3;
    for row in &mut rows {
        row.wall_time_ms = ms;
    }
    rows
}

/// Runs every case in order.
pub fn run_cases(config: &RunConfig, cases: &[Case], master_seed: u64) -> Vec<(String, Vec<ReportRecord>)> {
    let policy = config.policy();
    cases
        .iter()
        .map(|c| (c.config.name.clone(), run_case(c, master_seed, policy)))
        .collect()
}
