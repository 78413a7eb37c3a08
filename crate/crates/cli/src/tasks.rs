use std::path::Path;
use std::sync::Arc;

use beltrami_core::coeff_algebra::{
    beltrami_from_matrix_checked, beltrami_from_sigma, ellipticity_report, k_of_beltrami, p_sup_of,
    sigma_from_beltrami, BeltramiPair, Conductivity,
};
use beltrami_core::coefficients::CoefficientSpec;
use beltrami_core::elliptic_solver::{element_stiffness, vertex_residual, DirichletSolver};
use beltrami_core::grid::{
    build_mesh, dyadic_squares, element_gradient, write_triangle_csv, write_vertex_csv, ElementMatrixField, TriMesh,
};
use beltrami_core::homogenization::{
    cell_map, effective_conductivity, flux_map, image_area, mean_bounds, order_margin,
};
use beltrami_core::sigma_harmonic::{
    equival_residual, factorized_jacobian, injectivity_check, primary_pair, sigma_harmonic_map,
};
use beltrami_core::weights::{
    ainfty_probe, bmo_norm, higher_integrability_probe, reverse_holder_constant, square_stats, GradientSample,
    SquareScope, SubsetSampler,
};
use beltrami_core::{Complex64, Mat2};

use crate::config::{BoundarySpec, ExperimentConfig, Task};
use crate::error::CliError;
use crate::record::{fmt_f64, fmt_opt, Artifacts, RunRecord};

/// Round-trip tolerance of the coefficient conversion.
pub const ROUND_TRIP_TOL: f64 = 1e-12;
/// Per-element tolerance of the algebraic Jacobian identity and Beltrami residual.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Linearity defect `|U^A − A U^I|` allowed in cell maps.
pub const LINEARITY_TOL: f64 = 1e-8;
/// Slack of the Voigt–Reuss eigenvalue inequalities.
pub const BOUND_SLACK: f64 = 1e-9;
/// Exactness tolerance for affine data and constant-coefficient passthrough.
pub const EXACTNESS_TOL: f64 = 1e-10;
/// Largest ratio between diagnostics at consecutive resolutions.
pub const STABILITY_FACTOR: f64 = 2.0;

fn mesh_for(config: &ExperimentConfig, n: usize) -> Result<Arc<TriMesh>, CliError> {
    Ok(Arc::new(build_mesh(config.domain, n)?))
}

fn sigma_for(config: &ExperimentConfig, mesh: Arc<TriMesh>) -> Result<ElementMatrixField, CliError> {
    let spec = config
        .coefficients
        .as_ref()
        .ok_or_else(|| CliError::Validation { field: "coefficients".into(), message: "missing".into() })?;
    Ok(spec.sample(mesh)?)
}

fn constant_matrix(config: &ExperimentConfig) -> Option<Mat2> {
    match config.coefficients.as_ref()? {
        CoefficientSpec::Constant { matrix } => Some(*matrix),
        CoefficientSpec::Hall { a, b } => Some(Mat2::new(*a, *b, -*b, *a)),
        _ => None,
    }
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn sigma_columns(sigma: &ElementMatrixField) -> [Vec<f64>; 4] {
    [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(i, j)| sigma.values().iter().map(|m| m.get(i, j)).collect())
}

/// Runs one experiment, writing artifacts and `run.json` into `out`.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<RunRecord, CliError> {
    config.validate()?;
    let mut artifacts = Artifacts::create(out)?;
    let mut record = RunRecord::new(config.task.name(), config.resolutions());
    match config.task {
        Task::Convert => convert(config, &mut record)?,
        Task::Solve => solve(config, &mut record, &mut artifacts)?,
        Task::PrimaryPair => primary(config, &mut record, &mut artifacts)?,
        Task::Cell => cell(config, &mut record, &mut artifacts)?,
        Task::Homogenize => homogenize(config, &mut record, &mut artifacts)?,
        Task::Diagnose => diagnose(config, &mut record, &mut artifacts)?,
    }
    let json_path = artifacts.dir().join("run.json");
    record.artifacts = artifacts.into_names();
    record.artifacts.push("run.json".into());
    let text = serde_json::to_string_pretty(&record)?;
    std::fs::write(&json_path, text).map_err(|e| CliError::Io { path: json_path, source: e })?;
    tracing::info!(task = config.task.name(), passed = record.all_passed, "run finished");
    Ok(record)
}

fn convert(config: &ExperimentConfig, record: &mut RunRecord) -> Result<(), CliError> {
    let input = config.convert.clone().unwrap_or_default();
    let (sigma, pair, round_trip) = match input.sigma {
        Some(m) => {
            let sigma = Conductivity::new(m)?;
            let pair = beltrami_from_sigma(&sigma);
            let back = sigma_from_beltrami(&pair)?;
            (sigma, pair, back.entries().max_abs_diff(&m))
        }
        None => {
            let c = |v: Option<[f64; 2]>| v.map_or(Complex64::new(0.0, 0.0), |[re, im]| Complex64::new(re, im));
            let pair = BeltramiPair::new(c(input.mu), c(input.nu))?;
            let sigma = sigma_from_beltrami(&pair)?;
            let back = beltrami_from_matrix_checked(&sigma.entries())?;
            (sigma, pair, back.max_abs_diff(&pair))
        }
    };
    record.metric("sigma", sigma.entries());
    record.metric("mu", [pair.mu.re, pair.mu.im]);
    record.metric("nu", [pair.nu.re, pair.nu.im]);
    record.metric("ellipticity", ellipticity_report(&sigma));
    record.check_le("round_trip", round_trip, ROUND_TRIP_TOL);
    Ok(())
}

type P = [f64; 2];

fn dist(a: P, b: P) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

fn lerp(a: P, b: P, w: f64) -> P {
    [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
}

/// Indices of boundary-loop vertices where the loop turns.
fn loop_corners(pts: &[P]) -> Vec<usize> {
    let n = pts.len();
    (0..n)
        .filter(|&k| {
            let (a, b, c) = (pts[(k + n - 1) % n], pts[k], pts[(k + 1) % n]);
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            cross.abs() > 1e-12 * dist(a, b) * dist(b, c)
        })
        .collect()
}

/// Point at arclength `s` along the closed polygon `corners`.
fn along(corners: &[P], mut s: f64) -> P {
    let m = corners.len();
    for j in 0..m {
        let len = dist(corners[j], corners[(j + 1) % m]);
        if s <= len || j + 1 == m {
            return lerp(corners[j], corners[(j + 1) % m], (s / len).clamp(0.0, 1.0));
        }
        s -= len;
    }
    corners[0]
}

/// Boundary data tracing the closed polygon `corners`.
///
/// When the loop has as many corners as the polygon, corner goes to corner and each
/// side is parametrized by arclength; otherwise the whole loop is.
fn polygon_targets(mesh: &TriMesh, corners: &[P]) -> Vec<P> {
    let pts = mesh.boundary_points();
    let n = pts.len();
    let turns = loop_corners(&pts);
    let mut out = vec![[0.0; 2]; n];
    if turns.len() == corners.len() {
        let m = turns.len();
        for j in 0..m {
            let (first, last) = (turns[j], turns[(j + 1) % m]);
            let steps = (last + n - first) % n;
            let cum: Vec<f64> = (0..steps)
                .scan(0.0, |s, i| {
                    let here = *s;
                    *s += dist(pts[(first + i) % n], pts[(first + i + 1) % n]);
                    Some(here)
                })
                .collect();
            let total = cum.last().map_or(0.0, |c| c + dist(pts[(last + n - 1) % n], pts[last]));
            for (i, c) in cum.iter().enumerate() {
                out[(first + i) % n] = lerp(corners[j], corners[(j + 1) % m], c / total);
            }
        }
        return out;
    }
    let loop_len: f64 = (0..n).map(|k| dist(pts[k], pts[(k + 1) % n])).sum();
    let poly_len: f64 = (0..corners.len()).map(|k| dist(corners[k], corners[(k + 1) % corners.len()])).sum();
    let mut s = 0.0;
    for k in 0..n {
        out[k] = along(corners, s / loop_len * poly_len);
        s += dist(pts[k], pts[(k + 1) % n]);
    }
    out
}

fn solve(config: &ExperimentConfig, record: &mut RunRecord, artifacts: &mut Artifacts) -> Result<(), CliError> {
    let boundary = config.boundary.as_ref().expect("validated");
    for n in config.resolutions() {
        let mesh = mesh_for(config, n)?;
        let sigma = sigma_for(config, mesh.clone())?;
        let [s11, s12, s21, s22] = sigma_columns(&sigma);
        if let BoundarySpec::PolygonTrace { corners } = boundary {
            let targets = polygon_targets(&mesh, corners);
            let m = sigma_harmonic_map(&sigma, &targets, config.solver)?;
            let inj = injectivity_check(&m.map);
            record.metric(format!("convex_embedding_{n}"), m.convex_embedding);
            record.metric(format!("injectivity_{n}"), inj);
            if m.convex_embedding {
                let mask = mesh.boundary_mask();
                let interior_min = mesh
                    .triangles()
                    .iter()
                    .zip(&m.map.det_du)
                    .filter(|(t, _)| t.iter().any(|&v| !mask[v]))
                    .fold(f64::INFINITY, |a, (_, &d)| a.min(d));
                record.check_gt(format!("jacobian_positivity_{n}"), interior_min, 0.0);
                record.check_flag(format!("global_injectivity_{n}"), inj.globally_injective);
            }
            artifacts.write(&format!("vertices_{n}.csv"), |w| {
                write_vertex_csv(&mesh, &[("u1", m.map.u1.values()), ("u2", m.map.u2.values())], w)
            })?;
            artifacts
                .write(&format!("triangles_{n}.csv"), |w| write_triangle_csv(&mesh, &[("det_du", &m.map.det_du)], w))?;
            record.headline.min_det_du = Some(m.map.min_det());
            continue;
        }
        let solver = DirichletSolver::new(&sigma, config.solver)?;
        let (u, stats) = match boundary {
            BoundarySpec::Affine { gradient, offset } => {
                solver.solve(|p| gradient[0] * p[0] + gradient[1] * p[1] + offset)?
            }
            BoundarySpec::Samples { values } => {
                let loop_ = mesh.boundary_loop();
                if values.len() != loop_.len() {
                    return Err(CliError::Validation {
                        field: "boundary.values".into(),
                        message: format!("{} samples for {} boundary vertices", values.len(), loop_.len()),
                    });
                }
                let mut g = vec![0.0; mesh.n_vertices()];
                for (&v, &x) in loop_.iter().zip(values) {
                    g[v] = x;
                }
                solver.solve_values(&g)?
            }
            BoundarySpec::PolygonTrace { .. } => unreachable!(),
        };
        record.metric(format!("solve_stats_{n}"), stats);
        record.check_le(format!("solver_residual_{n}"), stats.relative_residual, config.solver.tolerance);
        if let (BoundarySpec::Affine { gradient, offset }, Some(_)) = (boundary, constant_matrix(config)) {
            let worst = mesh
                .vertices()
                .iter()
                .zip(u.values())
                .map(|(p, v)| (gradient[0] * p[0] + gradient[1] * p[1] + offset - v).abs())
                .fold(0.0, f64::max);
            record.check_le(format!("affine_exactness_{n}"), worst, EXACTNESS_TOL);
        }
        let mask = mesh.boundary_mask();
        let scale = sigma
            .values()
            .iter()
            .zip(mesh.geometry())
            .map(|(m, g)| element_stiffness(g, m).iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())))
            .fold(0.0, f64::max)
            * u.values().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        let interior =
            vertex_residual(&sigma, &u).iter().zip(&mask).filter(|(_, &b)| !b).fold(0.0f64, |a, (r, _)| a.max(r.abs()));
        record.check_le(format!("interior_residual_{n}"), interior, 1e-8 * scale);
        artifacts.write(&format!("vertices_{n}.csv"), |w| write_vertex_csv(&mesh, &[("u", u.values())], w))?;
        artifacts.write(&format!("triangles_{n}.csv"), |w| {
            write_triangle_csv(&mesh, &[("sigma11", &s11), ("sigma12", &s12), ("sigma21", &s21), ("sigma22", &s22)], w)
        })?;
    }
    record.headline.resolution = config.resolutions().last().copied();
    Ok(())
}

pub const PRIMARY_SUMMARY_HEADER: &str =
    "resolution,min_det_du,max_det_du,max_equival_residual,max_beltrami_residual,locally_injective,globally_injective";

fn primary(config: &ExperimentConfig, record: &mut RunRecord, artifacts: &mut Artifacts) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for n in config.resolutions() {
        let mesh = mesh_for(config, n)?;
        let sigma = sigma_for(config, mesh.clone())?;
        let pair = primary_pair(&sigma, config.solver)?;
        let s = pair.summary()?;
        record.check_gt(format!("jacobian_positivity_{n}"), s.min_det_du, 0.0);
        record.check_le(format!("equival_identity_{n}"), s.max_equival_residual, IDENTITY_TOL);
        record.check_le(format!("beltrami_consistency_{n}"), s.max_beltrami_residual, IDENTITY_TOL);
        record.check_flag(format!("global_injectivity_{n}"), s.globally_injective);
        record.metric(format!("summary_{n}"), &s);
        rows.push(format!(
            "{n},{},{},{},{},{},{}",
            fmt_f64(s.min_det_du),
            fmt_f64(s.max_det_du),
            fmt_f64(s.max_equival_residual),
            fmt_f64(s.max_beltrami_residual),
            s.locally_injective,
            s.globally_injective
        ));
        let equival = equival_residual(&pair.map);
        artifacts.write(&format!("vertices_{n}.csv"), |w| {
            write_vertex_csv(
                &mesh,
                &[
                    ("u1", pair.phi.re().values()),
                    ("stream1", pair.phi.im().values()),
                    ("u2", pair.psi.re().values()),
                    ("stream2", pair.psi.im().values()),
                ],
                w,
            )
        })?;
        artifacts.write(&format!("triangles_{n}.csv"), |w| {
            write_triangle_csv(&mesh, &[("det_du", &pair.map.det_du), ("equival_residual", &equival)], w)
        })?;
        record.headline.min_det_du = Some(s.min_det_du);
        record.headline.resolution = Some(n);
    }
    artifacts.write("summary.csv", |w| {
        writeln!(w, "{PRIMARY_SUMMARY_HEADER}")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))
    })
}

fn cell(config: &ExperimentConfig, record: &mut RunRecord, artifacts: &mut Artifacts) -> Result<(), CliError> {
    for n in config.resolutions() {
        let mesh = mesh_for(config, n)?;
        let sigma = sigma_for(config, mesh.clone())?;
        let cm = cell_map(&sigma, config.cell.a, config.solver)?;
        record.check_le(format!("linearity_{n}"), cm.linearity_defect, LINEARITY_TOL);
        if cm.nonsingular {
            let inj = injectivity_check(&cm.map);
            let oriented = cm.a.det() > 0.0;
            record.metric(format!("injectivity_{n}"), inj);
            if oriented {
                record.check_flag(format!("cell_homeomorphism_{n}"), inj.globally_injective);
            }
        }
        record.metric(format!("min_det_du_{n}"), cm.map.min_det());
        artifacts.write(&format!("vertices_{n}.csv"), |w| {
            write_vertex_csv(&mesh, &[("u1", cm.map.u1.values()), ("u2", cm.map.u2.values())], w)
        })?;
        artifacts
            .write(&format!("triangles_{n}.csv"), |w| write_triangle_csv(&mesh, &[("det_du", &cm.map.det_du)], w))?;
        record.headline.min_det_du = Some(cm.map.min_det());
        record.headline.resolution = Some(n);
    }
    Ok(())
}

fn homogenize(config: &ExperimentConfig, record: &mut RunRecord, artifacts: &mut Artifacts) -> Result<(), CliError> {
    let opts = &config.homogenize;
    let symmetric = config.coefficients.as_ref().is_some_and(|c| c.is_symmetric());
    let mut rows = Vec::new();
    for n in config.resolutions() {
        let mesh = mesh_for(config, n)?;
        let sigma = sigma_for(config, mesh.clone())?;
        let t = effective_conductivity(&sigma, config.solver)?;
        let sym = t.matrix.symmetric_part();
        record.check_gt(format!("sym_positive_definite_{n}"), sym.symmetric_eigenvalues().0, 0.0);
        let bounds = mean_bounds(&sigma)?;
        record.check_ge(format!("arithmetic_upper_bound_{n}"), order_margin(&sym, &bounds.arithmetic), -BOUND_SLACK);
        if symmetric {
            record.check_ge(format!("harmonic_lower_bound_{n}"), order_margin(&bounds.harmonic, &sym), -BOUND_SLACK);
        }
        if let Some(m) = constant_matrix(config) {
            record.check_le(format!("constant_passthrough_{n}"), t.matrix.max_abs_diff(&m), EXACTNESS_TOL);
        }
        let mut error = None;
        if let Some(expected) = opts.expected {
            let scale = expected.0.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            let rel = t.matrix.max_abs_diff(&expected) / scale;
            error = Some(rel);
            record.metric(format!("relative_error_{n}"), rel);
            if let Some(tol) = opts.relative_tolerance {
                record.check_le(format!("expected_tensor_{n}"), rel, tol);
            }
        }
        if let Some(tol) = opts.area_tolerance {
            let f = flux_map(&sigma, [1.0, 0.0], config.solver)?;
            let area = image_area(&f, None)?;
            let q = t.matrix.get(0, 0);
            let gap = (area.area - q).abs() / q;
            record.metric(format!("image_area_e1_{n}"), area);
            record.check_le(format!("flux_map_area_{n}"), gap, tol);
        }
        record.metric(format!("sigma_eff_{n}"), t.matrix);
        record.metric(format!("quadratic_forms_{n}"), t.quadratic_forms);
        rows.push(t.csv_record().join(","));
        record.headline.sigma_eff = Some(t.matrix);
        record.headline.sigma_eff_error = error;
        record.headline.resolution = Some(n);
    }
    artifacts.write("effective.csv", |w| {
        writeln!(w, "{}", beltrami_core::homogenization::EffectiveTensor::CSV_HEADER.join(","))?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))
    })
}

pub const DIAGNOSE_HEADER: &str = "resolution,min_det_du,bmo,reverse_holder,c,delta,m,eta,reverse_holder_dv";

fn ratio(a: f64, b: f64) -> f64 {
    (a / b).max(b / a)
}

fn diagnose(config: &ExperimentConfig, record: &mut RunRecord, artifacts: &mut Artifacts) -> Result<(), CliError> {
    let d = &config.diagnose;
    let sampler = SubsetSampler {
        fractions: d.fractions.clone(),
        random_per_fraction: d.random_per_fraction,
        include_extremes: true,
        seed: config.seed,
    };
    let mut rows = Vec::new();
    let mut history: Vec<[f64; 6]> = Vec::new();
    let mut gradients = Vec::new();
    let mut k_max: f64 = 1.0;
    for n in config.resolutions() {
        let mesh = mesh_for(config, n)?;
        let sigma = sigma_for(config, mesh.clone())?;
        for m in sigma.values() {
            k_max = k_max.max(k_of_beltrami(&beltrami_from_matrix_checked(m)?)?);
        }
        let pair = primary_pair(&sigma, config.solver)?;
        let w = &pair.map.det_du;
        let min_det = min_of(w);
        record.check_gt(format!("weight_positive_{n}"), min_det, 0.0);
        record.headline.min_det_du = Some(min_det);
        record.headline.resolution = Some(n);
        if !(min_det > 0.0) {
            continue;
        }
        let squares = dyadic_squares(&mesh, d.max_level);
        let bmo = bmo_norm(&mesh, w, &squares)?;
        let rh = reverse_holder_constant(&mesh, w, &squares, d.exponent, SquareScope::Inside)?;
        let fit = ainfty_probe(&mesh, w, &squares, &sampler)?;
        record.check_flag(format!("envelope_brackets_samples_{n}"), fit.bracketed);
        record.check_ge(format!("reverse_holder_at_least_one_{n}"), rh, 1.0);
        let table = square_stats(&mesh, w, &squares, &[0.5, 1.0])?;
        artifacts.write(&format!("squares_{n}.csv"), |out| table.write_csv(out))?;
        let rh_dv = if d.factorized {
            let fj = factorized_jacobian(&pair.map, &pair.phi)?;
            let img_squares = dyadic_squares(&fj.image_mesh, d.max_level);
            reverse_holder_constant(&fj.image_mesh, &fj.det_dv, &img_squares, 2.0, SquareScope::DoubleInside).ok()
        } else {
            None
        };
        record.metric(format!("fit_{n}"), fit);
        rows.push(format!(
            "{n},{},{},{},{},{},{},{},{}",
            fmt_f64(min_det),
            fmt_f64(bmo),
            fmt_f64(rh),
            fmt_f64(fit.c),
            fmt_f64(fit.delta),
            fmt_f64(fit.m),
            fmt_f64(fit.eta),
            fmt_opt(rh_dv)
        ));
        history.push([bmo, fit.c, fit.delta, fit.m, fit.eta, rh_dv.unwrap_or(f64::NAN)]);
        gradients.push(GradientSample { resolution: n, mesh: mesh.clone(), gradients: element_gradient(&pair.map.u1) });
        record.headline.bmo = Some(bmo);
        record.headline.c = Some(fit.c);
        record.headline.delta = Some(fit.delta);
    }
    for pair in history.windows(2) {
        let names = ["bmo", "c", "delta", "m", "eta"];
        for (k, name) in names.iter().enumerate() {
            record.check_le(format!("{name}_stability"), ratio(pair[0][k], pair[1][k]), STABILITY_FACTOR);
        }
    }
    let p_sup = p_sup_of(k_max);
    let p_list: Vec<f64> =
        if p_sup.is_finite() { d.p_fractions.iter().map(|f| f * p_sup).collect() } else { vec![2.0, 4.0] };
    record.metric("k_max", k_max);
    record.metric("p_sup", if p_sup.is_finite() { Some(p_sup) } else { None });
    let integrability = higher_integrability_probe(&gradients, &p_list, p_sup);
    artifacts.write("integrability.csv", |w| {
        writeln!(w, "resolution,p,norm,below_p_sup")?;
        integrability
            .iter()
            .try_for_each(|r| writeln!(w, "{},{},{},{}", r.resolution, fmt_f64(r.p), fmt_f64(r.norm), r.below_p_sup))
    })?;
    artifacts.write("diagnose.csv", |w| {
        writeln!(w, "{DIAGNOSE_HEADER}")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))
    })?;
    Ok(())
}
