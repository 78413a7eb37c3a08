use std::sync::Arc;

use beltrami_core::coefficients::CoefficientSpec;
use beltrami_core::elliptic_solver::SolveOptions;
use beltrami_core::grid::{build_mesh, dyadic_squares, Domain, ElementMatrixField, TriMesh};
use beltrami_core::homogenization::{effective_conductivity, flux_map, image_area};
use beltrami_core::sigma_harmonic::{factorized_jacobian, primary_pair, pushforward_tau};
use beltrami_core::weights::{reverse_holder_constant, SquareScope};
use beltrami_core::Mat2;

fn square(n: usize) -> Arc<TriMesh> {
    Arc::new(build_mesh(Domain::UnitSquare, n).unwrap())
}

fn cell(n: usize) -> Arc<TriMesh> {
    Arc::new(build_mesh(Domain::PeriodicCell, n).unwrap())
}

fn random(seed: u64, symmetric: bool) -> CoefficientSpec {
    CoefficientSpec::RandomPiecewise { k_max: 4.0, cells: 4, seed, symmetric }
}

#[test]
fn checkerboard_is_the_geometric_mean() {
    let sigma = CoefficientSpec::Checkerboard { a: 1.0, b: 9.0, cells: 2 }.sample(cell(128)).unwrap();
    let eff = effective_conductivity(&sigma, SolveOptions::default()).unwrap().matrix;
    assert!(eff.max_abs_diff(&Mat2::diag(3.0, 3.0)) < 0.05 * 3.0, "{eff:?}");
}

#[test]
fn hall_cell_passes_through_unchanged() {
    let hall = CoefficientSpec::Hall { a: 2.0, b: -0.75 };
    let eff = effective_conductivity(&hall.sample(cell(12)).unwrap(), SolveOptions::default()).unwrap();
    assert!(eff.matrix.max_abs_diff(&Mat2::new(2.0, -0.75, 0.75, 2.0)) < 1e-10);
}

#[test]
fn flux_map_area_matches_the_energy_for_random_cells() {
    for seed in [3, 4] {
        let sigma = random(seed, seed % 2 == 0).sample(cell(64)).unwrap();
        let eff = effective_conductivity(&sigma, SolveOptions::default()).unwrap();
        for xi in [[1.0, 0.0], [0.0, 1.0]] {
            let area = image_area(&flux_map(&sigma, xi, SolveOptions::default()).unwrap(), None).unwrap();
            let q = eff.quadratic_form(xi);
            assert!((area.area - q).abs() < 0.02 * q, "seed {seed}, xi {xi:?}: {} vs {q}", area.area);
        }
    }
}

#[test]
fn factorized_jacobian_splits_det_du() {
    let sigma = random(8, false).sample(square(32)).unwrap();
    let pair = primary_pair(&sigma, SolveOptions::default()).unwrap();
    let fj = factorized_jacobian(&pair.map, &pair.phi).unwrap();
    assert!(fj.det_dv.iter().all(|d| *d > 0.0));
    let tau = pushforward_tau(&sigma, &pair.phi).unwrap();
    let det_err = tau
        .tau
        .values()
        .iter()
        .zip(sigma.values())
        .zip(&tau.degenerate)
        .filter(|(_, d)| !**d)
        .map(|((t, s), _)| (t.det() - s.det()).abs())
        .fold(0.0, f64::max);
    assert!(det_err < 1e-9, "{det_err}");
}

#[test]
fn jacobian_weight_satisfies_reverse_holder() {
    let sigma = random(2, true).sample(square(32)).unwrap();
    let pair = primary_pair(&sigma, SolveOptions::default()).unwrap();
    let mesh = pair.map.mesh().clone();
    let squares = dyadic_squares(&mesh, 3);
    let rh = reverse_holder_constant(&mesh, &pair.map.det_du, &squares, 2.0, SquareScope::Inside).unwrap();
    assert!((1.0..10.0).contains(&rh), "{rh}");
}

#[test]
fn constant_fields_agree_across_domains() {
    let m = Mat2::new(1.5, 0.4, -0.2, 0.8);
    for mesh in [square(6), cell(6), Arc::new(build_mesh(Domain::RegularNgon { n_sides: 6, radius: 1.0 }, 4).unwrap())]
    {
        let field = ElementMatrixField::constant(mesh, m);
        assert!(field.check_elliptic().is_ok());
        assert!(field.mean().max_abs_diff(&m) < 1e-14);
    }
}
