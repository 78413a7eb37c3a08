use super::*;
use crate::grid::{build_mesh, Domain};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn square(n: usize) -> Arc<TriMesh> {
    Arc::new(build_mesh(Domain::UnitSquare, n).unwrap())
}

fn cell(n: usize) -> Arc<TriMesh> {
    Arc::new(build_mesh(Domain::PeriodicCell, n).unwrap())
}

fn strips(mesh: Arc<TriMesh>, left: f64, right: f64) -> ElementMatrixField {
    ElementMatrixField::from_fn(mesh, |p| {
        let s = if p[0] < 0.5 { left } else { right };
        Mat2::diag(s, s)
    })
}

fn resistor(x: f64) -> f64 {
    if x < 0.5 {
        x / 3.0
    } else {
        1.0 / 6.0 + (x - 0.5) * 5.0 / 3.0
    }
}

fn iterative() -> SolveOptions {
    SolveOptions { method: SolveMethod::IterativeNonsymmetric, ..SolveOptions::default() }
}

#[test]
fn affine_data_reproduced_for_constant_nonsymmetric_sigma() {
    let mesh = square(12);
    let sigma = ElementMatrixField::constant(mesh.clone(), Mat2::new(2.0, 0.7, -0.4, 1.5));
    let g = |p: [f64; 2]| 0.3 + 1.7 * p[0] - 0.8 * p[1];
    for opts in [SolveOptions::default(), iterative()] {
        let u = solve_dirichlet(&sigma, g, opts).unwrap();
        let exact = ScalarFieldP1::from_fn(mesh.clone(), g);
        assert!(u.max_abs_diff(&exact) < 1e-9);
    }
}

#[test]
fn two_strip_laminate_has_slopes_in_ratio() {
    let mesh = square(16);
    let sigma = strips(mesh.clone(), 5.0, 1.0);
    // two-resistor profile from 0 to 1: 5 s_left = s_right, s_left/2 + s_right/2 = 1
    let u = solve_dirichlet(&sigma, |p| resistor(p[0]), SolveOptions::default()).unwrap();
    let reference = ScalarFieldP1::from_fn(mesh.clone(), |p| resistor(p[0]));
    assert!(u.max_abs_diff(&reference) < 1e-10);
    for (g, geo) in element_gradient(&u).iter().zip(mesh.geometry()) {
        let slope = if geo.barycenter[0] < 0.5 { 1.0 / 3.0 } else { 5.0 / 3.0 };
        assert!((g[0] - slope).abs() < 1e-9 && g[1].abs() < 1e-9);
    }
}

#[test]
fn non_elliptic_element_is_named() {
    let mesh = square(4);
    let mut values = vec![Mat2::IDENTITY; mesh.n_triangles()];
    values[5] = Mat2::diag(-1.0, 1.0);
    let sigma = ElementMatrixField::new(mesh, values).unwrap();
    match DirichletSolver::new(&sigma, SolveOptions::default()) {
        Err(Error::NonEllipticElement { element, .. }) => assert_eq!(element, 5),
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("accepted a non-elliptic coefficient"),
    }
}

#[test]
fn dirichlet_rejects_periodic_mesh() {
    let sigma = ElementMatrixField::constant(cell(4), Mat2::IDENTITY);
    assert!(matches!(DirichletSolver::new(&sigma, SolveOptions::default()), Err(Error::InvalidMesh(_))));
}

#[test]
fn periodic_laminate_fluxes() {
    let mesh = cell(16);
    let sigma = strips(mesh.clone(), 1.0, 5.0);
    let solver = PeriodicCellSolver::new(&sigma, SolveOptions::default()).unwrap();
    let mean_flux = |u: &ScalarFieldP1| {
        let mut m = [0.0; 2];
        for ((g, s), geo) in element_gradient(u).iter().zip(sigma.values()).zip(mesh.geometry()) {
            let f = s.mul_vec(*g);
            m[0] += geo.area * f[0];
            m[1] += geo.area * f[1];
        }
        m
    };
    let (u1, stats) = solver.solve([1.0, 0.0]).unwrap();
    assert!(stats.relative_residual < 1e-10);
    let f1 = mean_flux(&u1);
    assert!((f1[0] - 5.0 / 3.0).abs() < 1e-10, "{f1:?}");
    assert!(f1[1].abs() < 1e-10);
    let f2 = mean_flux(&solver.solve([0.0, 1.0]).unwrap().0);
    assert!((f2[1] - 3.0).abs() < 1e-10);
    assert!(u1.integral().abs() < 1e-12);
}

#[test]
fn periodic_corrector_is_periodic() {
    let mesh = cell(8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values = (0..mesh.n_triangles())
        .map(|_| {
            Mat2::new(
                rng.gen_range(1.0..3.0),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(1.0..3.0),
            )
        })
        .collect();
    let sigma = ElementMatrixField::new(mesh.clone(), values).unwrap();
    let xi = [0.6, -1.1];
    let (u, _) = PeriodicCellSolver::new(&sigma, SolveOptions::default()).unwrap().solve(xi).unwrap();
    let mut reps = vec![None; mesh.n_free_vertices()];
    for (v, (&p, &c)) in mesh.vertices().iter().zip(mesh.periodic_index()).enumerate() {
        let w = u.values()[v] - dot(xi, p);
        match reps[c] {
            None => reps[c] = Some(w),
            Some(w0) => assert!((w - w0).abs() < 1e-10),
        }
    }
}

#[test]
fn stream_function_of_coordinate_field() {
    let mesh = square(6);
    let sigma = ElementMatrixField::constant(mesh.clone(), Mat2::IDENTITY);
    let u = ScalarFieldP1::from_fn(mesh.clone(), |p| p[0]);
    let s = stream_function(&sigma, &u).unwrap();
    let exact = ScalarFieldP1::from_fn(mesh, |p| p[1]);
    assert!(s.field.max_abs_diff(&exact) < 1e-10);
    assert!(s.residual_l2 < 1e-10);
    assert_eq!(s.field.values()[0], 0.0);
}

#[test]
fn stream_function_of_constant_nonsymmetric_sigma() {
    let mesh = square(6);
    let m = Mat2::new(2.0, 0.5, -0.5, 1.0);
    let sigma = ElementMatrixField::constant(mesh.clone(), m);
    let u = ScalarFieldP1::from_fn(mesh.clone(), |p| p[0] + 2.0 * p[1]);
    let q = rotate(m.mul_vec([1.0, 2.0]));
    let s = stream_function(&sigma, &u).unwrap();
    let exact = ScalarFieldP1::from_fn(mesh, |p| dot(q, p));
    assert!(s.field.max_abs_diff(&exact) < 1e-10);
}

#[test]
fn laminate_stream_function_recovered_exactly() {
    let mesh = square(16);
    let sigma = strips(mesh.clone(), 5.0, 1.0);
    let u = solve_dirichlet(&sigma, |p| resistor(p[0]), SolveOptions::default()).unwrap();
    let s = stream_function(&sigma, &u).unwrap();
    // σ∂₁u = 5/3 on both strips, so ũ = (5/3) y
    let exact = ScalarFieldP1::from_fn(mesh, |p| 5.0 / 3.0 * p[1]);
    assert!(s.field.max_abs_diff(&exact) < 1e-10);
    assert!(s.residual_l2 < 1e-10);
}

#[test]
fn discrete_solution_has_zero_interior_residual() {
    let mesh = square(10);
    let sigma = ElementMatrixField::from_fn(mesh.clone(), |p| Mat2::new(1.0 + p[0], 0.3, -0.2, 2.0 - p[1]));
    let u = solve_dirichlet(&sigma, |p| (3.0 * p[0]).sin() + p[1] * p[1], SolveOptions::default()).unwrap();
    let r = vertex_residual(&sigma, &u);
    let mask = mesh.boundary_mask();
    let worst = r.iter().zip(&mask).filter(|(_, &b)| !b).map(|(v, _)| v.abs()).fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn circulation_is_minus_twice_residual(seed in any::<u64>()) {
        let mesh = square(5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..mesh.n_triangles())
            .map(|_| Mat2::new(rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..3.0)))
            .collect();
        let sigma = ElementMatrixField::new(mesh.clone(), values).unwrap();
        let u = ScalarFieldP1::new(mesh.clone(), (0..mesh.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let r = vertex_residual(&sigma, &u);
        let c = vertex_circulation(&sigma, &u);
        for (v, &b) in mesh.boundary_mask().iter().enumerate() {
            if !b {
                prop_assert!((c[v] + 2.0 * r[v]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cell_solution_linear_in_xi(a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let sigma = strips(cell(8), 1.0, 4.0);
        let solver = PeriodicCellSolver::new(&sigma, SolveOptions::default()).unwrap();
        let u1 = solver.solve([1.0, 0.0]).unwrap().0;
        let u2 = solver.solve([0.0, 1.0]).unwrap().0;
        let u = solver.solve([a, b]).unwrap().0;
        prop_assert!(u.max_abs_diff(&u1.combine(a, &u2, b)) < 1e-10);
    }

    #[test]
    fn backends_agree(seed in any::<u64>()) {
        let mesh = square(8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..mesh.n_triangles())
            .map(|_| Mat2::new(rng.gen_range(1.0..4.0), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(1.0..4.0)))
            .collect();
        let sigma = ElementMatrixField::new(mesh, values).unwrap();
        let g = |p: [f64; 2]| p[0] * p[1] + p[0];
        let a = solve_dirichlet(&sigma, g, SolveOptions::default()).unwrap();
        let b = solve_dirichlet(&sigma, g, iterative()).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-8);
    }
}
