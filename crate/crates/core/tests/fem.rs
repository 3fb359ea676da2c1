use std::f64::consts::PI;
use std::sync::Arc;

use faer::sparse::{SparseColMat, Triplet};
use guidewave::fem::{
    assemble, field_error, field_error_fn, generate_mesh, generate_mesh_with, solve, solve_sparse, EdgeTag,
    InteriorLine, JunctionProblem, Polygon, SolutionField,
};
use guidewave::floquet::{build_pencil, classify_and_orthonormalize, solve_modes, ModeKind};
use guidewave::model::{CellSpec, RefractiveIndex, Tolerances};
use num_complex::Complex64 as C64;

const WALLS: [EdgeTag; 4] = [EdgeTag::Wall; 4];

fn manufactured_error(h: f64) -> f64 {
    let k = 2.0;
    let q = |x: [f64; 2]| 1.0 + 0.5 * x[0] * x[1];
    let exact = |x: [f64; 2]| (PI * x[0]).sin() * (PI * x[1]).sin();
    let mut p = JunctionProblem::new(Polygon::rectangle(0.0, 1.0, 0.0, 1.0, WALLS), k, Arc::new(q));
    p.source = Some(Arc::new(move |x| {
        C64::new((-2.0 * PI * PI + k * k * q(x)) * exact(x), 0.0)
    }));
    p.source_support = Some([1e-9, 1.0 - 1e-9, 1e-9, 1.0 - 1e-9]);
    let mesh = generate_mesh(&p.domain, h).unwrap();
    let sys = assemble(&p, mesh).unwrap();
    let u = solve(&sys).unwrap();
    assert_eq!(u.max_wall_value(), 0.0);
    field_error_fn(&u, &|x| C64::new(exact(x), 0.0))
}

#[test]
fn manufactured_solution_converges_at_fourth_order() {
    let errs: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&h| manufactured_error(h)).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 3.5, "observed order {order:.2} from errors {errs:?}");
    }
}

#[test]
fn homogeneous_problem_has_zero_solution() {
    let p = JunctionProblem::new(Polygon::rectangle(0.0, 1.0, 0.0, 1.0, WALLS), 1.0, Arc::new(|_| 1.0));
    let sys = assemble(&p, generate_mesh(&p.domain, 0.25).unwrap()).unwrap();
    assert!(sys.rhs.iter().all(|v| *v == C64::new(0.0, 0.0)));
    let u = solve(&sys).unwrap();
    assert!(u.values.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn identity_system_returns_load() {
    let n = 4;
    let trip: Vec<_> = (0..n).map(|i| Triplet::new(i, i, C64::new(1.0, 0.0))).collect();
    let s = SparseColMat::try_new_from_triplets(n, n, &trip).unwrap();
    let f: Vec<C64> = (0..n).map(|i| C64::new(i as f64, -(i as f64))).collect();
    assert_eq!(solve_sparse(&s, &f).unwrap(), f);
}

#[test]
fn field_error_of_scaled_copy() {
    let p = JunctionProblem::new(Polygon::rectangle(0.0, 1.0, 0.0, 1.0, WALLS), 1.0, Arc::new(|_| 1.0));
    let space = assemble(&p, generate_mesh(&p.domain, 0.25).unwrap()).unwrap().space;
    let values: Vec<C64> = space
        .dof_coords
        .iter()
        .map(|x| C64::new(x[0] * (1.0 - x[0]), x[1]))
        .collect();
    let u = SolutionField::new(space.clone(), values.clone());
    let v = SolutionField::new(space, values.iter().map(|z| z * 2.0).collect());
    assert_eq!(field_error(&u, &u).unwrap(), 0.0);
    assert!((field_error(&u, &v).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn field_error_across_meshes_and_domain_mismatch() {
    let square = Polygon::rectangle(0.0, 1.0, 0.0, 1.0, WALLS);
    let p = JunctionProblem::new(square.clone(), 1.0, Arc::new(|_| 1.0));
    let f = |x: [f64; 2]| C64::new(x[0] * x[0] * x[1], x[1] * x[1] * x[1] - x[0]);
    let coarse = assemble(&p, generate_mesh(&square, 0.5).unwrap()).unwrap().space;
    let fine = assemble(&p, generate_mesh(&square, 0.2).unwrap()).unwrap().space;
    let u = SolutionField::new(coarse.clone(), coarse.dof_coords.iter().map(|x| f(*x)).collect());
    let v = SolutionField::new(fine.clone(), fine.dof_coords.iter().map(|x| f(*x)).collect());
    // Cubic data is reproduced exactly on both meshes.
    assert!(field_error(&u, &v).unwrap() < 1e-10);

    let wide = Polygon::rectangle(0.0, 2.0, 0.0, 1.0, WALLS);
    let pw = JunctionProblem::new(wide.clone(), 1.0, Arc::new(|_| 1.0));
    let w = assemble(&pw, generate_mesh(&wide, 0.5).unwrap()).unwrap().space;
    let wf = SolutionField::zeros(w);
    assert!(matches!(field_error(&u, &wf), Err(guidewave::Error::DomainMismatch(_))));
}

#[test]
fn interior_matrix_is_symmetric_and_dtn_touches_interface_only() {
    let cell = CellSpec::unit();
    let (c, k) = (2.0, PI);
    let q = RefractiveIndex::constant(cell, c);
    let p = build_pencil(&q, k, cell, 6).unwrap();
    let tol = Tolerances::default();
    let modes = solve_modes(&p, 3, &tol).unwrap();
    let (plus, minus) = classify_and_orthonormalize(&modes, &p, 3, &tol).unwrap();

    let tags = [
        EdgeTag::Wall,
        EdgeTag::InterfacePlus,
        EdgeTag::Wall,
        EdgeTag::InterfaceMinus,
    ];
    let domain = Polygon::rectangle(0.0, 2.0, 0.0, 1.0, tags);
    let mut prob = JunctionProblem::new(domain.clone(), k, Arc::new(move |_| c));
    let bare = assemble(&prob, generate_mesh(&domain, 0.25).unwrap()).unwrap();
    prob.dtn_plus = Some(plus);
    prob.dtn_minus = Some(minus);
    let full = assemble(&prob, generate_mesh(&domain, 0.25).unwrap()).unwrap();
    let dense = |s: &SparseColMat<usize, C64>| s.to_dense();
    let (a, b) = (dense(&bare.matrix), dense(&full.matrix));
    let n = a.nrows();
    let mut interface = vec![false; n];
    for d in 0..full.space.n_dofs {
        if let (Some(i), Some(EdgeTag::InterfacePlus | EdgeTag::InterfaceMinus)) =
            (full.free_map[d], full.space.dof_tags[d])
        {
            interface[i] = true;
        }
    }
    for i in 0..n {
        for j in 0..n {
            assert!((a[(i, j)] - a[(j, i)].conj()).norm() < 1e-12);
            assert!(a[(i, j)].im.abs() < 1e-14);
            let diff = (b[(i, j)] - a[(i, j)]).norm();
            if !(interface[i] && interface[j]) {
                assert!(diff < 1e-14, "coupling outside the interface at ({i}, {j})");
            }
        }
    }
}

fn uniform_guide_error(h: f64, m: usize) -> f64 {
    let cell = CellSpec::unit();
    let (c, k) = (2.0, PI);
    let q = RefractiveIndex::constant(cell, c);
    let p = build_pencil(&q, k, cell, 8).unwrap();
    let tol = Tolerances::default();
    let modes = solve_modes(&p, m, &tol).unwrap();
    let (plus, _) = classify_and_orthonormalize(&modes, &p, m, &tol).unwrap();
    let incident = plus
        .modes
        .iter()
        .find(|md| md.kind == ModeKind::PropagatingRight)
        .unwrap()
        .clone();

    let tags = [
        EdgeTag::Wall,
        EdgeTag::InterfacePlus,
        EdgeTag::Wall,
        EdgeTag::DirichletData,
    ];
    let domain = Polygon::rectangle(0.0, 2.0, 0.0, 1.0, tags);
    let mut prob = JunctionProblem::new(domain.clone(), k, Arc::new(move |_| c));
    let inc = incident.clone();
    prob.dirichlet = Some(Arc::new(move |x| inc.eval_local(x[0], x[1], false)));
    prob.dtn_plus = Some(plus);
    let lines = [InteriorLine::vertical(1.0, 0.0, 1.0, None)];
    let mesh = generate_mesh_with(&domain, h, &lines).unwrap();
    let u = solve(&assemble(&prob, mesh).unwrap()).unwrap();
    field_error_fn(&u, &|x| incident.eval_local(x[0], x[1], false))
}

#[test]
fn transparent_boundary_passes_incident_mode() {
    let err = uniform_guide_error(0.05, 4);
    assert!(err < 1e-3, "relative error {err:.3e}");
}
