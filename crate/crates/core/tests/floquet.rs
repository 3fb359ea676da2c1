use std::f64::consts::PI;

use guidewave::floquet::{
    build_pencil, classify_and_orthonormalize, eval_mode, solve_modes, strip_threshold, ModeKind, Side,
};
use guidewave::model::{CellSpec, RefractiveIndex, Tolerances};
use guidewave::Error;
use proptest::prelude::*;

const Q1: [[f64; 4]; 7] = [
    [0.0, 0.0, 2.0, 0.0],
    [-7.0, 1.0, 2.0, -4.0],
    [7.0, 1.0, 2.0, 4.0],
    [-3.0, 2.0, 3.0, 0.0],
    [3.0, 2.0, 3.0, 0.0],
    [-1.0, 3.0, 1.0, 0.2],
    [1.0, 3.0, 1.0, -0.2],
];

#[test]
fn stretched_empty_guide_decays_per_period() {
    // q = 0 on a cell of period 2 and height 0.5: w = exp(-πℓ x1 / H) sin(πℓ x2 / H),
    // so the per-period quasimomentum is iπℓL/H. The kept rectangle has
    // height MπL/H, which holds ℓ = 1..M-1 for M = 3.
    let cell = CellSpec::new(2.0, 0.5).unwrap();
    let q = RefractiveIndex::from_table(cell, &[]).unwrap();
    let p = build_pencil(&q, 1.0, cell, 12).unwrap();
    let modes = solve_modes(&p, 3, &Tolerances::default()).unwrap();
    let mut im: Vec<f64> = modes.iter().map(|m| m.alpha.im).filter(|v| *v > 0.0).collect();
    im.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(im.len(), 2, "{im:?}");
    for (l, v) in im.iter().enumerate() {
        assert!((v - 4.0 * PI * (l + 1) as f64).abs() < 1e-8, "{v}");
    }
}

#[test]
fn periodic_index_families_are_balanced_and_outgoing() {
    let tol = Tolerances::default();
    let cell = CellSpec::unit();
    let q = RefractiveIndex::from_table(cell, &Q1).unwrap();
    let p = build_pencil(&q, 3.0, cell, 16).unwrap();
    let modes = solve_modes(&p, 4, &tol).unwrap();
    let (plus, minus) = classify_and_orthonormalize(&modes, &p, 4, &tol).unwrap();
    assert_eq!(plus.side, Side::Plus);
    assert_eq!(plus.len(), minus.len());
    assert_eq!(plus.propagating, minus.propagating);
    assert!(plus.propagating >= 1);
    for m in &plus.modes {
        match m.kind {
            ModeKind::PropagatingRight => assert!(m.lambda.unwrap() > 0.0 && m.alpha.im.abs() < 1e-8),
            ModeKind::EvanescentRight => assert!(m.alpha.im > 0.0),
            other => panic!("unexpected kind {other:?} in the plus family"),
        }
    }
    for m in &minus.modes {
        match m.kind {
            ModeKind::PropagatingLeft => assert!(m.lambda.unwrap() < 0.0),
            ModeKind::EvanescentLeft => assert!(m.alpha.im < 0.0),
            other => panic!("unexpected kind {other:?} in the minus family"),
        }
    }
    // Propagating modes come first, then decay rates increase.
    let rates: Vec<f64> = plus.modes[plus.propagating..].iter().map(|m| m.alpha.im).collect();
    assert!(rates.windows(2).all(|w| w[0] <= w[1] + 1e-12));
}

#[test]
fn modes_are_quasi_periodic() {
    let tol = Tolerances::default();
    let cell = CellSpec::unit();
    let q = RefractiveIndex::from_table(cell, &Q1).unwrap();
    let p = build_pencil(&q, 3.0, cell, 16).unwrap();
    let modes = solve_modes(&p, 3, &tol).unwrap();
    for m in &modes {
        for x in [[0.1, 0.3], [0.77, 0.61]] {
            let here = eval_mode(m, 0, x, false);
            let next = eval_mode(m, 1, x, false);
            assert!((next - m.z * here).norm() < 1e-10 * (1.0 + here.norm()));
        }
    }
}

#[test]
fn propagating_mode_solves_the_equation_pointwise() {
    // Finite-difference Laplacian of a propagating mode against -k² q w.
    let tol = Tolerances::default();
    let cell = CellSpec::unit();
    let k = 3.0;
    let q = RefractiveIndex::from_table(cell, &Q1).unwrap();
    let p = build_pencil(&q, k, cell, 24).unwrap();
    let modes = solve_modes(&p, 2, &tol).unwrap();
    let (plus, _) = classify_and_orthonormalize(&modes, &p, 2, &tol).unwrap();
    let m = &plus.modes[0];
    let h = 1e-3;
    let w = |x: f64, y: f64| m.eval_local(x, y, false);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (x, y) in [(0.2, 0.5), (0.45, 0.3), (0.8, 0.7)] {
        let lap = (w(x + h, y) + w(x - h, y) + w(x, y + h) + w(x, y - h) - w(x, y) * 4.0) / (h * h);
        let rhs = -w(x, y) * (k * k * q.eval_periodic([x, y]));
        worst = worst.max((lap - rhs).norm());
        scale = scale.max(rhs.norm()).max(lap.norm());
    }
    assert!(worst < 1e-3 * scale, "defect {worst} against {scale}");
}

#[test]
fn cutoff_wavenumber_is_rejected() {
    // c = 1, k = π is exactly the cut-off of the first sine mode.
    let tol = Tolerances::default();
    let cell = CellSpec::unit();
    let q = RefractiveIndex::constant(cell, 1.0);
    let p = build_pencil(&q, PI, cell, 8).unwrap();
    let modes = solve_modes(&p, 2, &tol).unwrap();
    let err = classify_and_orthonormalize(&modes, &p, 2, &tol).unwrap_err();
    assert!(
        matches!(err, Error::StandingWave { .. } | Error::IndefiniteEnergy { .. }),
        "{err}"
    );
}

#[test]
fn strip_threshold_of_example_index() {
    let q = RefractiveIndex::from_table(CellSpec::unit(), &Q1).unwrap();
    let sup = q.sup_norm();
    for k in [0.5, 1.0, 1.5] {
        let n0 = strip_threshold(k, &q).unwrap();
        let bound = k * k * sup / PI;
        assert!(PI * (2 * n0 - 1) as f64 / 2.0 >= bound);
        assert!(n0 == 1 || PI * (2 * n0 - 3) as f64 / 2.0 < bound);
    }
}

fn random_table() -> impl Strategy<Value = Vec<[f64; 4]>> {
    prop::collection::btree_map((1i64..4, 0i64..3), (-0.5f64..0.5, -0.5f64..0.5), 1..4).prop_map(|rows| {
        let mut table = vec![[0.0, 0.0, 1.0, 0.0]];
        for ((j, l), (re, im)) in rows {
            table.push([j as f64, l as f64, re, im]);
            table.push([-j as f64, l as f64, re, -im]);
        }
        table
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn energy_normalization_of_random_propagating_modes(table in random_table(), k in 2.0f64..4.0) {
        let tol = Tolerances::default();
        let cell = CellSpec::unit();
        let q = RefractiveIndex::from_table(cell, &table).unwrap();
        let p = build_pencil(&q, k, cell, 10).unwrap();
        let modes = solve_modes(&p, 2, &tol).unwrap();
        // Skip draws that land on a cut-off.
        if let Ok((plus, minus)) = classify_and_orthonormalize(&modes, &p, 2, &tol) {
            prop_assert_eq!(plus.propagating, minus.propagating);
            for m in plus.modes.iter().chain(&minus.modes).filter(|m| m.kind.is_propagating()) {
                // Midpoint rule in x1 and x2 over 48² points: exact for these
                // trigonometric polynomials.
                let g = 48;
                let mut e = 0.0;
                for a in 0..g {
                    for b in 0..g {
                        let (x, y) = ((a as f64 + 0.5) / g as f64, (b as f64 + 0.5) / g as f64);
                        e += k * q.eval_periodic([x, y]) * m.eval_local(x, y, false).norm_sqr();
                    }
                }
                e /= (g * g) as f64;
                prop_assert!((e - 1.0).abs() < 1e-8, "energy {}", e);
            }
        }
    }
}

#[test]
fn alpha_is_per_period() {
    // A constant index on a period-2 cell: β = sqrt(k²c − π²) per unit
    // length gives 2β per period.
    let cell = CellSpec::new(2.0, 1.0).unwrap();
    let (c, k) = (1.5, PI);
    let q = RefractiveIndex::constant(cell, c);
    let p = build_pencil(&q, k, cell, 8).unwrap();
    let modes = solve_modes(&p, 1, &Tolerances::default()).unwrap();
    let beta = (k * k * c - PI * PI).sqrt();
    let target = (2.0 * beta + PI).rem_euclid(2.0 * PI) - PI;
    assert!(modes
        .iter()
        .any(|m| m.alpha.im.abs() < 1e-9 && (m.alpha.re.abs() - target.abs()).abs() < 1e-8));
}
