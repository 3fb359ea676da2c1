use std::f64::consts::PI;
use std::sync::Mutex;

use guidewave::dtn::{build_gram, Interface};
use guidewave::floquet::{build_pencil, classify_and_orthonormalize, solve_modes, ModeBasis};
use guidewave::model::{CellSpec, RefractiveIndex, Tolerances};
use num_complex::Complex64 as C64;
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

type Families = (ModeBasis, ModeBasis);

fn periodic_bases(k: f64, m: usize) -> Families {
    static CACHE: Mutex<Vec<(u64, usize, Families)>> = Mutex::new(Vec::new());
    let mut cache = CACHE.lock().unwrap();
    if let Some((_, _, b)) = cache.iter().find(|e| e.0 == k.to_bits() && e.1 == m) {
        return b.clone();
    }
    let bases = compute_bases(k, m);
    cache.push((k.to_bits(), m, bases.clone()));
    bases
}

fn compute_bases(k: f64, m: usize) -> (ModeBasis, ModeBasis) {
    let tol = Tolerances::default();
    let cell = CellSpec::unit();
    let q = RefractiveIndex::from_table(cell, &Q1).unwrap();
    let p = build_pencil(&q, k, cell, 16).unwrap();
    let modes = solve_modes(&p, m, &tol).unwrap();
    classify_and_orthonormalize(&modes, &p, m, &tol).unwrap()
}

#[test]
fn scaled_gram_stays_well_conditioned_as_m_grows() {
    // Unscaled, the Gram condition grows like exp(π) per evanescent pair.
    for m in [2, 4, 8] {
        let (plus, minus) = periodic_bases(1.0, m);
        for basis in [&plus, &minus] {
            let op = build_gram(basis, &Interface::uniform(0.5, 0.0, 1.0, 16), 8).unwrap();
            assert!(op.condition < 10.0, "M = {m}: condition {}", op.condition);
            assert!(!op.truncated);
        }
    }
}

#[test]
fn gram_is_hermitian_with_positive_diagonal() {
    let (plus, _) = periodic_bases(3.0, 4);
    let op = build_gram(&plus, &Interface::uniform(0.25, 0.0, 1.0, 12), 8).unwrap();
    let n = op.n_modes();
    for i in 0..n {
        assert!(op.gram[(i, i)].re > 0.0 && op.gram[(i, i)].im.abs() < 1e-12);
        for j in 0..n {
            assert!((op.gram[(i, j)] - op.gram[(j, i)].conj()).norm() < 1e-12);
        }
    }
}

#[test]
fn traces_match_direct_mode_evaluation() {
    let (plus, _) = periodic_bases(3.0, 3);
    let x1 = 0.3;
    let op = build_gram(&plus, &Interface::uniform(x1, 0.0, 1.0, 4), 6).unwrap();
    for (m, mode) in plus.modes.iter().enumerate() {
        for (q, &y) in op.nodes.iter().enumerate() {
            let direct = mode.eval_local(x1, y, false);
            assert!((op.traces[(m, q)] - direct).norm() < 1e-10 * (1.0 + direct.norm()));
        }
    }
}

#[test]
fn trace_length_mismatch_rejected() {
    let (plus, _) = periodic_bases(1.0, 2);
    let op = build_gram(&plus, &Interface::uniform(0.5, 0.0, 1.0, 4), 4).unwrap();
    assert!(op.project(&[C64::new(1.0, 0.0)]).is_err());
}

#[test]
fn interface_height_must_match_guide() {
    let (plus, _) = periodic_bases(1.0, 2);
    assert!(build_gram(&plus, &Interface::uniform(0.5, 0.0, 0.5, 4), 4).is_err());
}

#[test]
fn neumann_of_decaying_sine_trace() {
    // A q = 0 guide: the plus family at M = 2 is exp(-π x1) sin(π x2), so
    // the trace sin(π x2) has outward Neumann data -π sin(π x2).
    let tol = Tolerances::default();
    let cell = CellSpec::unit();
    let q = RefractiveIndex::from_table(cell, &[]).unwrap();
    let p = build_pencil(&q, 1.0, cell, 8).unwrap();
    let modes = solve_modes(&p, 2, &tol).unwrap();
    let (plus, minus) = classify_and_orthonormalize(&modes, &p, 2, &tol).unwrap();
    assert_eq!((plus.len(), minus.len()), (1, 1));
    for (basis, x1) in [(&plus, 0.0), (&minus, 0.7)] {
        let op = build_gram(basis, &Interface::uniform(x1, 0.0, 1.0, 8), 8).unwrap();
        let g: Vec<C64> = op.nodes.iter().map(|y| C64::new((PI * y).sin(), 0.0)).collect();
        let dn = op.neumann_functional(&g).unwrap();
        for (q, y) in op.nodes.iter().enumerate() {
            assert!((dn[q] + PI * (PI * y).sin()).norm() < 1e-9, "side {:?}", basis.side);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decomposition_inverts_reconstruction(
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8),
        x1 in 0.0f64..1.0,
    ) {
        let (plus, _) = periodic_bases(1.0, 4);
        let op = build_gram(&plus, &Interface::uniform(x1, 0.0, 1.0, 16), 8).unwrap();
        let c: Vec<C64> = coeffs.iter().take(op.n_modes()).map(|&(a, b)| C64::new(a, b)).collect();
        let back = op.decompose_trace(&op.reconstruct(&c)).unwrap();
        let scale = c.iter().map(|v| v.norm()).fold(1e-3, f64::max);
        for (a, b) in back.iter().zip(&c) {
            prop_assert!((a - b).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn neumann_map_is_linear(
        a in (-2.0f64..2.0, -2.0f64..2.0),
        seed in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        let (_, minus) = periodic_bases(1.0, 3);
        let op = build_gram(&minus, &Interface::uniform(-0.5, 0.0, 1.0, 8), 8).unwrap();
        let nq = op.nodes.len();
        let g: Vec<C64> = (0..nq).map(|i| C64::new(seed[i % 64], seed[(i * 7 + 3) % 64])).collect();
        let h: Vec<C64> = op.nodes.iter().map(|y| C64::new(y * (1.0 - y), 0.0)).collect();
        let a = C64::new(a.0, a.1);
        let combo: Vec<C64> = g.iter().zip(&h).map(|(x, y)| a * x + y).collect();
        let (ng, nh, nc) = (
            op.neumann_functional(&g).unwrap(),
            op.neumann_functional(&h).unwrap(),
            op.neumann_functional(&combo).unwrap(),
        );
        for q in 0..nq {
            prop_assert!((nc[q] - a * ng[q] - nh[q]).norm() < 1e-8 * (1.0 + nc[q].norm()));
        }
    }
}
