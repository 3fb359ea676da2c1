use std::path::Path;
use std::sync::Arc;

use guidewave::config::Config;
use guidewave::fem::{field_error, FeSpace};
use guidewave::layout::Layout;
use guidewave::oracle::lap_reference;
use guidewave::Error;

/// Example 1 at a coarse mesh size.
fn example_one(h: f64) -> Config {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example1.cfg");
    let mut cfg = Config::load(&path).unwrap();
    cfg.mesh.h = h;
    cfg
}

fn target_space(cfg: &Config) -> Arc<FeSpace> {
    let layout = Layout::new(cfg).unwrap();
    Arc::new(FeSpace::new(layout.mesh(cfg.mesh.h).unwrap()))
}

fn reference(
    cfg: &Config,
    epsilon: f64,
    buffer: usize,
    target: &Arc<FeSpace>,
) -> guidewave::Result<guidewave::fem::SolutionField> {
    let layout = Layout::new(cfg)?;
    let dom = layout.lap_domain(buffer, &cfg.tolerances);
    lap_reference(&dom, epsilon, cfg.mesh.h, target.clone())
}

#[test]
fn unforced_reference_vanishes() {
    let mut cfg = example_one(0.1);
    cfg.junction.source = None;
    let target = target_space(&cfg);
    let u = reference(&cfg, 1e-2, 5, &target).unwrap();
    assert!(u.values.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn buffer_length_does_not_change_the_restriction() {
    let cfg = example_one(0.1);
    let target = target_space(&cfg);
    let short = reference(&cfg, 1e-2, 10, &target).unwrap();
    let long = reference(&cfg, 1e-2, 20, &target).unwrap();
    let diff = field_error(&short, &long).unwrap();
    assert!(diff <= 1e-3, "buffer 10 vs 20 differ by {diff:.3e}");
}

#[test]
fn halving_absorption_changes_the_reference_less_each_time() {
    let cfg = example_one(0.1);
    let target = target_space(&cfg);
    let eps = [4e-2, 2e-2, 1e-2, 5e-3];
    let fields: Vec<_> = eps.iter().map(|&e| reference(&cfg, e, 15, &target).unwrap()).collect();
    let diffs: Vec<f64> = fields.windows(2).map(|w| field_error(&w[1], &w[0]).unwrap()).collect();
    assert!(diffs.iter().all(|d| *d < 0.1), "{diffs:?}");
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
}

#[test]
fn short_buffer_with_propagating_modes_is_diagnosed() {
    // A constant index 1.5 at k = π carries a propagating mode, which an
    // absorption of 1e-4 cannot damp over five periods.
    let mut cfg = example_one(0.1);
    cfg.wavenumber = std::f64::consts::PI;
    for g in [&mut cfg.left_guide, &mut cfg.right_guide] {
        g.qhat = vec![[0.0, 0.0, 1.5, 0.0]];
    }
    cfg.junction.perturbation = None;
    let target = target_space(&cfg);
    match reference(&cfg, 1e-4, 5, &target) {
        Err(Error::InsufficientDecay { far_end, limit }) => assert!(far_end > limit),
        other => panic!("expected a decay diagnostic, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn invalid_absorption_settings_rejected() {
    let cfg = example_one(0.1);
    let target = target_space(&cfg);
    assert!(matches!(reference(&cfg, 0.0, 10, &target), Err(Error::InvalidInput(_))));
    assert!(matches!(reference(&cfg, 1e-2, 4, &target), Err(Error::InvalidInput(_))));
}
