//! Shared helpers for the unit tests: finite-difference oracles and
//! deterministic point sets.

use crate::expr::{parse_expr, CoordIndex, PhasePoint, ScalarField};
use crate::geom::Semispray;
use crate::sample::SampleBox;

/// Central-difference partial derivative, used as an oracle against the
/// symbolic `diff`.
pub fn fd_partial(f: &ScalarField, v: CoordIndex, p: &PhasePoint, h: f64) -> f64 {
    let fp = f.eval(&p.shifted(v, h)).unwrap();
    let fm = f.eval(&p.shifted(v, -h)).unwrap();
    (fp - fm) / (2.0 * h)
}

/// `count` deterministic points in dimension `n` with every coordinate in
/// `[lo, lo + 1.5]`, so a positive `lo` keeps the points inside charts that
/// need `x_i > 0` or `y_i > 0`.
pub fn seeded_points(n: usize, count: usize, seed: u64, lo: f64) -> Vec<PhasePoint> {
    let b = SampleBox {
        box_x: vec![[lo, lo + 1.5]; n],
        box_y: vec![[lo, lo + 1.5]; n],
        y_min: 0.05,
    };
    let pts = b.sample(seed, count);
    assert_eq!(pts.len(), count, "rejection sampling starved");
    pts
}

/// Geodesic spray of the hyperbolic half-plane metric
/// `(dx1^2 + dx2^2) / x2^2`; requires `x2 > 0`.
pub fn halfplane_spray() -> Semispray {
    Semispray::new(
        2,
        vec![
            parse_expr("-y1*y2/x2", 2).unwrap(),
            parse_expr("(y1^2 - y2^2)/(2*x2)", 2).unwrap(),
        ],
    )
}

/// Damped oscillator semispray in one dimension: `G = y1/2`, which is
/// 1-homogeneous and therefore not a spray.
pub fn damped_spray() -> Semispray {
    Semispray::new(1, vec![parse_expr("y1/2", 1).unwrap()])
}
