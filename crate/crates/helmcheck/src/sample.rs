//! Deterministic sampling of phase points.
//!
//! Points are drawn with splitmix64 so that reports are byte-identical
//! across platforms for a fixed seed.

use serde::{Deserialize, Serialize};

use crate::error::SymError;
use crate::expr::{CoordIndex, PhasePoint, ScalarField, DEFAULT_Y_MIN};

/// Default seed for the sampling stream.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

/// splitmix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Axis-aligned sampling region on `TM \ {0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleBox {
    /// Per-coordinate [lo, hi] for `x`.
    pub box_x: Vec<[f64; 2]>,
    /// Per-coordinate [lo, hi] for `y`.
    pub box_y: Vec<[f64; 2]>,
    /// Zero-section guard; points with |y| below this are rejected.
    pub y_min: f64,
}

impl SampleBox {
    /// Symmetric default box `[-1,1]^2n` for dimension `n`.
    pub fn default_for(n: usize) -> SampleBox {
        SampleBox {
            box_x: vec![[-1.0, 1.0]; n],
            box_y: vec![[-1.0, 1.0]; n],
            y_min: DEFAULT_Y_MIN,
        }
    }

    pub fn dim(&self) -> usize {
        self.box_x.len()
    }

    /// Draws `count` points, rejecting those inside the zero-section guard.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<PhasePoint> {
        let mut rng = SplitMix64::new(seed);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count && attempts < 1000 * count.max(1) {
            attempts += 1;
            let x: Vec<f64> = self.box_x.iter().map(|b| rng.next_range(b[0], b[1])).collect();
            let y: Vec<f64> = self.box_y.iter().map(|b| rng.next_range(b[0], b[1])).collect();
            if let Ok(p) = PhasePoint::new(x, y, self.y_min) {
                out.push(p);
            }
        }
        out
    }
}

/// Draws a random polynomial of total degree at most `degree` in all
/// 2n coordinates, with small integer coefficients. Used to exercise
/// identities on generic inputs.
pub fn random_polynomial(rng: &mut SplitMix64, n: usize, degree: usize) -> ScalarField {
    let vars: Vec<ScalarField> = (0..2 * n)
        .map(|a| ScalarField::var(n, CoordIndex::from_flat(a, n)))
        .collect();
    let mut acc = ScalarField::zero(n);
    let terms = 2 + (rng.next_u64() % 4) as usize;
    for _ in 0..terms {
        let coeff = (rng.next_u64() % 9) as f64 - 4.0;
        let mut term = ScalarField::constant(n, coeff);
        let deg = (rng.next_u64() % (degree as u64 + 1)) as usize;
        for _ in 0..deg {
            let v = &vars[(rng.next_u64() % (2 * n) as u64) as usize];
            term = term.mul(v);
        }
        acc = acc.add(&term);
    }
    acc
}

/// Requires at least `needed` points; shared precondition of the checks.
pub fn require_points(points: &[PhasePoint], needed: usize) -> Result<(), SymError> {
    if points.len() < needed {
        Err(SymError::InsufficientSamples { needed, got: points.len() })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // first outputs for seed 1234567, cross-checked against the
        // published splitmix64 reference implementation
        let mut rng = SplitMix64::new(1234567);
        assert_eq!(rng.next_u64(), 6457827717110365317);
        assert_eq!(rng.next_u64(), 3203168211198807973);
    }

    #[test]
    fn sampling_is_deterministic_and_respects_guard() {
        let b = SampleBox::default_for(2);
        let p1 = b.sample(42, 20);
        let p2 = b.sample(42, 20);
        assert_eq!(p1, p2);
        assert_eq!(p1.len(), 20);
        for p in &p1 {
            let norm = p.y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm >= b.y_min);
            for (c, bx) in p.x.iter().zip(&b.box_x) {
                assert!(*c >= bx[0] && *c < bx[1]);
            }
        }
    }

    #[test]
    fn random_polynomial_is_finite() {
        let mut rng = SplitMix64::new(7);
        let b = SampleBox::default_for(2);
        for _ in 0..10 {
            let f = random_polynomial(&mut rng, 2, 2);
            for p in b.sample(1, 5) {
                assert!(f.eval(&p).unwrap().is_finite());
            }
        }
    }
}
