//! Deterministic field samplers shared by unit, property, and
//! acceptance tests.

use std::sync::Arc;

use crate::basis::{build_triple, BasisSpec, Boundary, GelfandTriple, SpectralField};
use crate::rng;

pub fn dirichlet_1d(n: usize, length: f64, v_order: u8) -> Arc<GelfandTriple> {
    build_triple(&BasisSpec {
        spatial_dimension: 1,
        length,
        boundary: Boundary::Dirichlet,
        mode_count: n,
        v_order,
        divergence_free: false,
        dual_pivot: false,
    })
    .unwrap()
}

pub fn periodic_1d(n: usize, length: f64, v_order: u8) -> Arc<GelfandTriple> {
    build_triple(&BasisSpec {
        spatial_dimension: 1,
        length,
        boundary: Boundary::Periodic,
        mode_count: n,
        v_order,
        divergence_free: false,
        dual_pivot: false,
    })
    .unwrap()
}

/// Gaussian spectral field with coefficient decay `(1+k)^-1`, scaled by
/// `amplitude`. Deterministic in `seed`.
pub fn sample_field_seeded(triple: &Arc<GelfandTriple>, amplitude: f64, seed: u64) -> SpectralField {
    sample_field_decay(triple, amplitude, 1.0, seed)
}

/// Gaussian spectral field with decay exponent `decay` over the mode
/// index, used to probe both smooth and rough regimes.
pub fn sample_field_decay(
    triple: &Arc<GelfandTriple>,
    amplitude: f64,
    decay: f64,
    seed: u64,
) -> SpectralField {
    let coeffs = (0..triple.n_modes())
        .map(|k| {
            amplitude * rng::normal(&[seed, 0xF1E1D, k as u64]) / (1.0 + k as f64).powf(decay)
        })
        .collect();
    SpectralField {
        coeffs,
        triple: Arc::clone(triple),
    }
}
