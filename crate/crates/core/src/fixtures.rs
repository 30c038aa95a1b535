//! Band-limited test potentials and the standard endpoint pairs used by the
//! experiments.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::Result;
use crate::grid::{Grid, GridField, Potential};

/// One real Fourier mode `c·cos(2π(kx x + ky y)) + s·sin(2π(kx x + ky y))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigMode {
    pub kx: i32,
    pub ky: i32,
    pub cos: f64,
    pub sin: f64,
}

impl TrigMode {
    pub fn cos(kx: i32, ky: i32, amplitude: f64) -> Self {
        Self {
            kx,
            ky,
            cos: amplitude,
            sin: 0.0,
        }
    }

    pub fn sin(kx: i32, ky: i32, amplitude: f64) -> Self {
        Self {
            kx,
            ky,
            cos: 0.0,
            sin: amplitude,
        }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let phase = 2.0 * PI * (self.kx as f64 * x + self.ky as f64 * y);
        self.cos * phase.cos() + self.sin * phase.sin()
    }

    /// Magnitude of the mode's contribution to `Δ/2`.
    fn half_laplacian_amplitude(&self) -> f64 {
        let k2 = (self.kx * self.kx + self.ky * self.ky) as f64;
        2.0 * PI * PI * k2 * self.cos.hypot(self.sin)
    }
}

/// Samples a constant plus a sum of modes.
pub fn trig_field(grid: &Grid, constant: f64, modes: &[TrigMode]) -> GridField {
    grid.sample(|x, y| constant + modes.iter().map(|m| m.eval(x, y)).sum::<f64>())
}

pub fn trig_potential(grid: &Grid, constant: f64, modes: &[TrigMode]) -> Result<Potential> {
    Potential::new(trig_field(grid, constant, modes), grid)
}

/// Random modes with `|kx|, |ky| ≤ max_wavenumber`, coefficients uniform in
/// `[−1, 1]` and damped like `1/(1 + |k|²)`.
pub fn random_modes<R: Rng>(rng: &mut R, max_wavenumber: i32) -> Vec<TrigMode> {
    let mut modes = Vec::new();
    for kx in 0..=max_wavenumber {
        for ky in -max_wavenumber..=max_wavenumber {
            if kx == 0 && ky <= 0 {
                continue;
            }
            let damp = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
            modes.push(TrigMode {
                kx,
                ky,
                cos: damp * rng.gen_range(-1.0..1.0),
                sin: damp * rng.gen_range(-1.0..1.0),
            });
        }
    }
    modes
}

/// A random band-limited field (wavenumbers ≤ 2) with sup norm `amplitude`.
pub fn random_band_limited<R: Rng>(grid: &Grid, rng: &mut R, amplitude: f64) -> GridField {
    let f = trig_field(grid, 0.0, &random_modes(rng, 2));
    let s = f.sup_norm();
    f.map(|v| v * amplitude / s)
}

/// Scales `modes` so that the bound `Σ 2π²|k|²|c_k|` on `|Δu/2|` equals
/// `spread`; the density then stays in `[1 − spread, 1 + spread]`.
pub fn scale_to_spread(modes: &[TrigMode], spread: f64) -> Vec<TrigMode> {
    let total: f64 = modes.iter().map(TrigMode::half_laplacian_amplitude).sum();
    let s = if total > 0.0 { spread / total } else { 0.0 };
    modes
        .iter()
        .map(|m| TrigMode {
            cos: m.cos * s,
            sin: m.sin * s,
            ..*m
        })
        .collect()
}

/// A random band-limited potential whose density lies within
/// `[1 − spread, 1 + spread]`, `spread < 1`.
pub fn random_potential<R: Rng>(grid: &Grid, rng: &mut R, spread: f64) -> Potential {
    assert!(spread < 1.0);
    let modes = scale_to_spread(&random_modes(rng, 2), spread * rng.gen_range(0.5..1.0));
    trig_potential(grid, rng.gen_range(-0.1..0.1), &modes)
        .expect("density bound keeps the potential Kähler")
}

/// A named endpoint pair.
#[derive(Debug, Clone)]
pub struct EndpointPair {
    pub name: &'static str,
    pub start: Potential,
    pub end: Potential,
}

/// The five standard endpoint pairs: two spatial constants, a single mode
/// against a constant, two rotated modes, a two-mode mixture, and a pair of
/// fixed-seed random potentials. Densities stay within `[0.6, 1.4]` and
/// amplitudes are of order `10⁻²`, which keeps the small-ε solves well
/// conditioned.
pub fn standard_pairs(grid: &Grid) -> Vec<EndpointPair> {
    let a = 0.01;
    let mk = |c: f64, modes: &[TrigMode]| trig_potential(grid, c, modes).unwrap();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(20_240_611);
    let modes_a = scale_to_spread(&random_modes(&mut rng, 2), 0.3);
    let modes_b = scale_to_spread(&random_modes(&mut rng, 2), 0.3);
    vec![
        EndpointPair {
            name: "constants",
            start: mk(0.0, &[]),
            end: mk(0.5, &[]),
        },
        EndpointPair {
            name: "mode-vs-constant",
            start: mk(0.0, &[TrigMode::cos(1, 0, a)]),
            end: mk(0.1, &[]),
        },
        EndpointPair {
            name: "rotated-modes",
            start: mk(0.0, &[TrigMode::cos(1, 0, a)]),
            end: mk(0.0, &[TrigMode::cos(0, 1, a)]),
        },
        EndpointPair {
            name: "mixture",
            start: mk(0.0, &[TrigMode::sin(1, 1, 0.5 * a), TrigMode::cos(0, 2, 0.2 * a)]),
            end: mk(0.05, &[TrigMode::cos(1, -1, 0.5 * a), TrigMode::sin(2, 0, 0.2 * a)]),
        },
        EndpointPair {
            name: "random",
            start: mk(0.0, &modes_a),
            end: mk(0.02, &modes_b),
        },
    ]
}
