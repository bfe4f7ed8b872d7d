//! Weighted Duhamel estimate for the diagonal model semigroup.

use rand::Rng;
use surfflow::analysis::{check_duhamel_estimate, BumpTerm, DiagonalSemigroup, DuhamelGrid, DuhamelReport, Forcing};
use surfflow::Result;

use super::fields::rng;

/// Model and sampling parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct DuhamelSetup {
    pub a: f64,
    pub delta: f64,
    pub p: f64,
    pub modes: usize,
    pub rate_min: f64,
    pub rate_max: f64,
    pub forcings: usize,
    pub grid: DuhamelGrid,
    pub seed: u64,
}

impl DuhamelSetup {
    pub fn new(a: f64, delta: f64, p: f64) -> Self {
        Self {
            a,
            delta,
            p,
            modes: 10,
            rate_min: 1e-3,
            rate_max: 10.0,
            forcings: 6,
            grid: DuhamelGrid { dt: 0.05, support: 16.0, t_max: 1e4, log_points: 160 },
            seed: 5,
        }
    }
}

/// Random bump forcings supported in `[0, support]`.
pub fn random_forcings(dim: usize, count: usize, support: f64, seed: u64) -> Vec<Forcing> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let terms = (0..4)
                .map(|_| {
                    let width = r.gen_range(0.5..3.0);
                    let center = r.gen_range(width..support - width);
                    let amplitudes = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
                    BumpTerm { center, width, amplitudes }
                })
                .collect();
            Forcing::bumps(dim, terms)
        })
        .collect()
}

/// Reports on the base grid and on the refined grid.
pub fn duhamel_check(setup: &DuhamelSetup) -> Result<(DuhamelReport, DuhamelReport)> {
    let sg = DiagonalSemigroup::log_spaced(setup.modes, setup.rate_min, setup.rate_max, setup.a, setup.delta)?;
    let forcings = random_forcings(setup.modes, setup.forcings, setup.grid.support, setup.seed);
    let base = check_duhamel_estimate(&sg, &forcings, setup.p, &setup.grid)?;
    let fine = check_duhamel_estimate(&sg, &forcings, setup.p, &setup.grid.refined())?;
    Ok((base, fine))
}

/// `(a, delta)` for the regimes `a + delta` below, at and above one.
pub fn regime_points(delta: f64) -> [(f64, f64); 3] {
    [(0.9 - delta, delta), (1.0 - delta, delta), (1.0, 0.1)]
}
