//! Vertical refinement studies for the extension operators and the divergence identity.

use std::f64::consts::PI;

use surfflow::geometry::build_transform;
use surfflow::nonlinear::term_g;
use surfflow::spectral::{
    divergence, extend_a, extend_b, laplacian, norm_lq_bulk, BulkField, HeightField, HorizontalGrid, VerticalGrid,
};
use surfflow::Result;

use super::fields::{rng, RandomSeries};

/// Errors on each level of a refinement and the order between the last two.
#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub levels: Vec<usize>,
    pub errors: Vec<f64>,
}

impl Refinement {
    /// Observed orders between consecutive levels, in terms of the grid spacing.
    pub fn orders(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .zip(self.errors.windows(2))
            .map(|(l, e)| (e[0] / e[1]).ln() / (((l[1] - 1) as f64) / ((l[0] - 1) as f64)).ln())
            .collect()
    }

    pub fn min_order(&self) -> f64 {
        self.orders().into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// Relative `L_2` residuals of `Delta (A f)` and `(1 - Delta)(B f)` on the grid.
pub fn extension_residuals(points: usize, depth: f64, levels: &[usize], seed: u64) -> Result<(Refinement, Refinement)> {
    let h = HorizontalGrid::new(2, 2.0 * PI, points)?;
    let f: HeightField = RandomSeries::new(&mut rng(seed), 2, 1, 6, 3, 2.0 * PI, 1.0).height(&h);
    let mut a_err = Vec::new();
    let mut b_err = Vec::new();
    for &m in levels {
        let v = VerticalGrid::new(depth, m)?;
        let a = extend_a(&f, &v)?;
        let la = laplacian(&a)?;
        a_err.push(norm_lq_bulk(&la, 2.0)? / norm_lq_bulk(&a.dz(2), 2.0)?);
        let b = extend_b(&f, &v)?;
        let lb = laplacian(&b)?;
        let res = b.sub(&lb);
        b_err.push(norm_lq_bulk(&res, 2.0)? / norm_lq_bulk(&b, 2.0)?);
    }
    Ok((
        Refinement { levels: levels.to_vec(), errors: a_err },
        Refinement { levels: levels.to_vec(), errors: b_err },
    ))
}

/// Relative `L_2` error of `div G_tilde - G` for one random `(eta, u)` in dimension `n`.
pub fn divergence_identity(n: usize, points: usize, depth: f64, levels: &[usize], seed: u64) -> Result<Refinement> {
    let length = 2.0 * PI;
    let h = HorizontalGrid::for_dimension(n, length, points)?;
    let mut r = rng(seed);
    let eta = RandomSeries::new(&mut r, n - 1, 1, 4, 2, length, 0.15).height(&h);
    let useries = RandomSeries::new(&mut r, n - 1, n, 4, 2, length, 1.0);
    let zero = HeightField::zeros(&h);
    let mut errors = Vec::new();
    for &m in levels {
        let v = VerticalGrid::new(depth, m)?;
        let u: BulkField = useries.bulk(&h, &v);
        let ts = build_transform(&eta, &zero, n, &v)?;
        let (g, gt) = term_g(&u, &ts)?;
        let err = norm_lq_bulk(&divergence(&gt)?.sub(&g), 2.0)? / norm_lq_bulk(&g, 2.0)?;
        errors.push(err);
    }
    Ok(Refinement { levels: levels.to_vec(), errors })
}
