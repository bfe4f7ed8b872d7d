use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::field::{BulkField, HeightField};
use super::fourier::{forward_height, inverse_bulk, SpectralBulk, SpectralHeight};
use super::grid::VerticalGrid;
use crate::error::{Error, Result};

/// Which exponential profile lifts boundary data into the bulk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionKind {
    /// Multiplier `e^{|xi'| x_N}` (harmonic lift).
    Harmonic,
    /// Multiplier `e^{sqrt(1+|xi'|^2) x_N}`.
    Bessel,
}

impl ExtensionKind {
    /// Harmonic lift for `N <= 3`, Bessel lift for `N >= 4`.
    pub fn for_dimension(n: usize) -> Result<Self> {
        match n {
            2 | 3 => Ok(ExtensionKind::Harmonic),
            4 => Ok(ExtensionKind::Bessel),
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }

    pub fn rate(self, k: f64) -> f64 {
        match self {
            ExtensionKind::Harmonic => k,
            ExtensionKind::Bessel => (1.0 + k * k).sqrt(),
        }
    }
}

/// `d^{alpha'} d_N^{z_order}` of the extension of `f_hat`, evaluated exactly per mode.
/// `axes` lists horizontal derivative axes (repetition allowed).
pub fn extension_derivative(
    f_hat: &SpectralHeight,
    v: &VerticalGrid,
    kind: ExtensionKind,
    axes: &[usize],
    z_order: u32,
) -> BulkField {
    let g = &f_hat.grid;
    let nz = v.points();
    let nodes = v.nodes();
    let mut s = SpectralBulk::zeros(g, v, 1);
    s.coeffs.par_chunks_mut(nz).enumerate().for_each(|(mode, col)| {
        let xi = g.derivative_wavevector(mode);
        let mut m = f_hat.coeffs[mode];
        for &a in axes {
            m *= Complex64::new(0.0, xi[a]);
        }
        let r = kind.rate(g.wavenumber(mode));
        m *= r.powi(z_order as i32);
        for (c, &z) in col.iter_mut().zip(&nodes) {
            *c = m * (r * z).exp();
        }
    });
    inverse_bulk(&s)
}

pub fn extend(f: &HeightField, v: &VerticalGrid, kind: ExtensionKind) -> Result<BulkField> {
    let s = forward_height(f)?;
    Ok(extension_derivative(&s, v, kind, &[], 0))
}

/// Harmonic extension `F^{-1}[e^{|xi'| x_N} f_hat]`.
pub fn extend_a(f: &HeightField, v: &VerticalGrid) -> Result<BulkField> {
    extend(f, v, ExtensionKind::Harmonic)
}

/// Bessel extension `F^{-1}[e^{sqrt(1+|xi'|^2) x_N} f_hat]`.
pub fn extend_b(f: &HeightField, v: &VerticalGrid) -> Result<BulkField> {
    extend(f, v, ExtensionKind::Bessel)
}

/// Dimension-dependent extension used by the flattening map.
pub fn extend_en(f: &HeightField, n: usize, v: &VerticalGrid) -> Result<BulkField> {
    let kind = ExtensionKind::for_dimension(n)?;
    if f.grid.dim() != n {
        return Err(Error::GridMismatch("height field dimension differs from N"));
    }
    extend(f, v, kind)
}
