use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{BulkField, HeightField};
use super::grid::{HorizontalGrid, VerticalGrid};
use crate::error::Result;

/// Unnormalised forward coefficients `sum_x f(x) e^{-i xi.x}` of a height field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralHeight {
    pub grid: HorizontalGrid,
    pub coeffs: Vec<Complex64>,
}

/// Per-mode vertical profiles, layout `(component, mode, vertical)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBulk {
    pub h: HorizontalGrid,
    pub v: VerticalGrid,
    pub ncomp: usize,
    pub coeffs: Vec<Complex64>,
}

impl SpectralBulk {
    pub fn zeros(h: &HorizontalGrid, v: &VerticalGrid, ncomp: usize) -> Self {
        Self {
            h: h.clone(),
            v: v.clone(),
            ncomp,
            coeffs: vec![Complex64::new(0.0, 0.0); ncomp * h.len() * v.points()],
        }
    }

    pub fn column(&self, c: usize, mode: usize) -> &[Complex64] {
        let nz = self.v.points();
        let s = (c * self.h.len() + mode) * nz;
        &self.coeffs[s..s + nz]
    }

    pub fn column_mut(&mut self, c: usize, mode: usize) -> &mut [Complex64] {
        let nz = self.v.points();
        let s = (c * self.h.len() + mode) * nz;
        &mut self.coeffs[s..s + nz]
    }
}

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

fn plans(m: usize) -> Plans {
    let mut planner = FftPlanner::new();
    Plans { fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) }
}

/// In-place d-dimensional FFT of a row-major `m^d` block.
fn fft_nd(data: &mut [Complex64], m: usize, d: usize, fft: &Arc<dyn Fft<f64>>) {
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let total = data.len();
    for axis in 0..d {
        let stride = m.pow((d - 1 - axis) as u32);
        let block = stride * m;
        for start in (0..total).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for k in 0..m {
                    line[k] = data[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for k in 0..m {
                    data[base + k * stride] = line[k];
                }
            }
        }
    }
}

pub fn forward_height(f: &HeightField) -> Result<SpectralHeight> {
    f.check_finite()?;
    let g = &f.grid;
    let p = plans(g.points());
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut data, g.points(), g.dim_h(), &p.fwd);
    Ok(SpectralHeight { grid: g.clone(), coeffs: data })
}

pub fn inverse_height(s: &SpectralHeight) -> HeightField {
    let g = &s.grid;
    let p = plans(g.points());
    let mut data = s.coeffs.clone();
    fft_nd(&mut data, g.points(), g.dim_h(), &p.inv);
    let norm = 1.0 / g.len() as f64;
    HeightField { grid: g.clone(), values: data.iter().map(|c| c.re * norm).collect() }
}

pub fn forward_bulk(f: &BulkField) -> Result<SpectralBulk> {
    f.check_finite()?;
    let (nh, nz) = (f.nh(), f.nz());
    let p = plans(f.h.points());
    let slices: Vec<Vec<Complex64>> = (0..f.ncomp * nz)
        .into_par_iter()
        .map(|cz| {
            let (c, iz) = (cz / nz, cz % nz);
            let mut data: Vec<Complex64> =
                (0..nh).map(|ih| Complex64::new(f.get(c, ih, iz), 0.0)).collect();
            fft_nd(&mut data, f.h.points(), f.h.dim_h(), &p.fwd);
            data
        })
        .collect();
    let mut out = SpectralBulk::zeros(&f.h, &f.v, f.ncomp);
    for (cz, slice) in slices.iter().enumerate() {
        let (c, iz) = (cz / nz, cz % nz);
        for (mode, &val) in slice.iter().enumerate() {
            out.coeffs[(c * nh + mode) * nz + iz] = val;
        }
    }
    Ok(out)
}

pub fn inverse_bulk(s: &SpectralBulk) -> BulkField {
    let (nh, nz) = (s.h.len(), s.v.points());
    let p = plans(s.h.points());
    let norm = 1.0 / nh as f64;
    let slices: Vec<Vec<f64>> = (0..s.ncomp * nz)
        .into_par_iter()
        .map(|cz| {
            let (c, iz) = (cz / nz, cz % nz);
            let mut data: Vec<Complex64> =
                (0..nh).map(|mode| s.coeffs[(c * nh + mode) * nz + iz]).collect();
            fft_nd(&mut data, s.h.points(), s.h.dim_h(), &p.inv);
            data.iter().map(|v| v.re * norm).collect()
        })
        .collect();
    let mut out = BulkField::zeros(&s.h, &s.v, s.ncomp);
    for (cz, slice) in slices.iter().enumerate() {
        let (c, iz) = (cz / nz, cz % nz);
        for (ih, &val) in slice.iter().enumerate() {
            out.values[(c * nh + ih) * nz + iz] = val;
        }
    }
    out
}

/// Either kind of field accepted by [`partial_fourier`].
pub enum FieldRef<'a> {
    Height(&'a HeightField),
    Bulk(&'a BulkField),
}

impl<'a> From<&'a HeightField> for FieldRef<'a> {
    fn from(f: &'a HeightField) -> Self {
        FieldRef::Height(f)
    }
}

impl<'a> From<&'a BulkField> for FieldRef<'a> {
    fn from(f: &'a BulkField) -> Self {
        FieldRef::Bulk(f)
    }
}

/// Spectral data produced by [`partial_fourier`].
pub enum Spectrum {
    Height(SpectralHeight),
    Bulk(SpectralBulk),
}

/// Field recovered by [`Spectrum::inverse`].
#[derive(Clone, Debug, PartialEq)]
pub enum OwnedField {
    Height(HeightField),
    Bulk(BulkField),
}

impl Spectrum {
    pub fn inverse(&self) -> OwnedField {
        match self {
            Spectrum::Height(s) => OwnedField::Height(inverse_height(s)),
            Spectrum::Bulk(s) => OwnedField::Bulk(inverse_bulk(s)),
        }
    }
}

/// Partial Fourier transform in `x'`.
pub fn partial_fourier<'a>(f: impl Into<FieldRef<'a>>) -> Result<Spectrum> {
    match f.into() {
        FieldRef::Height(h) => forward_height(h).map(Spectrum::Height),
        FieldRef::Bulk(b) => forward_bulk(b).map(Spectrum::Bulk),
    }
}

/// Apply a per-mode horizontal multiplier to every component of a bulk field.
pub fn apply_multiplier_spectral(
    s: &SpectralBulk,
    mult: impl Fn(usize) -> Complex64 + Sync,
) -> SpectralBulk {
    let nz = s.v.points();
    let nh = s.h.len();
    let mut out = s.clone();
    out.coeffs.par_chunks_mut(nz).enumerate().for_each(|(cm, col)| {
        let m = mult(cm % nh);
        for v in col.iter_mut() {
            *v *= m;
        }
    });
    out
}

/// Spectral horizontal derivative `d/dx_axis` of every component.
pub fn horizontal_derivative(s: &SpectralBulk, axis: usize) -> SpectralBulk {
    let h = s.h.clone();
    apply_multiplier_spectral(s, |mode| Complex64::new(0.0, h.derivative_wavevector(mode)[axis]))
}

pub fn height_multiplier(s: &SpectralHeight, mult: impl Fn(usize) -> Complex64) -> SpectralHeight {
    SpectralHeight {
        grid: s.grid.clone(),
        coeffs: s.coeffs.iter().enumerate().map(|(m, &c)| c * mult(m)).collect(),
    }
}

/// Horizontal derivative of a height field (spectral).
pub fn height_derivative(f: &HeightField, axis: usize) -> Result<HeightField> {
    let s = forward_height(f)?;
    let g = f.grid.clone();
    Ok(inverse_height(&height_multiplier(&s, |m| {
        Complex64::new(0.0, g.derivative_wavevector(m)[axis])
    })))
}

/// Gradient of a bulk field: for each component `c` and axis `a` the result has component
/// `c * N + a`. Horizontal axes are spectral, the vertical axis uses finite differences.
pub fn gradient(f: &BulkField) -> Result<BulkField> {
    let n = f.h.dim();
    let s = forward_bulk(f)?;
    let mut parts: Vec<BulkField> = Vec::with_capacity(n);
    for a in 0..n - 1 {
        parts.push(inverse_bulk(&horizontal_derivative(&s, a)));
    }
    parts.push(f.dz(1));
    let nn = f.nh() * f.nz();
    let mut out = BulkField::zeros(&f.h, &f.v, f.ncomp * n);
    for c in 0..f.ncomp {
        for (a, p) in parts.iter().enumerate() {
            out.values[(c * n + a) * nn..(c * n + a + 1) * nn]
                .copy_from_slice(&p.values[c * nn..(c + 1) * nn]);
        }
    }
    Ok(out)
}

/// Componentwise Laplacian: spectral horizontal second derivatives plus vertical
/// second differences.
pub fn laplacian(f: &BulkField) -> Result<BulkField> {
    let s = forward_bulk(f)?;
    let mut acc = SpectralBulk::zeros(&f.h, &f.v, f.ncomp);
    for a in 0..f.h.dim_h() {
        let d = horizontal_derivative(&horizontal_derivative(&s, a), a);
        for (o, v) in acc.coeffs.iter_mut().zip(&d.coeffs) {
            *o += v;
        }
    }
    Ok(inverse_bulk(&acc).add(&f.dz(2)))
}

/// Divergence of an N-vector bulk field.
pub fn divergence(u: &BulkField) -> Result<BulkField> {
    let n = u.h.dim();
    assert_eq!(u.ncomp, n, "divergence needs an N-vector field");
    let s = forward_bulk(u)?;
    let nh = u.nh();
    let nz = u.nz();
    let mut acc = SpectralBulk::zeros(&u.h, &u.v, 1);
    for a in 0..n - 1 {
        let d = horizontal_derivative(&s, a);
        let off = a * nh * nz;
        for (o, v) in acc.coeffs.iter_mut().zip(&d.coeffs[off..off + nh * nz]) {
            *o += v;
        }
    }
    Ok(inverse_bulk(&acc).add(&u.component(n - 1).dz(1)))
}
