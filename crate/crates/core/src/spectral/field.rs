use rayon::prelude::*;

use super::grid::{HorizontalGrid, VerticalGrid};
use crate::error::{Error, Result};

/// Real field on the horizontal torus.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightField {
    pub grid: HorizontalGrid,
    pub values: Vec<f64>,
}

impl HeightField {
    pub fn zeros(grid: &HorizontalGrid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &HorizontalGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &HorizontalGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch("height field length"));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("height field"))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn axpy(&self, a: f64, other: &HeightField) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect();
        Self { grid: self.grid.clone(), values }
    }
}

/// Scalar or vector field on torus x `[-H, 0]`, stored as `(component, horizontal, vertical)`
/// with the vertical index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct BulkField {
    pub h: HorizontalGrid,
    pub v: VerticalGrid,
    pub ncomp: usize,
    pub values: Vec<f64>,
}

impl BulkField {
    pub fn zeros(h: &HorizontalGrid, v: &VerticalGrid, ncomp: usize) -> Self {
        Self { h: h.clone(), v: v.clone(), ncomp, values: vec![0.0; ncomp * h.len() * v.points()] }
    }

    /// Fill from `f(x', x_N) -> [component values]`.
    pub fn from_fn(
        h: &HorizontalGrid,
        v: &VerticalGrid,
        ncomp: usize,
        f: impl Fn([f64; 3], f64) -> Vec<f64> + Sync,
    ) -> Self {
        let nz = v.points();
        let nodes = v.nodes();
        let cols: Vec<Vec<Vec<f64>>> = (0..h.len())
            .into_par_iter()
            .map(|ih| {
                let x = h.coords(ih);
                nodes.iter().map(|&z| f(x, z)).collect()
            })
            .collect();
        let mut out = Self::zeros(h, v, ncomp);
        for (ih, col) in cols.iter().enumerate() {
            for (iz, vals) in col.iter().enumerate() {
                for c in 0..ncomp {
                    out.values[(c * h.len() + ih) * nz + iz] = vals[c];
                }
            }
        }
        out
    }

    pub fn nz(&self) -> usize {
        self.v.points()
    }

    pub fn nh(&self) -> usize {
        self.h.len()
    }

    #[inline]
    pub fn idx(&self, c: usize, ih: usize, iz: usize) -> usize {
        (c * self.h.len() + ih) * self.v.points() + iz
    }

    #[inline]
    pub fn get(&self, c: usize, ih: usize, iz: usize) -> f64 {
        self.values[self.idx(c, ih, iz)]
    }

    pub fn column(&self, c: usize, ih: usize) -> &[f64] {
        let nz = self.nz();
        let s = (c * self.nh() + ih) * nz;
        &self.values[s..s + nz]
    }

    pub fn component(&self, c: usize) -> BulkField {
        let n = self.nh() * self.nz();
        BulkField {
            h: self.h.clone(),
            v: self.v.clone(),
            ncomp: 1,
            values: self.values[c * n..(c + 1) * n].to_vec(),
        }
    }

    pub fn component_slice(&self, c: usize) -> &[f64] {
        let n = self.nh() * self.nz();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_slice_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.nh() * self.nz();
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn stack(parts: &[BulkField]) -> BulkField {
        let first = &parts[0];
        let mut values = Vec::with_capacity(parts.iter().map(|p| p.values.len()).sum());
        let mut ncomp = 0;
        for p in parts {
            values.extend_from_slice(&p.values);
            ncomp += p.ncomp;
        }
        BulkField { h: first.h.clone(), v: first.v.clone(), ncomp, values }
    }

    /// Values at `x_N = 0` as height fields, one per component.
    pub fn trace(&self, c: usize) -> HeightField {
        let nz = self.nz();
        let values = (0..self.nh()).map(|ih| self.get(c, ih, nz - 1)).collect();
        HeightField { grid: self.h.clone(), values }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("bulk field"))
        }
    }

    pub fn same_grid(&self, other: &BulkField) -> bool {
        self.h == other.h && self.v == other.v
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map2(&self, other: &BulkField, f: impl Fn(f64, f64) -> f64) -> BulkField {
        debug_assert_eq!(self.values.len(), other.values.len());
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        BulkField { h: self.h.clone(), v: self.v.clone(), ncomp: self.ncomp, values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> BulkField {
        BulkField {
            h: self.h.clone(),
            v: self.v.clone(),
            ncomp: self.ncomp,
            values: self.values.iter().map(|&a| f(a)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> BulkField {
        self.map(|a| a * s)
    }

    pub fn add(&self, other: &BulkField) -> BulkField {
        self.map2(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &BulkField) -> BulkField {
        self.map2(other, |a, b| a - b)
    }

    /// Pointwise product of a scalar field with every component of `self`.
    pub fn times_scalar(&self, s: &BulkField) -> BulkField {
        let n = self.nh() * self.nz();
        let mut out = self.clone();
        for c in 0..self.ncomp {
            for (o, &w) in out.values[c * n..(c + 1) * n].iter_mut().zip(&s.values[..n]) {
                *o *= w;
            }
        }
        out
    }

    /// Vertical finite-difference derivative of every column.
    pub fn dz(&self, order: u8) -> BulkField {
        let nz = self.nz();
        let mut out = self.clone();
        out.values
            .par_chunks_mut(nz)
            .zip(self.values.par_chunks(nz))
            .for_each(|(o, col)| o.copy_from_slice(&self.v.derivative(col, order)));
        out
    }
}
