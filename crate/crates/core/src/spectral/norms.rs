use rustfft::num_complex::Complex64;

use super::field::{BulkField, HeightField};
use super::fourier::{
    forward_bulk, forward_height, height_multiplier, inverse_bulk, inverse_height,
    apply_multiplier_spectral, FieldRef,
};
use crate::error::{Error, Result};

fn check_q(q: f64) -> Result<()> {
    if q.is_nan() || q < 1.0 {
        Err(Error::InvalidExponent(q))
    } else {
        Ok(())
    }
}

fn accumulate(q: f64, samples: impl Iterator<Item = (f64, f64)>) -> f64 {
    if q.is_infinite() {
        samples.fold(0.0, |m, (_, a)| m.max(a))
    } else {
        samples.map(|(w, a)| w * a.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `L_q` norm over the torus (rectangle rule, exact for trigonometric polynomials).
pub fn norm_lq_height(f: &HeightField, q: f64) -> Result<f64> {
    check_q(q)?;
    let w = f.grid.cell_area();
    Ok(accumulate(q, f.values.iter().map(|&v| (w, v.abs()))))
}

/// `L_q` norm of the pointwise Euclidean magnitude over torus x `[-H, 0]`
/// (rectangle rule horizontally, trapezoid vertically).
pub fn norm_lq_bulk(f: &BulkField, q: f64) -> Result<f64> {
    check_q(q)?;
    let area = f.h.cell_area();
    let (nh, nz) = (f.nh(), f.nz());
    let it = (0..nh).flat_map(move |ih| {
        (0..nz).map(move |iz| {
            let mag2: f64 = (0..f.ncomp).map(|c| f.get(c, ih, iz).powi(2)).sum();
            (area * f.v.trapezoid_weight(iz), mag2.sqrt())
        })
    });
    Ok(accumulate(q, it))
}

pub fn norm_lq<'a>(f: impl Into<FieldRef<'a>>, q: f64) -> Result<f64> {
    match f.into() {
        FieldRef::Height(h) => norm_lq_height(h, q),
        FieldRef::Bulk(b) => norm_lq_bulk(b, q),
    }
}

/// Smoothness index for [`norm_sobolev`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SobolevOrder {
    Integer(u32),
    Fractional(f64),
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// All multi-indices of length `d` with total order at most `m`.
fn multi_indices(d: usize, m: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for a in &out {
            let used: u32 = a.iter().sum();
            for k in 0..=(m - used) {
                let mut b = a.clone();
                b.push(k);
                next.push(b);
            }
        }
        out = next;
    }
    out
}

/// Multinomial weight making the `q = 2` integer norm coincide with the Bessel multiplier
/// `(1+|xi|^2)^{m/2}` on band-limited fields.
fn weight(alpha: &[u32], m: u32) -> f64 {
    let s: u32 = alpha.iter().sum();
    factorial(m) / (factorial(m - s) * alpha.iter().map(|&a| factorial(a)).product::<f64>())
}

fn combine(q: f64, parts: impl Iterator<Item = (f64, f64)>) -> f64 {
    if q.is_infinite() {
        parts.fold(0.0, |m, (_, v)| m.max(v))
    } else {
        parts.map(|(w, v)| w * v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

pub fn sobolev_height(f: &HeightField, q: f64, order: SobolevOrder) -> Result<f64> {
    check_q(q)?;
    let g = f.grid.clone();
    let s = forward_height(f)?;
    match order {
        SobolevOrder::Fractional(sv) => {
            let lifted = height_multiplier(&s, |m| {
                let k = g.wavenumber(m);
                Complex64::new((1.0 + k * k).powf(0.5 * sv), 0.0)
            });
            norm_lq_height(&inverse_height(&lifted), q)
        }
        SobolevOrder::Integer(m) => {
            let mut parts = Vec::new();
            for alpha in multi_indices(g.dim_h(), m) {
                let d = height_multiplier(&s, |mode| {
                    let xi = g.derivative_wavevector(mode);
                    let mut c = Complex64::new(1.0, 0.0);
                    for (a, &p) in alpha.iter().enumerate() {
                        c *= Complex64::new(0.0, xi[a]).powu(p);
                    }
                    c
                });
                parts.push((weight(&alpha, m), norm_lq_height(&inverse_height(&d), q)?));
            }
            Ok(combine(q, parts.into_iter()))
        }
    }
}

pub fn sobolev_bulk(f: &BulkField, q: f64, m: u32) -> Result<f64> {
    check_q(q)?;
    let g = f.h.clone();
    let s = forward_bulk(f)?;
    let mut parts = Vec::new();
    for alpha in multi_indices(g.dim(), m) {
        let (horiz, vert) = alpha.split_at(g.dim_h());
        let d = apply_multiplier_spectral(&s, |mode| {
            let xi = g.derivative_wavevector(mode);
            let mut c = Complex64::new(1.0, 0.0);
            for (a, &p) in horiz.iter().enumerate() {
                c *= Complex64::new(0.0, xi[a]).powu(p);
            }
            c
        });
        let mut field = inverse_bulk(&d);
        let mut order = vert[0];
        while order >= 2 {
            field = field.dz(2);
            order -= 2;
        }
        if order == 1 {
            field = field.dz(1);
        }
        parts.push((weight(&alpha, m), norm_lq_bulk(&field, q)?));
    }
    Ok(combine(q, parts.into_iter()))
}

/// Sobolev-type norm. Integer orders use grid derivatives; fractional orders use the
/// Bessel multiplier and are only defined for boundary fields.
pub fn norm_sobolev<'a>(f: impl Into<FieldRef<'a>>, q: f64, order: SobolevOrder) -> Result<f64> {
    match (f.into(), order) {
        (FieldRef::Height(h), o) => sobolev_height(h, q, o),
        (FieldRef::Bulk(b), SobolevOrder::Integer(m)) => sobolev_bulk(b, q, m),
        (FieldRef::Bulk(_), SobolevOrder::Fractional(_)) => Err(Error::UnsupportedSurrogate),
    }
}
