use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic horizontal grid on `[0, L)^{dim_h}` with `points` nodes per axis.
///
/// Flat indices are row-major with axis 0 slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalGrid {
    dim_h: usize,
    length: f64,
    points: usize,
}

impl HorizontalGrid {
    pub fn new(dim_h: usize, length: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim_h) {
            return Err(Error::InvalidGrid(format!("horizontal dimension {dim_h}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("torus length {length}")));
        }
        if points < 2 || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!("points per axis {points} must be even")));
        }
        Ok(Self { dim_h, length, points })
    }

    /// Grid for the full dimension `n` (so `dim_h = n - 1`).
    pub fn for_dimension(n: usize, length: f64, points: usize) -> Result<Self> {
        if !(2..=4).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        Self::new(n - 1, length, points)
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim(&self) -> usize {
        self.dim_h + 1
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim_h as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing().powi(self.dim_h as i32)
    }

    pub fn area(&self) -> f64 {
        self.length.powi(self.dim_h as i32)
    }

    pub fn index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rem = flat;
        for a in (0..self.dim_h).rev() {
            idx[a] = rem % self.points;
            rem /= self.points;
        }
        idx
    }

    pub fn flat(&self, idx: [usize; 3]) -> usize {
        let mut f = 0;
        for &i in idx.iter().take(self.dim_h) {
            f = f * self.points + i;
        }
        f
    }

    /// Signed wave index in `(-M/2, M/2]`.
    pub fn signed(&self, i: usize) -> i64 {
        if i <= self.points / 2 {
            i as i64
        } else {
            i as i64 - self.points as i64
        }
    }

    pub fn wave_index(&self, flat: usize) -> [i64; 3] {
        let idx = self.index(flat);
        let mut k = [0i64; 3];
        for a in 0..self.dim_h {
            k[a] = self.signed(idx[a]);
        }
        k
    }

    /// Flat index of the mode with signed wave index `k`.
    pub fn mode(&self, k: [i64; 3]) -> usize {
        let m = self.points as i64;
        let mut idx = [0usize; 3];
        for a in 0..self.dim_h {
            idx[a] = k[a].rem_euclid(m) as usize;
        }
        self.flat(idx)
    }

    pub fn wavevector(&self, flat: usize) -> [f64; 3] {
        let k = self.wave_index(flat);
        let s = 2.0 * PI / self.length;
        [k[0] as f64 * s, k[1] as f64 * s, k[2] as f64 * s]
    }

    pub fn wavenumber(&self, flat: usize) -> f64 {
        let xi = self.wavevector(flat);
        (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt()
    }

    pub fn is_nyquist(&self, flat: usize) -> bool {
        let idx = self.index(flat);
        idx.iter().take(self.dim_h).any(|&i| i == self.points / 2)
    }

    /// Wavevector used for odd derivatives: Nyquist components are zeroed so that
    /// derivatives of real fields stay real.
    pub fn derivative_wavevector(&self, flat: usize) -> [f64; 3] {
        let idx = self.index(flat);
        let mut xi = self.wavevector(flat);
        for a in 0..self.dim_h {
            if idx[a] == self.points / 2 {
                xi[a] = 0.0;
            }
        }
        xi
    }

    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let idx = self.index(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim_h {
            x[a] = idx[a] as f64 * h;
        }
        x
    }
}

/// Stencil with at most four taps.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub idx: [usize; 4],
    pub w: [f64; 4],
    pub len: usize,
}

impl Stencil {
    fn new(taps: &[(usize, f64)]) -> Self {
        let mut s = Stencil { idx: [0; 4], w: [0.0; 4], len: taps.len() };
        for (k, &(i, w)) in taps.iter().enumerate() {
            s.idx[k] = i;
            s.w[k] = w;
        }
        s
    }

    pub fn taps(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |k| (self.idx[k], self.w[k]))
    }

    pub fn apply<T>(&self, f: &[T]) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let mut acc = f[self.idx[0]] * self.w[0];
        for k in 1..self.len {
            acc = acc + f[self.idx[k]] * self.w[k];
        }
        acc
    }
}

/// Uniform grid on `[-H, 0]` whose last node is exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct VerticalGrid {
    depth: f64,
    points: usize,
}

impl VerticalGrid {
    pub fn new(depth: f64, points: usize) -> Result<Self> {
        if !(depth.is_finite() && depth > 0.0) {
            return Err(Error::InvalidGrid(format!("depth {depth}")));
        }
        if points < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 vertical nodes, got {points}")));
        }
        Ok(Self { depth, points })
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.depth / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            0.0
        } else {
            -self.depth * (1.0 - i as f64 / (self.points - 1) as f64)
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.node(i)).collect()
    }

    /// Second-order first-derivative stencil; one-sided at both ends.
    pub fn d1(&self, i: usize) -> Stencil {
        let n = self.points;
        let c = 0.5 / self.spacing();
        if i == 0 {
            Stencil::new(&[(0, -3.0 * c), (1, 4.0 * c), (2, -c)])
        } else if i == n - 1 {
            Stencil::new(&[(n - 1, 3.0 * c), (n - 2, -4.0 * c), (n - 3, c)])
        } else {
            Stencil::new(&[(i - 1, -c), (i + 1, c)])
        }
    }

    /// Second-order second-derivative stencil; one-sided at both ends.
    pub fn d2(&self, i: usize) -> Stencil {
        let n = self.points;
        let c = 1.0 / (self.spacing() * self.spacing());
        if i == 0 {
            Stencil::new(&[(0, 2.0 * c), (1, -5.0 * c), (2, 4.0 * c), (3, -c)])
        } else if i == n - 1 {
            Stencil::new(&[(n - 1, 2.0 * c), (n - 2, -5.0 * c), (n - 3, 4.0 * c), (n - 4, -c)])
        } else {
            Stencil::new(&[(i - 1, c), (i, -2.0 * c), (i + 1, c)])
        }
    }

    pub fn trapezoid_weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if i == 0 || i + 1 == self.points {
            0.5 * h
        } else {
            h
        }
    }

    pub fn derivative<T>(&self, column: &[T], order: u8) -> Vec<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        (0..self.points)
            .map(|i| match order {
                1 => self.d1(i).apply(column),
                2 => self.d2(i).apply(column),
                _ => panic!("vertical derivative order {order} not supported"),
            })
            .collect()
    }
}
