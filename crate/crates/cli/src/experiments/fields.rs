//! Random smooth fields given by a short trigonometric series, so the same field can be
//! sampled on grids of any resolution.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use surfflow::spectral::{BulkField, HeightField, HorizontalGrid, VerticalGrid};

#[derive(Clone, Debug)]
struct Term {
    k: [f64; 3],
    phase: f64,
    amp: f64,
    /// Vertical profile `cos(w z + s)`; unused for height fields.
    w: f64,
    s: f64,
}

/// Sum of random smooth terms, one list per component.
#[derive(Clone, Debug)]
pub struct RandomSeries {
    comps: Vec<Vec<Term>>,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

impl RandomSeries {
    /// `terms` modes per component with integer wavenumbers `|k_a| <= kmax` on a torus of side
    /// `length`. The coefficients are scaled so the sum of amplitudes is `amp`.
    pub fn new(rng: &mut ChaCha8Rng, dim_h: usize, ncomp: usize, terms: usize, kmax: i64, length: f64, amp: f64) -> Self {
        let base = 2.0 * std::f64::consts::PI / length;
        let comps = (0..ncomp)
            .map(|_| {
                let mut list: Vec<Term> = (0..terms)
                    .map(|_| {
                        let mut k = [0.0; 3];
                        for ka in k.iter_mut().take(dim_h) {
                            *ka = base * rng.gen_range(-kmax..=kmax) as f64;
                        }
                        Term {
                            k,
                            phase: rng.gen_range(0.0..std::f64::consts::TAU),
                            amp: rng.gen_range(0.2..1.0),
                            w: rng.gen_range(0.2..1.5),
                            s: rng.gen_range(0.0..std::f64::consts::TAU),
                        }
                    })
                    .collect();
                let total: f64 = list.iter().map(|t| t.amp).sum();
                for t in &mut list {
                    t.amp *= amp / total;
                }
                list
            })
            .collect();
        Self { comps }
    }

    fn horizontal(t: &Term, x: [f64; 3]) -> f64 {
        (t.k[0] * x[0] + t.k[1] * x[1] + t.k[2] * x[2] + t.phase).cos()
    }

    pub fn height(&self, h: &HorizontalGrid) -> HeightField {
        HeightField::from_fn(h, |x| self.comps[0].iter().map(|t| t.amp * Self::horizontal(t, x)).sum())
    }

    pub fn bulk(&self, h: &HorizontalGrid, v: &VerticalGrid) -> BulkField {
        BulkField::from_fn(h, v, self.comps.len(), |x, z| {
            self.comps
                .iter()
                .map(|c| c.iter().map(|t| t.amp * Self::horizontal(t, x) * (t.w * z + t.s).cos()).sum())
                .collect()
        })
    }

    /// Bulk field that vanishes at `x_N = -depth`.
    pub fn bulk_clamped(&self, h: &HorizontalGrid, v: &VerticalGrid) -> BulkField {
        let depth = v.depth();
        BulkField::from_fn(h, v, self.comps.len(), |x, z| {
            let damp = 1.0 - (-(z + depth)).exp();
            self.comps
                .iter()
                .map(|c| damp * c.iter().map(|t| t.amp * Self::horizontal(t, x) * (t.w * z + t.s).cos()).sum::<f64>())
                .collect()
        })
    }
}
