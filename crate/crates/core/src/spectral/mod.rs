//! Grids, the partial Fourier transform in `x'`, extension operators and norms.

mod extension;
mod field;
mod fourier;
mod grid;
mod norms;

pub use extension::{extend, extend_a, extend_b, extend_en, extension_derivative, ExtensionKind};
pub use field::{BulkField, HeightField};
pub use fourier::{
    apply_multiplier_spectral, divergence, forward_bulk, forward_height, gradient,
    height_derivative, height_multiplier, horizontal_derivative, inverse_bulk, inverse_height,
    laplacian, partial_fourier, FieldRef, OwnedField, SpectralBulk, SpectralHeight, Spectrum,
};
pub use grid::{HorizontalGrid, Stencil, VerticalGrid};
pub use norms::{norm_lq, norm_lq_bulk, norm_lq_height, norm_sobolev, sobolev_bulk, sobolev_height, SobolevOrder};
