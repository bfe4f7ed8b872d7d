//! Linear decay rates from the continuum mode integral.

use surfflow::analysis::{continuum_mode_decay, fit_decay_exponent, ContinuumDecayConfig, NormSeries};
use surfflow::stokes::StokesParams;
use surfflow::Result;

/// Fitted and predicted exponents of the two surrogates.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayRates {
    pub series: NormSeries,
    pub s1: (f64, f64),
    pub s2: (f64, f64),
    pub predicted_s1: f64,
    pub predicted_s2: f64,
}

pub fn decay_rates(n: usize, p: f64, q: f64, params: StokesParams, window: (f64, f64)) -> Result<DecayRates> {
    let mut cfg = ContinuumDecayConfig::new(n, p, q);
    cfg.params = params;
    cfg.t_final = 2f64.powf(window.1.log2().ceil());
    let series = continuum_mode_decay(&cfg)?;
    Ok(DecayRates {
        s1: fit_decay_exponent(&series, "s1", window)?,
        s2: fit_decay_exponent(&series, "s2", window)?,
        predicted_s1: surfflow::analysis::predicted_s1_exponent(n, p, q),
        predicted_s2: surfflow::analysis::predicted_s2_exponent(n, p, q),
        series,
    })
}
