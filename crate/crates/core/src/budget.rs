//! Radiometric displacement-noise calculators.
//!
//! All results are returned both as amplitude spectral densities (m/rtHz) and
//! as variances (m^2/Hz); the two representations round-trip by squaring.

use serde::{Deserialize, Serialize};

use crate::model::{CantileverParams, TnliConfig, Topology};
use crate::{Error, Result};

/// CODATA exact Planck constant, J s.
pub const PLANCK: f64 = 6.62607015e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A displacement noise level in both amplitude and variance form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    /// m/rtHz
    pub amplitude: f64,
    /// m^2/Hz
    pub variance: f64,
}

impl SpectralDensity {
    pub fn from_variance(variance: f64) -> Self {
        SpectralDensity {
            amplitude: variance.sqrt(),
            variance,
        }
    }

    pub fn from_amplitude(amplitude: f64) -> Self {
        SpectralDensity {
            amplitude,
            variance: amplitude * amplitude,
        }
    }
}

/// Shot-noise-limited displacement noise of an interferometric readout:
/// variance `(1 / 4 pi^2) h c lambda df / (2 P_tot)`.
pub fn snl_displacement(lambda: f64, p_tot: f64, delta_f: f64) -> Result<SpectralDensity> {
    require_positive("lambda", lambda)?;
    require_positive("p_tot", p_tot)?;
    require_positive("delta_f", delta_f)?;
    let variance = PLANCK * SPEED_OF_LIGHT * lambda * delta_f
        / (2.0 * p_tot)
        / (4.0 * std::f64::consts::PI * std::f64::consts::PI);
    Ok(SpectralDensity::from_variance(variance))
}

/// Radiation-pressure backaction displacement noise for power `P` incident on
/// a cantilever of quality factor `Q` and spring constant `k`:
/// variance `(4 Q^2 / k^2) (2 P h df / (c lambda))`.
pub fn backaction_displacement(
    q: f64,
    k: f64,
    power_on_cantilever: f64,
    lambda: f64,
    delta_f: f64,
) -> Result<SpectralDensity> {
    if q < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "quality factor must be >= 1, got {q}"
        )));
    }
    require_positive("k", k)?;
    if power_on_cantilever < 0.0 {
        return Err(Error::InvalidArgument("power must be >= 0".into()));
    }
    require_positive("lambda", lambda)?;
    require_positive("delta_f", delta_f)?;
    let variance = (4.0 * q * q / (k * k))
        * (2.0 * power_on_cantilever * PLANCK * delta_f / (SPEED_OF_LIGHT * lambda));
    Ok(SpectralDensity::from_variance(variance))
}

/// Standard quantum limit: quadrature sum of shot noise and backaction.
pub fn sql_displacement(snl: &SpectralDensity, backaction: &SpectralDensity) -> SpectralDensity {
    SpectralDensity::from_variance(snl.variance + backaction.variance)
}

/// Smallest measurable displacement with squeezing strength `r`, as an
/// amplitude spectral density: `(1 / (2 pi e^r)) sqrt(h c lambda df / (2 P))`.
/// At `r = 0` this equals the shot-noise-limited amplitude.
pub fn squeezed_min_displacement(
    lambda: f64,
    p_tot: f64,
    delta_f: f64,
    r: f64,
) -> Result<SpectralDensity> {
    require_positive("lambda", lambda)?;
    require_positive("p_tot", p_tot)?;
    require_positive("delta_f", delta_f)?;
    if r < 0.0 {
        return Err(Error::InvalidArgument("r must be >= 0".into()));
    }
    let amplitude = (PLANCK * SPEED_OF_LIGHT * lambda * delta_f / (2.0 * p_tot)).sqrt()
        / (2.0 * std::f64::consts::PI * r.exp());
    Ok(SpectralDensity::from_amplitude(amplitude))
}

/// Complete per-configuration noise report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub snl: SpectralDensity,
    pub backaction: SpectralDensity,
    pub sql: SpectralDensity,
    pub squeezed_floor: SpectralDensity,
    pub topology: Topology,
    /// Power incident on the cantilever for this topology, watts.
    pub power_on_cantilever: f64,
    /// Ideal phase-sum squeezing of the configured gain, dB below SNL.
    pub ideal_squeezing_db: f64,
    pub config: TnliConfig,
    pub cantilever: CantileverParams,
}

/// Evaluate the full budget. The topology selects which beam's power drives
/// backaction: the probe LO when it reads the cantilever, the weak probe
/// otherwise.
pub fn budget_report(cfg: &TnliConfig, cantilever: &CantileverParams) -> Result<NoiseBudget> {
    cfg.validate()?;
    cantilever.validate()?;
    let p_tot = cfg.total_detected_power();
    if p_tot <= 0.0 {
        return Err(Error::InvalidArgument(
            "total detected power must be > 0".into(),
        ));
    }
    let snl = snl_displacement(cfg.lambda, p_tot, cfg.delta_f)?;
    let backaction = backaction_displacement(
        cantilever.q,
        cantilever.k,
        cfg.power_on_cantilever(),
        cfg.lambda,
        cfg.delta_f,
    )?;
    let sql = sql_displacement(&snl, &backaction);
    let r = cfg.r()?;
    let squeezed_floor = squeezed_min_displacement(cfg.lambda, p_tot, cfg.delta_f, r)?;
    let ideal_squeezing_db = crate::model::squeezing_db(crate::model::ideal_noise_ratio(cfg.gain)?)?;
    Ok(NoiseBudget {
        snl,
        backaction,
        sql,
        squeezed_floor,
        topology: cfg.topology,
        power_on_cantilever: cfg.power_on_cantilever(),
        ideal_squeezing_db,
        config: cfg.clone(),
        cantilever: cantilever.clone(),
    })
}

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{name} must be > 0, got {value}"
        )));
    }
    Ok(())
}
