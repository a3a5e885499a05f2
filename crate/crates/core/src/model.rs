//! Truncated nonlinear interferometer measurement model.
//!
//! A two-mode squeezer (the nonlinear amplifier, gain `G = cosh^2 r`) feeds a
//! probe and conjugate into dual balanced homodyne detection. The cantilever
//! imprints a phase `phi` on either the probe (`ProbeOnCantilever`) or the
//! probe's local oscillator (`LoOnCantilever`). Local oscillators are treated
//! as classical phase references: they set the homodyne angles and enter only
//! the radiometric calculators through their powers.
//!
//! The detected observable is the gain-weighted phase sum
//! `M = X_p(theta_p) + tanh(2r) X_c(theta_c)`; its variance, normalized so
//! that `r = 0` gives exactly 1, is [`phase_sum_variance`]. The covariance engine in
//! [`crate::gaussian`] reproduces that expression exactly and serves as the
//! independent verification path.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::budget::{PLANCK, SPEED_OF_LIGHT};
use crate::gaussian::{GaussianState, MeasurementCombination};
use crate::{Error, Result};

/// Which beam reflects from the cantilever.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// The weak squeezed probe transduces the motion: 5% cantilever loss
    /// touches the squeezed path, but backaction comes from microwatts.
    ProbeOnCantilever,
    /// The bright probe LO transduces the motion: no squeezed-path loss, but
    /// the full LO power drives backaction.
    LoOnCantilever,
}

/// Full optical description of one interferometer configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TnliConfig {
    /// Nonlinear amplifier gain, `G = cosh^2 r >= 1`.
    pub gain: f64,
    /// Composite detection efficiency in [0, 1].
    pub eta: f64,
    /// Probe homodyne phase, radians.
    pub theta_p: f64,
    /// Conjugate homodyne phase, radians.
    pub theta_c: f64,
    /// Static probe-arm phase bias, radians.
    pub phi: f64,
    /// Optical wavelength, meters.
    pub lambda: f64,
    /// Squeezed probe power, watts.
    pub p_probe: f64,
    /// Squeezed conjugate power, watts.
    pub p_conj: f64,
    /// Probe LO power, watts.
    pub p_lo_probe: f64,
    /// Conjugate LO power, watts.
    pub p_lo_conj: f64,
    /// Measurement bandwidth, hertz.
    pub delta_f: f64,
    pub topology: Topology,
    /// Power reflectivity of the cantilever coating.
    pub cantilever_reflectivity: f64,
}

impl TnliConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gain < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "gain must be >= 1, got {}",
                self.gain
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidArgument(format!(
                "eta must lie in [0, 1], got {}",
                self.eta
            )));
        }
        if self.lambda <= 0.0 {
            return Err(Error::InvalidArgument("lambda must be > 0".into()));
        }
        if self.delta_f <= 0.0 {
            return Err(Error::InvalidArgument("delta_f must be > 0".into()));
        }
        for (name, p) in [
            ("p_probe", self.p_probe),
            ("p_conj", self.p_conj),
            ("p_lo_probe", self.p_lo_probe),
            ("p_lo_conj", self.p_lo_conj),
        ] {
            if p < 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be >= 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.cantilever_reflectivity) {
            return Err(Error::InvalidArgument(
                "cantilever_reflectivity must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Squeezing strength `r = arccosh(sqrt(G))`.
    pub fn r(&self) -> Result<f64> {
        gain_to_r(self.gain)
    }

    /// Total detected power (all four beams), watts.
    pub fn total_detected_power(&self) -> f64 {
        self.p_probe + self.p_conj + self.p_lo_probe + self.p_lo_conj
    }

    /// Power incident on the cantilever for the configured topology, watts.
    pub fn power_on_cantilever(&self) -> f64 {
        match self.topology {
            Topology::ProbeOnCantilever => self.p_probe,
            Topology::LoOnCantilever => self.p_lo_probe,
        }
    }
}

/// Mechanical and drive parameters of the cantilever under test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CantileverParams {
    /// Spring constant, N/m.
    pub k: f64,
    /// Quality factor; 1 describes far-off-resonance operation.
    pub q: f64,
    /// Fundamental resonance, hertz.
    pub f0: f64,
    /// Piezo drive frequency, hertz.
    pub drive_freq: f64,
    /// Piezo drive amplitude, volts.
    pub drive_amplitude_volts: f64,
    /// Piezo transduction coefficient, meters of tip motion per volt.
    pub volts_to_meters: f64,
}

impl CantileverParams {
    pub fn validate(&self) -> Result<()> {
        if self.k <= 0.0 {
            return Err(Error::InvalidArgument("spring constant must be > 0".into()));
        }
        if self.q < 1.0 {
            return Err(Error::InvalidArgument("quality factor must be >= 1".into()));
        }
        if self.f0 <= 0.0 {
            return Err(Error::InvalidArgument("resonance frequency must be > 0".into()));
        }
        if self.drive_freq <= 0.0 {
            return Err(Error::InvalidArgument("drive frequency must be > 0".into()));
        }
        if self.drive_amplitude_volts < 0.0 || self.volts_to_meters < 0.0 {
            return Err(Error::InvalidArgument(
                "drive amplitude and transduction must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Peak tip displacement of the driven cantilever, meters.
    pub fn drive_displacement(&self) -> f64 {
        self.drive_amplitude_volts * self.volts_to_meters
    }
}

/// `r = arccosh(sqrt(G))`, the unique inverse of `G = cosh^2 r` with `r >= 0`.
pub fn gain_to_r(gain: f64) -> Result<f64> {
    if gain < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "amplifier gain must be >= 1, got {gain}"
        )));
    }
    Ok(gain.sqrt().acosh())
}

pub fn r_to_gain(r: f64) -> f64 {
    r.cosh().powi(2)
}

/// Variance of the gain-weighted phase-sum observable, normalized to the
/// shot-noise limit (the `r = 0` value of the same expression):
///
/// `eta (sinh 2r tanh 2r 2 cos(theta_p + theta_c - phi) + cosh 2r
///  - tanh^2 2r + sinh 2r tanh 2r - 1) + tanh^2 2r + 1`
///
/// Evaluated with `cosh 2r - tanh 2r sinh 2r` regrouped as `1 / cosh 2r` to
/// avoid cancellation at large gain; the two forms are algebraically equal.
pub fn phase_sum_variance(r: f64, eta: f64, theta_p: f64, theta_c: f64, phi: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::InvalidArgument("r must be >= 0".into()));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!(
            "eta must lie in [0, 1], got {eta}"
        )));
    }
    let s = (2.0 * r).sinh();
    let c = (2.0 * r).cosh();
    let t = (2.0 * r).tanh();
    // cosh 2r - tanh^2 2r + sinh 2r tanh 2r - 1  ==  1/cosh 2r + 2 s t - t^2 - 1,
    // and the two sinh tanh terms are grouped so they cancel exactly at the
    // optimal phases instead of swamping the small 1/cosh 2r at large gain.
    let bracket =
        2.0 * s * t * ((theta_p + theta_c - phi).cos() + 1.0) + 1.0 / c - t * t - 1.0;
    Ok(eta * bracket + t * t + 1.0)
}

/// Ideal phase-sum noise ratio `1 / (2G - 1)` at perfect efficiency and
/// optimal phases.
pub fn ideal_noise_ratio(gain: f64) -> Result<f64> {
    if gain < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "amplifier gain must be >= 1, got {gain}"
        )));
    }
    Ok(1.0 / (2.0 * gain - 1.0))
}

/// Squeezing level in decibels below the shot-noise limit for a variance
/// ratio: `dB = -10 log10(ratio)`.
pub fn squeezing_db(variance_ratio: f64) -> Result<f64> {
    if variance_ratio <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "variance ratio must be > 0, got {variance_ratio}"
        )));
    }
    Ok(-10.0 * variance_ratio.log10())
}

/// Inverse of [`squeezing_db`].
pub fn db_to_variance_ratio(db: f64) -> f64 {
    10.0_f64.powf(-db / 10.0)
}

/// Round-trip optical phase from a normal-incidence reflective displacement:
/// `phi = 4 pi d / lambda`.
pub fn displacement_to_phase(displacement: f64, lambda: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::InvalidArgument("lambda must be > 0".into()));
    }
    Ok(4.0 * std::f64::consts::PI * displacement / lambda)
}

/// Fully built optical scene: the two-mode state just before detection, the
/// dual-homodyne combination read out on it, and the first-order response of
/// the measured mean to cantilever phase.
#[derive(Debug, Clone)]
pub struct Scene {
    pub state: GaussianState,
    pub comb: MeasurementCombination,
    /// d<M>/d(phi) at the configured bias point, in shot-noise units per rad.
    pub signal_gain: f64,
    /// Wavelength carried along for displacement-to-phase conversion.
    pub lambda: f64,
}

impl Scene {
    pub fn variance(&self) -> f64 {
        self.state.measure_stats(&self.comb).expect("scene is self-consistent").1
    }

    pub fn mean(&self) -> f64 {
        self.state.measure_stats(&self.comb).expect("scene is self-consistent").0
    }
}

const PROBE: usize = 0;
const CONJ: usize = 1;

fn build_state(cfg: &TnliConfig, phi: f64) -> Result<(GaussianState, MeasurementCombination)> {
    let r = cfg.r()?;
    // Seed amplitude calibrated so the *post-amplifier* probe beam carries
    // p_probe: photon flux |alpha cosh r|^2 = P lambda / (h c) per second.
    let flux = cfg.p_probe * cfg.lambda / (PLANCK * SPEED_OF_LIGHT);
    let seed = flux.sqrt() / r.cosh();
    let mut state = GaussianState::vacuum(2)?
        .displace(PROBE, Complex64::new(seed, 0.0))?
        .two_mode_squeeze(PROBE, CONJ, r, 0.0)?;

    let weight = (2.0 * r).tanh();
    let (theta_p, theta_c) = match cfg.topology {
        Topology::ProbeOnCantilever => {
            state = state
                .loss_channel(PROBE, cfg.cantilever_reflectivity)?
                .phase_rotate(PROBE, phi)?;
            (cfg.theta_p, cfg.theta_c)
        }
        // An LO phase shift is a homodyne-angle shift; the squeezed path sees
        // no cantilever loss in this topology.
        Topology::LoOnCantilever => (cfg.theta_p - phi, cfg.theta_c),
    };
    state = state
        .loss_channel(PROBE, cfg.eta)?
        .loss_channel(CONJ, cfg.eta)?;
    // r = 0 degenerates the weighted sum; fall back to the probe homodyne.
    let weights = if weight == 0.0 {
        vec![1.0, 0.0]
    } else {
        vec![1.0, weight]
    };
    let comb = MeasurementCombination::new(vec![theta_p, theta_c], weights)?;
    Ok((state, comb))
}

/// Construct the optical scene for a configuration, including the signal
/// transfer coefficient obtained by central finite difference around the
/// configured phase bias.
pub fn build_scene(cfg: &TnliConfig) -> Result<Scene> {
    cfg.validate()?;
    let (state, comb) = build_state(cfg, cfg.phi)?;
    let delta = 1e-6;
    let (plus, comb_p) = build_state(cfg, cfg.phi + delta)?;
    let (minus, comb_m) = build_state(cfg, cfg.phi - delta)?;
    let mean_p = plus.measure_stats(&comb_p)?.0;
    let mean_m = minus.measure_stats(&comb_m)?.0;
    let signal_gain = (mean_p - mean_m) / (2.0 * delta);
    Ok(Scene {
        state,
        comb,
        signal_gain,
        lambda: cfg.lambda,
    })
}

/// Signal-to-noise ratio in dB for a peak cantilever displacement, using the
/// scene's first-order phase response as the signal and the phase-sum
/// variance as the noise. Zero displacement returns `-inf`.
pub fn snr_db(cfg: &TnliConfig, displacement: f64) -> Result<f64> {
    if displacement < 0.0 {
        return Err(Error::InvalidArgument("displacement must be >= 0".into()));
    }
    if cfg.eta == 0.0 {
        return Err(Error::Numerical(
            "eta = 0 leaves no signal path to detect".into(),
        ));
    }
    let scene = build_scene(cfg)?;
    if displacement == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let phi = displacement_to_phase(displacement, cfg.lambda)?;
    let amplitude = scene.signal_gain * phi;
    let signal_power = amplitude * amplitude / 2.0;
    let noise_power = scene.variance();
    if noise_power <= 0.0 {
        return Err(Error::Numerical("degenerate zero-noise scene".into()));
    }
    Ok(10.0 * (signal_power / noise_power).log10())
}
