//! Monte Carlo photocurrent synthesis and spectrum-analyzer emulation.
//!
//! The quantum noise floor is white across the analysis span, so a
//! photocurrent record is Gaussian noise at the scene variance plus a
//! sinusoid at the cantilever drive frequency whose amplitude comes from the
//! scene's first-order phase response. PSDs use a segment-averaged
//! periodogram with a Hann taper and 50% overlap, normalized so white noise
//! of variance `V` reads `V` in every bin (the Hann equivalent noise
//! bandwidth of 1.5 bins is folded into that normalization). Powers are
//! reported in dB relative to the shot-noise limit.
//!
//! Everything is deterministic for a fixed seed; per-draw generator streams
//! are derived with [`derive_seed`] so results do not depend on execution
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::model::{displacement_to_phase, CantileverParams, Scene};
use crate::{Error, Result};

/// Spectrum-analyzer front-panel settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSettings {
    /// Resolution bandwidth (spectral bin width), hertz.
    pub rbw: f64,
    /// Video bandwidth (post-detection smoothing), hertz.
    pub vbw: f64,
    /// Sweep time, seconds.
    pub sweep_time: f64,
    /// Number of averaged trace draws.
    pub averages: u32,
    /// Display center frequency, hertz.
    pub center: f64,
    /// Display span, hertz.
    pub span: f64,
}

impl AnalyzerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.rbw <= 0.0 || self.vbw <= 0.0 {
            return Err(Error::InvalidArgument("rbw and vbw must be > 0".into()));
        }
        if self.averages < 1 {
            return Err(Error::InvalidArgument("averages must be >= 1".into()));
        }
        if self.sweep_time < 0.0 || self.span <= 0.0 || self.center < 0.0 {
            return Err(Error::InvalidArgument(
                "sweep_time must be >= 0, span > 0, center >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Raw sampled detector output.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotocurrentRecord {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub seed: u64,
}

impl PhotocurrentRecord {
    pub fn variance(&self) -> f64 {
        let n = self.samples.len() as f64;
        let mean = self.samples.iter().sum::<f64>() / n;
        self.samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
    }
}

/// Frequency-binned power spectrum in dB relative to the shot-noise limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTrace {
    pub freq_hz: Vec<f64>,
    pub power_db: Vec<f64>,
    pub settings: AnalyzerSettings,
    pub seed: u64,
}

impl SpectrumTrace {
    pub fn power_linear(&self) -> Vec<f64> {
        self.power_db.iter().map(|db| 10.0_f64.powf(db / 10.0)).collect()
    }

    /// Mean linear power across all bins; equals the time-domain variance of
    /// the underlying record for a stationary input (Parseval).
    pub fn integrated_power(&self) -> f64 {
        let lin = self.power_linear();
        lin.iter().sum::<f64>() / lin.len() as f64
    }
}

/// Deterministic per-draw stream seed (splitmix64 over seed and index).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stochastic realization of the scene statistics: white Gaussian noise at
/// the scene variance plus the transduced cantilever drive tone.
pub fn sample_photocurrent(
    scene: &Scene,
    cantilever: &CantileverParams,
    sample_rate: f64,
    duration: f64,
    seed: u64,
) -> Result<PhotocurrentRecord> {
    cantilever.validate()?;
    if sample_rate <= 0.0 || duration <= 0.0 {
        return Err(Error::InvalidArgument(
            "sample rate and duration must be > 0".into(),
        ));
    }
    let n = (sample_rate * duration).round() as usize;
    if n < 1 << 14 {
        return Err(Error::InvalidArgument(format!(
            "record too short: {n} samples, need at least {}",
            1 << 14
        )));
    }
    let displacement = cantilever.drive_displacement();
    if displacement > 0.0 && sample_rate <= 2.0 * cantilever.drive_freq {
        return Err(Error::InvalidArgument(format!(
            "sample rate {sample_rate} Hz undersamples the {} Hz drive",
            cantilever.drive_freq
        )));
    }
    let variance = scene.variance();
    if variance < 0.0 {
        return Err(Error::Numerical("negative scene variance".into()));
    }
    let sigma = variance.sqrt();
    let amplitude = scene.signal_gain * displacement_to_phase(displacement, scene.lambda)?;
    let omega = 2.0 * std::f64::consts::PI * cantilever.drive_freq / sample_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let noise: f64 = StandardNormal.sample(&mut rng);
            amplitude * (omega * i as f64).sin() + sigma * noise
        })
        .collect();
    Ok(PhotocurrentRecord {
        samples,
        sample_rate,
        seed,
    })
}

/// Segment-averaged (Welch) PSD estimate with segment length set by the
/// requested resolution bandwidth. One-sided; bin values are in linear
/// SNL-normalized power before conversion to dB.
pub fn psd_estimate(record: &PhotocurrentRecord, rbw: f64) -> Result<SpectrumTrace> {
    if rbw <= 0.0 {
        return Err(Error::InvalidArgument("rbw must be > 0".into()));
    }
    let seg_len = (record.sample_rate / rbw).round() as usize;
    if seg_len < 8 {
        return Err(Error::InvalidArgument(format!(
            "rbw {rbw} Hz too wide for sample rate {}",
            record.sample_rate
        )));
    }
    let hop = seg_len / 2;
    let n = record.samples.len();
    if n < seg_len {
        return Err(Error::InvalidArgument("record shorter than one segment".into()));
    }
    let n_segments = (n - seg_len) / hop + 1;
    if n_segments < 8 {
        return Err(Error::InvalidArgument(format!(
            "record supports only {n_segments} segments at rbw {rbw} Hz, need >= 8"
        )));
    }
    let window: Vec<f64> = (0..seg_len)
        .map(|i| {
            0.5 * (1.0
                - (2.0 * std::f64::consts::PI * i as f64 / seg_len as f64).cos())
        })
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(seg_len);
    let n_bins = seg_len / 2 + 1;
    let mut acc = vec![0.0_f64; n_bins];
    let mut buf = vec![Complex::new(0.0, 0.0); seg_len];
    for s in 0..n_segments {
        let start = s * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(record.samples[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].norm_sqr() / window_power;
        }
    }
    let bin_width = record.sample_rate / seg_len as f64;
    let freq_hz: Vec<f64> = (0..n_bins).map(|k| k as f64 * bin_width).collect();
    let power_db: Vec<f64> = acc
        .iter()
        .map(|p| 10.0 * (p / n_segments as f64).max(f64::MIN_POSITIVE).log10())
        .collect();
    let settings = AnalyzerSettings {
        rbw: bin_width,
        vbw: bin_width,
        sweep_time: 0.0,
        averages: 1,
        center: record.sample_rate / 4.0,
        span: record.sample_rate / 2.0,
    };
    Ok(SpectrumTrace {
        freq_hz,
        power_db,
        settings,
        seed: record.seed,
    })
}

/// Average traces in linear power, bin by bin. Traces must share a frequency
/// grid; the result keeps the first trace's seed and sums the averages count.
pub fn average_traces(traces: &[SpectrumTrace]) -> Result<SpectrumTrace> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidArgument("no traces to average".into()))?;
    let n = first.freq_hz.len();
    let mut acc = vec![0.0_f64; n];
    for t in traces {
        if t.freq_hz.len() != n || t.freq_hz != first.freq_hz {
            return Err(Error::InvalidArgument(
                "traces disagree on frequency grid".into(),
            ));
        }
        for (a, p) in acc.iter_mut().zip(t.power_linear()) {
            *a += p;
        }
    }
    let m = traces.len() as f64;
    let power_db = acc
        .iter()
        .map(|p| 10.0 * (p / m).max(f64::MIN_POSITIVE).log10())
        .collect();
    let mut settings = first.settings;
    settings.averages = traces.iter().map(|t| t.settings.averages).sum();
    Ok(SpectrumTrace {
        freq_hz: first.freq_hz.clone(),
        power_db,
        settings,
        seed: first.seed,
    })
}

/// Crop a trace to the analyzer span and apply video-bandwidth smoothing: a
/// single-pole lowpass across bins at the VBW-to-sweep-rate ratio. A VBW at
/// or above the RBW passes the trace through (with a warning when above).
pub fn video_filter(trace: &SpectrumTrace, settings: &AnalyzerSettings) -> Result<SpectrumTrace> {
    settings.validate()?;
    let f_lo = settings.center - settings.span / 2.0;
    let f_hi = settings.center + settings.span / 2.0;
    let mut freq_hz = Vec::new();
    let mut linear = Vec::new();
    for (f, p) in trace.freq_hz.iter().zip(trace.power_linear()) {
        if *f >= f_lo && *f <= f_hi {
            freq_hz.push(*f);
            linear.push(p);
        }
    }
    if freq_hz.is_empty() {
        return Err(Error::InvalidArgument(
            "analyzer span does not overlap the trace".into(),
        ));
    }
    if settings.vbw >= settings.rbw {
        if settings.vbw > settings.rbw {
            log::warn!(
                "vbw {} Hz exceeds rbw {} Hz; video filter is a passthrough",
                settings.vbw,
                settings.rbw
            );
        }
    } else if settings.sweep_time > 0.0 {
        // Time spent per bin during the sweep sets the smoothing constant.
        let bin_time = settings.sweep_time * settings.rbw / settings.span;
        let alpha = 1.0 - (-2.0 * std::f64::consts::PI * settings.vbw * bin_time).exp();
        let mut y = linear[0];
        for p in linear.iter_mut() {
            y += alpha * (*p - y);
            *p = y;
        }
    }
    let power_db = linear
        .iter()
        .map(|p| 10.0 * p.max(f64::MIN_POSITIVE).log10())
        .collect();
    Ok(SpectrumTrace {
        freq_hz,
        power_db,
        settings: *settings,
        seed: trace.seed,
    })
}

/// Trace averaging plus video filtering: the full analyzer pipeline applied
/// to per-draw PSD estimates.
pub fn emulate_analyzer(
    traces: &[SpectrumTrace],
    settings: &AnalyzerSettings,
) -> Result<SpectrumTrace> {
    let averaged = average_traces(traces)?;
    video_filter(&averaged, settings)
}

/// Synthesize one displayed trace: `settings.averages` independent
/// photocurrent draws, each Welch-estimated, averaged and video-filtered.
/// Draw seeds derive from `(seed, draw_index)`; draws run in parallel but are
/// reduced in index order, so output is independent of scheduling.
pub fn synthesize_trace(
    scene: &Scene,
    cantilever: &CantileverParams,
    settings: &AnalyzerSettings,
    sample_rate: f64,
    duration_per_draw: f64,
    seed: u64,
) -> Result<SpectrumTrace> {
    settings.validate()?;
    let draws: Vec<SpectrumTrace> = (0..settings.averages as u64)
        .into_par_iter()
        .map(|i| {
            let record = sample_photocurrent(
                scene,
                cantilever,
                sample_rate,
                duration_per_draw,
                derive_seed(seed, i),
            )?;
            psd_estimate(&record, settings.rbw)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut trace = emulate_analyzer(&draws, settings)?;
    trace.seed = seed;
    trace.settings.averages = settings.averages;
    Ok(trace)
}

/// Median floor of a trace in dB, excluding bins within 3 RBW of an optional
/// tone frequency.
pub fn trace_floor_db(trace: &SpectrumTrace, exclude_freq: Option<f64>) -> Result<f64> {
    let rbw = trace.settings.rbw;
    let mut floor: Vec<f64> = trace
        .freq_hz
        .iter()
        .zip(&trace.power_db)
        .filter(|(f, _)| match exclude_freq {
            Some(f0) => (**f - f0).abs() > 3.0 * rbw,
            None => true,
        })
        .map(|(_, p)| *p)
        .collect();
    if floor.is_empty() {
        return Err(Error::Numerical("no floor bins left after exclusion".into()));
    }
    floor.sort_by(|a, b| a.total_cmp(b));
    Ok(floor[floor.len() / 2])
}

/// Peak-above-floor SNR at the drive frequency, in dB: the noise floor (the
/// median away from the tone) is subtracted from the peak bin power in linear
/// units before taking the ratio, so the estimate is unbiased at low SNR.
pub fn extract_snr(trace: &SpectrumTrace, f_drive: f64) -> Result<f64> {
    let (f_min, f_max) = match (trace.freq_hz.first(), trace.freq_hz.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::InvalidArgument("empty trace".into())),
    };
    if f_drive < f_min || f_drive > f_max {
        return Err(Error::InvalidArgument(format!(
            "drive frequency {f_drive} Hz outside trace span [{f_min}, {f_max}]"
        )));
    }
    let rbw = trace.settings.rbw;
    let peak_db = trace
        .freq_hz
        .iter()
        .zip(&trace.power_db)
        .filter(|(f, _)| (**f - f_drive).abs() <= 1.5 * rbw)
        .map(|(_, p)| *p)
        .fold(f64::NEG_INFINITY, f64::max);
    if !peak_db.is_finite() {
        return Err(Error::Numerical(
            "no usable peak bin at the drive frequency".into(),
        ));
    }
    let floor_db = trace_floor_db(trace, Some(f_drive))?;
    let peak = 10.0_f64.powf(peak_db / 10.0);
    let floor = 10.0_f64.powf(floor_db / 10.0);
    if peak <= floor {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(10.0 * ((peak - floor) / floor).log10())
}
