//! Configuration files and overrides.
//!
//! The format is a flat key-value text file with dotted section names and
//! explicit unit suffixes (`tnli.p_lo_probe = 110 uW`, `tnli.lambda =
//! 795 nm`); the parser normalizes everything to SI. `schema_version = 1` is
//! mandatory, unknown keys are hard errors, and every field is also settable
//! from the command line through [`FullConfig::apply_override`].

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{CantileverParams, TnliConfig, Topology};
use crate::spectrum::AnalyzerSettings;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

const BUNDLED_DEFAULT: &str = include_str!("bundled_default.cfg");

/// Everything a run needs: optics, mechanics, analyzer, seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FullConfig {
    pub tnli: TnliConfig,
    pub cantilever: CantileverParams,
    pub analyzer: AnalyzerSettings,
    pub seed: u64,
}

impl FullConfig {
    /// The bundled default configuration.
    pub fn bundled_default() -> Self {
        Self::parse_str(BUNDLED_DEFAULT).expect("bundled config is valid")
    }

    /// Text of the bundled default configuration.
    pub fn bundled_default_text() -> &'static str {
        BUNDLED_DEFAULT
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    /// Parse a config file. Missing keys fall back to the bundled defaults;
    /// `schema_version` must be present and equal to 1.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = if text == BUNDLED_DEFAULT {
            // Bootstrap for the bundled file itself.
            default_struct()
        } else {
            Self::bundled_default()
        };
        let mut saw_version = false;
        let mut seen = HashSet::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", line_no + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}`",
                    line_no + 1
                )));
            }
            if key == "schema_version" {
                let v: u64 = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad schema_version `{value}`")))?;
                if v != SCHEMA_VERSION {
                    return Err(Error::Config(format!(
                        "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
                    )));
                }
                saw_version = true;
                continue;
            }
            cfg.apply_override(key, value)?;
        }
        if !saw_version {
            return Err(Error::Config("missing mandatory schema_version key".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.tnli.validate()?;
        self.cantilever.validate()?;
        self.analyzer.validate()?;
        Ok(())
    }

    /// Set one field by dotted key from its textual form, with unit suffix.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        let dim = schema_dim(key).ok_or_else(|| {
            Error::Config(format!(
                "unknown key `{key}`; valid keys: {}",
                key_listing()
            ))
        })?;
        match dim {
            Dim::Enum => {
                self.tnli.topology = parse_topology(value)?;
            }
            Dim::Count => {
                let v: u64 = value.parse().map_err(|_| {
                    Error::Config(format!("key `{key}`: expected an integer, got `{value}`"))
                })?;
                match key {
                    "analyzer.averages" => {
                        self.analyzer.averages = u32::try_from(v).map_err(|_| {
                            Error::Config("analyzer.averages out of range".into())
                        })?
                    }
                    "seed" => self.seed = v,
                    _ => unreachable!("count keys covered"),
                }
            }
            _ => {
                let v = parse_quantity(value, dim)
                    .map_err(|e| Error::Config(format!("key `{key}`: {e}")))?;
                self.set_numeric(key, v)?;
            }
        }
        Ok(())
    }

    /// Set a numeric field by dotted key, value already in SI units.
    pub fn set_numeric(&mut self, key: &str, v: f64) -> Result<()> {
        match key {
            "tnli.gain" => self.tnli.gain = v,
            "tnli.eta" => self.tnli.eta = v,
            "tnli.theta_p" => self.tnli.theta_p = v,
            "tnli.theta_c" => self.tnli.theta_c = v,
            "tnli.phi" => self.tnli.phi = v,
            "tnli.lambda" => self.tnli.lambda = v,
            "tnli.p_probe" => self.tnli.p_probe = v,
            "tnli.p_conj" => self.tnli.p_conj = v,
            "tnli.p_lo_probe" => self.tnli.p_lo_probe = v,
            "tnli.p_lo_conj" => self.tnli.p_lo_conj = v,
            "tnli.delta_f" => self.tnli.delta_f = v,
            "tnli.cantilever_reflectivity" => self.tnli.cantilever_reflectivity = v,
            "cantilever.k" => self.cantilever.k = v,
            "cantilever.q" => self.cantilever.q = v,
            "cantilever.f0" => self.cantilever.f0 = v,
            "cantilever.drive_freq" => self.cantilever.drive_freq = v,
            "cantilever.drive_amplitude" => self.cantilever.drive_amplitude_volts = v,
            "cantilever.volts_to_meters" => self.cantilever.volts_to_meters = v,
            "analyzer.rbw" => self.analyzer.rbw = v,
            "analyzer.vbw" => self.analyzer.vbw = v,
            "analyzer.sweep_time" => self.analyzer.sweep_time = v,
            "analyzer.center" => self.analyzer.center = v,
            "analyzer.span" => self.analyzer.span = v,
            _ => {
                return Err(Error::Config(format!(
                    "`{key}` is not a numeric parameter; sweepable parameters: {}",
                    sweepable_listing()
                )))
            }
        }
        Ok(())
    }

    /// Resolve a possibly unqualified parameter name (`gain` ->
    /// `tnli.gain`) against the numeric schema.
    pub fn resolve_param(name: &str) -> Result<&'static str> {
        let numeric: Vec<&'static str> = SCHEMA
            .iter()
            .filter(|(_, d)| !matches!(d, Dim::Enum | Dim::Count))
            .map(|(k, _)| *k)
            .collect();
        if let Some(k) = numeric.iter().find(|k| **k == name) {
            return Ok(k);
        }
        let matches: Vec<&'static str> = numeric
            .iter()
            .filter(|k| k.rsplit('.').next() == Some(name))
            .copied()
            .collect();
        match matches.as_slice() {
            [one] => Ok(one),
            [] => Err(Error::Config(format!(
                "unknown parameter `{name}`; sweepable parameters: {}",
                sweepable_listing()
            ))),
            many => Err(Error::Config(format!(
                "ambiguous parameter `{name}`: matches {}",
                many.join(", ")
            ))),
        }
    }
}

fn default_struct() -> FullConfig {
    FullConfig {
        tnli: TnliConfig {
            gain: 1.0,
            eta: 1.0,
            theta_p: 0.0,
            theta_c: 0.0,
            phi: 0.0,
            lambda: 795e-9,
            p_probe: 0.0,
            p_conj: 0.0,
            p_lo_probe: 0.0,
            p_lo_conj: 0.0,
            delta_f: 1.0,
            topology: Topology::LoOnCantilever,
            cantilever_reflectivity: 1.0,
        },
        cantilever: CantileverParams {
            k: 1.0,
            q: 1.0,
            f0: 1.0,
            drive_freq: 1.0,
            drive_amplitude_volts: 0.0,
            volts_to_meters: 0.0,
        },
        analyzer: AnalyzerSettings {
            rbw: 1.0,
            vbw: 1.0,
            sweep_time: 1.0,
            averages: 1,
            center: 1.0,
            span: 1.0,
        },
        seed: 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Dimensionless,
    Meters,
    Watts,
    Hertz,
    Volts,
    Seconds,
    Radians,
    NewtonsPerMeter,
    MetersPerVolt,
    Count,
    Enum,
}

const SCHEMA: &[(&str, Dim)] = &[
    ("tnli.gain", Dim::Dimensionless),
    ("tnli.eta", Dim::Dimensionless),
    ("tnli.theta_p", Dim::Radians),
    ("tnli.theta_c", Dim::Radians),
    ("tnli.phi", Dim::Radians),
    ("tnli.lambda", Dim::Meters),
    ("tnli.p_probe", Dim::Watts),
    ("tnli.p_conj", Dim::Watts),
    ("tnli.p_lo_probe", Dim::Watts),
    ("tnli.p_lo_conj", Dim::Watts),
    ("tnli.delta_f", Dim::Hertz),
    ("tnli.topology", Dim::Enum),
    ("tnli.cantilever_reflectivity", Dim::Dimensionless),
    ("cantilever.k", Dim::NewtonsPerMeter),
    ("cantilever.q", Dim::Dimensionless),
    ("cantilever.f0", Dim::Hertz),
    ("cantilever.drive_freq", Dim::Hertz),
    ("cantilever.drive_amplitude", Dim::Volts),
    ("cantilever.volts_to_meters", Dim::MetersPerVolt),
    ("analyzer.rbw", Dim::Hertz),
    ("analyzer.vbw", Dim::Hertz),
    ("analyzer.sweep_time", Dim::Seconds),
    ("analyzer.averages", Dim::Count),
    ("analyzer.center", Dim::Hertz),
    ("analyzer.span", Dim::Hertz),
    ("seed", Dim::Count),
];

pub fn schema_dim(key: &str) -> Option<Dim> {
    SCHEMA.iter().find(|(k, _)| *k == key).map(|(_, d)| *d)
}

fn key_listing() -> String {
    SCHEMA
        .iter()
        .map(|(k, _)| *k)
        .collect::<Vec<_>>()
        .join(", ")
}

fn sweepable_listing() -> String {
    SCHEMA
        .iter()
        .filter(|(_, d)| !matches!(d, Dim::Enum | Dim::Count))
        .map(|(k, _)| *k)
        .collect::<Vec<_>>()
        .join(", ")
}

fn parse_topology(value: &str) -> Result<Topology> {
    match value.to_ascii_lowercase().as_str() {
        "probe" | "probe_on_cantilever" => Ok(Topology::ProbeOnCantilever),
        "lo" | "lo_on_cantilever" => Ok(Topology::LoOnCantilever),
        other => Err(Error::Config(format!(
            "unknown topology `{other}`; expected `probe` or `lo`"
        ))),
    }
}

/// Parse `<number> [unit]` and normalize to SI for the given dimension.
pub fn parse_quantity(value: &str, dim: Dim) -> Result<f64> {
    let mut parts = value.split_whitespace();
    let number = parts
        .next()
        .ok_or_else(|| Error::Config("empty value".into()))?;
    let unit = parts.next();
    if parts.next().is_some() {
        return Err(Error::Config(format!("trailing tokens in `{value}`")));
    }
    let x: f64 = number
        .parse()
        .map_err(|_| Error::Config(format!("not a number: `{number}`")))?;
    let factor = unit_factor(unit, dim)?;
    Ok(x * factor)
}

fn unit_factor(unit: Option<&str>, dim: Dim) -> Result<f64> {
    let table: &[(&str, f64)] = match dim {
        Dim::Dimensionless => &[],
        Dim::Meters => &[
            ("fm", 1e-15),
            ("pm", 1e-12),
            ("nm", 1e-9),
            ("um", 1e-6),
            ("mm", 1e-3),
            ("m", 1.0),
        ],
        Dim::Watts => &[
            ("nW", 1e-9),
            ("uW", 1e-6),
            ("mW", 1e-3),
            ("W", 1.0),
        ],
        Dim::Hertz => &[
            ("Hz", 1.0),
            ("kHz", 1e3),
            ("MHz", 1e6),
            ("GHz", 1e9),
        ],
        Dim::Volts => &[("uV", 1e-6), ("mV", 1e-3), ("V", 1.0)],
        Dim::Seconds => &[("us", 1e-6), ("ms", 1e-3), ("s", 1.0)],
        Dim::Radians => &[("rad", 1.0), ("deg", std::f64::consts::PI / 180.0)],
        Dim::NewtonsPerMeter => &[("N/m", 1.0)],
        Dim::MetersPerVolt => &[
            ("fm/V", 1e-15),
            ("pm/V", 1e-12),
            ("nm/V", 1e-9),
            ("um/V", 1e-6),
            ("m/V", 1.0),
            ("nm/mV", 1e-6),
        ],
        Dim::Count | Dim::Enum => &[],
    };
    match unit {
        None => Ok(1.0),
        Some(u) => {
            if table.is_empty() {
                return Err(Error::Config(format!(
                    "value takes no unit, got `{u}`"
                )));
            }
            table
                .iter()
                .find(|(name, _)| *name == u)
                .map(|(_, f)| *f)
                .ok_or_else(|| {
                    let valid: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
                    Error::Config(format!(
                        "unknown unit `{u}`; expected one of {}",
                        valid.join(", ")
                    ))
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bundled_default_parses() {
        let cfg = FullConfig::bundled_default();
        assert_relative_eq!(cfg.tnli.lambda, 795e-9);
        assert_relative_eq!(cfg.tnli.p_lo_probe, 110e-6);
        assert_relative_eq!(cfg.tnli.total_detected_power(), 182.9e-6, epsilon = 1e-12);
        assert_eq!(cfg.tnli.topology, Topology::LoOnCantilever);
        assert_relative_eq!(cfg.cantilever.drive_freq, 737e3);
        assert_eq!(cfg.analyzer.averages, 20);
        assert_relative_eq!(cfg.analyzer.vbw, 30.0);
        // Default gain puts the ideal floor at 2.9 dB below the SNL.
        let db = crate::model::squeezing_db(
            crate::model::ideal_noise_ratio(cfg.tnli.gain).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(db, 2.9, epsilon = 1e-4);
    }

    #[test]
    fn empty_and_malformed_configs_fail() {
        assert!(FullConfig::parse_str("").is_err());
        assert!(FullConfig::parse_str("tnli.gain = 1.5\n").is_err());
        assert!(FullConfig::parse_str("schema_version = 2\n").is_err());
        assert!(FullConfig::parse_str("schema_version = 1\nnot a line\n").is_err());
        assert!(
            FullConfig::parse_str("schema_version = 1\ntnli.gain = 1.2\ntnli.gain = 1.3\n")
                .is_err()
        );
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        let err = FullConfig::parse_str("schema_version = 1\ntnli.gian = 1.5\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("unknown key"));
        assert!(err.contains("tnli.gain"));
    }

    #[test]
    fn units_normalize_to_si() {
        assert_relative_eq!(parse_quantity("110 uW", Dim::Watts).unwrap(), 110e-6);
        assert_relative_eq!(parse_quantity("795 nm", Dim::Meters).unwrap(), 795e-9);
        assert_relative_eq!(parse_quantity("737 kHz", Dim::Hertz).unwrap(), 737e3);
        assert_relative_eq!(parse_quantity("40 mV", Dim::Volts).unwrap(), 0.04);
        assert_relative_eq!(
            parse_quantity("90 deg", Dim::Radians).unwrap(),
            std::f64::consts::FRAC_PI_2
        );
        assert_relative_eq!(parse_quantity("88 fm/V", Dim::MetersPerVolt).unwrap(), 8.8e-14);
        assert!(parse_quantity("1.5 parsec", Dim::Meters).is_err());
        assert!(parse_quantity("1.5 uW", Dim::Dimensionless).is_err());
        assert!(parse_quantity("abc", Dim::Watts).is_err());
    }

    #[test]
    fn overrides_and_param_resolution() {
        let mut cfg = FullConfig::bundled_default();
        cfg.apply_override("tnli.gain", "2.0").unwrap();
        assert_relative_eq!(cfg.tnli.gain, 2.0);
        cfg.apply_override("tnli.topology", "probe").unwrap();
        assert_eq!(cfg.tnli.topology, Topology::ProbeOnCantilever);
        cfg.apply_override("analyzer.averages", "5").unwrap();
        assert_eq!(cfg.analyzer.averages, 5);
        cfg.apply_override("cantilever.drive_amplitude", "180 mV").unwrap();
        assert_relative_eq!(cfg.cantilever.drive_amplitude_volts, 0.18);
        assert!(cfg.apply_override("nope", "1").is_err());

        assert_eq!(FullConfig::resolve_param("gain").unwrap(), "tnli.gain");
        assert_eq!(
            FullConfig::resolve_param("drive_amplitude").unwrap(),
            "cantilever.drive_amplitude"
        );
        assert!(FullConfig::resolve_param("bogus").is_err());
        // `topology` is not numeric, so it is not sweepable either.
        assert!(FullConfig::resolve_param("topology").is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = FullConfig::bundled_default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: FullConfig = serde_json::from_str(&text).unwrap();
        assert_relative_eq!(back.tnli.gain, cfg.tnli.gain);
        assert_eq!(back.seed, cfg.seed);
    }
}
