use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use tnli::budget::{budget_report, NoiseBudget};
use tnli::config::{parse_quantity, schema_dim, FullConfig};
use tnli::model::{self, Topology};
use tnli::output::{write_csv_table, write_json, write_trace, RunManifest};
use tnli::repro::{run_reproduction, Figure};
use tnli::spectrum::{extract_snr, synthesize_trace, trace_floor_db};
use tnli::{Error, Result};

#[derive(Parser)]
#[command(
    name = "tnli",
    version,
    about = "Truncated nonlinear interferometry calculators for quantum-enhanced AFM readout"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Configuration file; defaults to the bundled experiment description.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config field, e.g. --set tnli.gain=2 --set "tnli.lambda=795 nm".
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Shorthand for --set tnli.topology=...
    #[arg(long, value_parser = ["probe", "lo"])]
    topology: Option<String>,
    /// Random seed; overrides the config file and the TNLI_SEED env var.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonOpts {
    fn load(&self) -> Result<FullConfig> {
        let mut cfg = match &self.config {
            Some(path) => FullConfig::from_file(path)?,
            None => FullConfig::bundled_default(),
        };
        if let Some(t) = &self.topology {
            cfg.apply_override("tnli.topology", t)?;
        }
        for s in &self.sets {
            let (key, value) = s.split_once('=').ok_or_else(|| {
                Error::Config(format!("--set expects KEY=VALUE, got `{s}`"))
            })?;
            cfg.apply_override(key.trim(), value.trim())?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        } else if let Ok(env_seed) = std::env::var("TNLI_SEED") {
            cfg.seed = env_seed
                .parse()
                .map_err(|_| Error::Config(format!("bad TNLI_SEED value `{env_seed}`")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Displacement noise budget: shot noise, backaction, SQL, squeezed floor.
    Budget {
        #[command(flatten)]
        common: CommonOpts,
        /// Also write the budget as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Phase-sum noise variance: analytic formula vs covariance engine.
    Variance {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Sweep one numeric parameter and emit a CSV of all computed outputs.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Parameter to sweep (dotted key or unique short name).
        #[arg(long)]
        param: String,
        /// Start value (SI units, or with a unit suffix like "40 mV").
        #[arg(long)]
        from: String,
        /// End value.
        #[arg(long)]
        to: String,
        /// Number of steps, >= 2.
        #[arg(long)]
        steps: usize,
        /// Logarithmic spacing.
        #[arg(long)]
        log: bool,
        /// Parallel workers for sweep evaluation.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize one spectrum-analyzer trace (CSV + JSON + manifest).
    Spectrum {
        #[command(flatten)]
        common: CommonOpts,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Photocurrent sample rate, Hz.
        #[arg(long, default_value_t = 4e6)]
        sample_rate: f64,
        /// Samples per averaged draw.
        #[arg(long, default_value_t = 65536)]
        samples_per_draw: usize,
    },
    /// Reproduce the driven-cantilever trace sets and SNR tables.
    Reproduce {
        #[command(flatten)]
        common: CommonOpts,
        /// Which measurement set: fig2 (probe on cantilever) or fig3 (LO).
        #[arg(value_parser = ["fig2", "fig3"])]
        figure: String,
        /// Output directory; defaults to ./<figure>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the bundled default configuration.
    DefaultConfig,
}

fn main() -> ExitCode {
    env_logger::try_init().ok();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Budget { common, json } => cmd_budget(&common, json.as_deref()),
        Command::Variance { common } => cmd_variance(&common),
        Command::Sweep {
            common,
            param,
            from,
            to,
            steps,
            log,
            jobs,
            out,
        } => cmd_sweep(&common, &param, &from, &to, steps, log, jobs, out.as_deref()),
        Command::Spectrum {
            common,
            out,
            sample_rate,
            samples_per_draw,
        } => cmd_spectrum(&common, &out, sample_rate, samples_per_draw),
        Command::Reproduce {
            common,
            figure,
            out,
        } => cmd_reproduce(&common, &figure, out),
        Command::DefaultConfig => {
            print!("{}", FullConfig::bundled_default_text());
            Ok(())
        }
    }
}

fn fm(v: f64) -> String {
    format!("{:8.3}", v * 1e15)
}

fn cmd_budget(common: &CommonOpts, json: Option<&std::path::Path>) -> Result<()> {
    let cfg = common.load()?;
    let mut reports: Vec<NoiseBudget> = Vec::new();
    println!("displacement noise budget (delta_f = {} Hz)", cfg.tnli.delta_f);
    println!(
        "{:<22} {:>14} {:>14} {:>14} {:>14}",
        "topology", "snl fm/rtHz", "backact fm/rtHz", "sql fm/rtHz", "sq.floor fm/rtHz"
    );
    for topology in [Topology::ProbeOnCantilever, Topology::LoOnCantilever] {
        let mut t = cfg.tnli.clone();
        t.topology = topology;
        let b = budget_report(&t, &cfg.cantilever)?;
        println!(
            "{:<22} {:>14} {:>14} {:>14} {:>14}",
            match topology {
                Topology::ProbeOnCantilever => "probe_on_cantilever",
                Topology::LoOnCantilever => "lo_on_cantilever",
            },
            fm(b.snl.amplitude),
            fm(b.backaction.amplitude),
            fm(b.sql.amplitude),
            fm(b.squeezed_floor.amplitude),
        );
        reports.push(b);
    }
    println!(
        "ideal phase-sum squeezing at G = {:.4}: {:.2} dB below SNL",
        cfg.tnli.gain,
        model::squeezing_db(model::ideal_noise_ratio(cfg.tnli.gain)?)?
    );
    let snl = reports[0].snl.amplitude;
    println!(
        "effective floors on the {:.2} fm/rtHz SNL: {:.2} fm/rtHz (noise-ratio scaling), {:.2} fm/rtHz (inverse-e^r form)",
        snl * 1e15,
        snl * model::ideal_noise_ratio(cfg.tnli.gain)?.sqrt() * 1e15,
        reports[0].squeezed_floor.amplitude * 1e15
    );
    if let Some(path) = json {
        write_json(path, &reports)?;
    }
    Ok(())
}

fn cmd_variance(common: &CommonOpts) -> Result<()> {
    let cfg = common.load()?;
    let t = &cfg.tnli;
    let analytic = model::phase_sum_variance(t.r()?, t.eta, t.theta_p, t.theta_c, t.phi)?;
    let engine = {
        // The analytic expression assumes a lossless squeezed path; compare
        // against the matching engine scene.
        let mut lossless = t.clone();
        lossless.topology = Topology::LoOnCantilever;
        lossless.cantilever_reflectivity = 1.0;
        model::build_scene(&lossless)?.variance()
    };
    let configured = model::build_scene(t)?.variance();
    println!("analytic phase-sum variance : {analytic:.12}");
    println!("covariance engine variance  : {engine:.12}");
    println!("|difference|                : {:.3e}", (analytic - engine).abs());
    println!("configured-topology variance: {configured:.12}");
    println!(
        "dB relative to SNL          : {:.4}",
        -model::squeezing_db(analytic)?
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    common: &CommonOpts,
    param: &str,
    from: &str,
    to: &str,
    steps: usize,
    log: bool,
    jobs: usize,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let cfg = common.load()?;
    let key = FullConfig::resolve_param(param)?;
    let dim = schema_dim(key).expect("resolved keys are in the schema");
    let a = parse_quantity(from, dim)?;
    let b = parse_quantity(to, dim)?;
    if steps < 2 {
        return Err(Error::InvalidArgument("sweep needs at least 2 steps".into()));
    }
    if log && (a <= 0.0 || b <= 0.0) {
        return Err(Error::InvalidArgument(
            "log spacing requires positive endpoints".into(),
        ));
    }
    let values: Vec<f64> = (0..steps)
        .map(|i| {
            let t = i as f64 / (steps - 1) as f64;
            if log {
                (a.ln() + t * (b.ln() - a.ln())).exp()
            } else {
                a + t * (b - a)
            }
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    let rows: Vec<Vec<String>> = pool.install(|| {
        values
            .par_iter()
            .map(|v| sweep_row(&cfg, key, *v))
            .collect::<Result<Vec<_>>>()
    })?;

    let header = "param,value,phase_sum_variance,variance_db_rel_snl,engine_variance,\
                  snl_m_rthz,backaction_m_rthz,sql_m_rthz,squeezed_floor_m_rthz,snr_db";
    match out {
        Some(path) => write_csv_table(path, header, &rows)?,
        None => {
            println!("{header}");
            for row in &rows {
                println!("{}", row.join(","));
            }
        }
    }
    Ok(())
}

fn sweep_row(base: &FullConfig, key: &'static str, value: f64) -> Result<Vec<String>> {
    let mut cfg = base.clone();
    cfg.set_numeric(key, value)?;
    cfg.validate()?;
    let t = &cfg.tnli;
    let analytic = model::phase_sum_variance(t.r()?, t.eta, t.theta_p, t.theta_c, t.phi)?;
    let engine = model::build_scene(t)?.variance();
    let b = budget_report(t, &cfg.cantilever)?;
    let snr = match model::snr_db(t, cfg.cantilever.drive_displacement()) {
        Ok(v) => v.to_string(),
        Err(_) => "nan".to_string(),
    };
    Ok(vec![
        key.to_string(),
        value.to_string(),
        analytic.to_string(),
        (10.0 * analytic.log10()).to_string(),
        engine.to_string(),
        b.snl.amplitude.to_string(),
        b.backaction.amplitude.to_string(),
        b.sql.amplitude.to_string(),
        b.squeezed_floor.amplitude.to_string(),
        snr,
    ])
}

fn cmd_spectrum(
    common: &CommonOpts,
    out: &std::path::Path,
    sample_rate: f64,
    samples_per_draw: usize,
) -> Result<()> {
    let cfg = common.load()?;
    std::fs::create_dir_all(out)?;
    let scene = model::build_scene(&cfg.tnli)?;
    let duration = samples_per_draw as f64 / sample_rate;
    let trace = synthesize_trace(
        &scene,
        &cfg.cantilever,
        &cfg.analyzer,
        sample_rate,
        duration,
        cfg.seed,
    )?;
    let (csv, json) = write_trace(out, "trace", &trace)?;
    let mut manifest = RunManifest::new(&cfg, cfg.seed);
    manifest.record(&csv);
    manifest.record(&json);
    let manifest_path = out.join("manifest.json");
    manifest.record(&manifest_path);
    manifest.write(&manifest_path)?;
    let f_drive = cfg.cantilever.drive_freq;
    println!(
        "trace floor: {:.2} dB rel SNL",
        trace_floor_db(&trace, Some(f_drive))?
    );
    if cfg.cantilever.drive_displacement() > 0.0 {
        println!("extracted SNR at {:.0} Hz: {:.2} dB", f_drive, extract_snr(&trace, f_drive)?);
    }
    println!("wrote {}", csv.display());
    Ok(())
}

fn cmd_reproduce(common: &CommonOpts, figure: &str, out: Option<PathBuf>) -> Result<()> {
    let cfg = common.load()?;
    let fig = match figure {
        "fig2" => Figure::Fig2,
        _ => Figure::Fig3,
    };
    let out_dir = out.unwrap_or_else(|| PathBuf::from(fig.name()));
    let outcome = run_reproduction(&cfg, fig, cfg.seed, &out_dir)?;
    println!(
        "{}: squeezed floor {:.2} dB, coherent floor {:.2} dB rel SNL",
        fig.name(),
        outcome.squeezed_floor_db,
        outcome.coherent_floor_db
    );
    println!("drive_mv  snr_squeezed_db  snr_coherent_db  gap_db");
    for r in &outcome.rows {
        println!(
            "{:>8.0}  {:>15.2}  {:>15.2}  {:>6.2}",
            r.drive_mv, r.snr_squeezed_db, r.snr_coherent_db, r.gap_db
        );
    }
    println!("wrote {} files to {}", outcome.files.len() + 1, out_dir.display());
    Ok(())
}
