use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use beamspace_denoiser::beamspace::from_beamspace;
use beamspace_denoiser::chanmodel::{
    add_awgn, generate_bg_beamspace_channel, BernoulliGaussianConfig, GeometricModel, Grid,
};
use beamspace_denoiser::denoiser::{denoise_pipeline, EstimationReport};
use beamspace_denoiser::fixedpoint::{fx_pipeline, write_dump, FxFormats};
use beamspace_denoiser::harness::{
    parse_config, parse_params, run_ber_experiment, run_mse_experiment, run_scaling_benchmark, snr_grid, trial_rng,
    write_csv, ChannelKind, Estimator, ResultRow, SimConfig,
};
use beamspace_denoiser::quantizer::{composite_noise_variance, QuantizerModel};
use beamspace_denoiser::{ChannelVector, DenoiserParams, Error, Resolution, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bsdenoise", version, about = "Beamspace channel denoiser experiments", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Channel-estimation MSE versus SNR.
    Mse(SimArgs),
    /// Uncoded 16-QAM BER after LMMSE equalization.
    Ber(SimArgs),
    /// Denoiser wall time versus array size.
    Scaling(ScalingArgs),
    /// Denoise a single realization and print every intermediate.
    DenoiseOne(OneArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Geometric,
    #[value(alias = "bg")]
    BernoulliGaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    On,
    Off,
}

#[derive(Args)]
struct ChannelArgs {
    /// Ground-truth channel model.
    #[arg(long, value_enum, default_value = "geometric")]
    channel: ChannelArg,
    /// Path angles on the DFT grid or uniform (geometric model).
    #[arg(long, value_enum, default_value = "on")]
    grid: GridArg,
    /// Number of propagation paths (geometric model).
    #[arg(long, default_value_t = 3)]
    paths: usize,
    /// Beam activity rate (Bernoulli-Gaussian model).
    #[arg(long, default_value_t = 0.1)]
    activity: f64,
}

impl ChannelArgs {
    fn kind(&self) -> ChannelKind {
        match self.channel {
            ChannelArg::Geometric => ChannelKind::Geometric(GeometricModel {
                num_paths: self.paths,
                grid: match self.grid {
                    GridArg::On => Grid::OnGrid,
                    GridArg::Off => Grid::OffGrid,
                },
                ..GeometricModel::default()
            }),
            ChannelArg::BernoulliGaussian => ChannelKind::BernoulliGaussian { activity: self.activity },
        }
    }
}

#[derive(Args)]
struct DenoiserArgs {
    /// Overrides such as `C=4,c=2,cprime=4,rho-min=8,T=3,strict-kappa=false`.
    #[arg(long, default_value = "")]
    params: String,
    /// Give the denoiser the true composite noise power.
    #[arg(long)]
    known_noise: bool,
    /// Run the denoiser through the fixed-point model.
    #[arg(long)]
    fixed_point: bool,
    /// Fixed-point storage formats: `declared` or `extended`.
    #[arg(long, default_value = "declared")]
    fx_formats: FxFormats,
}

impl DenoiserArgs {
    fn params(&self) -> Result<DenoiserParams> {
        parse_params(&self.params, &DenoiserParams::default())
    }

    fn formats(&self) -> Option<FxFormats> {
        self.fixed_point.then_some(self.fx_formats)
    }
}

#[derive(Args)]
struct SimArgs {
    /// Antennas.
    #[arg(long, default_value_t = 64)]
    m: usize,
    /// Users (BER only).
    #[arg(long, default_value_t = 8)]
    k: usize,
    /// ADC resolutions, `inf` for unquantized.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    bits: Vec<Resolution>,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    snr_start: f64,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    snr_stop: f64,
    #[arg(long, default_value_t = 5.0)]
    snr_step: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated list of proposed-blind, proposed-known, ls, diag-lmmse, perfect-csi.
    #[arg(long, value_delimiter = ',', default_value = "proposed-blind,proposed-known,ls,diag-lmmse,perfect-csi")]
    estimators: Vec<Estimator>,
    /// Data vectors per BER trial.
    #[arg(long, default_value_t = 16)]
    data_vectors: usize,
    /// Record the per-vector estimator time.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    denoiser: DenoiserArgs,
    #[command(flatten)]
    common: CommonArgs,
}

impl SimArgs {
    fn config(&self) -> Result<SimConfig> {
        let mut estimators = self.estimators.clone();
        if self.denoiser.known_noise {
            for e in &mut estimators {
                if *e == Estimator::ProposedBlind {
                    *e = Estimator::ProposedKnown;
                }
            }
            estimators.dedup();
        }
        Ok(SimConfig {
            m: self.m,
            k: self.k,
            bits: self.bits.clone(),
            snr_db: snr_grid(self.snr_start, self.snr_stop, self.snr_step)?,
            trials: self.trials,
            seed: self.seed,
            estimators,
            channel: self.channel.kind(),
            params: self.denoiser.params()?,
            fixed_point: self.denoiser.formats(),
            data_vectors: self.data_vectors,
            timing: self.timing,
        })
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
    /// `key = value` file supplying defaults for any flag.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ScalingArgs {
    /// Array sizes, powers of two.
    #[arg(long = "m", value_delimiter = ',', default_value = "256,512,1024,2048,4096")]
    ms: Vec<usize>,
    #[arg(long, default_value_t = 41)]
    repetitions: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct OneArgs {
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value = "3")]
    bits: Resolution,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    snr: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Trial index selecting the random stream.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    denoiser: DenoiserArgs,
    /// Write fixed-point stimulus and response hex files here.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_rows(common: &CommonArgs, rows: &[ResultRow]) -> Result<()> {
    let mut out = output(&common.out)?;
    write_csv(&mut out, rows)?;
    out.flush()?;
    Ok(())
}

fn denoise_one(a: &OneArgs) -> Result<()> {
    let params = a.denoiser.params()?;
    let q = QuantizerModel::cached(a.bits)?;
    let n0 = 10f64.powf(-a.snr / 10.0);
    let mut rng = trial_rng(a.seed, a.trial);
    let h = match a.channel.kind() {
        ChannelKind::Geometric(g) => g.generate(a.m, &mut rng)?,
        ChannelKind::BernoulliGaussian { activity } => {
            let cfg = BernoulliGaussianConfig { m: a.m, q: activity, power: 1.0 };
            from_beamspace(&generate_bg_beamspace_channel(&cfg, &mut rng)?)
        }
    };
    let y = q.quantize_agc(&add_awgn(&h, n0, &mut rng)?)?;
    let alpha = q.alpha();
    let true_d0 = composite_noise_variance(alpha, n0, h.norm_sqr() / a.m as f64);
    let known = a.denoiser.known_noise.then(|| composite_noise_variance(alpha, n0, 1.0));
    let nmse = |hh: &ChannelVector| hh.distance_sqr(&h) / h.norm_sqr();

    let mut out = output(&a.common.out)?;
    writeln!(out, "alpha,{alpha:.9e}")?;
    writeln!(out, "true_d0,{true_d0:.9e}")?;
    writeln!(out, "ls_nmse,{:.9e}", nmse(&y))?;
    match a.denoiser.formats() {
        None => {
            let (hh, report) = denoise_pipeline(&y, &params, alpha, known)?;
            writeln!(out, "nmse,{:.9e}", nmse(&hh))?;
            writeln!(out, "{}", EstimationReport::CSV_HEADER)?;
            writeln!(out, "{}", report.csv_row(a.trial, a.snr, &a.bits.to_string()))?;
        }
        Some(formats) => {
            let (hh, r) = fx_pipeline(&y, &params, alpha, known, &formats)?;
            writeln!(out, "nmse,{:.9e}", nmse(&hh))?;
            writeln!(out, "d0,{:.9e}", r.d0_unscaled())?;
            writeln!(out, "sdnr,{:.9e}", r.sdnr.to_f64())?;
            writeln!(out, "active_beams,{}", r.active_beams)?;
            writeln!(out, "eta,{:.9e}", r.eta_unscaled())?;
            writeln!(out, "support,{}", r.decisions.iter().filter(|&&d| d).count())?;
            writeln!(out, "saturations,{}", r.saturations)?;
            if let Some(dir) = &a.dump_dir {
                std::fs::create_dir_all(dir)?;
                write_dump(dir, &format!("trial{}", a.trial), &r)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Mse(a) | Command::Ber(a) => &a.common,
        Command::Scaling(a) => &a.common,
        Command::DenoiseOne(a) => &a.common,
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = common(&cli.command).threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Mse(a) => write_rows(&a.common, &run_mse_experiment(&a.config()?)?),
        Command::Ber(a) => write_rows(&a.common, &run_ber_experiment(&a.config()?)?),
        Command::Scaling(a) => write_rows(&a.common, &run_scaling_benchmark(&a.ms, a.repetitions, a.seed)?),
        Command::DenoiseOne(a) => denoise_one(a),
    }
}

const SWITCHES: [&str; 3] = ["known-noise", "fixed-point", "timing"];

/// Splices `--config` file entries after the subcommand, skipping keys that
/// are also given on the command line.
fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = args.get(i + 1).cloned();
        }
    }
    let Some(path) = path else { return Ok(args) };
    let Some(sub) = args.iter().position(|a| !a.starts_with('-') && a != &args[0]) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)?;
    let mut extra = Vec::new();
    let given = |k: &str| {
        let flag = format!("--{k}");
        args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    for (k, v) in parse_config(&text)? {
        if k == "config" || given(&k) {
            continue;
        }
        if SWITCHES.contains(&k.as_str()) {
            let on: bool = v.parse().map_err(|_| Error::Config(format!("{k}: expected true or false")))?;
            if on {
                extra.push(format!("--{k}"));
            }
        } else {
            extra.push(format!("--{k}={v}"));
        }
    }
    let mut out = args[..=sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
