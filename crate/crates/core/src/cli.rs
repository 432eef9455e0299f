//! Batch command-line front end: `train`, `enhance`, `mix`, `eval`, `roundtrip`.
//!
//! Every tuning flag may also come from a plain-text `key = value` file given
//! with `--config`; flags win over the file, and the file wins over the
//! `SUBBAND_NMF_SEED` environment variable (seed only) and built-in defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::audio_io::{read_wav, write_wav};
use crate::config::{EnhanceConfig, FeatureKind, GainApplication, Method, Window};
use crate::dwpt_nmf::{enhance_dwpt, train_dwpt_model};
use crate::framing::FrameSpec;
use crate::metrics::{self, MetricReport};
use crate::mixing::{measured_snr_db, mix_at_snr, MixSpec};
use crate::model_io::{load_model, save_model, Model};
use crate::signal::Signal;
use crate::stft::{istft, stft};
use crate::stft_nmf::{enhance_spectrogram, train_stft_model};
use crate::wpt::{dwpt, idwpt, WaveletFilters};

pub const SEED_ENV: &str = "SUBBAND_NMF_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "subband-nmf",
    version,
    about = "Wavelet-packet and STFT speech enhancement with supervised NMF"
)]
pub struct Cli {
    /// Worker threads for per-file and per-subband work [default: number of cores]
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn speech and noise dictionaries from clean and noise-only audio
    Train(TrainArgs),
    /// Enhance noisy WAV files with a trained model
    Enhance(EnhanceArgs),
    /// Add noise to a clean utterance at a given SNR
    Mix(MixArgs),
    /// Compare enhanced audio against a clean reference (MSE, SSNR, SDI)
    Eval(EvalArgs),
    /// Analysis/synthesis round trip without enhancement, reporting the reconstruction error
    Roundtrip(RoundtripArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    StftNmf,
    DwptNmf,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::StftNmf => Method::StftNmf,
            MethodArg::DwptNmf => Method::DwptNmf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    Dwpt,
    Stft,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Enhancement method (may also be given as `method` in the config file)
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Clean speech WAV files or directories (directories are read in filename order)
    #[arg(long, required = true, num_args = 1..)]
    pub clean: Vec<PathBuf>,
    /// Speech-free noise WAV files or directories
    #[arg(long, required = true, num_args = 1..)]
    pub noise: Vec<PathBuf>,
    /// Output model file
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub common: CommonFlags,
}

/// Flags that shape the trained model.
#[derive(Debug, Args, Default)]
pub struct ModelFlags {
    /// Frame size in samples [default: 256 for stft-nmf, 1000 for dwpt-nmf]
    #[arg(long)]
    pub frame_size: Option<usize>,
    /// Frame shift in samples [default: 80 for stft-nmf, 20 for dwpt-nmf]
    #[arg(long)]
    pub frame_shift: Option<usize>,
    /// DWPT level [default: 3]
    #[arg(long)]
    pub level: Option<usize>,
    /// Wavelet family: haar, db4, db8, or any dbN up to db12 [default: db8]
    #[arg(long)]
    pub filter: Option<String>,
    /// STFT analysis window: hamming, hann, rectangular [default: hamming]
    #[arg(long)]
    pub window: Option<String>,
    /// STFT feature: power or magnitude [default: power]
    #[arg(long)]
    pub feature_kind: Option<String>,
    /// Speech dictionary columns [default: 40]
    #[arg(long)]
    pub speech_rank: Option<usize>,
    /// Noise dictionary columns [default: 160]
    #[arg(long)]
    pub noise_rank: Option<usize>,
    /// NMF iterations during training [default: 200]
    #[arg(long)]
    pub iters_train: Option<usize>,
}

/// Flags shared by training and enhancement.
#[derive(Debug, Args, Default)]
pub struct CommonFlags {
    /// NMF iterations while encoding noisy input [default: 50]
    #[arg(long)]
    pub iters_encode: Option<usize>,
    /// Denominator and entry floor [default: 1e-12]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Random seed [default: $SUBBAND_NMF_SEED, else 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Plain-text `key = value` configuration file; flags take precedence
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,
    /// Noisy WAV file, or a directory of WAV files
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output WAV file, or an output directory when --in is a directory
    #[arg(long)]
    pub out: PathBuf,
    /// Disable subband power normalization (dwpt-nmf)
    #[arg(long)]
    pub no_normalize: bool,
    /// How the STFT gain scales the magnitude: direct or sqrt [default: direct]
    #[arg(long)]
    pub gain_on_magnitude: Option<String>,
    /// Debug: bypass noise tracking and apply unit gains
    #[arg(long)]
    pub unit_gain: bool,
    /// Write the enhanced output's magnitude spectrogram (256/80 Hamming STFT) as CSV
    #[arg(long, value_name = "FILE")]
    pub dump_spectrogram: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonFlags,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// Clean WAV file
    #[arg(long)]
    pub clean: PathBuf,
    /// Noise WAV file (tiled if shorter than the clean file)
    #[arg(long)]
    pub noise: PathBuf,
    /// Target SNR in dB
    #[arg(long, allow_negative_numbers = true)]
    pub snr: f64,
    /// Seed choosing the noise excerpt [default: $SUBBAND_NMF_SEED, else 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output WAV file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Clean reference WAV file or directory
    #[arg(long)]
    pub reference: PathBuf,
    /// Processed WAV file or directory (matched to references by filename)
    #[arg(long)]
    pub test: PathBuf,
    /// Also write `file,mse,ssnr_db,sdi` rows to this CSV file
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    /// Input WAV file
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Transform pair to test
    #[arg(long, value_enum)]
    pub transform: TransformArg,
    /// DWPT level [default: 3]
    #[arg(long)]
    pub level: Option<usize>,
    /// Wavelet family [default: db8]
    #[arg(long)]
    pub filter: Option<String>,
    /// STFT frame size [default: 256]
    #[arg(long)]
    pub frame: Option<usize>,
    /// STFT frame shift [default: 80]
    #[arg(long)]
    pub shift: Option<usize>,
    /// STFT window [default: hamming]
    #[arg(long)]
    pub window: Option<String>,
}

/// Partial configuration from one source (file or flags).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub method: Option<Method>,
    pub frame_size: Option<usize>,
    pub frame_shift: Option<usize>,
    pub level: Option<usize>,
    pub filter_name: Option<String>,
    pub window: Option<Window>,
    pub feature_kind: Option<FeatureKind>,
    pub speech_rank: Option<usize>,
    pub noise_rank: Option<usize>,
    pub iters_train: Option<usize>,
    pub iters_encode: Option<usize>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub normalize: Option<bool>,
    pub gain_on_magnitude: Option<GainApplication>,
    pub unit_gain: Option<bool>,
}

impl Overrides {
    /// Fields set in `other` replace those in `self`.
    pub fn merge(mut self, other: Overrides) -> Overrides {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            method,
            frame_size,
            frame_shift,
            level,
            filter_name,
            window,
            feature_kind,
            speech_rank,
            noise_rank,
            iters_train,
            iters_encode,
            epsilon,
            seed,
            normalize,
            gain_on_magnitude,
            unit_gain
        );
        self
    }

    pub fn apply(&self, cfg: &mut EnhanceConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { cfg.$f = v.clone(); } )* };
        }
        set!(
            frame_size,
            frame_shift,
            level,
            filter_name,
            window,
            feature_kind,
            speech_rank,
            noise_rank,
            iters_train,
            iters_encode,
            epsilon,
            seed,
            normalize,
            gain_on_magnitude,
            unit_gain
        );
    }

    /// Parses `key = value` lines; `#` starts a comment. Keys accept `-` or `_`.
    pub fn parse_config(text: &str) -> anyhow::Result<Overrides> {
        let mut o = Overrides::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", n + 1))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            let ctx = || format!("line {}: invalid value '{value}' for '{key}'", n + 1);
            match key.as_str() {
                "method" => o.method = Some(value.parse().with_context(ctx)?),
                "frame_size" => o.frame_size = Some(value.parse().with_context(ctx)?),
                "frame_shift" => o.frame_shift = Some(value.parse().with_context(ctx)?),
                "level" => o.level = Some(value.parse().with_context(ctx)?),
                "filter" | "filter_name" => o.filter_name = Some(value.to_string()),
                "window" | "window_name" => o.window = Some(value.parse().with_context(ctx)?),
                "feature_kind" => o.feature_kind = Some(value.parse().with_context(ctx)?),
                "speech_rank" => o.speech_rank = Some(value.parse().with_context(ctx)?),
                "noise_rank" => o.noise_rank = Some(value.parse().with_context(ctx)?),
                "iters_train" => o.iters_train = Some(value.parse().with_context(ctx)?),
                "iters_encode" => o.iters_encode = Some(value.parse().with_context(ctx)?),
                "epsilon" => o.epsilon = Some(value.parse().with_context(ctx)?),
                "seed" => o.seed = Some(value.parse().with_context(ctx)?),
                "normalize" => o.normalize = Some(value.parse().with_context(ctx)?),
                "no_normalize" => o.normalize = Some(!value.parse::<bool>().with_context(ctx)?),
                "gain_on_magnitude" => o.gain_on_magnitude = Some(value.parse().with_context(ctx)?),
                "unit_gain" => o.unit_gain = Some(value.parse().with_context(ctx)?),
                other => bail!("line {}: unknown key '{other}'", n + 1),
            }
        }
        Ok(o)
    }

    fn from_config_file(path: Option<&Path>) -> anyhow::Result<Overrides> {
        match path {
            None => Ok(Overrides::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                Self::parse_config(&text).with_context(|| format!("config file {}", p.display()))
            }
        }
    }

    fn from_common(c: &CommonFlags) -> Overrides {
        Overrides {
            iters_encode: c.iters_encode,
            epsilon: c.epsilon,
            seed: c.seed,
            ..Default::default()
        }
    }
}

fn parse_flag<T>(flag: &str, value: &Option<String>) -> anyhow::Result<Option<T>>
where
    T: std::str::FromStr<Err = crate::Error>,
{
    value
        .as_deref()
        .map(|v| v.parse::<T>().with_context(|| format!("--{flag}")))
        .transpose()
}

/// Seed from the environment when neither flags nor config set one.
fn env_seed() -> anyhow::Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            Ok(Some(v.trim().parse().with_context(|| {
                format!("{SEED_ENV}='{v}' is not an integer")
            })?))
        }
        Err(_) => Ok(None),
    }
}

/// Defaults for `method`, then environment seed, then config file, then flags.
pub fn resolve_config(
    method: Method,
    file: &Overrides,
    flags: &Overrides,
) -> anyhow::Result<EnhanceConfig> {
    let mut cfg = EnhanceConfig::for_method(method);
    if let Some(seed) = env_seed()? {
        cfg.seed = seed;
    }
    file.clone().merge(flags.clone()).apply(&mut cfg);
    cfg.validate().context("invalid configuration")?;
    Ok(cfg)
}

fn is_wav(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

/// Expands directories to their WAV files in lexicographic filename order.
pub fn expand_inputs(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()
                .with_context(|| format!("listing {}", p.display()))?;
            files.retain(|f| f.is_file() && is_wav(f));
            files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
            if files.is_empty() {
                bail!("directory {} contains no .wav files", p.display());
            }
            out.extend(files);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            bail!("{} does not exist", p.display());
        }
    }
    Ok(out)
}

fn read_signal(path: &Path) -> anyhow::Result<Signal> {
    read_wav(path)
        .map(|(s, _)| s)
        .with_context(|| format!("reading {}", path.display()))
}

fn read_all(paths: &[PathBuf]) -> anyhow::Result<Vec<Signal>> {
    paths.par_iter().map(|p| read_signal(p)).collect()
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("starting worker pool")?;
    pool.install(|| {
        let mut stdout = String::new();
        match &cli.command {
            Command::Train(a) => cmd_train(a, &mut stdout),
            Command::Enhance(a) => cmd_enhance(a, &mut stdout),
            Command::Mix(a) => cmd_mix(a, &mut stdout),
            Command::Eval(a) => cmd_eval(a, &mut stdout),
            Command::Roundtrip(a) => cmd_roundtrip(a, &mut stdout),
        }?;
        print!("{stdout}");
        Ok(())
    })
}

pub fn cmd_train(a: &TrainArgs, out: &mut String) -> anyhow::Result<()> {
    let file = Overrides::from_config_file(a.common.config.as_deref())?;
    let m = &a.model;
    let flags = Overrides {
        method: a.method.map(Method::from),
        frame_size: m.frame_size,
        frame_shift: m.frame_shift,
        level: m.level,
        filter_name: m.filter.clone(),
        window: parse_flag("window", &m.window)?,
        feature_kind: parse_flag("feature-kind", &m.feature_kind)?,
        speech_rank: m.speech_rank,
        noise_rank: m.noise_rank,
        iters_train: m.iters_train,
        ..Overrides::from_common(&a.common)
    };
    let method = flags
        .method
        .or(file.method)
        .ok_or_else(|| anyhow!("--method is required (or set `method` in the config file)"))?;
    let cfg = resolve_config(method, &file, &flags)?;

    let clean_files = expand_inputs(&a.clean).context("--clean")?;
    let noise_files = expand_inputs(&a.noise).context("--noise")?;
    let clean = read_all(&clean_files)?;
    let noise = read_all(&noise_files)?;

    let model: Model = match method {
        Method::StftNmf => train_stft_model(&clean, &noise, &cfg)
            .context("training stft-nmf model")?
            .into(),
        Method::DwptNmf => {
            let filters = WaveletFilters::from_name(&cfg.filter_name).context("--filter")?;
            train_dwpt_model(&clean, &noise, &filters, &cfg)
                .context("training dwpt-nmf model")?
                .into()
        }
    };
    save_model(&model, &a.out).with_context(|| format!("writing model {}", a.out.display()))?;
    writeln!(
        out,
        "trained {method} model from {} clean and {} noise files -> {}",
        clean_files.len(),
        noise_files.len(),
        a.out.display()
    )?;
    Ok(())
}

fn enhance_one(
    model: &Model,
    cfg: &EnhanceConfig,
    filters: Option<&WaveletFilters>,
    noisy: &Signal,
) -> anyhow::Result<Signal> {
    Ok(match model {
        Model::Stft(m) => {
            let spec = enhance_spectrogram(noisy, m, cfg)?;
            let samples = istft(&spec, noisy.len())?;
            Signal::new(samples, noisy.sample_rate())?
        }
        Model::Dwpt(m) => enhance_dwpt(
            noisy,
            m,
            filters.expect("filters loaded for dwpt models"),
            cfg,
        )?,
    })
}

pub fn cmd_enhance(a: &EnhanceArgs, out: &mut String) -> anyhow::Result<()> {
    let model = load_model(&a.model).with_context(|| format!("--model {}", a.model.display()))?;
    let file = Overrides::from_config_file(a.common.config.as_deref())?;
    let mut flags = Overrides {
        gain_on_magnitude: parse_flag("gain-on-magnitude", &a.gain_on_magnitude)?,
        ..Overrides::from_common(&a.common)
    };
    if a.no_normalize {
        flags.normalize = Some(false);
    }
    if a.unit_gain {
        flags.unit_gain = Some(true);
    }
    let (method, filters) = match &model {
        Model::Stft(_) => (Method::StftNmf, None),
        Model::Dwpt(m) => (
            Method::DwptNmf,
            Some(WaveletFilters::from_name(&m.filter_name).context("model filter family")?),
        ),
    };
    let mut cfg = resolve_config(method, &file, &flags)?;
    // Shape parameters come from the model.
    match &model {
        Model::Stft(m) => {
            cfg.frame_size = m.frame_spec.frame_size();
            cfg.frame_shift = m.frame_spec.frame_shift();
            cfg.window = m.window;
            if file.feature_kind.is_none() {
                cfg.feature_kind = m.feature_kind;
            }
        }
        Model::Dwpt(m) => {
            cfg.frame_size = m.frame_spec.frame_size();
            cfg.frame_shift = m.frame_spec.frame_shift();
            cfg.level = m.level;
            cfg.filter_name = m.filter_name.clone();
        }
    }

    let jobs: Vec<(PathBuf, PathBuf)> = if a.input.is_dir() {
        let inputs = expand_inputs(std::slice::from_ref(&a.input)).context("--in")?;
        std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
        inputs
            .into_iter()
            .map(|p| {
                let name = p.file_name().expect("listed files have names").to_owned();
                (p, a.out.join(name))
            })
            .collect()
    } else {
        vec![(a.input.clone(), a.out.clone())]
    };
    if a.dump_spectrogram.is_some() && jobs.len() != 1 {
        bail!("--dump-spectrogram needs a single --in file");
    }

    let results: Vec<Signal> = jobs
        .par_iter()
        .map(|(src, dst)| {
            let noisy = read_signal(src)?;
            let enhanced = enhance_one(&model, &cfg, filters.as_ref(), &noisy)
                .with_context(|| format!("enhancing {}", src.display()))?;
            write_wav(dst, &enhanced).with_context(|| format!("writing {}", dst.display()))?;
            Ok(enhanced)
        })
        .collect::<anyhow::Result<_>>()?;

    if let (Some(path), Some(sig)) = (&a.dump_spectrogram, results.first()) {
        let csv = spectrogram_csv(sig)?;
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    for (src, dst) in &jobs {
        writeln!(out, "{} -> {}", src.display(), dst.display())?;
    }
    Ok(())
}

/// One row per frame of the 256/80 Hamming magnitude spectrogram.
pub fn spectrogram_csv(sig: &Signal) -> anyhow::Result<String> {
    let spec = FrameSpec::new(256, 80)?;
    let s = stft(sig.samples(), spec, Window::Hamming)?;
    let mut csv = String::from("frame");
    for b in 0..s.bins() {
        write!(csv, ",bin{b}")?;
    }
    csv.push('\n');
    for k in 0..s.frames() {
        write!(csv, "{k}")?;
        for b in 0..s.bins() {
            write!(csv, ",{}", s.magnitude()[[b, k]])?;
        }
        csv.push('\n');
    }
    Ok(csv)
}

pub fn cmd_mix(a: &MixArgs, out: &mut String) -> anyhow::Result<()> {
    let clean = read_signal(&a.clean).context("--clean")?;
    let noise = read_signal(&a.noise).context("--noise")?;
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let mixed = mix_at_snr(
        &clean,
        &noise,
        &MixSpec {
            snr_db: a.snr,
            seed,
        },
    )
    .context("mixing")?;
    write_wav(&a.out, &mixed).with_context(|| format!("writing {}", a.out.display()))?;
    writeln!(out, "snr_db={}", measured_snr_db(&clean, &mixed)?)?;
    Ok(())
}

fn trim_pair(reference: Signal, test: Signal, name: &str) -> anyhow::Result<(Signal, Signal)> {
    if reference.len() == test.len() {
        return Ok((reference, test));
    }
    log::warn!(
        "{name}: reference has {} samples, test {}; comparing the common prefix",
        reference.len(),
        test.len()
    );
    let n = reference.len().min(test.len());
    let rate = (reference.sample_rate(), test.sample_rate());
    let mut r = reference.into_samples();
    let mut t = test.into_samples();
    r.truncate(n);
    t.truncate(n);
    Ok((Signal::new(r, rate.0)?, Signal::new(t, rate.1)?))
}

pub fn cmd_eval(a: &EvalArgs, out: &mut String) -> anyhow::Result<()> {
    let pairs: Vec<(String, PathBuf, PathBuf)> = if a.test.is_dir() {
        if !a.reference.is_dir() {
            bail!("--reference must be a directory when --test is a directory");
        }
        expand_inputs(std::slice::from_ref(&a.test))
            .context("--test")?
            .into_iter()
            .map(|t| {
                let name = t
                    .file_name()
                    .expect("listed files have names")
                    .to_string_lossy()
                    .into_owned();
                (name.clone(), a.reference.join(&name), t)
            })
            .collect()
    } else {
        let name = a
            .test
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        vec![(name, a.reference.clone(), a.test.clone())]
    };

    let reports: Vec<MetricReport> = pairs
        .par_iter()
        .map(|(name, r, t)| {
            let (r, t) = trim_pair(
                read_signal(r).context("--reference")?,
                read_signal(t).context("--test")?,
                name,
            )?;
            MetricReport::evaluate(&r, &t).with_context(|| format!("evaluating {name}"))
        })
        .collect::<anyhow::Result<_>>()?;

    for ((name, _, _), rep) in pairs.iter().zip(&reports) {
        if pairs.len() > 1 {
            writeln!(out, "file={name}")?;
        }
        out.push_str(&rep.to_key_value());
    }
    writeln!(
        out,
        "# sdi = residual/reference energy ratio; HASQI and HASPI are not computed"
    )?;

    if let Some(path) = &a.csv {
        let mut csv = String::from(MetricReport::CSV_HEADER);
        csv.push('\n');
        for ((name, _, _), rep) in pairs.iter().zip(&reports) {
            csv.push_str(&rep.csv_row(name));
            csv.push('\n');
        }
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

pub fn cmd_roundtrip(a: &RoundtripArgs, out: &mut String) -> anyhow::Result<()> {
    let x = read_signal(&a.input).context("--in")?;
    let y = match a.transform {
        TransformArg::Dwpt => {
            let level = a.level.unwrap_or(crate::config::DWPT_LEVEL);
            let filters = WaveletFilters::from_name(
                a.filter.as_deref().unwrap_or(crate::wpt::DEFAULT_FAMILY),
            )
            .context("--filter")?;
            writeln!(
                out,
                "transform=dwpt\nlevel={level}\nfilter={}",
                filters.name()
            )?;
            idwpt(&dwpt(&x, level, &filters).context("dwpt")?, &filters)?
        }
        TransformArg::Stft => {
            let spec = FrameSpec::new(
                a.frame.unwrap_or(crate::config::STFT_FRAME_SIZE),
                a.shift.unwrap_or(crate::config::STFT_FRAME_SHIFT),
            )
            .context("--frame/--shift")?;
            let window: Window = parse_flag("window", &a.window)?.unwrap_or(Window::Hamming);
            writeln!(
                out,
                "transform=stft\nframe={}\nshift={}\nwindow={}",
                spec.frame_size(),
                spec.frame_shift(),
                window.name()
            )?;
            istft(&stft(x.samples(), spec, window).context("stft")?, x.len())?
        }
    };
    let y = Signal::new(y, x.sample_rate())?;
    let max_abs = x
        .samples()
        .iter()
        .zip(y.samples())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    writeln!(
        out,
        "mse={}\nmax_abs_error={max_abs}",
        metrics::mse(&x, &y)?
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let o = Overrides::parse_config("# comment\nmethod = dwpt-nmf\nframe-size = 500\nno_normalize = true\nseed=7 # trailing\n").unwrap();
        assert_eq!(o.method, Some(Method::DwptNmf));
        assert_eq!(o.frame_size, Some(500));
        assert_eq!(o.normalize, Some(false));
        assert_eq!(o.seed, Some(7));
        assert!(Overrides::parse_config("bogus = 1").is_err());
        assert!(Overrides::parse_config("frame_size = x").is_err());
        assert!(Overrides::parse_config("frame_size").is_err());
    }

    #[test]
    fn flags_beat_file() {
        let file = Overrides {
            frame_size: Some(500),
            speech_rank: Some(3),
            ..Default::default()
        };
        let flags = Overrides {
            frame_size: Some(600),
            ..Default::default()
        };
        let cfg = resolve_config(Method::DwptNmf, &file, &flags).unwrap();
        assert_eq!(
            (cfg.frame_size, cfg.speech_rank, cfg.frame_shift),
            (600, 3, 20)
        );
    }

    #[test]
    fn help_lists_defaults() {
        use clap::CommandFactory;
        let mut cmd = Cli::command();
        let train = cmd
            .find_subcommand_mut("train")
            .unwrap()
            .render_long_help()
            .to_string();
        for needle in [
            "256 for stft-nmf",
            "1000 for dwpt-nmf",
            "80 for stft-nmf",
            "20 for dwpt-nmf",
            "[default: 3]",
            "[default: 40]",
            "[default: 160]",
        ] {
            assert!(train.contains(needle), "missing {needle}");
        }
        let rt = cmd
            .find_subcommand_mut("roundtrip")
            .unwrap()
            .render_long_help()
            .to_string();
        assert!(rt.contains("[default: 256]") && rt.contains("[default: 80]"));
    }
}
