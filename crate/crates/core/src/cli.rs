//! Command-line front end: `render`, `validate1d`, `compare` and `stats`.
//!
//! Every output file is written to a temporary sibling and renamed into
//! place only after all outputs of the command have been produced.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lt::image::{mse, Image};
use crate::lt::mlt::{mlt_render, with_threads, Algorithm, RenderOptions, DEFAULT_BOOTSTRAP, DEFAULT_K_MAX, DEFAULT_REPLICAS};
use crate::lt::pt::path_trace_reference;
use crate::lt::scene::Scene;
use crate::oned::{run_variant, write_csv, Variant};
use crate::pss::{MoveReport, PerturbationMix};

/// Environment variable selecting the log level.
pub const LOG_ENV: &str = "RJMLT_LOG";

#[derive(Parser, Debug)]
#[command(name = "rjmlt", version, about = "Reversible jump Metropolis light transport")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Integrator {
    Mmlt,
    Rjmlt,
    Pt,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Render a scene to PFM (plus a PPM preview next to it).
    Render(RenderArgs),
    /// Run the one-dimensional validation chain and write its histograms.
    Validate1d(Validate1dArgs),
    /// Print the mean squared error between two PFM images.
    Compare {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        img: PathBuf,
    },
    /// Summarize a stats.json file.
    Stats {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(clap::Args, Debug, Clone)]
pub struct RenderArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, value_enum, default_value = "rjmlt")]
    pub integrator: Integrator,
    /// Total mutations over all path lengths (Metropolis integrators).
    #[arg(long, default_value_t = 1_000_000)]
    pub mutations: u64,
    /// Samples per pixel (path tracer).
    #[arg(long, default_value_t = 64)]
    pub spp: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long = "k-max", default_value_t = DEFAULT_K_MAX)]
    pub k_max: usize,
    /// `large,small,jump` move probabilities.
    #[arg(long)]
    pub mix: Option<String>,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
    pub bootstrap: usize,
    /// Independent chains per path length.
    #[arg(long, default_value_t = DEFAULT_REPLICAS)]
    pub replicas: usize,
    /// Write every strategy jump as a JSON line to this file.
    #[arg(long = "trace-jumps")]
    pub trace_jumps: Option<PathBuf>,
    /// Store wall-clock time in the stats (makes them non-reproducible).
    #[arg(long = "record-timing")]
    pub record_timing: bool,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Validate1dArgs {
    #[arg(long, value_parser = parse_variant)]
    pub variant: Variant,
    #[arg(long, default_value_t = 10_000_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Accepted for symmetry with `render`; the chain is sequential.
    #[arg(long)]
    pub threads: Option<usize>,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// `large,small,jump` into a validated mix.
pub fn parse_mix(s: &str) -> Result<PerturbationMix> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("mix `{s}` is not three numbers")))?;
    match parts[..] {
        [l, m, j] => PerturbationMix::new(l, m, j),
        _ => Err(Error::InvalidArgument(format!("mix `{s}` needs exactly three values"))),
    }
}

/// Per-length section of the stats file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub b: f64,
    pub mutations: u64,
    #[serde(flatten)]
    pub moves: BTreeMap<String, MoveReport>,
}

/// Contents of `stats.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub algorithm: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spp: Option<usize>,
    pub k_max: usize,
    pub per_length: BTreeMap<usize, LengthStats>,
    pub brightness_b: f64,
    pub wall_seconds: Option<f64>,
}

/// Result of a render before it is written anywhere.
#[derive(Clone, Debug)]
pub struct RenderOutput {
    pub image: Image,
    pub stats: StatsFile,
    /// JSON lines of the jump trace, when requested.
    pub jump_trace: Option<String>,
}

/// Loads the scene and renders it on a pool of `args.threads` workers.
pub fn render(args: &RenderArgs) -> Result<RenderOutput> {
    let scene = Scene::load(&args.scene)?;
    render_scene(&scene, args)
}

pub fn render_scene(scene: &Scene, args: &RenderArgs) -> Result<RenderOutput> {
    let start = Instant::now();
    let mut output = with_threads(args.threads, || -> Result<RenderOutput> {
        match args.integrator {
            Integrator::Pt => {
                if args.trace_jumps.is_some() {
                    return Err(Error::InvalidArgument("the path tracer makes no jumps to trace".into()));
                }
                let image = path_trace_reference(scene, args.spp, args.seed, args.k_max)?;
                let brightness_b = image.pixels.iter().map(|p| p.luminance()).sum();
                Ok(RenderOutput {
                    image,
                    stats: StatsFile {
                        algorithm: "pt".into(),
                        seed: args.seed,
                        mutations: None,
                        spp: Some(args.spp),
                        k_max: args.k_max,
                        per_length: BTreeMap::new(),
                        brightness_b,
                        wall_seconds: None,
                    },
                    jump_trace: None,
                })
            }
            Integrator::Mmlt | Integrator::Rjmlt => {
                let algorithm = if args.integrator == Integrator::Mmlt { Algorithm::Mmlt } else { Algorithm::Rjmlt };
                let mut options = RenderOptions::new(algorithm, args.mutations, args.seed);
                if let Some(m) = &args.mix {
                    options.mix = parse_mix(m)?;
                }
                options.k_max = args.k_max;
                options.bootstrap = args.bootstrap;
                options.replicas = args.replicas;
                options.trace_jumps = args.trace_jumps.is_some();
                let result = mlt_render(scene, &options)?;
                let per_length = result
                    .lengths
                    .iter()
                    .map(|l| {
                        (
                            l.k,
                            LengthStats {
                                b: l.b,
                                mutations: l.mutations,
                                moves: l.stats.report(),
                            },
                        )
                    })
                    .collect();
                let jump_trace = if options.trace_jumps {
                    let mut s = String::new();
                    for j in &result.jumps {
                        s.push_str(&serde_json::to_string(j)?);
                        s.push('\n');
                    }
                    Some(s)
                } else {
                    None
                };
                Ok(RenderOutput {
                    image: result.image,
                    stats: StatsFile {
                        algorithm: algorithm.name().into(),
                        seed: args.seed,
                        mutations: Some(args.mutations),
                        spp: None,
                        k_max: args.k_max,
                        per_length,
                        brightness_b: result.brightness,
                        wall_seconds: None,
                    },
                    jump_trace,
                })
            }
        }
    })??;
    if args.record_timing {
        output.stats.wall_seconds = Some(start.elapsed().as_secs_f64());
    }
    Ok(output)
}

/// Files staged next to their destinations and renamed together.
#[derive(Default)]
struct Staged {
    files: Vec<(tempfile::NamedTempFile, PathBuf)>,
}

impl Staged {
    fn add(&mut self, dest: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let dir = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        {
            let mut w = std::io::BufWriter::new(tmp.as_file_mut());
            write(&mut w)?;
            w.flush()?;
        }
        self.files.push((tmp, dest.to_path_buf()));
        Ok(())
    }

    fn commit(self) -> Result<()> {
        for (tmp, dest) in self.files {
            tmp.persist(&dest).map_err(|e| Error::Io(e.error))?;
        }
        Ok(())
    }
}

fn ppm_path(out: &Path) -> PathBuf {
    out.with_extension("ppm")
}

fn stats_json(stats: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(stats)?;
    s.push('\n');
    Ok(s)
}

fn run_render(args: &RenderArgs) -> Result<()> {
    let out = render(args)?;
    let mut staged = Staged::default();
    staged.add(&args.out, |w| out.image.write_pfm(w))?;
    let ppm = ppm_path(&args.out);
    if ppm != args.out {
        staged.add(&ppm, |w| out.image.write_ppm(w))?;
    }
    if let Some(path) = &args.stats {
        let text = stats_json(&out.stats)?;
        staged.add(path, |w| Ok(w.write_all(text.as_bytes())?))?;
    }
    if let (Some(path), Some(trace)) = (&args.trace_jumps, &out.jump_trace) {
        staged.add(path, |w| Ok(w.write_all(trace.as_bytes())?))?;
    }
    staged.commit()?;
    log::info!("wrote {}", args.out.display());
    Ok(())
}

/// Stats of a 1D run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneDStatsFile {
    pub variant: String,
    pub seed: u64,
    pub steps: u64,
    pub bins: usize,
    pub design_effect: f64,
    pub moves: BTreeMap<String, MoveReport>,
}

fn run_validate1d(args: &Validate1dArgs) -> Result<()> {
    let run = with_threads(args.threads, || run_variant(args.variant, args.steps, args.seed, args.bins))??;
    let mut staged = Staged::default();
    staged.add(&args.out, |w| write_csv(&run, w))?;
    if let Some(path) = &args.stats {
        let text = stats_json(&OneDStatsFile {
            variant: args.variant.name().into(),
            seed: args.seed,
            steps: args.steps,
            bins: args.bins,
            design_effect: run.design_effect,
            moves: run.stats.report(),
        })?;
        staged.add(path, |w| Ok(w.write_all(text.as_bytes())?))?;
    }
    staged.commit()
}

fn read_pfm(path: &Path) -> Result<Image> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Image::read_pfm(file)
}

/// One line per path length with move acceptance.
pub fn summarize(stats: &StatsFile) -> String {
    let mut s = format!(
        "algorithm={} seed={} brightness_b={}\n",
        stats.algorithm, stats.seed, stats.brightness_b
    );
    for (k, l) in &stats.per_length {
        s.push_str(&format!("k={k} b={:.6} mutations={}", l.b, l.mutations));
        for (name, m) in &l.moves {
            if m.proposed > 0 {
                s.push_str(&format!(" {name}={}/{} r={:.4}", m.accepted, m.proposed, m.mean_r));
                if let Some(f) = m.verified_fail {
                    s.push_str(&format!(" verified_fail={f}"));
                }
            }
        }
        s.push('\n');
    }
    s
}

/// Executes a parsed command, writing human-readable output to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Render(args) => run_render(args),
        Command::Validate1d(args) => run_validate1d(args),
        Command::Compare { reference, img } => {
            let value = mse(&read_pfm(reference)?, &read_pfm(img)?)?;
            writeln!(stdout, "mse={value}")?;
            Ok(())
        }
        Command::Stats { input } => {
            let stats: StatsFile = serde_json::from_str(&std::fs::read_to_string(input)?)?;
            stdout.write_all(summarize(&stats).as_bytes())?;
            Ok(())
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "error");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `argv`, runs the command and returns the process exit code:
/// 0 on success, 1 on runtime failure, 2 on usage errors.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.render().to_string();
            eprintln!("{}", text.lines().next().unwrap_or("error: invalid arguments"));
            return 2;
        }
    };
    match execute(&cli, &mut std::io::stdout()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
