//! Multiplexed MLT with optional reversible strategy jumps.
//!
//! Every path length `k` gets its own chains. A bootstrap estimates the
//! normalization `b_k = ∫ f` per length; mutation budgets are split in
//! proportion to `b_k`, and each chain splats `f/lum(f)` which is scaled by
//! `b_k / N_k` at the end.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lt::bdpt::{BdptFamily, Layout};
use crate::lt::image::Image;
use crate::lt::path::LightPath;
use crate::pss::{run_chain_from, Accumulator, ChainConfig, ChainModel, ChainStats, PerturbationMix, SmallStepKernel};
use crate::rjump::{JumpChain, JumpOptions, JumpRecord, TechniqueState};
use crate::rng::SampleStream;

pub const DEFAULT_K_MAX: usize = 10;
pub const DEFAULT_BOOTSTRAP: usize = 10_000;
/// Independent chains per path length.
pub const DEFAULT_REPLICAS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Technique chosen by the first primary-sample dimension.
    Mmlt,
    /// Explicit technique index changed by reversible jumps.
    Rjmlt,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Mmlt => "mmlt",
            Algorithm::Rjmlt => "rjmlt",
        }
    }

    pub fn default_mix(&self) -> PerturbationMix {
        match self {
            Algorithm::Mmlt => PerturbationMix::rjmlt_default().without_jumps(),
            Algorithm::Rjmlt => PerturbationMix::rjmlt_default(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mmlt" => Ok(Algorithm::Mmlt),
            "rjmlt" => Ok(Algorithm::Rjmlt),
            _ => Err(Error::InvalidArgument(format!("unknown algorithm `{s}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RenderOptions {
    pub algorithm: Algorithm,
    pub mutations: u64,
    pub mix: PerturbationMix,
    pub kernel: SmallStepKernel,
    pub seed: u64,
    pub k_max: usize,
    pub bootstrap: usize,
    pub replicas: usize,
    pub trace_jumps: bool,
}

impl RenderOptions {
    pub fn new(algorithm: Algorithm, mutations: u64, seed: u64) -> Self {
        Self {
            algorithm,
            mutations,
            mix: algorithm.default_mix(),
            kernel: SmallStepKernel::default(),
            seed,
            k_max: DEFAULT_K_MAX,
            bootstrap: DEFAULT_BOOTSTRAP,
            replicas: DEFAULT_REPLICAS,
            trace_jumps: false,
        }
    }
}

/// Jump ledger entry tagged with its chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracedJump {
    pub k: usize,
    pub replica: usize,
    #[serde(flatten)]
    pub record: JumpRecord,
}

#[derive(Clone, Debug)]
pub struct LengthResult {
    pub k: usize,
    /// Normalization estimate after adding the large-step samples.
    pub b: f64,
    /// Bootstrap-only estimate that set the budget.
    pub b_bootstrap: f64,
    pub mutations: u64,
    pub stats: ChainStats,
}

#[derive(Clone, Debug)]
pub struct RenderResult {
    pub image: Image,
    pub lengths: Vec<LengthResult>,
    /// `Σ_k b_k`.
    pub brightness: f64,
    pub jumps: Vec<TracedJump>,
}

impl RenderResult {
    pub fn stats_by_length(&self) -> BTreeMap<usize, &ChainStats> {
        self.lengths.iter().map(|l| (l.k, &l.stats)).collect()
    }
}

struct ImageAccumulator {
    pixels: Image,
    jumps: Option<Vec<JumpRecord>>,
}

impl Accumulator<TechniqueState<LightPath>> for ImageAccumulator {
    fn splat(&mut self, state: &TechniqueState<LightPath>, weight: f64) {
        if let Some(path) = &state.path.path {
            let lum = path.contribution.luminance();
            if lum > 0.0 {
                let p = &mut self.pixels.pixels[path.pixel];
                *p += path.contribution * (weight / lum);
            }
        }
    }

    fn record_jump(&mut self, record: &JumpRecord) {
        if let Some(j) = self.jumps.as_mut() {
            j.push(record.clone());
        }
    }
}

struct LengthBootstrap {
    b: f64,
    starts: Vec<TechniqueState<LightPath>>,
    sum: f64,
    samples: usize,
}

/// Draws `samples` independent states and resamples `replicas` start states
/// proportionally to the target (one weighted reservoir per replica).
fn bootstrap_length(
    family: &BdptFamily,
    samples: usize,
    replicas: usize,
    rng: &mut SampleStream,
) -> LengthBootstrap {
    let mut sum = 0.0;
    let mut starts: Vec<Option<TechniqueState<LightPath>>> = vec![None; replicas];
    let model = JumpChain { family, jumps: None };
    for _ in 0..samples {
        let s = model.random_state(rng);
        let c = model.target(&s);
        let picks: Vec<f64> = (0..replicas).map(|_| rng.uniform()).collect();
        if c > 0.0 && c.is_finite() {
            sum += c;
            for (slot, pick) in starts.iter_mut().zip(picks) {
                if pick * sum < c {
                    *slot = Some(s.clone());
                }
            }
        }
    }
    let techniques = family.layout.techniques() as f64;
    LengthBootstrap {
        b: techniques * sum / samples as f64,
        starts: starts.into_iter().flatten().collect(),
        sum,
        samples,
    }
}

/// Splits `total` in proportion to `weights` (largest remainder, ties to the
/// lower index).
pub fn allocate(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if !(sum > 0.0) {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<u64> = exact.iter().map(|e| e.floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(total.saturating_sub(assigned) as usize) {
        out[i] += 1;
    }
    out
}

/// Renders `scene` with per-length chains, parallel over chains on the
/// current rayon pool. The result depends only on the options.
pub fn mlt_render(scene: &crate::lt::scene::Scene, options: &RenderOptions) -> Result<RenderResult> {
    if options.k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    if options.replicas == 0 {
        return Err(Error::InvalidArgument("replicas must be at least 1".into()));
    }
    if options.bootstrap == 0 {
        return Err(Error::InvalidArgument("bootstrap needs at least one sample".into()));
    }
    if options.mutations < options.bootstrap as u64 {
        return Err(Error::InvalidArgument(format!(
            "{} mutations is below the bootstrap size {}",
            options.mutations, options.bootstrap
        )));
    }
    let jumps = match options.algorithm {
        Algorithm::Mmlt => {
            if options.mix.p_jump > 0.0 {
                return Err(Error::InvalidArgument("mmlt does not support strategy jumps".into()));
            }
            None
        }
        Algorithm::Rjmlt => Some(JumpOptions::default()),
    };
    let selector = options.algorithm == Algorithm::Mmlt;
    let families: Vec<BdptFamily> = (1..=options.k_max)
        .map(|k| Layout::new(k, selector).map(|l| BdptFamily::new(scene, l)))
        .collect::<Result<_>>()?;

    let boots: Vec<LengthBootstrap> = families
        .par_iter()
        .map(|f| {
            let mut rng = SampleStream::named(options.seed, &format!("bootstrap-{}", f.layout.k));
            bootstrap_length(f, options.bootstrap, options.replicas, &mut rng)
        })
        .collect();
    let weights: Vec<f64> = boots.iter().map(|b| b.b).collect();
    if !(weights.iter().sum::<f64>() > 0.0) {
        return Err(Error::Initialization(format!(
            "all {} bootstrap samples of every path length have zero contribution",
            options.bootstrap
        )));
    }
    let budgets = allocate(options.mutations, &weights);

    struct Task {
        length: usize,
        replica: usize,
        steps: u64,
    }
    let mut tasks = Vec::new();
    for (length, boot) in boots.iter().enumerate() {
        if boot.starts.is_empty() || budgets[length] == 0 {
            continue;
        }
        let per = allocate(budgets[length], &vec![1.0; options.replicas]);
        for (replica, &steps) in per.iter().enumerate() {
            if steps > 0 {
                tasks.push(Task { length, replica, steps });
            }
        }
    }

    let cam = &scene.camera;
    let outputs: Vec<Result<(ChainStats, ImageAccumulator)>> = tasks
        .par_iter()
        .map(|t| {
            let family = &families[t.length];
            let k = family.layout.k;
            let model = JumpChain { family, jumps };
            let config = ChainConfig {
                mix: options.mix,
                kernel: options.kernel,
                steps: t.steps,
                bootstrap_samples: options.bootstrap,
            };
            let mut acc = ImageAccumulator {
                pixels: Image::new(cam.width, cam.height),
                jumps: options.trace_jumps.then(Vec::new),
            };
            let mut rng = SampleStream::named(options.seed, &format!("chain-{k}-{}", t.replica));
            let start = boots[t.length].starts[t.replica].clone();
            let stats = run_chain_from(&model, &config, start, &mut rng, &mut acc)?;
            Ok((stats, acc))
        })
        .collect();

    let mut image = Image::new(cam.width, cam.height);
    let mut lengths = Vec::new();
    let mut traced = Vec::new();
    let mut outputs = outputs.into_iter();
    let mut task_iter = tasks.iter().peekable();
    for (length, boot) in boots.iter().enumerate() {
        let k = length + 1;
        let mut stats = ChainStats::default();
        let mut partial = Image::new(cam.width, cam.height);
        while task_iter.peek().is_some_and(|t| t.length == length) {
            let t = task_iter.next().expect("peeked");
            let (s, acc) = outputs.next().expect("one output per task")?;
            stats.merge(&s);
            partial.add(&acc.pixels)?;
            if let Some(records) = acc.jumps {
                traced.extend(records.into_iter().map(|record| TracedJump {
                    k,
                    replica: t.replica,
                    record,
                }));
            }
        }
        let n = budgets[length];
        let techniques = families[length].layout.techniques() as f64;
        let large = stats.large.proposed as f64;
        let b = if boot.starts.is_empty() {
            0.0
        } else {
            techniques * (boot.sum + stats.large_target_sum) / (boot.samples as f64 + large)
        };
        if n > 0 && b > 0.0 {
            partial.scale(b / n as f64);
            image.add(&partial)?;
        }
        lengths.push(LengthResult {
            k,
            b,
            b_bootstrap: boot.b,
            mutations: if boot.starts.is_empty() { 0 } else { n },
            stats,
        });
    }
    let brightness = lengths.iter().map(|l| l.b).sum();
    Ok(RenderResult {
        image,
        lengths,
        brightness,
        jumps: traced,
    })
}

/// Runs `f` on a dedicated pool with `threads` workers (all cores when
/// `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::InvalidArgument("thread count must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}
