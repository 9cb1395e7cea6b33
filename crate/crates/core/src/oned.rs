//! One-dimensional validation of strategy jumps.
//!
//! Three techniques sample `x ∈ [0,1)` from a three-dimensional primary
//! sample space: `u₁` selects the technique in equal thirds, `u₂` samples
//! the position and `u₃` selects a sub-technique of the mixture (unused by
//! the other two). The chain targets `C(u) = f(x)/Σ_s p_s(x)`, whose
//! marginal in `x` is proportional to `f` and whose technique usage at `x`
//! equals the balance-heuristic weights.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::invmap::{
    interval_inverse, inversion_block_inverse, mixture_forward, mixture_inverse,
    mixture_selection_distribution, AuxVector, Distribution1D, InversionBlock, MixtureSpec,
};
use crate::pss::{
    large_step, run_chain, Accumulator, ChainConfig, ChainStats, PerturbationMix, RandomVector,
    SmallStepKernel,
};
use crate::rjump::{
    Inversion, IntervalMode, JacobianMode, JumpChain, JumpOptions, PathRecord, TechniqueFamily,
    TechniqueState,
};
use crate::rng::SampleStream;
use crate::stats::{chi_square, design_effect, ChiSquare};

pub const TECHNIQUES: usize = 3;
pub const DIMS: usize = 3;
/// Normalization of the target, `1 + 1.8/(3π)`.
pub const TARGET_INTEGRAL: f64 = 1.0 + 1.8 / (3.0 * PI);
pub const MIXTURE_WEIGHTS: [f64; 2] = [0.6, 0.4];
/// Position of the fixed point inside every ambiguous interval for the
/// biased fixed-point variant.
pub const FIXED_POINT_GAMMA: f64 = 0.0;
/// Small/jump split of the jump variants (large steps are disabled).
pub const JUMP_PROBABILITY: f64 = 0.5;
/// Batches used for the effective-sample-size estimate.
pub const BATCHES: usize = 100;

/// Sinusoid target `1 + 0.9 sin(3πx)`.
pub fn target_1d(x: f64) -> f64 {
    1.0 + 0.9 * (3.0 * PI * x).sin()
}

fn target_antiderivative(x: f64) -> f64 {
    x - 0.9 * (3.0 * PI * x).cos() / (3.0 * PI)
}

/// `2(1−x)`.
#[derive(Clone, Copy, Debug)]
pub struct Triangular;

impl Distribution1D for Triangular {
    fn pdf(&self, x: f64) -> f64 {
        if (0.0..1.0).contains(&x) {
            2.0 * (1.0 - x)
        } else {
            0.0
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        1.0 - (1.0 - x) * (1.0 - x)
    }
    fn inverse_cdf(&self, u: f64) -> f64 {
        1.0 - (1.0 - u).sqrt()
    }
}

/// 1.5 on `[0, ½)`, 0.5 on `[½, 1)`.
#[derive(Clone, Copy, Debug)]
pub struct Step;

impl Distribution1D for Step {
    fn pdf(&self, x: f64) -> f64 {
        if (0.0..0.5).contains(&x) {
            1.5
        } else if (0.5..1.0).contains(&x) {
            0.5
        } else {
            0.0
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        if x < 0.5 {
            1.5 * x
        } else {
            0.75 + 0.5 * (x - 0.5)
        }
    }
    fn inverse_cdf(&self, u: f64) -> f64 {
        if u < 0.75 {
            u / 1.5
        } else {
            0.5 + (u - 0.75) / 0.5
        }
    }
}

/// `(π/2) sin(πx)`.
#[derive(Clone, Copy, Debug)]
pub struct Sine;

impl Distribution1D for Sine {
    fn pdf(&self, x: f64) -> f64 {
        if (0.0..1.0).contains(&x) {
            0.5 * PI * (PI * x).sin()
        } else {
            0.0
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        0.5 * (1.0 - (PI * x.clamp(0.0, 1.0)).cos())
    }
    fn inverse_cdf(&self, u: f64) -> f64 {
        (1.0 - 2.0 * u).acos() / PI
    }
}

/// `2x`.
#[derive(Clone, Copy, Debug)]
pub struct Linear;

impl Distribution1D for Linear {
    fn pdf(&self, x: f64) -> f64 {
        if (0.0..1.0).contains(&x) {
            2.0 * x
        } else {
            0.0
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        x * x
    }
    fn inverse_cdf(&self, u: f64) -> f64 {
        u.sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OneDTechnique {
    Triangular,
    Step,
    Mixture,
}

impl OneDTechnique {
    pub const ALL: [OneDTechnique; TECHNIQUES] =
        [OneDTechnique::Triangular, OneDTechnique::Step, OneDTechnique::Mixture];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Technique selected by the first dimension.
    pub fn select(u1: f64) -> Self {
        Self::ALL[((u1 * TECHNIQUES as f64) as usize).min(TECHNIQUES - 1)]
    }

    /// Selection interval on the first dimension.
    pub fn interval(self) -> (f64, f64) {
        let i = self.index() as f64;
        (i / TECHNIQUES as f64, (i + 1.0) / TECHNIQUES as f64)
    }

    pub fn pdf(self, x: f64) -> f64 {
        match self {
            OneDTechnique::Triangular => Triangular.pdf(x),
            OneDTechnique::Step => Step.pdf(x),
            OneDTechnique::Mixture => MIXTURE_WEIGHTS[0] * Sine.pdf(x) + MIXTURE_WEIGHTS[1] * Linear.pdf(x),
        }
    }
}

fn mixture_spec() -> &'static MixtureSpec {
    static SPEC: OnceLock<MixtureSpec> = OnceLock::new();
    SPEC.get_or_init(|| MixtureSpec::new(MIXTURE_WEIGHTS.to_vec(), 1).expect("static mixture weights"))
}

/// `T(s)` of mixture component `s` at `x`.
fn component_probability(s: usize, x: f64) -> f64 {
    let a = [MIXTURE_WEIGHTS[0] * Sine.pdf(x), MIXTURE_WEIGHTS[1] * Linear.pdf(x)];
    a[s] / (a[0] + a[1])
}

fn mixture_blocks() -> [InversionBlock<&'static dyn Distribution1D>; 2] {
    [InversionBlock(&Sine), InversionBlock(&Linear)]
}

/// Balance-heuristic weights of the three techniques at `x`.
pub fn mis_weights(x: f64) -> [f64; TECHNIQUES] {
    let p = OneDTechnique::ALL.map(|t| t.pdf(x));
    let total: f64 = p.iter().sum();
    p.map(|v| v / total)
}

/// Forward sample of one technique.
#[derive(Clone, Debug, PartialEq)]
pub struct OneDSample {
    pub x: f64,
    /// Density of the technique at `x` (the mixture density for the mixture).
    pub pdf: f64,
    /// Mixture component used, if any.
    pub sub: Option<usize>,
    /// `Π |J g⁻¹|` over the three dimensions.
    pub jac_inv_det: f64,
    /// Inversion selection probability `T(sub)` (one without a mixture).
    pub selection_prob: f64,
}

/// Samples `x` with technique `t` from `u = (u₁, u₂, u₃)`.
pub fn technique_sample_1d(t: OneDTechnique, u: &[f64]) -> Option<OneDSample> {
    let select = 1.0 / TECHNIQUES as f64;
    match t {
        OneDTechnique::Triangular | OneDTechnique::Step => {
            let dist: &dyn Distribution1D = if t == OneDTechnique::Triangular { &Triangular } else { &Step };
            let x = dist.inverse_cdf(u[1]);
            let p = dist.pdf(x);
            (p > 0.0).then_some(OneDSample {
                x,
                pdf: p,
                sub: None,
                jac_inv_det: select * p,
                selection_prob: 1.0,
            })
        }
        OneDTechnique::Mixture => {
            let spec = mixture_spec();
            let blocks = mixture_blocks();
            let m = mixture_forward(spec, &blocks, &u[1..3])?;
            let x = m.result.sample;
            Some(OneDSample {
                x,
                pdf: t.pdf(x),
                sub: Some(m.t),
                jac_inv_det: select * m.result.jac_inv_det,
                selection_prob: component_probability(m.t, x),
            })
        }
    }
}

/// Inverse of [`technique_sample_1d`] with explicit auxiliary variates
/// `γ = (γ₁, γ₃)` and, for the mixture, an explicit component.
pub fn technique_invert_with(
    t: OneDTechnique,
    x: f64,
    gamma: [f64; 2],
    sub: Option<usize>,
) -> Result<(RandomVector, f64, f64)> {
    let (a, b) = t.interval();
    let (u1, j1) = interval_inverse(a, b, gamma[0])?;
    match t {
        OneDTechnique::Triangular | OneDTechnique::Step => {
            let (u2, j2) = if t == OneDTechnique::Triangular {
                inversion_block_inverse(&Triangular, x)?
            } else {
                inversion_block_inverse(&Step, x)?
            };
            let (u3, j3) = interval_inverse(0.0, 1.0, gamma[1])?;
            Ok((RandomVector::from_clamped(vec![u1, u2, u3]), j1 * j2 * j3, 1.0))
        }
        OneDTechnique::Mixture => {
            let spec = mixture_spec();
            let blocks = mixture_blocks();
            let s = sub.ok_or_else(|| Error::InvalidArgument("mixture inverse needs a component".into()))?;
            let inv = crate::invmap::mixture_inverse_with(spec, &blocks, &x, s, gamma[1])?;
            Ok((
                RandomVector::from_clamped(vec![u1, inv.u[0], inv.u[1]]),
                j1 * inv.jac_inv_det,
                inv.selection_prob,
            ))
        }
    }
}

/// Probabilistic inverse: the mixture component is drawn from `T(t)`.
pub fn technique_invert_1d(
    t: OneDTechnique,
    x: f64,
    gamma: &AuxVector,
    rng: &mut SampleStream,
) -> Result<(RandomVector, f64)> {
    if gamma.0.len() != 2 {
        return Err(Error::DimensionMismatch(format!("expected 2 auxiliary variates, got {}", gamma.0.len())));
    }
    let sub = match t {
        OneDTechnique::Mixture => {
            let inv = mixture_inverse(mixture_spec(), &mixture_blocks(), &x, gamma.0[1], rng)?;
            Some(inv.t)
        }
        _ => None,
    };
    let (u, jac, _) = technique_invert_with(t, x, [gamma.0[0], gamma.0[1]], sub)?;
    Ok((u, jac))
}

/// The three techniques as a family for the chain driver.
#[derive(Clone, Copy, Debug, Default)]
pub struct OneDFamily;

impl TechniqueFamily for OneDFamily {
    type Path = f64;

    fn technique_count(&self) -> usize {
        TECHNIQUES
    }

    fn evaluate(&self, technique: usize, u: RandomVector) -> TechniqueState<f64> {
        let t = OneDTechnique::select(u[0]);
        debug_assert_eq!(t.index(), technique);
        match technique_sample_1d(t, u.as_slice()) {
            Some(s) => {
                let w = mis_weights(s.x);
                let total: f64 = OneDTechnique::ALL.iter().map(|t| t.pdf(s.x)).sum();
                debug_assert!(total > 0.0);
                TechniqueState {
                    technique: t.index(),
                    u,
                    target_value: target_1d(s.x) / total,
                    mis_weights: w.to_vec(),
                    path: PathRecord {
                        path: Some(s.x),
                        inverse_jacobian: s.jac_inv_det,
                        selection_prob: s.selection_prob,
                    },
                }
            }
            None => TechniqueState {
                technique: t.index(),
                u,
                target_value: 0.0,
                mis_weights: vec![0.0; TECHNIQUES],
                path: PathRecord::invalid(),
            },
        }
    }

    fn invert(&self, technique: usize, path: &f64, intervals: IntervalMode, rng: &mut SampleStream) -> Result<Inversion> {
        let t = OneDTechnique::ALL[technique];
        let gamma = [intervals.gamma(rng), intervals.gamma(rng)];
        let sub = match t {
            OneDTechnique::Mixture => {
                let selection = mixture_selection_distribution(mixture_spec(), &mixture_blocks(), path)?;
                Some(rng.discrete(&selection).ok_or_else(|| Error::NonInvertible("empty selection".into()))?)
            }
            _ => None,
        };
        let (u, jac_inv_det, selection_prob) = technique_invert_with(t, *path, gamma, sub)?;
        Ok(Inversion {
            u,
            jac_inv_det,
            selection_prob,
            aux: AuxVector(gamma.to_vec()),
        })
    }

    fn max_deviation(&self, a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }

    fn random_state(&self, rng: &mut SampleStream) -> TechniqueState<f64> {
        let u = large_step(rng, DIMS).expect("positive dimension");
        let t = OneDTechnique::select(u[0]).index();
        self.evaluate(t, u)
    }

    fn small_step(
        &self,
        current: &TechniqueState<f64>,
        kernel: &SmallStepKernel,
        rng: &mut SampleStream,
    ) -> (TechniqueState<f64>, bool) {
        let u = kernel.perturb(&current.u, rng);
        let t = OneDTechnique::select(u[0]).index();
        let next = self.evaluate(t, u);
        let changed = next.technique != current.technique;
        (next, changed)
    }
}

/// Integrator variants compared by the 1D experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Small steps over all three dimensions.
    Baseline,
    /// Jumps with both Jacobian factors forced to one.
    NoJacobian,
    /// Jumps that place every ambiguous dimension at a fixed point.
    FixedPoint,
    /// Jumps with Jacobians and resampled intervals.
    Full,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Baseline, Variant::NoJacobian, Variant::FixedPoint, Variant::Full];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::NoJacobian => "nojacobian",
            Variant::FixedPoint => "fixedpoint",
            Variant::Full => "full",
        }
    }

    pub fn jump_options(self) -> Option<JumpOptions> {
        let base = JumpOptions::default();
        match self {
            Variant::Baseline => None,
            Variant::Full => Some(base),
            Variant::NoJacobian => Some(JumpOptions {
                jacobians: JacobianMode::Ignore,
                ..base
            }),
            Variant::FixedPoint => Some(JumpOptions {
                intervals: IntervalMode::Fixed(FIXED_POINT_GAMMA),
                ..base
            }),
        }
    }

    pub fn mix(self) -> PerturbationMix {
        match self {
            Variant::Baseline => PerturbationMix::new(0.0, 1.0, 0.0),
            _ => PerturbationMix::new(0.0, 1.0 - JUMP_PROBABILITY, JUMP_PROBABILITY),
        }
        .expect("static mix")
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown 1D variant `{s}`")))
    }
}

/// Visit density and technique usage over uniform bins.
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramPair {
    /// Expected-value mass per bin (sums to the number of steps).
    pub visits: Vec<f64>,
    /// Visit density normalized by bin width.
    pub state_hist: Vec<f64>,
    /// Per-bin technique frequencies.
    pub usage_hist: Vec<[f64; TECHNIQUES]>,
}

impl HistogramPair {
    pub fn bins(&self) -> usize {
        self.visits.len()
    }
}

struct HistogramAccumulator {
    bins: usize,
    mass: Vec<f64>,
    usage: Vec<[f64; TECHNIQUES]>,
    batch_len: f64,
    total: f64,
    batches: Vec<Vec<f64>>,
}

impl HistogramAccumulator {
    fn new(bins: usize, steps: u64) -> Self {
        Self {
            bins,
            mass: vec![0.0; bins],
            usage: vec![[0.0; TECHNIQUES]; bins],
            batch_len: steps as f64 / BATCHES as f64,
            total: 0.0,
            batches: vec![vec![0.0; bins]; BATCHES],
        }
    }
}

impl Accumulator<TechniqueState<f64>> for HistogramAccumulator {
    fn splat(&mut self, state: &TechniqueState<f64>, weight: f64) {
        let Some(x) = state.path.path else { return };
        let bin = ((x * self.bins as f64) as usize).min(self.bins - 1);
        self.mass[bin] += weight;
        self.usage[bin][state.technique] += weight;
        let batch = ((self.total / self.batch_len) as usize).min(BATCHES - 1);
        self.batches[batch][bin] += weight;
        self.total += weight;
    }
}

/// One chain of the 1D experiment.
#[derive(Clone, Debug)]
pub struct OneDRun {
    pub variant: Variant,
    pub steps: u64,
    pub hist: HistogramPair,
    pub stats: ChainStats,
    /// Batch-means design effect of the visit histogram.
    pub design_effect: f64,
}

impl OneDRun {
    pub fn effective_samples(&self) -> f64 {
        self.steps as f64 / self.design_effect
    }
}

pub fn run_variant(variant: Variant, steps: u64, seed: u64, bins: usize) -> Result<OneDRun> {
    run_custom(variant, variant.mix(), variant.jump_options(), steps, seed, bins)
}

/// Runs the 1D chain with an explicit mix and jump configuration; `variant`
/// only labels the result and names the random stream.
pub fn run_custom(
    variant: Variant,
    mix: PerturbationMix,
    jumps: Option<JumpOptions>,
    steps: u64,
    seed: u64,
    bins: usize,
) -> Result<OneDRun> {
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    if steps < BATCHES as u64 {
        return Err(Error::InvalidArgument(format!("need at least {BATCHES} steps")));
    }
    let config = ChainConfig {
        mix,
        kernel: SmallStepKernel::default(),
        steps,
        ..ChainConfig::default()
    };
    let family = OneDFamily;
    let model = JumpChain {
        family: &family,
        jumps,
    };
    let mut rng = SampleStream::named(seed, &format!("oned-{}", variant.name()));
    let mut acc = HistogramAccumulator::new(bins, steps);
    let (stats, _) = run_chain(&model, &config, &mut rng, &mut acc)?;

    let width = 1.0 / bins as f64;
    let total: f64 = acc.mass.iter().sum();
    let state_hist = acc.mass.iter().map(|m| m / (total * width)).collect();
    let usage_hist = acc
        .mass
        .iter()
        .zip(&acc.usage)
        .map(|(m, u)| if *m > 0.0 { u.map(|v| v / m) } else { [0.0; TECHNIQUES] })
        .collect();
    let design_effect = design_effect(&acc.batches)?;
    Ok(OneDRun {
        variant,
        steps,
        hist: HistogramPair {
            visits: acc.mass,
            state_hist,
            usage_hist,
        },
        stats,
        design_effect,
    })
}

/// Normalized target density averaged over each bin.
pub fn expected_density(bins: usize) -> Vec<f64> {
    let width = 1.0 / bins as f64;
    (0..bins)
        .map(|b| {
            let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
            (target_antiderivative(hi) - target_antiderivative(lo)) / (TARGET_INTEGRAL * width)
        })
        .collect()
}

/// Target-weighted bin averages of the balance-heuristic weights.
pub fn expected_usage(bins: usize) -> Vec<[f64; TECHNIQUES]> {
    const SUB: usize = 64;
    let width = 1.0 / bins as f64;
    (0..bins)
        .map(|b| {
            // composite Simpson rule on the bin
            let h = width / SUB as f64;
            let mut num = [0.0; TECHNIQUES];
            let mut den = 0.0;
            for k in 0..=SUB {
                let x = (b as f64 * width + k as f64 * h).clamp(1e-12, 1.0 - 1e-12);
                let c = if k == 0 || k == SUB { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                let f = target_1d(x);
                let w = mis_weights(x);
                for t in 0..TECHNIQUES {
                    num[t] += c * f * w[t];
                }
                den += c * f;
            }
            num.map(|v| v / den)
        })
        .collect()
}

/// Writes the per-bin CSV of a run.
pub fn write_csv<W: Write>(run: &OneDRun, mut out: W) -> Result<()> {
    let bins = run.hist.bins();
    let density = expected_density(bins);
    let usage = expected_usage(bins);
    writeln!(
        out,
        "bin_center,state_density,expected_density,usage_t1,usage_t2,usage_t3,expected_w1,expected_w2,expected_w3"
    )?;
    for b in 0..bins {
        let center = (b as f64 + 0.5) / bins as f64;
        let u = run.hist.usage_hist[b];
        let e = usage[b];
        writeln!(
            out,
            "{center},{},{},{},{},{},{},{},{}",
            run.hist.state_hist[b], density[b], u[0], u[1], u[2], e[0], e[1], e[2]
        )?;
    }
    Ok(())
}

/// Chi-square verdict of several seeds of one variant.
#[derive(Clone, Debug)]
pub struct VariantVerdict {
    pub variant: Variant,
    pub chi: ChiSquare,
    pub effective_samples: f64,
    pub runs: Vec<OneDRun>,
}

/// Pools the visit histograms of all seeds and tests them against the
/// target with the pooled effective sample size.
pub fn evaluate_variant(variant: Variant, steps: u64, seeds: &[u64], bins: usize) -> Result<VariantVerdict> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("need at least one seed".into()));
    }
    let runs = seeds
        .iter()
        .map(|&s| run_variant(variant, steps, s, bins))
        .collect::<Result<Vec<_>>>()?;
    verdict_of(variant, runs)
}

pub fn verdict_of(variant: Variant, runs: Vec<OneDRun>) -> Result<VariantVerdict> {
    let bins = runs[0].hist.bins();
    let mut pooled = vec![0.0; bins];
    for r in &runs {
        for (p, v) in pooled.iter_mut().zip(&r.hist.visits) {
            *p += v;
        }
    }
    let n_eff: f64 = runs.iter().map(|r| r.effective_samples()).sum();
    let chi = chi_square(&pooled, &expected_density(bins), n_eff)?;
    Ok(VariantVerdict {
        variant,
        chi,
        effective_samples: n_eff,
        runs,
    })
}

/// Largest per-bin L1 distance between measured and analytic technique
/// usage over bins with at least `min_visits` visits.
pub fn usage_l1_error(run: &OneDRun, min_visits: f64) -> f64 {
    let expected = expected_usage(run.hist.bins());
    run.hist
        .usage_hist
        .iter()
        .zip(&expected)
        .zip(&run.hist.visits)
        .filter(|(_, v)| **v >= min_visits)
        .map(|((u, e), _)| (0..TECHNIQUES).map(|t| (u[t] - e[t]).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest per-bin L1 distance between analytic usage and the usage of
/// the histograms of all `runs` pooled, over bins with at least
/// `min_visits` pooled visits.
pub fn pooled_usage_l1_error(runs: &[OneDRun], min_visits: f64) -> Result<f64> {
    let Some(first) = runs.first() else {
        return Err(Error::InvalidArgument("need at least one run".into()));
    };
    let bins = first.hist.bins();
    if runs.iter().any(|r| r.hist.bins() != bins) {
        return Err(Error::DimensionMismatch("runs must share one binning".into()));
    }
    let expected = expected_usage(bins);
    let mut worst = 0.0f64;
    for (b, e) in expected.iter().enumerate() {
        let visits: f64 = runs.iter().map(|r| r.hist.visits[b]).sum();
        if visits < min_visits {
            continue;
        }
        let mut l1 = 0.0;
        for (t, et) in e.iter().enumerate() {
            let used: f64 = runs.iter().map(|r| r.hist.usage_hist[b][t] * r.hist.visits[b]).sum();
            l1 += (used / visits - et).abs();
        }
        worst = worst.max(l1);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(f: impl Fn(f64) -> f64) -> f64 {
        // Simpson on 20000 panels
        let n = 20_000;
        let h = 1.0 / n as f64;
        let mut s = 0.0;
        for k in 0..=n {
            let x = (k as f64 * h).clamp(0.0, 1.0 - 1e-15);
            let c = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            s += c * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn target_plug_ins() {
        assert_eq!(target_1d(0.0), 1.0);
        assert!((target_1d(1.0 / 6.0) - 1.9).abs() < 1e-12);
        assert!((TARGET_INTEGRAL - 1.190986).abs() < 1e-6);
        assert!((integrate(target_1d) - TARGET_INTEGRAL).abs() < 1e-9);
        let d = expected_density(100);
        assert!((d.iter().sum::<f64>() / 100.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn technique_densities_integrate_to_one() {
        // the step density is discontinuous at ½; integrate the halves apart
        assert!((integrate(|x| Triangular.pdf(x)) - 1.0).abs() < 1e-9);
        assert!((integrate(|x| Sine.pdf(x)) - 1.0).abs() < 1e-9);
        assert!((integrate(|x| Linear.pdf(x)) - 1.0).abs() < 1e-9);
        assert!((integrate(|x| OneDTechnique::Mixture.pdf(x)) - 1.0).abs() < 1e-9);
        let lower = integrate(|x| Step.pdf(0.5 * x)) * 0.5;
        let upper = integrate(|x| Step.pdf(0.5 + 0.5 * x)) * 0.5;
        assert!((lower + upper - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sample_plug_ins() {
        let s = technique_sample_1d(OneDTechnique::Triangular, &[0.1, 0.75, 0.3]).unwrap();
        assert!((s.x - 0.5).abs() < 1e-15 && (s.pdf - 1.0).abs() < 1e-15);
        let s = technique_sample_1d(OneDTechnique::Step, &[0.5, 0.9, 0.3]).unwrap();
        assert!((s.x - 0.8).abs() < 1e-12 && (s.pdf - 0.5).abs() < 1e-15);
        let s = technique_sample_1d(OneDTechnique::Mixture, &[0.9, 0.49, 0.7]).unwrap();
        assert_eq!(s.sub, Some(1));
        assert!((s.x - 0.7).abs() < 1e-12);
    }

    #[test]
    fn invert_plug_in() {
        let (u, jac, _) = technique_invert_with(OneDTechnique::Triangular, 0.5, [0.5, 0.25], None).unwrap();
        assert!((u[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((u[1] - 0.75).abs() < 1e-15);
        assert_eq!(u[2], 0.25);
        assert!((jac - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_density_component_is_never_selected() {
        // both components vanish at 0; just above, the sine component
        // dominates but the linear one stays admissible
        let spec = mixture_spec();
        let t = mixture_selection_distribution(spec, &mixture_blocks(), &0.0);
        assert!(t.is_err());
        let t = crate::invmap::selection_distribution(spec.weights(), &[0.0, 2.0]).unwrap();
        assert_eq!(t, vec![0.0, 1.0]);
        assert!(technique_invert_with(OneDTechnique::Mixture, 0.3, [0.5, 0.5], Some(0)).is_ok());
    }

    #[test]
    fn round_trip_all_techniques() {
        let mut rng = SampleStream::new(21);
        for _ in 0..100_000 {
            let u = large_step(&mut rng, 3).unwrap();
            let t = OneDTechnique::select(u[0]);
            let s = technique_sample_1d(t, u.as_slice()).unwrap();
            let gamma = AuxVector::draw(&mut rng, 2);
            let (v, jac) = technique_invert_1d(t, s.x, &gamma, &mut rng).unwrap();
            let (a, b) = t.interval();
            assert!(v[0] >= a && v[0] < b);
            let s2 = technique_sample_1d(t, v.as_slice()).unwrap();
            assert!((s.x - s2.x).abs() < 1e-9);
            assert!((jac - s2.jac_inv_det).abs() <= 1e-9 * jac);
        }
    }

    #[test]
    fn usage_rows_are_distributions() {
        for row in expected_usage(100) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_jumps_accept_everything() {
        let run = run_variant(Variant::Full, 200_000, 3, 50).unwrap();
        assert!(run.stats.jump.proposed > 30_000);
        assert!((run.stats.jump.mean_r() - 1.0).abs() < 1e-9);
        assert_eq!(run.stats.jump.verified_fail, 0);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("other".parse::<Variant>().is_err());
    }

    #[test]
    fn csv_schema() {
        let run = run_variant(Variant::Baseline, 10_000, 1, 10).unwrap();
        let mut buf = Vec::new();
        write_csv(&run, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "bin_center,state_density,expected_density,usage_t1,usage_t2,usage_t3,expected_w1,expected_w2,expected_w3"
        );
        assert_eq!(lines.count(), 10);
    }
}
