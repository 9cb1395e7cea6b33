//! Primary sample space: random vectors, symmetric perturbations and the
//! generic Metropolis–Hastings driver shared by the 1D harness and the
//! renderer.

use std::collections::BTreeMap;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rjump::JumpRecord;
use crate::rng::SampleStream;

/// Largest double strictly below one.
pub const ONE_MINUS_EPSILON: f64 = 1.0 - f64::EPSILON / 2.0;

/// A point in the unit hypercube `[0,1)^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomVector(Vec<f64>);

impl RandomVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("random vector needs dim >= 1".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "random vector element {v} outside [0,1)"
            )));
        }
        Ok(Self(values))
    }

    /// Clamps every element into `[0,1)` instead of rejecting. Used by
    /// inverse mappings where rounding can land exactly on 1.
    pub fn from_clamped(values: Vec<f64>) -> Self {
        Self(values.into_iter().map(clamp_unit).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for RandomVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[inline]
pub fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() || v < 0.0 {
        0.0
    } else if v >= 1.0 {
        ONE_MINUS_EPSILON
    } else {
        v
    }
}

/// Probabilities of the three move types of one chain iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationMix {
    pub p_large: f64,
    pub p_small: f64,
    pub p_jump: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Large,
    Small,
    Jump,
}

impl PerturbationMix {
    pub fn new(p_large: f64, p_small: f64, p_jump: f64) -> Result<Self> {
        let all = [p_large, p_small, p_jump];
        if all.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "perturbation probabilities must be nonnegative, got {all:?}"
            )));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "perturbation probabilities must sum to 1, got {sum}"
            )));
        }
        Ok(Self {
            p_large,
            p_small,
            p_jump,
        })
    }

    /// 10% large steps, 85% small steps, 5% strategy jumps.
    pub fn rjmlt_default() -> Self {
        Self {
            p_large: 0.10,
            p_small: 0.85,
            p_jump: 0.05,
        }
    }

    /// The same mix with the jump mass folded into small steps.
    pub fn without_jumps(self) -> Self {
        Self {
            p_large: self.p_large,
            p_small: self.p_small + self.p_jump,
            p_jump: 0.0,
        }
    }

    pub fn choose(&self, u: f64) -> MoveKind {
        if u < self.p_large {
            MoveKind::Large
        } else if u < self.p_large + self.p_small || self.p_jump == 0.0 {
            MoveKind::Small
        } else {
            MoveKind::Jump
        }
    }
}

impl Default for PerturbationMix {
    fn default() -> Self {
        Self::rjmlt_default()
    }
}

/// Kelemen-style exponential mutation: each coordinate moves by
/// `±s1·exp(−ln(s1/s2)·ξ)` and wraps around the unit interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallStepKernel {
    pub s1: f64,
    pub s2: f64,
}

impl Default for SmallStepKernel {
    fn default() -> Self {
        Self {
            s1: 1.0 / 64.0,
            s2: 1.0 / 1024.0,
        }
    }
}

impl SmallStepKernel {
    pub fn new(s1: f64, s2: f64) -> Result<Self> {
        if !(0.0 < s2 && s2 < s1 && s1 < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "small step needs 0 < s2 < s1 < 1, got s1={s1}, s2={s2}"
            )));
        }
        Ok(Self { s1, s2 })
    }

    /// Draws one signed offset.
    #[inline]
    pub fn offset(&self, rng: &mut SampleStream) -> f64 {
        let sign = rng.uniform();
        let xi = rng.uniform();
        let eps = self.s1 * (-(self.s1 / self.s2).ln() * xi).exp();
        if sign < 0.5 {
            eps
        } else {
            -eps
        }
    }

    pub fn perturb(&self, u: &RandomVector, rng: &mut SampleStream) -> RandomVector {
        RandomVector(
            u.0.iter()
                .map(|&x| wrap_offset(x, self.offset(rng)))
                .collect(),
        )
    }
}

/// `x + offset` wrapped into `[0,1)`.
#[inline]
pub fn wrap_offset(x: f64, offset: f64) -> f64 {
    let mut v = x + offset;
    v -= v.floor();
    if v >= 1.0 {
        v = 0.0;
    }
    v
}

/// Independent uniform vector of dimension `dim`.
pub fn large_step(rng: &mut SampleStream, dim: usize) -> Result<RandomVector> {
    if dim == 0 {
        return Err(Error::InvalidArgument("large step needs dim >= 1".into()));
    }
    Ok(RandomVector((0..dim).map(|_| rng.uniform()).collect()))
}

pub fn small_step(rng: &mut SampleStream, u: &RandomVector, s1: f64, s2: f64) -> Result<RandomVector> {
    Ok(SmallStepKernel::new(s1, s2)?.perturb(u, rng))
}

/// Metropolis–Hastings acceptance probability with an optional Jacobian
/// factor for deterministic maps.
pub fn mh_acceptance(
    c_current: f64,
    c_proposed: f64,
    t_forward: f64,
    t_reverse: f64,
    jacobian: f64,
) -> Result<f64> {
    if !(c_current > 0.0) || !c_current.is_finite() {
        return Err(Error::InvalidState(format!(
            "current state has target value {c_current}"
        )));
    }
    if !(t_forward > 0.0) || !(t_reverse > 0.0) || !(jacobian > 0.0) {
        return Err(Error::Numeric(format!(
            "proposal densities and Jacobian must be positive (T={t_forward}, T'={t_reverse}, J={jacobian})"
        )));
    }
    if !(c_proposed >= 0.0) || !c_proposed.is_finite() {
        return Ok(0.0);
    }
    let ratio = (c_proposed * t_reverse * jacobian) / (c_current * t_forward);
    Ok(if ratio.is_nan() { 0.0 } else { ratio.min(1.0) })
}

/// Chain state carrying an explicit technique index next to the random
/// vector, plus whatever the model caches about the sampled path.
#[derive(Clone, Debug)]
pub struct MultiplexedState<P> {
    pub technique: usize,
    pub u: RandomVector,
    pub path: P,
    pub target_value: f64,
    pub mis_weights: Vec<f64>,
}

/// A proposal generated by a strategy jump.
#[derive(Clone, Debug)]
pub struct JumpProposal<S> {
    /// `None` when the jump was rejected before evaluation (non-invertible
    /// path, failed verification).
    pub state: Option<S>,
    pub acceptance: f64,
    pub record: JumpRecord,
}

/// The pieces of a Markov chain the driver needs from a concrete problem.
pub trait ChainModel {
    type State: Clone;

    /// An independent draw from the uniform proposal (large step).
    fn random_state(&self, rng: &mut SampleStream) -> Self::State;

    /// Symmetric local proposal; the flag reports whether the proposal
    /// sits in a different sampling technique.
    fn small_step(
        &self,
        current: &Self::State,
        kernel: &SmallStepKernel,
        rng: &mut SampleStream,
    ) -> (Self::State, bool);

    fn target(&self, state: &Self::State) -> f64;

    fn jump(&self, _current: &Self::State, _rng: &mut SampleStream) -> Option<JumpProposal<Self::State>> {
        None
    }
}

/// Receives expected-value splats.
pub trait Accumulator<S> {
    fn splat(&mut self, state: &S, weight: f64);

    fn record_jump(&mut self, _record: &JumpRecord) {}
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MoveStats {
    pub proposed: u64,
    pub accepted: u64,
    pub acceptance_sum: f64,
    pub verified_fail: u64,
}

impl MoveStats {
    pub fn mean_r(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.acceptance_sum / self.proposed as f64
        }
    }

    fn record(&mut self, r: f64, accepted: bool) {
        self.proposed += 1;
        self.acceptance_sum += r;
        if accepted {
            self.accepted += 1;
        }
    }

    pub fn merge(&mut self, other: &MoveStats) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
        self.acceptance_sum += other.acceptance_sum;
        self.verified_fail += other.verified_fail;
    }
}

/// Per-move-type acceptance bookkeeping of one chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainStats {
    pub large: MoveStats,
    pub small: MoveStats,
    /// Subset of `small` whose proposal changed the sampling technique.
    pub technique_change: MoveStats,
    pub jump: MoveStats,
    /// Sum of target values over all large-step proposals; these are
    /// independent uniform draws and refine the normalization estimate.
    pub large_target_sum: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct MoveReport {
    pub proposed: u64,
    pub accepted: u64,
    pub mean_r: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verified_fail: Option<u64>,
}

impl ChainStats {
    pub fn merge(&mut self, other: &ChainStats) {
        self.large.merge(&other.large);
        self.small.merge(&other.small);
        self.technique_change.merge(&other.technique_change);
        self.jump.merge(&other.jump);
        self.large_target_sum += other.large_target_sum;
    }

    /// `{perturbation_type → {proposed, accepted, mean_r}}`.
    pub fn report(&self) -> BTreeMap<String, MoveReport> {
        let entry = |m: &MoveStats, with_fail: bool| MoveReport {
            proposed: m.proposed,
            accepted: m.accepted,
            mean_r: m.mean_r(),
            verified_fail: with_fail.then_some(m.verified_fail),
        };
        let mut out = BTreeMap::new();
        out.insert("large".into(), entry(&self.large, false));
        out.insert("small".into(), entry(&self.small, false));
        out.insert("technique_change".into(), entry(&self.technique_change, false));
        out.insert("jump".into(), entry(&self.jump, true));
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainConfig {
    pub mix: PerturbationMix,
    pub kernel: SmallStepKernel,
    pub steps: u64,
    pub bootstrap_samples: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            mix: PerturbationMix::default(),
            kernel: SmallStepKernel::default(),
            steps: 1,
            bootstrap_samples: 10_000,
        }
    }
}

/// Result of drawing independent samples to seed a chain.
#[derive(Clone, Debug)]
pub struct Bootstrap<S> {
    /// Mean target value over all draws.
    pub mean_target: f64,
    pub samples: usize,
    /// Start state, resampled proportionally to the target.
    pub start: S,
}

/// Draws `samples` independent states and picks one proportionally to its
/// target value (single-slot weighted reservoir).
pub fn bootstrap<M: ChainModel>(
    model: &M,
    samples: usize,
    rng: &mut SampleStream,
) -> Result<Bootstrap<M::State>> {
    if samples == 0 {
        return Err(Error::InvalidArgument("bootstrap needs at least one sample".into()));
    }
    let mut total = 0.0;
    let mut chosen: Option<M::State> = None;
    for _ in 0..samples {
        let s = model.random_state(rng);
        let c = model.target(&s);
        let pick = rng.uniform();
        if c > 0.0 && c.is_finite() {
            total += c;
            if pick * total < c {
                chosen = Some(s);
            }
        }
    }
    match chosen {
        Some(start) => Ok(Bootstrap {
            mean_target: total / samples as f64,
            samples,
            start,
        }),
        None => Err(Error::Initialization(format!(
            "all {samples} bootstrap samples have zero contribution"
        ))),
    }
}

/// Runs exactly `config.steps` Metropolis–Hastings iterations from `start`,
/// splatting current and proposed states with weights `1−r` and `r`.
pub fn run_chain_from<M, A>(
    model: &M,
    config: &ChainConfig,
    start: M::State,
    rng: &mut SampleStream,
    acc: &mut A,
) -> Result<ChainStats>
where
    M: ChainModel,
    A: Accumulator<M::State>,
{
    let mut current = start;
    let mut c_current = model.target(&current);
    if !(c_current > 0.0) {
        return Err(Error::InvalidState("chain must start on a positive target".into()));
    }
    let mut stats = ChainStats::default();

    for _ in 0..config.steps {
        let kind = config.mix.choose(rng.uniform());
        let mut changed_technique = false;
        let (proposal, c_proposal, r) = match kind {
            MoveKind::Large => {
                let p = model.random_state(rng);
                let c = model.target(&p);
                stats.large_target_sum += c;
                let r = mh_acceptance(c_current, c, 1.0, 1.0, 1.0)?;
                (Some(p), c, r)
            }
            MoveKind::Small => {
                let (p, changed) = model.small_step(&current, &config.kernel, rng);
                changed_technique = changed;
                let c = model.target(&p);
                let r = mh_acceptance(c_current, c, 1.0, 1.0, 1.0)?;
                (Some(p), c, r)
            }
            MoveKind::Jump => {
                let j = model.jump(&current, rng).ok_or_else(|| {
                    Error::Unsupported("model does not provide strategy jumps".into())
                })?;
                acc.record_jump(&j.record);
                if !j.record.verified {
                    stats.jump.verified_fail += 1;
                }
                match j.state {
                    Some(p) => {
                        let c = model.target(&p);
                        (Some(p), c, j.acceptance)
                    }
                    None => (None, 0.0, 0.0),
                }
            }
        };

        if r < 1.0 {
            acc.splat(&current, 1.0 - r);
        }
        let mut accepted = false;
        if let Some(p) = proposal {
            if r > 0.0 {
                acc.splat(&p, r);
            }
            if rng.uniform() < r {
                current = p;
                c_current = c_proposal;
                accepted = true;
            }
        }

        match kind {
            MoveKind::Large => stats.large.record(r, accepted),
            MoveKind::Small => {
                stats.small.record(r, accepted);
                if changed_technique {
                    stats.technique_change.record(r, accepted);
                }
            }
            MoveKind::Jump => stats.jump.record(r, accepted),
        }
    }
    Ok(stats)
}

/// Bootstraps a start state and runs the chain.
pub fn run_chain<M, A>(
    model: &M,
    config: &ChainConfig,
    rng: &mut SampleStream,
    acc: &mut A,
) -> Result<(ChainStats, Bootstrap<()>)>
where
    M: ChainModel,
    A: Accumulator<M::State>,
{
    if config.steps == 0 {
        return Err(Error::InvalidArgument("chain needs at least one step".into()));
    }
    let boot = bootstrap(model, config.bootstrap_samples, rng)?;
    let summary = Bootstrap {
        mean_target: boot.mean_target,
        samples: boot.samples,
        start: (),
    };
    let stats = run_chain_from(model, config, boot.start, rng, acc)?;
    Ok((stats, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn large_step_range_and_replay() {
        let a = large_step(&mut SampleStream::new(5), 3).unwrap();
        let b = large_step(&mut SampleStream::new(5), 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 3);
        assert!(a.as_slice().iter().all(|v| (0.0..1.0).contains(v)));
        assert!(large_step(&mut SampleStream::new(5), 0).is_err());
    }

    #[test]
    fn large_step_means() {
        let mut rng = SampleStream::new(11);
        let n = 1_000_000;
        let mut sums = [0.0; 3];
        for _ in 0..n {
            let u = large_step(&mut rng, 3).unwrap();
            for d in 0..3 {
                sums[d] += u[d];
            }
        }
        for s in sums {
            assert!((s / n as f64 - 0.5).abs() < 0.002);
        }
    }

    #[test]
    fn forced_offsets_wrap() {
        assert!((wrap_offset(0.5, 0.3) - 0.8).abs() < 1e-15);
        assert!((wrap_offset(0.9, 0.3) - 0.2).abs() < 1e-15);
        assert!((wrap_offset(0.1, -0.3) - 0.8).abs() < 1e-15);
        assert!(wrap_offset(0.0, -0.0).abs() < 1.0);
    }

    #[test]
    fn small_step_kernel_validation() {
        assert!(SmallStepKernel::new(1.0 / 1024.0, 1.0 / 64.0).is_err());
        assert!(SmallStepKernel::new(1.5, 0.1).is_err());
        let mut rng = SampleStream::new(1);
        let u = RandomVector::new(vec![0.5]).unwrap();
        assert!(small_step(&mut rng, &u, 0.1, 0.2).is_err());
    }

    #[test]
    fn small_step_offsets_are_symmetric() {
        let kernel = SmallStepKernel::default();
        let mut rng = SampleStream::new(3);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        let mut positive = 0usize;
        for _ in 0..n {
            let e = kernel.offset(&mut rng);
            assert!(e.abs() <= kernel.s1 && e.abs() >= kernel.s2 * (1.0 - 1e-12));
            sum += e;
            sq += e * e;
            if e > 0.0 {
                positive += 1;
            }
        }
        let mean = sum / n as f64;
        let sigma = (sq / n as f64 - mean * mean).sqrt() / (n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma, "mean {mean} sigma {sigma}");
        let half = n as f64 / 2.0;
        assert!((positive as f64 - half).abs() < 3.0 * (n as f64 * 0.25).sqrt());
    }

    #[test]
    fn small_step_stays_in_unit_interval() {
        let mut rng = SampleStream::new(9);
        let mut u = RandomVector::new(vec![0.999, 0.0, 0.5]).unwrap();
        for _ in 0..100_000 {
            u = small_step(&mut rng, &u, 1.0 / 64.0, 1.0 / 1024.0).unwrap();
            assert!(u.as_slice().iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn acceptance_plug_ins() {
        assert_eq!(mh_acceptance(1.0, 2.0, 1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(mh_acceptance(2.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 0.5);
        assert_eq!(mh_acceptance(1.0, 0.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(matches!(mh_acceptance(0.0, 1.0, 1.0, 1.0, 1.0), Err(Error::InvalidState(_))));
        assert!(mh_acceptance(1.0, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn acceptance_is_scale_invariant(
            c in 1e-6f64..1e6,
            c2 in 0.0f64..1e6,
            lambda in 1e-6f64..1e6,
            t in 0.01f64..10.0,
            t2 in 0.01f64..10.0,
            j in 0.01f64..10.0,
        ) {
            let a = mh_acceptance(c, c2, t, t2, j).unwrap();
            let b = mh_acceptance(lambda * c, lambda * c2, t, t2, j).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn wrapped_offsets_stay_in_range(x in 0.0f64..1.0, off in -1.0f64..1.0) {
            let y = wrap_offset(x, off);
            prop_assert!((0.0..1.0).contains(&y));
        }
    }

    /// Uniform target on `[0,1)^2`; counts every splat.
    struct Flat;

    impl ChainModel for Flat {
        type State = RandomVector;
        fn random_state(&self, rng: &mut SampleStream) -> RandomVector {
            large_step(rng, 2).unwrap()
        }
        fn small_step(
            &self,
            current: &RandomVector,
            kernel: &SmallStepKernel,
            rng: &mut SampleStream,
        ) -> (RandomVector, bool) {
            (kernel.perturb(current, rng), false)
        }
        fn target(&self, _: &RandomVector) -> f64 {
            1.0
        }
    }

    /// Zero everywhere: bootstrap must give up.
    struct Dark;

    impl ChainModel for Dark {
        type State = RandomVector;
        fn random_state(&self, rng: &mut SampleStream) -> RandomVector {
            large_step(rng, 1).unwrap()
        }
        fn small_step(&self, c: &RandomVector, _: &SmallStepKernel, _: &mut SampleStream) -> (RandomVector, bool) {
            (c.clone(), false)
        }
        fn target(&self, _: &RandomVector) -> f64 {
            0.0
        }
    }

    #[derive(Default)]
    struct Ledger {
        weights: Vec<f64>,
        points: Vec<f64>,
    }

    impl Accumulator<RandomVector> for Ledger {
        fn splat(&mut self, state: &RandomVector, weight: f64) {
            self.weights.push(weight);
            self.points.push(state[0] * weight);
        }
    }

    fn config(mix: PerturbationMix, steps: u64) -> ChainConfig {
        ChainConfig {
            mix,
            steps,
            bootstrap_samples: 100,
            ..ChainConfig::default()
        }
    }

    #[test]
    fn constant_target_accepts_every_small_step() {
        let mix = PerturbationMix::new(0.0, 1.0, 0.0).unwrap();
        let mut acc = Ledger::default();
        let (stats, _) = run_chain(&Flat, &config(mix, 1), &mut SampleStream::new(1), &mut acc).unwrap();
        assert_eq!(stats.small.proposed, 1);
        assert_eq!(stats.small.accepted, 1);
        assert_eq!(stats.small.mean_r(), 1.0);
    }

    #[test]
    fn splat_weights_sum_to_one_per_iteration() {
        let mix = PerturbationMix::new(0.3, 0.7, 0.0).unwrap();
        let mut acc = Ledger::default();
        let steps = 10_000;
        run_chain(&Flat, &config(mix, steps), &mut SampleStream::new(2), &mut acc).unwrap();
        let total: f64 = acc.weights.iter().sum();
        assert!((total - steps as f64).abs() < 1e-9);
    }

    #[test]
    fn chains_replay_bit_identically() {
        let mix = PerturbationMix::new(0.2, 0.8, 0.0).unwrap();
        let run = |seed| {
            let mut acc = Ledger::default();
            run_chain(&Flat, &config(mix, 5000), &mut SampleStream::new(seed), &mut acc).unwrap();
            acc.points
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4), run(5));
    }

    #[test]
    fn dark_bootstrap_is_an_initialization_error() {
        let mix = PerturbationMix::new(0.2, 0.8, 0.0).unwrap();
        let mut acc = Ledger::default();
        let err = run_chain(&Dark, &config(mix, 10), &mut SampleStream::new(1), &mut acc).unwrap_err();
        assert!(matches!(err, Error::Initialization(_)));
    }

    #[test]
    fn jumps_without_support_are_rejected_as_unsupported() {
        let mix = PerturbationMix::new(0.0, 0.0, 1.0).unwrap();
        let mut acc = Ledger::default();
        let err = run_chain(&Flat, &config(mix, 10), &mut SampleStream::new(1), &mut acc).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn mix_validation_and_folding() {
        assert!(PerturbationMix::new(0.5, 0.6, 0.0).is_err());
        assert!(PerturbationMix::new(-0.1, 1.1, 0.0).is_err());
        let m = PerturbationMix::rjmlt_default().without_jumps();
        assert_eq!(m.p_jump, 0.0);
        assert!((m.p_small - 0.9).abs() < 1e-12);
        assert_eq!(PerturbationMix::rjmlt_default().choose(0.05), MoveKind::Large);
        assert_eq!(PerturbationMix::rjmlt_default().choose(0.5), MoveKind::Small);
        assert_eq!(PerturbationMix::rjmlt_default().choose(0.97), MoveKind::Jump);
    }
}
