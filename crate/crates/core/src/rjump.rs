//! Strategy perturbations between sampling techniques.
//!
//! A reversible jump keeps the current path and re-expresses it in the
//! random numbers of another technique: pick `j` with probability `w_j`,
//! invert the path through `S_j⁻¹` (resampling ambiguous intervals and
//! mixture components), verify that `S_j` reproduces the path, and accept
//! with the RJMCMC ratio. With balance-heuristic weights and the mixture
//! selection distribution every factor cancels and the ratio is one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invmap::AuxVector;
use crate::pss::{ChainModel, JumpProposal, MultiplexedState, RandomVector, SmallStepKernel};
use crate::rng::SampleStream;

/// Default forward-verification tolerance in scene units.
pub const VERIFY_TOLERANCE: f64 = 1e-6;

/// Cached result of evaluating one technique on one random vector.
#[derive(Clone, Debug)]
pub struct PathRecord<P> {
    /// `None` for invalid samples (zero contribution).
    pub path: Option<P>,
    /// `|J S_i⁻¹|` at the path, with the ambiguities resolved as in `u`.
    pub inverse_jacobian: f64,
    /// `Π T(t)` over mixture components used by `u`: the probability that an
    /// inversion of the path would pick exactly these components.
    pub selection_prob: f64,
}

impl<P> PathRecord<P> {
    pub fn invalid() -> Self {
        Self {
            path: None,
            inverse_jacobian: 0.0,
            selection_prob: 0.0,
        }
    }
}

pub type TechniqueState<P> = MultiplexedState<PathRecord<P>>;

/// How ambiguous intervals are resolved during inversion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMode {
    /// Uniform resampling inside the interval.
    Resample,
    /// Always `a + γ(b−a)` for this fixed `γ` (biased; comparison only).
    Fixed(f64),
}

impl IntervalMode {
    /// Relative position inside an ambiguous interval.
    pub fn gamma(&self, rng: &mut SampleStream) -> f64 {
        match *self {
            IntervalMode::Resample => rng.uniform(),
            IntervalMode::Fixed(g) => g,
        }
    }
}

/// Whether the Jacobian factors enter the acceptance ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    Full,
    /// Forces both Jacobian factors to one (biased; comparison only).
    Ignore,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpOptions {
    pub tolerance: f64,
    pub intervals: IntervalMode,
    pub jacobians: JacobianMode,
}

impl Default for JumpOptions {
    fn default() -> Self {
        Self {
            tolerance: VERIFY_TOLERANCE,
            intervals: IntervalMode::Resample,
            jacobians: JacobianMode::Full,
        }
    }
}

/// Random numbers reproducing a path under one technique.
#[derive(Clone, Debug)]
pub struct Inversion {
    pub u: RandomVector,
    /// `|J S_j⁻¹|` for the resolved ambiguities.
    pub jac_inv_det: f64,
    /// `Π T(t)` of the mixture components chosen during the inversion.
    pub selection_prob: f64,
    pub aux: AuxVector,
}

/// A family of sampling techniques that share one primary sample space.
pub trait TechniqueFamily {
    type Path: Clone;

    fn technique_count(&self) -> usize;

    /// Runs `S_technique(u)` and caches target value, MIS weights and the
    /// inverse-Jacobian bookkeeping.
    fn evaluate(&self, technique: usize, u: RandomVector) -> TechniqueState<Self::Path>;

    /// `S_technique⁻¹(path, γ)` with `γ` drawn from `rng`.
    fn invert(
        &self,
        technique: usize,
        path: &Self::Path,
        intervals: IntervalMode,
        rng: &mut SampleStream,
    ) -> Result<Inversion>;

    /// Largest per-coordinate difference between two paths; infinite when
    /// they differ structurally.
    fn max_deviation(&self, a: &Self::Path, b: &Self::Path) -> f64;

    /// Independent uniform state (large step).
    fn random_state(&self, rng: &mut SampleStream) -> TechniqueState<Self::Path>;

    /// Symmetric local perturbation of the random numbers.
    fn small_step(
        &self,
        current: &TechniqueState<Self::Path>,
        kernel: &SmallStepKernel,
        rng: &mut SampleStream,
    ) -> (TechniqueState<Self::Path>, bool);
}

/// Full ledger of one strategy jump.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub from_technique: usize,
    pub to_technique: usize,
    pub aux: Vec<f64>,
    /// `|J S_i⁻¹|` of the current state.
    pub forward_jac: f64,
    /// `|J S_j⁻¹|` of the inversion.
    pub inverse_jac: f64,
    /// `T(t_u)/T(t_v)`.
    pub mixture_factor: f64,
    /// Unclamped acceptance ratio.
    pub ratio: f64,
    pub acceptance: f64,
    pub verified: bool,
    pub max_deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

/// Draws `j` with probability proportional to `weights`.
pub fn choose_proposal_technique(weights: &[f64], rng: &mut SampleStream) -> Result<usize> {
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidState(format!("invalid proposal weights {weights:?}")));
    }
    rng.discrete(weights)
        .ok_or_else(|| Error::InvalidState("all proposal weights are zero".into()))
}

/// Unclamped reversible-jump ratio.
pub fn rj_ratio(
    c_from: f64,
    c_to: f64,
    t_fwd: f64,
    t_rev: f64,
    jac_from_inverse: f64,
    jac_to_inverse: f64,
    mixture_factor: f64,
) -> Result<f64> {
    let inputs = [c_from, c_to, t_fwd, t_rev, jac_from_inverse, jac_to_inverse, mixture_factor];
    if inputs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite acceptance input {inputs:?}")));
    }
    if !(c_from > 0.0) {
        return Err(Error::InvalidState(format!("current target {c_from}")));
    }
    if !(t_fwd > 0.0) || !(jac_from_inverse > 0.0) || !(jac_to_inverse > 0.0) || !(mixture_factor > 0.0) {
        return Err(Error::Numeric(format!("non-positive acceptance factor {inputs:?}")));
    }
    Ok((c_to * t_rev * jac_to_inverse) / (c_from * t_fwd * jac_from_inverse) * mixture_factor)
}

/// `min{1, (c_to·T_rev·|J S_j⁻¹|)/(c_from·T_fwd·|J S_i⁻¹|) · T(t_u)/T(t_v)}`.
pub fn rj_acceptance(
    c_from: f64,
    c_to: f64,
    t_fwd: f64,
    t_rev: f64,
    jac_from_inverse: f64,
    jac_to_inverse: f64,
    mixture_factor: f64,
) -> Result<f64> {
    rj_ratio(c_from, c_to, t_fwd, t_rev, jac_from_inverse, jac_to_inverse, mixture_factor)
        .map(|r| r.clamp(0.0, 1.0))
}

/// True iff `S_technique(u)` exists and matches `expected` within `tol`.
pub fn forward_verify<F: TechniqueFamily>(
    family: &F,
    technique: usize,
    u: &RandomVector,
    expected: &F::Path,
    tol: f64,
) -> bool {
    let state = family.evaluate(technique, u.clone());
    match &state.path.path {
        Some(p) => family.max_deviation(p, expected) <= tol,
        None => false,
    }
}

/// Switches technique while keeping `u` fixed: the proposal re-traces
/// `S_j(u)` and is accepted with `min{1, C_j(u)/C_i(u)}` (symmetric `T`).
pub fn naive_technique_perturbation<F: TechniqueFamily>(
    family: &F,
    state: &TechniqueState<F::Path>,
    j: usize,
) -> (TechniqueState<F::Path>, f64) {
    let proposal = family.evaluate(j, state.u.clone());
    let acceptance = if state.target_value > 0.0 {
        (proposal.target_value / state.target_value).min(1.0)
    } else {
        0.0
    };
    (proposal, acceptance)
}

/// One reversible jump from `state`. A rejected jump returns `None` for the
/// proposal and leaves the chain untouched.
pub fn reversible_jump<F: TechniqueFamily>(
    family: &F,
    state: &TechniqueState<F::Path>,
    options: &JumpOptions,
    rng: &mut SampleStream,
) -> (Option<TechniqueState<F::Path>>, JumpRecord) {
    let mut record = JumpRecord {
        from_technique: state.technique,
        to_technique: state.technique,
        forward_jac: state.path.inverse_jacobian,
        ..Default::default()
    };
    let reject = |mut record: JumpRecord, why: String| {
        record.verified = false;
        record.acceptance = 0.0;
        record.failure = Some(why);
        (None, record)
    };

    let Some(path) = state.path.path.as_ref() else {
        return reject(record, "current state has no path".into());
    };
    let j = match choose_proposal_technique(&state.mis_weights, rng) {
        Ok(j) => j,
        Err(e) => return reject(record, e.to_string()),
    };
    record.to_technique = j;

    let inversion = match family.invert(j, path, options.intervals, rng) {
        Ok(inv) => inv,
        Err(e) => return reject(record, e.to_string()),
    };
    record.aux = inversion.aux.0.clone();
    record.inverse_jac = inversion.jac_inv_det;

    let proposal = family.evaluate(j, inversion.u);
    let deviation = match proposal.path.path.as_ref() {
        Some(p) => family.max_deviation(path, p),
        None => f64::INFINITY,
    };
    record.max_deviation = deviation;
    if !(deviation <= options.tolerance) {
        return reject(record, format!("forward verification failed (deviation {deviation:e})"));
    }
    record.verified = true;

    if !(inversion.selection_prob > 0.0) {
        return reject(record, "zero selection probability".into());
    }
    record.mixture_factor = state.path.selection_prob / inversion.selection_prob;
    let (jac_from, jac_to) = match options.jacobians {
        JacobianMode::Full => (state.path.inverse_jacobian, inversion.jac_inv_det),
        JacobianMode::Ignore => (1.0, 1.0),
    };
    let t_fwd = state.mis_weights[j];
    let t_rev = proposal.mis_weights.get(state.technique).copied().unwrap_or(0.0);
    match rj_ratio(
        state.target_value,
        proposal.target_value,
        t_fwd,
        t_rev,
        jac_from,
        jac_to,
        record.mixture_factor,
    ) {
        Ok(ratio) => {
            record.ratio = ratio;
            record.acceptance = ratio.clamp(0.0, 1.0);
            if options.jacobians == JacobianMode::Full && (ratio - 1.0).abs() > 1e-9 {
                log::debug!("jump {} -> {} ratio {ratio} deviates from 1", state.technique, j);
            }
            (Some(proposal), record)
        }
        Err(e) => {
            record.verified = false;
            reject(record, e.to_string())
        }
    }
}

/// Adapts a technique family to the chain driver, optionally with jumps.
pub struct JumpChain<'a, F> {
    pub family: &'a F,
    pub jumps: Option<JumpOptions>,
}

impl<F: TechniqueFamily> ChainModel for JumpChain<'_, F> {
    type State = TechniqueState<F::Path>;

    fn random_state(&self, rng: &mut SampleStream) -> Self::State {
        self.family.random_state(rng)
    }

    fn small_step(
        &self,
        current: &Self::State,
        kernel: &SmallStepKernel,
        rng: &mut SampleStream,
    ) -> (Self::State, bool) {
        self.family.small_step(current, kernel, rng)
    }

    fn target(&self, state: &Self::State) -> f64 {
        state.target_value
    }

    fn jump(&self, current: &Self::State, rng: &mut SampleStream) -> Option<JumpProposal<Self::State>> {
        let options = self.jumps?;
        let (state, record) = reversible_jump(self.family, current, &options, rng);
        Some(JumpProposal {
            acceptance: record.acceptance,
            state,
            record,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_weights_pick_the_only_technique() {
        let mut rng = SampleStream::new(2);
        for _ in 0..1000 {
            assert_eq!(choose_proposal_technique(&[1.0, 0.0, 0.0], &mut rng).unwrap(), 0);
            let j = choose_proposal_technique(&[0.5, 0.5, 0.0, 0.0], &mut rng).unwrap();
            assert!(j < 2);
        }
        assert!(matches!(
            choose_proposal_technique(&[0.0, 0.0], &mut rng),
            Err(Error::InvalidState(_))
        ));
        assert!(choose_proposal_technique(&[0.5, -0.1], &mut rng).is_err());
    }

    #[test]
    fn uniform_weights_frequencies() {
        let mut rng = SampleStream::new(8);
        let n = 1_000_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[choose_proposal_technique(&[0.25; 4], &mut rng).unwrap()] += 1;
        }
        let sigma = (0.25f64 * 0.75 / n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn acceptance_plug_ins() {
        // optimal proposal: c ratio and jacobians cancel against T
        let w_i = 0.3;
        let w_j = 0.6;
        let (p_i, p_j) = (2.0, 4.0);
        let f = 5.0;
        let c_from = w_i * f / p_i;
        let c_to = w_j * f / p_j;
        let r = rj_acceptance(c_from, c_to, w_j, w_i, p_i, p_j, 1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);

        assert_eq!(rj_acceptance(2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 0.5);
        assert_eq!(rj_acceptance(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0).unwrap(), 1.0);
        assert!(matches!(
            rj_acceptance(1.0, f64::NAN, 1.0, 1.0, 1.0, 1.0, 1.0),
            Err(Error::Numeric(_))
        ));
        assert!(rj_acceptance(1.0, 1.0, 1.0, 1.0, f64::INFINITY, 1.0, 1.0).is_err());
    }
}
