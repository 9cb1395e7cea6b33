//! Invertible sampling building blocks.
//!
//! A sampling technique is a chain of low-dimensional blocks. Every block can
//! map uniforms to a sample and back, and reports `|J g⁻¹|`, the inverse
//! Jacobian determinant, which for inversion-method blocks is the sampling
//! density. Ambiguous dimensions (unused, or selecting a discrete outcome)
//! are inverted by uniform resampling inside their interval, and mixtures by
//! drawing the component from the selection distribution
//! `T(t) ∝ α_t·|J g_t⁻¹|`, which makes each block contribute exactly the
//! mixture density to the acceptance ratio.

use crate::error::{Error, Result};
use crate::pss::clamp_unit;
use crate::rng::SampleStream;

/// Output of one forward block evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockResult<S> {
    pub sample: S,
    /// `|J g⁻¹|` at `sample`; positive and finite.
    pub jac_inv_det: f64,
    /// Primary-sample dimensions used.
    pub consumed: usize,
    /// Interval of a selector dimension that maps to this outcome.
    pub interval: Option<(f64, f64)>,
}

/// A sampling step that can be run forwards and backwards.
pub trait InvertibleBlock {
    type Sample: Clone;

    fn dims(&self) -> usize;

    /// Maps `dims()` uniforms to a sample and its density. `None` when the
    /// uniforms map outside the block's support.
    fn sample(&self, u: &[f64]) -> Option<(Self::Sample, f64)>;

    /// Writes the uniforms producing `x` into `out` and returns `|J g⁻¹|`.
    fn invert(&self, x: &Self::Sample, out: &mut [f64]) -> Result<f64>;

    fn pdf(&self, x: &Self::Sample) -> f64;
}

/// A one-dimensional distribution sampled by the inversion method.
pub trait Distribution1D {
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;

    fn support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    /// Closed forms override this; the default bisects the CDF to 1e-12.
    fn inverse_cdf(&self, u: f64) -> f64 {
        bisect_cdf(|x| self.cdf(x), self.support(), u)
    }
}

impl<D: Distribution1D + ?Sized> Distribution1D for &D {
    fn pdf(&self, x: f64) -> f64 {
        (**self).pdf(x)
    }
    fn cdf(&self, x: f64) -> f64 {
        (**self).cdf(x)
    }
    fn support(&self) -> (f64, f64) {
        (**self).support()
    }
    fn inverse_cdf(&self, u: f64) -> f64 {
        (**self).inverse_cdf(u)
    }
}

/// Solves `cdf(x) = u` on `[lo, hi]` by bisection.
pub fn bisect_cdf(cdf: impl Fn(f64) -> f64, (mut lo, mut hi): (f64, f64), u: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `x = P⁻¹(u)` with `|J g⁻¹| = p(x)`.
pub fn inversion_block_forward<D: Distribution1D + ?Sized>(dist: &D, u: f64) -> BlockResult<f64> {
    let x = dist.inverse_cdf(u);
    BlockResult {
        sample: x,
        jac_inv_det: dist.pdf(x),
        consumed: 1,
        interval: None,
    }
}

/// `u = P(x)` with `|J g⁻¹| = p(x)`. Points outside the support or with
/// zero density are not invertible.
pub fn inversion_block_inverse<D: Distribution1D + ?Sized>(dist: &D, x: f64) -> Result<(f64, f64)> {
    let (lo, hi) = dist.support();
    if !(x >= lo && x <= hi) {
        return Err(Error::NonInvertible(format!("{x} outside support [{lo}, {hi}]")));
    }
    let p = dist.pdf(x);
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::NonInvertible(format!("zero density at {x}")));
    }
    Ok((clamp_unit(dist.cdf(x)), p))
}

/// Adapts a [`Distribution1D`] to the block interface.
#[derive(Clone, Copy, Debug)]
pub struct InversionBlock<D>(pub D);

impl<D: Distribution1D> InvertibleBlock for InversionBlock<D> {
    type Sample = f64;

    fn dims(&self) -> usize {
        1
    }

    fn sample(&self, u: &[f64]) -> Option<(f64, f64)> {
        let r = inversion_block_forward(&self.0, u[0]);
        (r.jac_inv_det > 0.0).then_some((r.sample, r.jac_inv_det))
    }

    fn invert(&self, x: &f64, out: &mut [f64]) -> Result<f64> {
        let (u, p) = inversion_block_inverse(&self.0, *x)?;
        out[0] = u;
        Ok(p)
    }

    fn pdf(&self, x: &f64) -> f64 {
        let (lo, hi) = self.0.support();
        if *x < lo || *x > hi {
            0.0
        } else {
            self.0.pdf(*x)
        }
    }
}

/// Probabilistic inverse of an ambiguous interval: `u = a + γ(b−a)`, with
/// `|J g⁻¹| = b − a`.
pub fn interval_inverse(a: f64, b: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(a < b) {
        return Err(Error::DegenerateInterval(a, b));
    }
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidArgument(format!("interval [{a}, {b}) not inside [0,1]")));
    }
    let mut u = a + gamma * (b - a);
    if u >= b {
        u = f64::from_bits(b.to_bits() - 1).max(a);
    }
    Ok((clamp_unit(u), b - a))
}

/// Auxiliary uniforms consumed while resolving ambiguities of one inversion.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuxVector(pub Vec<f64>);

impl AuxVector {
    pub fn draw(rng: &mut SampleStream, m: usize) -> Self {
        Self((0..m).map(|_| rng.uniform()).collect())
    }
}

/// Component probabilities of a sampling mixture whose selector dimension
/// is bracketed by the cumulative weights.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSpec {
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    pub selector_dim: usize,
}

impl MixtureSpec {
    pub fn new(weights: Vec<f64>, selector_dim: usize) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("mixture needs at least one component".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mixture weights must be positive, got {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights must sum to 1, got {sum}"
            )));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self {
            weights,
            cumulative,
            selector_dim,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Selector interval `[Σα_{<t}, Σα_{≤t})` of component `t`.
    pub fn interval(&self, t: usize) -> (f64, f64) {
        let lo = if t == 0 { 0.0 } else { self.cumulative[t - 1] };
        (lo, self.cumulative[t])
    }

    /// Component selected by the selector variate.
    pub fn select(&self, u1: f64) -> usize {
        self.cumulative
            .iter()
            .position(|&c| u1 < c)
            .unwrap_or(self.weights.len() - 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSample<S> {
    pub t: usize,
    /// `jac_inv_det` is the extended inverse Jacobian `α_t·p_t(x)`.
    pub result: BlockResult<S>,
}

/// Splits `u` into the selector and the component's own dimensions.
fn component_uniforms(spec: &MixtureSpec, u: &[f64], n: usize, buf: &mut [f64; 8]) -> usize {
    let mut k = 0;
    for (d, &v) in u.iter().enumerate().take(n + 1) {
        if d != spec.selector_dim {
            buf[k] = v;
            k += 1;
        }
    }
    k
}

/// Selects the component with the selector dimension and samples it with
/// the remaining dimensions.
pub fn mixture_forward<B: InvertibleBlock>(
    spec: &MixtureSpec,
    blocks: &[B],
    u: &[f64],
) -> Option<MixtureSample<B::Sample>> {
    debug_assert_eq!(spec.len(), blocks.len());
    let t = spec.select(u[spec.selector_dim]);
    let block = &blocks[t];
    let mut buf = [0.0; 8];
    let n = component_uniforms(spec, u, block.dims(), &mut buf);
    let (x, p) = block.sample(&buf[..n])?;
    Some(MixtureSample {
        t,
        result: BlockResult {
            sample: x,
            jac_inv_det: spec.weights[t] * p,
            consumed: 1 + block.dims(),
            interval: Some(spec.interval(t)),
        },
    })
}

/// `T(t) = α_t p_t / Σ_s α_s p_s` from component densities at the sample.
pub fn selection_distribution(weights: &[f64], pdfs: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != pdfs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights vs {} densities",
            weights.len(),
            pdfs.len()
        )));
    }
    let scaled: Vec<f64> = weights
        .iter()
        .zip(pdfs)
        .map(|(a, p)| if *p > 0.0 && p.is_finite() { a * p } else { 0.0 })
        .collect();
    let total: f64 = scaled.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::NonInvertible("no mixture component can produce the sample".into()));
    }
    Ok(scaled.into_iter().map(|v| v / total).collect())
}

pub fn mixture_selection_distribution<B: InvertibleBlock>(
    spec: &MixtureSpec,
    blocks: &[B],
    x: &B::Sample,
) -> Result<Vec<f64>> {
    let pdfs: Vec<f64> = blocks.iter().map(|b| b.pdf(x)).collect();
    selection_distribution(&spec.weights, &pdfs)
}

/// Mixture density `Σ_s α_s p_s(x)`.
pub fn mixture_pdf<B: InvertibleBlock>(spec: &MixtureSpec, blocks: &[B], x: &B::Sample) -> f64 {
    spec.weights
        .iter()
        .zip(blocks)
        .map(|(a, b)| a * b.pdf(x))
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureInverse {
    /// Selector at `selector_dim`, component dimensions after it.
    pub u: Vec<f64>,
    pub t: usize,
    /// `α_t·|J g_t⁻¹(x)|`.
    pub jac_inv_det: f64,
    /// `T(t)` of the chosen component.
    pub selection_prob: f64,
}

impl MixtureInverse {
    /// Per-step acceptance factor `|J g⁻¹| / T(t)`, equal to the mixture
    /// density at the sample.
    pub fn step_factor(&self) -> f64 {
        self.jac_inv_det / self.selection_prob
    }
}

/// Inverts `x` assuming component `t` produced it; `gamma1` places the
/// selector inside the component's interval.
pub fn mixture_inverse_with<B: InvertibleBlock>(
    spec: &MixtureSpec,
    blocks: &[B],
    x: &B::Sample,
    t: usize,
    gamma1: f64,
) -> Result<MixtureInverse> {
    let selection = mixture_selection_distribution(spec, blocks, x)?;
    if selection[t] <= 0.0 {
        return Err(Error::NonInvertible(format!("component {t} cannot produce the sample")));
    }
    let block = &blocks[t];
    let mut sub = [0.0; 8];
    let p = block.invert(x, &mut sub[..block.dims()])?;
    let (lo, hi) = spec.interval(t);
    let (u1, _) = interval_inverse(lo, hi, gamma1)?;
    let mut u = Vec::with_capacity(1 + block.dims());
    let mut k = 0;
    for d in 0..=block.dims() {
        if d == spec.selector_dim {
            u.push(u1);
        } else {
            u.push(sub[k]);
            k += 1;
        }
    }
    Ok(MixtureInverse {
        u,
        t,
        jac_inv_det: spec.weights[t] * p,
        selection_prob: selection[t],
    })
}

/// Probabilistic mixture inverse: draws `t ~ T(t)` and inverts with it.
pub fn mixture_inverse<B: InvertibleBlock>(
    spec: &MixtureSpec,
    blocks: &[B],
    x: &B::Sample,
    gamma1: f64,
    rng: &mut SampleStream,
) -> Result<MixtureInverse> {
    let selection = mixture_selection_distribution(spec, blocks, x)?;
    let t = rng
        .discrete(&selection)
        .ok_or_else(|| Error::NonInvertible("empty selection distribution".into()))?;
    mixture_inverse_with(spec, blocks, x, t, gamma1)
}

/// Product of the per-block inverse Jacobians; the empty chain yields 1.
pub fn chain_jacobian<S>(results: &[BlockResult<S>]) -> Result<f64> {
    jacobian_product(results.iter().map(|r| r.jac_inv_det))
}

pub fn jacobian_product(factors: impl IntoIterator<Item = f64>) -> Result<f64> {
    let mut product = 1.0;
    for f in factors {
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::Numeric(format!("block Jacobian {f} is not positive and finite")));
        }
        product *= f;
    }
    Ok(product)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `p(x) = 2(1−x)` on [0,1].
    struct Triangular;

    impl Distribution1D for Triangular {
        fn pdf(&self, x: f64) -> f64 {
            2.0 * (1.0 - x)
        }
        fn cdf(&self, x: f64) -> f64 {
            1.0 - (1.0 - x) * (1.0 - x)
        }
        fn inverse_cdf(&self, u: f64) -> f64 {
            1.0 - (1.0 - u).sqrt()
        }
    }

    /// Same density, CDF only: exercises the bisection fallback.
    struct TriangularNumeric;

    impl Distribution1D for TriangularNumeric {
        fn pdf(&self, x: f64) -> f64 {
            2.0 * (1.0 - x)
        }
        fn cdf(&self, x: f64) -> f64 {
            1.0 - (1.0 - x) * (1.0 - x)
        }
    }

    /// `p(x) = 2x`.
    struct Linear;

    impl Distribution1D for Linear {
        fn pdf(&self, x: f64) -> f64 {
            2.0 * x
        }
        fn cdf(&self, x: f64) -> f64 {
            x * x
        }
        fn inverse_cdf(&self, u: f64) -> f64 {
            u.sqrt()
        }
    }

    #[test]
    fn triangular_forward_plug_in() {
        let r = inversion_block_forward(&Triangular, 0.75);
        assert!((r.sample - 0.5).abs() < 1e-15);
        assert!((r.jac_inv_det - 1.0).abs() < 1e-15);
        let r = inversion_block_forward(&Triangular, 0.0);
        assert_eq!(r.sample, 0.0);
        assert_eq!(r.jac_inv_det, 2.0);
    }

    #[test]
    fn triangular_inverse_plug_in_and_zero_density_edge() {
        let (u, j) = inversion_block_inverse(&Triangular, 0.5).unwrap();
        assert!((u - 0.75).abs() < 1e-15);
        assert!((j - 1.0).abs() < 1e-15);
        assert!(matches!(
            inversion_block_inverse(&Triangular, 1.0),
            Err(Error::NonInvertible(_))
        ));
        assert!(inversion_block_inverse(&Triangular, 1.5).is_err());
    }

    #[test]
    fn round_trips_closed_form_and_bisection() {
        let mut rng = SampleStream::new(11);
        for _ in 0..100_000 {
            let u = rng.uniform() * 0.999_999;
            let x = Triangular.inverse_cdf(u);
            assert!((Triangular.cdf(x) - u).abs() < 1e-12);
            let (u2, _) = inversion_block_inverse(&Triangular, x).unwrap();
            assert!((u2 - u).abs() < 1e-9);
        }
        for _ in 0..2_000 {
            let u = rng.uniform() * 0.999;
            let x = TriangularNumeric.inverse_cdf(u);
            assert!((x - Triangular.inverse_cdf(u)).abs() < 1e-9);
        }
    }

    #[test]
    fn interval_inverse_plug_ins() {
        let (u, j) = interval_inverse(1.0 / 3.0, 2.0 / 3.0, 0.5).unwrap();
        assert!((u - 0.5).abs() < 1e-15 && (j - 1.0 / 3.0).abs() < 1e-15);
        let (u, j) = interval_inverse(0.0, 1.0, 0.37).unwrap();
        assert_eq!((u, j), (0.37, 1.0));
        let (u, j) = interval_inverse(0.2, 0.5, 0.0).unwrap();
        assert!((u - 0.2).abs() < 1e-15 && (j - 0.3).abs() < 1e-15);
        assert!(matches!(interval_inverse(0.5, 0.5, 0.1), Err(Error::DegenerateInterval(..))));
        assert!(interval_inverse(0.7, 0.2, 0.1).is_err());
    }

    #[test]
    fn interval_inverse_stays_inside() {
        let (u, _) = interval_inverse(0.2, 0.3, 1.0 - f64::EPSILON).unwrap();
        assert!((0.2..0.3).contains(&u));
    }

    #[test]
    fn mixture_bracketing() {
        let spec = MixtureSpec::new(vec![0.6, 0.4], 0).unwrap();
        assert_eq!(spec.select(0.8), 1);
        assert_eq!(spec.select(0.59), 0);
        let blocks: [InversionBlock<&dyn Distribution1D>; 2] = [InversionBlock(&Triangular), InversionBlock(&Linear)];
        let s = mixture_forward(&spec, &blocks, &[0.8, 0.25]).unwrap();
        assert_eq!(s.t, 1);
        assert!((s.result.sample - 0.5).abs() < 1e-15);
        assert_eq!(s.result.interval, Some((0.6, 1.0)));
        assert!((s.result.jac_inv_det - 0.4 * 1.0).abs() < 1e-15);

        let single = MixtureSpec::new(vec![1.0], 0).unwrap();
        for u1 in [0.0, 0.3, 0.999] {
            assert_eq!(single.select(u1), 0);
        }
    }

    #[test]
    fn selection_distribution_plug_ins() {
        let t = selection_distribution(&[0.5, 0.5], &[2.0, 0.0]).unwrap();
        assert_eq!(t, vec![1.0, 0.0]);
        let t = selection_distribution(&[0.6, 0.4], &[1.0, 2.0]).unwrap();
        assert!((t[0] - 3.0 / 7.0).abs() < 1e-15 && (t[1] - 4.0 / 7.0).abs() < 1e-15);
        let t = selection_distribution(&[0.5, 0.5], &[1.3, 1.3]).unwrap();
        assert_eq!(t, vec![0.5, 0.5]);
        assert!(matches!(
            selection_distribution(&[0.5, 0.5], &[0.0, 0.0]),
            Err(Error::NonInvertible(_))
        ));
    }

    #[test]
    fn mixture_inverse_forced_component() {
        let spec = MixtureSpec::new(vec![0.6, 0.4], 0).unwrap();
        let blocks: [InversionBlock<&dyn Distribution1D>; 2] = [InversionBlock(&Triangular), InversionBlock(&Linear)];
        let inv = mixture_inverse_with(&spec, &blocks, &0.5, 1, 0.5).unwrap();
        assert!((inv.u[0] - 0.8).abs() < 1e-15);
        assert!((inv.u[1] - 0.25).abs() < 1e-15);
        assert!((inv.jac_inv_det - 0.4).abs() < 1e-15);
        // Σ α_s p_s(0.5) = 0.6·1 + 0.4·1
        assert!((inv.step_factor() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_mixture_matches_plain_inverse() {
        let spec = MixtureSpec::new(vec![1.0], 0).unwrap();
        let blocks = [InversionBlock(Triangular)];
        let mut rng = SampleStream::new(3);
        for _ in 0..1000 {
            let x = rng.uniform() * 0.99;
            let g = rng.uniform();
            let inv = mixture_inverse(&spec, &blocks, &x, g, &mut rng).unwrap();
            let (u, j) = inversion_block_inverse(&Triangular, x).unwrap();
            assert_eq!(inv.u, vec![g, u]);
            assert_eq!(inv.jac_inv_det, j);
        }
    }

    #[test]
    fn mixture_round_trip_and_pdf_recovery() {
        let mut rng = SampleStream::new(5);
        for _ in 0..100_000 {
            let a = 0.05 + 0.9 * rng.uniform();
            let spec = MixtureSpec::new(vec![a, 1.0 - a], 0).unwrap();
            let blocks: [InversionBlock<&dyn Distribution1D>; 2] = [InversionBlock(&Triangular), InversionBlock(&Linear)];
            let u = [rng.uniform(), rng.uniform() * 0.999 + 0.0005];
            let Some(s) = mixture_forward(&spec, &blocks, &u) else { continue };
            let x = s.result.sample;
            let g = rng.uniform();
            let inv = mixture_inverse(&spec, &blocks, &x, g, &mut rng).unwrap();
            let again = mixture_forward(&spec, &blocks, &inv.u).unwrap();
            assert_eq!(again.t, inv.t);
            assert!((again.result.sample - x).abs() < 1e-9);
            let mix = a * Triangular.pdf(x) + (1.0 - a) * Linear.pdf(x);
            assert!((inv.step_factor() - mix).abs() < 1e-9 * mix.max(1.0));
        }
    }

    #[test]
    fn empirical_selection_frequencies() {
        let spec = MixtureSpec::new(vec![0.2, 0.5, 0.3], 0).unwrap();
        let mut rng = SampleStream::new(17);
        let n = 1_000_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[spec.select(rng.uniform())] += 1;
        }
        for (c, a) in counts.iter().zip(spec.weights()) {
            let f = *c as f64 / n as f64;
            let sigma = (a * (1.0 - a) / n as f64).sqrt();
            assert!((f - a).abs() < 3.0 * sigma, "{f} vs {a}");
        }
    }

    #[test]
    fn chain_jacobian_products() {
        let empty: [BlockResult<f64>; 0] = [];
        assert_eq!(chain_jacobian(&empty).unwrap(), 1.0);
        let r = |j| BlockResult {
            sample: 0.0,
            jac_inv_det: j,
            consumed: 1,
            interval: None,
        };
        assert_eq!(chain_jacobian(&[r(2.0), r(0.5)]).unwrap(), 1.0);
        assert!(chain_jacobian(&[r(2.0), r(f64::INFINITY)]).is_err());
        assert!(chain_jacobian(&[r(0.0)]).is_err());
    }
}
