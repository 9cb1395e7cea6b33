//! Goodness-of-fit statistics for histograms produced by Markov chains.

use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Smallest expected count per bin before neighbouring bins are merged.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Upper-tail probability of the chi-square distribution.
pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return if statistic > 0.0 { 0.0 } else { 1.0 };
    }
    if statistic <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof as f64 / 2.0, statistic / 2.0)
}

/// Pearson chi-square of `observed` against `expected`. Both histograms are
/// normalized and scaled to `samples` counts; adjacent bins are merged until
/// each carries at least [`MIN_EXPECTED`] expected counts.
pub fn chi_square(observed: &[f64], expected: &[f64], samples: f64) -> Result<ChiSquare> {
    if observed.is_empty() || expected.is_empty() {
        return Err(Error::InvalidArgument("empty histogram".into()));
    }
    if observed.len() != expected.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} observed vs {} expected bins",
            observed.len(),
            expected.len()
        )));
    }
    if observed.iter().chain(expected).any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("histogram entries must be finite and nonnegative".into()));
    }
    let so: f64 = observed.iter().sum();
    let se: f64 = expected.iter().sum();
    if !(so > 0.0) || !(se > 0.0) {
        return Err(Error::InvalidArgument("empty histogram".into()));
    }
    if !(samples > 0.0) || !samples.is_finite() {
        return Err(Error::InvalidArgument(format!("sample count {samples}")));
    }

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (o, e) in observed.iter().zip(expected) {
        o_acc += o / so * samples;
        e_acc += e / se * samples;
        if e_acc >= MIN_EXPECTED {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }

    let mut statistic = 0.0;
    for &(o, e) in &cells {
        if e > 0.0 {
            statistic += (o - e) * (o - e) / e;
        } else if o > 0.0 {
            statistic = f64::INFINITY;
        }
    }
    let dof = cells.len().saturating_sub(1);
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
    })
}

/// Mean design effect of a histogram estimated from (nearly) equally sized
/// batches.
///
/// For each bin the variance of the batch fractions is compared with the
/// binomial variance of independent draws; the ratio averaged over bins
/// (first-order Rao–Scott correction) divides the nominal sample count to
/// give an effective one.
pub fn design_effect(batches: &[Vec<f64>]) -> Result<f64> {
    if batches.len() < 2 {
        return Err(Error::InvalidArgument("design effect needs at least two batches".into()));
    }
    let bins = batches[0].len();
    if bins == 0 || batches.iter().any(|b| b.len() != bins) {
        return Err(Error::DimensionMismatch("batches must share one binning".into()));
    }
    let sizes: Vec<f64> = batches.iter().map(|b| b.iter().sum()).collect();
    let m = sizes.iter().sum::<f64>() / sizes.len() as f64;
    if !(m > 0.0) || sizes.iter().any(|s| (s - m).abs() > 1e-2 * m) {
        let (lo, hi) = sizes.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(*s), hi.max(*s)));
        return Err(Error::InvalidArgument(format!(
            "batches must be nonempty and equally sized (sizes {lo}..{hi})"
        )));
    }
    let nb = batches.len() as f64;
    let mut weighted = 0.0;
    let mut weight = 0.0;
    for bin in 0..bins {
        let fractions: Vec<f64> = batches.iter().zip(&sizes).map(|(b, s)| b[bin] / s).collect();
        let mean = fractions.iter().sum::<f64>() / nb;
        if mean <= 0.0 || mean >= 1.0 {
            continue;
        }
        let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (nb - 1.0);
        let iid = mean * (1.0 - mean) / m;
        weighted += (1.0 - mean) * var / iid;
        weight += 1.0 - mean;
    }
    if weight == 0.0 {
        return Err(Error::InvalidArgument("no bin has interior mass".into()));
    }
    Ok((weighted / weight).max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SampleStream;

    #[test]
    fn identical_histograms() {
        let h = [3.0, 5.0, 9.0, 11.0];
        let r = chi_square(&h, &h, 1000.0).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn hand_computed_three_bins() {
        let r = chi_square(&[10.0, 20.0, 30.0], &[20.0, 20.0, 20.0], 60.0).unwrap();
        assert!((r.statistic - 10.0).abs() < 1e-12);
        assert_eq!(r.dof, 2);
        // two degrees of freedom: the survival function is exp(−x/2)
        let oracle = (-10.0f64 / 2.0).exp();
        assert!((r.p_value - oracle).abs() < 1e-12);
        assert!((r.p_value - 0.00674).abs() < 5e-6);
    }

    #[test]
    fn sparse_bins_are_merged() {
        let expected = [1.0, 1.0, 1.0, 1.0, 96.0];
        let r = chi_square(&expected, &expected, 20.0).unwrap();
        assert!(r.dof < 4);
    }

    #[test]
    fn empty_histograms_are_errors() {
        assert!(chi_square(&[], &[], 10.0).is_err());
        assert!(chi_square(&[0.0, 0.0], &[1.0, 1.0], 10.0).is_err());
        assert!(chi_square(&[1.0], &[1.0, 1.0], 10.0).is_err());
    }

    #[test]
    fn survival_function_odd_dof() {
        // one degree of freedom: P(χ² > 3.841459) = 0.05
        assert!((chi_square_sf(3.841_458_820_694_124, 1) - 0.05).abs() < 1e-9);
    }

    #[test]
    fn independent_draws_have_unit_design_effect() {
        let mut rng = SampleStream::new(4);
        let batches: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let mut h = vec![0.0; 10];
                for _ in 0..2000 {
                    h[rng.below(10)] += 1.0;
                }
                h
            })
            .collect();
        let d = design_effect(&batches).unwrap();
        assert!(d < 1.5, "{d}");
    }

    #[test]
    fn sticky_draws_inflate_design_effect() {
        let mut rng = SampleStream::new(4);
        let mut state = 0;
        let batches: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let mut h = vec![0.0; 10];
                for _ in 0..2000 {
                    if rng.uniform() < 0.01 {
                        state = rng.below(10);
                    }
                    h[state] += 1.0;
                }
                h
            })
            .collect();
        let d = design_effect(&batches).unwrap();
        assert!(d > 50.0, "{d}");
    }
}
