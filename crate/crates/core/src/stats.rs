//! Goodness-of-fit helpers shared by the statistical checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Bins whose expected count falls below this are pooled together.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquare {
    /// True when the sample is consistent with the model at significance `alpha`.
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Pearson chi-square test of observed counts against model probabilities.
///
/// Observations in a zero-probability bin reject outright.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(
        observed.len(),
        probs.len(),
        "observed and model lengths differ"
    );
    let n: u64 = observed.iter().sum();
    let n = n as f64;
    if observed.iter().zip(probs).any(|(o, p)| *p <= 0.0 && *o > 0) {
        return ChiSquare {
            statistic: f64::INFINITY,
            dof: 0,
            p_value: 0.0,
        };
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_o, mut pooled_e) = (0.0, 0.0);
    for (o, p) in observed.iter().zip(probs) {
        if *p <= 0.0 {
            continue;
        }
        let e = n * p;
        if e < MIN_EXPECTED {
            pooled_o += *o as f64;
            pooled_e += e;
        } else {
            bins.push((*o as f64, e));
        }
    }
    if pooled_e > 0.0 {
        bins.push((pooled_o, pooled_e));
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    if bins.len() < 2 {
        return ChiSquare {
            statistic,
            dof: 0,
            p_value: 1.0,
        };
    }
    let dof = bins.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    ChiSquare {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    }
}

/// Standard error of a binomial proportion `p` estimated from `n` trials.
pub fn binomial_standard_error(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
