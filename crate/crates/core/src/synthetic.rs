//! Seeded synthetic panels with a calm block-structured regime followed by a
//! strongly co-moving regime.

use chrono::{Datelike, NaiveDate, Weekday};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::ingest::{IndexMeta, PricePanel, REGION_CODES};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoRegimeSpec {
    pub num_indices: usize,
    pub num_blocks: usize,
    /// Return days per regime.
    pub regime_days: [usize; 2],
    /// Within-block correlation in the calm regime.
    pub block_correlation: f64,
    /// Correlation between every pair in the stressed regime.
    pub global_correlation: f64,
    pub volatility: f64,
    pub seed: u64,
}

impl Default for TwoRegimeSpec {
    fn default() -> Self {
        TwoRegimeSpec {
            num_indices: 30,
            num_blocks: 3,
            regime_days: [500, 500],
            block_correlation: 0.3,
            global_correlation: 0.7,
            volatility: 0.01,
            seed: 20_080_915,
        }
    }
}

impl TwoRegimeSpec {
    pub fn num_return_days(&self) -> usize {
        self.regime_days[0] + self.regime_days[1]
    }

    pub fn block_of(&self, i: usize) -> usize {
        i * self.num_blocks / self.num_indices
    }
}

/// Consecutive weekdays starting at `start` (or the next weekday).
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

/// One-factor log returns, `N x days`; the factor is per block in the first
/// regime and shared in the second.
pub fn two_regime_returns(spec: &TwoRegimeSpec) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.num_indices;
    let days = spec.num_return_days();
    let mut r = Array2::zeros((n, days));
    for t in 0..days {
        let (rho, groups) = if t < spec.regime_days[0] {
            (spec.block_correlation, spec.num_blocks)
        } else {
            (spec.global_correlation, 1)
        };
        let factors: Vec<f64> = (0..groups).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
        for i in 0..n {
            let f = if groups == 1 { factors[0] } else { factors[spec.block_of(i)] };
            let e: f64 = StandardNormal.sample(&mut rng);
            r[[i, t]] = spec.volatility * (a * f + b * e);
        }
    }
    r
}

/// Price panel (starting at 100) whose log returns follow
/// [`two_regime_returns`]; metadata cycles through the valid region codes.
pub fn two_regime_panel<T: Scalar>(spec: &TwoRegimeSpec) -> Result<PricePanel<T>> {
    let r = two_regime_returns(spec);
    let (n, days) = r.dim();
    let mut prices = Array2::<T>::zeros((n, days + 1));
    for i in 0..n {
        let mut log_p = 100f64.ln();
        prices[[i, 0]] = T::lit(100.0);
        for t in 0..days {
            log_p += r[[i, t]];
            prices[[i, t + 1]] = T::lit(log_p.exp());
        }
    }
    let meta = (0..n)
        .map(|i| {
            let mut m = IndexMeta::new(
                &format!("IDX{i:02}"),
                &format!("C{i:02}"),
                REGION_CODES[spec.block_of(i) % REGION_CODES.len()],
            );
            m.country = format!("Country {i:02}");
            m
        })
        .collect();
    let start = NaiveDate::from_ymd_opt(2004, 1, 5).expect("valid date");
    PricePanel::from_complete(business_days(start, days + 1), prices, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr(r: &Array2<f64>, i: usize, j: usize, range: std::ops::Range<usize>) -> f64 {
        let a: Vec<f64> = range.clone().map(|t| r[[i, t]]).collect();
        let b: Vec<f64> = range.map(|t| r[[j, t]]).collect();
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn regimes_have_planted_correlations() {
        let spec = TwoRegimeSpec::default();
        let r = two_regime_returns(&spec);
        let mut within = Vec::new();
        let mut across = Vec::new();
        let mut stressed = Vec::new();
        for i in 0..30 {
            for j in (i + 1)..30 {
                let c = corr(&r, i, j, 0..500);
                if spec.block_of(i) == spec.block_of(j) {
                    within.push(c);
                } else {
                    across.push(c);
                }
                stressed.push(corr(&r, i, j, 500..1000));
            }
        }
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((avg(&within) - 0.3).abs() < 0.05);
        assert!(avg(&across).abs() < 0.05);
        assert!((avg(&stressed) - 0.7).abs() < 0.05);
    }

    #[test]
    fn panel_is_seeded_and_complete() {
        let spec = TwoRegimeSpec::default();
        let a = two_regime_panel::<f64>(&spec).unwrap();
        let b = two_regime_panel::<f64>(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_days(), 1001);
        assert_eq!(a.missing_count(), 0);
        assert!(a.dates.windows(2).all(|w| w[0] < w[1]));
    }
}
