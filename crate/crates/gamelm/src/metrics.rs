//! Regression evaluation metrics and k-fold cross-validation splitting.

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("actual and predicted vectors differ in length ({actual} vs {predicted})")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("actual values are constant, variance ratios are undefined")]
    ConstantTarget,
    #[error("invalid fold count {k} for {n} samples (need 2 <= k <= n)")]
    InvalidK { k: usize, n: usize },
}

/// The four regression metrics: root-mean-square error, mean absolute error,
/// and the unexplained- and explained-variation ratios. The ratios are absent
/// when the actual values are (numerically) constant.
#[derive(Clone, Copy, Debug)]
pub struct MetricsReport {
    pub rmse: f64,
    pub mae: f64,
    pub sse_sst: Option<f64>,
    pub ssr_sst: Option<f64>,
    pub n: usize,
}

impl MetricsReport {
    /// Both variance ratios, or [`MetricsError::ConstantTarget`] if they were
    /// undefined for this sample.
    pub fn ratios(&self) -> Result<(f64, f64), MetricsError> {
        match (self.sse_sst, self.ssr_sst) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(MetricsError::ConstantTarget),
        }
    }

    /// CSV fields `rmse,mae,sse_sst,ssr_sst`, with empty cells for absent ratios.
    pub fn csv_fields(&self) -> String {
        let ratio = |r: Option<f64>| r.map(|v| format!("{v:e}")).unwrap_or_default();
        format!(
            "{:e},{:e},{},{}",
            self.rmse,
            self.mae,
            ratio(self.sse_sst),
            ratio(self.ssr_sst)
        )
    }
}

/// Evaluates predictions against actual values:
///
/// ```text
/// RMSE    = sqrt(sum (y - yhat)^2 / n)
/// MAE     = sum |y - yhat| / n
/// SSE/SST = sum (yhat - y)^2    / sum (y - mean(y))^2
/// SSR/SST = sum (yhat - mean(y))^2 / sum (y - mean(y))^2
/// ```
pub fn evaluate(y: &Array1<f64>, yhat: &Array1<f64>) -> Result<MetricsReport, MetricsError> {
    if y.len() != yhat.len() {
        return Err(MetricsError::LengthMismatch {
            actual: y.len(),
            predicted: yhat.len(),
        });
    }
    if y.len() < 2 {
        return Err(MetricsError::TooFewSamples(y.len()));
    }
    let n = y.len() as f64;
    let mean = y.sum() / n;

    let mut sse = 0.0;
    let mut abs_sum = 0.0;
    let mut ssr = 0.0;
    let mut sst = 0.0;
    for (&yi, &pi) in y.iter().zip(yhat.iter()) {
        let err = pi - yi;
        sse += err * err;
        abs_sum += err.abs();
        ssr += (pi - mean) * (pi - mean);
        sst += (yi - mean) * (yi - mean);
    }

    let (sse_sst, ssr_sst) = if sst > 1e-15 {
        (Some(sse / sst), Some(ssr / sst))
    } else {
        (None, None)
    };
    Ok(MetricsReport {
        rmse: (sse / n).sqrt(),
        mae: abs_sum / n,
        sse_sst,
        ssr_sst,
        n: y.len(),
    })
}

/// Splits `0..n` into `k` disjoint test folds after a seeded shuffle and
/// returns `(train_indices, test_indices)` per fold. Fold sizes differ by at
/// most one; every index lands in exactly one test fold.
pub fn kfold_split(
    n: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>, MetricsError> {
    if k < 2 || k > n {
        return Err(MetricsError::InvalidK { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let base = n / k;
    let remainder = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < remainder);
        let test: Vec<usize> = order[start..start + size].to_vec();
        let train: Vec<usize> = order[..start]
            .iter()
            .chain(&order[start + size..])
            .copied()
            .collect();
        folds.push((train, test));
        start += size;
    }
    Ok(folds)
}
