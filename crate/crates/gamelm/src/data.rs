//! CSV dataset ingestion, min-max scaling and train/test splitting.

use std::fs;
use std::io;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    FileNotFound {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: no parseable numeric rows")]
    NoNumericRows { path: String },
    #[error("unknown target column `{0}`")]
    UnknownColumn(String),
    #[error("column counts differ: {left} vs {right}")]
    ColumnMismatch { left: usize, right: usize },
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("dataset is empty")]
    Empty,
}

/// Which column of the file holds the regression target.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum TargetColumn {
    /// The rightmost column.
    #[default]
    Last,
    Index(usize),
    Name(String),
}

/// A numeric regression dataset. Rows that failed to parse were dropped at
/// load time and are counted in `dropped_rows`.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub targets: Array1<f64>,
    pub feature_names: Vec<String>,
    pub source: String,
    pub dropped_rows: usize,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Writes the dataset back out in the same comma-separated format, with a
    /// header row and the target as the last column.
    pub fn write_csv(&self, w: &mut impl io::Write) -> io::Result<()> {
        writeln!(w, "{},target", self.feature_names.join(","))?;
        for (row, target) in self.features.rows().into_iter().zip(self.targets.iter()) {
            for value in row.iter() {
                write!(w, "{value:e},")?;
            }
            writeln!(w, "{target:e}")?;
        }
        Ok(())
    }

    /// Dataset restricted to the given row indices.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            targets: self.targets.select(Axis(0), indices),
            feature_names: self.feature_names.clone(),
            source: self.source.clone(),
            dropped_rows: 0,
        }
    }
}

/// Per-column (min, max) ranges fitted on training data, for features and
/// target alike.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaler {
    pub feature_ranges: Vec<(f64, f64)>,
    pub target_range: (f64, f64),
}

impl Scaler {
    /// Fits ranges on the given dataset.
    pub fn fit(train: &Dataset) -> Result<Self, DataError> {
        if train.n_samples() == 0 {
            return Err(DataError::Empty);
        }
        let feature_ranges = (0..train.n_features())
            .map(|j| column_range(train.features.column(j).iter()))
            .collect();
        let target_range = column_range(train.targets.iter());
        Ok(Self { feature_ranges, target_range })
    }

    /// Maps one value of column `j` into the fitted unit range. Constant
    /// columns map to 0; values outside the fitted range are not clipped.
    fn scale(range: (f64, f64), v: f64) -> f64 {
        let span = range.1 - range.0;
        if span > 0.0 {
            (v - range.0) / span
        } else {
            0.0
        }
    }

    fn unscale(range: (f64, f64), v: f64) -> f64 {
        v * (range.1 - range.0) + range.0
    }

    pub fn transform(&self, ds: &Dataset) -> Result<Dataset, DataError> {
        if ds.n_features() != self.feature_ranges.len() {
            return Err(DataError::ColumnMismatch {
                left: self.feature_ranges.len(),
                right: ds.n_features(),
            });
        }
        let mut features = ds.features.clone();
        for (j, &range) in self.feature_ranges.iter().enumerate() {
            features
                .column_mut(j)
                .mapv_inplace(|v| Self::scale(range, v));
        }
        let targets = ds.targets.mapv(|v| Self::scale(self.target_range, v));
        Ok(Dataset {
            features,
            targets,
            feature_names: ds.feature_names.clone(),
            source: ds.source.clone(),
            dropped_rows: ds.dropped_rows,
        })
    }

    pub fn inverse_transform_features(&self, features: &Array2<f64>) -> Array2<f64> {
        let mut out = features.clone();
        for (j, &range) in self.feature_ranges.iter().enumerate() {
            out.column_mut(j).mapv_inplace(|v| Self::unscale(range, v));
        }
        out
    }

    pub fn inverse_transform_target(&self, targets: &Array1<f64>) -> Array1<f64> {
        targets.mapv(|v| Self::unscale(self.target_range, v))
    }
}

fn column_range<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Loads a comma-separated numeric file. Rows with missing or unparseable
/// cells are dropped and counted. The target column defaults to the last one.
pub fn load_csv(
    path: impl AsRef<Path>,
    target: &TargetColumn,
    has_header: bool,
) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DataError::FileNotFound {
        path: path.display().to_string(),
        source,
    })?;
    let source = path.display().to_string();

    let mut lines = text.lines();
    let mut column_names: Option<Vec<String>> = None;
    if has_header {
        match lines.next() {
            Some(header) => {
                column_names =
                    Some(header.split(',').map(|s| s.trim().to_string()).collect());
            }
            None => return Err(DataError::NoNumericRows { path: source }),
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0usize;
    let mut width: Option<usize> = column_names.as_ref().map(|n| n.len());
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Option<Vec<f64>> = line
            .split(',')
            .map(|cell| cell.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        match parsed {
            Some(values) if width.is_none_or(|w| w == values.len()) => {
                width.get_or_insert(values.len());
                rows.push(values);
            }
            _ => dropped += 1,
        }
    }
    if rows.is_empty() {
        return Err(DataError::NoNumericRows { path: source });
    }

    let width = width.expect("set by first parsed row");
    let names = column_names
        .unwrap_or_else(|| (0..width).map(|j| format!("col{j}")).collect());
    let target_idx = match target {
        TargetColumn::Last => width - 1,
        TargetColumn::Index(i) => {
            if *i >= width {
                return Err(DataError::UnknownColumn(i.to_string()));
            }
            *i
        }
        TargetColumn::Name(name) => names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| DataError::UnknownColumn(name.clone()))?,
    };

    let n = rows.len();
    let d = width - 1;
    let mut features = Array2::zeros((n, d));
    let mut targets = Array1::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        let mut k = 0;
        for (j, &v) in row.iter().enumerate() {
            if j == target_idx {
                targets[i] = v;
            } else {
                features[(i, k)] = v;
                k += 1;
            }
        }
    }
    let feature_names = names
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != target_idx)
        .map(|(_, n)| n.clone())
        .collect();

    Ok(Dataset {
        features,
        targets,
        feature_names,
        source,
        dropped_rows: dropped,
    })
}

/// True when the first line of the file does not parse as numbers, i.e. it
/// looks like a header row.
pub fn detect_header(path: impl AsRef<Path>) -> Result<bool, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DataError::FileNotFound {
        path: path.display().to_string(),
        source,
    })?;
    Ok(text.lines().next().is_some_and(|line| {
        line.split(',').any(|cell| cell.trim().parse::<f64>().is_err())
    }))
}

/// Fits the per-column unit-range scaler on the training split only and
/// applies it to both splits. Test values outside the training range are left
/// unclipped.
pub fn fit_transform_minmax(
    train: &Dataset,
    test: &Dataset,
) -> Result<(Dataset, Dataset, Scaler), DataError> {
    if train.n_features() != test.n_features() {
        return Err(DataError::ColumnMismatch {
            left: train.n_features(),
            right: test.n_features(),
        });
    }
    let scaler = Scaler::fit(train)?;
    let train_scaled = scaler.transform(train)?;
    let test_scaled = scaler.transform(test)?;
    Ok((train_scaled, test_scaled, scaler))
}

/// Seeded shuffle-then-split. The test part receives `ceil(n * test_fraction)`
/// rows, the train part the rest.
pub fn train_test_split(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::InvalidFraction(test_fraction));
    }
    let n = ds.n_samples();
    if n == 0 {
        return Err(DataError::Empty);
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_test = ((n as f64) * test_fraction).ceil() as usize;
    let n_test = n_test.clamp(1, n.saturating_sub(1).max(1));
    let (test_idx, train_idx) = order.split_at(n_test);
    Ok((ds.select(train_idx), ds.select(test_idx)))
}
