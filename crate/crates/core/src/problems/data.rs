use std::path::{Path, PathBuf};

use crate::par::{gaussian_vector, seeded_rng};
use crate::{Error, Matrix, Result, Vector};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Loss {
    /// `½(s − y)²`.
    Quadratic,
    /// `log(1 + exp(−ys))` with `y ∈ {−1, +1}`.
    Logistic,
}

impl Loss {
    pub fn name(self) -> &'static str {
        match self {
            Loss::Quadratic => "quadratic",
            Loss::Logistic => "logistic",
        }
    }
}

impl std::str::FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(Loss::Quadratic),
            "logistic" => Ok(Loss::Logistic),
            other => Err(Error::InvalidInput(format!("unknown loss '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    Regression,
    Classification,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Synthetic { seed: u64 },
    File { path: PathBuf },
}

/// Feature rows `a_i` with labels `y_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vector,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vector, provenance: Provenance) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::Data("dataset must have at least one sample and one feature".into()));
        }
        if labels.len() != features.nrows() {
            return Err(Error::Data(format!("{} labels for {} samples", labels.len(), features.nrows())));
        }
        if features.iter().chain(labels.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("dataset contains non-finite values".into()));
        }
        Ok(Self { features, labels, provenance })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &Vector {
        &self.labels
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn validate_for(&self, loss: Loss) -> Result<()> {
        if loss == Loss::Logistic {
            if let Some(i) = self.labels.iter().position(|y| *y != 1.0 && *y != -1.0) {
                return Err(Error::Data(format!(
                    "logistic loss needs labels in {{-1, +1}}, sample {} has {}",
                    i + 1,
                    self.labels[i]
                )));
            }
        }
        Ok(())
    }
}

/// Gaussian features with a planted linear model and 0.1-scale noise; class
/// labels are the signs of the scores with a fifth of them flipped.
pub fn synthesize_dataset(n: usize, d: usize, kind: TaskKind, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::Data(format!("cannot synthesize a dataset with n={n}, d={d}")));
    }
    let mut rng = seeded_rng(seed);
    let weights = gaussian_vector(&mut rng, d) / (d as f64).sqrt();
    let features =
        Matrix::from_fn(n, d, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng));
    let noise = gaussian_vector(&mut rng, n) * 0.1;
    let scores = &features * weights + noise;
    let labels = match kind {
        TaskKind::Regression => scores,
        TaskKind::Classification => {
            let flips: Vec<bool> = (0..n).map(|_| rng.random_bool(0.2)).collect();
            Vector::from_iterator(
                n,
                scores.iter().zip(flips).map(|(&s, flip)| if (s >= 0.0) != flip { 1.0 } else { -1.0 }),
            )
        }
    };
    Dataset::new(features, labels, Provenance::Synthetic { seed })
}

/// Reads comma-separated rows of `d` features followed by one label.
pub fn load_dataset_csv(path: &Path, has_header: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut width = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected || expected < 2 {
            return Err(Error::Data(format!(
                "{} line {line}: expected {} columns, found {}",
                path.display(),
                expected.max(2),
                record.len()
            )));
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Data(format!(
                    "{} line {line}, column {}: cannot parse '{cell}' as a number",
                    path.display(),
                    col + 1
                ))
            })?;
            if col + 1 == expected {
                labels.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let d = values.len() / n;
    Dataset::new(
        Matrix::from_row_slice(n, d, &values),
        Vector::from_vec(labels),
        Provenance::File { path: path.to_path_buf() },
    )
}
