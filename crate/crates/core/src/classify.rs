//! Two-class classification after conditional screening: training-split
//! standardization, Gaussian naive Bayes, logistic regression by IRLS, and a
//! pipeline that screens extra features conditioning on known markers.

use std::io::Read;
use std::str::FromStr;

use log::warn;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{spd_cholesky, IndexSet, Matrix, Vector};
use crate::screeners::{rank_descending, Screener};

/// Features with binary labels and a train/test partition of the rows.
#[derive(Clone, Debug)]
pub struct LabeledTable {
    pub features: Matrix,
    pub labels: Vec<u8>,
    pub names: Vec<String>,
    /// Label text for classes 0 and 1.
    pub class_names: [String; 2],
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl LabeledTable {
    pub fn new(
        features: Matrix,
        labels: Vec<u8>,
        names: Vec<String>,
        class_names: [String; 2],
        train: Vec<usize>,
    ) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n || names.len() != features.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{n} rows, {} labels, {} columns, {} names",
                labels.len(),
                features.ncols(),
                names.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidSpec("labels must be 0 or 1".into()));
        }
        let train_set = IndexSet::from_unsorted(train)?;
        train_set.check_bound(n)?;
        let test = train_set.complement(n);
        Ok(Self {
            features,
            labels,
            names,
            class_names,
            train: train_set.into_vec(),
            test,
        })
    }

    /// Reads a CSV whose header names the features and the label column.
    ///
    /// Labels are either `0`/`1` or exactly two distinct strings, mapped to
    /// 0 and 1 in lexicographic order.
    pub fn read_csv<R: Read>(r: R, label_col: &str, train_rows: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let lcol = headers
            .iter()
            .position(|h| h.trim() == label_col)
            .ok_or_else(|| Error::Parse(format!("no column named {label_col:?}")))?;
        let names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != lcol)
            .map(|(_, h)| h.trim().to_string())
            .collect();
        let mut raw_labels = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (k, field) in rec.iter().enumerate() {
                if k == lcol {
                    raw_labels.push(field.trim().to_string());
                } else {
                    values.push(field.trim().parse::<f64>().map_err(|_| {
                        Error::Parse(format!("row {}: cannot parse {field:?}", line + 1))
                    })?);
                }
            }
        }
        let n = raw_labels.len();
        let mut distinct: Vec<&String> = raw_labels.iter().collect();
        distinct.sort();
        distinct.dedup();
        if distinct.len() != 2 {
            return Err(Error::Parse(format!(
                "expected exactly two label values, found {}",
                distinct.len()
            )));
        }
        let class_names = [distinct[0].clone(), distinct[1].clone()];
        let labels = raw_labels
            .iter()
            .map(|l| u8::from(*l == class_names[1]))
            .collect();
        let features = Matrix::from_row_slice(n, names.len(), &values);
        let train = parse_row_spec(train_rows, n)?;
        Self::new(features, labels, names, class_names, train)
    }

    /// Column index of a feature name: an exact match, else a unique
    /// case-insensitive substring match.
    pub fn feature_index(&self, name: &str) -> Result<usize> {
        if let Some(k) = self.names.iter().position(|n| n == name) {
            return Ok(k);
        }
        let lower = name.to_lowercase();
        let hits: Vec<usize> = (0..self.names.len())
            .filter(|&k| self.names[k].to_lowercase().contains(&lower))
            .collect();
        match hits.as_slice() {
            [k] => Ok(*k),
            [] => Err(Error::InvalidSpec(format!("no feature matches {name:?}"))),
            _ => Err(Error::InvalidSpec(format!(
                "{name:?} matches {} features",
                hits.len()
            ))),
        }
    }
}

/// Parses `"1-38"` or `"1-10,15,20-22"` (1-based, inclusive) into 0-based rows.
pub fn parse_row_spec(spec: &str, n: usize) -> Result<Vec<usize>> {
    let mut rows = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parse = |s: &str| -> Result<usize> {
            let v: usize = s
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad row number {s:?}")))?;
            if v == 0 || v > n {
                return Err(Error::Parse(format!("row {v} outside 1..={n}")));
            }
            Ok(v - 1)
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return Err(Error::Parse(format!("empty range {part:?}")));
                }
                rows.extend(a..=b);
            }
            None => rows.push(parse(part)?),
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse("no training rows given".into()));
    }
    Ok(rows)
}

/// Per-column centering and scaling fitted on the training rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    /// Original indices of the columns kept.
    pub kept: Vec<usize>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Fits on `rows`; columns constant on those rows are dropped with a warning.
    pub fn fit(x: &Matrix, rows: &[usize]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidSize(
                "standardization needs at least 2 rows".into(),
            ));
        }
        let m = rows.len() as f64;
        let (mut kept, mut means, mut scales) = (Vec::new(), Vec::new(), Vec::new());
        let mut dropped = Vec::new();
        for j in 0..x.ncols() {
            let c = x.column(j);
            let mean = rows.iter().map(|&i| c[i]).sum::<f64>() / m;
            let ss: f64 = rows.iter().map(|&i| (c[i] - mean).powi(2)).sum();
            let sd = (ss / (m - 1.0)).sqrt();
            if !(sd > 1e-12 * mean.abs().max(1.0)) {
                dropped.push(j);
                continue;
            }
            kept.push(j);
            means.push(mean);
            scales.push(sd);
        }
        if !dropped.is_empty() {
            warn!(
                "dropped {} constant column(s): {:?}",
                dropped.len(),
                &dropped[..dropped.len().min(10)]
            );
        }
        Ok(Self {
            kept,
            means,
            scales,
        })
    }

    /// Applies the fitted transform to every row of `x`.
    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.nrows(), self.kept.len());
        for (k, &j) in self.kept.iter().enumerate() {
            let (mu, s) = (self.means[k], self.scales[k]);
            for i in 0..x.nrows() {
                out[(i, k)] = (x[(i, j)] - mu) / s;
            }
        }
        out
    }
}

/// Standardizes a table on its training split, dropping constant columns.
pub fn standardize(table: &LabeledTable) -> Result<(LabeledTable, Standardizer)> {
    let st = Standardizer::fit(&table.features, &table.train)?;
    let out = LabeledTable {
        features: st.apply(&table.features),
        labels: table.labels.clone(),
        names: st.kept.iter().map(|&j| table.names[j].clone()).collect(),
        class_names: table.class_names.clone(),
        train: table.train.clone(),
        test: table.test.clone(),
    };
    Ok((out, st))
}

fn class_counts(labels: &[u8]) -> [usize; 2] {
    let ones = labels.iter().filter(|&&l| l == 1).count();
    [labels.len() - ones, ones]
}

/// Gaussian naive Bayes with frequency priors.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianNb {
    pub means: [Vec<f64>; 2],
    pub vars: [Vec<f64>; 2],
    pub log_priors: [f64; 2],
}

/// Floor on per-class feature variances.
pub const NB_VAR_FLOOR: f64 = 1e-9;

impl GaussianNb {
    pub fn fit(x: &Matrix, labels: &[u8]) -> Result<Self> {
        let counts = class_counts(labels);
        if counts.contains(&0) {
            return Err(Error::SingleClassTraining);
        }
        let k = x.ncols();
        let mut means = [vec![0.0; k], vec![0.0; k]];
        let mut vars = [vec![0.0; k], vec![0.0; k]];
        for (c, (mean, var)) in means.iter_mut().zip(vars.iter_mut()).enumerate() {
            let rows: Vec<usize> = (0..labels.len())
                .filter(|&i| labels[i] as usize == c)
                .collect();
            let m = rows.len() as f64;
            for j in 0..k {
                let mu = rows.iter().map(|&i| x[(i, j)]).sum::<f64>() / m;
                let v = rows.iter().map(|&i| (x[(i, j)] - mu).powi(2)).sum::<f64>() / m;
                mean[j] = mu;
                var[j] = v.max(NB_VAR_FLOOR);
            }
        }
        let n = labels.len() as f64;
        Ok(Self {
            means,
            vars,
            log_priors: [(counts[0] as f64 / n).ln(), (counts[1] as f64 / n).ln()],
        })
    }

    fn log_joint(&self, row: &[f64]) -> [f64; 2] {
        let mut out = self.log_priors;
        for (c, o) in out.iter_mut().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let var = self.vars[c][j];
                *o -= 0.5
                    * ((2.0 * std::f64::consts::PI * var).ln()
                        + (v - self.means[c][j]).powi(2) / var);
            }
        }
        out
    }

    /// Posterior class probabilities for one row.
    pub fn posterior(&self, row: &[f64]) -> [f64; 2] {
        let l = self.log_joint(row);
        let m = l[0].max(l[1]);
        let (a, b) = ((l[0] - m).exp(), (l[1] - m).exp());
        [a / (a + b), b / (a + b)]
    }

    /// Class 1 only when its log posterior is strictly larger.
    pub fn predict(&self, x: &Matrix) -> Vec<u8> {
        (0..x.nrows())
            .map(|i| {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                let l = self.log_joint(&row);
                u8::from(l[1] > l[0])
            })
            .collect()
    }
}

/// Logistic regression with an intercept.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    /// Intercept followed by one slope per feature.
    pub coef: Vector,
    /// Set when the classes were separable and the coefficients diverged.
    pub separated: bool,
    pub iterations: usize,
    pub deviance_trace: Vec<f64>,
}

/// Diagonal jitter added to the weighted normal matrix.
pub const IRLS_RIDGE: f64 = 1e-8;
pub const IRLS_TOL: f64 = 1e-8;
pub const IRLS_MAX_ITER: usize = 100;

fn with_intercept(x: &Matrix) -> Matrix {
    let mut a = Matrix::from_element(x.nrows(), x.ncols() + 1, 1.0);
    a.columns_mut(1, x.ncols()).copy_from(x);
    a
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `-2` times the Bernoulli log-likelihood at linear predictor `eta`.
pub fn deviance(eta: &Vector, y: &[f64]) -> f64 {
    2.0 * eta
        .iter()
        .zip(y)
        .map(|(&e, &yi)| softplus(e) - yi * e)
        .sum::<f64>()
}

impl LogisticModel {
    /// Maximum likelihood by iteratively reweighted least squares with step
    /// halving, so the deviance never increases.
    ///
    /// If the iterates separate the training classes while the deviance
    /// collapses, the iterate with the largest normalised margin is returned
    /// and `separated` is set.
    pub fn fit(x: &Matrix, labels: &[u8]) -> Result<Self> {
        if labels.len() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows, {} labels",
                x.nrows(),
                labels.len()
            )));
        }
        if class_counts(labels).contains(&0) {
            return Err(Error::SingleClassTraining);
        }
        let a = with_intercept(x);
        let k = a.ncols();
        let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
        let sign: Vec<f64> = y.iter().map(|&v| 2.0 * v - 1.0).collect();

        let mut w = Vector::zeros(k);
        let mut eta = &a * &w;
        let mut dev = deviance(&eta, &y);
        let mut trace = vec![dev];
        let mut best_margin: Option<(f64, Vector)> = None;
        let mut iterations = 0;

        for it in 1..=IRLS_MAX_ITER {
            iterations = it;
            let p: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
            let grad = a.tr_mul(&Vector::from_iterator(
                y.len(),
                y.iter().zip(&p).map(|(yi, pi)| yi - pi),
            ));
            let mut h = Matrix::zeros(k, k);
            for (i, &pi) in p.iter().enumerate() {
                let wi = pi * (1.0 - pi);
                if wi == 0.0 {
                    continue;
                }
                let row = a.row(i);
                for c in 0..k {
                    let rc = wi * row[c];
                    for r in c..k {
                        h[(r, c)] += rc * row[r];
                    }
                }
            }
            for c in 0..k {
                for r in c + 1..k {
                    h[(c, r)] = h[(r, c)];
                }
                h[(c, c)] += IRLS_RIDGE;
            }
            let delta = match spd_cholesky(&h) {
                Some(ch) => ch.solve(&grad),
                None => {
                    let mut hr = h.clone();
                    for c in 0..k {
                        hr[(c, c)] += 1e-6 * (1.0 + h[(c, c)]);
                    }
                    hr.cholesky()
                        .ok_or(Error::NotPositiveDefinite)?
                        .solve(&grad)
                }
            };
            let mut step = 1.0;
            let (mut w_new, mut eta_new, mut dev_new);
            loop {
                w_new = &w + &delta * step;
                eta_new = &a * &w_new;
                dev_new = deviance(&eta_new, &y);
                if dev_new <= dev + 1e-10 * (1.0 + dev.abs()) || step < 1e-10 {
                    break;
                }
                step *= 0.5;
            }
            if dev_new > dev {
                break;
            }
            let change = (&w_new - &w).amax();
            w = w_new;
            eta = eta_new;
            dev = dev_new;
            trace.push(dev);

            let min_margin = eta
                .iter()
                .zip(&sign)
                .map(|(e, s)| e * s)
                .fold(f64::INFINITY, f64::min);
            let slope_norm = w.rows(1, k - 1).norm();
            if min_margin > 0.0 && slope_norm > 0.0 {
                let m = min_margin / slope_norm;
                if best_margin.as_ref().is_none_or(|(b, _)| m > *b) {
                    best_margin = Some((m, w.clone()));
                }
                if dev < 1e-6 {
                    let (_, wb) = best_margin.expect("just set");
                    warn!("training classes are separable; returning the largest-margin iterate");
                    return Ok(Self {
                        coef: wb,
                        separated: true,
                        iterations,
                        deviance_trace: trace,
                    });
                }
            }
            if change < IRLS_TOL {
                break;
            }
        }
        Ok(Self {
            coef: w,
            separated: false,
            iterations,
            deviance_trace: trace,
        })
    }

    pub fn probabilities(&self, x: &Matrix) -> Vector {
        (with_intercept(x) * &self.coef).map(sigmoid)
    }

    /// Class 1 only when its probability is strictly above one half.
    pub fn predict(&self, x: &Matrix) -> Vec<u8> {
        (with_intercept(x) * &self.coef)
            .iter()
            .map(|&e| u8::from(e > 0.0))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassifierKind {
    Logistic,
    NaiveBayes,
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "logistic" => Ok(Self::Logistic),
            "nb" | "naive-bayes" => Ok(Self::NaiveBayes),
            other => Err(Error::Parse(format!("unknown classifier {other:?}"))),
        }
    }
}

/// `confusion[truth][predicted]`.
pub type Confusion = [[usize; 2]; 2];

fn confusion(truth: &[u8], pred: &[u8]) -> Confusion {
    let mut c = [[0; 2]; 2];
    for (&t, &p) in truth.iter().zip(pred) {
        c[t as usize][p as usize] += 1;
    }
    c
}

pub fn errors(c: &Confusion) -> usize {
    c[0][1] + c[1][0]
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineReport {
    /// Features used by the classifier: markers then screened extras
    /// (original column indices).
    pub features: Vec<usize>,
    pub feature_names: Vec<String>,
    pub train_confusion: Confusion,
    pub test_confusion: Confusion,
    pub separated: bool,
    pub screening_fallback: bool,
}

impl PipelineReport {
    pub fn train_errors(&self) -> usize {
        errors(&self.train_confusion)
    }

    pub fn test_errors(&self) -> usize {
        errors(&self.test_confusion)
    }
}

fn rows_of(x: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |i, j| x[(rows[i], cols[j])])
}

/// Standardize, screen `extra` features by conditional projection given the
/// markers on the training rows, then fit and evaluate a classifier on the
/// markers plus those features.
pub fn marker_pipeline(
    table: &LabeledTable,
    markers: &[usize],
    extra: usize,
    classifier: ClassifierKind,
) -> Result<PipelineReport> {
    let (std_table, st) = standardize(table)?;
    let mut cond = Vec::with_capacity(markers.len());
    for &m in markers {
        let k = st.kept.iter().position(|&j| j == m).ok_or_else(|| {
            Error::InvalidSpec(format!(
                "marker {} is constant on the training rows",
                table.names[m]
            ))
        })?;
        cond.push(k);
    }
    let cond_set = IndexSet::from_unsorted(cond.clone())?;
    let train = &std_table.train;
    let test = &std_table.test;
    let train_labels: Vec<u8> = train.iter().map(|&i| table.labels[i]).collect();
    let test_labels: Vec<u8> = test.iter().map(|&i| table.labels[i]).collect();

    let mut chosen = cond.clone();
    let mut fallback = false;
    if extra > 0 {
        let all: Vec<usize> = (0..std_table.features.ncols()).collect();
        let x_train = rows_of(&std_table.features, train, &all);
        let y_train =
            Vector::from_iterator(train.len(), train_labels.iter().map(|&l| f64::from(l)));
        let ds = Dataset::new(x_train, y_train)?;
        let scores = Screener::new(&ds).colp(&cond_set)?;
        fallback = scores.fallback;
        let ranked = rank_descending(&scores);
        if extra > ranked.len() {
            return Err(Error::InvalidSize(format!(
                "asked for {extra} extra features, {} available",
                ranked.len()
            )));
        }
        chosen.extend_from_slice(&ranked[..extra]);
    }

    let xtr = rows_of(&std_table.features, train, &chosen);
    let xte = rows_of(&std_table.features, test, &chosen);
    let (pred_train, pred_test, separated) = match classifier {
        ClassifierKind::Logistic => {
            let m = LogisticModel::fit(&xtr, &train_labels)?;
            (m.predict(&xtr), m.predict(&xte), m.separated)
        }
        ClassifierKind::NaiveBayes => {
            let m = GaussianNb::fit(&xtr, &train_labels)?;
            (m.predict(&xtr), m.predict(&xte), false)
        }
    };
    let features: Vec<usize> = chosen.iter().map(|&k| st.kept[k]).collect();
    Ok(PipelineReport {
        feature_names: features.iter().map(|&j| table.names[j].clone()).collect(),
        features,
        train_confusion: confusion(&train_labels, &pred_train),
        test_confusion: confusion(&test_labels, &pred_test),
        separated,
        screening_fallback: fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{stream_rng, Stream};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn row_specs() {
        assert_eq!(parse_row_spec("1-3,5", 6).unwrap(), vec![0, 1, 2, 4]);
        assert!(parse_row_spec("0-2", 6).is_err());
        assert!(parse_row_spec("4-2", 6).is_err());
        assert!(parse_row_spec("7", 6).is_err());
    }

    #[test]
    fn standardization_uses_training_rows_only() {
        let mut rng = stream_rng(1, 0, Stream::Predictors);
        let x = Matrix::from_fn(12, 4, |_, j| {
            let z: f64 = StandardNormal.sample(&mut rng);
            3.0 * z + j as f64
        });
        let train: Vec<usize> = (0..8).collect();
        let st = Standardizer::fit(&x, &train).unwrap();
        let z = st.apply(&x);
        for j in 0..4 {
            let col: Vec<f64> = train.iter().map(|&i| z[(i, j)]).collect();
            let m = col.iter().sum::<f64>() / 8.0;
            let v = col.iter().map(|c| (c - m).powi(2)).sum::<f64>() / 7.0;
            assert!(m.abs() < 1e-12);
            assert!((v - 1.0).abs() < 1e-12);
        }
        let mut perturbed = x.clone();
        for i in 8..12 {
            perturbed[(i, 2)] += 100.0;
        }
        assert_eq!(Standardizer::fit(&perturbed, &train).unwrap(), st);

        let already = z.clone();
        let again = Standardizer::fit(&already, &train).unwrap().apply(&already);
        assert!((again - already).amax() < 1e-12);
    }

    #[test]
    fn constant_column_dropped() {
        let mut x = Matrix::from_fn(6, 3, |i, j| (i * (j + 1)) as f64);
        x.column_mut(1).fill(4.0);
        let st = Standardizer::fit(&x, &[0, 1, 2, 3, 4, 5]).unwrap();
        assert_eq!(st.kept, vec![0, 2]);
    }

    #[test]
    fn naive_bayes_separated_classes() {
        let x = Matrix::from_column_slice(6, 1, &[-3.0, -2.5, -2.0, 2.0, 2.5, 3.0]);
        let labels = [0, 0, 0, 1, 1, 1];
        let nb = GaussianNb::fit(&x, &labels).unwrap();
        assert_eq!(nb.predict(&x), labels.to_vec());
        // midpoint of symmetric classes: exact tie goes to class 0
        assert_eq!(nb.predict(&Matrix::from_element(1, 1, 0.0)), vec![0]);
        let post = nb.posterior(&[0.7]);
        assert_abs_diff_eq!(post[0] + post[1], 1.0, epsilon = 1e-12);
        assert!(matches!(
            GaussianNb::fit(&x, &[1; 6]),
            Err(Error::SingleClassTraining)
        ));
    }

    #[test]
    fn naive_bayes_hand_posterior() {
        // class 0 at (0,0),(2,0),(0,2),(2,2); class 1 at (4,4),(6,4),(4,6),(6,6)
        let pts = [
            [0.0, 0.0],
            [2.0, 0.0],
            [0.0, 2.0],
            [2.0, 2.0],
            [4.0, 4.0],
            [6.0, 4.0],
            [4.0, 6.0],
            [6.0, 6.0],
        ];
        let x = Matrix::from_fn(8, 2, |i, j| pts[i][j]);
        let labels = [0, 0, 0, 0, 1, 1, 1, 1];
        let nb = GaussianNb::fit(&x, &labels).unwrap();
        // means (1,1) and (5,5), all variances 1, equal priors:
        // log-odds = Σ_j [(v_j - 1)^2 - (v_j - 5)^2] / 2 = Σ_j (4 v_j - 12)
        for q in [[0.0, 0.0], [3.0, 3.0], [2.5, 3.1], [5.0, 1.0], [4.2, 4.4]] {
            let logit: f64 = q.iter().map(|v| 4.0 * v - 12.0).sum();
            let p1 = 1.0 / (1.0 + (-logit).exp());
            let post = nb.posterior(&q);
            assert_abs_diff_eq!(post[1], p1, epsilon = 1e-12);
            assert_abs_diff_eq!(post[0] + post[1], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn logistic_separable_flags() {
        let x = Matrix::from_column_slice(6, 1, &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        let labels = [0, 0, 0, 1, 1, 1];
        let m = LogisticModel::fit(&x, &labels).unwrap();
        assert!(m.separated);
        assert_eq!(m.predict(&x), labels.to_vec());
    }

    #[test]
    fn logistic_intercept_only_coin_flip() {
        let x = Matrix::zeros(10, 0);
        let labels = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let m = LogisticModel::fit(&x, &labels).unwrap();
        assert!(!m.separated);
        for p in m.probabilities(&x).iter() {
            assert_abs_diff_eq!(*p, 0.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn logistic_matches_gradient_descent() {
        let mut rng = stream_rng(5, 0, Stream::Predictors);
        let x = Matrix::from_fn(60, 2, |_, _| StandardNormal.sample(&mut rng));
        let labels: Vec<u8> = (0..60)
            .map(|i| {
                let t = 0.8 * x[(i, 0)] - 0.5 * x[(i, 1)] + 0.2;
                u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-t).exp()))
            })
            .collect();
        let m = LogisticModel::fit(&x, &labels).unwrap();
        assert!(!m.separated);
        for w in m.deviance_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
        // plain gradient descent on the mean log-loss
        let a = with_intercept(&x);
        let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
        let mut w = Vector::zeros(3);
        for _ in 0..200_000 {
            let p = (&a * &w).map(sigmoid);
            let g = a.tr_mul(&(p - Vector::from_vec(y.clone()))) / 60.0;
            w -= g * 0.5;
        }
        let dev_gd = deviance(&(&a * &w), &y);
        let dev_irls = *m.deviance_trace.last().unwrap();
        assert_abs_diff_eq!(dev_irls, dev_gd, epsilon = 1e-6);
    }

    fn synthetic_table(seed: u64) -> LabeledTable {
        // two weak markers (0, 1) and one strong feature (2) among 200
        let mut rng = stream_rng(seed, 0, Stream::Predictors);
        let n = 72;
        let p = 200;
        let mut x = Matrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 1)).collect();
        for i in 0..n {
            let s = if labels[i] == 1 { 1.0 } else { -1.0 };
            x[(i, 0)] += 0.5 * s;
            x[(i, 1)] += 0.5 * s;
            x[(i, 2)] += 4.0 * s;
        }
        let names = (0..p).map(|j| format!("g{j}")).collect();
        LabeledTable::new(
            x,
            labels,
            names,
            ["a".into(), "b".into()],
            (0..38).collect(),
        )
        .unwrap()
    }

    #[test]
    fn pipeline_recovers_third_feature() {
        for seed in [11, 12, 13] {
            let table = synthetic_table(seed);
            for kind in [ClassifierKind::Logistic, ClassifierKind::NaiveBayes] {
                let r = marker_pipeline(&table, &[0, 1], 1, kind).unwrap();
                assert_eq!(r.features, vec![0, 1, 2]);
                assert_eq!(r.feature_names, vec!["g0", "g1", "g2"]);
                assert_eq!(r.test_errors(), 0, "{kind:?} seed {seed}");
            }
        }
        let table = synthetic_table(11);
        let r0 = marker_pipeline(&table, &[0, 1], 0, ClassifierKind::NaiveBayes).unwrap();
        assert_eq!(r0.features, vec![0, 1]);
    }

    #[test]
    fn csv_labels_and_names() {
        let text = "g1,cls,g2\n1.0,ALL,2.0\n2.0,AML,1.0\n3.0,ALL,0.5\n0.0,AML,1.5\n";
        let t = LabeledTable::read_csv(text.as_bytes(), "cls", "1-3").unwrap();
        assert_eq!(t.names, vec!["g1", "g2"]);
        assert_eq!(t.labels, vec![0, 1, 0, 1]);
        assert_eq!(t.class_names, ["ALL".to_string(), "AML".to_string()]);
        assert_eq!(t.test, vec![3]);
        assert_eq!(t.feature_index("G2").unwrap(), 1);
    }
}
