//! One-shot screening scores over the predictors outside a conditioning set,
//! plus ranking and model truncation.

use std::cell::OnceCell;
use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{
    col, dot, numerical_rank, pinv_apply, project_complement, spd_cholesky, ComplementReflectors,
    GramFactor, IndexSet, Matrix, Vector, COLLINEAR_TOL,
};

/// Screening scores for the predictors in `domain`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector {
    pub domain: IndexSet,
    /// Absolute values of the estimates, aligned with `domain`.
    pub scores: Vec<f64>,
    /// The estimates before taking absolute values (diagnostics only).
    pub signed: Vec<f64>,
    /// Set when the estimate had to go through the pseudo-inverse fallback.
    pub fallback: bool,
}

impl ScoreVector {
    fn from_signed(domain: IndexSet, signed: Vec<f64>, fallback: bool) -> Self {
        Self {
            scores: signed.iter().map(|v| v.abs()).collect(),
            domain,
            signed,
            fallback,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Score of predictor `j`, if it is in the domain.
    pub fn score_of(&self, j: usize) -> Option<f64> {
        self.domain
            .as_slice()
            .binary_search(&j)
            .ok()
            .map(|k| self.scores[k])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScreenMethod {
    Sis,
    Csis,
    Holp,
    Colp,
}

impl FromStr for ScreenMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sis" => Ok(Self::Sis),
            "csis" => Ok(Self::Csis),
            "holp" => Ok(Self::Holp),
            "colp" => Ok(Self::Colp),
            other => Err(Error::Parse(format!("unknown screening method {other:?}"))),
        }
    }
}

impl fmt::Display for ScreenMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sis => "sis",
            Self::Csis => "csis",
            Self::Holp => "holp",
            Self::Colp => "colp",
        })
    }
}

/// `floor(n / ln n)`.
pub fn default_model_size(n: usize) -> usize {
    if n < 3 {
        return 1;
    }
    let nf = n as f64;
    ((nf / nf.ln()).floor() as usize).max(1)
}

/// Screening against one dataset, sharing the `X X^T` factorisation
/// between calls.
pub struct Screener<'a> {
    ds: &'a Dataset,
    gram: OnceCell<GramFactor>,
}

impl<'a> Screener<'a> {
    pub fn new(ds: &'a Dataset) -> Self {
        Self {
            ds,
            gram: OnceCell::new(),
        }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.ds
    }

    pub fn gram(&self) -> &GramFactor {
        self.gram.get_or_init(|| GramFactor::new(&self.ds.x))
    }

    fn check_conditioning(&self, c: &IndexSet) -> Result<()> {
        c.check_bound(self.ds.p())?;
        if c.len() >= self.ds.p() {
            return Err(Error::InvalidIndexSet(
                "conditioning set leaves no predictor to screen".into(),
            ));
        }
        Ok(())
    }

    pub fn scores(&self, method: ScreenMethod, c: &IndexSet) -> Result<ScoreVector> {
        match method {
            ScreenMethod::Sis => self.sis(c),
            ScreenMethod::Csis => self.csis(c),
            ScreenMethod::Holp => self.holp(c),
            ScreenMethod::Colp => self.colp(c),
        }
    }

    /// Absolute sample correlation of each remaining predictor with the response.
    pub fn sis(&self, c: &IndexSet) -> Result<ScoreVector> {
        self.check_conditioning(c)?;
        let (x, y) = (&self.ds.x, &self.ds.y);
        let n = x.nrows() as f64;
        let ymean = y.mean();
        let yc: Vec<f64> = y.iter().map(|v| v - ymean).collect();
        let syy = dot(&yc, &yc);
        if !(syy > 0.0) {
            return Err(Error::ConstantResponse);
        }
        let domain = IndexSet::new(c.complement(self.ds.p()))?;
        let mut signed = Vec::with_capacity(domain.len());
        for j in domain.iter() {
            let xj = col(x, j);
            let mean = xj.iter().sum::<f64>() / n;
            let (mut sxy, mut sxx) = (0.0, 0.0);
            for (xi, yi) in xj.iter().zip(&yc) {
                let d = xi - mean;
                sxy += d * yi;
                sxx += d * d;
            }
            if !(sxx > f64::EPSILON * f64::EPSILON * n * mean.abs().max(1.0).powi(2)) {
                return Err(Error::ConstantColumn(j));
            }
            signed.push(sxy / (sxx * syy).sqrt());
        }
        Ok(ScoreVector::from_signed(domain, signed, false))
    }

    /// Coefficient of `X_j` in the least-squares fit of `Y` on `[X_C, X_j]`.
    pub fn csis(&self, c: &IndexSet) -> Result<ScoreVector> {
        self.check_conditioning(c)?;
        let (x, y) = (&self.ds.x, &self.ds.y);
        let n = x.nrows();
        if c.len() + 1 >= n {
            return Err(Error::InvalidSize(format!(
                "conditioning set of size {} leaves no residual degrees of freedom at n = {n}",
                c.len()
            )));
        }
        let domain = IndexSet::new(c.complement(self.ds.p()))?;
        let (resid_y, ux) = if c.is_empty() {
            (y.clone(), None)
        } else {
            let x_c = x.select_columns(c.as_slice());
            let rank = numerical_rank(&x_c);
            if rank < c.len() {
                return Err(Error::RankDeficient {
                    rank,
                    expected: c.len(),
                });
            }
            let u = x_c.qr().q();
            let resid_y = y - &u * u.tr_mul(y);
            (resid_y, Some(u.tr_mul(x)))
        };
        let mut signed = Vec::with_capacity(domain.len());
        let mut collinear = Vec::new();
        for j in domain.iter() {
            let xj = col(x, j);
            let norm2 = dot(xj, xj);
            let proj2 = ux.as_ref().map_or(0.0, |m| m.column(j).norm_squared());
            let den = norm2 - proj2;
            if den <= COLLINEAR_TOL * COLLINEAR_TOL * norm2 || den <= 0.0 {
                collinear.push(j);
                signed.push(0.0);
            } else {
                signed.push(dot(xj, resid_y.as_slice()) / den);
            }
        }
        if !collinear.is_empty() {
            warn!(
                "{} predictor(s) lie in the span of the conditioning set and score 0: {:?}",
                collinear.len(),
                &collinear[..collinear.len().min(10)]
            );
        }
        Ok(ScoreVector::from_signed(domain, signed, false))
    }

    /// `|X_j^T (X X^T)^{-1} Y|` for each remaining predictor.
    pub fn holp(&self, c: &IndexSet) -> Result<ScoreVector> {
        self.check_conditioning(c)?;
        let (n, p) = self.ds.x.shape();
        if p <= n {
            return Err(Error::NotUnderdetermined { n, p });
        }
        let a = self.gram().solve(&self.ds.y)?;
        let domain = IndexSet::new(c.complement(p))?;
        let signed = domain
            .iter()
            .map(|j| dot(col(&self.ds.x, j), a.as_slice()))
            .collect();
        Ok(ScoreVector::from_signed(domain, signed, false))
    }

    /// `|(M_C X_D)^+ Y|`, computed as `X_D^T Q_C (Q_C^T X X^T Q_C)^{-1} Q_C^T Y`.
    ///
    /// When `Q_C^T X X^T Q_C` is numerically singular the scores come from a
    /// pseudo-inverse of `M_C X_D` and `fallback` is set.
    pub fn colp(&self, c: &IndexSet) -> Result<ScoreVector> {
        self.check_conditioning(c)?;
        let (x, y) = (&self.ds.x, &self.ds.y);
        let x_c = x.select_columns(c.as_slice());
        let u = ComplementReflectors::new(&x_c)?;
        let domain = IndexSet::new(c.complement(self.ds.p()))?;

        let wtw = u.congruence(self.gram().gram());
        if let Some(ch) = spd_cholesky(&wtw) {
            let qty = u.basis_tr_mul(&Matrix::from_column_slice(y.len(), 1, y.as_slice()));
            let b = ch.solve(&qty);
            let v = u.basis_mul(&b);
            let signed = domain
                .iter()
                .map(|j| dot(col(x, j), v.as_slice()))
                .collect();
            return Ok(ScoreVector::from_signed(domain, signed, false));
        }
        let q = u.basis();
        warn!("projected Gram matrix is singular; using the pseudo-inverse of M_C X_D");
        let x_d = x.select_columns(domain.as_slice());
        let mx_d = project_complement(&q, &x_d)?;
        let est = pinv_apply(&mx_d, y)?;
        Ok(ScoreVector::from_signed(
            domain,
            est.iter().copied().collect(),
            true,
        ))
    }
}

pub fn sis_scores(ds: &Dataset, c: &IndexSet) -> Result<ScoreVector> {
    Screener::new(ds).sis(c)
}

pub fn csis_scores(ds: &Dataset, c: &IndexSet) -> Result<ScoreVector> {
    Screener::new(ds).csis(c)
}

pub fn holp_scores(ds: &Dataset, c: &IndexSet) -> Result<ScoreVector> {
    Screener::new(ds).holp(c)
}

pub fn colp_scores(ds: &Dataset, c: &IndexSet) -> Result<ScoreVector> {
    Screener::new(ds).colp(c)
}

/// Domain indices ordered by decreasing score, ties by increasing index.
pub fn rank_descending(s: &ScoreVector) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s.scores[b].total_cmp(&s.scores[a]).then(a.cmp(&b)));
    let dom = s.domain.as_slice();
    order.into_iter().map(|k| dom[k]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SelectionRule {
    /// Keep predictors whose score exceeds the threshold.
    Threshold(f64),
    /// Keep the `d` highest-ranked predictors.
    Top(usize),
}

pub fn select_model(s: &ScoreVector, rule: SelectionRule) -> Result<IndexSet> {
    match rule {
        SelectionRule::Threshold(gamma) => {
            if !(gamma >= 0.0) || !gamma.is_finite() {
                return Err(Error::InvalidRule(format!(
                    "threshold {gamma} must be finite and >= 0"
                )));
            }
            IndexSet::new(
                s.domain
                    .iter()
                    .zip(&s.scores)
                    .filter(|&(_, &v)| v > gamma)
                    .map(|(j, _)| j)
                    .collect(),
            )
        }
        SelectionRule::Top(d) => {
            if d > s.len() {
                return Err(Error::InvalidRule(format!(
                    "model size {d} exceeds the {} remaining predictors",
                    s.len()
                )));
            }
            let mut top = rank_descending(s);
            top.truncate(d);
            IndexSet::from_unsorted(top)
        }
    }
}

/// The minimum-norm least-squares estimate `X^+ Y` (used as a test oracle
/// and for small designs).
pub fn min_norm_estimate(x: &Matrix, y: &Vector) -> Result<Vector> {
    pinv_apply(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{stream_rng, ScenarioSpec, Stream};
    use crate::linalg::{complement_basis, ols};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn random_ds(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = stream_rng(seed, 0, Stream::Predictors);
        let x = Matrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let y = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn holp_one_observation() {
        let x = Matrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let ds = Dataset::new(x, Vector::from_vec(vec![5.0])).unwrap();
        let s = holp_scores(&ds, &IndexSet::empty()).unwrap();
        assert_abs_diff_eq!(s.scores[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.scores[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn holp_matches_pseudo_inverse() {
        let ds = random_ds(10, 30, 1);
        let c = IndexSet::new(vec![2, 7]).unwrap();
        let s = holp_scores(&ds, &c).unwrap();
        let full = min_norm_estimate(&ds.x, &ds.y).unwrap();
        for (k, j) in s.domain.iter().enumerate() {
            assert_abs_diff_eq!(s.scores[k], full[j].abs(), epsilon = 1e-8);
        }
        assert!(matches!(
            holp_scores(&random_ds(10, 10, 2), &IndexSet::empty()),
            Err(Error::NotUnderdetermined { .. })
        ));
    }

    #[test]
    fn colp_matches_definition() {
        let ds = random_ds(12, 40, 3);
        let c = IndexSet::new(vec![0, 1]).unwrap();
        let s = colp_scores(&ds, &c).unwrap();
        assert!(!s.fallback);
        let q = complement_basis(&ds.x.select_columns(c.as_slice())).unwrap();
        let x_d = ds.x.select_columns(s.domain.as_slice());
        let oracle = pinv_apply(&project_complement(&q, &x_d).unwrap(), &ds.y).unwrap();
        for k in 0..s.len() {
            assert_abs_diff_eq!(s.signed[k], oracle[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn colp_reduces_to_holp_without_conditioning() {
        let ds = random_ds(15, 50, 4);
        let a = colp_scores(&ds, &IndexSet::empty()).unwrap();
        let b = holp_scores(&ds, &IndexSet::empty()).unwrap();
        for (u, v) in a.scores.iter().zip(&b.scores) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-8);
        }
    }

    #[test]
    fn colp_falls_back_when_underdetermination_fails() {
        let ds = random_ds(20, 10, 5);
        let c = IndexSet::singleton(0);
        let s = colp_scores(&ds, &c).unwrap();
        assert!(s.fallback);
        let x_c = ds.x.select_columns(c.as_slice());
        let x_d = ds.x.select_columns(s.domain.as_slice());
        let q = complement_basis(&x_c).unwrap();
        let oracle = pinv_apply(&project_complement(&q, &x_d).unwrap(), &ds.y).unwrap();
        for k in 0..s.len() {
            assert_abs_diff_eq!(s.signed[k], oracle[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn csis_matches_two_column_fits() {
        let ds = random_ds(30, 6, 6);
        let c = IndexSet::singleton(0);
        let s = csis_scores(&ds, &c).unwrap();
        for (k, j) in s.domain.iter().enumerate() {
            let xm = ds.x.select_columns(&[0, j]);
            let b = ols(&xm, &ds.y).unwrap();
            assert_abs_diff_eq!(s.signed[k], b[1], epsilon = 1e-10);
        }
    }

    #[test]
    fn csis_scores_zero_for_column_in_conditioning_span() {
        let mut ds = random_ds(10, 4, 7);
        let c0 = ds.x.column(0) * 3.0;
        ds.x.set_column(2, &c0);
        let s = csis_scores(&ds, &IndexSet::singleton(0)).unwrap();
        assert_eq!(s.score_of(2), Some(0.0));
    }

    #[test]
    fn csis_without_conditioning_is_simple_slope() {
        let ds = random_ds(25, 4, 8);
        let s = csis_scores(&ds, &IndexSet::empty()).unwrap();
        for j in 0..4 {
            let xj = ds.x.column(j);
            assert_abs_diff_eq!(
                s.signed[j],
                xj.dot(&ds.y) / xj.norm_squared(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn sis_matches_covariance_formula() {
        let ds = random_ds(20, 5, 9);
        let s = sis_scores(&ds, &IndexSet::singleton(3)).unwrap();
        assert_eq!(s.domain.as_slice(), &[0, 1, 2, 4]);
        let n = 20.0;
        let y = &ds.y;
        for (k, j) in s.domain.iter().enumerate() {
            let x = ds.x.column(j);
            // nalgebra's variance() divides by n
            let cov = x.dot(y) / n - x.mean() * y.mean();
            let corr = cov / (x.variance() * y.variance()).sqrt();
            assert_abs_diff_eq!(s.signed[k], corr, epsilon = 1e-12);
        }
    }

    #[test]
    fn sis_orthonormal_design() {
        let q = complement_basis(&Matrix::zeros(8, 0))
            .unwrap()
            .columns(0, 5)
            .clone_owned();
        let mut x = q.clone();
        for j in 0..5 {
            let m = x.column(j).mean();
            x.column_mut(j).add_scalar_mut(-m);
        }
        let y = x.column(1).clone_owned();
        let ds = Dataset::new(x, y).unwrap();
        let s = sis_scores(&ds, &IndexSet::empty()).unwrap();
        assert_eq!(rank_descending(&s)[0], 1);
        assert_abs_diff_eq!(s.scores[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sis_constant_column_error() {
        let mut ds = random_ds(10, 3, 10);
        ds.x.column_mut(1).fill(2.5);
        assert!(matches!(
            sis_scores(&ds, &IndexSet::empty()),
            Err(Error::ConstantColumn(1))
        ));
    }

    #[test]
    fn ranking_examples() {
        let s = ScoreVector::from_signed(
            IndexSet::new(vec![4, 7, 9]).unwrap(),
            vec![0.1, 0.9, 0.5],
            false,
        );
        assert_eq!(rank_descending(&s), vec![7, 9, 4]);
        let t = ScoreVector::from_signed(
            IndexSet::new(vec![1, 3, 5]).unwrap(),
            vec![2.0, -2.0, 2.0],
            false,
        );
        assert_eq!(rank_descending(&t), vec![1, 3, 5]);
    }

    #[test]
    fn selection_rules() {
        let s = ScoreVector::from_signed(
            IndexSet::new(vec![0, 2, 3]).unwrap(),
            vec![0.3, 0.1, 0.7],
            false,
        );
        assert_eq!(
            select_model(&s, SelectionRule::Threshold(0.0))
                .unwrap()
                .as_slice(),
            &[0, 2, 3]
        );
        assert_eq!(
            select_model(&s, SelectionRule::Threshold(0.2))
                .unwrap()
                .as_slice(),
            &[0, 3]
        );
        assert_eq!(
            select_model(&s, SelectionRule::Top(3)).unwrap().as_slice(),
            &[0, 2, 3]
        );
        assert_eq!(
            select_model(&s, SelectionRule::Top(1)).unwrap().as_slice(),
            &[3]
        );
        assert!(select_model(&s, SelectionRule::Top(4)).is_err());
        assert!(select_model(&s, SelectionRule::Threshold(-1.0)).is_err());
    }

    #[test]
    fn model_size_rule() {
        assert_eq!(default_model_size(100), 21);
        assert_eq!(default_model_size(200), 37);
    }

    #[test]
    fn cancelling_design_hides_second_predictor_from_holp_only() {
        let mut holp_hidden = 0;
        for seed in 0..10 {
            let spec = ScenarioSpec::example("2.1", 50, 300, 0.9, 1, seed).unwrap();
            let rep = spec.draw_replicate(0).unwrap();
            let ds =
                Dataset::with_truth(rep.x.clone(), rep.signal.clone(), rep.beta.clone()).unwrap();
            let dn = default_model_size(50);
            let h = holp_scores(&ds, &IndexSet::empty()).unwrap();
            let pos = rank_descending(&h).iter().position(|&j| j == 1).unwrap();
            if pos >= dn {
                holp_hidden += 1;
            }
            let c = colp_scores(&ds, &IndexSet::singleton(0)).unwrap();
            assert_eq!(rank_descending(&c)[0], 1);
        }
        assert!(holp_hidden > 5, "{holp_hidden}");
    }

    proptest! {
        #[test]
        fn ranking_is_sorted(scores in proptest::collection::vec(0.0f64..10.0, 1..40)) {
            let dom = IndexSet::new((0..scores.len()).map(|i| 2 * i + 1).collect()).unwrap();
            let s = ScoreVector::from_signed(dom, scores.clone(), false);
            let r = rank_descending(&s);
            prop_assert_eq!(r.len(), scores.len());
            for w in r.windows(2) {
                let (a, b) = (s.score_of(w[0]).unwrap(), s.score_of(w[1]).unwrap());
                prop_assert!(a > b || (a == b && w[0] < w[1]));
            }
        }
    }
}
