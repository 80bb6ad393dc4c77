//! Dense kernel: complement bases, projections onto the orthogonal complement
//! of a column span, pseudo-inverse application, least squares and residual
//! sums of squares.
//!
//! Matrices are `nalgebra` column-major `DMatrix<f64>`; a predictor column is
//! therefore a contiguous slice, which the screening loops rely on.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Pivot ratio (squared Cholesky pivot over largest diagonal entry) at or
/// below which a positive semi-definite matrix is treated as singular.
pub const SPD_RCOND: f64 = 1e-12;

/// Relative residual norm at or below which a column counts as lying in the
/// span of the columns already in a model.
pub const COLLINEAR_TOL: f64 = 1e-10;

/// A strictly increasing list of 0-based column indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    /// Builds a set from indices that are already strictly increasing.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndexSet(format!(
                "indices must be strictly increasing: {indices:?}"
            )));
        }
        Ok(Self(indices))
    }

    /// Sorts the indices; duplicates are rejected.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidIndexSet(format!("duplicate index {}", w[0])));
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn singleton(index: usize) -> Self {
        Self(vec![index])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v: Vec<usize> = self.0.iter().chain(other.0.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        IndexSet(v)
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        IndexSet(
            self.0
                .iter()
                .copied()
                .filter(|&i| !other.contains(i))
                .collect(),
        )
    }

    /// `{0, .., p-1}` minus this set, in increasing order.
    pub fn complement(&self, p: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(p.saturating_sub(self.len()));
        let mut it = self.0.iter().peekable();
        for j in 0..p {
            if it.peek() == Some(&&j) {
                it.next();
            } else {
                out.push(j);
            }
        }
        out
    }

    /// Errors unless every index is `< p`.
    pub fn check_bound(&self, p: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= p => Err(Error::InvalidIndexSet(format!(
                "index {last} out of range for {p} columns"
            ))),
            _ => Ok(()),
        }
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl TryFrom<Vec<usize>> for IndexSet {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        IndexSet::from_unsorted(v)
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(s: IndexSet) -> Vec<usize> {
        s.0
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Column `j` of a column-major matrix as a slice.
#[inline]
pub fn col(x: &Matrix, j: usize) -> &[f64] {
    let n = x.nrows();
    &x.as_slice()[j * n..(j + 1) * n]
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // independent accumulators so the loop vectorises
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Numerical rank with the `max(m, k) * eps * sigma_max` cut-off.
pub fn numerical_rank(a: &Matrix) -> usize {
    let (m, k) = a.shape();
    if m == 0 || k == 0 {
        return 0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.max();
    let tol = (m.max(k) as f64) * f64::EPSILON * smax;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Householder factorisation `U = H_1 ⋯ H_t` of a full-column-rank `x_c`:
/// the first `t` columns of `U` span `x_c`, the trailing `n − t` columns form
/// an orthonormal basis of its complement.
#[derive(Clone, Debug)]
pub struct ComplementReflectors {
    n: usize,
    t: usize,
    reflectors: Vec<(usize, Vector, f64)>,
}

impl ComplementReflectors {
    pub fn new(x_c: &Matrix) -> Result<Self> {
        let (n, t) = x_c.shape();
        if t >= n {
            return Err(Error::DimensionMismatch(format!(
                "conditioning set of size {t} leaves no complement in R^{n}"
            )));
        }
        if t > 0 {
            let rank = numerical_rank(x_c);
            if rank < t {
                return Err(Error::RankDeficient { rank, expected: t });
            }
        }
        let mut a = x_c.clone();
        let mut reflectors = Vec::with_capacity(t);
        for k in 0..t {
            let mut v: Vector = a.column(k).rows(k, n - k).clone_owned();
            let norm = v.norm();
            if norm == 0.0 {
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let beta = 2.0 / v.norm_squared();
            let mut sub = a.view_mut((k, k), (n - k, t - k));
            let w = sub.tr_mul(&v);
            sub.ger(-beta, &v, &w, 1.0);
            reflectors.push((k, v, beta));
        }
        Ok(Self { n, t, reflectors })
    }

    /// Dimension of the complement.
    pub fn complement_dim(&self) -> usize {
        self.n - self.t
    }

    /// `a ← U a`.
    pub fn apply(&self, a: &mut Matrix) {
        for (k, v, beta) in self.reflectors.iter().rev() {
            let mut sub = a.rows_mut(*k, self.n - k);
            let w = sub.tr_mul(v);
            sub.ger(-beta, v, &w, 1.0);
        }
    }

    /// `a ← U^T a`.
    pub fn apply_t(&self, a: &mut Matrix) {
        for (k, v, beta) in &self.reflectors {
            let mut sub = a.rows_mut(*k, self.n - k);
            let w = sub.tr_mul(v);
            sub.ger(-beta, v, &w, 1.0);
        }
    }

    /// `Q_C^T a`.
    pub fn basis_tr_mul(&self, a: &Matrix) -> Matrix {
        let mut u = a.clone();
        self.apply_t(&mut u);
        u.rows(self.t, self.n - self.t).clone_owned()
    }

    /// `Q_C b`.
    pub fn basis_mul(&self, b: &Matrix) -> Matrix {
        let mut u = Matrix::zeros(self.n, b.ncols());
        u.rows_mut(self.t, self.n - self.t).copy_from(b);
        self.apply(&mut u);
        u
    }

    /// `Q_C^T g Q_C` for a symmetric `g`, symmetrised.
    pub fn congruence(&self, g: &Matrix) -> Matrix {
        let mut a = g.clone();
        self.apply_t(&mut a);
        a.transpose_mut();
        self.apply_t(&mut a);
        let m = self.n - self.t;
        let mut out = a.view((self.t, self.t), (m, m)).clone_owned();
        for j in 0..m {
            for i in j + 1..m {
                let s = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }

    /// The explicit basis `Q_C`.
    pub fn basis(&self) -> Matrix {
        self.basis_mul(&Matrix::identity(self.n - self.t, self.n - self.t))
    }
}

/// Orthonormal basis `Q_C` (n × (n − t_c)) of the orthogonal complement of
/// the column span of `x_c`.
///
/// Householder reflectors are accumulated from a full QR factorisation of
/// `x_c` and applied to the trailing identity columns. An `n × 0` input
/// returns the identity.
pub fn complement_basis(x_c: &Matrix) -> Result<Matrix> {
    Ok(ComplementReflectors::new(x_c)?.basis())
}

/// `M_C a = Q_C (Q_C^T a)` for a complement basis `q_c`.
pub fn project_complement(q_c: &Matrix, a: &Matrix) -> Result<Matrix> {
    if q_c.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows, operand has {}",
            q_c.nrows(),
            a.nrows()
        )));
    }
    Ok(q_c * q_c.tr_mul(a))
}

fn svd_cutoff(svd: &SVD<f64, Dyn, Dyn>, m: usize, k: usize) -> f64 {
    let smax = if svd.singular_values.is_empty() {
        0.0
    } else {
        svd.singular_values.max()
    };
    (m.max(k) as f64) * f64::EPSILON * smax
}

/// `a⁺ y` through a singular value decomposition; singular values at or
/// below `max(m, k) * eps * sigma_max` are treated as zero.
pub fn pinv_apply(a: &Matrix, y: &Vector) -> Result<Vector> {
    let (m, k) = a.shape();
    if y.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "operand has {m} rows, right-hand side has {}",
            y.len()
        )));
    }
    if m == 0 || k == 0 {
        return Ok(Vector::zeros(k));
    }
    let svd = SVD::new(a.clone(), true, true);
    let tol = svd_cutoff(&svd, m, k);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut c = u.tr_mul(y);
    for (ci, &s) in c.iter_mut().zip(svd.singular_values.iter()) {
        *ci = if s > tol { *ci / s } else { 0.0 };
    }
    Ok(v_t.tr_mul(&c))
}

/// The full Moore–Penrose inverse, same cut-off as [`pinv_apply`].
pub fn pinv(a: &Matrix) -> Matrix {
    let (m, k) = a.shape();
    if m == 0 || k == 0 {
        return Matrix::zeros(k, m);
    }
    let svd = SVD::new(a.clone(), true, true);
    let tol = svd_cutoff(&svd, m, k);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut ut = u.transpose();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let scale = if s > tol { 1.0 / s } else { 0.0 };
        ut.row_mut(i).scale_mut(scale);
    }
    v_t.tr_mul(&ut)
}

/// Least-squares coefficients of `y` on the columns of `x_m`.
pub fn ols(x_m: &Matrix, y: &Vector) -> Result<Vector> {
    let (n, k) = x_m.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "design has {n} rows, response has {}",
            y.len()
        )));
    }
    if k == 0 {
        return Ok(Vector::zeros(0));
    }
    if k > n {
        return Err(Error::RankDeficient {
            rank: n,
            expected: k,
        });
    }
    let qr = x_m.clone().qr();
    let r = qr.r();
    let rmax = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = (n.max(k) as f64) * f64::EPSILON * rmax;
    let rank = r.diagonal().iter().filter(|v| v.abs() > tol).count();
    if rank < k {
        return Err(Error::RankDeficient { rank, expected: k });
    }
    let qty = qr.q().tr_mul(y);
    r.solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient { rank, expected: k })
}

/// Residual sum of squares of `y` after least squares on `x_m`; `‖y‖²` when
/// `x_m` has no columns.
pub fn rss(x_m: &Matrix, y: &Vector) -> Result<f64> {
    if x_m.ncols() == 0 {
        return Ok(y.norm_squared());
    }
    let b = ols(x_m, y)?;
    Ok((y - x_m * b).norm_squared().max(0.0))
}

/// Cholesky factor of a symmetric positive semi-definite matrix, or `None`
/// when a pivot falls to the [`SPD_RCOND`] level.
pub fn spd_cholesky(m: &Matrix) -> Option<Cholesky<f64, Dyn>> {
    if m.is_empty() {
        return None;
    }
    let maxdiag = m.diagonal().max();
    if !(maxdiag > 0.0) || !maxdiag.is_finite() {
        return None;
    }
    let ch = Cholesky::new(m.clone())?;
    let l = ch.l_dirty();
    let minpiv = (0..l.nrows())
        .map(|i| l[(i, i)] * l[(i, i)])
        .fold(f64::INFINITY, f64::min);
    if minpiv <= SPD_RCOND * maxdiag {
        return None;
    }
    Some(ch)
}

/// The row Gram matrix `X X^T` together with its Cholesky factor (absent
/// when `X X^T` is numerically singular).
pub struct GramFactor {
    gram: Matrix,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl GramFactor {
    pub fn new(x: &Matrix) -> Self {
        let xt = x.transpose();
        let mut gram = x * xt;
        let n = gram.nrows();
        for j in 0..n {
            for i in j + 1..n {
                gram[(j, i)] = gram[(i, j)];
            }
        }
        let chol = spd_cholesky(&gram);
        Self { gram, chol }
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn is_singular(&self) -> bool {
        self.chol.is_none()
    }

    /// `(X X^T)^{-1} b`.
    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        self.chol
            .as_ref()
            .map(|c| c.solve(b))
            .ok_or(Error::SingularGram)
    }
}

/// Least squares over a growing, nested set of columns.
///
/// Keeps an orthonormal basis of the current columns (Gram–Schmidt with a
/// second orthogonalisation pass on insertion) and the current residual, so
/// the RSS of the model extended by one candidate column costs `O(n k)`.
#[derive(Clone, Debug)]
pub struct NestedLeastSquares {
    basis: Vec<Vec<f64>>,
    residual: Vec<f64>,
}

impl NestedLeastSquares {
    pub fn new(y: &Vector) -> Self {
        Self {
            basis: Vec::new(),
            residual: y.as_slice().to_vec(),
        }
    }

    /// Starts from the columns `cols` of `x`.
    pub fn with_columns(x: &Matrix, y: &Vector, cols: &[usize]) -> Result<Self> {
        let mut ls = Self::new(y);
        for &j in cols {
            ls.push(col(x, j))?;
        }
        Ok(ls)
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn rss(&self) -> f64 {
        dot(&self.residual, &self.residual)
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    fn orthogonalize(&self, e: &mut [f64]) {
        for q in &self.basis {
            let c = dot(q, e);
            axpy(-c, q, e);
        }
    }

    /// RSS after adding column `x`, or `None` when `x` lies in the current span.
    pub fn candidate_rss(&self, x: &[f64]) -> Option<f64> {
        let mut e = x.to_vec();
        self.orthogonalize(&mut e);
        let en2 = dot(&e, &e);
        if en2 <= COLLINEAR_TOL * COLLINEAR_TOL * dot(x, x) || en2 == 0.0 {
            return None;
        }
        let c = dot(&self.residual, &e) / en2;
        let mut s = 0.0;
        for (r, ei) in self.residual.iter().zip(&e) {
            let d = r - c * ei;
            s += d * d;
        }
        Some(s)
    }

    /// Adds column `x` to the model.
    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.residual.len() {
            return Err(Error::DimensionMismatch(format!(
                "column of length {} for a model with {} rows",
                x.len(),
                self.residual.len()
            )));
        }
        let mut e = x.to_vec();
        self.orthogonalize(&mut e);
        self.orthogonalize(&mut e);
        let en = dot(&e, &e).sqrt();
        if en <= COLLINEAR_TOL * dot(x, x).sqrt() || en == 0.0 {
            return Err(Error::RankDeficient {
                rank: self.basis.len(),
                expected: self.basis.len() + 1,
            });
        }
        for v in e.iter_mut() {
            *v /= en;
        }
        let c = dot(&e, &self.residual);
        axpy(-c, &e, &mut self.residual);
        self.basis.push(e);
        Ok(())
    }
}
