//! Simulation designs: covariance families, coefficient rules, noise
//! calibration to a target signal ratio, and seeded dataset sampling.
//!
//! Every random draw comes from a ChaCha stream keyed by
//! `(master_seed, replicate, stream)`, so a replicate can be regenerated in
//! isolation and in any order.

use std::io::{Read, Write};

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{spd_cholesky, GramFactor, IndexSet, Matrix, Vector};

/// Independent random streams inside one replicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Coefficients = 1,
    Predictors = 2,
    Noise = 3,
    TestPredictors = 4,
    TestNoise = 5,
}

/// The generator for one `(master_seed, replicate, stream)` triple.
pub fn stream_rng(master_seed: u64, replicate: u64, stream: Stream) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&replicate.to_le_bytes());
    seed[16..24].copy_from_slice(&(stream as u64).to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

#[derive(Clone, Debug, PartialEq)]
pub enum CovarianceFamily {
    Identity,
    /// Equal correlation `rho` between every pair.
    Compound(f64),
    /// `rho^|i-j|`.
    Ar1(f64),
    /// Predictor 0 has correlation 0.5 with all others; the others 0.75 among themselves.
    Example32,
    /// Predictors 0 and 1 independent of everything; correlation 0.5 among the rest.
    Example33,
    /// Five factor-loaded predictors plus `p - 5` predictors sharing the sum of the factors.
    Factor5,
    Explicit(Matrix),
}

/// A covariance family at a fixed dimension.
#[derive(Clone, Debug)]
pub struct CovarianceSpec {
    family: CovarianceFamily,
    p: usize,
    explicit_chol: Option<Matrix>,
}

impl CovarianceSpec {
    pub fn new(family: CovarianceFamily, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidSpec(
                "covariance dimension must be positive".into(),
            ));
        }
        let mut explicit_chol = None;
        match &family {
            CovarianceFamily::Identity => {}
            CovarianceFamily::Compound(rho) => {
                let lower = if p > 1 { -1.0 / (p as f64 - 1.0) } else { -1.0 };
                if !(*rho > lower && *rho < 1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "compound correlation {rho} outside ({lower}, 1)"
                    )));
                }
            }
            CovarianceFamily::Ar1(rho) => {
                if !(rho.abs() < 1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "ar1 correlation {rho} outside (-1, 1)"
                    )));
                }
            }
            CovarianceFamily::Example32 | CovarianceFamily::Example33 => {}
            CovarianceFamily::Factor5 => {
                if p < 6 {
                    return Err(Error::InvalidSpec(
                        "factor5 needs at least 6 predictors".into(),
                    ));
                }
            }
            CovarianceFamily::Explicit(m) => {
                if m.shape() != (p, p) {
                    return Err(Error::DimensionMismatch(format!(
                        "explicit covariance is {}x{}, expected {p}x{p}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                if m.iter().any(|v| !v.is_finite()) || (m - m.transpose()).amax() > 1e-12 {
                    return Err(Error::NotPositiveDefinite);
                }
                let ch = spd_cholesky(m).ok_or(Error::NotPositiveDefinite)?;
                explicit_chol = Some(ch.unpack());
            }
        }
        Ok(Self {
            family,
            p,
            explicit_chol,
        })
    }

    pub fn family(&self) -> &CovarianceFamily {
        &self.family
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Entry `(i, j)` of the implied covariance matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        use CovarianceFamily::*;
        match &self.family {
            Identity => f64::from(u8::from(i == j)),
            Compound(rho) => {
                if i == j {
                    1.0
                } else {
                    *rho
                }
            }
            Ar1(rho) => rho.powi(i.abs_diff(j) as i32),
            Example32 => {
                if i == j {
                    1.0
                } else if i == 0 || j == 0 {
                    0.5
                } else {
                    0.75
                }
            }
            Example33 => {
                if i == j {
                    1.0
                } else if i < 2 || j < 2 {
                    0.0
                } else {
                    0.5
                }
            }
            Factor5 => {
                let (a, b) = (i.min(j), i.max(j));
                if a == b {
                    if a < 5 {
                        1.0
                    } else {
                        1.5
                    }
                } else if b < 5 {
                    0.0
                } else if a < 5 {
                    1.0 / (2.0 * std::f64::consts::SQRT_2)
                } else {
                    1.25
                }
            }
            Explicit(m) => m[(i, j)],
        }
    }

    /// The dense `p × p` covariance matrix.
    pub fn build(&self) -> Matrix {
        match &self.family {
            CovarianceFamily::Explicit(m) => m.clone(),
            _ => Matrix::from_fn(self.p, self.p, |i, j| self.entry(i, j)),
        }
    }

    /// `beta^T Σ beta`, touching only the nonzero coefficients.
    pub fn quadratic_form(&self, beta: &Vector) -> f64 {
        let nz: Vec<usize> = (0..beta.len()).filter(|&i| beta[i] != 0.0).collect();
        let mut s = 0.0;
        for &i in &nz {
            for &j in &nz {
                s += beta[i] * self.entry(i, j) * beta[j];
            }
        }
        s
    }

    /// `n` rows drawn from the family.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        predictors: PredictorFamily,
        n: usize,
        rng: &mut R,
    ) -> Result<Matrix> {
        let p = self.p;
        if predictors == PredictorFamily::Exponential {
            if self.family != CovarianceFamily::Identity {
                return Err(Error::InvalidSpec(
                    "exponential predictors are only defined with identity covariance".into(),
                ));
            }
            let mut x = Matrix::zeros(n, p);
            for i in 0..n {
                for j in 0..p {
                    let e: f64 = rng.sample(Exp1);
                    x[(i, j)] = e - 1.0;
                }
            }
            return Ok(x);
        }

        let mut x = Matrix::zeros(n, p);
        let mut row = vec![0.0f64; p];
        let fill_row = |x: &mut Matrix, i: usize, row: &[f64]| {
            for (j, v) in row.iter().enumerate() {
                x[(i, j)] = *v;
            }
        };
        match &self.family {
            CovarianceFamily::Identity => {
                for i in 0..n {
                    for v in row.iter_mut() {
                        *v = rng.sample(StandardNormal);
                    }
                    fill_row(&mut x, i, &row);
                }
            }
            CovarianceFamily::Compound(rho) if *rho >= 0.0 => {
                let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
                for i in 0..n {
                    let g: f64 = rng.sample(StandardNormal);
                    for v in row.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        *v = a * g + b * z;
                    }
                    fill_row(&mut x, i, &row);
                }
            }
            CovarianceFamily::Ar1(rho) => {
                let b = (1.0 - rho * rho).sqrt();
                for i in 0..n {
                    let mut prev: f64 = rng.sample(StandardNormal);
                    row[0] = prev;
                    for v in row.iter_mut().skip(1) {
                        let z: f64 = rng.sample(StandardNormal);
                        prev = rho * prev + b * z;
                        *v = prev;
                    }
                    fill_row(&mut x, i, &row);
                }
            }
            CovarianceFamily::Example32 => {
                let h = 0.5f64.sqrt();
                for i in 0..n {
                    let a: f64 = rng.sample(StandardNormal);
                    let g: f64 = rng.sample(StandardNormal);
                    row[0] = a;
                    for v in row.iter_mut().skip(1) {
                        let z: f64 = rng.sample(StandardNormal);
                        *v = 0.5 * a + h * g + 0.5 * z;
                    }
                    fill_row(&mut x, i, &row);
                }
            }
            CovarianceFamily::Example33 => {
                let h = 0.5f64.sqrt();
                for i in 0..n {
                    for v in row.iter_mut().take(2) {
                        *v = rng.sample(StandardNormal);
                    }
                    let g: f64 = rng.sample(StandardNormal);
                    for v in row.iter_mut().skip(2) {
                        let z: f64 = rng.sample(StandardNormal);
                        *v = h * g + h * z;
                    }
                    fill_row(&mut x, i, &row);
                }
            }
            CovarianceFamily::Factor5 => {
                let h = 0.5f64.sqrt();
                let mut w = [0.0f64; 5];
                for i in 0..n {
                    for wk in w.iter_mut() {
                        *wk = rng.sample(StandardNormal);
                    }
                    let wsum: f64 = w.iter().sum();
                    for (j, v) in row.iter_mut().enumerate() {
                        let z: f64 = rng.sample(StandardNormal);
                        *v = if j < 5 {
                            h * (z + w[j])
                        } else {
                            0.5 * (z + wsum)
                        };
                    }
                    fill_row(&mut x, i, &row);
                }
            }
            CovarianceFamily::Compound(_) | CovarianceFamily::Explicit(_) => {
                let l = match &self.explicit_chol {
                    Some(l) => l.clone(),
                    None => spd_cholesky(&self.build())
                        .ok_or(Error::NotPositiveDefinite)?
                        .unpack(),
                };
                let z = Matrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
                x = z * l.transpose();
            }
        }
        Ok(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictorFamily {
    Gaussian,
    /// Independent `Exp(1) - 1` entries.
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorFamily {
    Normal,
    /// `Exp(λ) - 1/λ` with `λ = 1/σ`.
    Exponential,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientSpec {
    /// Sparse `(index, value)` pairs.
    Fixed(Vec<(usize, f64)>),
    /// `β_j = (-1)^U (|Z| + 4 ln n / n)` for `j < 8`, `P(U = 1) = 0.4`, drawn per replicate.
    RandomSigned8,
    /// Two active predictors, with `β_0` chosen from the realised design so
    /// that the minimum-norm estimate of `β_1` carries no signal.
    Cancelling { beta1: f64 },
}

impl CoefficientSpec {
    fn validate(&self, p: usize, n: usize) -> Result<()> {
        match self {
            CoefficientSpec::Fixed(pairs) => {
                if pairs.iter().all(|&(_, v)| v == 0.0) {
                    return Err(Error::InvalidSpec("no nonzero coefficient".into()));
                }
                let idx = IndexSet::from_unsorted(pairs.iter().map(|&(i, _)| i).collect())?;
                idx.check_bound(p)?;
                if pairs.iter().any(|&(_, v)| !v.is_finite()) {
                    return Err(Error::InvalidSpec("non-finite coefficient".into()));
                }
            }
            CoefficientSpec::RandomSigned8 => {
                if p < 8 {
                    return Err(Error::InvalidSpec("needs at least 8 predictors".into()));
                }
            }
            CoefficientSpec::Cancelling { beta1 } => {
                if *beta1 == 0.0 || !beta1.is_finite() {
                    return Err(Error::InvalidSpec(
                        "cancelling design needs beta1 != 0".into(),
                    ));
                }
                if p <= n {
                    return Err(Error::NotUnderdetermined { n, p });
                }
            }
        }
        Ok(())
    }

    /// Draws the coefficient vector; `x` is the realised design.
    pub fn draw<R: Rng + ?Sized>(&self, x: &Matrix, rng: &mut R) -> Result<Vector> {
        let (n, p) = x.shape();
        let mut beta = Vector::zeros(p);
        match self {
            CoefficientSpec::Fixed(pairs) => {
                for &(i, v) in pairs {
                    beta[i] = v;
                }
            }
            CoefficientSpec::RandomSigned8 => {
                let shift = 4.0 * (n as f64).ln() / n as f64;
                for b in beta.iter_mut().take(8) {
                    let negative = rng.random_bool(0.4);
                    let z: f64 = rng.sample(StandardNormal);
                    let mag = z.abs() + shift;
                    *b = if negative { -mag } else { mag };
                }
            }
            CoefficientSpec::Cancelling { beta1 } => {
                beta = cancelling_coefficients(x, *beta1)?;
            }
        }
        Ok(beta)
    }
}

/// `β` with `β_1 = beta1`, `β_0 = -(m_11 / m_10) β_1` and zeros elsewhere,
/// where `m_ij = X_i^T (X X^T)^{-1} X_j`.
pub fn cancelling_coefficients(x: &Matrix, beta1: f64) -> Result<Vector> {
    let (n, p) = x.shape();
    if p <= n {
        return Err(Error::NotUnderdetermined { n, p });
    }
    if p < 2 {
        return Err(Error::InvalidSpec("needs at least 2 predictors".into()));
    }
    let gf = GramFactor::new(x);
    let h1 = gf.solve(&x.column(1).clone_owned())?;
    let m11 = x.column(1).dot(&h1);
    let m10 = x.column(0).dot(&h1);
    if m10 == 0.0 {
        return Err(Error::DegenerateSignal);
    }
    let mut beta = Vector::zeros(p);
    beta[0] = -(m11 / m10) * beta1;
    beta[1] = beta1;
    Ok(beta)
}

/// Noise variance giving `var(x^T β) / var(y) = r2`.
pub fn calibrate_noise(beta: &Vector, cov: &CovarianceSpec, r2: f64) -> Result<f64> {
    if !(r2 > 0.0 && r2 < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "signal ratio {r2} outside (0, 1)"
        )));
    }
    if beta.len() != cov.p() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} predictors",
            beta.len(),
            cov.p()
        )));
    }
    let signal = cov.quadratic_form(beta);
    if !(signal > 0.0) {
        return Err(Error::DegenerateSignal);
    }
    Ok(signal * (1.0 - r2) / r2)
}

/// `Σ_i (σ_ij - σ_kj σ_kk^{-1} σ_ki) β_i`: the covariance between `x_j` and
/// `y` left after linearly removing `x_k`.
pub fn conditional_linear_covariance(sigma: &Matrix, beta: &Vector, j: usize, k: usize) -> f64 {
    let skk = sigma[(k, k)];
    (0..beta.len())
        .map(|i| (sigma[(i, j)] - sigma[(k, j)] * sigma[(k, i)] / skk) * beta[i])
        .sum()
}

/// A complete simulation design.
#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub covariance: CovarianceSpec,
    pub coefficients: CoefficientSpec,
    pub r2: f64,
    pub error_family: ErrorFamily,
    pub predictor_family: PredictorFamily,
    pub replications: usize,
    pub master_seed: u64,
}

/// Names of the built-in designs.
pub const BUILTIN_EXAMPLES: [&str; 8] = ["2.1", "3.1", "3.2", "3.3", "4.1", "4.2", "4.3", "4.4"];

impl ScenarioSpec {
    /// One of the built-in designs at the given dimensions.
    pub fn example(
        name: &str,
        n: usize,
        p: usize,
        r2: f64,
        replications: usize,
        master_seed: u64,
    ) -> Result<Self> {
        use CovarianceFamily as F;
        let fixed = |v: &[(usize, f64)]| CoefficientSpec::Fixed(v.to_vec());
        let (family, coefficients, predictors, errors) = match name {
            "2.1" => (
                F::Identity,
                CoefficientSpec::Cancelling { beta1: 1.0 },
                PredictorFamily::Gaussian,
                ErrorFamily::Normal,
            ),
            "3.1" => (
                F::Identity,
                fixed(&[(0, 5.0), (1, 1.0), (2, 1.0), (3, 1.0)]),
                PredictorFamily::Gaussian,
                ErrorFamily::Normal,
            ),
            "3.2" => (
                F::Example32,
                fixed(&[(0, 5.0), (1, 2.0), (2, 2.0), (3, 2.0), (4, -4.0)]),
                PredictorFamily::Gaussian,
                ErrorFamily::Normal,
            ),
            "3.3" => (
                F::Example33,
                fixed(&[(0, 5.0), (1, 1.0), (2, 2.0), (3, 2.0), (4, 2.0), (5, -3.0)]),
                PredictorFamily::Gaussian,
                ErrorFamily::Normal,
            ),
            "4.1" => (
                F::Identity,
                CoefficientSpec::RandomSigned8,
                PredictorFamily::Exponential,
                ErrorFamily::Exponential,
            ),
            "4.2" => (
                F::Compound(0.5),
                fixed(&[(0, 3.0), (1, 3.0), (2, 3.0), (3, 3.0), (4, 3.0), (5, -7.5)]),
                PredictorFamily::Gaussian,
                ErrorFamily::Normal,
            ),
            "4.3" => (
                F::Ar1(0.5),
                fixed(&[(0, 3.0), (3, -2.0), (6, 1.5), (9, -4.0), (12, 2.0)]),
                PredictorFamily::Gaussian,
                ErrorFamily::Normal,
            ),
            "4.4" => (
                F::Factor5,
                fixed(&[(0, 2.0), (1, 4.0), (2, 6.0), (3, 8.0), (4, 10.0)]),
                PredictorFamily::Gaussian,
                ErrorFamily::Normal,
            ),
            other => return Err(Error::InvalidSpec(format!("unknown example {other:?}"))),
        };
        let spec = Self {
            name: name.to_string(),
            n,
            p,
            covariance: CovarianceSpec::new(family, p)?,
            coefficients,
            r2,
            error_family: errors,
            predictor_family: predictors,
            replications,
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSpec("need at least 2 observations".into()));
        }
        if self.covariance.p() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "covariance dimension {} for {} predictors",
                self.covariance.p(),
                self.p
            )));
        }
        if !(self.r2 > 0.0 && self.r2 < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "signal ratio {} outside (0, 1)",
                self.r2
            )));
        }
        if self.predictor_family == PredictorFamily::Exponential
            && *self.covariance.family() != CovarianceFamily::Identity
        {
            return Err(Error::InvalidSpec(
                "exponential predictors are only defined with identity covariance".into(),
            ));
        }
        self.coefficients.validate(self.p, self.n)
    }

    /// Predictors, coefficients and unit-variance noise for one replicate,
    /// shared by every signal ratio.
    pub fn draw_replicate(&self, replicate: u64) -> Result<Replicate> {
        let seed = self.master_seed;
        let x = self.covariance.sample(
            self.predictor_family,
            self.n,
            &mut stream_rng(seed, replicate, Stream::Predictors),
        )?;
        let beta = self
            .coefficients
            .draw(&x, &mut stream_rng(seed, replicate, Stream::Coefficients))?;
        if matches!(self.coefficients, CoefficientSpec::RandomSigned8) {
            debug!(
                "replicate {replicate}: coefficients {:?}",
                &beta.as_slice()[..8]
            );
        }
        let noise = unit_noise(
            self.error_family,
            self.n,
            &mut stream_rng(seed, replicate, Stream::Noise),
        );
        let signal = &x * &beta;
        Ok(Replicate {
            x,
            beta,
            signal,
            noise,
        })
    }

    /// An independent test sample of `n` rows sharing the replicate's coefficients.
    pub fn draw_test(&self, replicate: u64, beta: &Vector, r2: f64) -> Result<Dataset> {
        let seed = self.master_seed;
        let x = self.covariance.sample(
            self.predictor_family,
            self.n,
            &mut stream_rng(seed, replicate, Stream::TestPredictors),
        )?;
        let noise = unit_noise(
            self.error_family,
            self.n,
            &mut stream_rng(seed, replicate, Stream::TestNoise),
        );
        let sigma = calibrate_noise(beta, &self.covariance, r2)?.sqrt();
        let y = &x * beta + noise * sigma;
        Dataset::with_truth(x, y, beta.clone())
    }
}

/// `n` i.i.d. zero-mean, unit-variance errors from `family`.
pub fn unit_noise<R: Rng + ?Sized>(family: ErrorFamily, n: usize, rng: &mut R) -> Vector {
    Vector::from_fn(n, |_, _| match family {
        ErrorFamily::Normal => rng.sample(StandardNormal),
        ErrorFamily::Exponential => {
            let e: f64 = rng.sample(Exp1);
            e - 1.0
        }
    })
}

/// The random parts of one replicate before the noise is scaled.
#[derive(Clone, Debug)]
pub struct Replicate {
    pub x: Matrix,
    pub beta: Vector,
    pub signal: Vector,
    pub noise: Vector,
}

impl Replicate {
    /// The dataset at signal ratio `r2`.
    pub fn dataset(&self, cov: &CovarianceSpec, r2: f64) -> Result<Dataset> {
        let sigma = calibrate_noise(&self.beta, cov, r2)?.sqrt();
        let y = &self.signal + &self.noise * sigma;
        Dataset::with_truth(self.x.clone(), y, self.beta.clone())
    }
}

/// The coefficient vector and its support.
#[derive(Clone, Debug, PartialEq)]
pub struct Truth {
    pub beta: Vector,
    pub active: IndexSet,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vector,
    pub truth: Option<Truth>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vector) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} design rows, {} responses",
                x.nrows(),
                y.len()
            )));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::DimensionMismatch("empty design".into()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("non-finite value in data".into()));
        }
        Ok(Self { x, y, truth: None })
    }

    pub fn with_truth(x: Matrix, y: Vector, beta: Vector) -> Result<Self> {
        let mut ds = Self::new(x, y)?;
        if beta.len() != ds.p() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} predictors",
                beta.len(),
                ds.p()
            )));
        }
        let active = IndexSet::new((0..beta.len()).filter(|&i| beta[i] != 0.0).collect())?;
        ds.truth = Some(Truth { beta, active });
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Writes `y,x1,...,xp` and one row per observation with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["y".to_string()];
        header.extend((1..=self.p()).map(|j| format!("x{j}")));
        wtr.write_record(&header)?;
        let mut rec = Vec::with_capacity(self.p() + 1);
        for i in 0..self.n() {
            rec.clear();
            rec.push(format!("{:.16e}", self.y[i]));
            for j in 0..self.p() {
                rec.push(format!("{:.16e}", self.x[(i, j)]));
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a CSV with a `y` column; every other column is a predictor, in file order.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let ycol = headers
            .iter()
            .position(|h| h.trim() == "y")
            .ok_or_else(|| Error::Parse("no `y` column in header".into()))?;
        let mut yv = Vec::new();
        let mut xv: Vec<f64> = Vec::new();
        let mut rows = 0usize;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (k, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Parse(format!("row {}: cannot parse {field:?}", line + 1))
                })?;
                if k == ycol {
                    yv.push(v);
                } else {
                    xv.push(v);
                }
            }
            rows += 1;
        }
        let p = headers.len() - 1;
        let x = Matrix::from_row_slice(rows, p, &xv);
        Dataset::new(x, Vector::from_vec(yv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_cov(x: &Matrix) -> Matrix {
        let n = x.nrows() as f64;
        let means = x.row_mean();
        let mut c = x.clone();
        for j in 0..c.ncols() {
            let m = means[j];
            c.column_mut(j).add_scalar_mut(-m);
        }
        c.tr_mul(&c) / (n - 1.0)
    }

    #[test]
    fn small_covariances() {
        let id = CovarianceSpec::new(CovarianceFamily::Identity, 3).unwrap();
        assert_eq!(id.build(), Matrix::identity(3, 3));

        let ar = CovarianceSpec::new(CovarianceFamily::Ar1(0.5), 3)
            .unwrap()
            .build();
        let expect = Matrix::from_row_slice(3, 3, &[1.0, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 1.0]);
        assert_eq!(ar, expect);

        let e32 = CovarianceSpec::new(CovarianceFamily::Example32, 6)
            .unwrap()
            .build();
        assert_eq!(e32[(0, 4)], 0.5);
        assert_eq!(e32[(1, 4)], 0.75);
        assert!(spd_cholesky(&e32).is_some());
    }

    #[test]
    fn invalid_families_rejected() {
        assert!(CovarianceSpec::new(CovarianceFamily::Compound(-0.6), 3).is_err());
        assert!(CovarianceSpec::new(CovarianceFamily::Ar1(1.0), 3).is_err());
        let bad = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            CovarianceSpec::new(CovarianceFamily::Explicit(bad), 2),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn built_in_families_are_positive_definite() {
        for fam in [
            CovarianceFamily::Compound(0.5),
            CovarianceFamily::Compound(-0.05),
            CovarianceFamily::Ar1(0.9),
            CovarianceFamily::Example32,
            CovarianceFamily::Example33,
            CovarianceFamily::Factor5,
        ] {
            let c = CovarianceSpec::new(fam.clone(), 15).unwrap();
            assert!(spd_cholesky(&c.build()).is_some(), "{fam:?}");
        }
    }

    #[test]
    fn unit_diagonal_except_factor_loaded_columns() {
        for fam in [
            CovarianceFamily::Identity,
            CovarianceFamily::Compound(0.5),
            CovarianceFamily::Ar1(0.3),
            CovarianceFamily::Example32,
            CovarianceFamily::Example33,
        ] {
            let c = CovarianceSpec::new(fam.clone(), 9).unwrap();
            for j in 0..9 {
                assert_eq!(c.entry(j, j), 1.0, "{fam:?}");
            }
        }
        let c = CovarianceSpec::new(CovarianceFamily::Factor5, 9).unwrap();
        assert_eq!(c.entry(4, 4), 1.0);
        assert_eq!(c.entry(5, 5), 1.5);
    }

    #[test]
    fn identity_sampling_law_of_large_numbers() {
        let c = CovarianceSpec::new(CovarianceFamily::Identity, 2).unwrap();
        let mut rng = stream_rng(1, 0, Stream::Predictors);
        let x = c
            .sample(PredictorFamily::Gaussian, 100_000, &mut rng)
            .unwrap();
        assert!((sample_cov(&x) - Matrix::identity(2, 2)).amax() < 0.02);
    }

    #[test]
    fn structured_sampling_matches_implied_covariance() {
        for fam in [
            CovarianceFamily::Compound(0.5),
            CovarianceFamily::Compound(-0.1),
            CovarianceFamily::Ar1(0.5),
            CovarianceFamily::Example32,
            CovarianceFamily::Example33,
            CovarianceFamily::Factor5,
        ] {
            let c = CovarianceSpec::new(fam.clone(), 8).unwrap();
            let mut rng = stream_rng(2, 0, Stream::Predictors);
            let x = c
                .sample(PredictorFamily::Gaussian, 100_000, &mut rng)
                .unwrap();
            let gap = (sample_cov(&x) - c.build()).amax();
            assert!(gap < 0.03, "{fam:?}: {gap}");
        }
    }

    #[test]
    fn factor5_shared_factor_covariance() {
        // x_j = (z_j + Σ w_i)/2 for j ≥ 5, so cov(x_5, x_6) = 5/4
        let c = CovarianceSpec::new(CovarianceFamily::Factor5, 7).unwrap();
        let mut rng = stream_rng(3, 0, Stream::Predictors);
        let x = c
            .sample(PredictorFamily::Gaussian, 100_000, &mut rng)
            .unwrap();
        let s = sample_cov(&x);
        assert_abs_diff_eq!(s[(5, 6)], 1.25, epsilon = 0.03);
        assert_abs_diff_eq!(s[(0, 5)], 1.0 / (2.0 * 2f64.sqrt()), epsilon = 0.02);
    }

    #[test]
    fn exponential_predictors_centered_unit_variance() {
        let c = CovarianceSpec::new(CovarianceFamily::Identity, 1).unwrap();
        let mut rng = stream_rng(4, 0, Stream::Predictors);
        let x = c
            .sample(PredictorFamily::Exponential, 100_000, &mut rng)
            .unwrap();
        let col = x.column(0);
        assert!(col.mean().abs() < 0.02);
        assert!((col.variance() - 1.0).abs() < 0.02);
        let ar = CovarianceSpec::new(CovarianceFamily::Ar1(0.2), 3).unwrap();
        assert!(ar
            .sample(PredictorFamily::Exponential, 2, &mut rng)
            .is_err());
    }

    #[test]
    fn noise_calibration() {
        let id = CovarianceSpec::new(CovarianceFamily::Identity, 5).unwrap();
        let e1 = Vector::from_fn(5, |i, _| f64::from(u8::from(i == 0)));
        assert_abs_diff_eq!(
            calibrate_noise(&e1, &id, 0.5).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let b = Vector::from_vec(vec![5.0, 1.0, 1.0, 1.0, 0.0]);
        assert_abs_diff_eq!(
            calibrate_noise(&b, &id, 0.6).unwrap(),
            28.0 * 0.4 / 0.6,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            calibrate_noise(&b, &id, 0.9).unwrap(),
            28.0 / 9.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            calibrate_noise(&Vector::zeros(5), &id, 0.5),
            Err(Error::DegenerateSignal)
        ));
        let cs = CovarianceSpec::new(CovarianceFamily::Compound(0.5), 6).unwrap();
        let b42 = Vector::from_vec(vec![3.0, 3.0, 3.0, 3.0, 3.0, -7.5]);
        assert_abs_diff_eq!(cs.quadratic_form(&b42), 78.75, epsilon = 1e-12);
    }

    #[test]
    fn empirical_signal_ratio() {
        for r2 in [0.6, 0.9] {
            let spec = ScenarioSpec::example("4.3", 50_000, 20, r2, 1, 9).unwrap();
            let ds = spec
                .draw_replicate(0)
                .unwrap()
                .dataset(&spec.covariance, r2)
                .unwrap();
            let signal = &ds.x * &ds.truth.as_ref().unwrap().beta;
            let ratio = signal.variance() / ds.y.variance();
            assert!((ratio - r2).abs() < 0.02, "{ratio} vs {r2}");
        }
    }

    #[test]
    fn exponential_errors_hit_target_ratio() {
        let spec = ScenarioSpec::example("4.1", 50_000, 10, 0.6, 1, 3).unwrap();
        let ds = spec
            .draw_replicate(0)
            .unwrap()
            .dataset(&spec.covariance, 0.6)
            .unwrap();
        let signal = &ds.x * &ds.truth.as_ref().unwrap().beta;
        let ratio = signal.variance() / ds.y.variance();
        assert!((ratio - 0.6).abs() < 0.02, "{ratio}");
        assert_eq!(ds.truth.unwrap().active.len(), 8);
    }

    #[test]
    fn determinism_and_truth() {
        let spec = ScenarioSpec::example("3.1", 30, 60, 0.9, 1, 77).unwrap();
        let a = spec
            .draw_replicate(4)
            .unwrap()
            .dataset(&spec.covariance, 0.9)
            .unwrap();
        let b = spec
            .draw_replicate(4)
            .unwrap()
            .dataset(&spec.covariance, 0.9)
            .unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.truth.as_ref().unwrap().active.as_slice(), &[0, 1, 2, 3]);
        let c = spec
            .draw_replicate(5)
            .unwrap()
            .dataset(&spec.covariance, 0.9)
            .unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn random_signed_coefficients_change_per_replicate() {
        let spec = ScenarioSpec::example("4.1", 40, 50, 0.9, 2, 5).unwrap();
        let b0 = spec.draw_replicate(0).unwrap().beta;
        let b1 = spec.draw_replicate(1).unwrap().beta;
        assert_ne!(b0, b1);
        let floor = 4.0 * 40f64.ln() / 40.0;
        for b in [&b0, &b1] {
            assert!(b.iter().take(8).all(|v| v.abs() >= floor));
            assert!(b.iter().skip(8).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn conditional_covariance_identity_design() {
        let sigma = Matrix::identity(4, 4);
        let beta = Vector::from_vec(vec![1.0, -2.0, 3.0, 0.5]);
        for j in 1..4 {
            assert_abs_diff_eq!(conditional_linear_covariance(&sigma, &beta, j, 0), beta[j]);
        }
    }

    #[test]
    fn cancelling_design_zeroes_minimum_norm_estimate() {
        let c = CovarianceSpec::new(CovarianceFamily::Identity, 40).unwrap();
        let x = c
            .sample(
                PredictorFamily::Gaussian,
                15,
                &mut stream_rng(8, 0, Stream::Predictors),
            )
            .unwrap();
        let beta = cancelling_coefficients(&x, 1.0).unwrap();
        let y = &x * &beta;
        let a = GramFactor::new(&x).solve(&y).unwrap();
        assert!(x.column(1).dot(&a).abs() < 1e-10);
    }

    #[test]
    fn csv_roundtrip() {
        let spec = ScenarioSpec::example("3.1", 5, 8, 0.6, 1, 1).unwrap();
        let ds = spec
            .draw_replicate(0)
            .unwrap()
            .dataset(&spec.covariance, 0.6)
            .unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("y,x1,x2,"));
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.y, ds.y);
    }
}
