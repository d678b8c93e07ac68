//! Exact Gaussian-process regression with a constant mean and an ARD
//! squared-exponential kernel.
//!
//! The model is fitted by Adam ascent on the exact log marginal likelihood
//! over log-transformed hyperparameters. Inputs are expected in the unit
//! hypercube and targets standardized by the caller (see [`Standardizer`]).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Diagonal jitter tried in turn when a Cholesky factorization fails.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-8, 1e-6, 1e-4];

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct GpHyperparams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub mean_constant: f64,
}

impl GpHyperparams {
    pub fn isotropic(dim: usize, lengthscale: f64, signal_variance: f64, noise_variance: f64) -> Self {
        Self {
            lengthscales: vec![lengthscale; dim],
            signal_variance,
            noise_variance,
            mean_constant: 0.0,
        }
    }

    /// Starting point used by the optimizers on unit-cube inputs and
    /// standardized targets.
    pub fn default_for(dim: usize) -> Self {
        Self::isotropic(dim, 0.5, 1.0, 0.005)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Unconstrained parameter vector: log lengthscales, log signal variance,
    /// log noise variance, mean constant.
    pub fn to_unconstrained(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_variance.ln());
        v.push(self.noise_variance.ln());
        v.push(self.mean_constant);
        v
    }

    pub fn from_unconstrained(v: &[f64]) -> Self {
        let d = v.len() - 3;
        Self {
            lengthscales: v[..d].iter().map(|l| l.exp()).collect(),
            signal_variance: v[d].exp(),
            noise_variance: v[d + 1].exp(),
            mean_constant: v[d + 2],
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !self.lengthscales.iter().all(|&l| positive(l))
            || !positive(self.signal_variance)
            || !positive(self.noise_variance)
            || !self.mean_constant.is_finite()
        {
            return Err(Error::InvalidConfig(format!(
                "GP hyperparameters must be positive and finite: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Box constraints applied to hyperparameters while fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperBounds {
    pub lengthscale: (f64, f64),
    pub signal_variance: (f64, f64),
    pub noise_variance: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        Self {
            lengthscale: (0.005, 2.0),
            signal_variance: (0.05, 20.0),
            noise_variance: (5e-4, 0.2),
        }
    }
}

impl HyperBounds {
    fn clamp_unconstrained(&self, v: &mut [f64]) {
        let d = v.len() - 3;
        let clamp_log = |x: &mut f64, (lo, hi): (f64, f64)| *x = x.clamp(lo.ln(), hi.ln());
        for l in &mut v[..d] {
            clamp_log(l, self.lengthscale);
        }
        clamp_log(&mut v[d], self.signal_variance);
        clamp_log(&mut v[d + 1], self.noise_variance);
    }
}

/// Zero-mean, unit-variance rescaling of objective values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    pub fn fit(y: &[f64]) -> Self {
        let n = y.len().max(1) as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        Self { mean, std }
    }

    pub fn forward(&self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|&v| self.forward(v)).collect()
    }
}

fn scaled(x: &[f64], lengthscales: &[f64]) -> Vec<f64> {
    x.iter().zip(lengthscales).map(|(v, l)| v / l).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Kernel matrix without the noise term.
fn kernel_matrix(scaled_x: &[Vec<f64>], signal_variance: f64) -> DMatrix<f64> {
    let n = scaled_x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = signal_variance;
        for j in 0..i {
            let v = signal_variance * (-0.5 * sq_dist(&scaled_x[i], &scaled_x[j])).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cholesky with escalating diagonal jitter; returns the factor and the
/// jitter that was needed.
pub fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    for &jitter in &JITTER_LADDER {
        let mut a = m.clone();
        if jitter > 0.0 {
            for i in 0..a.nrows() {
                a[(i, i)] += jitter;
            }
        }
        if let Some(chol) = Cholesky::new(a) {
            return Ok((chol, jitter));
        }
    }
    Err(Error::KernelNotPsd)
}

/// Fitted exact GP with cached Cholesky factor and weights.
#[derive(Debug, Clone)]
pub struct GpModel {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    hyper: GpHyperparams,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

/// Multivariate normal over a finite set of query points.
#[derive(Debug, Clone)]
pub struct PosteriorGaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GpModel {
    /// Builds the model at fixed hyperparameters.
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>, hyper: GpHyperparams) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InsufficientData("GP needs at least one training point".into()));
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if let Some(row) = x.iter().find(|r| r.len() != hyper.dim()) {
            return Err(Error::DimensionMismatch {
                expected: hyper.dim(),
                got: row.len(),
            });
        }
        hyper.validate()?;
        let sx: Vec<Vec<f64>> = x.iter().map(|r| scaled(r, &hyper.lengthscales)).collect();
        let mut k = kernel_matrix(&sx, hyper.signal_variance);
        for i in 0..k.nrows() {
            k[(i, i)] += hyper.noise_variance;
        }
        let (chol, jitter) = cholesky_with_jitter(&k)?;
        let resid = DVector::from_iterator(y.len(), y.iter().map(|v| v - hyper.mean_constant));
        let alpha = chol.solve(&resid);
        Ok(Self {
            x,
            y,
            hyper,
            chol,
            alpha,
            jitter,
        })
    }

    /// Fits hyperparameters with `steps` Adam steps on the log marginal
    /// likelihood, starting from `init`. `steps == 0` keeps `init` exactly.
    pub fn fit(
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        init: GpHyperparams,
        steps: usize,
        learning_rate: f64,
    ) -> Result<Self> {
        Self::fit_bounded(x, y, init, steps, learning_rate, &HyperBounds::default())
    }

    pub fn fit_bounded(
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        init: GpHyperparams,
        steps: usize,
        learning_rate: f64,
        bounds: &HyperBounds,
    ) -> Result<Self> {
        if steps == 0 {
            return Self::new(x, y, init);
        }
        init.validate()?;
        let mut theta = init.to_unconstrained();
        bounds.clamp_unconstrained(&mut theta);
        let mut adam = Adam::new(theta.len(), learning_rate);
        for _ in 0..steps {
            let hyper = GpHyperparams::from_unconstrained(&theta);
            let (_, grad) = log_marginal_likelihood(&x, &y, &hyper)?;
            adam.ascend(&mut theta, &grad);
            bounds.clamp_unconstrained(&mut theta);
        }
        Self::new(x, y, GpHyperparams::from_unconstrained(&theta))
    }

    pub fn hyper(&self) -> &GpHyperparams {
        &self.hyper
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn train_inputs(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn train_targets(&self) -> &[f64] {
        &self.y
    }

    /// Jitter added on top of the noise variance to make the kernel matrix
    /// factorizable.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Kernel matrix plus noise and jitter, i.e. what the cached factor
    /// reproduces.
    pub fn regularized_kernel(&self) -> DMatrix<f64> {
        let sx: Vec<Vec<f64>> = self.x.iter().map(|r| scaled(r, &self.hyper.lengthscales)).collect();
        let mut k = kernel_matrix(&sx, self.hyper.signal_variance);
        for i in 0..k.nrows() {
            k[(i, i)] += self.hyper.noise_variance + self.jitter;
        }
        k
    }

    /// Value and gradient (w.r.t. [`GpHyperparams::to_unconstrained`]) of
    /// the log marginal likelihood at the model's hyperparameters.
    pub fn log_marginal_likelihood(&self) -> Result<(f64, Vec<f64>)> {
        log_marginal_likelihood(&self.x, &self.y, &self.hyper)
    }

    fn cross_kernel(&self, xq: &[Vec<f64>]) -> DMatrix<f64> {
        let ls = &self.hyper.lengthscales;
        let sx: Vec<Vec<f64>> = self.x.iter().map(|r| scaled(r, ls)).collect();
        let mut kq = DMatrix::zeros(self.x.len(), xq.len());
        for (j, q) in xq.iter().enumerate() {
            let sq = scaled(q, ls);
            for (i, xi) in sx.iter().enumerate() {
                kq[(i, j)] = self.hyper.signal_variance * (-0.5 * sq_dist(xi, &sq)).exp();
            }
        }
        kq
    }

    /// Joint predictive distribution of the latent function at `xq`.
    pub fn posterior(&self, xq: &[Vec<f64>]) -> Result<PosteriorGaussian> {
        if xq.is_empty() {
            return Err(Error::InsufficientData("posterior needs at least one query point".into()));
        }
        if let Some(row) = xq.iter().find(|r| r.len() != self.hyper.dim()) {
            return Err(Error::DimensionMismatch {
                expected: self.hyper.dim(),
                got: row.len(),
            });
        }
        let kq = self.cross_kernel(xq);
        let mean = kq.tr_mul(&self.alpha).add_scalar(self.hyper.mean_constant);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&kq)
            .ok_or(Error::KernelNotPsd)?;
        let sq: Vec<Vec<f64>> = xq.iter().map(|r| scaled(r, &self.hyper.lengthscales)).collect();
        let mut cov = kernel_matrix(&sq, self.hyper.signal_variance);
        cov -= v.tr_mul(&v);
        cov = (&cov + cov.transpose()) * 0.5;
        Ok(PosteriorGaussian { mean, cov })
    }

    /// One joint draw of the latent function at `xq`.
    pub fn thompson_sample<R: Rng + ?Sized>(&self, xq: &[Vec<f64>], rng: &mut R) -> Result<Vec<f64>> {
        self.posterior(xq)?.sample(rng)
    }
}

impl PosteriorGaussian {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.cov.diagonal().iter().copied().collect()
    }

    /// `mean + L z` with `L` a jittered Cholesky factor of the covariance.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let q = self.mean.len();
        if self.cov.iter().all(|&c| c == 0.0) {
            return Ok(self.mean.iter().copied().collect());
        }
        let (chol, _) = cholesky_with_jitter(&self.cov)?;
        let z = DVector::from_iterator(q, (0..q).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let draw = &self.mean + chol.l_dirty().lower_triangle() * z;
        Ok(draw.iter().copied().collect())
    }
}

/// Exact-GP log marginal likelihood and its gradient with respect to the
/// unconstrained hyperparameters.
pub fn log_marginal_likelihood(
    x: &[Vec<f64>],
    y: &[f64],
    hyper: &GpHyperparams,
) -> Result<(f64, Vec<f64>)> {
    let n = x.len();
    let d = hyper.dim();
    let sx: Vec<Vec<f64>> = x.iter().map(|r| scaled(r, &hyper.lengthscales)).collect();
    let kf = kernel_matrix(&sx, hyper.signal_variance);
    let mut k = kf.clone();
    for i in 0..n {
        k[(i, i)] += hyper.noise_variance;
    }
    let (chol, _) = cholesky_with_jitter(&k)?;
    let resid = DVector::from_iterator(n, y.iter().map(|v| v - hyper.mean_constant));
    let alpha = chol.solve(&resid);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    let value = -0.5 * resid.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * LN_2PI;

    // dL/dθ = ½ tr((ααᵀ − K⁻¹) ∂K/∂θ)
    let mut w = chol.inverse();
    w.ger(1.0, &alpha, &alpha, -1.0);

    let mut grad = vec![0.0; d + 3];
    let mut signal = 0.0;
    let mut noise = 0.0;
    for i in 0..n {
        noise += w[(i, i)];
        signal += w[(i, i)] * kf[(i, i)];
        for j in 0..i {
            let a = w[(i, j)] * kf[(i, j)];
            // symmetric pair counted twice
            signal += 2.0 * a;
            for (g, (xi, xj)) in grad[..d].iter_mut().zip(sx[i].iter().zip(&sx[j])) {
                let diff = xi - xj;
                *g += 2.0 * a * diff * diff;
            }
        }
    }
    for g in &mut grad[..d] {
        *g *= 0.5;
    }
    grad[d] = 0.5 * signal;
    grad[d + 1] = 0.5 * noise * hyper.noise_variance;
    grad[d + 2] = alpha.sum();
    Ok((value, grad))
}

/// Adam in ascent form.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(dim: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn ascend(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p += self.lr * (*m / bc1) / ((*v / bc2).sqrt() + self.eps);
        }
    }
}

/// Indices of the evaluations used to train the surrogate: everything when
/// `n_total <= cap`, otherwise `must_include` plus the most recent points up
/// to `cap`. Returned in ascending order.
pub fn training_subset(n_total: usize, cap: usize, must_include: &[usize]) -> Vec<usize> {
    if n_total <= cap {
        return (0..n_total).collect();
    }
    let mut keep = vec![false; n_total];
    let mut count = 0;
    for &i in must_include {
        if i < n_total && !keep[i] {
            keep[i] = true;
            count += 1;
        }
    }
    for i in (0..n_total).rev() {
        if count >= cap {
            break;
        }
        if !keep[i] {
            keep[i] = true;
            count += 1;
        }
    }
    (0..n_total).filter(|&i| keep[i]).collect()
}

/// Like [`training_subset`], but once over the cap keeps the points nearest
/// (in unit-cube distance) to any of `centers` instead of the most recent.
/// Ties prefer the more recent point.
pub fn local_training_subset(
    points: &[Vec<f64>],
    centers: &[Vec<f64>],
    cap: usize,
    must_include: &[usize],
) -> Vec<usize> {
    let n = points.len();
    if n <= cap || centers.is_empty() {
        return training_subset(n, cap, must_include);
    }
    let mut keep = vec![false; n];
    let mut count = 0;
    for &i in must_include {
        if i < n && !keep[i] {
            keep[i] = true;
            count += 1;
        }
    }
    let near: Vec<f64> = points
        .iter()
        .map(|p| centers.iter().map(|c| sq_dist(p, c)).fold(f64::INFINITY, f64::min))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| near[a].total_cmp(&near[b]).then(b.cmp(&a)));
    for i in order {
        if count >= cap {
            break;
        }
        if !keep[i] {
            keep[i] = true;
            count += 1;
        }
    }
    (0..n).filter(|&i| keep[i]).collect()
}
