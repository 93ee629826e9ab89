//! Gaussian observation models and their base measures.
//!
//! Two kernels are provided. [`ConjugateNormalBase`] is univariate: the
//! component variance is inverse-gamma, the component mean is Gaussian given
//! the variance, and cluster marginal likelihoods are available in closed
//! form. [`NonconjugateGaussianBase`] is D-variate with independent Gaussian
//! mean and inverse-Wishart covariance, so components must be instantiated.
//! Both carry the same hierarchical hyperprior on the inverse-Wishart scale
//! `Sigma0`, calibrated from the observed data range so that the prior
//! expectation of a component covariance is `S0 / 50`.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::{Data, Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Cached sufficient statistics of one cluster: observation count, sum, and
/// sum of outer products. Incremental add/remove keeps sampler inner loops
/// O(D^2) per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    n: usize,
    sum: DVector<f64>,
    sum_outer: DMatrix<f64>,
}

impl ClusterStats {
    pub fn zero(d: usize) -> Self {
        Self { n: 0, sum: DVector::zeros(d), sum_outer: DMatrix::zeros(d, d) }
    }

    pub fn add(&mut self, y: &[f64]) {
        debug_assert_eq!(y.len(), self.sum.len());
        self.n += 1;
        for i in 0..y.len() {
            self.sum[i] += y[i];
            for j in 0..y.len() {
                self.sum_outer[(i, j)] += y[i] * y[j];
            }
        }
    }

    pub fn remove(&mut self, y: &[f64]) {
        debug_assert!(self.n > 0, "removing from an empty stats record");
        debug_assert_eq!(y.len(), self.sum.len());
        self.n -= 1;
        for i in 0..y.len() {
            self.sum[i] -= y[i];
            for j in 0..y.len() {
                self.sum_outer[(i, j)] -= y[i] * y[j];
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn sum(&self) -> &DVector<f64> {
        &self.sum
    }

    pub fn sum_outer(&self) -> &DMatrix<f64> {
        &self.sum_outer
    }
}

/// One mixture component: a Gaussian with mean vector and positive-definite
/// covariance. The lower Cholesky factor is computed once at construction
/// and reused for density evaluation and observation sampling.
#[derive(Debug, Clone)]
pub struct GaussianComponent {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol_lower: DMatrix<f64>,
    log_det: f64,
}

impl GaussianComponent {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::invalid_parameter(format!(
                "covariance is {}x{} but mean has length {d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let chol = Cholesky::new(cov.clone()).ok_or_else(|| {
            Error::NotPositiveDefinite("component covariance failed Cholesky".into())
        })?;
        let chol_lower = chol.l();
        let log_det = 2.0 * chol_lower.diagonal().iter().map(|x| x.ln()).sum::<f64>();
        Ok(Self { mean, cov, chol_lower, log_det })
    }

    /// Univariate convenience constructor.
    pub fn scalar(mean: f64, var: f64) -> Result<Self> {
        Self::new(DVector::from_element(1, mean), DMatrix::from_element(1, 1, var))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn log_det_cov(&self) -> f64 {
        self.log_det
    }

    /// Log density of this Gaussian at `y`.
    pub fn log_density(&self, y: &[f64]) -> f64 {
        let d = self.dim();
        debug_assert_eq!(y.len(), d);
        if d == 1 {
            let z = y[0] - self.mean[0];
            return -0.5 * (LN_2PI + self.log_det + z * z / self.cov[(0, 0)]);
        }
        let diff = DVector::from_column_slice(y) - &self.mean;
        let z = self
            .chol_lower
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has nonzero diagonal");
        -0.5 * (d as f64 * LN_2PI + self.log_det + z.norm_squared())
    }

    /// Draws one observation from this component.
    pub fn sample_observation<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = &self.mean + &self.chol_lower * z;
        y.iter().copied().collect()
    }

    /// Inverse of the covariance, via the cached Cholesky factor.
    pub(crate) fn cov_inverse(&self) -> DMatrix<f64> {
        let d = self.dim();
        let eye = DMatrix::identity(d, d);
        let lo = self.chol_lower.solve_lower_triangular(&eye).expect("triangular solve");
        symmetrize(&(self.chol_lower.transpose().solve_upper_triangular(&lo).expect("triangular solve")))
    }
}

/// Observation model plus base measure over component parameters, owning the
/// mutable `Sigma0` scale state shared by all components.
///
/// Conjugate-only operations (`log_marginal`, `log_predictive`) panic on a
/// kernel that cannot marginalize components analytically; samplers validate
/// compatibility before running.
pub trait MixtureKernel {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    /// Whether cluster marginal likelihoods exist in closed form.
    fn is_conjugate(&self) -> bool;

    /// Log marginal likelihood of a cluster's data under the base measure;
    /// 0 for an empty cluster.
    fn log_marginal(&self, stats: &ClusterStats) -> f64;

    /// Log predictive density of `y` given a cluster's data (prior
    /// predictive when `stats` is empty).
    fn log_predictive(&self, y: &[f64], stats: &ClusterStats) -> f64;

    /// Log observation density `f(y | component)`.
    fn log_component_density(&self, y: &[f64], comp: &GaussianComponent) -> f64 {
        comp.log_density(y)
    }

    /// Draws component parameters from the base measure.
    fn sample_component_prior(&self, rng: &mut dyn rand::RngCore) -> GaussianComponent;

    /// Draws component parameters given the cluster's data. The conjugate
    /// kernel draws exactly from the conditional; the nonconjugate kernel
    /// performs one Gibbs scan (mean given covariance, then covariance given
    /// mean) starting from `current`, or from a fresh prior draw when
    /// `current` is `None`. Empty stats always reduce to a prior draw.
    fn sample_component_posterior(
        &self,
        current: Option<&GaussianComponent>,
        stats: &ClusterStats,
        rng: &mut dyn rand::RngCore,
    ) -> GaussianComponent;

    /// Log density of component parameters under the base measure.
    fn log_component_prior_density(&self, comp: &GaussianComponent) -> f64;

    /// Gibbs update of `Sigma0` given all occupied components; with no
    /// components this is a draw from the hyperprior.
    fn update_sigma0(&mut self, components: &[GaussianComponent], rng: &mut dyn rand::RngCore);

    /// Current `Sigma0` scale matrix.
    fn sigma0(&self) -> DMatrix<f64>;

    fn clone_box(&self) -> Box<dyn MixtureKernel>;
}

impl Clone for Box<dyn MixtureKernel> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Per-dimension midpoint and half-range of the data; errors on zero range.
fn data_range(data: &Data) -> Result<(Vec<f64>, Vec<f64>)> {
    if data.len() < 2 {
        return Err(Error::invalid_data("range-based prior needs at least 2 observations"));
    }
    let d = data.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in data.rows() {
        for (j, &y) in row.iter().enumerate() {
            lo[j] = lo[j].min(y);
            hi[j] = hi[j].max(y);
        }
    }
    let mut mid = Vec::with_capacity(d);
    let mut half = Vec::with_capacity(d);
    for j in 0..d {
        if hi[j] <= lo[j] {
            return Err(Error::invalid_data(format!(
                "dimension {j} has zero range; the range-based prior is undefined"
            )));
        }
        mid.push(0.5 * (lo[j] + hi[j]));
        half.push(0.5 * (hi[j] - lo[j]));
    }
    Ok((mid, half))
}

/// Hyperprior scale factor `gamma0` such that the prior expectation of a
/// component covariance equals `S0 / 50`: the component law contributes
/// `E[Sigma | Sigma0] = Sigma0 / (alpha0 - D - 1) = Sigma0 / 2` at
/// `alpha0 = D + 3`, and the `Sigma0` hyperprior has mean `beta0 gamma0 S0`.
fn gamma0_for(beta0: f64) -> f64 {
    1.0 / (25.0 * beta0)
}

/// Conjugate univariate Gaussian base measure.
///
/// Component law given `Sigma0`: variance `V ~ InvGamma(alpha0/2, Sigma0/2)`
/// and mean `m | V ~ N(m0, (S0 / Sigma0) V)`, a normal-inverse-gamma family
/// with strength `kappa = Sigma0 / S0`. `Sigma0` itself is random with a
/// Wishart-type hyperprior of degree `beta0` and scale `gamma0 S0`.
#[derive(Debug, Clone)]
pub struct ConjugateNormalBase {
    m0: f64,
    s0: f64,
    alpha0: f64,
    beta0: f64,
    gamma0: f64,
    sigma0: f64,
}

impl ConjugateNormalBase {
    pub fn new(m0: f64, s0: f64, alpha0: f64, beta0: f64, gamma0: f64, sigma0: f64) -> Result<Self> {
        for (name, v) in [("S0", s0), ("alpha0", alpha0), ("beta0", beta0), ("gamma0", gamma0), ("Sigma0", sigma0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid_parameter(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !m0.is_finite() {
            return Err(Error::invalid_parameter("m0 must be finite"));
        }
        Ok(Self { m0, s0, alpha0, beta0, gamma0, sigma0 })
    }

    /// Range-based weakly informative configuration for univariate data:
    /// `m0` the data midrange, `S0` the squared half-range, `alpha0 = 4`,
    /// `beta0 = 0.4`, `gamma0` fixed so `E[V] = S0 / 50`, and `Sigma0`
    /// initialized at its hyperprior mean.
    pub fn weakly_informative(data: &Data) -> Result<Self> {
        if data.dim() != 1 {
            return Err(Error::invalid_data(format!(
                "conjugate kernel is univariate; data has dimension {}",
                data.dim()
            )));
        }
        let (mid, half) = data_range(data)?;
        let s0 = half[0] * half[0];
        let (alpha0, beta0) = (4.0, 0.4);
        let gamma0 = gamma0_for(beta0);
        Self::new(mid[0], s0, alpha0, beta0, gamma0, beta0 * gamma0 * s0)
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    /// Normal-inverse-gamma prior parameters `(kappa, alpha, beta)` implied
    /// by the current `Sigma0`.
    fn nig_prior(&self) -> (f64, f64, f64) {
        (self.sigma0 / self.s0, 0.5 * self.alpha0, 0.5 * self.sigma0)
    }

    /// Posterior normal-inverse-gamma parameters given cluster statistics.
    fn nig_posterior(&self, stats: &ClusterStats) -> (f64, f64, f64, f64) {
        let (kappa, alpha, beta) = self.nig_prior();
        if stats.n() == 0 {
            return (kappa, self.m0, alpha, beta);
        }
        let n = stats.n() as f64;
        let s1 = stats.sum()[0];
        let s2 = stats.sum_outer()[(0, 0)];
        let mean = s1 / n;
        let ss = (s2 - s1 * s1 / n).max(0.0);
        let kappa_n = kappa + n;
        let m_n = (kappa * self.m0 + s1) / kappa_n;
        let alpha_n = alpha + 0.5 * n;
        let beta_n = beta + 0.5 * ss + 0.5 * kappa * n * (mean - self.m0).powi(2) / kappa_n;
        (kappa_n, m_n, alpha_n, beta_n)
    }
}

impl MixtureKernel for ConjugateNormalBase {
    fn name(&self) -> &'static str {
        "conjugate-normal"
    }

    fn dim(&self) -> usize {
        1
    }

    fn is_conjugate(&self) -> bool {
        true
    }

    fn log_marginal(&self, stats: &ClusterStats) -> f64 {
        if stats.n() == 0 {
            return 0.0;
        }
        let (kappa, alpha, beta) = self.nig_prior();
        let (kappa_n, _, alpha_n, beta_n) = self.nig_posterior(stats);
        let n = stats.n() as f64;
        -0.5 * n * LN_2PI + 0.5 * (kappa.ln() - kappa_n.ln()) + ln_gamma(alpha_n)
            - ln_gamma(alpha)
            + alpha * beta.ln()
            - alpha_n * beta_n.ln()
    }

    fn log_predictive(&self, y: &[f64], stats: &ClusterStats) -> f64 {
        debug_assert_eq!(y.len(), 1);
        let (kappa_n, m_n, alpha_n, beta_n) = self.nig_posterior(stats);
        let dof = 2.0 * alpha_n;
        let scale = (beta_n * (kappa_n + 1.0) / (alpha_n * kappa_n)).sqrt();
        log_student_t(y[0], dof, m_n, scale)
    }

    fn sample_component_prior(&self, rng: &mut dyn rand::RngCore) -> GaussianComponent {
        let (kappa, alpha, beta) = self.nig_prior();
        sample_nig(self.m0, kappa, alpha, beta, rng)
    }

    fn sample_component_posterior(
        &self,
        _current: Option<&GaussianComponent>,
        stats: &ClusterStats,
        rng: &mut dyn rand::RngCore,
    ) -> GaussianComponent {
        let (kappa_n, m_n, alpha_n, beta_n) = self.nig_posterior(stats);
        sample_nig(m_n, kappa_n, alpha_n, beta_n, rng)
    }

    fn log_component_prior_density(&self, comp: &GaussianComponent) -> f64 {
        debug_assert_eq!(comp.dim(), 1);
        let (kappa, alpha, beta) = self.nig_prior();
        let m = comp.mean()[0];
        let v = comp.cov()[(0, 0)];
        let log_inv_gamma = alpha * beta.ln() - ln_gamma(alpha) - (alpha + 1.0) * v.ln() - beta / v;
        let log_mean = -0.5 * (LN_2PI + (v / kappa).ln() + kappa * (m - self.m0).powi(2) / v);
        log_inv_gamma + log_mean
    }

    fn update_sigma0(&mut self, components: &[GaussianComponent], rng: &mut dyn rand::RngCore) {
        // Sigma0 enters each component through both the variance law
        // InvGamma(alpha0/2, Sigma0/2) and the mean law
        // N(m0, (S0/Sigma0) V); collecting terms gives a gamma full
        // conditional.
        let mut shape = 0.5 * self.beta0;
        let mut rate = 0.5 / (self.gamma0 * self.s0);
        for comp in components {
            debug_assert_eq!(comp.dim(), 1);
            let m = comp.mean()[0];
            let v = comp.cov()[(0, 0)];
            shape += 0.5 * (self.alpha0 + 1.0);
            rate += 0.5 / v * (1.0 + (m - self.m0).powi(2) / self.s0);
        }
        let draw = Gamma::new(shape, 1.0 / rate).expect("gamma parameters positive").sample(rng);
        self.sigma0 = draw.max(f64::MIN_POSITIVE);
    }

    fn sigma0(&self) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, self.sigma0)
    }

    fn clone_box(&self) -> Box<dyn MixtureKernel> {
        Box::new(self.clone())
    }
}

/// Nonconjugate D-variate Gaussian base measure: component mean
/// `m ~ N(m0, S0)` independent of component covariance
/// `Sigma ~ InvWishart(alpha0, Sigma0)`, with the same range-based
/// hyperprior on `Sigma0` as the conjugate kernel.
#[derive(Debug, Clone)]
pub struct NonconjugateGaussianBase {
    d: usize,
    m0: DVector<f64>,
    s0_diag: DVector<f64>,
    alpha0: f64,
    beta0: f64,
    gamma0: f64,
    sigma0: DMatrix<f64>,
}

impl NonconjugateGaussianBase {
    pub fn new(
        m0: DVector<f64>,
        s0_diag: DVector<f64>,
        alpha0: f64,
        beta0: f64,
        gamma0: f64,
        sigma0: DMatrix<f64>,
    ) -> Result<Self> {
        let d = m0.len();
        if d == 0 || s0_diag.len() != d || sigma0.nrows() != d || sigma0.ncols() != d {
            return Err(Error::invalid_parameter("inconsistent dimensions in base measure"));
        }
        if s0_diag.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::invalid_parameter("S0 diagonal must be positive"));
        }
        if !(alpha0 > d as f64 - 1.0) {
            return Err(Error::invalid_parameter(format!(
                "alpha0 must exceed D - 1 = {}, got {alpha0}",
                d - 1
            )));
        }
        if !(beta0 > d as f64 - 1.0) {
            return Err(Error::invalid_parameter(format!(
                "beta0 must exceed D - 1 = {}, got {beta0}",
                d - 1
            )));
        }
        if !(gamma0.is_finite() && gamma0 > 0.0) {
            return Err(Error::invalid_parameter("gamma0 must be positive"));
        }
        if Cholesky::new(sigma0.clone()).is_none() {
            return Err(Error::NotPositiveDefinite("initial Sigma0".into()));
        }
        Ok(Self { d, m0, s0_diag, alpha0, beta0, gamma0, sigma0 })
    }

    /// Range-based weakly informative configuration: `m0` the per-dimension
    /// midrange, `S0 = diag(half-range^2)`, `alpha0 = D + 3`,
    /// `beta0 = D - 0.6`, `gamma0` fixed so `E[Sigma] = S0 / 50`, and
    /// `Sigma0` initialized at its hyperprior mean.
    pub fn weakly_informative(data: &Data) -> Result<Self> {
        let d = data.dim();
        let (mid, half) = data_range(data)?;
        let m0 = DVector::from_vec(mid);
        let s0_diag = DVector::from_iterator(d, half.iter().map(|h| h * h));
        let alpha0 = d as f64 + 3.0;
        let beta0 = d as f64 - 0.6;
        let gamma0 = gamma0_for(beta0);
        let sigma0 = DMatrix::from_diagonal(&(&s0_diag * (beta0 * gamma0)));
        Self::new(m0, s0_diag, alpha0, beta0, gamma0, sigma0)
    }

    pub fn m0(&self) -> &DVector<f64> {
        &self.m0
    }

    pub fn s0_diag(&self) -> &DVector<f64> {
        &self.s0_diag
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    /// Draws the mean from its Gaussian full conditional given the
    /// covariance and the cluster statistics.
    fn draw_mean_given_cov<R: Rng + ?Sized>(
        &self,
        cov: &GaussianComponent,
        stats: &ClusterStats,
        rng: &mut R,
    ) -> DVector<f64> {
        let n = stats.n() as f64;
        let cov_inv = cov.cov_inverse();
        let mut precision = &cov_inv * n;
        let mut b = &cov_inv * stats.sum();
        for i in 0..self.d {
            precision[(i, i)] += 1.0 / self.s0_diag[i];
            b[i] += self.m0[i] / self.s0_diag[i];
        }
        let chol = Cholesky::new(symmetrize(&precision)).expect("posterior precision is PD");
        let mean = chol.solve(&b);
        let z = DVector::from_fn(self.d, |_, _| rng.sample::<f64, _>(StandardNormal));
        // x = mean + L^{-T} z has covariance precision^{-1}.
        let l_t = chol.l().transpose();
        mean + l_t.solve_upper_triangular(&z).expect("triangular solve")
    }

    /// Draws the covariance from its inverse-Wishart full conditional given
    /// the mean and the cluster statistics.
    fn draw_cov_given_mean<R: Rng + ?Sized>(
        &self,
        mean: &DVector<f64>,
        stats: &ClusterStats,
        rng: &mut R,
    ) -> DMatrix<f64> {
        let n = stats.n() as f64;
        let sum = stats.sum();
        let mut scale = self.sigma0.clone() + stats.sum_outer();
        scale -= mean * sum.transpose();
        scale -= sum * mean.transpose();
        scale += mean * mean.transpose() * n;
        sample_inverse_wishart(self.alpha0 + n, &symmetrize(&scale), rng)
    }
}

impl MixtureKernel for NonconjugateGaussianBase {
    fn name(&self) -> &'static str {
        "nonconjugate-gaussian"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn is_conjugate(&self) -> bool {
        false
    }

    fn log_marginal(&self, _stats: &ClusterStats) -> f64 {
        panic!("the nonconjugate Gaussian kernel has no closed-form cluster marginal");
    }

    fn log_predictive(&self, _y: &[f64], _stats: &ClusterStats) -> f64 {
        panic!("the nonconjugate Gaussian kernel has no closed-form predictive");
    }

    fn sample_component_prior(&self, rng: &mut dyn rand::RngCore) -> GaussianComponent {
        let mean = DVector::from_fn(self.d, |i, _| {
            self.m0[i] + self.s0_diag[i].sqrt() * rng.sample::<f64, _>(StandardNormal)
        });
        let cov = sample_inverse_wishart(self.alpha0, &self.sigma0, rng);
        GaussianComponent::new(mean, cov).expect("inverse-Wishart draw is PD")
    }

    fn sample_component_posterior(
        &self,
        current: Option<&GaussianComponent>,
        stats: &ClusterStats,
        rng: &mut dyn rand::RngCore,
    ) -> GaussianComponent {
        if stats.n() == 0 {
            return self.sample_component_prior(rng);
        }
        let start;
        let cov_holder = match current {
            Some(c) => c,
            None => {
                start = self.sample_component_prior(rng);
                &start
            }
        };
        let mean = self.draw_mean_given_cov(cov_holder, stats, rng);
        let cov = self.draw_cov_given_mean(&mean, stats, rng);
        GaussianComponent::new(mean, cov).expect("full-conditional covariance is PD")
    }

    fn log_component_prior_density(&self, comp: &GaussianComponent) -> f64 {
        debug_assert_eq!(comp.dim(), self.d);
        let mut lp = 0.0;
        for i in 0..self.d {
            let z = comp.mean()[i] - self.m0[i];
            lp += -0.5 * (LN_2PI + self.s0_diag[i].ln() + z * z / self.s0_diag[i]);
        }
        lp + log_inv_wishart(comp, self.alpha0, &self.sigma0)
    }

    fn update_sigma0(&mut self, components: &[GaussianComponent], rng: &mut dyn rand::RngCore) {
        // Sigma0 appears as the scale of each component's inverse-Wishart
        // covariance; combined with the Wishart-type hyperprior this gives a
        // Wishart full conditional with degree additive in cluster count.
        let hyper_scale = DMatrix::from_diagonal(&(&self.s0_diag * self.gamma0));
        let mut precision = Cholesky::new(hyper_scale)
            .expect("hyperprior scale is PD")
            .inverse();
        for comp in components {
            precision += comp.cov_inverse();
        }
        let scale = Cholesky::new(symmetrize(&precision))
            .expect("accumulated precision is PD")
            .inverse();
        let nu = self.beta0 + components.len() as f64 * self.alpha0;
        let chol = Cholesky::new(symmetrize(&scale)).expect("conditional scale is PD").l();
        self.sigma0 = sample_wishart(nu, &chol, rng);
    }

    fn sigma0(&self) -> DMatrix<f64> {
        self.sigma0.clone()
    }

    fn clone_box(&self) -> Box<dyn MixtureKernel> {
        Box::new(self.clone())
    }
}

/// Draws `(mean, variance)` from a univariate normal-inverse-gamma law with
/// location `m`, strength `kappa`, shape `alpha`, and scale `beta`.
fn sample_nig<R: Rng + ?Sized>(m: f64, kappa: f64, alpha: f64, beta: f64, rng: &mut R) -> GaussianComponent {
    let precision_draw = Gamma::new(alpha, 1.0 / beta).expect("gamma parameters positive").sample(rng);
    let var = (1.0 / precision_draw).max(f64::MIN_POSITIVE);
    let mean = m + (var / kappa).sqrt() * rng.sample::<f64, _>(StandardNormal);
    GaussianComponent::scalar(mean, var).expect("positive variance")
}

/// Log density of a Student-t distribution with `dof` degrees of freedom,
/// location `loc`, and scale `scale`.
fn log_student_t(x: f64, dof: f64, loc: f64, scale: f64) -> f64 {
    let z = (x - loc) / scale;
    ln_gamma(0.5 * (dof + 1.0)) - ln_gamma(0.5 * dof) - 0.5 * (dof * std::f64::consts::PI).ln()
        - scale.ln()
        - 0.5 * (dof + 1.0) * (z * z / dof).ln_1p()
}

/// Multivariate log gamma function `ln Gamma_D(a)`.
fn ln_multigamma(d: usize, a: f64) -> f64 {
    let mut s = 0.25 * (d * (d - 1)) as f64 * std::f64::consts::PI.ln();
    for j in 0..d {
        s += ln_gamma(a - 0.5 * j as f64);
    }
    s
}

/// Log density of `InvWishart(nu, psi)` at the component's covariance.
fn log_inv_wishart(comp: &GaussianComponent, nu: f64, psi: &DMatrix<f64>) -> f64 {
    let d = comp.dim();
    let psi_chol = Cholesky::new(psi.clone()).expect("inverse-Wishart scale is PD");
    let log_det_psi = 2.0 * psi_chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let trace = (comp.cov_inverse() * psi).trace();
    0.5 * nu * log_det_psi - 0.5 * nu * d as f64 * 2.0_f64.ln() - ln_multigamma(d, 0.5 * nu)
        - 0.5 * (nu + d as f64 + 1.0) * comp.log_det_cov()
        - 0.5 * trace
}

/// Symmetrizes a nearly symmetric matrix, removing round-off skew before
/// Cholesky factorization.
fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Wishart draw `W(nu, S)` via the Bartlett decomposition; `scale_chol` is
/// the lower Cholesky factor of `S`. Requires `nu > D - 1`.
fn sample_wishart<R: Rng + ?Sized>(nu: f64, scale_chol: &DMatrix<f64>, rng: &mut R) -> DMatrix<f64> {
    let d = scale_chol.nrows();
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        let dof = nu - i as f64;
        let chi = ChiSquared::new(dof).expect("Wishart degrees of freedom must exceed D - 1");
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let la = scale_chol * a;
    symmetrize(&(&la * la.transpose()))
}

/// Inverse-Wishart draw `IW(nu, psi)` as the inverse of a Wishart draw with
/// the inverted scale.
fn sample_inverse_wishart<R: Rng + ?Sized>(nu: f64, psi: &DMatrix<f64>, rng: &mut R) -> DMatrix<f64> {
    let psi_inv = Cholesky::new(psi.clone()).expect("inverse-Wishart scale is PD").inverse();
    let chol = Cholesky::new(symmetrize(&psi_inv)).expect("inverted scale is PD").l();
    let w = sample_wishart(nu, &chol, rng);
    symmetrize(&Cholesky::new(w).expect("Wishart draw is PD").inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual} (tol {tol})"
        );
    }

    fn base() -> ConjugateNormalBase {
        ConjugateNormalBase::new(0.5, 2.0, 4.0, 0.4, 0.1, 0.9).unwrap()
    }

    fn stats_of(points: &[f64]) -> ClusterStats {
        let mut s = ClusterStats::zero(1);
        for &p in points {
            s.add(&[p]);
        }
        s
    }

    #[test]
    fn empty_cluster_marginal_is_zero() {
        assert_eq!(base().log_marginal(&ClusterStats::zero(1)), 0.0);
    }

    #[test]
    fn single_point_marginal_is_prior_predictive_t() {
        // With kappa = Sigma0/S0, alpha = alpha0/2, beta = Sigma0/2 the prior
        // predictive is Student-t with 2 alpha dof, location m0, and scale
        // sqrt(beta (kappa + 1) / (alpha kappa)).
        let b = base();
        let (kappa, alpha, beta) = (0.9_f64 / 2.0, 2.0_f64, 0.45_f64);
        for y in [-1.0, 0.5, 3.2] {
            let scale = (beta * (kappa + 1.0) / (alpha * kappa)).sqrt();
            let expect = log_student_t(y, 2.0 * alpha, 0.5, scale);
            assert_close(b.log_marginal(&stats_of(&[y])), expect, 1e-12);
            assert_close(b.log_predictive(&[y], &ClusterStats::zero(1)), expect, 1e-12);
        }
    }

    #[test]
    fn predictive_equals_marginal_difference() {
        let b = base();
        let cluster = [0.3, -0.7, 1.9, 0.2];
        let y = 1.1;
        let with = stats_of(&[&cluster[..], &[y]].concat());
        let without = stats_of(&cluster);
        let diff = b.log_marginal(&with) - b.log_marginal(&without);
        assert_close(b.log_predictive(&[y], &without), diff, 1e-10);
    }

    #[test]
    fn predictive_integrates_to_one() {
        let b = base();
        let stats = stats_of(&[0.1, 0.4, 2.2]);
        // Integrate the predictive density over +-10 predictive standard
        // deviations with a fine trapezoid grid.
        let (kappa_n, m_n, alpha_n, beta_n) = b.nig_posterior(&stats);
        let sd = (beta_n * (kappa_n + 1.0) / (alpha_n * kappa_n)).sqrt()
            * (2.0 * alpha_n / (2.0 * alpha_n - 2.0)).sqrt();
        let (lo, hi) = (m_n - 10.0 * sd, m_n + 10.0 * sd);
        let steps = 200_000;
        let h = (hi - lo) / steps as f64;
        let mut total = 0.0;
        for i in 0..=steps {
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            total += w * b.log_predictive(&[lo + h * i as f64], &stats).exp();
        }
        total *= h;
        assert_close(total, 1.0, 1e-4);
    }

    #[test]
    fn marginal_additivity_chain_rule() {
        let b = base();
        let pts = [0.3, -0.7, 1.9];
        let mut stats = ClusterStats::zero(1);
        let mut acc = 0.0;
        for &p in &pts {
            acc += b.log_predictive(&[p], &stats);
            stats.add(&[p]);
        }
        assert_close(b.log_marginal(&stats), acc, 1e-10);
    }

    #[test]
    fn stats_add_remove_round_trip() {
        let mut s = ClusterStats::zero(2);
        s.add(&[1.0, 2.0]);
        s.add(&[-0.5, 0.25]);
        s.remove(&[1.0, 2.0]);
        assert_eq!(s.n(), 1);
        assert_close(s.sum()[0], -0.5, 1e-12);
        assert_close(s.sum_outer()[(0, 1)], -0.125, 1e-12);
    }

    #[test]
    fn weakly_informative_range_arithmetic() {
        let data = Data::from_column(vec![0.0, 0.25, 1.0]).unwrap();
        let b = ConjugateNormalBase::weakly_informative(&data).unwrap();
        assert_close(b.m0(), 0.5, 1e-12);
        assert_close(b.s0(), 0.25, 1e-12);
        assert_close(b.alpha0(), 4.0, 1e-12);
        assert_close(b.beta0(), 0.4, 1e-12);
        assert_close(b.gamma0(), 0.1, 1e-12);

        let flat = Data::from_column(vec![1.0, 1.0, 1.0]).unwrap();
        assert!(ConjugateNormalBase::weakly_informative(&flat).is_err());
    }

    #[test]
    fn weakly_informative_multivariate_range() {
        let data = Data::new(2, 2, vec![0.0, 10.0, 1.0, 30.0]).unwrap();
        let b = NonconjugateGaussianBase::weakly_informative(&data).unwrap();
        assert_eq!(b.dim(), 2);
        assert_close(b.m0()[0], 0.5, 1e-12);
        assert_close(b.m0()[1], 20.0, 1e-12);
        assert_close(b.s0_diag()[0], 0.25, 1e-12);
        assert_close(b.s0_diag()[1], 100.0, 1e-12);
        assert_close(b.alpha0(), 5.0, 1e-12);
        assert_close(b.beta0(), 1.4, 1e-12);
    }

    #[test]
    fn component_density_matches_scalar_formula() {
        let comp = GaussianComponent::scalar(1.0, 4.0).unwrap();
        let expect = -0.5 * (LN_2PI + 4.0_f64.ln() + 0.25);
        assert_close(comp.log_density(&[2.0]), expect, 1e-12);
    }

    #[test]
    fn component_density_matches_bivariate_formula() {
        let mean = DVector::from_vec(vec![1.0, -1.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let comp = GaussianComponent::new(mean, cov).unwrap();
        // Direct evaluation with the explicit 2x2 inverse.
        let det: f64 = 2.0 * 1.0 - 0.36;
        let y = [0.5, 0.2];
        let (dx, dy) = (y[0] - 1.0, y[1] + 1.0);
        let quad = (1.0 * dx * dx - 2.0 * 0.6 * dx * dy + 2.0 * dy * dy) / det;
        let expect = -0.5 * (2.0 * LN_2PI + det.ln() + quad);
        assert_close(comp.log_density(&y), expect, 1e-12);
    }

    #[test]
    fn non_positive_definite_covariance_rejected() {
        let mean = DVector::from_vec(vec![0.0, 0.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianComponent::new(mean, cov).is_err());
    }

    #[test]
    fn conjugate_posterior_draw_concentrates_on_data() {
        let b = base();
        let stats = stats_of(&[5.0; 60]);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut mean_acc = 0.0;
        let draws = 4000;
        for _ in 0..draws {
            mean_acc += b.sample_component_posterior(None, &stats, &mut rng).mean()[0];
        }
        let avg = mean_acc / draws as f64;
        assert!((avg - 5.0).abs() < 0.2, "posterior mean {avg} far from data at 5.0");
    }

    #[test]
    fn sigma0_hyperprior_draw_moments() {
        // With no components the update is a draw from the hyperprior, a
        // gamma law with mean beta0 * gamma0 * S0.
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut acc = 0.0;
        let draws = 200_000;
        for _ in 0..draws {
            let mut b = base();
            b.update_sigma0(&[], &mut rng);
            acc += b.sigma0()[(0, 0)];
        }
        let mean = acc / draws as f64;
        let expect = 0.4 * 0.1 * 2.0;
        // Relative MC error with shape 0.2 over 2e5 draws is about 0.5%.
        assert!((mean - expect).abs() < 0.03 * expect, "mean {mean} vs {expect}");
    }

    #[test]
    fn wishart_mean_matches_nu_times_scale() {
        let scale = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let chol = Cholesky::new(scale.clone()).unwrap().l();
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let mut acc = DMatrix::zeros(2, 2);
        let draws = 20_000;
        for _ in 0..draws {
            acc += sample_wishart(4.7, &chol, &mut rng);
        }
        let mean = acc / draws as f64;
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (mean[(i, j)] - 4.7 * scale[(i, j)]).abs() < 0.08,
                    "entry ({i},{j}): {} vs {}",
                    mean[(i, j)],
                    4.7 * scale[(i, j)]
                );
            }
        }
    }

    #[test]
    fn inverse_wishart_mean_matches_closed_form() {
        // E[IW(nu, psi)] = psi / (nu - D - 1).
        let psi = DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]);
        let nu = 7.0;
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let mut acc = DMatrix::zeros(2, 2);
        let draws = 40_000;
        for _ in 0..draws {
            acc += sample_inverse_wishart(nu, &psi, &mut rng);
        }
        let mean = acc / draws as f64;
        let expect = &psi / (nu - 3.0);
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (mean[(i, j)] - expect[(i, j)]).abs() < 0.02,
                    "entry ({i},{j}): {} vs {}",
                    mean[(i, j)],
                    expect[(i, j)]
                );
            }
        }
    }
}
