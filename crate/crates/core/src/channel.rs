//! Spatially correlated fluid-antenna ports.
//!
//! Port correlation follows Jakes' kernel `σ² J0(2π (m-n) W / (N-1))`. The
//! model keeps the eigendecomposition for sampling and the determinant and
//! cofactor matrix for the series CDF engine.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::bessel_j0;

/// Scalar scenario parameters of the two-user downlink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of fluid-antenna ports `N`.
    pub ports: usize,
    /// Antenna length in wavelengths `W`.
    pub length_wl: f64,
    /// Large-scale fading power `σ²`.
    pub sigma2: f64,
    /// Blocklength `L` in channel uses.
    pub blocklength: u32,
    /// Information bits to the central user.
    pub bits_cu: u32,
    /// Information bits to the cell-edge user.
    pub bits_ceu: u32,
    pub alpha_c: f64,
    pub alpha_e: f64,
    /// Transmit SNR `P/δ²` in dB.
    pub rho_db: f64,
    pub dist_cu: f64,
    pub dist_ceu: f64,
    /// Path-loss exponent.
    pub path_loss: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            ports: 2,
            length_wl: 5.0,
            sigma2: 1.0,
            blocklength: 100,
            bits_cu: 300,
            bits_ceu: 100,
            alpha_c: 0.1,
            alpha_e: 0.9,
            rho_db: 30.0,
            dist_cu: 5.0,
            dist_ceu: 10.0,
            path_loss: 3.9,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(name, format!("must be a positive finite number, got {v}")))
            }
        };
        if self.ports == 0 {
            return Err(Error::config("N", "must be at least 1"));
        }
        positive("W", self.length_wl)?;
        positive("sigma2", self.sigma2)?;
        positive("d_c", self.dist_cu)?;
        positive("d_e", self.dist_ceu)?;
        positive("a", self.path_loss)?;
        if self.blocklength == 0 {
            return Err(Error::config("L", "must be at least 1"));
        }
        if self.bits_cu == 0 {
            return Err(Error::config("Nc", "must be at least 1"));
        }
        if self.bits_ceu == 0 {
            return Err(Error::config("Ne", "must be at least 1"));
        }
        for (name, v) in [("alpha_c", self.alpha_c), ("alpha_e", self.alpha_e)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(name, format!("must lie in (0, 1), got {v}")));
            }
        }
        if (self.alpha_c + self.alpha_e - 1.0).abs() > 1e-12 {
            return Err(Error::config(
                "alpha_e",
                format!(
                    "alpha_c + alpha_e must equal 1, got {} + {}",
                    self.alpha_c, self.alpha_e
                ),
            ));
        }
        if !self.rho_db.is_finite() {
            return Err(Error::config("rho_db", "must be finite"));
        }
        Ok(())
    }

    /// Linear transmit SNR `ρ = 10^{rho_db / 10}`.
    pub fn rho(&self) -> f64 {
        10f64.powf(self.rho_db / 10.0)
    }

    /// SINR ceiling `α_e / α_c` of the SIC stage.
    pub fn sinr_ceiling(&self) -> f64 {
        self.alpha_e / self.alpha_c
    }

    pub fn with_rho_db(&self, rho_db: f64) -> Self {
        Self { rho_db, ..self.clone() }
    }

    /// Sets `α_c` and the complementary `α_e = 1 - α_c`.
    pub fn with_alpha_c(&self, alpha_c: f64) -> Self {
        Self { alpha_c, alpha_e: 1.0 - alpha_c, ..self.clone() }
    }

    /// Same scenario with a single fixed antenna.
    pub fn siso(&self) -> Self {
        Self { ports: 1, ..self.clone() }
    }
}

/// Jakes correlation matrix of `ports` equispaced ports over `length_wl`
/// wavelengths. A single port gives `[σ²]`.
pub fn build_correlation_matrix(ports: usize, length_wl: f64, sigma2: f64) -> Result<DMatrix<f64>> {
    if ports == 0 {
        return Err(Error::Argument("port count must be at least 1".into()));
    }
    if !(length_wl > 0.0 && length_wl.is_finite()) {
        return Err(Error::Argument(format!("antenna length must be positive, got {length_wl}")));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::Argument(format!("sigma2 must be positive, got {sigma2}")));
    }
    if ports == 1 {
        return Ok(DMatrix::from_element(1, 1, sigma2));
    }
    let spacing = 2.0 * PI * length_wl / (ports - 1) as f64;
    // lag-indexed so J[m][n] and J[n][m] are the same f64
    let lags = (0..ports)
        .map(|k| Ok(sigma2 * bessel_j0(spacing * k as f64)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DMatrix::from_fn(ports, ports, |m, n| lags[m.abs_diff(n)]))
}

fn check_symmetric(j: &DMatrix<f64>) -> Result<()> {
    if !j.is_square() || j.nrows() == 0 {
        return Err(Error::Argument(format!(
            "expected a non-empty square matrix, got {}x{}",
            j.nrows(),
            j.ncols()
        )));
    }
    let n = j.nrows();
    for m in 0..n {
        for k in (m + 1)..n {
            if (j[(m, k)] - j[(k, m)]).abs() > 1e-12 {
                return Err(Error::Argument(format!("matrix is not symmetric at ({m}, {k})")));
            }
        }
    }
    Ok(())
}

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
/// Column `k` of the returned matrix is the eigenvector of eigenvalue `k`.
pub fn eigendecompose(j: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    check_symmetric(j)?;
    let n = j.nrows();
    let eig = SymmetricEigen::try_new(j.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("symmetric eigen-solver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((vectors, values))
}

/// Determinant `D` and cofactor matrix `K` (so that `J Kᵀ = D I`).
///
/// Fails when `|D|` is below `1e-12` times the `N`-th power of the mean
/// diagonal entry.
pub fn determinant_and_cofactor(j: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
    check_symmetric(j)?;
    let n = j.nrows();
    let scale = (j.trace() / n as f64).abs().powi(n as i32);
    let det = j.clone().lu().determinant();
    let threshold = 1e-12 * scale;
    if !(det.abs() >= threshold) {
        return Err(Error::IllConditioned { det, threshold });
    }
    if n == 1 {
        return Ok((det, DMatrix::from_element(1, 1, 1.0)));
    }
    let inv = j
        .clone()
        .try_inverse()
        .ok_or(Error::IllConditioned { det, threshold })?;
    let mut cof = inv.transpose() * det;
    // symmetric input gives a symmetric cofactor matrix; remove rounding skew
    for m in 0..n {
        for k in (m + 1)..n {
            let avg = 0.5 * (cof[(m, k)] + cof[(k, m)]);
            cof[(m, k)] = avg;
            cof[(k, m)] = avg;
        }
    }
    Ok((det, cof))
}

/// Correlation structure shared by the analytic engine and the simulator.
#[derive(Debug, Clone)]
pub struct CorrelationModel {
    sigma2: f64,
    matrix: DMatrix<f64>,
    eigvecs: DMatrix<f64>,
    eigvals: Vec<f64>,
    det: f64,
    cofactor: Option<DMatrix<f64>>,
    /// `U diag(√λ)`, the mixing matrix of the sampler.
    mixing: DMatrix<f64>,
}

impl CorrelationModel {
    pub fn new(ports: usize, length_wl: f64, sigma2: f64) -> Result<Self> {
        let matrix = build_correlation_matrix(ports, length_wl, sigma2)?;
        Self::from_matrix(matrix, sigma2)
    }

    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        Self::new(cfg.ports, cfg.length_wl, cfg.sigma2)
    }

    /// Builds the model from an explicit symmetric matrix.
    pub fn from_matrix(matrix: DMatrix<f64>, sigma2: f64) -> Result<Self> {
        let (eigvecs, mut eigvals) = eigendecompose(&matrix)?;
        let floor = -1e-9 * sigma2;
        for v in eigvals.iter_mut() {
            if *v < floor {
                return Err(Error::Numeric(format!(
                    "correlation matrix has negative eigenvalue {v:e}"
                )));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let (det, cofactor) = match determinant_and_cofactor(&matrix) {
            Ok((d, k)) => (d, Some(k)),
            Err(Error::IllConditioned { det, .. }) => (det, None),
            Err(e) => return Err(e),
        };
        let n = matrix.nrows();
        let mixing = DMatrix::from_fn(n, n, |r, c| eigvecs[(r, c)] * eigvals[c].sqrt());
        Ok(Self { sigma2, matrix, eigvecs, eigvals, det, cofactor, mixing })
    }

    pub fn ports(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn determinant(&self) -> f64 {
        self.det
    }

    /// Cofactor matrix, or the conditioning error if the determinant is too
    /// small for the series engine.
    pub fn cofactor(&self) -> Result<&DMatrix<f64>> {
        let n = self.ports() as i32;
        self.cofactor.as_ref().ok_or(Error::IllConditioned {
            det: self.det,
            threshold: 1e-12 * self.sigma2.powi(n),
        })
    }

    pub(crate) fn mixing(&self) -> &DMatrix<f64> {
        &self.mixing
    }
}

/// One draw of all port gains and the selected port.
#[derive(Debug, Clone, PartialEq)]
pub struct PortGainSample {
    pub gains: Vec<Complex64>,
    /// 1-based index of the strongest port.
    pub best_port: usize,
    pub best_magnitude: f64,
}

/// Index (1-based) and magnitude of the strongest port; ties go to the lowest
/// index.
pub fn select_best_port(gains: &[Complex64]) -> Result<(usize, f64)> {
    if gains.is_empty() {
        return Err(Error::Argument("cannot select a port from an empty gain list".into()));
    }
    let mut best = (0usize, gains[0].norm_sqr());
    for (i, g) in gains.iter().enumerate().skip(1) {
        let p = g.norm_sqr();
        if p > best.1 {
            best = (i, p);
        }
    }
    Ok((best.0 + 1, gains[best.0].norm()))
}

/// Draws correlated port gains `g = U diag(√λ) ω` with `ω` i.i.d. circular
/// complex Gaussian (real and imaginary parts of variance 1/2).
#[derive(Debug, Clone)]
pub struct PortSampler<'a> {
    model: &'a CorrelationModel,
    omega: Vec<Complex64>,
    gains: Vec<Complex64>,
}

impl<'a> PortSampler<'a> {
    pub fn new(model: &'a CorrelationModel) -> Self {
        let n = model.ports();
        Self {
            model,
            omega: vec![Complex64::new(0.0, 0.0); n],
            gains: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Draws a fresh gain vector and returns it.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[Complex64] {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        for w in self.omega.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *w = Complex64::new(re * scale, im * scale);
        }
        let mix = self.model.mixing();
        let n = self.omega.len();
        for r in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..n {
                acc += self.omega[c] * mix[(r, c)];
            }
            self.gains[r] = acc;
        }
        &self.gains
    }

    /// Draws a gain vector and returns `|g_FAS|²`, the strongest port power.
    pub fn draw_best_power<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        self.draw(rng).iter().map(|g| g.norm_sqr()).fold(0.0, f64::max)
    }
}

/// Deterministic generator for substream `stream` of `seed`.
pub fn substream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `count` seeded draws of port gains with the selected port.
pub fn sample_port_gains(
    model: &CorrelationModel,
    seed: u64,
    count: usize,
) -> impl Iterator<Item = PortGainSample> + '_ {
    let mut rng = substream_rng(seed, 0);
    let mut sampler = PortSampler::new(model);
    (0..count).map(move |_| {
        let gains = sampler.draw(&mut rng).to_vec();
        let (best_port, best_magnitude) =
            select_best_port(&gains).expect("model has at least one port");
        PortGainSample { gains, best_port, best_magnitude }
    })
}
