//! Seeded chunk-parallel Monte Carlo estimates of the average BLERs and of
//! SINR CDFs.
//!
//! Trials are split into fixed-size chunks. Chunk `i` draws central-user
//! gains from substream `2i` and cell-edge gains from substream `2i + 1`, and
//! chunk statistics are merged in chunk order, so results depend only on
//! `(seed, trials, chunk_size)` and never on the worker count.

use rayon::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::Method;
use crate::blocklength::{combine_cu_bler, psi_exact, sinr_ceu, sinr_cu_sic};
use crate::channel::{substream_rng, CorrelationModel, PortSampler, SystemConfig};
use crate::error::{Error, Result};

/// How a trial's block error is scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Average the instantaneous error probability `Ψ(γ)`.
    #[default]
    PsiAverage,
    /// Draw a Bernoulli(`Ψ(γ)`) decoding outcome per trial and count failures.
    ErrorCounting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    pub trials: u64,
    pub chunk_size: u64,
    #[serde(default)]
    pub estimator: Estimator,
    /// Worker threads; 0 uses the global pool.
    #[serde(default)]
    pub workers: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 1_000_000,
            chunk_size: 65_536,
            estimator: Estimator::PsiAverage,
            workers: 0,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.chunk_size == 0 {
            return Err(Error::config("chunk_size", "must be at least 1"));
        }
        Ok(())
    }

    fn chunks(&self) -> Vec<(u64, u64)> {
        let count = self.trials.div_ceil(self.chunk_size);
        (0..count)
            .map(|i| {
                let start = i * self.chunk_size;
                (i, (self.trials - start).min(self.chunk_size))
            })
            .collect()
    }

    fn run<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        if self.workers == 0 {
            return Ok(job());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Argument(format!("cannot build worker pool: {e}")))?;
        Ok(pool.install(job))
    }
}

/// Mean of a Monte Carlo average with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlerEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√n`.
    pub stderr: f64,
    pub n: u64,
    pub method: Method,
}

/// Monte Carlo estimates of the four average BLERs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McBlers {
    pub eps_cc: BlerEstimate,
    pub eps_ce: BlerEstimate,
    /// Exact central-user BLER `E[ε_ce + (1 - ε_ce) ε_cc]`.
    pub eps_c: BlerEstimate,
    pub eps_e: BlerEstimate,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Self {
            n,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.n as f64 * w,
        }
    }

    fn estimate(&self) -> BlerEstimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        BlerEstimate {
            mean: self.mean.clamp(0.0, 1.0),
            stderr: (var.max(0.0) / self.n as f64).sqrt(),
            n: self.n,
            method: Method::Mc,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ChunkStats {
    cc: Moments,
    ce: Moments,
    c: Moments,
    e: Moments,
}

impl ChunkStats {
    fn merge(self, o: Self) -> Self {
        Self {
            cc: self.cc.merge(o.cc),
            ce: self.ce.merge(o.ce),
            c: self.c.merge(o.c),
            e: self.e.merge(o.e),
        }
    }
}

fn score<R: Rng>(psi: f64, estimator: Estimator, rng: &mut R) -> f64 {
    match estimator {
        Estimator::PsiAverage => psi,
        Estimator::ErrorCounting => {
            if rng.random::<f64>() < psi {
                1.0
            } else {
                0.0
            }
        }
    }
}

fn simulate_chunk(
    cfg: &SystemConfig,
    model_cu: &CorrelationModel,
    model_ceu: &CorrelationModel,
    mc: &McConfig,
    chunk: u64,
    len: u64,
) -> Result<ChunkStats> {
    let mut rng_cu = substream_rng(mc.seed, 2 * chunk);
    let mut rng_ceu = substream_rng(mc.seed, 2 * chunk + 1);
    let mut cu = PortSampler::new(model_cu);
    let mut ceu = PortSampler::new(model_ceu);
    let mut stats = ChunkStats::default();
    for _ in 0..len {
        let x_c = cu.draw_best_power(&mut rng_cu);
        let x_e = ceu.draw_best_power(&mut rng_ceu);
        let (g_ce, g_cc) = sinr_cu_sic(x_c, cfg);
        let g_e = sinr_ceu(x_e, cfg);
        let ce = score(psi_exact(g_ce, cfg.bits_ceu, cfg.blocklength)?, mc.estimator, &mut rng_cu);
        let cc = score(psi_exact(g_cc, cfg.bits_cu, cfg.blocklength)?, mc.estimator, &mut rng_cu);
        let e = score(psi_exact(g_e, cfg.bits_ceu, cfg.blocklength)?, mc.estimator, &mut rng_ceu);
        let c = combine_cu_bler(ce, cc)?;
        debug_assert!(c >= ce.max(cc));
        stats.cc.push(cc);
        stats.ce.push(ce);
        stats.c.push(c);
        stats.e.push(e);
    }
    Ok(stats)
}

/// Estimates `E[ε_cc]`, `E[ε_ce]`, `E[ε_c]` and `E[ε_e]` with independent
/// central and cell-edge channels.
pub fn simulate_blers(
    cfg: &SystemConfig,
    model_cu: &CorrelationModel,
    model_ceu: &CorrelationModel,
    mc: &McConfig,
) -> Result<McBlers> {
    cfg.validate()?;
    mc.validate()?;
    let chunks = mc.chunks();
    let parts: Vec<Result<ChunkStats>> = mc.run(|| {
        chunks
            .par_iter()
            .map(|&(i, len)| simulate_chunk(cfg, model_cu, model_ceu, mc, i, len))
            .collect()
    })?;
    let mut total = ChunkStats::default();
    for part in parts {
        total = total.merge(part?);
    }
    Ok(McBlers {
        eps_cc: total.cc.estimate(),
        eps_ce: total.ce.estimate(),
        eps_c: total.c.estimate(),
        eps_e: total.e.estimate(),
    })
}

/// Fraction of samples with `mapping(|g_FAS|²) < τ` at each grid point.
pub fn empirical_cdf<F>(model: &CorrelationModel, mapping: F, mc: &McConfig, grid: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64 + Sync,
{
    mc.validate()?;
    if grid.is_empty() {
        return Err(Error::Argument("empirical CDF needs a nonempty grid".into()));
    }
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Argument("empirical CDF grid must be sorted ascending".into()));
    }
    let chunks = mc.chunks();
    let counts: Vec<Vec<u64>> = mc.run(|| {
        chunks
            .par_iter()
            .map(|&(i, len)| {
                let mut rng = substream_rng(mc.seed, i);
                let mut sampler = PortSampler::new(model);
                // hist[k] counts samples whose first grid point above them is k
                let mut hist = vec![0u64; grid.len() + 1];
                for _ in 0..len {
                    let s = mapping(sampler.draw_best_power(&mut rng));
                    hist[grid.partition_point(|&t| t <= s)] += 1;
                }
                hist
            })
            .collect()
    })?;
    let mut hist = vec![0u64; grid.len() + 1];
    for h in counts {
        for (a, b) in hist.iter_mut().zip(h) {
            *a += b;
        }
    }
    let mut below = 0u64;
    Ok(hist[..grid.len()]
        .iter()
        .map(|&h| {
            below += h;
            below as f64 / mc.trials as f64
        })
        .collect())
}

/// Fraction of samples with `|g_n| < r_n` for every port.
pub fn empirical_joint_cdf(model: &CorrelationModel, radii: &[f64], mc: &McConfig) -> Result<f64> {
    mc.validate()?;
    if radii.len() != model.ports() {
        return Err(Error::Argument(format!(
            "expected {} radii, got {}",
            model.ports(),
            radii.len()
        )));
    }
    let chunks = mc.chunks();
    let hits: Vec<u64> = mc.run(|| {
        chunks
            .par_iter()
            .map(|&(i, len)| {
                let mut rng = substream_rng(mc.seed, i);
                let mut sampler = PortSampler::new(model);
                (0..len)
                    .filter(|_| sampler.draw(&mut rng).iter().zip(radii).all(|(g, &r)| g.norm() < r))
                    .count() as u64
            })
            .collect()
    })?;
    Ok(hits.iter().sum::<u64>() as f64 / mc.trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn models(cfg: &SystemConfig) -> CorrelationModel {
        CorrelationModel::from_config(cfg).unwrap()
    }

    fn mc(seed: u64, trials: u64) -> McConfig {
        McConfig { seed, trials, chunk_size: 4096, ..McConfig::default() }
    }

    #[test]
    fn vanishing_snr_gives_certain_error() {
        let cfg = SystemConfig { rho_db: -100.0, ..SystemConfig::default() };
        let m = models(&cfg);
        let r = simulate_blers(&cfg, &m, &m, &mc(3, 20_000)).unwrap();
        for est in [r.eps_cc, r.eps_ce, r.eps_c, r.eps_e] {
            assert!((est.mean - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn reproducible_and_worker_independent() {
        let cfg = SystemConfig { rho_db: 35.0, ..SystemConfig::default() };
        let m = models(&cfg);
        let base = mc(11, 50_000);
        let a = simulate_blers(&cfg, &m, &m, &base).unwrap();
        let b = simulate_blers(&cfg, &m, &m, &base).unwrap();
        let c = simulate_blers(&cfg, &m, &m, &McConfig { workers: 1, ..base }).unwrap();
        let d = simulate_blers(&cfg, &m, &m, &McConfig { workers: 3, ..base }).unwrap();
        for other in [b, c, d] {
            assert_eq!(a.eps_cc.mean.to_bits(), other.eps_cc.mean.to_bits());
            assert_eq!(a.eps_c.stderr.to_bits(), other.eps_c.stderr.to_bits());
            assert_eq!(a.eps_e.mean.to_bits(), other.eps_e.mean.to_bits());
        }
        let e = simulate_blers(&cfg, &m, &m, &mc(12, 50_000)).unwrap();
        assert_ne!(a.eps_cc.mean, e.eps_cc.mean);
    }

    #[test]
    fn combined_dominates_components() {
        let cfg = SystemConfig { rho_db: 38.0, ..SystemConfig::default() };
        let m = models(&cfg);
        let r = simulate_blers(&cfg, &m, &m, &mc(5, 20_000)).unwrap();
        assert!(r.eps_c.mean >= r.eps_cc.mean.max(r.eps_ce.mean));
    }

    #[test]
    fn siso_matches_closed_form_average() {
        let cfg = SystemConfig { ports: 1, rho_db: 40.0, ..SystemConfig::default() };
        let m = models(&cfg);
        let r = simulate_blers(&cfg, &m, &m, &mc(21, 200_000)).unwrap();
        // x ~ Exp(1/σ²)
        let avg = |f: &dyn Fn(f64) -> f64| oracle::integrate_to_infinity(|x| f(x) * (-x).exp(), 0.0, 1e-12);
        let cc = avg(&|x| {
            let g = cfg.alpha_c * cfg.rho() * cfg.dist_cu.powf(-cfg.path_loss) * x;
            oracle_psi(g, 300, 100)
        });
        let e = avg(&|x| {
            let s = cfg.rho() * cfg.dist_ceu.powf(-cfg.path_loss) * x;
            oracle_psi(0.9 * s / (0.1 * s + 1.0), 100, 100)
        });
        assert!((r.eps_cc.mean - cc).abs() <= 3.0 * r.eps_cc.stderr, "{:?} vs {cc}", r.eps_cc);
        assert!((r.eps_e.mean - e).abs() <= 3.0 * r.eps_e.stderr, "{:?} vs {e}", r.eps_e);
    }

    fn oracle_psi(g: f64, k: u32, l: u32) -> f64 {
        if g == 0.0 {
            return 1.0;
        }
        let log2e = std::f64::consts::LOG2_E;
        let c = (1.0 + g).ln() * log2e;
        let v = log2e * log2e * (1.0 - (1.0 + g).powi(-2));
        let arg = (c - k as f64 / l as f64) / (v / l as f64).sqrt();
        if arg >= 0.0 {
            oracle::gaussian_tail_integral(arg)
        } else {
            1.0 - oracle::gaussian_tail_integral(-arg)
        }
    }

    #[test]
    fn stderr_scales_with_trials() {
        let cfg = SystemConfig { rho_db: 40.0, ..SystemConfig::default() };
        let m = models(&cfg);
        let small = simulate_blers(&cfg, &m, &m, &mc(31, 40_000)).unwrap();
        let large = simulate_blers(&cfg, &m, &m, &mc(32, 160_000)).unwrap();
        for (s, l) in [(small.eps_cc, large.eps_cc), (small.eps_e, large.eps_e)] {
            let ratio = s.stderr / l.stderr;
            assert!((ratio / 2.0 - 1.0).abs() < 0.2, "{ratio}");
        }
    }

    #[test]
    fn error_counting_agrees_with_psi_average() {
        let cfg = SystemConfig { rho_db: 40.0, ..SystemConfig::default() };
        let m = models(&cfg);
        let psi = simulate_blers(&cfg, &m, &m, &mc(41, 100_000)).unwrap();
        let count = McConfig { estimator: Estimator::ErrorCounting, ..mc(41, 100_000) };
        let cnt = simulate_blers(&cfg, &m, &m, &count).unwrap();
        for (a, b) in [(psi.eps_cc, cnt.eps_cc), (psi.eps_e, cnt.eps_e), (psi.eps_c, cnt.eps_c)] {
            assert!(b.mean == 0.0 || b.mean == 1.0 || b.stderr > 0.0);
            assert!((a.mean - b.mean).abs() <= 4.0 * a.stderr.hypot(b.stderr));
        }
    }

    #[test]
    fn empirical_cdf_edges() {
        let cfg = SystemConfig::default();
        let m = models(&cfg);
        let ceil = cfg.sinr_ceiling();
        let grid = [0.0, 1.0, 5.0, ceil, ceil + 1.0];
        let f = empirical_cdf(&m, |x| sinr_cu_sic(x, &cfg).0, &mc(1, 10_000), &grid).unwrap();
        assert_eq!(f[0], 0.0);
        assert_eq!(f[3], 1.0);
        assert_eq!(f[4], 1.0);
        assert!(f.windows(2).all(|w| w[0] <= w[1]));
        assert!(empirical_cdf(&m, |x| x, &mc(1, 100), &[]).is_err());
        assert!(empirical_cdf(&m, |x| x, &mc(1, 100), &[2.0, 1.0]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(McConfig { trials: 0, ..McConfig::default() }.validate().is_err());
        assert!(McConfig { chunk_size: 0, ..McConfig::default() }.validate().is_err());
        let c = McConfig { trials: 10, chunk_size: 4, ..McConfig::default() };
        assert_eq!(c.chunks(), vec![(0, 4), (1, 4), (2, 2)]);
    }
}
