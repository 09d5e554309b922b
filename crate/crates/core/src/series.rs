//! Truncated multi-index series for the joint CDF of correlated Rayleigh port
//! magnitudes, and the SINR CDFs derived from it.
//!
//! With `J⁻¹ = K / D`, the circular Gaussian density of the port gains is
//! expanded in the off-diagonal terms of the quadratic form. Integrating the
//! phases leaves the combinatorial weight `g(s*)`; integrating the radii over
//! `[0, r_n]` leaves one lower incomplete gamma per port. One series term,
//! indexed by the exponents `s*_t` of the `T = N(N-1)/2` port pairs, reads
//!
//! ```text
//! g(s*) / (π^N D) · Π_t (-2 K_mn / D)^{s*_t} / s*_t!
//!                 · Π_n ½ (K_nn / D)^{-(s̄_n+1)/2} γ((1 + s̄_n)/2, K_nn r_n² / D)
//! ```
//!
//! where `g(s*)` carries the factor `(1/2)^{Σ s*_t}` of the cosine power
//! expansion and `s̄_n - 1` is the total exponent of the pairs touching port
//! `n`. Terms are grouped by total degree `Σ s*_t = s_1`, and the sum is
//! truncated adaptively once two consecutive degrees contribute less than the
//! tolerance.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use crate::channel::{CorrelationModel, SystemConfig};
use crate::error::{Error, Result};
use crate::special::{ln_gamma_unchecked, ln_lower_incomplete_gamma};

/// Bijection between the pair index `t ∈ 1..=T` and port pairs `(m, n)`,
/// `1 <= m < n <= N`, in row-major upper-triangular order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairMap {
    ports: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairMap {
    pub fn new(ports: usize) -> Self {
        let total = ports * ports.saturating_sub(1) / 2;
        let pairs = (1..=total).map(|t| Self::pair_from_index(ports, t)).collect();
        Self { ports, pairs }
    }

    /// Number of pairs `T`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    /// `(m, n)` of the 1-based pair index `t`.
    pub fn pair(&self, t: usize) -> (usize, usize) {
        self.pairs[t - 1]
    }

    /// All pairs in index order, 1-based.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `t = n + (m-1) N - m(m+1)/2` for `m < n`.
    pub fn index(&self, m: usize, n: usize) -> usize {
        debug_assert!(m < n && n <= self.ports);
        n + (m - 1) * self.ports - m * (m + 1) / 2
    }

    /// `m` is the smallest `m'` with `Σ_{i<=m'} (N - i) >= t`, then
    /// `n = t - (m-1) N + m(m+1)/2`.
    fn pair_from_index(ports: usize, t: usize) -> (usize, usize) {
        let mut cumulative = 0;
        let mut m = 0;
        while cumulative < t {
            m += 1;
            cumulative += ports - m;
        }
        let n = t + m * (m + 1) / 2 - (m - 1) * ports;
        (m, n)
    }
}

pub fn pair_index_map(ports: usize) -> PairMap {
    PairMap::new(ports)
}

/// Nested summation index `s_1 >= s_2 >= ... >= s_T >= 0` together with its
/// differences `s*_t = s_t - s_{t+1}` (`s_{T+1} = 0`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndex {
    s: Vec<u32>,
    s_star: Vec<u32>,
}

impl MultiIndex {
    pub fn from_nested(s: Vec<u32>) -> Result<Self> {
        if s.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Argument(format!("nested indices must be nonincreasing: {s:?}")));
        }
        let s_star = (0..s.len())
            .map(|t| s[t] - s.get(t + 1).copied().unwrap_or(0))
            .collect();
        Ok(Self { s, s_star })
    }

    pub fn from_differences(s_star: Vec<u32>) -> Self {
        let mut s = vec![0; s_star.len()];
        let mut acc = 0;
        for t in (0..s_star.len()).rev() {
            acc += s_star[t];
            s[t] = acc;
        }
        Self { s, s_star }
    }

    pub fn nested(&self) -> &[u32] {
        &self.s
    }

    pub fn differences(&self) -> &[u32] {
        &self.s_star
    }

    /// Total degree `s_1 = Σ s*_t`.
    pub fn degree(&self) -> u32 {
        self.s.first().copied().unwrap_or(0)
    }
}

/// Per-port exponents `s̄_n = Σ_i S*_{n,i} + Σ_{i<n} S*_{i,n} + 1`, the row
/// and column sums of the strictly upper-triangular `S*` plus one.
pub fn port_exponents(s_star: &[u32], pairs: &PairMap) -> Vec<u32> {
    let mut sbar = vec![1u32; pairs.ports()];
    for (&(m, n), &k) in pairs.pairs().iter().zip(s_star) {
        sbar[m - 1] += k;
        sbar[n - 1] += k;
    }
    sbar
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Weighted count `Σ_v Π_t C(s*_t, v_t) Π_i 1{Δ_i = 0}` over the box
/// `0 <= v_t <= s*_t`, where `γ_t = 2 v_t - s*_t` sits at `(m, n)` of `G` and
/// `Δ_i` is row sum minus column sum of `G`.
fn balanced_phase_count(s_star: &[u32], pairs: &PairMap) -> f64 {
    let ports = pairs.ports();
    // remaining[i] = exponent mass still to be placed on pairs touching i
    let mut remaining = vec![0i64; ports];
    for (&(m, n), &k) in pairs.pairs().iter().zip(s_star) {
        remaining[m - 1] += k as i64;
        remaining[n - 1] += k as i64;
    }
    let mut states: HashMap<Vec<i32>, f64> = HashMap::new();
    states.insert(vec![0; ports], 1.0);
    for (&(m, n), &k) in pairs.pairs().iter().zip(s_star) {
        let (mi, ni) = (m - 1, n - 1);
        remaining[mi] -= k as i64;
        remaining[ni] -= k as i64;
        if k == 0 {
            continue;
        }
        let weights: Vec<f64> = (0..=k).map(|v| binomial(k, v)).collect();
        let mut next: HashMap<Vec<i32>, f64> = HashMap::with_capacity(states.len() * 2);
        for (delta, w) in &states {
            for v in 0..=k {
                let gamma = 2 * v as i32 - k as i32;
                let dm = delta[mi] + gamma;
                let dn = delta[ni] - gamma;
                if (dm.unsigned_abs() as i64) > remaining[mi] || (dn.unsigned_abs() as i64) > remaining[ni] {
                    continue;
                }
                let mut key = delta.clone();
                key[mi] = dm;
                key[ni] = dn;
                *next.entry(key).or_insert(0.0) += w * weights[v as usize];
            }
        }
        states = next;
    }
    states.get(&vec![0; ports]).copied().unwrap_or(0.0)
}

/// Combinatorial weight
/// `g(s*) = (1/2)^{Σ s*_t} · Σ_v [Π_t C(s*_t, v_t)] · (2π)^N · Π_i 1{Δ_i = 0}`.
pub fn g_of_sstar(s_star: &[u32], ports: usize) -> Result<f64> {
    let pairs = PairMap::new(ports);
    if s_star.len() != pairs.len() {
        return Err(Error::Argument(format!(
            "expected {} pair exponents for {ports} ports, got {}",
            pairs.len(),
            s_star.len()
        )));
    }
    let total: u32 = s_star.iter().sum();
    let count = balanced_phase_count(s_star, &pairs);
    Ok(0.5f64.powi(total as i32) * count * (2.0 * PI).powi(ports as i32))
}

/// A multi-index with nonzero weight, with everything about it that does not
/// depend on the correlation model.
#[derive(Debug, Clone)]
struct SeriesTerm {
    s_star: Vec<u32>,
    sbar: Vec<u32>,
    /// `ln g(s*) - Σ_t ln s*_t!`
    ln_weight: f64,
}

#[derive(Debug, Default)]
struct DegreeBlock {
    terms: Vec<SeriesTerm>,
}

/// Model-independent term tables for one port count, extended by degree on
/// demand and shared between evaluations.
#[derive(Debug)]
struct SeriesTable {
    pairs: PairMap,
    blocks: RwLock<Vec<Arc<DegreeBlock>>>,
}

fn compositions(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 0 {
        if total == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in 0..=total {
        prefix.push(first);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

impl SeriesTable {
    fn for_ports(ports: usize) -> Arc<SeriesTable> {
        static TABLES: OnceLock<Mutex<HashMap<usize, Arc<SeriesTable>>>> = OnceLock::new();
        let mut map = TABLES
            .get_or_init(|| Mutex::new(HashMap::new()))
            .lock()
            .expect("series table cache poisoned");
        map.entry(ports)
            .or_insert_with(|| {
                Arc::new(SeriesTable { pairs: PairMap::new(ports), blocks: RwLock::new(Vec::new()) })
            })
            .clone()
    }

    fn build_block(&self, degree: u32) -> DegreeBlock {
        let ports = self.pairs.ports();
        let mut raw = Vec::new();
        compositions(degree, self.pairs.len(), &mut Vec::new(), &mut raw);
        let ln_two_pi_n = ports as f64 * (2.0 * PI).ln();
        let terms = raw
            .into_iter()
            .filter_map(|s_star| {
                let count = balanced_phase_count(&s_star, &self.pairs);
                if count == 0.0 {
                    return None;
                }
                let ln_fact: f64 = s_star.iter().map(|&k| ln_gamma_unchecked(k as f64 + 1.0)).sum();
                let ln_g = -(degree as f64) * std::f64::consts::LN_2 + count.ln() + ln_two_pi_n;
                let sbar = port_exponents(&s_star, &self.pairs);
                Some(SeriesTerm { s_star, sbar, ln_weight: ln_g - ln_fact })
            })
            .collect();
        DegreeBlock { terms }
    }

    fn block(&self, degree: usize) -> Arc<DegreeBlock> {
        if let Some(b) = self.blocks.read().expect("series table poisoned").get(degree) {
            return b.clone();
        }
        let mut blocks = self.blocks.write().expect("series table poisoned");
        while blocks.len() <= degree {
            let d = blocks.len() as u32;
            blocks.push(Arc::new(self.build_block(d)));
        }
        blocks[degree].clone()
    }
}

/// Truncation control for the series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Absolute size below which a degree's contribution counts as settled.
    pub tolerance: f64,
    /// Largest total degree `s_0` evaluated before giving up.
    pub max_degree: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_degree: 40 }
    }
}

/// Result of one series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEval {
    /// Clamped probability.
    pub value: f64,
    /// Unclamped partial sum.
    pub raw: f64,
    /// Truncation degree `s_0` actually used.
    pub degree: usize,
    /// Contribution of the last degree.
    pub last_change: f64,
}

/// Neumaier compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Joint CDF engine bound to one correlation model.
#[derive(Debug, Clone)]
pub struct JointCdf {
    ports: usize,
    table: Arc<SeriesTable>,
    /// `ln |2 K_mn / D|` per pair, `None` where `K_mn = 0`.
    ln_pair: Vec<Option<f64>>,
    /// Sign of `-K_mn` per pair.
    neg_pair: Vec<bool>,
    /// `K_nn / D` per port.
    diag_ratio: Vec<f64>,
    /// `-N ln π - ln D`
    ln_prefactor: f64,
    opts: SeriesOptions,
}

impl JointCdf {
    pub fn new(model: &CorrelationModel, opts: SeriesOptions) -> Result<Self> {
        let k = model.cofactor()?;
        let det = model.determinant();
        if !(det > 0.0) {
            return Err(Error::IllConditioned { det, threshold: 0.0 });
        }
        let ports = model.ports();
        let table = SeriesTable::for_ports(ports);
        let mut ln_pair = Vec::with_capacity(table.pairs.len());
        let mut neg_pair = Vec::with_capacity(table.pairs.len());
        for &(m, n) in table.pairs.pairs() {
            let kmn = k[(m - 1, n - 1)];
            ln_pair.push(if kmn == 0.0 { None } else { Some((2.0 * kmn.abs() / det).ln()) });
            // (-K_mn)^s is negative for odd s when K_mn > 0
            neg_pair.push(kmn > 0.0);
        }
        let diag_ratio = (0..ports).map(|n| k[(n, n)] / det).collect();
        Ok(Self {
            ports,
            table,
            ln_pair,
            neg_pair,
            diag_ratio,
            ln_prefactor: -(ports as f64) * PI.ln() - det.ln(),
            opts,
        })
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn options(&self) -> SeriesOptions {
        self.opts
    }

    /// `P(|g_1| < r_1, ..., |g_N| < r_N)`.
    pub fn eval(&self, radii: &[f64]) -> Result<SeriesEval> {
        if radii.len() != self.ports {
            return Err(Error::Argument(format!(
                "expected {} radii, got {}",
                self.ports,
                radii.len()
            )));
        }
        if let Some(r) = radii.iter().find(|r| !(**r >= 0.0)) {
            return Err(Error::Argument(format!("radii must be nonnegative, got {r}")));
        }
        if radii.contains(&0.0) {
            return Ok(SeriesEval { value: 0.0, raw: 0.0, degree: 0, last_change: 0.0 });
        }
        if radii.iter().any(|r| r.is_infinite()) {
            // marginalising an unbounded port is not expressible here
            if radii.iter().all(|r| r.is_infinite()) {
                return Ok(SeriesEval { value: 1.0, raw: 1.0, degree: 0, last_change: 0.0 });
            }
            return Err(Error::Argument("mixed infinite radii are not supported".into()));
        }

        let args: Vec<f64> = radii
            .iter()
            .zip(&self.diag_ratio)
            .map(|(r, c)| c * r * r)
            .collect();
        let ln_diag: Vec<f64> = self.diag_ratio.iter().map(|c| c.ln()).collect();
        // radial[n][s̄ - 1] = ln(½ (K_nn/D)^{-(s̄+1)/2} γ((1+s̄)/2, x_n))
        let mut radial: Vec<Vec<f64>> = vec![Vec::new(); self.ports];
        let extend_radial = |radial: &mut Vec<Vec<f64>>, upto: u32| -> Result<()> {
            for n in 0..self.ports {
                while (radial[n].len() as u32) < upto {
                    let sbar = radial[n].len() as f64 + 1.0;
                    let a = 0.5 * (1.0 + sbar);
                    let v = -std::f64::consts::LN_2 - a * ln_diag[n]
                        + ln_lower_incomplete_gamma(a, args[n])?;
                    radial[n].push(v);
                }
            }
            Ok(())
        };

        let mut total = CompensatedSum::default();
        let mut previous_partial = 0.0;
        let mut quiet_run = 0;
        let mut last_change = f64::INFINITY;
        for degree in 0..=self.opts.max_degree {
            extend_radial(&mut radial, degree as u32 + 1)?;
            let block = self.table.block(degree);
            let mut level = CompensatedSum::default();
            'terms: for term in &block.terms {
                let mut ln_mag = self.ln_prefactor + term.ln_weight;
                let mut negative = false;
                for (t, &k) in term.s_star.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    match self.ln_pair[t] {
                        None => continue 'terms,
                        Some(lp) => ln_mag += k as f64 * lp,
                    }
                    if self.neg_pair[t] && k % 2 == 1 {
                        negative = !negative;
                    }
                }
                for (n, &sb) in term.sbar.iter().enumerate() {
                    ln_mag += radial[n][sb as usize - 1];
                }
                let mag = ln_mag.exp();
                level.add(if negative { -mag } else { mag });
            }
            let contribution = level.value();
            total.add(contribution);
            last_change = contribution;
            if contribution.abs() < self.opts.tolerance {
                quiet_run += 1;
            } else {
                quiet_run = 0;
            }
            let partial = total.value();
            if !partial.is_finite() {
                return Err(Error::Convergence {
                    cap: degree,
                    previous: previous_partial,
                    last: partial,
                });
            }
            // Degrees with no balanced phase pattern contribute exactly zero
            // (odd degrees for two ports), so one quiet degree is not enough.
            if degree >= 2 && quiet_run >= 2 {
                return finish(partial, degree, last_change);
            }
            previous_partial = partial;
        }
        Err(Error::Convergence {
            cap: self.opts.max_degree,
            previous: previous_partial - last_change,
            last: total.value(),
        })
    }

    /// Joint CDF at equal radii `r` on every port.
    pub fn eval_equal(&self, radius: f64) -> Result<SeriesEval> {
        self.eval(&vec![radius; self.ports])
    }
}

fn finish(raw: f64, degree: usize, last_change: f64) -> Result<SeriesEval> {
    if !(-1e-6..=1.0 + 1e-6).contains(&raw) {
        return Err(Error::Numeric(format!(
            "series partial sum {raw:e} left the unit interval at degree {degree}"
        )));
    }
    Ok(SeriesEval { value: raw.clamp(0.0, 1.0), raw, degree, last_change })
}

/// Joint CDF of the port magnitudes at the given radii.
pub fn joint_cdf_gains(model: &CorrelationModel, radii: &[f64], opts: SeriesOptions) -> Result<f64> {
    Ok(JointCdf::new(model, opts)?.eval(radii)?.value)
}

/// CDF of the central user's own-symbol SNR `γ_cc = α_c ρ d_c^{-a} |g_FAS|²`.
#[derive(Debug, Clone)]
pub struct SinrCdf {
    engine: JointCdf,
    kind: SinrKind,
    /// `d^a / ρ` for the relevant distance.
    path_over_rho: f64,
    alpha_c: f64,
    alpha_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SinrKind {
    OwnSymbol,
    UnderInterference,
}

impl SinrCdf {
    /// CDF of `γ_cc`.
    pub fn own_symbol(cfg: &SystemConfig, model: &CorrelationModel, opts: SeriesOptions) -> Result<Self> {
        Ok(Self {
            engine: JointCdf::new(model, opts)?,
            kind: SinrKind::OwnSymbol,
            path_over_rho: cfg.dist_cu.powf(cfg.path_loss) / cfg.rho(),
            alpha_c: cfg.alpha_c,
            alpha_e: cfg.alpha_e,
        })
    }

    /// CDF of an SINR decoded with the other symbol as interference, at the
    /// given distance (`d_c` for `γ_ce`, `d_e` for `γ_e`).
    pub fn under_interference(
        cfg: &SystemConfig,
        model: &CorrelationModel,
        distance: f64,
        opts: SeriesOptions,
    ) -> Result<Self> {
        Ok(Self {
            engine: JointCdf::new(model, opts)?,
            kind: SinrKind::UnderInterference,
            path_over_rho: distance.powf(cfg.path_loss) / cfg.rho(),
            alpha_c: cfg.alpha_c,
            alpha_e: cfg.alpha_e,
        })
    }

    /// Equal port radius at which the SINR reaches `tau`; `None` when `tau`
    /// is at or beyond the SIC ceiling.
    pub fn radius(&self, tau: f64) -> Option<f64> {
        match self.kind {
            SinrKind::OwnSymbol => Some((self.path_over_rho * tau / self.alpha_c).sqrt()),
            SinrKind::UnderInterference => {
                let denom = self.alpha_e - self.alpha_c * tau;
                (tau < self.alpha_e / self.alpha_c && denom > 0.0)
                    .then(|| (self.path_over_rho * tau / denom).sqrt())
            }
        }
    }

    pub fn eval(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0) {
            return Err(Error::domain("sinr_cdf", format!("threshold must be >= 0, got {tau}")));
        }
        match self.radius(tau) {
            None => Ok(1.0),
            Some(r) => Ok(self.engine.eval_equal(r)?.value),
        }
    }

    pub fn eval_detailed(&self, tau: f64) -> Result<SeriesEval> {
        match self.radius(tau) {
            None => Ok(SeriesEval { value: 1.0, raw: 1.0, degree: 0, last_change: 0.0 }),
            Some(r) => self.engine.eval_equal(r),
        }
    }
}

/// `F_{γ_cc}(τ)`.
pub fn cdf_gamma_cc(tau: f64, cfg: &SystemConfig, model: &CorrelationModel) -> Result<f64> {
    SinrCdf::own_symbol(cfg, model, SeriesOptions::default())?.eval(tau)
}

/// `F_{γ_ce}(τ)` (distance `d_c`) or `F_{γ_e}(τ)` (distance `d_e`).
pub fn cdf_gamma_sic(tau: f64, cfg: &SystemConfig, model: &CorrelationModel, distance: f64) -> Result<f64> {
    SinrCdf::under_interference(cfg, model, distance, SeriesOptions::default())?.eval(tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pair_map_three_ports() {
        let map = pair_index_map(3);
        assert_eq!(map.pairs(), &[(1, 2), (1, 3), (2, 3)]);
        assert_eq!(pair_index_map(4).len(), 6);
        assert!(pair_index_map(1).is_empty());
        for ports in 2..9 {
            let map = pair_index_map(ports);
            assert_eq!(map.len(), ports * (ports - 1) / 2);
            for t in 1..=map.len() {
                let (m, n) = map.pair(t);
                assert!(m < n && n <= ports);
                assert_eq!(map.index(m, n), t);
            }
        }
    }

    #[test]
    fn multi_index_round_trip() {
        let idx = MultiIndex::from_nested(vec![5, 3, 3, 0]).unwrap();
        assert_eq!(idx.differences(), &[2, 0, 3, 0]);
        assert_eq!(idx.degree(), 5);
        assert_eq!(MultiIndex::from_differences(vec![2, 0, 3, 0]), idx);
        assert!(MultiIndex::from_nested(vec![1, 2]).is_err());
    }

    #[test]
    fn g_examples() {
        let two_pi = 2.0 * PI;
        assert_eq!(g_of_sstar(&[], 1).unwrap(), two_pi);
        assert_eq!(g_of_sstar(&[0], 2).unwrap(), two_pi * two_pi);
        assert_eq!(g_of_sstar(&[0, 0, 0], 3).unwrap(), two_pi.powi(3));
        assert_eq!(g_of_sstar(&[1], 2).unwrap(), 0.0);
        assert!((g_of_sstar(&[2], 2).unwrap() - 2.0 * PI * PI).abs() < 1e-12);
        assert!(g_of_sstar(&[1, 1], 3).is_err());
    }

    fn brute_force_count(s_star: &[u32], pairs: &PairMap) -> f64 {
        let mut total = 0.0;
        let boxes: Vec<u32> = s_star.iter().map(|k| k + 1).collect();
        let cells: u32 = boxes.iter().product();
        for code in 0..cells {
            let mut rest = code;
            let mut delta = vec![0i32; pairs.ports()];
            let mut w = 1.0;
            for (t, &k) in s_star.iter().enumerate() {
                let v = rest % (k + 1);
                rest /= k + 1;
                let (m, n) = pairs.pair(t + 1);
                let gamma = 2 * v as i32 - k as i32;
                delta[m - 1] += gamma;
                delta[n - 1] -= gamma;
                w *= binomial(k, v);
            }
            if delta.iter().all(|&d| d == 0) {
                total += w;
            }
        }
        total
    }

    #[test]
    fn phase_count_matches_box_enumeration() {
        for ports in 2..=4 {
            let pairs = PairMap::new(ports);
            for degree in 0..=6u32 {
                let mut all = Vec::new();
                compositions(degree, pairs.len(), &mut Vec::new(), &mut all);
                for s_star in all {
                    assert_eq!(
                        balanced_phase_count(&s_star, &pairs),
                        brute_force_count(&s_star, &pairs),
                        "{s_star:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn zero_radius_gives_zero() {
        let model = CorrelationModel::new(3, 5.0, 1.0).unwrap();
        assert_eq!(joint_cdf_gains(&model, &[0.0; 3], SeriesOptions::default()).unwrap(), 0.0);
        assert!(joint_cdf_gains(&model, &[1.0; 2], SeriesOptions::default()).is_err());
    }

    #[test]
    fn single_port_is_exponential() {
        for sigma2 in [0.5, 1.0, 2.0] {
            let model = CorrelationModel::new(1, 1.0, sigma2).unwrap();
            for r in [0.1f64, 0.5, 1.0, 2.0, 4.0] {
                let got = joint_cdf_gains(&model, &[r], SeriesOptions::default()).unwrap();
                let want = -(-r * r / sigma2).exp_m1();
                assert!((got - want).abs() < 1e-12, "r={r}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn two_port_infinite_radius_sums_to_one() {
        // closed form of the saturated series: D/(K11 K22 - K12²) = 1
        let model = CorrelationModel::new(2, 0.5, 1.0).unwrap();
        let v = joint_cdf_gains(&model, &[50.0, 50.0], SeriesOptions::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn independent_ports_factorise() {
        let model = CorrelationModel::from_matrix(nalgebra::DMatrix::identity(3, 3), 1.0).unwrap();
        let radii = [0.5, 1.0, 1.5];
        let got = joint_cdf_gains(&model, &radii, SeriesOptions::default()).unwrap();
        let want: f64 = radii.iter().map(|r: &f64| -(-r * r).exp_m1()).product();
        assert!((got - want).abs() < 1e-13);
    }

    #[test]
    fn sic_cdf_saturates_at_ceiling() {
        let cfg = SystemConfig { ports: 2, length_wl: 0.5, rho_db: 30.0, ..SystemConfig::default() };
        let model = CorrelationModel::from_config(&cfg).unwrap();
        let ceiling = cfg.sinr_ceiling();
        assert_eq!(cdf_gamma_sic(ceiling, &cfg, &model, cfg.dist_ceu).unwrap(), 1.0);
        assert_eq!(cdf_gamma_sic(ceiling + 3.0, &cfg, &model, cfg.dist_cu).unwrap(), 1.0);
        assert_eq!(cdf_gamma_sic(0.0, &cfg, &model, cfg.dist_ceu).unwrap(), 0.0);
        assert_eq!(cdf_gamma_cc(0.0, &cfg, &model).unwrap(), 0.0);
        assert!(cdf_gamma_cc(-1.0, &cfg, &model).is_err());
    }

    #[test]
    fn single_port_sinr_cdfs() {
        let cfg = SystemConfig { ports: 1, rho_db: 20.0, sigma2: 1.3, ..SystemConfig::default() };
        let model = CorrelationModel::from_config(&cfg).unwrap();
        for tau in [0.01, 0.1, 1.0, 10.0] {
            let c = cfg.dist_cu.powf(cfg.path_loss) / (cfg.alpha_c * cfg.rho() * cfg.sigma2);
            let want = -(-c * tau).exp_m1();
            assert!((cdf_gamma_cc(tau, &cfg, &model).unwrap() - want).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn cdf_nondecreasing_in_threshold(w in 2.0f64..12.0, rho_db in 20.0f64..50.0) {
            let cfg = SystemConfig { ports: 3, length_wl: w, rho_db, ..SystemConfig::default() };
            let model = CorrelationModel::from_config(&cfg).unwrap();
            let cdf = SinrCdf::own_symbol(&cfg, &model, SeriesOptions::default()).unwrap();
            let mut prev = 0.0;
            for i in 0..100 {
                let tau = 10f64.powf(-2.0 + 4.0 * i as f64 / 99.0);
                let v = cdf.eval(tau).unwrap();
                prop_assert!(v >= prev - 1e-9);
                prev = v;
            }
        }
    }
}
