//! Average BLER from the series CDFs by Gauss-Chebyshev quadrature, the
//! central-user lower bound, high-SNR asymptotes and diversity slopes.
//!
//! With the linearised error model the average over the fading reduces to
//! `δ√L ∫_v^u F(τ) dτ`. Mapping `[v, u]` onto `[-1, 1]` gives nodes
//! `y_p = η_p / (2δ√L) + β`, and since `δ√L (u - v) = 1` the quadrature is
//! `π/(2U) Σ_p √(1 - η_p²) F(y_p)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::blocklength::{linear_params, LinearApproxParams};
use crate::channel::{CorrelationModel, SystemConfig};
use crate::error::{Error, Result};
use crate::series::{SeriesOptions, SinrCdf};
use crate::special::{chebyshev_nodes, QuadratureNodes};

/// How a BLER number was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Theory,
    Asymptotic,
    Mc,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Theory => "theory",
            Method::Asymptotic => "asymptotic",
            Method::Mc => "mc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Average BLERs of both users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlerBreakdown {
    /// Central user decoding its own symbol after SIC.
    pub eps_cc: f64,
    /// Central user decoding the cell-edge symbol (SIC first stage).
    pub eps_ce: f64,
    /// `max(eps_cc, eps_ce)`, a lower bound on the central user's BLER.
    pub eps_c_bound: f64,
    /// Cell-edge user.
    pub eps_e: f64,
    pub method: Method,
}

/// Quadrature of `δ√L ∫_v^u F` for a CDF `F`.
fn chebyshev_average<F>(params: &LinearApproxParams, nodes: &QuadratureNodes, mut cdf: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let integral = nodes.try_integrate(params.v, params.u, &mut cdf)?;
    // the rule overshoots 1 by O(U^-2) when F is close to 1 on [v, u]
    Ok((params.slope() * integral).clamp(0.0, 1.0))
}

/// `E[ε_cc]` with `order` quadrature nodes.
pub fn avg_bler_cc(cfg: &SystemConfig, model: &CorrelationModel, order: usize) -> Result<f64> {
    avg_bler_cc_with(cfg, model, order, SeriesOptions::default())
}

pub fn avg_bler_cc_with(
    cfg: &SystemConfig,
    model: &CorrelationModel,
    order: usize,
    opts: SeriesOptions,
) -> Result<f64> {
    let params = linear_params(cfg.bits_cu, cfg.blocklength);
    let nodes = chebyshev_nodes(order)?;
    let cdf = SinrCdf::own_symbol(cfg, model, opts)?;
    chebyshev_average(&params, &nodes, |t| cdf.eval(t))
}

fn avg_bler_sic(
    cfg: &SystemConfig,
    model: &CorrelationModel,
    distance: f64,
    order: usize,
    opts: SeriesOptions,
) -> Result<f64> {
    let params = linear_params(cfg.bits_ceu, cfg.blocklength);
    let nodes = chebyshev_nodes(order)?;
    if params.beta >= cfg.sinr_ceiling() {
        // the rate threshold is unreachable under interference
        return Ok(1.0);
    }
    let cdf = SinrCdf::under_interference(cfg, model, distance, opts)?;
    chebyshev_average(&params, &nodes, |t| cdf.eval(t))
}

/// `E[ε_ce]`; exactly 1 when `β_{Ne,L} >= α_e/α_c`, and nodes beyond the SIC
/// ceiling contribute `F = 1`.
pub fn avg_bler_ce(cfg: &SystemConfig, model: &CorrelationModel, order: usize) -> Result<f64> {
    avg_bler_sic(cfg, model, cfg.dist_cu, order, SeriesOptions::default())
}

pub fn avg_bler_ce_with(
    cfg: &SystemConfig,
    model: &CorrelationModel,
    order: usize,
    opts: SeriesOptions,
) -> Result<f64> {
    avg_bler_sic(cfg, model, cfg.dist_cu, order, opts)
}

/// `E[ε_e]`, the same quadrature at the cell-edge distance.
pub fn avg_bler_e(cfg: &SystemConfig, model: &CorrelationModel, order: usize) -> Result<f64> {
    avg_bler_sic(cfg, model, cfg.dist_ceu, order, SeriesOptions::default())
}

pub fn avg_bler_e_with(
    cfg: &SystemConfig,
    model: &CorrelationModel,
    order: usize,
    opts: SeriesOptions,
) -> Result<f64> {
    avg_bler_sic(cfg, model, cfg.dist_ceu, order, opts)
}

/// `max(E[ε_cc], E[ε_ce])`.
pub fn avg_bler_cu_bound(eps_cc: f64, eps_ce: f64) -> Result<f64> {
    for (name, v) in [("eps_cc", eps_cc), ("eps_ce", eps_ce)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain("avg_bler_cu_bound", format!("{name} = {v} outside [0, 1]")));
        }
    }
    Ok(eps_cc.max(eps_ce))
}

/// All theoretical averages for one scenario.
pub fn theory_blers(
    cfg: &SystemConfig,
    model: &CorrelationModel,
    order: usize,
    opts: SeriesOptions,
) -> Result<BlerBreakdown> {
    let eps_cc = avg_bler_cc_with(cfg, model, order, opts)?;
    let eps_ce = avg_bler_ce_with(cfg, model, order, opts)?;
    let eps_e = avg_bler_e_with(cfg, model, order, opts)?;
    Ok(BlerBreakdown {
        eps_cc,
        eps_ce,
        eps_c_bound: avg_bler_cu_bound(eps_cc, eps_ce)?,
        eps_e,
        method: Method::Theory,
    })
}

/// High-SNR approximations from `F(x) ≈ x^{2N} / D` evaluated at the
/// linearisation midpoint `β`:
///
/// * `E[ε_cc] ≈ (1/D) (d_c^a β_c / (α_c ρ))^N`
/// * `E[ε_ce] ≈ (1/D) (d_c^a β_e / (α_e ρ - α_c ρ β_e))^N`, 1 if `β_e >= α_e/α_c`
/// * `E[ε_e]` as `E[ε_ce]` with `d_e`
///
/// All values are clamped to `[0, 1]`.
pub fn asymptotic_blers(cfg: &SystemConfig, model: &CorrelationModel) -> Result<BlerBreakdown> {
    model.cofactor()?;
    let det = model.determinant();
    let n = model.ports() as i32;
    let rho = cfg.rho();
    let beta_c = linear_params(cfg.bits_cu, cfg.blocklength).beta;
    let beta_e = linear_params(cfg.bits_ceu, cfg.blocklength).beta;
    let power_law = |x: f64| (x.powi(n) / det).clamp(0.0, 1.0);

    let eps_cc = power_law(cfg.dist_cu.powf(cfg.path_loss) * beta_c / (cfg.alpha_c * rho));
    let (eps_ce, eps_e) = if beta_e >= cfg.sinr_ceiling() {
        (1.0, 1.0)
    } else {
        let denom = cfg.alpha_e * rho - cfg.alpha_c * rho * beta_e;
        (
            power_law(cfg.dist_cu.powf(cfg.path_loss) * beta_e / denom),
            power_law(cfg.dist_ceu.powf(cfg.path_loss) * beta_e / denom),
        )
    };
    Ok(BlerBreakdown {
        eps_cc,
        eps_ce,
        eps_c_bound: eps_cc.max(eps_ce),
        eps_e,
        method: Method::Asymptotic,
    })
}

/// Least-squares slope of `log10(BLER)` against `ρ_dB / 10`; `-N` for a
/// curve with diversity order `N`.
pub fn diversity_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Argument("diversity slope needs at least two points".into()));
    }
    if let Some(p) = points.iter().find(|p| !(p.1 > 0.0) || !p.0.is_finite()) {
        return Err(Error::Argument(format!("diversity slope needs finite SNR and positive BLER, got {p:?}")));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0 / 10.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("diversity slope needs distinct SNR values".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
