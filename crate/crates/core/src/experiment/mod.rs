//! Configuration, sweeps, validation reports and CDF dumps behind the
//! command-line tool.

pub mod config;
pub mod presets;
pub mod sweep;
pub mod validate;

use std::io::Write;
use std::str::FromStr;

use crate::blocklength::{sinr_ceu, sinr_cu_sic};
use crate::channel::{CorrelationModel, SystemConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{empirical_cdf, McConfig};
use crate::series::{SeriesOptions, SinrCdf};

pub use config::{load_config, parse_override, RunConfig, Scenario};
pub use sweep::{run_sweep, write_csv, RowValue, SweepOutput, SweepRow, SweepSpec, SweepVariable, User};
pub use validate::{validate, ValidateOptions, ValidationReport};

/// SINR whose CDF is tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfMetric {
    /// Central user's own symbol after SIC.
    Cc,
    /// Central user decoding the cell-edge symbol.
    Ce,
    /// Cell-edge user.
    E,
}

impl FromStr for CdfMetric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cc" => Ok(Self::Cc),
            "ce" => Ok(Self::Ce),
            "e" => Ok(Self::E),
            other => Err(format!("unknown metric {other:?}; expected cc, ce or e")),
        }
    }
}

/// One grid point of an analytic-versus-empirical CDF table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfPoint {
    pub tau: f64,
    /// `None` when the series did not converge.
    pub analytic: Option<f64>,
    pub empirical: f64,
}

/// Default upper end of the τ grid: the SIC ceiling for interference-limited
/// SINRs, eight mean single-port SNRs for the interference-free one.
pub fn default_tau_max(cfg: &SystemConfig, metric: CdfMetric) -> f64 {
    match metric {
        CdfMetric::Cc => 8.0 * cfg.alpha_c * cfg.rho() * cfg.dist_cu.powf(-cfg.path_loss) * cfg.sigma2,
        CdfMetric::Ce | CdfMetric::E => cfg.sinr_ceiling(),
    }
}

/// Tabulates the analytic and empirical CDF of `metric` on `points` evenly
/// spaced values in `(0, tau_max]`.
pub fn cdf_table(
    cfg: &SystemConfig,
    metric: CdfMetric,
    tau_max: f64,
    points: usize,
    mc: &McConfig,
    opts: SeriesOptions,
) -> Result<Vec<CdfPoint>> {
    if points == 0 || !(tau_max > 0.0) {
        return Err(Error::Argument("CDF grid needs at least one point and tau_max > 0".into()));
    }
    let model = CorrelationModel::from_config(cfg)?;
    let grid: Vec<f64> = (1..=points).map(|i| tau_max * i as f64 / points as f64).collect();
    let (analytic, empirical) = match metric {
        CdfMetric::Cc => (
            SinrCdf::own_symbol(cfg, &model, opts)?,
            empirical_cdf(&model, |x| sinr_cu_sic(x, cfg).1, mc, &grid)?,
        ),
        CdfMetric::Ce => (
            SinrCdf::under_interference(cfg, &model, cfg.dist_cu, opts)?,
            empirical_cdf(&model, |x| sinr_cu_sic(x, cfg).0, mc, &grid)?,
        ),
        CdfMetric::E => (
            SinrCdf::under_interference(cfg, &model, cfg.dist_ceu, opts)?,
            empirical_cdf(&model, |x| sinr_ceu(x, cfg), mc, &grid)?,
        ),
    };
    Ok(grid
        .iter()
        .zip(empirical)
        .map(|(&tau, empirical)| CdfPoint { tau, analytic: analytic.eval(tau).ok(), empirical })
        .collect())
}

pub fn write_cdf_csv<W: Write>(scenario_id: &str, table: &[CdfPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Argument(format!("cannot write CSV: {e}"));
    w.write_record(["scenario_id", "tau", "analytic", "empirical"]).map_err(io)?;
    for p in table {
        let analytic = p.analytic.map(sweep::format_sig9).unwrap_or_else(|| "error".into());
        w.write_record([
            scenario_id.to_string(),
            sweep::format_sig9(p.tau),
            analytic,
            sweep::format_sig9(p.empirical),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Argument(format!("cannot write CSV: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_table_tracks_simulation() {
        let cfg = SystemConfig { rho_db: 35.0, ..SystemConfig::default() };
        let mc = McConfig { seed: 2, trials: 100_000, chunk_size: 10_000, ..McConfig::default() };
        for metric in [CdfMetric::Cc, CdfMetric::Ce, CdfMetric::E] {
            let tau_max = default_tau_max(&cfg, metric);
            let t = cdf_table(&cfg, metric, tau_max, 20, &mc, SeriesOptions::default()).unwrap();
            assert_eq!(t.len(), 20);
            for p in &t {
                let a = p.analytic.unwrap();
                assert!((a - p.empirical).abs() < 0.01, "{metric:?} {p:?}");
            }
        }
        assert!(cdf_table(&cfg, CdfMetric::Cc, 1.0, 0, &mc, SeriesOptions::default()).is_err());
    }
}
