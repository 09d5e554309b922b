//! Cross-checks between the analytic, asymptotic and simulated BLERs of a
//! scenario, reported one line per check.

use std::fmt;

use crate::analysis::{asymptotic_blers, BlerBreakdown, avg_bler_cc_with, avg_bler_ce_with, avg_bler_e_with, diversity_slope};
use crate::channel::{CorrelationModel, SystemConfig};
use crate::error::Result;
use crate::montecarlo::simulate_blers;
use crate::series::{SeriesOptions, SinrCdf};

use super::config::RunConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub passed: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Passes when `measured <= limit` and both are finite.
    fn record(&mut self, name: String, measured: Result<f64>, limit: f64) {
        let (measured, note) = match measured {
            Ok(m) => (m, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        self.checks.push(Check {
            name,
            measured,
            limit,
            passed: measured.is_finite() && measured <= limit,
            note,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            write!(
                f,
                "{} {} deviation={:.3e} limit={:.3e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.limit
            )?;
            if let Some(n) = &c.note {
                write!(f, " ({n})")?;
            }
            writeln!(f)?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        writeln!(f, "{passed}/{} checks passed", self.checks.len())
    }
}

/// Knobs of the validation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    /// Replace every tolerance by a negative one so that all checks fail.
    pub corrupt_tolerance: bool,
}

const SNR_POINTS: [f64; 3] = [20.0, 30.0, 40.0];

/// `|a - b|` scaled so that 1 means "at the tolerance".
fn theory_mc_deviation(theory: f64, mean: f64, stderr: f64) -> f64 {
    let allowed = (0.05 * theory).max(3.0 * stderr);
    if allowed == 0.0 {
        if theory == mean { 0.0 } else { f64::INFINITY }
    } else {
        (theory - mean).abs() / allowed
    }
}

fn check_scenario(
    report: &mut ValidationReport,
    id: &str,
    cfg: &SystemConfig,
    run: &RunConfig,
    scale: f64,
) -> Result<()> {
    let model = CorrelationModel::from_config(cfg)?;
    let (u, opts) = (run.quadrature_order, run.series);
    let n = cfg.ports as f64;

    for rho_db in SNR_POINTS {
        let c = cfg.with_rho_db(rho_db);
        let mc = simulate_blers(&c, &model, &model, &run.mc)?;
        let metrics = [
            ("cc", avg_bler_cc_with(&c, &model, u, opts), mc.eps_cc),
            ("ce", avg_bler_ce_with(&c, &model, u, opts), mc.eps_ce),
            ("e", avg_bler_e_with(&c, &model, u, opts), mc.eps_e),
        ];
        for (name, theory, est) in metrics {
            report.record(
                format!("{id}: theory vs mc eps_{name} at {rho_db} dB"),
                theory.map(|t| theory_mc_deviation(t, est.mean, est.stderr)),
                scale,
            );
        }
    }

    let c = cfg.with_rho_db(60.0);
    let asym = asymptotic_blers(&c, &model)?;
    let ratios = [
        ("cc", avg_bler_cc_with(&c, &model, u, opts), asym.eps_cc),
        ("e", avg_bler_e_with(&c, &model, u, opts), asym.eps_e),
    ];
    for (name, theory, a) in ratios {
        report.record(
            format!("{id}: theory/asymptote eps_{name} at 60 dB"),
            theory.map(|t| (t / a - 1.0).abs()),
            0.1 * scale,
        );
    }

    let asym_points = |pick: fn(&BlerBreakdown) -> f64| -> Result<Vec<(f64, f64)>> {
        [50.0, 60.0, 70.0]
            .iter()
            .map(|&r| Ok((r, pick(&asymptotic_blers(&cfg.with_rho_db(r), &model)?))))
            .collect()
    };
    let picks: [(&str, fn(&BlerBreakdown) -> f64); 2] = [("cc", |b| b.eps_cc), ("e", |b| b.eps_e)];
    for (name, pick) in picks {
        report.record(
            format!("{id}: asymptotic slope eps_{name} = -N"),
            asym_points(pick).and_then(|p| diversity_slope(&p)).map(|s| (s + n).abs()),
            1e-10 * scale,
        );
    }
    let theory_points = |f: fn(&SystemConfig, &CorrelationModel, usize, SeriesOptions) -> Result<f64>| {
        (0..=4)
            .map(|i| {
                let r = 50.0 + 5.0 * i as f64;
                f(&cfg.with_rho_db(r), &model, u, opts).map(|v| (r, v))
            })
            .collect::<Result<Vec<_>>>()
    };
    for (name, f) in [
        ("cc", avg_bler_cc_with as fn(&_, &_, _, _) -> _),
        ("e", avg_bler_e_with as fn(&_, &_, _, _) -> _),
    ] {
        report.record(
            format!("{id}: theory slope eps_{name} over 50-70 dB"),
            theory_points(f).and_then(|p| diversity_slope(&p)).map(|s| (s / -n - 1.0).abs()),
            0.05 * scale,
        );
    }
    Ok(())
}

fn check_siso_closed_form(report: &mut ValidationReport, cfg: &SystemConfig, opts: SeriesOptions, scale: f64) {
    let siso = cfg.siso();
    let result = (|| -> Result<f64> {
        let model = CorrelationModel::from_config(&siso)?;
        let cdf = SinrCdf::own_symbol(&siso, &model, opts)?;
        let k = siso.dist_cu.powf(siso.path_loss) / (siso.alpha_c * siso.rho() * siso.sigma2);
        let mut worst: f64 = 0.0;
        for tau in [0.1, 1.0, 7.0, 20.0] {
            let want = -(-k * tau).exp_m1();
            worst = worst.max((cdf.eval(tau)? - want).abs());
        }
        Ok(worst)
    })();
    report.record("single-port CDF vs closed form".to_string(), result, 1e-10 * scale);
}

/// Runs every check for every scenario of `run`.
pub fn validate(run: &RunConfig, opts: ValidateOptions) -> Result<ValidationReport> {
    let scale = if opts.corrupt_tolerance { -1.0 } else { 1.0 };
    let mut report = ValidationReport::default();
    for scn in &run.scenarios {
        check_scenario(&mut report, &scn.id, &scn.system, run, scale)?;
    }
    check_siso_closed_form(&mut report, &run.scenarios[0].system, run.series, scale);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::{load_config, parse_override};

    fn run(sets: &[&str]) -> RunConfig {
        let o: Vec<_> = sets.iter().map(|s| parse_override(s).unwrap()).collect();
        load_config(None, None, &o).unwrap()
    }

    #[test]
    fn report_lists_each_check_once() {
        let r = validate(&run(&["N=2", "W=0.5", "trials=100000"]), ValidateOptions { corrupt_tolerance: false }).unwrap();
        let mut names: Vec<_> = r.checks.iter().map(|c| c.name.clone()).collect();
        let total = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), total);
        assert_eq!(total, 9 + 2 + 2 + 2 + 1);
        assert!(r.all_passed(), "{r}");
    }

    #[test]
    fn corrupted_tolerance_fails() {
        let r = validate(&run(&["N=1", "trials=5000"]), ValidateOptions { corrupt_tolerance: true }).unwrap();
        assert!(!r.all_passed());
        assert!(r.checks.iter().all(|c| !c.passed));
    }
}
