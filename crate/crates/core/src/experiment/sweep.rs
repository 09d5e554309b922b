//! Parameter sweeps emitting one CSV row per grid point, user and method.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    asymptotic_blers, avg_bler_cc_with, avg_bler_ce_with, avg_bler_cu_bound, avg_bler_e_with, BlerBreakdown,
    Method,
};
use crate::channel::{CorrelationModel, SystemConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{simulate_blers, McBlers, McConfig};

use super::config::{RunConfig, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepVariable {
    RhoDb,
    AlphaC,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::RhoDb => "rho_db",
            SweepVariable::AlphaC => "alpha_c",
        }
    }
}

impl FromStr for SweepVariable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rho_db" => Ok(Self::RhoDb),
            "alpha_c" => Ok(Self::AlphaC),
            other => Err(format!("unknown sweep variable {other:?}; expected rho_db or alpha_c")),
        }
    }
}

/// Reported BLER curve. The ordering is the row order within a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum User {
    /// Central user, own symbol after SIC.
    CuCc,
    /// Central user, cell-edge symbol (first SIC stage).
    CuCe,
    /// Central user overall. Theory and asymptotic rows give the
    /// `max(ε_cc, ε_ce)` lower bound; Monte Carlo rows give the exact
    /// `E[ε_ce + (1 - ε_ce) ε_cc]`.
    CuBound,
    Ceu,
    /// Central user overall with a single fixed antenna.
    SisoCu,
    /// Cell-edge user with a single fixed antenna.
    SisoCeu,
}

impl User {
    pub const ALL: [User; 6] = [User::CuCc, User::CuCe, User::CuBound, User::Ceu, User::SisoCu, User::SisoCeu];

    pub fn as_str(&self) -> &'static str {
        match self {
            User::CuCc => "cu_cc",
            User::CuCe => "cu_ce",
            User::CuBound => "cu_bound",
            User::Ceu => "ceu",
            User::SisoCu => "siso_cu",
            User::SisoCeu => "siso_ceu",
        }
    }

    fn is_siso(&self) -> bool {
        matches!(self, User::SisoCu | User::SisoCeu)
    }
}

impl FromStr for User {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        User::ALL
            .into_iter()
            .find(|u| u.as_str() == s)
            .ok_or_else(|| format!("unknown user {s:?}"))
    }
}

impl fmt::Display for User {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub methods: Vec<Method>,
    pub users: Vec<User>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            variable: SweepVariable::RhoDb,
            start: 0.0,
            stop: 60.0,
            step: 5.0,
            methods: vec![Method::Theory, Method::Asymptotic, Method::Mc],
            users: User::ALL.to_vec(),
        }
    }
}

impl SweepSpec {
    pub(crate) fn alpha_default_range() -> (f64, f64, f64) {
        (0.02, 0.45, 0.01)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::config("start", "sweep bounds must be finite"));
        }
        if self.start > self.stop {
            return Err(Error::config("stop", format!("must be >= start ({} > {})", self.start, self.stop)));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config("step", format!("must be positive, got {}", self.step)));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "select at least one method"));
        }
        if self.users.is_empty() {
            return Err(Error::config("users", "select at least one user"));
        }
        Ok(())
    }

    /// Ascending grid `start, start + step, ...` up to `stop` inclusive.
    pub fn grid(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn sorted_methods(&self) -> Vec<Method> {
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        m
    }

    fn sorted_users(&self) -> Vec<User> {
        let mut u = self.users.clone();
        u.sort();
        u.dedup();
        u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowValue {
    Bler { bler: f64, stderr: Option<f64>, samples: Option<u64> },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario_id: String,
    pub variable: SweepVariable,
    pub value: f64,
    pub user: User,
    pub method: Method,
    pub result: RowValue,
}

#[derive(Serialize)]
struct CsvRecord<'a> {
    scenario_id: &'a str,
    variable: &'a str,
    value: String,
    user: &'a str,
    method: &'a str,
    bler: String,
    stderr: String,
    samples: String,
}

/// Rounds to 9 significant digits and prints the shortest decimal for it.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// Writes rows as CSV with the fixed header.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Argument(format!("cannot write CSV: {e}"));
    if rows.is_empty() {
        w.write_record(["scenario_id", "variable", "value", "user", "method", "bler", "stderr", "samples"])
            .map_err(io)?;
    }
    for r in rows {
        let (bler, stderr, samples) = match &r.result {
            RowValue::Bler { bler, stderr, samples } => (
                format_sig9(*bler),
                stderr.map(format_sig9).unwrap_or_default(),
                samples.map(|n| n.to_string()).unwrap_or_default(),
            ),
            RowValue::Failed(_) => ("error".to_string(), String::new(), String::new()),
        };
        w.serialize(CsvRecord {
            scenario_id: &r.scenario_id,
            variable: r.variable.as_str(),
            value: format_sig9(r.value),
            user: r.user.as_str(),
            method: r.method.as_str(),
            bler,
            stderr,
            samples,
        })
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Argument(format!("cannot write CSV: {e}")))?;
    Ok(())
}

/// Output of a sweep; failed rows are kept in place.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
}

impl SweepOutput {
    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| matches!(r.result, RowValue::Failed(_)))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Metric {
    Cc,
    Ce,
    E,
}

struct PointContext<'a> {
    cfg: SystemConfig,
    models: [&'a CorrelationModel; 2],
    run: &'a RunConfig,
    theory: HashMap<(bool, Metric), std::result::Result<f64, String>>,
    asymptotic: [Option<std::result::Result<BlerBreakdown, String>>; 2],
    mc: [Option<std::result::Result<McBlers, String>>; 2],
}

impl PointContext<'_> {
    fn theory(&mut self, siso: bool, metric: Metric) -> std::result::Result<f64, String> {
        let (cfg, model, run) = (&self.cfg, self.models[siso as usize], self.run);
        self.theory
            .entry((siso, metric))
            .or_insert_with(|| {
                let (u, o) = (run.quadrature_order, run.series);
                match metric {
                    Metric::Cc => avg_bler_cc_with(cfg, model, u, o),
                    Metric::Ce => avg_bler_ce_with(cfg, model, u, o),
                    Metric::E => avg_bler_e_with(cfg, model, u, o),
                }
                .map_err(|e| e.to_string())
            })
            .clone()
    }

    fn asymptotic(&mut self, siso: bool) -> std::result::Result<BlerBreakdown, String> {
        let (cfg, model) = (&self.cfg, self.models[siso as usize]);
        self.asymptotic[siso as usize]
            .get_or_insert_with(|| asymptotic_blers(cfg, model).map_err(|e| e.to_string()))
            .clone()
    }

    fn mc(&mut self, siso: bool) -> std::result::Result<McBlers, String> {
        let (cfg, model) = (&self.cfg, self.models[siso as usize]);
        let mc = McConfig { workers: 0, ..self.run.mc };
        self.mc[siso as usize]
            .get_or_insert_with(|| simulate_blers(cfg, model, model, &mc).map_err(|e| e.to_string()))
            .clone()
    }

    fn row(&mut self, user: User, method: Method) -> RowValue {
        let siso = user.is_siso();
        let result = match method {
            Method::Theory => match user {
                User::CuCc => self.theory(siso, Metric::Cc),
                User::CuCe => self.theory(siso, Metric::Ce),
                User::Ceu | User::SisoCeu => self.theory(siso, Metric::E),
                User::CuBound | User::SisoCu => self.theory(siso, Metric::Cc).and_then(|cc| {
                    let ce = self.theory(siso, Metric::Ce)?;
                    avg_bler_cu_bound(cc, ce).map_err(|e| e.to_string())
                }),
            }
            .map(|bler| (bler, None, None)),
            Method::Asymptotic => self.asymptotic(siso).map(|b| {
                let bler = match user {
                    User::CuCc => b.eps_cc,
                    User::CuCe => b.eps_ce,
                    User::CuBound | User::SisoCu => b.eps_c_bound,
                    User::Ceu | User::SisoCeu => b.eps_e,
                };
                (bler, None, None)
            }),
            Method::Mc => self.mc(siso).map(|m| {
                let est = match user {
                    User::CuCc => m.eps_cc,
                    User::CuCe => m.eps_ce,
                    User::CuBound | User::SisoCu => m.eps_c,
                    User::Ceu | User::SisoCeu => m.eps_e,
                };
                (est.mean, Some(est.stderr), Some(est.n))
            }),
        };
        match result {
            Ok((bler, stderr, samples)) => RowValue::Bler { bler, stderr, samples },
            Err(e) => RowValue::Failed(e),
        }
    }
}

fn point_config(base: &SystemConfig, variable: SweepVariable, x: f64) -> Result<SystemConfig> {
    let cfg = match variable {
        SweepVariable::RhoDb => base.with_rho_db(x),
        SweepVariable::AlphaC => base.with_alpha_c(x),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn scenario_rows(scn: &Scenario, run: &RunConfig, x: f64, fas: &CorrelationModel, siso: &CorrelationModel) -> Vec<SweepRow> {
    let spec = &run.sweep;
    let methods = spec.sorted_methods();
    let users = spec.sorted_users();
    let make = |user: User, method: Method, result: RowValue| SweepRow {
        scenario_id: scn.id.clone(),
        variable: spec.variable,
        value: x,
        user,
        method,
        result,
    };
    let cfg = match point_config(&scn.system, spec.variable, x) {
        Ok(c) => c,
        Err(e) => {
            return users
                .iter()
                .flat_map(|&u| methods.iter().map(move |&m| (u, m)))
                .map(|(u, m)| make(u, m, RowValue::Failed(e.to_string())))
                .collect()
        }
    };
    let mut ctx = PointContext {
        cfg,
        models: [fas, siso],
        run,
        theory: HashMap::new(),
        asymptotic: [None, None],
        mc: [None, None],
    };
    let mut rows = Vec::with_capacity(users.len() * methods.len());
    for &u in &users {
        for &m in &methods {
            let value = ctx.row(u, m);
            rows.push(make(u, m, value));
        }
    }
    rows
}

/// Runs the sweep for every scenario. Rows are ordered by scenario, then
/// grid value, user and method; the order and the values do not depend on
/// the worker count.
pub fn run_sweep(run: &RunConfig) -> Result<SweepOutput> {
    run.sweep.validate()?;
    let grid = run.sweep.grid();
    let mut models = Vec::with_capacity(run.scenarios.len());
    for scn in &run.scenarios {
        scn.system.validate()?;
        let fas = CorrelationModel::from_config(&scn.system)?;
        let siso = CorrelationModel::from_config(&scn.system.siso())?;
        models.push((fas, siso));
    }
    let jobs: Vec<(usize, f64)> = (0..run.scenarios.len())
        .flat_map(|s| grid.iter().map(move |&x| (s, x)))
        .collect();
    let compute = || -> Vec<Vec<SweepRow>> {
        jobs.par_iter()
            .map(|&(s, x)| scenario_rows(&run.scenarios[s], run, x, &models[s].0, &models[s].1))
            .collect()
    };
    let blocks = if run.mc.workers == 0 {
        compute()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(run.mc.workers)
            .build()
            .map_err(|e| Error::Argument(format!("cannot build worker pool: {e}")))?
            .install(compute)
    };
    Ok(SweepOutput { rows: blocks.into_iter().flatten().collect() })
}
