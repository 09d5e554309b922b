//! Flat JSON run configuration with `key=value` overrides.
//!
//! Values are layered: built-in defaults, then a preset, then the config
//! file, then `--set` overrides. Setting `alpha_c` at some layer without also
//! setting `alpha_e` at that layer or above derives `alpha_e = 1 - alpha_c`.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{Map, Value};

use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::montecarlo::{Estimator, McConfig};
use crate::series::SeriesOptions;

use super::presets;
use super::sweep::{SweepSpec, SweepVariable, User};
use crate::analysis::Method;

/// Every key accepted in a config file or override.
pub const KEYS: &[&str] = &[
    "scenario_id",
    "N",
    "W",
    "sigma2",
    "L",
    "Nc",
    "Ne",
    "alpha_c",
    "alpha_e",
    "rho_db",
    "d_c",
    "d_e",
    "a",
    "U_p",
    "series_tol",
    "series_max_degree",
    "seed",
    "trials",
    "chunk_size",
    "estimator",
    "workers",
    "variable",
    "start",
    "stop",
    "step",
    "methods",
    "users",
];

/// One named system scenario of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub system: SystemConfig,
}

/// Everything a CLI invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenarios: Vec<Scenario>,
    pub mc: McConfig,
    pub sweep: SweepSpec,
    /// Gauss-Chebyshev order `U_p`.
    pub quadrature_order: usize,
    pub series: SeriesOptions,
}

/// A layered key/value map remembering which layer set each key.
#[derive(Debug, Clone, Default)]
struct Layered {
    values: BTreeMap<String, (Value, usize)>,
}

impl Layered {
    fn apply(&mut self, map: &Map<String, Value>, layer: usize) -> Result<()> {
        for (k, v) in map {
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::config(k, "unknown configuration key"));
            }
            self.values.insert(k.clone(), (v.clone(), layer));
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key).map(|(v, _)| v)
    }

    fn layer(&self, key: &str) -> Option<usize> {
        self.values.get(key).map(|(_, l)| *l)
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Number(n)) => n.as_f64().ok_or_else(|| Error::config(key, "not a number")),
            Some(Value::String(s)) => s
                .trim()
                .parse()
                .map_err(|_| Error::config(key, format!("expected a number, got {s:?}"))),
            Some(v) => Err(Error::config(key, format!("expected a number, got {v}"))),
        }
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Number(n)) => n
                .as_u64()
                .ok_or_else(|| Error::config(key, format!("expected a nonnegative integer, got {n}"))),
            Some(Value::String(s)) => s
                .trim()
                .parse()
                .map_err(|_| Error::config(key, format!("expected a nonnegative integer, got {s:?}"))),
            Some(v) => Err(Error::config(key, format!("expected a nonnegative integer, got {v}"))),
        }
    }

    fn u32(&self, key: &str, default: u32) -> Result<u32> {
        let v = self.u64(key, default as u64)?;
        u32::try_from(v).map_err(|_| Error::config(key, format!("{v} is too large")))
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.u64(key, default as u64)?;
        usize::try_from(v).map_err(|_| Error::config(key, format!("{v} is too large")))
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(Error::config(key, format!("expected a string, got {v}"))),
        }
    }

    /// A JSON array of strings or a comma-separated string.
    fn list(&self, key: &str) -> Result<Option<Vec<String>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(
                s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect(),
            )),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    other => Err(Error::config(key, format!("expected strings, got {other}"))),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(v) => Err(Error::config(key, format!("expected a list, got {v}"))),
        }
    }
}

/// Parses `key=value`; the value is read as JSON when possible and as a bare
/// string otherwise.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Argument(format!("override {s:?} is not of the form key=value")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::Argument(format!("override {s:?} has an empty key")));
    }
    let v = v.trim();
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), value))
}

fn read_file(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Ok(Map::new());
    }
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Error::config("config", format!("{} must hold a JSON object", path.display()))),
        Err(e) => Err(Error::config("config", format!("cannot parse {}: {e}", path.display()))),
    }
}

fn system_from(values: &Layered) -> Result<SystemConfig> {
    let d = SystemConfig::default();
    let alpha_c = values.f64("alpha_c", d.alpha_c)?;
    let derive_alpha_e = match (values.layer("alpha_c"), values.layer("alpha_e")) {
        (Some(_), None) => true,
        (Some(c), Some(e)) => c > e,
        _ => false,
    };
    let alpha_e = if derive_alpha_e { 1.0 - alpha_c } else { values.f64("alpha_e", d.alpha_e)? };
    let cfg = SystemConfig {
        ports: values.usize("N", d.ports)?,
        length_wl: values.f64("W", d.length_wl)?,
        sigma2: values.f64("sigma2", d.sigma2)?,
        blocklength: values.u32("L", d.blocklength)?,
        bits_cu: values.u32("Nc", d.bits_cu)?,
        bits_ceu: values.u32("Ne", d.bits_ceu)?,
        alpha_c,
        alpha_e,
        rho_db: values.f64("rho_db", d.rho_db)?,
        dist_cu: values.f64("d_c", d.dist_cu)?,
        dist_ceu: values.f64("d_e", d.dist_ceu)?,
        path_loss: values.f64("a", d.path_loss)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn mc_from(values: &Layered) -> Result<McConfig> {
    let d = McConfig::default();
    let estimator = match values.string("estimator")?.as_deref() {
        None | Some("psi_average") => Estimator::PsiAverage,
        Some("error_counting") => Estimator::ErrorCounting,
        Some(other) => {
            return Err(Error::config(
                "estimator",
                format!("expected psi_average or error_counting, got {other:?}"),
            ))
        }
    };
    let mc = McConfig {
        seed: values.u64("seed", d.seed)?,
        trials: values.u64("trials", d.trials)?,
        chunk_size: values.u64("chunk_size", d.chunk_size)?,
        estimator,
        workers: values.usize("workers", d.workers)?,
    };
    mc.validate()?;
    Ok(mc)
}

fn sweep_from(values: &Layered) -> Result<SweepSpec> {
    let d = SweepSpec::default();
    let variable = match values.string("variable")? {
        None => d.variable,
        Some(s) => s.parse::<SweepVariable>().map_err(|e| Error::config("variable", e))?,
    };
    let (start, stop, step) = match variable {
        v if v == d.variable => (d.start, d.stop, d.step),
        _ => SweepSpec::alpha_default_range(),
    };
    let methods = match values.list("methods")? {
        None => d.methods.clone(),
        Some(items) => items
            .iter()
            .map(|s| parse_method(s).map_err(|e| Error::config("methods", e)))
            .collect::<Result<_>>()?,
    };
    let users = match values.list("users")? {
        None => d.users.clone(),
        Some(items) => items
            .iter()
            .map(|s| s.parse::<User>().map_err(|e| Error::config("users", e)))
            .collect::<Result<_>>()?,
    };
    let spec = SweepSpec {
        variable,
        start: values.f64("start", start)?,
        stop: values.f64("stop", stop)?,
        step: values.f64("step", step)?,
        methods,
        users,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn parse_method(s: &str) -> std::result::Result<Method, String> {
    match s {
        "theory" => Ok(Method::Theory),
        "asymptotic" => Ok(Method::Asymptotic),
        "mc" => Ok(Method::Mc),
        other => Err(format!("unknown method {other:?}; expected theory, asymptotic or mc")),
    }
}

/// Builds the run configuration from an optional preset, an optional config
/// file and `key=value` overrides.
pub fn load_config(
    path: Option<&Path>,
    preset: Option<&str>,
    overrides: &[(String, Value)],
) -> Result<RunConfig> {
    let mut common = Layered::default();
    let preset = match preset {
        Some(name) => Some(presets::preset(name)?),
        None => None,
    };
    if let Some(p) = &preset {
        common.apply(&p.common, 0)?;
    }
    let file = match path {
        Some(p) => read_file(p)?,
        None => Map::new(),
    };
    let mut set = Map::new();
    for (k, v) in overrides {
        set.insert(k.clone(), v.clone());
    }

    let layered = |scenario: &Map<String, Value>| -> Result<Layered> {
        let mut l = common.clone();
        l.apply(scenario, 1)?;
        l.apply(&file, 2)?;
        l.apply(&set, 3)?;
        Ok(l)
    };

    let scenario_maps: Vec<(Option<String>, Map<String, Value>)> = match &preset {
        Some(p) => p.scenarios.iter().map(|(id, m)| (Some(id.clone()), m.clone())).collect(),
        None => vec![(None, Map::new())],
    };
    let mut scenarios = Vec::with_capacity(scenario_maps.len());
    let mut first = None;
    for (id, map) in &scenario_maps {
        let values = layered(map)?;
        let id = match values.string("scenario_id")? {
            Some(s) if preset.is_none() || scenario_maps.len() == 1 => s,
            _ => id.clone().unwrap_or_else(|| "default".to_string()),
        };
        scenarios.push(Scenario { id, system: system_from(&values)? });
        first.get_or_insert(values);
    }
    let values = first.expect("at least one scenario");

    let d = SeriesOptions::default();
    let series = SeriesOptions {
        tolerance: values.f64("series_tol", d.tolerance)?,
        max_degree: values.usize("series_max_degree", d.max_degree)?,
    };
    if !(series.tolerance > 0.0) {
        return Err(Error::config("series_tol", "must be positive"));
    }
    let quadrature_order = values.usize("U_p", 10)?;
    if quadrature_order == 0 {
        return Err(Error::config("U_p", "must be at least 1"));
    }
    Ok(RunConfig {
        scenarios,
        mc: mc_from(&values)?,
        sweep: sweep_from(&values)?,
        quadrature_order,
        series,
    })
}
