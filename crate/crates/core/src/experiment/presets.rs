//! Named scenario bundles: `fig1a_*` sweep the SNR, `fig1b_*` sweep the power
//! split. The `_caption` and `_text` variants differ in port counts, aperture
//! and the fixed SNR.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

pub const NAMES: &[&str] = &["fig1a_caption", "fig1a_text", "fig1b_caption", "fig1b_text"];

#[derive(Debug, Clone)]
pub struct Preset {
    pub common: Map<String, Value>,
    pub scenarios: Vec<(String, Map<String, Value>)>,
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("preset literals are objects"),
    }
}

fn scenario(id: &str, ports: usize, w: f64) -> (String, Map<String, Value>) {
    (id.to_string(), object(json!({ "N": ports, "W": w })))
}

pub fn preset(name: &str) -> Result<Preset> {
    let rho_sweep = json!({
        "alpha_c": 0.1,
        "alpha_e": 0.9,
        "variable": "rho_db",
        "start": 0.0,
        "stop": 60.0,
        "step": 5.0,
        "methods": ["theory", "asymptotic", "mc"],
        "users": ["cu_cc", "cu_ce", "cu_bound", "ceu", "siso_cu", "siso_ceu"],
    });
    let alpha_sweep = |rho_db: f64| {
        json!({
            "rho_db": rho_db,
            "variable": "alpha_c",
            "start": 0.02,
            "stop": 0.45,
            "step": 0.01,
            "methods": ["theory", "mc"],
            "users": ["cu_cc", "cu_ce", "cu_bound", "ceu"],
        })
    };
    let p = match name {
        "fig1a_caption" => Preset {
            common: object(rho_sweep),
            scenarios: vec![scenario("N2_W5", 2, 5.0), scenario("N3_W10", 3, 10.0)],
        },
        // the body text names N = 3 or 4 without a length; W = 10 assumed
        "fig1a_text" => Preset {
            common: object(rho_sweep),
            scenarios: vec![scenario("N3_W10", 3, 10.0), scenario("N4_W10", 4, 10.0)],
        },
        "fig1b_caption" => Preset {
            common: object(alpha_sweep(50.0)),
            scenarios: vec![scenario("N2_W5", 2, 5.0), scenario("N3_W10", 3, 10.0)],
        },
        "fig1b_text" => Preset {
            common: object(alpha_sweep(40.0)),
            scenarios: vec![scenario("N3_W10", 3, 10.0)],
        },
        other => {
            return Err(Error::config(
                "preset",
                format!("unknown preset {other:?}; expected one of {}", NAMES.join(", ")),
            ))
        }
    };
    Ok(p)
}
