//! Finite-blocklength error model and the SINR algebra of the two-user link.

use std::f64::consts::{LN_2, LOG2_E, PI};

use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::special::{clamp_probability, gaussian_q};

/// `log2(1 + γ)`.
pub fn shannon_capacity(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::domain("shannon_capacity", format!("SINR must be >= 0, got {gamma}")));
    }
    Ok(gamma.ln_1p() * LOG2_E)
}

/// Channel dispersion `(log2 e)² (1 - (1 + γ)^-2)`.
pub fn channel_dispersion(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::domain("channel_dispersion", format!("SINR must be >= 0, got {gamma}")));
    }
    let inv = 1.0 / (1.0 + gamma);
    Ok(LOG2_E * LOG2_E * (1.0 - inv * inv))
}

/// Normal-approximation block error probability
/// `Q((C(γ) - k/L) / √(V(γ)/L))`, equal to 1 at `γ = 0` by continuity.
pub fn psi_exact(gamma: f64, bits: u32, blocklength: u32) -> Result<f64> {
    let cap = shannon_capacity(gamma)?;
    if gamma == 0.0 {
        return Ok(1.0);
    }
    let l = blocklength as f64;
    let disp = channel_dispersion(gamma)?;
    let arg = (cap - bits as f64 / l) / (disp / l).sqrt();
    Ok(clamp_probability(gaussian_q(arg)))
}

/// Constants of the three-piece linearisation of the error model around the
/// rate threshold `β = 2^{k/L} - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearApproxParams {
    pub beta: f64,
    pub delta: f64,
    /// Lower breakpoint; the error probability is 1 below it.
    pub v: f64,
    /// Upper breakpoint; the error probability is 0 above it.
    pub u: f64,
    pub bits: u32,
    pub blocklength: u32,
}

impl LinearApproxParams {
    /// Slope magnitude `δ √L` of the middle segment.
    pub fn slope(&self) -> f64 {
        self.delta * (self.blocklength as f64).sqrt()
    }
}

pub fn linear_params(bits: u32, blocklength: u32) -> LinearApproxParams {
    let rate = bits as f64 / blocklength as f64;
    let beta = rate.exp2() - 1.0;
    // 2^{-r} / sqrt(2π(1 - 4^{-r})) stays finite where 4^r overflows
    let delta = (-rate).exp2() / (2.0 * PI * -(-2.0 * rate * LN_2).exp_m1()).sqrt();
    let half_width = 0.5 / (delta * (blocklength as f64).sqrt());
    LinearApproxParams {
        beta,
        delta,
        v: beta - half_width,
        u: beta + half_width,
        bits,
        blocklength,
    }
}

/// Piecewise-linear error model: 1 up to `v`, a line through `(β, 1/2)`, 0
/// from `u` on.
pub fn psi_linear(gamma: f64, params: &LinearApproxParams) -> f64 {
    if gamma <= params.v {
        1.0
    } else if gamma >= params.u {
        0.0
    } else {
        (0.5 - params.slope() * (gamma - params.beta)).clamp(0.0, 1.0)
    }
}

/// SINRs at the central user for a best-port power gain `x = |g_FAS|²`:
/// `(γ_ce, γ_cc)`, the cell-edge symbol decoded first and then its own.
pub fn sinr_cu_sic(x: f64, cfg: &SystemConfig) -> (f64, f64) {
    let snr = cfg.rho() * cfg.dist_cu.powf(-cfg.path_loss) * x;
    let gamma_ce = cfg.alpha_e * snr / (cfg.alpha_c * snr + 1.0);
    (gamma_ce, cfg.alpha_c * snr)
}

/// SINR of the cell-edge user decoding its own symbol under interference.
pub fn sinr_ceu(x: f64, cfg: &SystemConfig) -> f64 {
    let snr = cfg.rho() * cfg.dist_ceu.powf(-cfg.path_loss) * x;
    cfg.alpha_e * snr / (cfg.alpha_c * snr + 1.0)
}

/// Central-user error after SIC: `ε_ce + (1 - ε_ce) ε_cc`.
pub fn combine_cu_bler(eps_ce: f64, eps_cc: f64) -> Result<f64> {
    for (name, v) in [("eps_ce", eps_ce), ("eps_cc", eps_cc)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain("combine_cu_bler", format!("{name} = {v} outside [0, 1]")));
        }
    }
    Ok(clamp_probability(eps_ce + (1.0 - eps_ce) * eps_cc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    #[test]
    fn capacity_values() {
        assert_eq!(shannon_capacity(0.0).unwrap(), 0.0);
        assert!((shannon_capacity(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((shannon_capacity(3.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(shannon_capacity(-0.1).is_err());
    }

    #[test]
    fn dispersion_values() {
        assert_eq!(channel_dispersion(0.0).unwrap(), 0.0);
        let sup = LOG2_E * LOG2_E;
        assert!((sup - 2.081_368).abs() < 1e-6);
        assert!((channel_dispersion(1e12).unwrap() - sup).abs() < 1e-9);
        assert!((channel_dispersion(3.0).unwrap() - 1.951_283).abs() < 1e-5);
        assert!(channel_dispersion(-1.0).is_err());
    }

    #[test]
    fn psi_exact_values() {
        assert_eq!(psi_exact(0.0, 100, 100).unwrap(), 1.0);
        let beta = 2f64.powf(3.0) - 1.0;
        assert!((psi_exact(beta, 300, 100).unwrap() - 0.5).abs() < 1e-12);
        let arg = 1.0 / (1.951_283f64 / 100.0).sqrt();
        let want = oracle::gaussian_tail_integral(arg);
        let got = psi_exact(3.0, 100, 100).unwrap();
        assert!((want - 4.1e-13).abs() / 4.1e-13 < 0.1);
        assert!(got / want < 1.1 && want / got < 1.1);
    }

    #[test]
    fn psi_exact_monotone() {
        let mut prev = 1.0;
        for i in 1..=1000 {
            let g = i as f64 * 0.02;
            let e = psi_exact(g, 300, 100).unwrap();
            assert!(e <= prev);
            prev = e;
        }
    }

    #[test]
    fn linear_param_values() {
        let p = linear_params(100, 100);
        assert_eq!(p.beta, 1.0);
        assert!((p.delta - 1.0 / (6.0 * PI).sqrt()).abs() < 1e-15);
        assert!((p.delta - 0.230_329).abs() < 1e-6);
        // 1 ∓ √(6π)/20
        assert!((p.v - 0.782_919_623_632_519_8).abs() < 1e-12);
        assert!((p.u - 1.217_080_376_367_480_2).abs() < 1e-12);
        assert!((p.v - 0.782_918).abs() < 1e-5);
        assert!((p.u - 1.217_082).abs() < 1e-5);

        let p = linear_params(300, 100);
        assert_eq!(p.beta, 7.0);
        assert!((p.delta - 0.050_262).abs() < 1e-6);
        // 7 ∓ √(126π)/20
        assert!((p.v - 6.005_212_743_406_519).abs() < 1e-12);
        assert!((p.u - 7.994_787_256_593_481).abs() < 1e-12);
        assert!((p.v - 6.005_211).abs() < 1e-5);
        assert!((p.u - 7.994_789).abs() < 1e-5);
    }

    #[test]
    fn linear_psi_breakpoints() {
        let p = linear_params(300, 100);
        assert_eq!(psi_linear(p.v, &p), 1.0);
        assert!((0.5 + p.slope() * (p.beta - p.v) - 1.0).abs() < 1e-12);
        assert_eq!(psi_linear(p.beta, &p), 0.5);
        assert_eq!(psi_linear(p.u, &p), 0.0);
        assert!((0.5 - p.slope() * (p.u - p.beta)).abs() < 1e-12);
        assert!((psi_exact(p.beta, 300, 100).unwrap() - 0.5).abs() < 1e-12);
        for g in [0.0, 1.0, p.v - 1e-9, p.u + 1e-9, 50.0] {
            let y = psi_linear(g, &p);
            assert!(y == 0.0 || y == 1.0);
        }
    }

    #[test]
    fn sinr_values() {
        let cfg = SystemConfig { rho_db: 40.0, ..SystemConfig::default() };
        assert_eq!(sinr_cu_sic(0.0, &cfg), (0.0, 0.0));
        assert_eq!(sinr_ceu(0.0, &cfg), 0.0);
        let (ce, _) = sinr_cu_sic(1e30, &cfg);
        assert!((ce - 9.0).abs() < 1e-9);
        let (_, cc) = sinr_cu_sic(1.0, &cfg);
        let want = 0.1 * 1e4 * (-3.9 * 5f64.ln()).exp();
        assert!((cc - want).abs() < 1e-12);
        // 1000 / 5^3.9
        assert!((cc - 1.879_390_308_940_830_6).abs() < 1e-12);
        let mut prev = -1.0;
        for i in 0..200 {
            let g = sinr_ceu(i as f64 * 0.5, &cfg);
            assert!(g > prev);
            prev = g;
        }
    }

    #[test]
    fn combine_values() {
        assert_eq!(combine_cu_bler(0.0, 0.37).unwrap(), 0.37);
        assert_eq!(combine_cu_bler(1.0, 0.37).unwrap(), 1.0);
        assert!((combine_cu_bler(0.2, 0.5).unwrap() - 0.6).abs() < 1e-15);
        assert!(combine_cu_bler(1.2, 0.5).is_err());
        assert!(combine_cu_bler(0.2, -0.5).is_err());
    }

    #[test]
    fn extreme_rate_stays_finite() {
        for (bits, l) in [(511, 1), (1000, 1)] {
            let p = linear_params(bits, l);
            assert!(p.delta > 0.0 && p.v.is_finite() && p.u.is_finite());
            let want = 1.0 / p.slope();
            assert!(((p.u - p.v) / want - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn combine_dominates(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let c = combine_cu_bler(a, b).unwrap();
            prop_assert!(c >= a.max(b) - 1e-15);
        }

        #[test]
        fn sic_sinr_below_ceiling(x in 0.0f64..1e3, alpha_c in 0.01f64..0.99, rho_db in -20.0f64..60.0) {
            let cfg = SystemConfig::default().with_alpha_c(alpha_c).with_rho_db(rho_db);
            let (ce, _) = sinr_cu_sic(x, &cfg);
            prop_assert!(ce < cfg.sinr_ceiling());
            prop_assert!(sinr_ceu(x, &cfg) < cfg.sinr_ceiling());
        }

        #[test]
        fn breakpoint_width(bits in 1u32..600, l in 1u32..400) {
            let p = linear_params(bits, l);
            prop_assert!(p.v < p.beta && p.beta < p.u);
            let want = 1.0 / p.slope();
            prop_assert!(((p.u - p.v) - want).abs() <= 1e-9 * want.max(1.0));
        }
    }
}
