//! Special functions used by the analytic engine and the simulator.
//!
//! Everything here is a pure `f64` routine:
//!
//! * `bessel_j0` - power series near the origin, Miller backward recurrence in
//!   the transition band and the Hankel asymptotic expansion for large `|x|`.
//! * `gamma_fn`, `ln_gamma` - Lanczos approximation (g = 7, 9 terms).
//! * incomplete gamma - series for `x < a + 1`, modified Lentz continued
//!   fraction otherwise.
//! * `gaussian_q` - through the regularized upper incomplete gamma,
//!   `Q(x) = Γ(1/2, x²/2) / (2√π)`.
//! * Gauss-Chebyshev (first kind) nodes.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// Below this the power series is used for J0.
const J0_SERIES_LIMIT: f64 = 8.0;
/// At and above this the Hankel expansion is used for J0.
const J0_HANKEL_LIMIT: f64 = 25.0;

/// Bessel function of the first kind, order zero.
///
/// Absolute error stays below `1e-13` for `|x| <= 500`.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("bessel_j0", format!("non-finite argument {x}")));
    }
    let x = x.abs();
    Ok(if x < J0_SERIES_LIMIT {
        j0_series(x)
    } else if x < J0_HANKEL_LIMIT {
        j0_recurrence(x)
    } else {
        j0_hankel(x)
    })
}

/// `Σ (-x²/4)^k / (k!)²`.
pub(crate) fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term.abs() < EPS * sum.abs().max(1e-300) && kf * kf > q.abs() {
            break;
        }
    }
    sum
}

/// Miller's backward recurrence normalised with `1 = J0 + 2 Σ J_{2k}`.
pub(crate) fn j0_recurrence(x: f64) -> f64 {
    // Start well above x so the seeded minimal solution has decayed to noise.
    let start = 2 * ((x as usize + 40 + (x.sqrt() * 10.0) as usize) / 2);
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-30; // J_k
    let mut norm = 0.0;
    let mut j0 = 0.0;
    for k in (1..=start).rev() {
        // J_{k-1} = (2k/x) J_k - J_{k+1}
        let prev = (2.0 * k as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        let km1 = k - 1;
        if km1 > 0 && km1 % 2 == 0 {
            norm += 2.0 * cur;
        }
        if km1 == 0 {
            j0 = cur;
        }
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += j0;
    j0 / norm
}

/// Hankel expansion `sqrt(2/(πx)) (P cos χ - Q sin χ)`, `χ = x - π/4`.
///
/// The asymptotic sums stop at their smallest term.
pub(crate) fn j0_hankel(x: f64) -> f64 {
    // a_k = Π_{j<=k} (-(2j-1)²) / (k! 8^k) for order zero
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut xp = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..200usize {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= -(odd * odd) / (8.0 * k as f64);
            xp *= x;
        }
        let term = a / xp;
        if term.abs() > last {
            break;
        }
        last = term.abs();
        // P takes even k, Q odd k, both with (-1)^{floor(k/2)}
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if last < EPS * 1e-3 {
            break;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: f64) -> f64 {
    // z is the shifted argument (a - 1)
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    acc
}

/// `ln Γ(a)` for `a > 0`.
pub fn ln_gamma(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain("ln_gamma", format!("requires a > 0, got {a}")));
    }
    Ok(ln_gamma_unchecked(a))
}

pub(crate) fn ln_gamma_unchecked(a: f64) -> f64 {
    if a < 0.5 {
        // reflection keeps the Lanczos sum in its accurate range
        (PI / (PI * a).sin()).ln() - ln_gamma_unchecked(1.0 - a)
    } else {
        let z = a - 1.0;
        let t = z + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
    }
}

/// Gamma function for `a > 0`.
pub fn gamma_fn(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain("gamma_fn", format!("requires a > 0, got {a}")));
    }
    if a == a.floor() && a <= 171.0 {
        // exact factorial for small integers
        let mut f = 1.0;
        for i in 2..(a as u32) {
            f *= i as f64;
        }
        return Ok(f);
    }
    if a < 0.5 {
        return Ok(PI / ((PI * a).sin() * gamma_fn(1.0 - a)?));
    }
    let z = a - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z))
}

fn check_incomplete_args(func: &'static str, a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(func, format!("requires a > 0, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(func, format!("requires x >= 0, got {x}")));
    }
    Ok(())
}

/// `ln Σ_{n>=0} x^n / (a (a+1) ... (a+n))`, the series part of γ(a, x).
fn lower_series_ln_sum(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum.ln()
}

/// Continued fraction for `Q(a, x)` via modified Lentz, valid for `x >= a + 1`.
fn upper_cf_regularized(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma_unchecked(a)).exp() * h
}

/// Regularized lower incomplete gamma `P(a, x) = γ(a, x) / Γ(a)`.
pub fn regularized_lower_gamma(a: f64, x: f64) -> Result<f64> {
    check_incomplete_args("regularized_lower_gamma", a, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(if x < a + 1.0 {
        (a * x.ln() - x - ln_gamma_unchecked(a) + lower_series_ln_sum(a, x)).exp()
    } else {
        1.0 - upper_cf_regularized(a, x)
    })
}

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn regularized_upper_gamma(a: f64, x: f64) -> Result<f64> {
    check_incomplete_args("regularized_upper_gamma", a, x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(if x < a + 1.0 {
        1.0 - (a * x.ln() - x - ln_gamma_unchecked(a) + lower_series_ln_sum(a, x)).exp()
    } else {
        upper_cf_regularized(a, x)
    })
}

/// Upper incomplete gamma `Γ(a, x) = ∫_x^∞ t^{a-1} e^{-t} dt`.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    check_incomplete_args("upper_incomplete_gamma", a, x)?;
    if x == 0.0 {
        return gamma_fn(a);
    }
    Ok(regularized_upper_gamma(a, x)? * gamma_fn(a)?)
}

/// `ln γ(a, x)` where `γ(a, x) = Γ(a) - Γ(a, x)`, computed without the
/// cancellation of the difference. Returns `-inf` at `x = 0`.
pub fn ln_lower_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    check_incomplete_args("ln_lower_incomplete_gamma", a, x)?;
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if x.is_infinite() {
        return Ok(ln_gamma_unchecked(a));
    }
    Ok(if x < a + 1.0 {
        a * x.ln() - x + lower_series_ln_sum(a, x)
    } else {
        ln_gamma_unchecked(a) + (-upper_cf_regularized(a, x)).ln_1p()
    })
}

/// Gaussian tail probability `Q(x) = P(Z > x)` for a standard normal `Z`.
///
/// Total on the extended reals; NaN propagates.
pub fn gaussian_q(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    let half_x2 = 0.5 * x * x;
    // Q(|x|) = Γ(1/2, x²/2) / (2 √π) = Q_reg(1/2, x²/2) / 2
    let tail = 0.5 * regularized_upper_gamma(0.5, half_x2).unwrap_or(0.0);
    if x >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Clamp a computed probability into `[0, 1]`.
///
/// Debug builds assert the excursion outside the unit interval is below `1e-9`.
pub fn clamp_probability(p: f64) -> f64 {
    debug_assert!(
        p > -1e-9 && p < 1.0 + 1e-9,
        "probability excursion too large: {p}"
    );
    p.clamp(0.0, 1.0)
}

/// Gauss-Chebyshev (first kind) nodes `η_p = cos((2p-1)π / (2U))`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureNodes {
    order: usize,
    nodes: Vec<f64>,
}

impl QuadratureNodes {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Approximates `∫_a^b f(t) dt` as
    /// `(b-a)/2 · π/U · Σ_p √(1-η_p²) f(mid + half·η_p)`.
    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> f64
    where
        F: FnMut(f64) -> f64,
    {
        self.try_integrate(a, b, |t| Ok(f(t))).expect("infallible integrand")
    }

    /// Fallible variant of [`integrate`](Self::integrate).
    pub fn try_integrate<F>(&self, a: f64, b: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for &eta in &self.nodes {
            acc += (1.0 - eta * eta).sqrt() * f(mid + half * eta)?;
        }
        Ok(half * PI / self.order as f64 * acc)
    }
}

/// Builds the `U`-point Gauss-Chebyshev node set.
pub fn chebyshev_nodes(order: usize) -> Result<QuadratureNodes> {
    if order == 0 {
        return Err(Error::Argument("quadrature order must be at least 1".into()));
    }
    let u = order as f64;
    let nodes = (1..=order)
        .map(|p| ((2 * p - 1) as f64 * PI / (2.0 * u)).cos())
        .collect();
    Ok(QuadratureNodes { order, nodes })
}
