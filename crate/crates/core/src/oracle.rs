//! Independent numerical oracles for tests.
//!
//! Nothing here calls into the library's numerical routines: the values are
//! produced by brute-force quadrature or root finding so they can check the
//! implementation without sharing its code path.

#![allow(dead_code)]

use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, (kron - gauss).abs() * h)
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = gk15(f, a, b);
    if err <= tol.max(64.0 * f64::EPSILON * k.abs()) || depth > 40 {
        return k;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth + 1) + adapt(f, m, b, 0.5 * tol, depth + 1)
}

/// Adaptive Gauss-Kronrod 7/15 on a finite interval with absolute tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    // seed with a uniform split so narrow features are not missed
    let pieces = 16;
    let w = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| adapt(&f, a + i as f64 * w, a + (i + 1) as f64 * w, tol / pieces as f64, 0))
        .sum()
}

/// `∫_a^∞ f(t) dt` via `t = a + u / (1 - u)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> f64 {
    integrate(
        |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let one_m = 1.0 - u;
            let t = a + u / one_m;
            let v = f(t) / (one_m * one_m);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// `J0(x) = (1/2π) ∫_0^{2π} cos(x sin θ) dθ` by the trapezoid rule, which is
/// spectrally accurate for this periodic integrand.
pub fn bessel_j0_integral(x: f64) -> f64 {
    let m = 2 * (x.abs() as usize) + 96;
    let mut acc = 0.0;
    let mut comp = 0.0;
    for k in 0..m {
        let th = 2.0 * PI * k as f64 / m as f64;
        let y = (x * th.sin()).cos() - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    acc / m as f64
}

/// Bisection root of `f` on `[a, b]` (sign change required).
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    assert!(fa * f(b) <= 0.0, "no sign change");
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// `γ(a, x) = ∫_0^x t^{a-1} e^{-t} dt`, substituting `s = t^a` to remove the
/// endpoint singularity.
pub fn lower_gamma_integral(a: f64, x: f64) -> f64 {
    if a >= 1.0 {
        let peak = (a - 1.0).min(x).max(1e-300);
        let scale = peak.powf(a - 1.0) * (-peak).exp() * x;
        return integrate(|t| t.powf(a - 1.0) * (-t).exp(), 0.0, x, 1e-17 * scale);
    }
    let top = x.powf(a);
    let inv = 1.0 / a;
    integrate(|s| (-s.powf(inv)).exp() * inv, 0.0, top, 1e-17 * top.max(1e-300))
}

/// `Γ(a, x) = ∫_x^∞ t^{a-1} e^{-t} dt` for `x > 0`.
pub fn upper_gamma_integral(a: f64, x: f64) -> f64 {
    integrate_to_infinity(|t| t.powf(a - 1.0) * (-t).exp(), x, 1e-17)
}

/// `Γ(a)` from the split `γ(a, 1) + Γ(a, 1)`.
pub fn gamma_integral(a: f64) -> f64 {
    lower_gamma_integral(a, 1.0) + upper_gamma_integral(a, 1.0)
}

/// Standard normal tail `∫_x^∞ φ(t) dt` for `x >= 0`.
pub fn gaussian_tail_integral(x: f64) -> f64 {
    let scale = (-0.5 * x * x).exp().max(1e-300);
    integrate_to_infinity(
        |t| (-0.5 * t * t).exp() / (2.0 * PI).sqrt(),
        x,
        1e-16 * scale,
    )
}
