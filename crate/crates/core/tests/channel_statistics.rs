//! Large-sample statistics of the correlated port sampler.

#[path = "../src/oracle.rs"]
mod oracle;

use std::f64::consts::PI;

use fas_noma::channel::{substream_rng, CorrelationModel, PortSampler};

fn jakes(m: usize, n: usize, ports: usize, w: f64, sigma2: f64) -> f64 {
    let lag = (m as f64 - n as f64).abs() / (ports - 1) as f64;
    sigma2 * oracle::bessel_j0_integral(2.0 * PI * lag * w)
}

#[test]
fn sample_covariance_matches_jakes() {
    let samples = 1_000_000;
    for (ports, w, sigma2) in [(2, 0.5, 1.0), (3, 5.0, 2.0), (4, 1.0, 0.5)] {
        let model = CorrelationModel::new(ports, w, sigma2).unwrap();
        let mut sampler = PortSampler::new(&model);
        let mut rng = substream_rng(11, 0);
        let pairs: Vec<(usize, usize)> = (0..ports).flat_map(|m| (m..ports).map(move |n| (m, n))).collect();
        let mut sum = vec![(0.0, 0.0, 0.0); pairs.len()];
        for _ in 0..samples {
            let g = sampler.draw(&mut rng);
            for (acc, &(m, n)) in sum.iter_mut().zip(&pairs) {
                let z = g[m] * g[n].conj();
                acc.0 += z.re;
                acc.1 += z.re * z.re;
                acc.2 += z.im;
            }
        }
        let k = samples as f64;
        for ((s, s2, im), &(m, n)) in sum.iter().zip(&pairs) {
            let mean = s / k;
            let se = ((s2 / k - mean * mean) / k).sqrt();
            let want = jakes(m, n, ports, w, sigma2);
            assert!((mean - want).abs() <= 3.0 * se, "N={ports} ({m},{n}): {mean} vs {want} ± {se}");
            assert!((im / k).abs() <= 3.0 * se.max(sigma2 / k.sqrt()), "N={ports} ({m},{n}) imaginary part");
        }
    }
}

#[test]
fn single_port_power_is_exponential() {
    let samples = 1_000_000;
    for sigma2 in [1.0, 3.0] {
        let model = CorrelationModel::new(1, 1.0, sigma2).unwrap();
        let mut sampler = PortSampler::new(&model);
        let mut rng = substream_rng(5, 0);
        let mut x: Vec<f64> = (0..samples).map(|_| sampler.draw_best_power(&mut rng)).collect();
        x.sort_by(f64::total_cmp);
        let n = samples as f64;
        let d = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = -(-v / sigma2).exp_m1();
                (f - i as f64 / n).max((i + 1) as f64 / n - f)
            })
            .fold(0.0, f64::max);
        assert!(d < 1.628 / n.sqrt(), "sigma2={sigma2}: KS {d}");
    }
}

#[test]
fn best_port_power_dominates_single_port() {
    let model = CorrelationModel::new(3, 5.0, 1.0).unwrap();
    let mut sampler = PortSampler::new(&model);
    let mut rng = substream_rng(3, 0);
    let samples = 200_000;
    let mut mean = 0.0;
    for _ in 0..samples {
        let g = sampler.draw(&mut rng);
        let best = g.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        assert!(g.iter().all(|z| z.norm_sqr() <= best));
        mean += best;
    }
    mean /= samples as f64;
    // three unit-mean ports, partially correlated: 1 < E[max] < 1 + 1/2 + 1/3
    assert!(mean > 1.2 && mean < 11.0 / 6.0, "{mean}");
}
