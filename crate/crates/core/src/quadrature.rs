//! Gauss–Legendre rules on `[-1, 1]`, cached per degree, with complex integrands.

use crate::error::{Error, Result};
use crate::scaled::CompensatedSum;
use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type Rule = Arc<Vec<(f64, f64)>>;

fn cache() -> &'static Mutex<HashMap<usize, Rule>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Node/weight pairs of the `n`-point rule on `[-1, 1]`.
pub fn rule(n: usize) -> Rule {
    let n = n.max(2);
    let mut guard = cache().lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let gl = GaussLegendre::new(n).expect("degree at least 2");
            Arc::new(gl.as_node_weight_pairs().to_vec())
        })
        .clone()
}

/// Integrate `f` over `[a, b]` with a fixed `n`-point rule.
pub fn integrate<F: FnMut(f64) -> Complex64>(a: f64, b: f64, n: usize, mut f: F) -> Complex64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = CompensatedSum::new();
    for &(x, w) in rule(n).iter() {
        acc.add(f(mid + half * x) * w);
    }
    acc.value() * half
}

/// Settings for node doubling until successive integrals agree.
#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    pub tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            initial_nodes: 64,
            max_nodes: 4096,
            tol: 1e-14,
        }
    }
}

/// Integrate `f` over `[a, b]`, doubling the node count until the relative change
/// falls below `cfg.tol`. The integrand is called with a vector-valued output so
/// several integrals can share one pass.
pub fn integrate_doubling<F>(a: f64, b: f64, cfg: &QuadConfig, outputs: usize, mut f: F) -> Result<Vec<Complex64>>
where
    F: FnMut(f64, &mut [Complex64]),
{
    let mut buf = vec![Complex64::new(0.0, 0.0); outputs];
    let mut run = |n: usize, buf: &mut [Complex64]| {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut accs = vec![CompensatedSum::new(); outputs];
        for &(x, w) in rule(n).iter() {
            f(mid + half * x, buf);
            for (acc, v) in accs.iter_mut().zip(buf.iter()) {
                acc.add(*v * w);
            }
        }
        accs.iter().map(|a| a.value() * half).collect::<Vec<_>>()
    };
    let mut n = cfg.initial_nodes;
    let mut prev = run(n, &mut buf);
    loop {
        let m = 2 * n;
        let next = run(m, &mut buf);
        let scale = next.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let delta = next
            .iter()
            .zip(prev.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max);
        if delta <= cfg.tol * scale {
            return Ok(next);
        }
        if m >= cfg.max_nodes {
            return Err(Error::QuadratureNotConverged {
                delta: delta / scale,
                tol: cfg.tol,
            });
        }
        n = m;
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(0.0, 2.0, 8, |x| Complex64::new(x.powi(5), x));
        assert!((v - Complex64::new(64.0 / 6.0, 2.0)).norm() < 1e-13);
    }

    #[test]
    fn doubling_converges_on_smooth_integrand() {
        let cfg = QuadConfig::default();
        let v = integrate_doubling(0.0, std::f64::consts::PI, &cfg, 1, |t, out| {
            out[0] = Complex64::new(1.0 / (1.5 + t.cos()), 0.0);
        })
        .unwrap();
        let exact = std::f64::consts::PI / (1.5f64 * 1.5 - 1.0).sqrt();
        assert!((v[0].re - exact).abs() < 1e-13);
    }
}
