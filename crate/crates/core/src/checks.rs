//! Structural checks on sigma: translation by the lattice and derivatives.

use crate::abel::AbelMap;
use crate::curve::{CurveSpec, C64};
use crate::error::Result;
use crate::sampling::{derive_seed, PointSampler};
use crate::sigma::{natural_index, SigmaContext};
use rayon::prelude::*;
use serde::Serialize;

const MAX_RESAMPLES: usize = 10;

#[derive(Clone, Debug, Serialize)]
pub struct QuasiPeriodicityRecord {
    pub level: usize,
    pub seed: u64,
    pub generator: String,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiPeriodicityReport {
    pub genus: usize,
    pub records: Vec<QuasiPeriodicityRecord>,
    pub max_residual: f64,
    pub verdict: bool,
}

/// `σ_{♮ⁿ}(u + ℓ) = χ(ℓ) e^{L(u + ½ℓ, ℓ)} σ_{♮ⁿ}(u)` for `u` on the `n`-th
/// stratum and every lattice generator `ℓ`, with both sides evaluated without
/// lattice reduction.
pub fn quasi_periodicity_check(
    curve: &CurveSpec,
    ctx: &SigmaContext,
    points: usize,
    tol: f64,
    seed: u64,
) -> Result<QuasiPeriodicityReport> {
    let g = ctx.genus();
    let direct = ctx.clone().with_reduction(false);
    let jobs: Vec<(usize, usize)> = (1..=g).flat_map(|n| (0..points).map(move |k| (n, k))).collect();
    let per_job: Vec<Vec<QuasiPeriodicityRecord>> = jobs
        .into_par_iter()
        .map(|(n, k)| -> Result<Vec<QuasiPeriodicityRecord>> {
            let s = derive_seed(seed, &[0x0A51, g as u64, n as u64, k as u64]);
            let map = AbelMap::new(curve);
            let mut sampler = PointSampler::new(curve, s);
            let mut attempts = 0;
            let u = loop {
                match map.divisor(&sampler.points(n)) {
                    Ok(u) => break u,
                    Err(e) if attempts < MAX_RESAMPLES && matches!(e, crate::error::Error::NonGenericDivisor(_)) => attempts += 1,
                    Err(e) => return Err(e),
                }
            };
            let base = direct.sigma_natural(&u, n)?;
            let mut out = Vec::with_capacity(2 * g);
            for j in 0..2 * g {
                let mut l1 = vec![0i64; g];
                let mut l2 = vec![0i64; g];
                if j < g {
                    l1[j] = 1;
                } else {
                    l2[j - g] = 1;
                }
                let f1: Vec<f64> = l1.iter().map(|&v| v as f64).collect();
                let f2: Vec<f64> = l2.iter().map(|&v| v as f64).collect();
                let ell = ctx.periods.lattice_vector(&f1, &f2);
                let shifted: Vec<C64> = (0..g).map(|i| u[i] + ell[i]).collect();
                let lhs = direct.sigma_natural(&shifted, n)?;
                let rhs = ctx.transform_factor(&u, &l1, &l2) * base;
                let residual = lhs.sub(&rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300);
                let generator = if j < g {
                    format!("alpha{}", j + 1)
                } else {
                    format!("beta{}", j - g + 1)
                };
                out.push(QuasiPeriodicityRecord {
                    level: n,
                    seed: s,
                    generator,
                    residual,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let records: Vec<_> = per_job.into_iter().flatten().collect();
    let max_residual = records.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(QuasiPeriodicityReport {
        genus: g,
        records,
        max_residual,
        verdict: max_residual <= tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeRecord {
    pub level: usize,
    pub indices: Vec<usize>,
    pub point: usize,
    pub analytic: [f64; 2],
    pub finite_difference: [f64; 2],
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeReport {
    pub genus: usize,
    pub step: f64,
    pub records: Vec<DerivativeRecord>,
    pub max_residual: f64,
    pub verdict: bool,
}

/// Nested fourth-order central differences of `σ` along `dirs` (0-based).
fn nested_difference(ctx: &SigmaContext, u: &[C64], dirs: &[usize], h: f64) -> Result<C64> {
    match dirs.split_first() {
        None => Ok(ctx.sigma(u)?.to_complex()),
        Some((&d, rest)) => {
            let at = |k: f64| -> Result<C64> {
                let mut w = u.to_vec();
                w[d] += k * h;
                nested_difference(ctx, &w, rest, h)
            };
            Ok((at(-2.0)? - at(2.0)? + (at(1.0)? - at(-1.0)?) * 8.0) / (12.0 * h))
        }
    }
}

/// Every `σ_{♮ⁿ}` with a non-empty index set against finite differences of `σ`.
pub fn derivative_check(ctx: &SigmaContext, points: usize, tol: f64, seed: u64) -> Result<DerivativeReport> {
    let g = ctx.genus();
    let h = 1e-3;
    let mut levels = Vec::new();
    for n in 1..g {
        let idx = natural_index(g, n)?;
        if !idx.indices.is_empty() {
            levels.push((n, idx.indices));
        }
    }
    let probes: Vec<Vec<C64>> = {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0xFD, g as u64]));
        (0..points)
            .map(|_| {
                let a: Vec<f64> = (0..g).map(|_| rng.gen_range(-0.45..0.45)).collect();
                let b: Vec<f64> = (0..g).map(|_| rng.gen_range(-0.45..0.45)).collect();
                ctx.periods.lattice_vector(&a, &b).iter().copied().collect()
            })
            .collect()
    };
    let jobs: Vec<(usize, usize)> = (0..levels.len()).flat_map(|l| (0..points).map(move |k| (l, k))).collect();
    let records: Vec<DerivativeRecord> = jobs
        .into_par_iter()
        .map(|(l, k)| -> Result<DerivativeRecord> {
            let (n, ref indices) = levels[l];
            let u = &probes[k];
            let analytic = ctx.derivative(u, indices)?.to_complex();
            let dirs: Vec<usize> = indices.iter().map(|i| i - 1).collect();
            let fd = nested_difference(ctx, u, &dirs, h)?;
            Ok(DerivativeRecord {
                level: n,
                indices: indices.clone(),
                point: k,
                analytic: [analytic.re, analytic.im],
                finite_difference: [fd.re, fd.im],
                residual: (analytic - fd).norm() / analytic.norm().max(fd.norm()).max(1e-300),
            })
        })
        .collect::<Result<_>>()?;
    let max_residual = records.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(DerivativeReport {
        genus: g,
        step: h,
        records,
        max_residual,
        verdict: max_residual <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periods::compute_periods;

    fn genus_one() -> (CurveSpec, SigmaContext) {
        let curve = CurveSpec::from_real(&[0.0, -1.0, 0.0]).unwrap();
        let pd = compute_periods(&curve).unwrap();
        let ctx = SigmaContext::new(&curve, &pd).unwrap();
        (curve, ctx)
    }

    #[test]
    fn nested_difference_of_order_zero_is_the_value() {
        let (_, ctx) = genus_one();
        let u = [C64::new(0.3, 0.1)];
        let v = nested_difference(&ctx, &u, &[], 1e-3).unwrap();
        assert_eq!(v, ctx.sigma(&u).unwrap().to_complex());
    }

    #[test]
    fn first_difference_matches_partials() {
        let (_, ctx) = genus_one();
        let u = [C64::new(0.3, 0.1)];
        let fd = nested_difference(&ctx, &u, &[0], 1e-3).unwrap();
        let exact = ctx.derivative(&u, &[1]).unwrap().to_complex();
        assert!((fd - exact).norm() < 1e-10 * exact.norm());
    }

    #[test]
    fn genus_one_translation_law() {
        let (curve, ctx) = genus_one();
        let r = quasi_periodicity_check(&curve, &ctx, 3, 1e-8, 1).unwrap();
        assert_eq!(r.records.len(), 6);
        assert!(r.verdict, "{}", r.max_residual);
    }
}
