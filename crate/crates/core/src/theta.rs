//! Riemann theta functions with characteristics and their derivatives.
//!
//! `θ[a; b](z; T) = Σ_n exp(2πi (½ (n+a)ᵀ T (n+a) + (n+a)ᵀ (z+b)))`.
//!
//! Values are returned relative to `exp(π Im zᵀ (Im T)⁻¹ Im z)`, which bounds
//! the size of every term, so the truncation tolerance is absolute in those units.

use crate::curve::C64;
use crate::error::{Error, Result};
use crate::scaled::{CompensatedSum, Scaled};
use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct Characteristic {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Characteristic {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Characteristic {
        assert_eq!(a.len(), b.len(), "characteristic halves differ in length");
        Characteristic { a, b }
    }

    pub fn zero(g: usize) -> Characteristic {
        Characteristic::new(vec![0.0; g], vec![0.0; g])
    }

    /// `4 a·b mod 2` when both halves are half-integral, otherwise `None`.
    pub fn parity(&self) -> Option<u8> {
        let mut s: i64 = 0;
        for (&a, &b) in self.a.iter().zip(self.b.iter()) {
            let (a2, b2) = (2.0 * a, 2.0 * b);
            if (a2 - a2.round()).abs() > 1e-12 || (b2 - b2.round()).abs() > 1e-12 {
                return None;
            }
            s += a2.round() as i64 * b2.round() as i64;
        }
        Some(s.rem_euclid(2) as u8)
    }
}

/// Precomputed data for one modulus.
#[derive(Clone, Debug)]
pub struct ThetaEngine {
    genus: usize,
    modulus: DMatrix<C64>,
    imag_inv: DMatrix<f64>,
    lambda_min: f64,
}

/// All subset partials of theta along a list of directions, sharing one scale.
/// `values[mask]` is the derivative along the directions whose bits are set.
#[derive(Clone, Debug)]
pub struct ThetaPartials {
    pub log_scale: f64,
    pub values: Vec<C64>,
    pub radius: usize,
    pub terms: usize,
}

impl ThetaPartials {
    pub fn get(&self, mask: usize) -> Scaled {
        Scaled::new(self.values[mask], self.log_scale)
    }
}

impl ThetaEngine {
    pub fn new(modulus: &DMatrix<C64>) -> Result<ThetaEngine> {
        let g = modulus.nrows();
        let y = modulus.map(|z| z.im);
        let ysym = (&y + y.transpose()) * 0.5;
        let lambda_min = SymmetricEigen::new(ysym.clone()).eigenvalues.min();
        if !(lambda_min > 0.0) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: lambda_min,
            });
        }
        let imag_inv = ysym.try_inverse().ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: lambda_min,
        })?;
        Ok(ThetaEngine {
            genus: g,
            modulus: modulus.clone(),
            imag_inv,
            lambda_min,
        })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Smallest box radius whose shell-by-shell tail bound is below `eps`.
    /// `dir_norms` are the 1-norms of the derivative directions and `offset`
    /// bounds how far the Gaussian centre sits from the characteristic shift.
    pub fn radius(&self, eps: f64, dir_norms: &[f64], offset: f64) -> usize {
        let g = self.genus as i32;
        let lam = self.lambda_min;
        let tail = |r: usize| -> f64 {
            let mut total = 0.0;
            for k in (r + 1)..(r + 200) {
                let kf = k as f64;
                let count = (2.0 * kf + 1.0).powi(g) - (2.0 * kf - 1.0).powi(g);
                let weight: f64 = dir_norms
                    .iter()
                    .map(|d| 2.0 * PI * d * (kf + 0.5 + offset))
                    .product();
                let term = count * weight * (-PI * lam * (kf - 0.5).powi(2)).exp();
                total += term;
                if term < total * 1e-18 {
                    break;
                }
            }
            total
        };
        let mut r = 1;
        while tail(r) > eps && r < 10_000 {
            r += 1;
        }
        r
    }

    /// Centre of the Gaussian envelope in lattice coordinates and the log of
    /// its peak value.
    fn envelope(&self, z: &[C64], chr: &Characteristic) -> (Vec<f64>, f64, f64) {
        let g = self.genus;
        let yz: Vec<f64> = z.iter().map(|v| v.im).collect();
        let mut shift = vec![0.0; g];
        let mut peak = 0.0;
        for i in 0..g {
            for j in 0..g {
                shift[i] += self.imag_inv[(i, j)] * yz[j];
            }
        }
        for i in 0..g {
            peak += yz[i] * shift[i];
        }
        let offset = shift.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let centre = (0..g).map(|i| -chr.a[i] - shift[i]).collect();
        (centre, PI * peak, offset)
    }

    /// Every subset partial along `dirs` (derivatives with respect to `z`
    /// contracted with each direction) in one lattice pass.
    pub fn partials(&self, z: &[C64], chr: &Characteristic, eps: f64, dirs: &[Vec<C64>]) -> Result<ThetaPartials> {
        let g = self.genus;
        assert_eq!(z.len(), g);
        let (centre, log_scale, offset) = self.envelope(z, chr);
        let dir_norms: Vec<f64> = dirs.iter().map(|d| d.iter().map(|v| v.norm()).sum()).collect();
        let r = self.radius(eps, &dir_norms, offset) as i64;
        let base: Vec<i64> = centre.iter().map(|c| c.round() as i64).collect();
        let nd = dirs.len();
        let nmask = 1usize << nd;
        let side = (2 * r + 1) as usize;
        let total = side.pow(g as u32);
        let two_pi_i = C64::new(0.0, 2.0 * PI);
        let zb: Vec<C64> = (0..g).map(|i| z[i] + chr.b[i]).collect();
        let mut keys: Vec<f64> = Vec::with_capacity(total);
        let mut flat: Vec<C64> = Vec::with_capacity(total * nmask);
        let mut idx = vec![0usize; g];
        let mut w = vec![0.0f64; g];
        let mut prods = vec![C64::new(0.0, 0.0); nmask];
        for _ in 0..total {
            for i in 0..g {
                w[i] = (base[i] + idx[i] as i64 - r) as f64 + chr.a[i];
            }
            let mut quad = C64::new(0.0, 0.0);
            for i in 0..g {
                let mut row = C64::new(0.0, 0.0);
                for j in 0..g {
                    row += self.modulus[(i, j)] * w[j];
                }
                quad += row * w[i];
            }
            let lin: C64 = (0..g).map(|i| zb[i] * w[i]).sum();
            let expo = two_pi_i * (quad * 0.5 + lin);
            let mant = C64::from_polar((expo.re - log_scale).exp(), expo.im);
            prods[0] = mant;
            for mask in 1..nmask {
                let bit = mask.trailing_zeros() as usize;
                let d = &dirs[bit];
                let f: C64 = two_pi_i * (0..g).map(|i| d[i] * w[i]).sum::<C64>();
                prods[mask] = prods[mask & (mask - 1)] * f;
            }
            keys.push(-expo.re);
            flat.extend_from_slice(&prods);
            for i in 0..g {
                idx[i] += 1;
                if idx[i] < side {
                    break;
                }
                idx[i] = 0;
            }
        }
        let mut order: Vec<usize> = (0..total).collect();
        order.sort_by(|&a, &b| keys[a].partial_cmp(&keys[b]).unwrap_or(std::cmp::Ordering::Equal));
        let mut sums = vec![CompensatedSum::new(); nmask];
        for &t in &order {
            for (s, v) in sums.iter_mut().zip(flat[t * nmask..(t + 1) * nmask].iter()) {
                s.add(*v);
            }
        }
        let values: Vec<C64> = sums.iter().map(|s| s.value()).collect();
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) || !log_scale.is_finite() {
            return Err(Error::Overflow);
        }
        Ok(ThetaPartials {
            log_scale,
            values,
            radius: r as usize,
            terms: total,
        })
    }
}

/// A single theta evaluation request. Derivative indices are 1-based
/// coordinates of `z` and may repeat.
#[derive(Clone, Debug)]
pub struct ThetaQuery<'a> {
    pub z: &'a [C64],
    pub modulus: &'a DMatrix<C64>,
    pub characteristic: &'a Characteristic,
    pub eps: f64,
    pub derivatives: &'a [usize],
}

fn unit_dirs(g: usize, derivatives: &[usize]) -> Result<Vec<Vec<C64>>> {
    derivatives
        .iter()
        .map(|&i| {
            if i == 0 || i > g {
                return Err(Error::IndexOutOfRange { index: i, max: g });
            }
            let mut d = vec![C64::new(0.0, 0.0); g];
            d[i - 1] = C64::new(1.0, 0.0);
            Ok(d)
        })
        .collect()
}

pub fn theta(q: &ThetaQuery) -> Result<Scaled> {
    let engine = ThetaEngine::new(q.modulus)?;
    let dirs = unit_dirs(engine.genus, q.derivatives)?;
    let p = engine.partials(q.z, q.characteristic, q.eps, &dirs)?;
    Ok(p.get((1 << dirs.len()) - 1))
}

/// Box radius needed for `eps` at real `z` with `order` unit-direction derivatives.
pub fn truncation_radius(modulus: &DMatrix<C64>, eps: f64, order: usize) -> Result<usize> {
    let engine = ThetaEngine::new(modulus)?;
    Ok(engine.radius(eps, &vec![1.0; order], 0.0))
}
