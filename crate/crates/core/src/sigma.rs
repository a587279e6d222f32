//! The multivariate sigma function, its derivatives and the ℘ functions.
//!
//! `σ(u) = γ₀ exp(-½ uᵀ Q u) θ[δ''; δ'](M u; T)` with `Q = η' ω'⁻¹` and
//! `M = ½ ω'⁻¹`. Arguments are first reduced modulo the period lattice and the
//! quasi-periodicity factor is applied exactly.

use crate::abel::AbelMap;
use crate::curve::{CurveSpec, C64};
use crate::error::{Error, Result};
use crate::periods::PeriodData;
use crate::scaled::Scaled;
use crate::theta::{Characteristic, ThetaEngine};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::f64::consts::PI;

const THETA_EPS: f64 = 1e-17;
const THETA_DIVISOR_TOL: f64 = 1e-12;

/// The index set `♮ⁿ` selecting which partial of sigma is nonvanishing on
/// the stratum of `n`-point divisors. Level 0 denotes the constant `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MultiIndexNatural {
    pub genus: usize,
    pub level: usize,
    /// 1-based coordinate indices.
    pub indices: Vec<usize>,
}

impl MultiIndexNatural {
    pub fn is_sentinel(&self) -> bool {
        self.level == 0
    }
}

pub fn natural_index(g: usize, n: usize) -> Result<MultiIndexNatural> {
    if n > g + 1 {
        return Err(Error::OutOfRange { level: n, max: g + 1 });
    }
    let indices = if n == 0 || n >= g {
        vec![]
    } else {
        let top = if (g - n) % 2 == 0 { g.saturating_sub(1) } else { g };
        (n + 1..=top).step_by(2).collect()
    };
    Ok(MultiIndexNatural {
        genus: g,
        level: n,
        indices,
    })
}

/// A point of `C^g` together with its real lattice coordinates
/// `u = 2 (ω' u' + ω'' u'')`.
#[derive(Clone, Debug)]
pub struct JacobianPoint {
    pub u: Vec<C64>,
    pub uprime: Vec<f64>,
    pub udprime: Vec<f64>,
    pub stratum: Option<usize>,
}

impl JacobianPoint {
    pub fn new(u: Vec<C64>, pd: &PeriodData) -> Result<JacobianPoint> {
        let (uprime, udprime) = lattice_decompose(&u, pd)?;
        Ok(JacobianPoint {
            u,
            uprime,
            udprime,
            stratum: None,
        })
    }
}

/// Solve `u = 2 (ω' u' + ω'' u'')` for real `u'`, `u''`.
pub fn lattice_decompose(u: &[C64], pd: &PeriodData) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = pd.genus;
    let mut a = DMatrix::<f64>::zeros(2 * g, 2 * g);
    let mut rhs = DVector::<f64>::zeros(2 * g);
    for r in 0..g {
        for c in 0..g {
            a[(r, c)] = 2.0 * pd.omega1[(r, c)].re;
            a[(r, c + g)] = 2.0 * pd.omega2[(r, c)].re;
            a[(r + g, c)] = 2.0 * pd.omega1[(r, c)].im;
            a[(r + g, c + g)] = 2.0 * pd.omega2[(r, c)].im;
        }
        rhs[r] = u[r].re;
        rhs[r + g] = u[r].im;
    }
    let sol = a.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok((sol.rows(0, g).iter().copied().collect(), sol.rows(g, g).iter().copied().collect()))
}

/// All subset partials of sigma along an ordered list of coordinates.
#[derive(Clone, Debug)]
pub struct SigmaPartials {
    pub log_scale: f64,
    pub values: Vec<C64>,
    /// Size of the theta factor relative to its envelope; small values mean
    /// the argument is close to the theta divisor.
    pub relative_theta: f64,
}

impl SigmaPartials {
    pub fn get(&self, mask: usize) -> Scaled {
        Scaled::new(self.values[mask], self.log_scale)
    }

    pub fn full(&self) -> Scaled {
        self.get(self.values.len() - 1)
    }
}

/// Result of fixing `γ₀` from the leading term at infinity.
#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub gamma0: [f64; 2],
    pub radii: Vec<f64>,
    pub estimates: Vec<[f64; 2]>,
    pub spread: f64,
}

#[derive(Clone, Debug)]
pub struct SigmaContext {
    pub periods: PeriodData,
    pub gamma0: C64,
    quad: DMatrix<C64>,
    half_inv: DMatrix<C64>,
    engine: ThetaEngine,
    chr: Characteristic,
    reduce: bool,
}

impl SigmaContext {
    /// Context with `γ₀ = 1`.
    pub fn uncalibrated(pd: &PeriodData) -> Result<SigmaContext> {
        let inv = pd.omega1.clone().try_inverse().ok_or(Error::SingularSystem)?;
        let q = &pd.eta1 * &inv;
        let quad = (&q + q.transpose()) * C64::new(0.5, 0.0);
        let half_inv = inv * C64::new(0.5, 0.0);
        let engine = ThetaEngine::new(&pd.modulus)?;
        let chr = Characteristic::new(pd.delta2.clone(), pd.delta1.clone());
        Ok(SigmaContext {
            periods: pd.clone(),
            gamma0: C64::new(1.0, 0.0),
            quad,
            half_inv,
            engine,
            chr,
            reduce: true,
        })
    }

    /// Uncalibrated context followed by [`calibrate_gamma0`].
    pub fn new(curve: &CurveSpec, pd: &PeriodData) -> Result<SigmaContext> {
        let mut ctx = SigmaContext::uncalibrated(pd)?;
        let cal = calibrate_gamma0(&ctx, curve)?;
        ctx.gamma0 = C64::new(cal.gamma0[0], cal.gamma0[1]);
        Ok(ctx)
    }

    pub fn genus(&self) -> usize {
        self.periods.genus
    }

    pub fn with_gamma0(mut self, gamma0: C64) -> SigmaContext {
        self.gamma0 = gamma0;
        self
    }

    /// Turn lattice pre-reduction on or off; results agree either way.
    pub fn with_reduction(mut self, reduce: bool) -> SigmaContext {
        self.reduce = reduce;
        self
    }

    pub fn characteristic(&self) -> &Characteristic {
        &self.chr
    }

    /// `χ(ℓ) exp(L(u + ½ℓ, ℓ))` for integer `ℓ', ℓ''`, the factor in
    /// `σ(u + ℓ) = χ(ℓ) exp(L(u + ½ℓ, ℓ)) σ(u)`.
    pub fn transform_factor(&self, u: &[C64], lprime: &[i64], ldprime: &[i64]) -> Scaled {
        let g = self.genus();
        let pd = &self.periods;
        let l1: Vec<f64> = lprime.iter().map(|&v| v as f64).collect();
        let l2: Vec<f64> = ldprime.iter().map(|&v| v as f64).collect();
        let ell = pd.lattice_vector(&l1, &l2);
        let a = DVector::from_iterator(g, l1.iter().map(|&v| C64::new(v, 0.0)));
        let b = DVector::from_iterator(g, l2.iter().map(|&v| C64::new(v, 0.0)));
        let w = &pd.eta1 * a + &pd.eta2 * b;
        let mut big_l = C64::new(0.0, 0.0);
        for i in 0..g {
            big_l += (u[i] + ell[i] * 0.5) * w[i];
        }
        big_l *= -2.0;
        let mut phase = 0.0;
        let mut cross = 0.0;
        for i in 0..g {
            phase += l1[i] * pd.delta2[i] - l2[i] * pd.delta1[i];
            cross += l1[i] * l2[i];
        }
        let chi = C64::new(0.0, 2.0 * PI * phase - PI * cross);
        Scaled::exp(chi + big_l)
    }

    /// Partials at `u` without lattice reduction.
    fn raw_partials(&self, u: &[C64], dirs: &[usize]) -> Result<SigmaPartials> {
        let g = self.genus();
        let ud = DVector::from_column_slice(u);
        let z = &self.half_inv * &ud;
        let qu = &self.quad * &ud;
        let dvecs: Vec<Vec<C64>> = dirs
            .iter()
            .map(|&i| (0..g).map(|k| self.half_inv[(k, i - 1)]).collect())
            .collect();
        let th = self.engine.partials(z.as_slice(), &self.chr, THETA_EPS, &dvecs)?;
        let nd = dirs.len();
        let nmask = 1usize << nd;
        let mut poly = vec![C64::new(0.0, 0.0); nmask];
        poly[0] = C64::new(1.0, 0.0);
        for mask in 1..nmask {
            let i = mask.trailing_zeros() as usize;
            let rest = mask & !(1 << i);
            let mut v = -qu[dirs[i] - 1] * poly[rest];
            let mut r = rest;
            while r != 0 {
                let j = r.trailing_zeros() as usize;
                r &= r - 1;
                v -= self.quad[(dirs[i] - 1, dirs[j] - 1)] * poly[rest & !(1 << j)];
            }
            poly[mask] = v;
        }
        let mut values = vec![C64::new(0.0, 0.0); nmask];
        for (mask, out) in values.iter_mut().enumerate() {
            let mut sub = mask;
            let mut acc = C64::new(0.0, 0.0);
            loop {
                acc += poly[sub] * th.values[mask & !sub];
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
            *out = acc;
        }
        let mut quadform = C64::new(0.0, 0.0);
        for i in 0..g {
            quadform += u[i] * qu[i];
        }
        let front = Scaled::exp(-quadform * 0.5).scale_by(self.gamma0);
        let lead = Scaled::new(C64::new(1.0, 0.0), th.log_scale) * front;
        let values = values.iter().map(|v| v * lead.mantissa).collect();
        Ok(SigmaPartials {
            log_scale: lead.log_scale,
            values,
            relative_theta: th.values[0].norm(),
        })
    }

    /// All subset partials of sigma along `dirs` (1-based, repeats allowed).
    pub fn partials(&self, u: &[C64], dirs: &[usize]) -> Result<SigmaPartials> {
        let g = self.genus();
        if u.len() != g {
            return Err(Error::Config(format!("argument has {} coordinates, expected {g}", u.len())));
        }
        for &i in dirs {
            if i == 0 || i > g {
                return Err(Error::IndexOutOfRange { index: i, max: g });
            }
        }
        if !self.reduce {
            return self.raw_partials(u, dirs);
        }
        let (up, udp) = lattice_decompose(u, &self.periods)?;
        let l1: Vec<i64> = up.iter().map(|v| v.round() as i64).collect();
        let l2: Vec<i64> = udp.iter().map(|v| v.round() as i64).collect();
        if l1.iter().chain(l2.iter()).all(|&v| v == 0) {
            return self.raw_partials(u, dirs);
        }
        let pd = &self.periods;
        let l1f: Vec<f64> = l1.iter().map(|&v| v as f64).collect();
        let l2f: Vec<f64> = l2.iter().map(|&v| v as f64).collect();
        let ell = pd.lattice_vector(&l1f, &l2f);
        let u0: Vec<C64> = (0..g).map(|i| u[i] - ell[i]).collect();
        let base = self.raw_partials(&u0, dirs)?;
        let a = DVector::from_iterator(g, l1f.iter().map(|&v| C64::new(v, 0.0)));
        let b = DVector::from_iterator(g, l2f.iter().map(|&v| C64::new(v, 0.0)));
        let c = (&pd.eta1 * a + &pd.eta2 * b) * C64::new(-2.0, 0.0);
        let factor = self.transform_factor(&u0, &l1, &l2);
        let nmask = base.values.len();
        let mut values = vec![C64::new(0.0, 0.0); nmask];
        for (mask, out) in values.iter_mut().enumerate() {
            let mut sub = mask;
            let mut acc = C64::new(0.0, 0.0);
            loop {
                let mut w = C64::new(1.0, 0.0);
                let mut r = sub;
                while r != 0 {
                    let j = r.trailing_zeros() as usize;
                    r &= r - 1;
                    w *= c[dirs[j] - 1];
                }
                acc += w * base.values[mask & !sub];
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
            *out = acc * factor.mantissa;
        }
        Ok(SigmaPartials {
            log_scale: base.log_scale + factor.log_scale,
            values,
            relative_theta: base.relative_theta,
        })
    }

    pub fn sigma(&self, u: &[C64]) -> Result<Scaled> {
        Ok(self.partials(u, &[])?.full())
    }

    /// `∂_S σ(u)` for a multiset of 1-based indices.
    pub fn derivative(&self, u: &[C64], indices: &[usize]) -> Result<Scaled> {
        Ok(self.partials(u, indices)?.full())
    }

    /// `σ_{♮ⁿ}(u)`; level 0 is the constant `-1`.
    pub fn sigma_natural(&self, u: &[C64], level: usize) -> Result<Scaled> {
        let idx = natural_index(self.genus(), level)?;
        if idx.is_sentinel() {
            return Ok(Scaled::from_complex(C64::new(-1.0, 0.0)));
        }
        self.derivative(u, &idx.indices)
    }

    /// `℘_{ij}(u) = (σ_i σ_j - σ σ_{ij}) / σ²`.
    pub fn wp(&self, u: &[C64], i: usize, j: usize) -> Result<C64> {
        let p = self.partials(u, &[i, j])?;
        if p.relative_theta < THETA_DIVISOR_TOL {
            return Err(Error::OnThetaDivisor {
                relative: p.relative_theta,
            });
        }
        let v = &p.values;
        Ok((v[1] * v[2] - v[0] * v[3]) / (v[0] * v[0]))
    }

    /// `℘_{ijk}(u) = -∂_k` of `(log σ)_{ij}`, from partials up to third order.
    pub fn wp3(&self, u: &[C64], i: usize, j: usize, k: usize) -> Result<C64> {
        let p = self.partials(u, &[i, j, k])?;
        if p.relative_theta < THETA_DIVISOR_TOL {
            return Err(Error::OnThetaDivisor {
                relative: p.relative_theta,
            });
        }
        let v = &p.values;
        let s = v[0];
        let (si, sj, sk) = (v[1], v[2], v[4]);
        let (sij, sik, sjk) = (v[3], v[5], v[6]);
        let sijk = v[7];
        // -(log σ)_{ijk}
        let l = sijk / s - (sij * sk + sik * sj + sjk * si) / (s * s) + si * sj * sk * 2.0 / (s * s * s);
        Ok(-l)
    }
}

/// Fix `γ₀` so that `σ_{♮¹}(u) / u_g^g → -(-1)^{g(g-1)/2}` along the image of
/// the curve near infinity. The ratio is even and analytic in the local
/// parameter, so its value at 0 is the mean over a circle.
pub fn calibrate_gamma0(ctx: &SigmaContext, curve: &CurveSpec) -> Result<Calibration> {
    let g = ctx.genus();
    let base = ctx.clone().with_gamma0(C64::new(1.0, 0.0));
    let map = AbelMap::new(curve);
    let r0 = 0.3 / curve.max_branch_modulus().max(1.0).sqrt();
    let radii = [r0, r0 * 0.5, r0 * 0.25];
    let npts = 32;
    let mut estimates = Vec::new();
    for &r in &radii {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..npts {
            let t = C64::from_polar(r, 2.0 * PI * (k as f64 + 0.5) / npts as f64);
            let v = map.tail(t)?;
            let s = base.sigma_natural(&v, 1)?;
            let ratio = s / Scaled::from_complex(v[g - 1]).powi(g as i32);
            acc += ratio.to_complex();
        }
        estimates.push(acc / npts as f64);
    }
    let c = estimates[radii.len() - 1];
    let spread = estimates
        .iter()
        .map(|e| (e - c).norm())
        .fold(0.0_f64, f64::max)
        / c.norm();
    if spread > 1e-6 {
        return Err(Error::CalibrationUnstable { spread });
    }
    let sign = if (g * (g.saturating_sub(1)) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let gamma0 = C64::new(-sign, 0.0) / c;
    Ok(Calibration {
        gamma0: [gamma0.re, gamma0.im],
        radii: radii.to_vec(),
        estimates: estimates.iter().map(|z| [z.re, z.im]).collect(),
        spread,
    })
}
