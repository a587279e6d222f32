//! Homology cycles, period matrices and the modulus.

use crate::curve::{continue_y, eval_poly, CurveSpec, DifferentialKind, C64};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_doubling, QuadConfig};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use std::f64::consts::PI;

const LEGENDRE_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-10;

/// A straight segment between consecutive sorted branch points, with the sign
/// that places it on the sheet continued from the first segment.
#[derive(Clone, Debug, Serialize)]
pub struct ChainSegment {
    #[serde(serialize_with = "ser_c")]
    pub start: C64,
    #[serde(serialize_with = "ser_c")]
    pub end: C64,
    pub sheet_sign: f64,
    #[serde(skip)]
    others: Vec<C64>,
    #[serde(skip)]
    sqrt_mid: C64,
}

impl ChainSegment {
    fn new(start: C64, end: C64, branch: &[C64]) -> ChainSegment {
        let others: Vec<C64> = branch
            .iter()
            .copied()
            .filter(|e| *e != start && *e != end)
            .collect();
        let mid = (start + end) * 0.5;
        let prod = others.iter().fold(C64::new(1.0, 0.0), |acc, e| acc * (mid - e));
        ChainSegment {
            start,
            end,
            sheet_sign: 1.0,
            others,
            sqrt_mid: prod.sqrt(),
        }
    }

    fn mid(&self) -> C64 {
        (self.start + self.end) * 0.5
    }

    fn half(&self) -> C64 {
        (self.end - self.start) * 0.5
    }

    /// `x(θ) = mid - half cos θ`, running from `start` at 0 to `end` at π.
    pub fn x_at(&self, theta: f64) -> C64 {
        self.mid() - self.half() * theta.cos()
    }

    fn theta_of(&self, x: C64) -> f64 {
        let c = ((self.mid() - x) / self.half()).re.clamp(-1.0, 1.0);
        c.acos()
    }

    fn g_hat(&self, x: C64) -> C64 {
        let mid = self.mid();
        self.others
            .iter()
            .fold(self.sqrt_mid, |acc, e| acc * ((x - e) / (mid - e)).sqrt())
    }

    /// `y` on this segment before applying the sheet sign.
    pub fn y_reference(&self, theta: f64) -> C64 {
        let x = self.x_at(theta);
        C64::new(0.0, 1.0) * self.half() * theta.sin() * self.g_hat(x)
    }

    pub fn y_at(&self, theta: f64) -> C64 {
        self.y_reference(theta) * self.sheet_sign
    }
}

/// Weighted sum of chain segments.
#[derive(Clone, Debug, Serialize)]
pub struct Cycle {
    pub terms: Vec<(usize, f64)>,
}

/// The `2g` chain segments with the `a` and `b` cycles built from them.
#[derive(Clone, Debug, Serialize)]
pub struct CycleSet {
    pub segments: Vec<ChainSegment>,
    pub alpha: Vec<Cycle>,
    pub beta: Vec<Cycle>,
}

fn ser_c<S: serde::Serializer>(c: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [c.re, c.im].serialize(s)
}

/// Build the chain through the sorted branch points and propagate the sheet
/// across each interior branch point along a small arc.
pub fn build_cycles(curve: &CurveSpec) -> Result<CycleSet> {
    let e = curve.branch_points();
    let g = curve.genus();
    let eps = curve.separation_threshold();
    let mut segments: Vec<ChainSegment> = (0..2 * g)
        .map(|k| ChainSegment::new(e[k], e[k + 1], e))
        .collect();
    for (k, seg) in segments.iter().enumerate() {
        for (j, &b) in e.iter().enumerate() {
            if j == k || j == k + 1 {
                continue;
            }
            if point_segment_distance(b, seg.start, seg.end) <= eps {
                return Err(Error::CycleConstructionFailed(format!(
                    "segment {} passes through branch point {}",
                    k + 1,
                    j + 1
                )));
            }
        }
    }
    for k in 0..2 * g - 1 {
        let b = e[k + 1];
        let mut r = e
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k + 1)
            .map(|(_, p)| (p - b).norm())
            .fold(f64::INFINITY, f64::min)
            * 0.25;
        for (j, seg) in segments.iter().enumerate() {
            if j != k && j != k + 1 {
                r = r.min(0.5 * point_segment_distance(b, seg.start, seg.end));
            }
        }
        let d_in = (segments[k].end - segments[k].start).unscale((segments[k].end - segments[k].start).norm());
        let d_out = (segments[k + 1].end - segments[k + 1].start)
            .unscale((segments[k + 1].end - segments[k + 1].start).norm());
        let x1 = b - d_in * r;
        let theta1 = segments[k].theta_of(x1);
        let x1 = segments[k].x_at(theta1);
        let mut y = segments[k].y_at(theta1);
        let phi1 = (-d_in).arg();
        let mut phi2 = d_out.arg();
        while phi2 > phi1 {
            phi2 -= 2.0 * PI;
        }
        while phi2 <= phi1 - 2.0 * PI {
            phi2 += 2.0 * PI;
        }
        let steps = (((phi1 - phi2) / (PI / 64.0)).ceil() as usize).max(1);
        let mut x = x1;
        for s in 1..=steps {
            let phi = phi1 + (phi2 - phi1) * s as f64 / steps as f64;
            let xn = b + C64::from_polar(r, phi);
            y = continue_y(curve, x, y, xn);
            x = xn;
        }
        let theta2 = segments[k + 1].theta_of(x);
        let xs = segments[k + 1].x_at(theta2);
        y = continue_y(curve, x, y, xs);
        let refy = segments[k + 1].y_reference(theta2);
        let ratio = y / refy;
        let sign = ratio.re.signum();
        if (ratio - C64::new(sign, 0.0)).norm() > 1e-6 {
            return Err(Error::CycleConstructionFailed(format!(
                "sheet propagation across branch point {} gave ratio {ratio}",
                k + 2
            )));
        }
        segments[k + 1].sheet_sign = sign;
    }
    let alpha = (1..=g)
        .map(|i| Cycle {
            terms: (i..=g).map(|k| (2 * k - 1, 2.0)).collect(),
        })
        .collect();
    let beta = (1..=g)
        .map(|i| Cycle {
            terms: vec![(2 * i - 2, -2.0)],
        })
        .collect();
    Ok(CycleSet {
        segments,
        alpha,
        beta,
    })
}

fn point_segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let t = (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Integrals of every first and second kind differential over one segment.
/// The output holds the `g` first kind values followed by the `g` second kind values.
pub fn segment_integrals(curve: &CurveSpec, seg: &ChainSegment, cfg: &QuadConfig) -> Result<Vec<C64>> {
    let g = curve.genus();
    let mut nums = Vec::with_capacity(2 * g);
    for kind in [DifferentialKind::First, DifferentialKind::Second] {
        for i in 1..=g {
            nums.push(curve.differential_numerator(kind, i)?);
        }
    }
    let i2s = C64::new(0.0, 2.0 * seg.sheet_sign);
    integrate_doubling(0.0, PI, cfg, 2 * g, |theta, out| {
        let x = seg.x_at(theta);
        let denom = i2s * seg.g_hat(x);
        for (o, p) in out.iter_mut().zip(nums.iter()) {
            *o = eval_poly(p, x) / denom;
        }
    })
}

/// Integral of one differential around one cycle.
pub fn cycle_integral(
    curve: &CurveSpec,
    cycles: &CycleSet,
    cycle: &Cycle,
    kind: DifferentialKind,
    index: usize,
    cfg: &QuadConfig,
) -> Result<C64> {
    let g = curve.genus();
    if index == 0 || index > g {
        return Err(Error::IndexOutOfRange { index, max: g });
    }
    let slot = match kind {
        DifferentialKind::First => index - 1,
        DifferentialKind::Second => g + index - 1,
    };
    let mut total = C64::new(0.0, 0.0);
    for &(k, w) in &cycle.terms {
        total += segment_integrals(curve, &cycles.segments[k], cfg)?[slot] * w;
    }
    Ok(total)
}

/// How the raw cycles were turned into the final basis.
#[derive(Clone, Debug, Serialize)]
pub struct Normalization {
    /// Gap cycles supply the first half-period matrix, cut cycles the second.
    pub gap_cycles_first: bool,
    /// Signs applied to each `b` cycle so that the Legendre relation holds.
    pub beta_signs: Vec<i8>,
}

/// Everything derived from one curve's periods.
#[derive(Clone, Debug)]
pub struct PeriodData {
    pub genus: usize,
    pub omega1: DMatrix<C64>,
    pub omega2: DMatrix<C64>,
    pub eta1: DMatrix<C64>,
    pub eta2: DMatrix<C64>,
    pub modulus: DMatrix<C64>,
    pub delta1: Vec<f64>,
    pub delta2: Vec<f64>,
    pub legendre_residual: f64,
    pub symmetry_residual: f64,
    pub min_imag_eigenvalue: f64,
    pub omega1_condition: f64,
    pub normalization: Normalization,
    pub cycles: CycleSet,
}

/// Compute periods with default quadrature settings.
pub fn compute_periods(curve: &CurveSpec) -> Result<PeriodData> {
    compute_periods_with(curve, &QuadConfig::default())
}

pub fn compute_periods_with(curve: &CurveSpec, cfg: &QuadConfig) -> Result<PeriodData> {
    let g = curve.genus();
    let mut cycles = build_cycles(curve)?;
    let seg_ints: Vec<Vec<C64>> = cycles
        .segments
        .iter()
        .map(|s| segment_integrals(curve, s, cfg))
        .collect::<Result<_>>()?;
    let cyc_val = |c: &Cycle, slot: usize| -> C64 {
        c.terms
            .iter()
            .map(|&(k, w)| seg_ints[k][slot] * w)
            .sum::<C64>()
    };
    let mut omega1 = DMatrix::zeros(g, g);
    let mut eta1 = DMatrix::zeros(g, g);
    let mut omega2_raw = DMatrix::zeros(g, g);
    let mut eta2_raw = DMatrix::zeros(g, g);
    for r in 0..g {
        for c in 0..g {
            omega1[(r, c)] = cyc_val(&cycles.alpha[c], r) * 0.5;
            eta1[(r, c)] = cyc_val(&cycles.alpha[c], g + r) * 0.5;
            omega2_raw[(r, c)] = cyc_val(&cycles.beta[c], r) * 0.5;
            eta2_raw[(r, c)] = cyc_val(&cycles.beta[c], g + r) * 0.5;
        }
    }
    let lu = omega1.clone().lu();
    let mut best: Option<(f64, u32)> = None;
    let mut chosen = None;
    for mask in 0..(1u32 << g) {
        let mut omega2 = omega2_raw.clone();
        let mut eta2 = eta2_raw.clone();
        for c in 0..g {
            if mask >> c & 1 == 1 {
                omega2.column_mut(c).neg_mut();
                eta2.column_mut(c).neg_mut();
            }
        }
        let res = legendre_residual_of(&omega1, &omega2, &eta1, &eta2);
        if best.map_or(true, |(b, _)| res < b) {
            best = Some((res, mask));
        }
        if res > LEGENDRE_TOL {
            continue;
        }
        let t = lu
            .solve(&omega2)
            .ok_or(Error::ValidationFailed {
                invariant: "first half-period matrix is singular".into(),
                value: 0.0,
            })?;
        let y = t.map(|z| z.im);
        let ysym = (&y + y.transpose()) * 0.5;
        let min_eig = SymmetricEigen::new(ysym).eigenvalues.min();
        if min_eig > 0.0 {
            chosen = Some((mask, omega2, eta2, t, res, min_eig));
            break;
        }
    }
    let (mask, omega2, eta2, t, res, min_eig) = match chosen {
        Some(c) => c,
        None => {
            let (value, _) = best.unwrap();
            return Err(Error::ValidationFailed {
                invariant: "Legendre relation with positive imaginary modulus".into(),
                value,
            });
        }
    };
    let scale = t.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
    let symmetry_residual = (&t - t.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
    if symmetry_residual > SYMMETRY_TOL {
        return Err(Error::ValidationFailed {
            invariant: "modulus symmetry".into(),
            value: symmetry_residual,
        });
    }
    let modulus = (&t + t.transpose()) * C64::new(0.5, 0.0);
    let sv = omega1.clone().svd(false, false).singular_values;
    let omega1_condition = sv.max() / sv.min();
    let mut beta_signs = Vec::with_capacity(g);
    for c in 0..g {
        let s = if mask >> c & 1 == 1 { -1 } else { 1 };
        beta_signs.push(s as i8);
        if s < 0 {
            for term in cycles.beta[c].terms.iter_mut() {
                term.1 = -term.1;
            }
        }
    }
    Ok(PeriodData {
        genus: g,
        omega1,
        omega2,
        eta1,
        eta2,
        modulus,
        delta1: vec![0.5; g],
        delta2: (0..g).map(|i| (g - i) as f64 * 0.5).collect(),
        legendre_residual: res,
        symmetry_residual,
        min_imag_eigenvalue: min_eig,
        omega1_condition,
        normalization: Normalization {
            gap_cycles_first: true,
            beta_signs,
        },
        cycles,
    })
}

fn legendre_residual_of(w1: &DMatrix<C64>, w2: &DMatrix<C64>, e1: &DMatrix<C64>, e2: &DMatrix<C64>) -> f64 {
    let g = w1.nrows();
    let mut m = DMatrix::zeros(2 * g, 2 * g);
    m.view_mut((0, 0), (g, g)).copy_from(w1);
    m.view_mut((0, g), (g, g)).copy_from(w2);
    m.view_mut((g, 0), (g, g)).copy_from(e1);
    m.view_mut((g, g), (g, g)).copy_from(e2);
    let mut j = DMatrix::<C64>::zeros(2 * g, 2 * g);
    for i in 0..g {
        j[(i, g + i)] = C64::new(-1.0, 0.0);
        j[(g + i, i)] = C64::new(1.0, 0.0);
    }
    let lhs = &m * &j * m.transpose();
    let rhs = &j * C64::new(0.0, PI / 2.0);
    let norm = m.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max) / (norm * norm).max(1e-300)
}

/// Relative residual of the generalized Legendre relation.
pub fn legendre_residual(pd: &PeriodData) -> f64 {
    legendre_residual_of(&pd.omega1, &pd.omega2, &pd.eta1, &pd.eta2)
}

impl PeriodData {
    /// `2 (ω' l' + ω'' l'')`.
    pub fn lattice_vector(&self, l1: &[f64], l2: &[f64]) -> DVector<C64> {
        let a = DVector::from_iterator(self.genus, l1.iter().map(|&v| C64::new(v, 0.0)));
        let b = DVector::from_iterator(self.genus, l2.iter().map(|&v| C64::new(v, 0.0)));
        (&self.omega1 * a + &self.omega2 * b) * C64::new(2.0, 0.0)
    }

    pub fn to_report(&self) -> PeriodReport {
        PeriodReport {
            genus: self.genus,
            omega1: mat(&self.omega1),
            omega2: mat(&self.omega2),
            eta1: mat(&self.eta1),
            eta2: mat(&self.eta2),
            modulus: mat(&self.modulus),
            delta1: self.delta1.clone(),
            delta2: self.delta2.clone(),
            legendre_residual: self.legendre_residual,
            symmetry_residual: self.symmetry_residual,
            min_imag_eigenvalue: self.min_imag_eigenvalue,
            omega1_condition: self.omega1_condition,
            normalization: self.normalization.clone(),
            cycles: self.cycles.clone(),
        }
    }
}

/// Serializable view of [`PeriodData`]; matrices are row-major `[re, im]` pairs.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodReport {
    pub genus: usize,
    pub omega1: Vec<Vec<[f64; 2]>>,
    pub omega2: Vec<Vec<[f64; 2]>>,
    pub eta1: Vec<Vec<[f64; 2]>>,
    pub eta2: Vec<Vec<[f64; 2]>>,
    pub modulus: Vec<Vec<[f64; 2]>>,
    pub delta1: Vec<f64>,
    pub delta2: Vec<f64>,
    pub legendre_residual: f64,
    pub symmetry_residual: f64,
    pub min_imag_eigenvalue: f64,
    pub omega1_condition: f64,
    pub normalization: Normalization,
    pub cycles: CycleSet,
}

fn mat(m: &DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}
