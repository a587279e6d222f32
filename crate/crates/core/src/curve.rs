//! Odd-degree hyperelliptic curves `y^2 = x^{2g+1} + λ_{2g} x^{2g} + ... + λ_0`.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

const ON_CURVE_TOL: f64 = 1e-10;

/// A validated curve together with its branch points.
#[derive(Clone, Debug)]
pub struct CurveSpec {
    genus: usize,
    /// `λ_0, ..., λ_{2g+1}` with the leading `λ_{2g+1} = 1` stored explicitly.
    coeffs: Vec<C64>,
    branch: Vec<C64>,
}

/// Which square root of `f(x)` a point uses: `Plus` is the principal root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sheet {
    Plus,
    Minus,
}

impl Sheet {
    pub fn flip(self) -> Sheet {
        match self {
            Sheet::Plus => Sheet::Minus,
            Sheet::Minus => Sheet::Plus,
        }
    }
}

/// A finite point `(x, y)` of the curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivisorPoint {
    pub x: C64,
    pub y: C64,
}

impl DivisorPoint {
    /// Image under the hyperelliptic involution `(x, y) -> (x, -y)`.
    pub fn involution(&self) -> DivisorPoint {
        DivisorPoint {
            x: self.x,
            y: -self.y,
        }
    }

    pub fn sheet(&self, curve: &CurveSpec) -> Sheet {
        let r = curve.eval(self.x).sqrt();
        if (self.y - r).norm() <= (self.y + r).norm() {
            Sheet::Plus
        } else {
            Sheet::Minus
        }
    }
}

/// First kind `x^{i-1} dx / 2y` or the associated second kind differential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DifferentialKind {
    First,
    Second,
}

/// Input format shared with the command line: `{"lambda": [[re, im], ...]}`
/// listing `λ_0 .. λ_{2g}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CurveFile {
    pub lambda: Vec<[f64; 2]>,
}

impl CurveFile {
    pub fn to_curve(&self) -> Result<CurveSpec> {
        let l: Vec<C64> = self.lambda.iter().map(|p| C64::new(p[0], p[1])).collect();
        CurveSpec::new(&l)
    }
}

fn horner(coeffs: &[C64], x: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

fn derivative(coeffs: &[C64]) -> Vec<C64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

impl CurveSpec {
    /// Build a curve from `λ_0, ..., λ_{2g}` (the monic leading term is implicit).
    pub fn new(lambda: &[C64]) -> Result<CurveSpec> {
        let len = lambda.len();
        if len < 3 || len % 2 == 0 {
            return Err(Error::BadDegree { len });
        }
        let genus = (len - 1) / 2;
        let mut coeffs = lambda.to_vec();
        coeffs.push(C64::new(1.0, 0.0));
        let (branch, residuals) = find_roots(&coeffs)?;
        let max_mod = branch.iter().map(|e| e.norm()).fold(0.0, f64::max);
        let threshold = 1e-8 * (1.0 + max_mod);
        for i in 0..branch.len() {
            for j in i + 1..branch.len() {
                let d = (branch[i] - branch[j]).norm();
                if d <= threshold {
                    return Err(Error::DegenerateCurve {
                        i,
                        j,
                        distance: d,
                        threshold,
                    });
                }
            }
        }
        let dcoeffs = derivative(&coeffs);
        for (i, &e) in branch.iter().enumerate() {
            let slope = horner(&dcoeffs, e).norm();
            let scale: f64 = dcoeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.norm() * e.norm().powi(k as i32))
                .sum();
            if slope <= 1e-10 * scale {
                return Err(Error::DegenerateCurve {
                    i,
                    j: i,
                    distance: 0.0,
                    threshold,
                });
            }
        }
        for (index, (residual, scale)) in residuals.into_iter().enumerate() {
            if residual > 1e-13 * scale {
                return Err(Error::RootFindingFailed { index, residual });
            }
        }
        Ok(CurveSpec {
            genus,
            coeffs,
            branch,
        })
    }

    /// Curve whose polynomial is `Π (x - r_k)`.
    pub fn from_roots(roots: &[C64]) -> Result<CurveSpec> {
        let mut poly = vec![C64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![C64::new(0.0, 0.0); poly.len() + 1];
            for (k, &c) in poly.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            poly = next;
        }
        poly.pop();
        CurveSpec::new(&poly)
    }

    pub fn from_real(lambda: &[f64]) -> Result<CurveSpec> {
        let l: Vec<C64> = lambda.iter().map(|&v| C64::new(v, 0.0)).collect();
        CurveSpec::new(&l)
    }

    pub fn to_file(&self) -> CurveFile {
        CurveFile {
            lambda: self.coeffs[..2 * self.genus + 1]
                .iter()
                .map(|c| [c.re, c.im])
                .collect(),
        }
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    /// `λ_k` for `k` in `0..=2g+1`.
    pub fn lambda(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    /// Branch points sorted by real part, then imaginary part.
    pub fn branch_points(&self) -> &[C64] {
        &self.branch
    }

    pub fn eval(&self, x: C64) -> C64 {
        horner(&self.coeffs, x)
    }

    pub fn eval_derivative(&self, x: C64) -> C64 {
        horner(&derivative(&self.coeffs), x)
    }

    pub fn max_branch_modulus(&self) -> f64 {
        self.branch.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    pub fn min_branch_gap(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.branch.len() {
            for j in i + 1..self.branch.len() {
                m = m.min((self.branch[i] - self.branch[j]).norm());
            }
        }
        m
    }

    pub fn separation_threshold(&self) -> f64 {
        1e-8 * (1.0 + self.max_branch_modulus())
    }

    pub fn distance_to_branch(&self, x: C64) -> f64 {
        self.branch
            .iter()
            .map(|e| (x - e).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// The point over `x` on the requested sheet.
    pub fn point(&self, x: C64, sheet: Sheet) -> DivisorPoint {
        let r = self.eval(x).sqrt();
        DivisorPoint {
            x,
            y: match sheet {
                Sheet::Plus => r,
                Sheet::Minus => -r,
            },
        }
    }

    /// Validate that `(x, y)` lies on the curve.
    pub fn checked_point(&self, x: C64, y: C64) -> Result<DivisorPoint> {
        let fx = self.eval(x);
        let scale = 1.0 + fx.norm() + y.norm_sqr();
        let residual = (y * y - fx).norm();
        if residual > ON_CURVE_TOL * scale {
            return Err(Error::NotOnCurve { x, y, residual });
        }
        Ok(DivisorPoint { x, y })
    }

    /// Numerator polynomial `p` (ascending coefficients) such that the
    /// differential equals `p(x) dx / 2y`.
    pub fn differential_numerator(&self, kind: DifferentialKind, index: usize) -> Result<Vec<C64>> {
        let g = self.genus;
        if index == 0 || index > g {
            return Err(Error::IndexOutOfRange { index, max: g });
        }
        let mut p = vec![C64::new(0.0, 0.0); 2 * g + 1];
        match kind {
            DifferentialKind::First => p[index - 1] = C64::new(1.0, 0.0),
            DifferentialKind::Second => {
                let j = index;
                for k in j..=(2 * g - j) {
                    p[k] = self.coeffs[k + 1 + j] * (k + 1 - j) as f64;
                }
            }
        }
        Ok(p)
    }

    /// Value of the differential divided by `dx` at a point.
    pub fn differential_value(&self, kind: DifferentialKind, index: usize, p: &DivisorPoint) -> Result<C64> {
        let tol = self.separation_threshold();
        if self.distance_to_branch(p.x) <= tol || p.y.norm() == 0.0 {
            return Err(Error::AtBranchPoint { x: p.x });
        }
        self.checked_point(p.x, p.y)?;
        let num = self.differential_numerator(kind, index)?;
        Ok(horner(&num, p.x) / (p.y * 2.0))
    }
}

/// Carry `y` from `x0` to `x1` by the product of principal square roots of
/// `(x1 - e_k) / (x0 - e_k)`. Exact as long as `|x1 - x0|` is below the
/// distance from `x0` to every branch point.
pub fn continue_y(curve: &CurveSpec, x0: C64, y0: C64, x1: C64) -> C64 {
    curve
        .branch_points()
        .iter()
        .fold(y0, |y, e| y * ((x1 - e) / (x0 - e)).sqrt())
}

/// Evaluate an ascending-coefficient polynomial.
pub fn eval_poly(coeffs: &[C64], x: C64) -> C64 {
    horner(coeffs, x)
}

fn find_roots(coeffs: &[C64]) -> Result<(Vec<C64>, Vec<(f64, f64)>)> {
    let n = coeffs.len() - 1;
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -coeffs[i];
    }
    let shift = C64::new(1.0 + coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max), 0.0);
    let eig = [C64::new(0.0, 0.0), shift]
        .iter()
        .find_map(|&s| {
            let shifted = &m + DMatrix::<C64>::identity(n, n) * s;
            shifted.try_schur(f64::EPSILON, 2000).and_then(|d| d.eigenvalues()).map(|e| e.map(|v| v - s))
        })
        .ok_or(Error::RootFindingFailed {
            index: 0,
            residual: f64::NAN,
        })?;
    let dcoeffs = derivative(coeffs);
    let all_real = coeffs.iter().all(|c| c.im == 0.0);
    let mut roots = Vec::with_capacity(n);
    for (index, &z0) in eig.iter().enumerate() {
        let mut z = z0;
        for _ in 0..80 {
            let fz = horner(coeffs, z);
            let dz = horner(&dcoeffs, z);
            if dz.norm() == 0.0 {
                break;
            }
            let step = fz / dz;
            z -= step;
            if step.norm() <= 1e-17 * (1.0 + z.norm()) {
                break;
            }
        }
        if all_real && z.im.abs() <= 1e-13 * (1.0 + z.norm()) {
            let zr = C64::new(z.re, 0.0);
            if horner(coeffs, zr).norm() <= horner(coeffs, z).norm() * 1.0001 + 1e-300 {
                z = zr;
            }
        }
        let scale: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm() * z.norm().powi(k as i32))
            .sum();
        let residual = horner(coeffs, z).norm();
        if !residual.is_finite() {
            return Err(Error::RootFindingFailed { index, residual });
        }
        roots.push((z, residual, scale));
    }
    roots.sort_by(|a, b| {
        a.0.re
            .partial_cmp(&b.0.re)
            .unwrap()
            .then(a.0.im.partial_cmp(&b.0.im).unwrap())
    });
    Ok((
        roots.iter().map(|r| r.0).collect(),
        roots.iter().map(|r| (r.1, r.2)).collect(),
    ))
}
