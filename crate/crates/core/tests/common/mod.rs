//! Independent genus-one oracles: the Weierstrass sigma series and the AGM.
#![allow(dead_code)]

use num_complex::Complex64 as C64;

pub fn agm(mut a: C64, mut b: C64) -> C64 {
    for _ in 0..64 {
        let (na, nb) = ((a + b) * 0.5, (a * b).sqrt());
        // pick the root closer to the arithmetic mean
        let nb = if (na - nb).norm() <= (na + nb).norm() { nb } else { -nb };
        a = na;
        b = nb;
        if (a - b).norm() <= 1e-16 * a.norm() {
            break;
        }
    }
    a
}

/// Half-periods `(ω₁, ω₃)` of `∫ dx / 2y` on `y² = (x-e1)(x-e2)(x-e3)` with real `e1 > e2 > e3`.
pub fn real_half_periods(e1: f64, e2: f64, e3: f64) -> (f64, f64) {
    let w1 = std::f64::consts::PI / (2.0 * agm(C64::new((e1 - e3).sqrt(), 0.0), C64::new((e1 - e2).sqrt(), 0.0)).re);
    let w3 = std::f64::consts::PI / (2.0 * agm(C64::new((e1 - e3).sqrt(), 0.0), C64::new((e2 - e3).sqrt(), 0.0)).re);
    (w1, w3)
}

/// Weierstrass sigma and its first two derivatives from the power series in `z`
/// with invariants `g2`, `g3`.
pub struct WeierstrassSigma {
    coeffs: Vec<f64>,
}

impl WeierstrassSigma {
    pub fn new(g2: f64, g3: f64, max_weight: usize) -> WeierstrassSigma {
        // a[m][n]: σ(z) = Σ a_{mn} (g2/2)^m (2 g3)^n z^{4m+6n+1} / (4m+6n+1)!
        let mmax = max_weight / 2 + 2;
        let nmax = max_weight / 3 + 2;
        let mut a = vec![vec![0.0f64; nmax + 2]; mmax + 3];
        let get = |a: &Vec<Vec<f64>>, m: i64, n: i64| -> f64 {
            if m < 0 || n < 0 || m as usize >= a.len() || n as usize >= a[0].len() {
                0.0
            } else {
                a[m as usize][n as usize]
            }
        };
        a[0][0] = 1.0;
        for w in 1..=max_weight {
            for n in 0..=w / 3 {
                let rest = w - 3 * n;
                if rest % 2 != 0 {
                    continue;
                }
                let m = rest / 2;
                let (mi, ni) = (m as i64, n as i64);
                let v = 3.0 * (mi + 1) as f64 * get(&a, mi + 1, ni - 1)
                    + 16.0 / 3.0 * (ni + 1) as f64 * get(&a, mi - 2, ni + 1)
                    - (2 * mi + 3 * ni - 1) as f64 * (4 * mi + 6 * ni - 1) as f64 / 3.0 * get(&a, mi - 1, ni);
                a[m][n] = v;
            }
        }
        let deg = 2 * max_weight + 1;
        let mut coeffs = vec![0.0; deg + 1];
        for (m, row) in a.iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                let k = 4 * m + 6 * n + 1;
                if v == 0.0 || k > deg {
                    continue;
                }
                let mut fact = 1.0;
                for j in 2..=k {
                    fact *= j as f64;
                }
                coeffs[k] += v * (g2 / 2.0).powi(m as i32) * (2.0 * g3).powi(n as i32) / fact;
            }
        }
        WeierstrassSigma { coeffs }
    }

    /// `(σ, σ', σ'')` at `z`.
    pub fn eval(&self, z: C64) -> (C64, C64, C64) {
        let mut s = C64::new(0.0, 0.0);
        let mut d1 = C64::new(0.0, 0.0);
        let mut d2 = C64::new(0.0, 0.0);
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            let kf = k as f64;
            s = s * z + c;
            if k >= 1 {
                d1 = d1 * z + c * kf;
            }
            if k >= 2 {
                d2 = d2 * z + c * kf * (kf - 1.0);
            }
        }
        (s, d1, d2)
    }

    pub fn sigma(&self, z: C64) -> C64 {
        self.eval(z).0
    }

    /// `℘ = (σ'² - σσ'') / σ²`.
    pub fn wp(&self, z: C64) -> C64 {
        let (s, d1, d2) = self.eval(z);
        (d1 * d1 - s * d2) / (s * s)
    }
}
