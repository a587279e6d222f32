//! Complex numbers carried as a mantissa times `exp(log_scale)`.
//!
//! Theta and sigma values overflow `f64` quickly once the imaginary part of the
//! argument grows, so every large value in the crate travels in this form.

use num_complex::Complex64;
use std::ops::{Div, Mul, Neg};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled {
        mantissa: Complex64::new(0.0, 0.0),
        log_scale: 0.0,
    };

    pub fn new(mantissa: Complex64, log_scale: f64) -> Self {
        Scaled {
            mantissa,
            log_scale,
        }
        .normalized()
    }

    pub fn from_complex(c: Complex64) -> Self {
        Scaled::new(c, 0.0)
    }

    /// `exp(c)` without ever forming the possibly huge real exponential.
    pub fn exp(c: Complex64) -> Self {
        Scaled {
            mantissa: Complex64::from_polar(1.0, c.im),
            log_scale: c.re,
        }
    }

    fn normalized(self) -> Self {
        let m = self.mantissa.norm();
        if m == 0.0 || !m.is_finite() {
            return Scaled {
                mantissa: self.mantissa,
                log_scale: if m == 0.0 { 0.0 } else { self.log_scale },
            };
        }
        Scaled {
            mantissa: self.mantissa / m,
            log_scale: self.log_scale + m.ln(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.norm() == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.mantissa.re.is_finite() && self.mantissa.im.is_finite() && self.log_scale.is_finite()
    }

    /// Natural log of the modulus.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.norm().ln() + self.log_scale
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        self.mantissa * self.log_scale.exp()
    }

    pub fn abs(&self) -> f64 {
        self.ln_abs().exp()
    }

    pub fn scale_by(&self, c: Complex64) -> Self {
        Scaled::new(self.mantissa * c, self.log_scale)
    }

    pub fn powi(&self, k: i32) -> Self {
        if self.is_zero() {
            return if k == 0 {
                Scaled::from_complex(Complex64::new(1.0, 0.0))
            } else {
                Scaled::ZERO
            };
        }
        Scaled::new(self.mantissa.powi(k), self.log_scale * k as f64)
    }

    pub fn add(&self, other: &Scaled) -> Scaled {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let top = self.log_scale.max(other.log_scale);
        let m = self.mantissa * (self.log_scale - top).exp()
            + other.mantissa * (other.log_scale - top).exp();
        Scaled::new(m, top)
    }

    pub fn sub(&self, other: &Scaled) -> Scaled {
        self.add(&-*other)
    }
}

impl Mul for Scaled {
    type Output = Scaled;
    fn mul(self, rhs: Scaled) -> Scaled {
        Scaled::new(self.mantissa * rhs.mantissa, self.log_scale + rhs.log_scale)
    }
}

impl Div for Scaled {
    type Output = Scaled;
    fn div(self, rhs: Scaled) -> Scaled {
        Scaled::new(self.mantissa / rhs.mantissa, self.log_scale - rhs.log_scale)
    }
}

impl Neg for Scaled {
    type Output = Scaled;
    fn neg(self) -> Scaled {
        Scaled {
            mantissa: -self.mantissa,
            log_scale: self.log_scale,
        }
    }
}

/// Neumaier compensated summation over complex terms.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier(acc: &mut (f64, f64), x: f64) {
    let (s, c) = *acc;
    let t = s + x;
    let c = if s.abs() >= x.abs() {
        c + ((s - t) + x)
    } else {
        c + ((x - t) + s)
    };
    *acc = (t, c);
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, z.re);
        neumaier(&mut self.im, z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}
