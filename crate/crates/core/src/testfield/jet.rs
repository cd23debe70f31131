//! Second-order forward jets in the three variables `(r, x3, h)`.

use std::ops::{Add, Mul, Neg, Sub};

pub(crate) const R: usize = 0;
pub(crate) const X3: usize = 1;
pub(crate) const H: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Jet {
    pub v: f64,
    pub d: [f64; 3],
    pub dd: [[f64; 3]; 3],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self {
            v,
            d: [0.0; 3],
            dd: [[0.0; 3]; 3],
        }
    }

    pub fn variable(v: f64, index: usize) -> Self {
        let mut j = Self::constant(v);
        j.d[index] = 1.0;
        j
    }

    /// Applies a scalar function given its value and first two derivatives at `self.v`.
    pub fn map(self, f: f64, df: f64, ddf: f64) -> Self {
        let mut out = Self::constant(f);
        for i in 0..3 {
            out.d[i] = df * self.d[i];
            for j in 0..3 {
                out.dd[i][j] = ddf * self.d[i] * self.d[j] + df * self.dd[i][j];
            }
        }
        out
    }

    pub fn recip(self) -> Self {
        let inv = 1.0 / self.v;
        self.map(inv, -inv * inv, 2.0 * inv * inv * inv)
    }

    pub fn scale(self, c: f64) -> Self {
        let mut out = self;
        out.v *= c;
        for i in 0..3 {
            out.d[i] *= c;
            for j in 0..3 {
                out.dd[i][j] *= c;
            }
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut out = self;
        out.v += o.v;
        for i in 0..3 {
            out.d[i] += o.d[i];
            for j in 0..3 {
                out.dd[i][j] += o.dd[i][j];
            }
        }
        out
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::constant(self.v * o.v);
        for i in 0..3 {
            out.d[i] = self.d[i] * o.v + self.v * o.d[i];
            for j in 0..3 {
                out.dd[i][j] = self.dd[i][j] * o.v
                    + self.d[i] * o.d[j]
                    + self.d[j] * o.d[i]
                    + self.v * o.dd[i][j];
            }
        }
        out
    }
}
