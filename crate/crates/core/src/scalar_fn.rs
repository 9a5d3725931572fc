//! Closed-form scalar functions of one variable, used for graded maps
//! `z' = f(z)`.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarTerm {
    Poly { coeff: f64, power: u32 },
    Exp { coeff: f64, rate: f64 },
    Sin { coeff: f64, freq: f64, phase: f64 },
    Cos { coeff: f64, freq: f64, phase: f64 },
}

impl ScalarTerm {
    fn eval(&self, z: f64) -> (f64, f64, f64) {
        match *self {
            ScalarTerm::Poly { coeff, power } => {
                let p = power;
                let v = coeff * z.powi(p as i32);
                let d1 = if p == 0 {
                    0.0
                } else {
                    coeff * p as f64 * z.powi(p as i32 - 1)
                };
                let d2 = if p < 2 {
                    0.0
                } else {
                    coeff * (p * (p - 1)) as f64 * z.powi(p as i32 - 2)
                };
                (v, d1, d2)
            }
            ScalarTerm::Exp { coeff, rate } => {
                let e = coeff * (rate * z).exp();
                (e, rate * e, rate * rate * e)
            }
            ScalarTerm::Sin { coeff, freq, phase } => {
                let (s, c) = (freq * z + phase).sin_cos();
                (coeff * s, coeff * freq * c, -coeff * freq * freq * s)
            }
            ScalarTerm::Cos { coeff, freq, phase } => {
                let (s, c) = (freq * z + phase).sin_cos();
                (coeff * c, -coeff * freq * s, -coeff * freq * freq * c)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScalarTerm::Poly { coeff, .. } => coeff.is_finite(),
            ScalarTerm::Exp { coeff, rate } => coeff.is_finite() && rate.is_finite(),
            ScalarTerm::Sin { coeff, freq, phase } | ScalarTerm::Cos { coeff, freq, phase } => {
                coeff.is_finite() && freq.is_finite() && phase.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec("scalar term has non-finite value".into()))
        }
    }
}

/// Sum of closed-form terms with exact first and second derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ScalarTerm>", into = "Vec<ScalarTerm>")]
pub struct ScalarFn {
    terms: Vec<ScalarTerm>,
}

impl TryFrom<Vec<ScalarTerm>> for ScalarFn {
    type Error = Error;
    fn try_from(terms: Vec<ScalarTerm>) -> Result<Self> {
        for t in &terms {
            t.validate()?;
        }
        Ok(ScalarFn { terms })
    }
}

impl From<ScalarFn> for Vec<ScalarTerm> {
    fn from(f: ScalarFn) -> Self {
        f.terms
    }
}

impl ScalarFn {
    pub fn new(terms: Vec<ScalarTerm>) -> Result<Self> {
        Self::try_from(terms)
    }

    /// `f(z) = coeff * z`.
    pub fn linear(coeff: f64) -> Self {
        ScalarFn {
            terms: vec![ScalarTerm::Poly { coeff, power: 1 }],
        }
    }

    pub fn identity() -> Self {
        Self::linear(1.0)
    }

    /// Value and first two derivatives `(f, f', f'')`.
    pub fn eval(&self, z: f64) -> (f64, f64, f64) {
        let mut acc = (0.0, 0.0, 0.0);
        for t in &self.terms {
            let (v, d1, d2) = t.eval(z);
            acc.0 += v;
            acc.1 += d1;
            acc.2 += d2;
        }
        acc
    }

    pub fn value(&self, z: f64) -> f64 {
        self.eval(z).0
    }

    pub fn slope(&self, z: f64) -> f64 {
        self.eval(z).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derivatives_match_finite_differences() {
        let f = ScalarFn::new(vec![
            ScalarTerm::Poly {
                coeff: 1.0,
                power: 1,
            },
            ScalarTerm::Sin {
                coeff: 0.1,
                freq: 1.0,
                phase: 0.0,
            },
            ScalarTerm::Exp {
                coeff: 0.3,
                rate: -0.7,
            },
        ])
        .unwrap();
        let z = 0.83;
        let h = 1e-5;
        let (v, d1, d2) = f.eval(z);
        assert_relative_eq!(v, z + 0.1 * z.sin() + 0.3 * (-0.7 * z).exp(), epsilon = 1e-14);
        let fd1 = (f.value(z + h) - f.value(z - h)) / (2.0 * h);
        let fd2 = (f.value(z + h) - 2.0 * v + f.value(z - h)) / (h * h);
        assert_relative_eq!(d1, fd1, epsilon = 1e-9);
        assert_relative_eq!(d2, fd2, epsilon = 1e-5);
    }

    #[test]
    fn linear_slope_is_exact() {
        let f = ScalarFn::linear(2.0);
        assert_eq!(f.value(0.25), 0.5);
        assert_eq!(f.slope(123.0), 2.0);
        assert_eq!(f.eval(1.0).2, 0.0);
    }
}
