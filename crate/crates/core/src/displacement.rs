//! Closed-form displacement fields `u(r, t)`.
//!
//! A displacement field is a sum of separable terms, each a monomial in
//! `(x, y, z)` times one of a small set of time factors. The basis is closed
//! under the derivatives the synthesis machinery needs, so `u`, its spatial
//! gradient and Hessian, and its first and second time derivatives are all
//! evaluated exactly; no numerical differentiation enters the transformation
//! side of any computation.

use crate::spacetime::{Frame, SpaceTimePoint};
use crate::{Error, Result};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Temporal factor of a displacement term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeFactor {
    Const,
    T,
    T2,
    Cos { omega: f64, phase: f64 },
    Sin { omega: f64, phase: f64 },
}

impl TimeFactor {
    /// Value and first two time derivatives `(tau, tau', tau'')` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        match *self {
            TimeFactor::Const => (1.0, 0.0, 0.0),
            TimeFactor::T => (t, 1.0, 0.0),
            TimeFactor::T2 => (t * t, 2.0 * t, 2.0),
            TimeFactor::Cos { omega, phase } => {
                let (s, c) = (omega * t + phase).sin_cos();
                (c, -omega * s, -omega * omega * c)
            }
            TimeFactor::Sin { omega, phase } => {
                let (s, c) = (omega * t + phase).sin_cos();
                (s, omega * c, -omega * omega * s)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let TimeFactor::Cos { omega, phase } | TimeFactor::Sin { omega, phase } = self {
            if !omega.is_finite() || !phase.is_finite() {
                return Err(Error::InvalidSpec(
                    "time factor has non-finite omega or phase".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One separable term `coeff * x^px y^py z^pz * tau(t)` contributing to a
/// single displacement component (1 = x, 2 = y, 3 = z).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementTerm {
    pub component: u8,
    pub coeff: f64,
    pub px: u32,
    pub py: u32,
    pub pz: u32,
    pub time: TimeFactor,
}

impl DisplacementTerm {
    fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.component) {
            return Err(Error::InvalidSpec(format!(
                "term component must be 1, 2, or 3, got {}",
                self.component
            )));
        }
        if !self.coeff.is_finite() {
            return Err(Error::InvalidSpec("term coefficient is not finite".into()));
        }
        self.time.validate()
    }
}

/// A displacement field as a list of terms. Serializes as a JSON array of
/// term objects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DisplacementTerm>", into = "Vec<DisplacementTerm>")]
pub struct DisplacementSpec {
    terms: Vec<DisplacementTerm>,
}

impl TryFrom<Vec<DisplacementTerm>> for DisplacementSpec {
    type Error = Error;
    fn try_from(terms: Vec<DisplacementTerm>) -> Result<Self> {
        for t in &terms {
            t.validate()?;
        }
        Ok(DisplacementSpec { terms })
    }
}

impl From<DisplacementSpec> for Vec<DisplacementTerm> {
    fn from(s: DisplacementSpec) -> Self {
        s.terms
    }
}

impl DisplacementSpec {
    pub fn new(terms: Vec<DisplacementTerm>) -> Result<Self> {
        Self::try_from(terms)
    }

    /// The zero field: the identity transformation.
    pub fn zero() -> Self {
        DisplacementSpec { terms: Vec::new() }
    }

    /// Spatially uniform displacement along one axis with the given time
    /// factor.
    pub fn uniform(component: u8, coeff: f64, time: TimeFactor) -> Result<Self> {
        Self::new(vec![DisplacementTerm {
            component,
            coeff,
            px: 0,
            py: 0,
            pz: 0,
            time,
        }])
    }

    pub fn terms(&self) -> &[DisplacementTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == 0.0)
    }

    /// Evaluate `u` and every derivative the transformation machinery needs,
    /// all in closed form.
    pub fn eval(&self, x: &SpaceTimePoint, frame: Frame) -> DisplacementDerivs {
        let t = x.t(frame);
        let mut out = DisplacementDerivs::zero();
        for term in &self.terms {
            let a = (term.component - 1) as usize;
            let (tau, tau_d, tau_dd) = term.time.eval(t);
            let pows = [term.px, term.py, term.pz];
            // Per-axis monomial value and first two derivatives.
            let mut v = [0.0; 3];
            let mut d1 = [0.0; 3];
            let mut d2 = [0.0; 3];
            for ax in 0..3 {
                let (xv, p) = (x.r[ax], pows[ax]);
                v[ax] = powi(xv, p);
                d1[ax] = if p == 0 { 0.0 } else { p as f64 * powi(xv, p - 1) };
                d2[ax] = if p < 2 {
                    0.0
                } else {
                    (p * (p - 1)) as f64 * powi(xv, p - 2)
                };
            }
            let m = v[0] * v[1] * v[2];
            let gm = [
                d1[0] * v[1] * v[2],
                v[0] * d1[1] * v[2],
                v[0] * v[1] * d1[2],
            ];
            let c = term.coeff;
            out.u[a] += c * tau * m;
            out.u_dot[a] += c * tau_d * m;
            out.u_ddot[a] += c * tau_dd * m;
            for b in 0..3 {
                out.grad_u[(a, b)] += c * tau * gm[b];
                out.grad_u_dot[(a, b)] += c * tau_d * gm[b];
            }
            for l in 0..3 {
                for s in l..3 {
                    let h = if l == s {
                        match l {
                            0 => d2[0] * v[1] * v[2],
                            1 => v[0] * d2[1] * v[2],
                            _ => v[0] * v[1] * d2[2],
                        }
                    } else {
                        // Mixed derivative: product of the two first
                        // derivatives with the remaining axis value.
                        let rem = 3 - l - s;
                        let mut f = 1.0;
                        for ax in 0..3 {
                            f *= if ax == rem {
                                v[ax]
                            } else {
                                d1[ax]
                            };
                        }
                        f
                    };
                    out.hess_u[a][(l, s)] += c * tau * h;
                    if l != s {
                        out.hess_u[a][(s, l)] += c * tau * h;
                    }
                }
            }
        }
        out
    }
}

fn powi(x: f64, p: u32) -> f64 {
    x.powi(p as i32)
}

/// Displacement value and derivatives at one event.
///
/// Index layout: `grad_u[(a, b)] = d u_a / d x_b`, `hess_u[a][(l, s)] =
/// d^2 u_a / (d x_l d x_s)` (stored symmetric), dots are derivatives in
/// coordinate time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementDerivs {
    pub u: Vector3<f64>,
    pub u_dot: Vector3<f64>,
    pub u_ddot: Vector3<f64>,
    pub grad_u: Matrix3<f64>,
    pub grad_u_dot: Matrix3<f64>,
    pub hess_u: [Matrix3<f64>; 3],
}

impl DisplacementDerivs {
    pub fn zero() -> Self {
        DisplacementDerivs {
            u: Vector3::zeros(),
            u_dot: Vector3::zeros(),
            u_ddot: Vector3::zeros(),
            grad_u: Matrix3::zeros(),
            grad_u_dot: Matrix3::zeros(),
            hess_u: [Matrix3::zeros(); 3],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_spec() -> DisplacementSpec {
        DisplacementSpec::new(vec![
            DisplacementTerm {
                component: 1,
                coeff: 0.13,
                px: 2,
                py: 1,
                pz: 0,
                time: TimeFactor::Sin {
                    omega: 1.7,
                    phase: 0.3,
                },
            },
            DisplacementTerm {
                component: 2,
                coeff: -0.07,
                px: 0,
                py: 0,
                pz: 3,
                time: TimeFactor::T2,
            },
            DisplacementTerm {
                component: 3,
                coeff: 0.05,
                px: 1,
                py: 1,
                pz: 1,
                time: TimeFactor::Cos {
                    omega: 0.9,
                    phase: -0.2,
                },
            },
            DisplacementTerm {
                component: 1,
                coeff: 0.02,
                px: 0,
                py: 0,
                pz: 0,
                time: TimeFactor::T,
            },
        ])
        .unwrap()
    }

    fn u_only(spec: &DisplacementSpec, x: &SpaceTimePoint, frame: Frame) -> Vector3<f64> {
        spec.eval(x, frame).u
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let spec = sample_spec();
        let frame = Frame::default();
        let x = SpaceTimePoint::new(0.37, 0.21, -0.45, 0.62);
        let d = spec.eval(&x, frame);
        let h = 1e-5;

        // Spatial gradient and Hessian against central differences of u.
        for b in 0..3 {
            let xp = x.with_component(b + 1, x.component(b + 1) + h);
            let xm = x.with_component(b + 1, x.component(b + 1) - h);
            let fd = (u_only(&spec, &xp, frame) - u_only(&spec, &xm, frame)) / (2.0 * h);
            for a in 0..3 {
                assert_relative_eq!(d.grad_u[(a, b)], fd[a], epsilon = 1e-8, max_relative = 1e-6);
            }
            let gp = spec.eval(&xp, frame).grad_u;
            let gm = spec.eval(&xm, frame).grad_u;
            for a in 0..3 {
                for l in 0..3 {
                    let fd2 = (gp[(a, l)] - gm[(a, l)]) / (2.0 * h);
                    assert_relative_eq!(
                        d.hess_u[a][(l, b)],
                        fd2,
                        epsilon = 1e-7,
                        max_relative = 1e-5
                    );
                }
            }
        }

        // Time derivatives.
        let tp = SpaceTimePoint { x0: x.x0 + h, ..x };
        let tm = SpaceTimePoint { x0: x.x0 - h, ..x };
        let fd_t = (u_only(&spec, &tp, frame) - u_only(&spec, &tm, frame)) / (2.0 * h);
        let fd_tt = (u_only(&spec, &tp, frame) - 2.0 * d.u + u_only(&spec, &tm, frame)) / (h * h);
        for a in 0..3 {
            assert_relative_eq!(d.u_dot[a], fd_t[a], epsilon = 1e-8, max_relative = 1e-6);
            assert_relative_eq!(d.u_ddot[a], fd_tt[a], epsilon = 1e-4, max_relative = 1e-4);
        }
        let gp = spec.eval(&tp, frame).grad_u;
        let gm = spec.eval(&tm, frame).grad_u;
        for a in 0..3 {
            for b in 0..3 {
                let fd = (gp[(a, b)] - gm[(a, b)]) / (2.0 * h);
                assert_relative_eq!(
                    d.grad_u_dot[(a, b)],
                    fd,
                    epsilon = 1e-8,
                    max_relative = 1e-6
                );
            }
        }
    }

    #[test]
    fn hessian_is_symmetric() {
        let spec = sample_spec();
        let d = spec.eval(&SpaceTimePoint::new(1.1, 0.4, 0.5, -0.3), Frame::default());
        for a in 0..3 {
            assert_eq!(d.hess_u[a], d.hess_u[a].transpose());
        }
    }

    #[test]
    fn time_scaling_respects_c() {
        // With c = 2, x^0 = 3 means t = 1.5.
        let spec = DisplacementSpec::uniform(1, 1.0, TimeFactor::T2).unwrap();
        let frame = Frame::with_c(2.0);
        let d = spec.eval(&SpaceTimePoint::new(3.0, 0.0, 0.0, 0.0), frame);
        assert_eq!(d.u[0], 2.25);
        assert_eq!(d.u_dot[0], 3.0);
        assert_eq!(d.u_ddot[0], 2.0);
    }

    #[test]
    fn json_round_trip_matches_wire_format() {
        let spec = DisplacementSpec::new(vec![DisplacementTerm {
            component: 1,
            coeff: 0.1,
            px: 0,
            py: 1,
            pz: 0,
            time: TimeFactor::Sin {
                omega: 2.0,
                phase: 0.0,
            },
        }])
        .unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            json,
            r#"[{"component":1,"coeff":0.1,"px":0,"py":1,"pz":0,"time":{"kind":"sin","omega":2.0,"phase":0.0}}]"#
        );
        let back: DisplacementSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn invalid_component_rejected() {
        let r: std::result::Result<DisplacementSpec, _> =
            serde_json::from_str(r#"[{"component":4,"coeff":0.1,"px":0,"py":0,"pz":0,"time":{"kind":"const"}}]"#);
        assert!(r.is_err());
    }
}
