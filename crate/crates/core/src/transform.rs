//! Transformation specifications: displacement-type maps `X' = X - U(X)` and
//! time-independent spatial maps `r' = W(r)`.

use crate::displacement::DisplacementSpec;
use crate::scalar_fn::ScalarFn;
use crate::{Error, Result};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// One monomial `coeff * x^px y^py z^pz` of a spatial map component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialTerm {
    pub coeff: f64,
    pub px: u32,
    pub py: u32,
    pub pz: u32,
}

/// A time-independent spatial map `r' = W(r)` in closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialMapSpec {
    /// Component-wise monomial sums.
    Monomial { components: [Vec<MonomialTerm>; 3] },
    /// The graded map `(x, y, z) -> (x, y, f(z))`.
    GradedZ { f: ScalarFn },
}

/// Map value, Jacobian, and second derivatives at one point.
///
/// `jac[(a, b)] = d W_a / d x_b`, `hess[a][(l, s)] = d^2 W_a / (d x_l d x_s)`.
#[derive(Clone, Debug)]
pub struct SpatialMapDerivs {
    pub w: Vector3<f64>,
    pub jac: Matrix3<f64>,
    pub hess: [Matrix3<f64>; 3],
}

impl SpatialMapSpec {
    pub fn identity() -> Self {
        SpatialMapSpec::GradedZ {
            f: ScalarFn::identity(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let SpatialMapSpec::Monomial { components } = self {
            for terms in components {
                for t in terms {
                    if !t.coeff.is_finite() {
                        return Err(Error::InvalidSpec(
                            "spatial map coefficient is not finite".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, r: &Vector3<f64>) -> SpatialMapDerivs {
        match self {
            SpatialMapSpec::Monomial { components } => {
                let mut out = SpatialMapDerivs {
                    w: Vector3::zeros(),
                    jac: Matrix3::zeros(),
                    hess: [Matrix3::zeros(); 3],
                };
                for (a, terms) in components.iter().enumerate() {
                    for t in terms {
                        let pows = [t.px, t.py, t.pz];
                        let mut v = [0.0; 3];
                        let mut d1 = [0.0; 3];
                        let mut d2 = [0.0; 3];
                        for ax in 0..3 {
                            let (xv, p) = (r[ax], pows[ax]);
                            v[ax] = xv.powi(p as i32);
                            d1[ax] = if p == 0 {
                                0.0
                            } else {
                                p as f64 * xv.powi(p as i32 - 1)
                            };
                            d2[ax] = if p < 2 {
                                0.0
                            } else {
                                (p * (p - 1)) as f64 * xv.powi(p as i32 - 2)
                            };
                        }
                        out.w[a] += t.coeff * v[0] * v[1] * v[2];
                        let gm = [
                            d1[0] * v[1] * v[2],
                            v[0] * d1[1] * v[2],
                            v[0] * v[1] * d1[2],
                        ];
                        for b in 0..3 {
                            out.jac[(a, b)] += t.coeff * gm[b];
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
                                    let rem = 3 - l - s;
                                    let mut f = 1.0;
                                    for ax in 0..3 {
                                        f *= if ax == rem { v[ax] } else { d1[ax] };
                                    }
                                    f
                                };
                                out.hess[a][(l, s)] += t.coeff * h;
                                if l != s {
                                    out.hess[a][(s, l)] += t.coeff * h;
                                }
                            }
                        }
                    }
                }
                out
            }
            SpatialMapSpec::GradedZ { f } => {
                let (fz, f1, f2) = f.eval(r.z);
                let mut jac = Matrix3::identity();
                jac[(2, 2)] = f1;
                let mut hess = [Matrix3::zeros(); 3];
                hess[2][(2, 2)] = f2;
                SpatialMapDerivs {
                    w: Vector3::new(r.x, r.y, fz),
                    jac,
                    hess,
                }
            }
        }
    }
}

/// Either transformation family accepted by the synthesis operations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneralTransformSpec {
    /// `X' = X - U(X)` with `U^0 = 0`.
    Euler(DisplacementSpec),
    /// `x'^0 = x^0`, `r' = W(r)`.
    SpatialMap(SpatialMapSpec),
}

impl GeneralTransformSpec {
    pub fn identity() -> Self {
        GeneralTransformSpec::Euler(DisplacementSpec::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn monomial_map_derivatives_match_finite_differences() {
        let map = SpatialMapSpec::Monomial {
            components: [
                vec![
                    MonomialTerm {
                        coeff: 1.0,
                        px: 1,
                        py: 0,
                        pz: 0,
                    },
                    MonomialTerm {
                        coeff: 0.2,
                        px: 0,
                        py: 2,
                        pz: 0,
                    },
                ],
                vec![MonomialTerm {
                    coeff: 1.1,
                    px: 0,
                    py: 1,
                    pz: 1,
                }],
                vec![MonomialTerm {
                    coeff: 0.9,
                    px: 0,
                    py: 0,
                    pz: 1,
                }],
            ],
        };
        let r = Vector3::new(0.3, -0.4, 0.7);
        let d = map.eval(&r);
        let h = 1e-5;
        for b in 0..3 {
            let mut rp = r;
            rp[b] += h;
            let mut rm = r;
            rm[b] -= h;
            let fd = (map.eval(&rp).w - map.eval(&rm).w) / (2.0 * h);
            for a in 0..3 {
                assert_relative_eq!(d.jac[(a, b)], fd[a], epsilon = 1e-8, max_relative = 1e-6);
            }
            let jp = map.eval(&rp).jac;
            let jm = map.eval(&rm).jac;
            for a in 0..3 {
                for l in 0..3 {
                    let fd2 = (jp[(a, l)] - jm[(a, l)]) / (2.0 * h);
                    assert_relative_eq!(d.hess[a][(l, b)], fd2, epsilon = 1e-7, max_relative = 1e-5);
                }
            }
        }
    }

    #[test]
    fn graded_z_map_evaluates_f_slot() {
        let map = SpatialMapSpec::GradedZ {
            f: ScalarFn::linear(2.0),
        };
        let d = map.eval(&Vector3::new(0.5, 0.6, 0.7));
        assert_eq!(d.w, Vector3::new(0.5, 0.6, 1.4));
        assert_eq!(d.jac[(2, 2)], 2.0);
        assert_eq!(d.jac[(0, 0)], 1.0);
        assert_eq!(d.hess[2][(2, 2)], 0.0);
    }

    #[test]
    fn spec_json_is_tagged_by_family() {
        let t = GeneralTransformSpec::SpatialMap(SpatialMapSpec::GradedZ {
            f: ScalarFn::linear(2.0),
        });
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.starts_with(r#"{"spatial_map""#), "{json}");
        let back: GeneralTransformSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);

        let e = GeneralTransformSpec::identity();
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, r#"{"euler":[]}"#);
    }
}
