//! Transformation kinematics: Jacobians, metrics, and connection coefficients.
//!
//! For the displacement map `X' = X - U(X)` with `U^0 = 0` the forward
//! Jacobian has the block form
//!
//! ```text
//! L^0_0 = 1      L^0_a = 0
//! L^a_0 = -u'_a / c              (u' = du/dt)
//! L^a_b = S_ab = delta_ab - d_b u_a
//! ```
//!
//! and its inverse replaces `S` by `S^-1` with `Lt^a_0 = (u'_b / c) S^-1_ab`.
//! The induced metric in the new coordinates follows from the flat seed
//! metric `diag(1,-1,-1,-1)`; the only nonzero connection blocks are
//!
//! ```text
//! G^a_00 = -(u''_v / c^2) S^-1_av
//! G^a_0b = -(d_b u'_v / c) S^-1_av
//! G^a_ls = -(d_l d_s u_v)  S^-1_av
//! ```
//!
//! Two quantities also admit closed divergence forms, which downstream
//! modules use to organize sources into polarization-type terms:
//!
//! ```text
//! det S         = 1 - d_l a_l
//! det S * S^-1  = delta - d_v b_vab
//! ```
//!
//! with `a` and `b` assembled from `u`, its gradient, and the quadratic
//! symbol `sigma_ab = 1/2 e_amn e_brl (d_m u_r)(d_n u_l)`. Both forms are
//! implemented verbatim and are cross-checked against the direct determinant
//! and cofactor routes in the test suite; they are algebraically equal, so
//! any disagreement beyond rounding indicates a defect.
//!
//! Time-independent spatial maps `r' = W(r)` use the same bundle layout with
//! `S` replaced by `M_ab = d_b W_a` and a dense connection fallback.

use crate::displacement::{DisplacementDerivs, DisplacementSpec};
use crate::spacetime::{eps3, Frame, SpaceTimePoint};
use crate::transform::{GeneralTransformSpec, SpatialMapSpec};
use crate::{Error, Result};
use nalgebra::{Matrix3, Matrix4, Vector3};

/// Connection coefficients `G^i_jl`, symmetric in the lower pair.
#[derive(Clone, Debug)]
pub enum Christoffel {
    /// Sparse layout for displacement maps: only the listed spatial-row
    /// blocks are nonzero.
    Euler {
        /// `G^a_00`.
        time_time: Vector3<f64>,
        /// `G^a_0b`, row `a`, column `b`.
        time_space: Matrix3<f64>,
        /// `G^a_ls` for each upper index `a`.
        space_space: [Matrix3<f64>; 3],
    },
    /// Dense fallback `[i][j][l]` for spatial maps.
    Dense(Box<[[[f64; 4]; 4]; 4]>),
}

impl Christoffel {
    pub fn component(&self, i: usize, j: usize, l: usize) -> f64 {
        match self {
            Christoffel::Euler {
                time_time,
                time_space,
                space_space,
            } => {
                if i == 0 {
                    0.0
                } else {
                    let a = i - 1;
                    match (j, l) {
                        (0, 0) => time_time[a],
                        (0, b) => time_space[(a, b - 1)],
                        (b, 0) => time_space[(a, b - 1)],
                        (b, s) => space_space[a][(b - 1, s - 1)],
                    }
                }
            }
            Christoffel::Dense(g) => g[i][j][l],
        }
    }

    /// `sum_jl G^i_jl p^j p^l` for all four upper indices.
    pub fn contract(&self, p: &[f64; 4]) -> [f64; 4] {
        match self {
            Christoffel::Euler {
                time_time,
                time_space,
                space_space,
            } => {
                let mut out = [0.0; 4];
                let ps = Vector3::new(p[1], p[2], p[3]);
                for a in 0..3 {
                    let mut acc = time_time[a] * p[0] * p[0];
                    for b in 0..3 {
                        acc += 2.0 * time_space[(a, b)] * p[0] * ps[b];
                    }
                    acc += (ps.transpose() * space_space[a] * ps)[(0, 0)];
                    out[a + 1] = acc;
                }
                out
            }
            Christoffel::Dense(g) => {
                let mut out = [0.0; 4];
                for (i, gi) in g.iter().enumerate() {
                    let mut acc = 0.0;
                    for (j, gij) in gi.iter().enumerate() {
                        for (l, v) in gij.iter().enumerate() {
                            acc += v * p[j] * p[l];
                        }
                    }
                    out[i] = acc;
                }
                out
            }
        }
    }
}

/// Everything a transformation law needs at one event.
#[derive(Clone, Debug)]
pub struct KinematicsBundle {
    /// Forward Jacobian `L^i_j = dX'^i / dX^j`, row `i`, column `j`.
    pub lambda: Matrix4<f64>,
    /// Inverse Jacobian.
    pub lambda_inv: Matrix4<f64>,
    /// Volume factor; equals the determinant of the spatial block.
    pub sqrt_minus_g: f64,
    /// Covariant induced metric `g_ij`.
    pub g_cov: Matrix4<f64>,
    /// Contravariant induced metric `g^ij`.
    pub g_contra: Matrix4<f64>,
    pub christoffel: Christoffel,
    /// Spatial block of `lambda` (`S` for displacement maps, `M` for spatial
    /// maps).
    pub s_matrix: Matrix3<f64>,
    pub s_inv: Matrix3<f64>,
}

/// Intermediate fields of the divergence-form expansions.
#[derive(Clone, Debug)]
pub struct AuxExpansionFields {
    /// `a_l` with `det S = 1 - d_l a_l`.
    pub a_vec: Vector3<f64>,
    /// Quadratic symbol `sigma_ab`.
    pub sigma: Matrix3<f64>,
    /// `b_vab` indexed `[v][(a, b)]`, with `det S * S^-1_ab = delta_ab - d_v b_vab`.
    pub b_tensor: [Matrix3<f64>; 3],
}

fn invert_spatial(s: &Matrix3<f64>, tol: f64) -> Result<(f64, Matrix3<f64>)> {
    let det = s.determinant();
    if !(det > tol) {
        return Err(Error::SingularJacobian { det, tol });
    }
    let inv = s
        .try_inverse()
        .ok_or(Error::SingularJacobian { det, tol })?;
    Ok((det, inv))
}

/// Assemble the full kinematic bundle of the displacement map at `x`.
pub fn euler_kinematics(
    spec: &DisplacementSpec,
    x: &SpaceTimePoint,
    frame: Frame,
) -> Result<KinematicsBundle> {
    let d = spec.eval(x, frame);
    bundle_from_derivs(&d, frame)
}

/// Same as [`euler_kinematics`] but reusing already-evaluated derivatives.
pub fn bundle_from_derivs(d: &DisplacementDerivs, frame: Frame) -> Result<KinematicsBundle> {
    let c = frame.c;
    let s = Matrix3::identity() - d.grad_u;
    let (det, s_inv) = invert_spatial(&s, frame.det_tol)?;

    let u_dot_c = d.u_dot / c;
    let mut lambda = Matrix4::identity();
    let mut lambda_inv = Matrix4::identity();
    let sinv_udot = s_inv * u_dot_c;
    for a in 0..3 {
        lambda[(a + 1, 0)] = -u_dot_c[a];
        lambda_inv[(a + 1, 0)] = sinv_udot[a];
        for b in 0..3 {
            lambda[(a + 1, b + 1)] = s[(a, b)];
            lambda_inv[(a + 1, b + 1)] = s_inv[(a, b)];
        }
    }

    // Covariant metric blocks.
    let mut g_cov = Matrix4::zeros();
    g_cov[(0, 0)] = 1.0 - u_dot_c.dot(&u_dot_c);
    let st_udot = s.transpose() * u_dot_c;
    let sts = s.transpose() * s;
    for a in 0..3 {
        g_cov[(0, a + 1)] = st_udot[a];
        g_cov[(a + 1, 0)] = st_udot[a];
        for b in 0..3 {
            g_cov[(a + 1, b + 1)] = -sts[(a, b)];
        }
    }

    // Contravariant metric blocks.
    let mut g_contra = Matrix4::zeros();
    g_contra[(0, 0)] = 1.0;
    let sst_inv = s_inv * s_inv.transpose();
    for a in 0..3 {
        g_contra[(0, a + 1)] = sinv_udot[a];
        g_contra[(a + 1, 0)] = sinv_udot[a];
        for b in 0..3 {
            g_contra[(a + 1, b + 1)] = -sst_inv[(a, b)] + sinv_udot[a] * sinv_udot[b];
        }
    }

    // Connection blocks.
    let time_time = -(s_inv * d.u_ddot) / (c * c);
    let time_space = -(s_inv * d.grad_u_dot) / c;
    let mut space_space = [Matrix3::zeros(); 3];
    for a in 0..3 {
        let mut m = Matrix3::zeros();
        for v in 0..3 {
            m += s_inv[(a, v)] * d.hess_u[v];
        }
        space_space[a] = -m;
    }

    Ok(KinematicsBundle {
        lambda,
        lambda_inv,
        sqrt_minus_g: det,
        g_cov,
        g_contra,
        christoffel: Christoffel::Euler {
            time_time,
            time_space,
            space_space,
        },
        s_matrix: s,
        s_inv,
    })
}

/// The quadratic symbol `sigma_ab = 1/2 e_amn e_brl G_rm G_ln` with
/// `G_ab = d_b u_a`.
fn sigma_symbol(g: &Matrix3<f64>) -> Matrix3<f64> {
    let mut sigma = Matrix3::zeros();
    for a in 0..3 {
        for b in 0..3 {
            let mut acc = 0.0;
            for m in 0..3 {
                for n in 0..3 {
                    let e1 = eps3(a, m, n);
                    if e1 == 0.0 {
                        continue;
                    }
                    for r in 0..3 {
                        for l in 0..3 {
                            let e2 = eps3(b, r, l);
                            if e2 == 0.0 {
                                continue;
                            }
                            acc += e1 * e2 * g[(r, m)] * g[(l, n)];
                        }
                    }
                }
            }
            sigma[(a, b)] = 0.5 * acc;
        }
    }
    sigma
}

/// Volume factor through the divergence form `1 - d_l a_l`, with the
/// intermediate fields exposed for the polarization construction.
///
/// All derivatives are exact, so the result agrees with `det S` to rounding;
/// the two routes are algebraically identical but numerically independent.
pub fn det_via_expansion(
    spec: &DisplacementSpec,
    x: &SpaceTimePoint,
    frame: Frame,
) -> (f64, AuxExpansionFields) {
    let d = spec.eval(x, frame);
    det_expansion_from_derivs(&d)
}

pub fn det_expansion_from_derivs(d: &DisplacementDerivs) -> (f64, AuxExpansionFields) {
    let g = &d.grad_u;
    let h = &d.hess_u;
    let u = &d.u;
    let tr = g.trace();
    let sigma = sigma_symbol(g);

    // a_l = u_l + 1/2 [ (G u)_l - u_l tr G ] + 1/3 (sigma u)_l
    let a_vec = u + 0.5 * (g * u - u * tr) + (sigma * u) / 3.0;

    // d_l a_l, term by term. The advective pieces cancel pairwise and the
    // divergence of sigma vanishes identically; both are kept as written so
    // this route stays an independent evaluation of the same algebra.
    let mut div = tr;
    let mut quad = 0.0;
    let mut adv = 0.0;
    for l in 0..3 {
        for n in 0..3 {
            quad += g[(n, l)] * g[(l, n)];
            adv += u[n] * h[l][(n, l)] - u[l] * h[n][(l, n)];
        }
    }
    div += 0.5 * (quad - tr * tr + adv);

    let mut sig_term = 0.0;
    for l in 0..3 {
        for n in 0..3 {
            sig_term += sigma[(l, n)] * g[(n, l)];
        }
    }
    // Divergence of sigma contracted with u.
    let mut dsig = 0.0;
    for b in 0..3 {
        let mut acc = 0.0;
        for a in 0..3 {
            for m in 0..3 {
                for n in 0..3 {
                    let e1 = eps3(a, m, n);
                    if e1 == 0.0 {
                        continue;
                    }
                    for r in 0..3 {
                        for l in 0..3 {
                            let e2 = eps3(b, r, l);
                            if e2 == 0.0 {
                                continue;
                            }
                            acc += 0.5
                                * e1
                                * e2
                                * (h[r][(a, m)] * g[(l, n)] + g[(r, m)] * h[l][(a, n)]);
                        }
                    }
                }
            }
        }
        dsig += acc * u[b];
    }
    div += (sig_term + dsig) / 3.0;

    let mut b_tensor = [Matrix3::zeros(); 3];
    for v in 0..3 {
        for a in 0..3 {
            for b in 0..3 {
                let mut t = 0.0;
                if a == b {
                    t += u[v];
                }
                if v == b {
                    t -= u[a];
                }
                let mut quad = 0.0;
                for l in 0..3 {
                    for s in 0..3 {
                        let e1 = eps3(l, b, s);
                        if e1 == 0.0 {
                            continue;
                        }
                        for m in 0..3 {
                            let e2 = eps3(v, a, m);
                            if e2 == 0.0 {
                                continue;
                            }
                            quad += u[l] * e1 * e2 * g[(s, m)];
                        }
                    }
                }
                b_tensor[v][(a, b)] = t - 0.5 * quad;
            }
        }
    }

    (
        1.0 - div,
        AuxExpansionFields {
            a_vec,
            sigma,
            b_tensor,
        },
    )
}

/// Cofactor matrix `det S * S^-1_ab` through its divergence form
/// `delta_ab - d_v b_vab`.
pub fn cofactor_via_expansion(
    spec: &DisplacementSpec,
    x: &SpaceTimePoint,
    frame: Frame,
) -> Matrix3<f64> {
    let d = spec.eval(x, frame);
    cofactor_expansion_from_derivs(&d)
}

pub fn cofactor_expansion_from_derivs(d: &DisplacementDerivs) -> Matrix3<f64> {
    let g = &d.grad_u;
    let h = &d.hess_u;
    let u = &d.u;
    let tr = g.trace();
    let mut out = Matrix3::zeros();
    for a in 0..3 {
        for b in 0..3 {
            // d_v b_vab expanded with exact derivatives. The Hessian piece
            // drops out by symmetry but is evaluated as written.
            let mut div_b = -g[(a, b)];
            if a == b {
                div_b += tr;
            }
            let mut quad = 0.0;
            for l in 0..3 {
                for s in 0..3 {
                    let e1 = eps3(l, b, s);
                    if e1 == 0.0 {
                        continue;
                    }
                    for v in 0..3 {
                        for m in 0..3 {
                            let e2 = eps3(v, a, m);
                            if e2 == 0.0 {
                                continue;
                            }
                            quad += e1 * e2 * (g[(l, v)] * g[(s, m)] + u[l] * h[s][(v, m)]);
                        }
                    }
                }
            }
            div_b -= 0.5 * quad;
            out[(a, b)] = if a == b { 1.0 - div_b } else { -div_b };
        }
    }
    out
}

/// Kinematic bundle for either transformation family.
///
/// Displacement maps delegate to [`euler_kinematics`]; spatial maps build the
/// block-diagonal Jacobian `diag(1, M)` with a dense connection.
pub fn general_jacobian(
    spec: &GeneralTransformSpec,
    x: &SpaceTimePoint,
    frame: Frame,
) -> Result<KinematicsBundle> {
    match spec {
        GeneralTransformSpec::Euler(d) => euler_kinematics(d, x, frame),
        GeneralTransformSpec::SpatialMap(map) => spatial_jacobian(map, &x.r, frame),
    }
}

pub fn spatial_jacobian(
    map: &SpatialMapSpec,
    r: &Vector3<f64>,
    frame: Frame,
) -> Result<KinematicsBundle> {
    let d = map.eval(r);
    let m = d.jac;
    let (det, m_inv) = invert_spatial(&m, frame.det_tol)?;

    let mut lambda = Matrix4::identity();
    let mut lambda_inv = Matrix4::identity();
    for a in 0..3 {
        for b in 0..3 {
            lambda[(a + 1, b + 1)] = m[(a, b)];
            lambda_inv[(a + 1, b + 1)] = m_inv[(a, b)];
        }
    }

    let mut g_cov = Matrix4::zeros();
    let mut g_contra = Matrix4::zeros();
    g_cov[(0, 0)] = 1.0;
    g_contra[(0, 0)] = 1.0;
    let mtm = m.transpose() * m;
    let mmt_inv = m_inv * m_inv.transpose();
    for a in 0..3 {
        for b in 0..3 {
            g_cov[(a + 1, b + 1)] = -mtm[(a, b)];
            g_contra[(a + 1, b + 1)] = -mmt_inv[(a, b)];
        }
    }

    let mut dense = Box::new([[[0.0; 4]; 4]; 4]);
    for a in 0..3 {
        for l in 0..3 {
            for s in 0..3 {
                let mut acc = 0.0;
                for v in 0..3 {
                    acc += m_inv[(a, v)] * d.hess[v][(l, s)];
                }
                dense[a + 1][l + 1][s + 1] = acc;
            }
        }
    }

    Ok(KinematicsBundle {
        lambda,
        lambda_inv,
        sqrt_minus_g: det,
        g_cov,
        g_contra,
        christoffel: Christoffel::Dense(dense),
        s_matrix: m,
        s_inv: m_inv,
    })
}

/// Image `W(X)` of an event under the transformation (`x^0` is untouched).
pub fn map_point(spec: &GeneralTransformSpec, x: &SpaceTimePoint, frame: Frame) -> SpaceTimePoint {
    match spec {
        GeneralTransformSpec::Euler(d) => {
            let u = d.eval(x, frame).u;
            SpaceTimePoint {
                x0: x.x0,
                r: x.r - u,
            }
        }
        GeneralTransformSpec::SpatialMap(map) => SpaceTimePoint {
            x0: x.x0,
            r: map.eval(&x.r).w,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::displacement::{DisplacementTerm, TimeFactor};
    use approx::assert_relative_eq;

    fn term(component: u8, coeff: f64, pows: [u32; 3], time: TimeFactor) -> DisplacementTerm {
        DisplacementTerm {
            component,
            coeff,
            px: pows[0],
            py: pows[1],
            pz: pows[2],
            time,
        }
    }

    #[test]
    fn linear_stretch_bundle_values() {
        // u = (0.25 x, 0, 0): S = diag(0.75, 1, 1).
        let spec =
            DisplacementSpec::new(vec![term(1, 0.25, [1, 0, 0], TimeFactor::Const)]).unwrap();
        let x = SpaceTimePoint::new(0.3, 0.9, -0.2, 0.4);
        let b = euler_kinematics(&spec, &x, Frame::default()).unwrap();
        assert_relative_eq!(b.sqrt_minus_g, 0.75, epsilon = 1e-15);
        assert_relative_eq!(b.lambda[(1, 1)], 0.75, epsilon = 1e-15);
        assert_relative_eq!(b.lambda_inv[(1, 1)], 4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(b.lambda[(0, 0)], 1.0);
        assert_eq!(b.lambda[(1, 0)], 0.0);
    }

    #[test]
    fn pure_shear_preserves_volume() {
        // u = (0.4 y, 0, 0): det S = 1, S^-1 carries +0.4 off-diagonal.
        let spec = DisplacementSpec::new(vec![term(1, 0.4, [0, 1, 0], TimeFactor::Const)]).unwrap();
        let b = euler_kinematics(
            &spec,
            &SpaceTimePoint::new(0.0, 0.1, 0.2, 0.3),
            Frame::default(),
        )
        .unwrap();
        assert_relative_eq!(b.sqrt_minus_g, 1.0, epsilon = 1e-15);
        assert_relative_eq!(b.s_inv[(0, 1)], 0.4, epsilon = 1e-15);
        let (det_exp, _) = det_via_expansion(
            &spec,
            &SpaceTimePoint::new(0.0, 0.1, 0.2, 0.3),
            Frame::default(),
        );
        assert_relative_eq!(det_exp, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn uniform_oscillation_connection_block() {
        // u = (d sin wt, 0, 0): only G^a_00 is nonzero and equals
        // d w^2 sin(wt) / c^2.
        let (d, w) = (0.02, 3.0);
        let spec = DisplacementSpec::uniform(
            1,
            d,
            TimeFactor::Sin {
                omega: w,
                phase: 0.0,
            },
        )
        .unwrap();
        let frame = Frame::with_c(2.0);
        let t = 0.7;
        let x = SpaceTimePoint::from_txyz(t, 0.0, 0.0, 0.0, frame);
        let b = euler_kinematics(&spec, &x, frame).unwrap();
        match &b.christoffel {
            Christoffel::Euler {
                time_time,
                time_space,
                space_space,
            } => {
                assert_relative_eq!(
                    time_time[0],
                    d * w * w * (w * t).sin() / (frame.c * frame.c),
                    epsilon = 1e-15
                );
                assert_eq!(*time_space, Matrix3::zeros());
                for m in space_space {
                    assert_eq!(*m, Matrix3::zeros());
                }
            }
            _ => panic!("expected sparse connection"),
        }
        assert_relative_eq!(b.sqrt_minus_g, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn det_expansion_matches_closed_form_diagonal_case() {
        // u = (a x, b y, 0): div a = a + b - ab, det = (1-a)(1-b).
        let (a, b) = (0.2, 0.1);
        let spec = DisplacementSpec::new(vec![
            term(1, a, [1, 0, 0], TimeFactor::Const),
            term(2, b, [0, 1, 0], TimeFactor::Const),
        ])
        .unwrap();
        let x = SpaceTimePoint::new(0.0, 0.7, -0.3, 0.2);
        let (det, aux) = det_via_expansion(&spec, &x, Frame::default());
        assert_relative_eq!(det, (1.0 - a) * (1.0 - b), epsilon = 1e-15);
        assert_relative_eq!(aux.sigma[(2, 2)], a * b, epsilon = 1e-15);
        assert_relative_eq!(aux.a_vec[0], a * x.r.x - 0.5 * a * b * x.r.x, epsilon = 1e-15);
        assert_relative_eq!(aux.a_vec[1], b * x.r.y - 0.5 * a * b * x.r.y, epsilon = 1e-15);
        assert_eq!(aux.a_vec[2], 0.0);
    }

    #[test]
    fn cofactor_expansion_matches_direct_product() {
        let spec =
            DisplacementSpec::new(vec![term(1, 0.25, [1, 0, 0], TimeFactor::Const)]).unwrap();
        let x = SpaceTimePoint::new(0.0, 0.5, 0.5, 0.5);
        let cof = cofactor_via_expansion(&spec, &x, Frame::default());
        let expected = Matrix3::from_diagonal(&Vector3::new(1.0, 0.75, 0.75));
        assert_relative_eq!((cof - expected).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_inverse_and_metric_inverse_hold() {
        let spec = DisplacementSpec::new(vec![
            term(1, 0.13, [1, 1, 0], TimeFactor::Sin { omega: 2.0, phase: 0.4 }),
            term(2, -0.08, [0, 0, 2], TimeFactor::T),
            term(3, 0.11, [1, 0, 1], TimeFactor::Cos { omega: 1.1, phase: 0.0 }),
        ])
        .unwrap();
        let x = SpaceTimePoint::new(0.83, 0.31, -0.44, 0.57);
        let b = euler_kinematics(&spec, &x, Frame::default()).unwrap();
        let id4 = Matrix4::identity();
        assert!((b.lambda * b.lambda_inv - id4).norm() < 1e-13);
        assert!((b.g_cov * b.g_contra - id4).norm() < 1e-13);
    }

    #[test]
    fn admissibility_gate_rejects_folded_map() {
        // u = (x, 0, 0) collapses the x axis completely.
        let spec = DisplacementSpec::new(vec![term(1, 1.0, [1, 0, 0], TimeFactor::Const)]).unwrap();
        let r = euler_kinematics(
            &spec,
            &SpaceTimePoint::new(0.0, 0.0, 0.0, 0.0),
            Frame::default(),
        );
        assert!(matches!(r, Err(Error::SingularJacobian { .. })));
    }

    #[test]
    fn graded_map_bundle() {
        let map = GeneralTransformSpec::SpatialMap(SpatialMapSpec::GradedZ {
            f: crate::scalar_fn::ScalarFn::linear(2.0),
        });
        let b = general_jacobian(
            &map,
            &SpaceTimePoint::new(0.0, 0.1, 0.2, 0.3),
            Frame::default(),
        )
        .unwrap();
        assert_relative_eq!(b.sqrt_minus_g, 2.0, epsilon = 1e-15);
        assert_relative_eq!(b.s_inv[(2, 2)], 0.5, epsilon = 1e-15);
        assert_eq!(b.christoffel.component(3, 3, 3), 0.0);
        assert_eq!(b.g_cov[(3, 3)], -4.0);
    }

    #[test]
    fn map_point_shifts_by_displacement() {
        let spec = DisplacementSpec::uniform(2, 0.3, TimeFactor::Const).unwrap();
        let t = GeneralTransformSpec::Euler(spec);
        let w = map_point(&t, &SpaceTimePoint::new(1.0, 0.0, 1.0, 0.0), Frame::default());
        assert_eq!(w.x0, 1.0);
        assert_relative_eq!(w.r.y, 0.7, epsilon = 1e-15);
    }
}
