//! Collisionless distribution functions, their transformation under
//! displacement maps, inertial forces, and transport residuals.
//!
//! A seed `f₀(t, r, p)` solving free transport `∂_t f + (p/m)·∇f = 0` maps
//! to
//!
//! ```text
//! f̄(t, r, P) = (det S)² f₀(t, r - u, S P - m u̇)
//! ```
//!
//! which solves transport in the presence of the inertial force of the
//! displacement. The momentum slot applies the forward Jacobian `Λ` to the
//! nonrelativistic four-momentum `(mc, P)`: `Λ^α_k P^k = (S P)_α - m u̇_α`.
//! For spatially uniform `u` this is the exact advected solution
//! `f₀(t, r - u, P - m u̇)`, verified against method-of-characteristics
//! integration.

use crate::displacement::{DisplacementSpec, TimeFactor};
use crate::grid::{
    convergence_report, Axis, Grid4, ResidualNorms, ResidualReport, ROUNDOFF_FLOOR,
};
use crate::kinematics::KinematicsBundle;
use crate::ode::rk4_trajectory;
use crate::quadrature::QuadratureBox;
use crate::spacetime::{Frame, SpaceTimePoint};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Nonrelativistic four-momentum: `p0` is pinned to `mc`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourMomentum {
    pub p0: f64,
    pub p: Vector3<f64>,
}

impl FourMomentum {
    pub fn nonrel(mass: f64, p: Vector3<f64>, frame: Frame) -> Self {
        FourMomentum {
            p0: mass * frame.c,
            p,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p0, self.p.x, self.p.y, self.p.z]
    }
}

/// Axis-aligned momentum quadrature window with per-axis node counts.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MomentumBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub n: [usize; 3],
}

impl MomentumBox {
    /// `center ± span` thermal widths `σ_p = sqrt(mT)`, 32 nodes per axis.
    pub fn thermal(center: Vector3<f64>, mass: f64, temperature: f64, span: f64) -> Self {
        let w = span * (mass * temperature).sqrt();
        MomentumBox {
            lo: [center.x - w, center.y - w, center.z - w],
            hi: [center.x + w, center.y + w, center.z + w],
            n: [32; 3],
        }
    }

    pub fn rule(&self) -> QuadratureBox {
        QuadratureBox::new(
            Vector3::from(self.lo),
            Vector3::from(self.hi),
            self.n,
        )
    }

    pub fn doubled(&self) -> MomentumBox {
        MomentumBox {
            n: [2 * self.n[0], 2 * self.n[1], 2 * self.n[2]],
            ..*self
        }
    }

    /// Grow the window by `margin` on every side, scaling node counts to
    /// preserve node density.
    pub fn widened(&self, margin: f64) -> MomentumBox {
        let mut out = MomentumBox {
            lo: [self.lo[0] - margin, self.lo[1] - margin, self.lo[2] - margin],
            hi: [self.hi[0] + margin, self.hi[1] + margin, self.hi[2] + margin],
            ..*self
        };
        for a in 0..3 {
            let old = self.hi[a] - self.lo[a];
            let new = out.hi[a] - out.lo[a];
            if old > 0.0 && new > old {
                out.n[a] = (self.n[a] as f64 * new / old).ceil() as usize;
            }
        }
        out
    }
}

/// One-particle distribution over phase space, with the quadrature window
/// and species constants needed to take moments. The collision term is
/// identically zero (collisionless scope).
#[derive(Clone)]
pub struct DistributionFn {
    eval: Arc<dyn Fn(&SpaceTimePoint, &Vector3<f64>) -> Result<f64> + Send + Sync>,
    pub mass: f64,
    pub charge: f64,
    pub momentum_box: MomentumBox,
}

impl DistributionFn {
    pub fn new<F>(f: F, mass: f64, charge: f64, momentum_box: MomentumBox) -> Self
    where
        F: Fn(&SpaceTimePoint, &Vector3<f64>) -> Result<f64> + Send + Sync + 'static,
    {
        DistributionFn {
            eval: Arc::new(f),
            mass,
            charge,
            momentum_box,
        }
    }

    pub fn eval(&self, x: &SpaceTimePoint, p: &Vector3<f64>) -> Result<f64> {
        (self.eval)(x, p)
    }

    /// Maxwellian `n (2πmT)^{-3/2} exp(-|p - p̄|²/2mT)`, windowed at ±6
    /// thermal widths.
    pub fn maxwellian(
        density: f64,
        mass: f64,
        temperature: f64,
        drift: Vector3<f64>,
        charge: f64,
    ) -> Self {
        let norm = density / (2.0 * std::f64::consts::PI * mass * temperature).powf(1.5);
        let inv2mt = 1.0 / (2.0 * mass * temperature);
        DistributionFn::new(
            move |_x, p| {
                let d = p - drift;
                Ok(norm * (-d.norm_squared() * inv2mt).exp())
            },
            mass,
            charge,
            MomentumBox::thermal(drift, mass, temperature, 6.0),
        )
    }

    /// Free-streaming Maxwellian with a traveling density wave:
    /// `M(p)·(1 + amp·sin(k(x - pₓ t/m)))`. Solves free transport exactly
    /// while coupling every phase-space direction that matters in 1-D.
    pub fn streaming_wave(
        density: f64,
        mass: f64,
        temperature: f64,
        amp: f64,
        k: f64,
        charge: f64,
    ) -> Self {
        assert!(amp.abs() < 1.0, "wave amplitude must keep f positive");
        let norm = density / (2.0 * std::f64::consts::PI * mass * temperature).powf(1.5);
        let inv2mt = 1.0 / (2.0 * mass * temperature);
        DistributionFn::new(
            move |x, p| {
                let m = norm * (-p.norm_squared() * inv2mt).exp();
                let phase = k * (x.r.x - p.x * x.x0 / mass);
                Ok(m * (1.0 + amp * phase.sin()))
            },
            mass,
            charge,
            MomentumBox::thermal(Vector3::zeros(), mass, temperature, 6.0),
        )
    }
}

/// Spatially-dependent external force `F(r, t)`.
#[derive(Clone)]
pub struct ForceField {
    eval: Arc<dyn Fn(&Vector3<f64>, f64) -> Vector3<f64> + Send + Sync>,
}

impl ForceField {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&Vector3<f64>, f64) -> Vector3<f64> + Send + Sync + 'static,
    {
        ForceField { eval: Arc::new(f) }
    }

    pub fn zero() -> Self {
        ForceField::new(|_, _| Vector3::zeros())
    }

    pub fn constant(f: Vector3<f64>) -> Self {
        ForceField::new(move |_, _| f)
    }

    /// `F(t) = F₀ cos(ωt)`, spatially uniform.
    pub fn harmonic(f0: Vector3<f64>, omega: f64) -> Self {
        ForceField::new(move |_, t| f0 * (omega * t).cos())
    }

    /// The force that a spatially uniform displacement exerts on unit-mass
    /// transport: `F(t) = m ü(t)`.
    pub fn from_uniform_euler(spec: &DisplacementSpec, mass: f64, frame: Frame) -> Result<Self> {
        if spec
            .terms()
            .iter()
            .any(|t| t.px != 0 || t.py != 0 || t.pz != 0)
        {
            return Err(Error::InvalidSpec(
                "displacement must be spatially uniform to act as a plain force field".into(),
            ));
        }
        let spec = spec.clone();
        Ok(ForceField::new(move |_, t| {
            let x = SpaceTimePoint::from_txyz(t, 0.0, 0.0, 0.0, frame);
            mass * spec.eval(&x, frame).u_ddot
        }))
    }

    pub fn eval(&self, r: &Vector3<f64>, t: f64) -> Vector3<f64> {
        (self.eval)(r, t)
    }
}

/// Inertial force four-vector `F^i = -(1/m) Γ^i_{jl} P^j P^l`.
pub fn inertial_force(bundle: &KinematicsBundle, p: &FourMomentum, mass: f64) -> [f64; 4] {
    let c = bundle.christoffel.contract(&p.as_array());
    [
        -c[0] / mass,
        -c[1] / mass,
        -c[2] / mass,
        -c[3] / mass,
    ]
}

/// Push a seed distribution through a displacement map. The result carries
/// the `(det S)²` phase-volume factor and the `Λ`-mapped momentum; its
/// momentum window is the seed's, widened by `momentum_margin` to cover the
/// `m u̇` shift.
pub fn transform_distribution(
    seed: &DistributionFn,
    spec: &DisplacementSpec,
    frame: Frame,
    momentum_margin: f64,
) -> DistributionFn {
    let mass = seed.mass;
    let det_tol = frame.det_tol;
    let inner = seed.clone();
    let spec = spec.clone();
    DistributionFn::new(
        move |x, p| {
            let d = spec.eval(x, frame);
            let s = Matrix3::identity() - d.grad_u;
            let det = s.determinant();
            if det <= det_tol {
                return Err(Error::SingularJacobian { det, tol: det_tol });
            }
            let q = s * p - mass * d.u_dot;
            let shifted = SpaceTimePoint {
                x0: x.x0,
                r: x.r - d.u,
            };
            Ok(det * det * inner.eval(&shifted, &q)?)
        },
        seed.mass,
        seed.charge,
        seed.momentum_box.widened(momentum_margin),
    )
}

/// Seven-axis phase-space grid: `(t, x, y, z)` plus three momentum axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub space: Grid4,
    pub px: Axis,
    pub py: Axis,
    pub pz: Axis,
}

impl PhaseGrid {
    pub fn axes(&self) -> [Axis; 7] {
        let s = self.space.axes();
        [s[0], s[1], s[2], s[3], self.px, self.py, self.pz]
    }

    pub fn shape(&self) -> [usize; 7] {
        let a = self.axes();
        [a[0].n, a[1].n, a[2].n, a[3].n, a[4].n, a[5].n, a[6].n]
    }

    pub fn node_count(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn flat(&self, idx: [usize; 7]) -> usize {
        let s = self.shape();
        let mut f = idx[0];
        for a in 1..7 {
            f = f * s[a] + idx[a];
        }
        f
    }

    pub fn unflat(&self, mut flat: usize) -> [usize; 7] {
        let s = self.shape();
        let mut idx = [0usize; 7];
        for a in (1..7).rev() {
            idx[a] = flat % s[a];
            flat /= s[a];
        }
        idx[0] = flat;
        idx
    }

    pub fn refined(&self) -> PhaseGrid {
        PhaseGrid {
            space: self.space.refined(),
            px: self.px.refined(),
            py: self.py.refined(),
            pz: self.pz.refined(),
        }
    }

    pub fn validate(&self, min_nodes: usize) -> Result<()> {
        self.space.validate(min_nodes)?;
        for (axis, name) in [self.px, self.py, self.pz].iter().zip(["px", "py", "pz"]) {
            axis.require_nodes(name, min_nodes)?;
        }
        Ok(())
    }

    pub fn point(&self, idx: [usize; 7], frame: Frame) -> (SpaceTimePoint, Vector3<f64>) {
        let x = self.space.point([idx[0], idx[1], idx[2], idx[3]], frame);
        let p = Vector3::new(
            self.px.node(idx[4]),
            self.py.node(idx[5]),
            self.pz.node(idx[6]),
        );
        (x, p)
    }

    /// Visit interior nodes at boundary margin `m` in flat order.
    fn for_interior<F: FnMut([usize; 7])>(&self, m: usize, mut visit: F) {
        let s = self.shape();
        let mut idx = [0usize; 7];
        fn rec<F: FnMut([usize; 7])>(
            s: &[usize; 7],
            m: usize,
            a: usize,
            idx: &mut [usize; 7],
            visit: &mut F,
        ) {
            if a == 7 {
                visit(*idx);
                return;
            }
            for i in m..s[a] - m {
                idx[a] = i;
                rec(s, m, a + 1, idx, visit);
            }
        }
        rec(&s, m, 0, &mut idx, &mut visit);
    }
}

/// Distribution values sampled once per phase-space node.
pub struct SampledPhase {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
}

impl SampledPhase {
    pub fn sample(grid: &PhaseGrid, f: &DistributionFn, frame: Frame) -> Result<SampledPhase> {
        let mut values = vec![0.0; grid.node_count()];
        values
            .par_iter_mut()
            .enumerate()
            .try_for_each(|(flat, out)| -> Result<()> {
                let (x, p) = grid.point(grid.unflat(flat), frame);
                *out = f.eval(&x, &p)?;
                Ok(())
            })?;
        Ok(SampledPhase {
            grid: *grid,
            values,
        })
    }

    fn value(&self, idx: [usize; 7]) -> f64 {
        self.values[self.grid.flat(idx)]
    }

    fn deriv(&self, idx: [usize; 7], axis: usize) -> f64 {
        let h = self.grid.axes()[axis].step();
        let mut up = idx;
        up[axis] += 1;
        let mut dn = idx;
        dn[axis] -= 1;
        (self.value(up) - self.value(dn)) / (2.0 * h)
    }
}

fn transport_norms(
    f: &DistributionFn,
    force: &ForceField,
    grid: &PhaseGrid,
    frame: Frame,
    margin: usize,
) -> Result<ResidualNorms> {
    grid.validate(2 * margin + 1)?;
    let sampled = SampledPhase::sample(grid, f, frame)?;
    let mut max = 0.0f64;
    let mut sq = 0.0f64;
    let mut count = 0usize;
    let inv_m = 1.0 / f.mass;
    grid.for_interior(margin, |idx| {
        let (x, p) = grid.point(idx, frame);
        let fv = force.eval(&x.r, x.t(frame));
        let mut r = sampled.deriv(idx, 0); // ∂/∂t axis is coordinate time
        for a in 0..3 {
            r += p[a] * inv_m * sampled.deriv(idx, 1 + a);
            r += fv[a] * sampled.deriv(idx, 4 + a);
        }
        max = max.max(r.abs());
        sq += r * r;
        count += 1;
    });
    Ok(ResidualNorms {
        max_norm: max,
        l2_norm: if count == 0 { 0.0 } else { (sq / count as f64).sqrt() },
    })
}

/// Two-level residual verification of `[∂_t + v·∇ + F·∂_p] f` on a
/// phase-space grid.
pub fn boltzmann_residual_nonrel(
    f: &DistributionFn,
    force: &ForceField,
    grid: &PhaseGrid,
    frame: Frame,
) -> Result<ResidualReport> {
    let name = "collisionless_transport".to_string();
    let coarse = transport_norms(f, force, grid, frame, 1)?;
    let fine_grid = grid.refined();
    let fine = transport_norms(f, force, &fine_grid, frame, 2)?;
    Ok(convergence_report(
        &[(name.clone(), coarse)],
        &[(name, fine)],
        &fine_grid.space,
        ROUNDOFF_FLOOR,
    ))
}

/// Back-trace the characteristic through `(t, r, p)` to `t = 0` with RK4 and
/// evaluate the initial data there. Independent of the transformation
/// machinery; serves as its oracle.
pub fn characteristics_solution<G>(
    initial: G,
    force: &ForceField,
    mass: f64,
    x: &SpaceTimePoint,
    p: &Vector3<f64>,
    frame: Frame,
    steps: usize,
) -> f64
where
    G: Fn(&Vector3<f64>, &Vector3<f64>) -> f64,
{
    let t_end = x.t(frame);
    let rhs = |t: f64, y: &[f64; 6]| {
        let r = Vector3::new(y[0], y[1], y[2]);
        let f = force.eval(&r, t);
        [y[3] / mass, y[4] / mass, y[5] / mass, f.x, f.y, f.z]
    };
    let y0 = [x.r.x, x.r.y, x.r.z, p.x, p.y, p.z];
    let dt = -t_end / steps.max(1) as f64;
    let traj = rk4_trajectory(&rhs, t_end, y0, dt, steps.max(1));
    let (_, yb) = traj[traj.len() - 1];
    initial(
        &Vector3::new(yb[0], yb[1], yb[2]),
        &Vector3::new(yb[3], yb[4], yb[5]),
    )
}

/// Trajectory table produced by [`displacement_from_force`].
#[derive(Clone, Debug)]
pub struct ForcedTrajectories {
    pub times: Vec<f64>,
    /// Per seed trajectory: `(r, v, u)` samples with `u = r - r⁰`.
    pub per_seed: Vec<Vec<(Vector3<f64>, Vector3<f64>, Vector3<f64>)>>,
    /// Worst deviation of `½m|v|² - ∫F·v dt` from its initial value.
    pub energy_drift: f64,
    /// Worst pointwise deviation of the fitted closed form from the
    /// integrated displacement samples.
    pub fit_residual: f64,
}

/// Integrate `m r̈ = F(r, t)` from the initial conditions of undisturbed
/// straight-line trajectories, read off `u_a(t) = r_a(t) - r⁰_a(t)`, and
/// least-squares fit a spatially uniform displacement over the supplied
/// temporal basis.
pub fn displacement_from_force(
    force: &ForceField,
    mass: f64,
    seeds: &[(Vector3<f64>, Vector3<f64>)],
    template: &[TimeFactor],
    t_max: f64,
    steps: usize,
    drift_tol: f64,
) -> Result<(DisplacementSpec, ForcedTrajectories)> {
    assert!(!seeds.is_empty() && !template.is_empty() && steps >= 2);
    let dt = t_max / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|k| dt * k as f64).collect();

    let mut per_seed = Vec::with_capacity(seeds.len());
    let mut energy_drift = 0.0f64;
    for &(r0, v0) in seeds {
        // state: r, v, accumulated work ∫ F·v dt
        let rhs = |t: f64, y: &[f64; 7]| {
            let r = Vector3::new(y[0], y[1], y[2]);
            let v = Vector3::new(y[3], y[4], y[5]);
            let f = force.eval(&r, t);
            [v.x, v.y, v.z, f.x / mass, f.y / mass, f.z / mass, f.dot(&v)]
        };
        let y0 = [r0.x, r0.y, r0.z, v0.x, v0.y, v0.z, 0.0];
        let traj = rk4_trajectory(&rhs, 0.0, y0, dt, steps);
        let e0 = 0.5 * mass * v0.norm_squared();
        let mut rows = Vec::with_capacity(traj.len());
        for (t, y) in &traj {
            let r = Vector3::new(y[0], y[1], y[2]);
            let v = Vector3::new(y[3], y[4], y[5]);
            let undisturbed = r0 + v0 * *t;
            rows.push((r, v, r - undisturbed));
            let invariant = 0.5 * mass * v.norm_squared() - y[6];
            energy_drift = energy_drift.max((invariant - e0).abs());
        }
        per_seed.push(rows);
    }
    if energy_drift > drift_tol {
        return Err(Error::StepSizeTooLarge {
            drift: energy_drift,
            tol: drift_tol,
        });
    }

    // Stack every seed's displacement samples into one least-squares system
    // per component over the temporal basis.
    let rows = times.len() * seeds.len();
    let mut design = DMatrix::zeros(rows, template.len());
    for (k, t) in times.iter().enumerate() {
        for (j, tf) in template.iter().enumerate() {
            let (tau, _, _) = tf.eval(*t);
            for a in 0..seeds.len() {
                design[(a * times.len() + k, j)] = tau;
            }
        }
    }
    let svd = design.clone().svd(true, true);
    let mut terms = Vec::new();
    let mut fit_residual = 0.0f64;
    let mut u_scale = 0.0f64;
    for comp in 0..3 {
        let mut b = DVector::zeros(rows);
        for (a, rows_a) in per_seed.iter().enumerate() {
            for (k, (_, _, u)) in rows_a.iter().enumerate() {
                b[a * times.len() + k] = u[comp];
                u_scale = u_scale.max(u[comp].abs());
            }
        }
        let coeffs = svd.solve(&b, 1e-13).map_err(|e| {
            Error::InvalidSpec(format!("degenerate temporal basis: {e}"))
        })?;
        let misfit = (&design * &coeffs - &b).amax();
        fit_residual = fit_residual.max(misfit);
        for (j, tf) in template.iter().enumerate() {
            if coeffs[j].abs() > 1e-12 * (1.0 + u_scale) {
                terms.push(crate::displacement::DisplacementTerm {
                    component: comp as u8 + 1,
                    coeff: coeffs[j],
                    px: 0,
                    py: 0,
                    pz: 0,
                    time: tf.clone(),
                });
            }
        }
    }
    let spec = DisplacementSpec::new(terms)?;
    Ok((
        spec,
        ForcedTrajectories {
            times,
            per_seed,
            energy_drift,
            fit_residual,
        },
    ))
}

/// Four-current moment `(e/m) ∫ d³p P^i f` with `P⁰ = mc`, evaluated by
/// Gauss-Legendre quadrature over the distribution's momentum window. A
/// doubled-node rule must agree within `qtol` or the result is rejected.
pub fn current_moment(
    f: &DistributionFn,
    x: &SpaceTimePoint,
    frame: Frame,
    qtol: f64,
) -> Result<[f64; 4]> {
    let coarse = moment_once(f, x, frame, &f.momentum_box)?;
    let fine = moment_once(f, x, frame, &f.momentum_box.doubled())?;
    let scale = fine.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let delta = coarse
        .iter()
        .zip(&fine)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale;
    if delta > qtol {
        return Err(Error::QuadratureUnderResolved { delta, tol: qtol });
    }
    Ok(fine)
}

fn moment_once(
    f: &DistributionFn,
    x: &SpaceTimePoint,
    frame: Frame,
    mbox: &MomentumBox,
) -> Result<[f64; 4]> {
    let rule = mbox.rule();
    let em = f.charge / f.mass;
    let mc = f.mass * frame.c;
    let mut err: Option<Error> = None;
    let vals = rule.integrate_many(4, |p, out| {
        if err.is_some() {
            return;
        }
        match f.eval(x, p) {
            Ok(v) => {
                out[0] = em * mc * v;
                out[1] = em * p.x * v;
                out[2] = em * p.y * v;
                out[3] = em * p.z * v;
            }
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok([vals[0], vals[1], vals[2], vals[3]])
}
