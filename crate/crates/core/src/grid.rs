//! Collocated grids, field sampling, and residual bookkeeping.
//!
//! Residual sweeps sample a field once per node into a flat array and then
//! apply second-order central differences to the stored values. Convergence
//! orders come from repeating the sweep on a uniformly refined grid (every
//! axis step halved) and comparing norms.

use crate::spacetime::{Frame, SpaceTimePoint};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One uniformly spaced axis with `n` nodes including both endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        Axis { min, max, n }
    }

    pub fn step(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.max - self.min) / (self.n - 1) as f64
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        self.min + self.step() * i as f64
    }

    /// Halve the step: `n -> 2n - 1`.
    pub fn refined(&self) -> Axis {
        Axis {
            n: 2 * self.n - 1,
            ..*self
        }
    }

    pub fn require_nodes(&self, name: &str, min_nodes: usize) -> Result<()> {
        if self.n < min_nodes {
            Err(Error::DomainTooSmall {
                axis: name.to_string(),
                n: self.n,
            })
        } else if !(self.max > self.min) {
            Err(Error::InvalidSpec(format!(
                "axis `{name}` has empty extent [{}, {}]",
                self.min, self.max
            )))
        } else {
            Ok(())
        }
    }
}

/// Four-axis grid over `(t, x, y, z)` in coordinate time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid4 {
    pub t: Axis,
    pub x: Axis,
    pub y: Axis,
    pub z: Axis,
}

pub const AXIS_NAMES: [&str; 4] = ["t", "x", "y", "z"];

impl Grid4 {
    pub fn new(t: Axis, x: Axis, y: Axis, z: Axis) -> Self {
        Grid4 { t, x, y, z }
    }

    pub fn axes(&self) -> [Axis; 4] {
        [self.t, self.x, self.y, self.z]
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.t.n, self.x.n, self.y.n, self.z.n]
    }

    pub fn node_count(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn flat(&self, idx: [usize; 4]) -> usize {
        let s = self.shape();
        ((idx[0] * s[1] + idx[1]) * s[2] + idx[2]) * s[3] + idx[3]
    }

    pub fn unflat(&self, mut flat: usize) -> [usize; 4] {
        let s = self.shape();
        let iz = flat % s[3];
        flat /= s[3];
        let iy = flat % s[2];
        flat /= s[2];
        let ix = flat % s[1];
        flat /= s[1];
        [flat, ix, iy, iz]
    }

    /// Event at a node; the time axis carries coordinate time `t`.
    pub fn point(&self, idx: [usize; 4], frame: Frame) -> SpaceTimePoint {
        SpaceTimePoint::from_txyz(
            self.t.node(idx[0]),
            self.x.node(idx[1]),
            self.y.node(idx[2]),
            self.z.node(idx[3]),
            frame,
        )
    }

    pub fn refined(&self) -> Grid4 {
        Grid4 {
            t: self.t.refined(),
            x: self.x.refined(),
            y: self.y.refined(),
            z: self.z.refined(),
        }
    }

    pub fn validate(&self, min_nodes: usize) -> Result<()> {
        for (axis, name) in self.axes().iter().zip(AXIS_NAMES) {
            axis.require_nodes(name, min_nodes)?;
        }
        Ok(())
    }

    /// All interior multi-indices (one node in from every face).
    pub fn interior(&self) -> Vec<[usize; 4]> {
        self.interior_margin(1)
    }

    /// Interior multi-indices at least `m` nodes in from every face. A
    /// refined grid measured with margin `2m` covers exactly the same
    /// physical region as the parent with margin `m`, which keeps two-level
    /// order estimates free of boundary-layer bias.
    pub fn interior_margin(&self, m: usize) -> Vec<[usize; 4]> {
        let s = self.shape();
        let mut out = Vec::with_capacity(
            s.iter()
                .map(|n| n.saturating_sub(2 * m))
                .product::<usize>(),
        );
        for it in m..s[0] - m {
            for ix in m..s[1] - m {
                for iy in m..s[2] - m {
                    for iz in m..s[3] - m {
                        out.push([it, ix, iy, iz]);
                    }
                }
            }
        }
        out
    }
}

/// Field values sampled on a [`Grid4`], `channels` scalars per node, flat
/// node-major layout.
#[derive(Clone, Debug)]
pub struct SampledField {
    pub grid: Grid4,
    pub channels: usize,
    pub values: Vec<f64>,
}

impl SampledField {
    /// Evaluate `f` once per node. Evaluation is parallel; the stored layout
    /// and therefore every downstream reduction is deterministic.
    pub fn sample<F>(grid: &Grid4, channels: usize, frame: Frame, f: F) -> Result<SampledField>
    where
        F: Fn(&SpaceTimePoint, &mut [f64]) -> Result<()> + Sync,
    {
        let nodes = grid.node_count();
        let mut values = vec![0.0; nodes * channels];
        values
            .par_chunks_mut(channels)
            .enumerate()
            .try_for_each(|(flat, out)| {
                let p = grid.point(grid.unflat(flat), frame);
                f(&p, out)
            })?;
        Ok(SampledField {
            grid: *grid,
            channels,
            values,
        })
    }

    pub fn value(&self, idx: [usize; 4], ch: usize) -> f64 {
        self.values[self.grid.flat(idx) * self.channels + ch]
    }

    /// Central difference along `axis` (0 = t, 1..=3 spatial) at an interior
    /// node, with respect to the axis coordinate.
    pub fn deriv(&self, idx: [usize; 4], ch: usize, axis: usize) -> f64 {
        let h = self.grid.axes()[axis].step();
        let mut up = idx;
        up[axis] += 1;
        let mut dn = idx;
        dn[axis] -= 1;
        (self.value(up, ch) - self.value(dn, ch)) / (2.0 * h)
    }
}

/// Max and root-mean-square norms of a residual sample.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub max_norm: f64,
    pub l2_norm: f64,
}

impl ResidualNorms {
    pub fn from_values(values: &[f64]) -> Self {
        let mut max = 0.0f64;
        let mut sq = 0.0f64;
        for &v in values {
            max = max.max(v.abs());
            sq += v * v;
        }
        let l2 = if values.is_empty() {
            0.0
        } else {
            (sq / values.len() as f64).sqrt()
        };
        ResidualNorms {
            max_norm: max,
            l2_norm: l2,
        }
    }
}

/// Observed order from norms on a grid and its refinement (step ratio 2).
/// `None` when both levels sit at the round-off floor, i.e. the residual is
/// already converged and no rate is measurable.
pub fn order_estimate(coarse: f64, fine: f64, floor: f64) -> Option<f64> {
    if coarse <= floor && fine <= floor {
        None
    } else if fine <= 0.0 {
        None
    } else {
        Some((coarse / fine).log2())
    }
}

/// Norms and observed order for one scalar equation of a residual system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquationResidual {
    pub equation: String,
    pub max_norm: f64,
    pub l2_norm: f64,
    pub order_max: Option<f64>,
    pub order_l2: Option<f64>,
}

/// Residual verification summary: per-equation norms on the fine grid,
/// observed convergence orders against the coarse grid, and an optional
/// pass/fail verdict filled in by the caller's tolerance policy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualReport {
    pub equations: Vec<EquationResidual>,
    pub max_norm: f64,
    pub l2_norm: f64,
    pub order_estimate: Option<f64>,
    pub grid: Grid4,
    pub pass: Option<bool>,
}

/// Floor below which a residual is treated as converged to round-off.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

/// Assemble a report from matched per-equation norms on two grid levels.
pub fn convergence_report(
    coarse: &[(String, ResidualNorms)],
    fine: &[(String, ResidualNorms)],
    fine_grid: &Grid4,
    floor: f64,
) -> ResidualReport {
    assert_eq!(coarse.len(), fine.len());
    let mut equations = Vec::with_capacity(fine.len());
    let mut worst_max = 0.0f64;
    let mut sq = 0.0;
    let mut order_min: Option<f64> = None;
    for ((name_c, nc), (name_f, nf)) in coarse.iter().zip(fine) {
        assert_eq!(name_c, name_f);
        let order_max = order_estimate(nc.max_norm, nf.max_norm, floor);
        let order_l2 = order_estimate(nc.l2_norm, nf.l2_norm, floor);
        if let Some(o) = order_l2 {
            order_min = Some(order_min.map_or(o, |m: f64| m.min(o)));
        }
        worst_max = worst_max.max(nf.max_norm);
        sq += nf.l2_norm * nf.l2_norm;
        equations.push(EquationResidual {
            equation: name_f.clone(),
            max_norm: nf.max_norm,
            l2_norm: nf.l2_norm,
            order_max,
            order_l2,
        });
    }
    let l2 = if fine.is_empty() {
        0.0
    } else {
        (sq / fine.len() as f64).sqrt()
    };
    ResidualReport {
        equations,
        max_norm: worst_max,
        l2_norm: l2,
        order_estimate: order_min,
        grid: *fine_grid,
        pass: None,
    }
}

impl ResidualReport {
    /// A report passes when every equation either converged to round-off or
    /// shows at least `order_min` on both norms.
    pub fn assess_order(&mut self, order_min: f64) -> bool {
        let ok = self.equations.iter().all(|eq| {
            let max_ok = eq.order_max.map_or(eq.max_norm <= ROUNDOFF_FLOOR, |o| o >= order_min);
            let l2_ok = eq.order_l2.map_or(eq.l2_norm <= ROUNDOFF_FLOOR, |o| o >= order_min);
            max_ok && l2_ok
        });
        self.pass = Some(ok);
        ok
    }

    /// A report passes when the worst max-norm is below `tol`.
    pub fn assess_max_norm(&mut self, tol: f64) -> bool {
        let ok = self.max_norm <= tol;
        self.pass = Some(ok);
        ok
    }
}
