//! Spacetime points, frame conventions, and permutation symbols.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Unit conventions and admissibility settings shared by every operation.
///
/// `c` is the speed of light in code units; `x^0 = c t` throughout. `det_tol`
/// is the admissibility gate: spatial Jacobians with determinant below it are
/// rejected as singular.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub c: f64,
    pub det_tol: f64,
}

impl Default for Frame {
    fn default() -> Self {
        Frame {
            c: 1.0,
            det_tol: 1e-8,
        }
    }
}

impl Frame {
    pub fn with_c(c: f64) -> Self {
        Frame {
            c,
            ..Frame::default()
        }
    }
}

/// Event coordinates `(x^0, x, y, z)` with `x^0 = c t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceTimePoint {
    pub x0: f64,
    pub r: Vector3<f64>,
}

impl SpaceTimePoint {
    pub fn new(x0: f64, x: f64, y: f64, z: f64) -> Self {
        SpaceTimePoint {
            x0,
            r: Vector3::new(x, y, z),
        }
    }

    /// Build from coordinate time `t`; `x^0 = c t`.
    pub fn from_txyz(t: f64, x: f64, y: f64, z: f64, frame: Frame) -> Self {
        SpaceTimePoint {
            x0: frame.c * t,
            r: Vector3::new(x, y, z),
        }
    }

    /// Coordinate time `t = x^0 / c`.
    pub fn t(&self, frame: Frame) -> f64 {
        self.x0 / frame.c
    }

    /// Component by flat index: 0 is `x^0`, 1..=3 the spatial components.
    pub fn component(&self, i: usize) -> f64 {
        match i {
            0 => self.x0,
            1..=3 => self.r[i - 1],
            _ => panic!("spacetime index out of range: {i}"),
        }
    }

    pub fn with_component(mut self, i: usize, v: f64) -> Self {
        match i {
            0 => self.x0 = v,
            1..=3 => self.r[i - 1] = v,
            _ => panic!("spacetime index out of range: {i}"),
        }
        self
    }
}

/// Three-index permutation symbol `e_{abc}` with `e_{123} = +1` for zero-based
/// arguments `(0,1,2)`.
pub fn eps3(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Four-index permutation symbol with upper indices, `e^{0123} = +1`.
/// The lower-index symbol in signature `(+,-,-,-)` is `e_{ijkl} = -e^{ijkl}`.
pub fn eps4_upper(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let idx = [i, j, k, l];
    for v in idx {
        debug_assert!(v < 4);
    }
    // Parity of the permutation, zero if any index repeats.
    let mut sign = 1.0;
    let mut a = idx;
    for pass in 0..4 {
        for q in 0..3 - pass {
            if a[q] == a[q + 1] {
                return 0.0;
            }
            if a[q] > a[q + 1] {
                a.swap(q, q + 1);
                sign = -sign;
            }
        }
    }
    if a == [0, 1, 2, 3] {
        sign
    } else {
        0.0
    }
}

pub fn eps4_lower(i: usize, j: usize, k: usize, l: usize) -> f64 {
    -eps4_upper(i, j, k, l)
}

/// Metric factor for raising/lowering a single index in `(+,-,-,-)`.
pub fn eta(i: usize) -> f64 {
    if i == 0 {
        1.0
    } else {
        -1.0
    }
}
