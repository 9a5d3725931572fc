//! Gauss-Legendre quadrature on intervals and 3-D boxes.

use nalgebra::Vector3;

/// Nodes and weights on `[-1, 1]`, computed by Newton iteration on the
/// Legendre recurrence. Exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // Newton seeds walk from +1 down; store ascending.
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights mapped onto `[a, b]`.
pub fn gauss_legendre_on(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|x| mid + half * x).collect(),
        ws.iter().map(|w| half * w).collect(),
    )
}

/// Tensor-product Gauss-Legendre rule over an axis-aligned box in momentum
/// or position space.
#[derive(Clone, Debug)]
pub struct QuadratureBox {
    nodes: [Vec<f64>; 3],
    weights: [Vec<f64>; 3],
}

impl QuadratureBox {
    pub fn new(lo: Vector3<f64>, hi: Vector3<f64>, n: [usize; 3]) -> Self {
        let mut nodes: [Vec<f64>; 3] = Default::default();
        let mut weights: [Vec<f64>; 3] = Default::default();
        for a in 0..3 {
            let (x, w) = gauss_legendre_on(lo[a], hi[a], n[a]);
            nodes[a] = x;
            weights[a] = w;
        }
        QuadratureBox { nodes, weights }
    }

    /// Box covering `mu ± span*sigma` per axis: the usual support window for
    /// near-Gaussian integrands.
    pub fn centered(mu: Vector3<f64>, sigma: f64, span: f64, n: usize) -> Self {
        let half = Vector3::repeat(span * sigma);
        QuadratureBox::new(mu - half, mu + half, [n; 3])
    }

    /// Integrate `k` integrands in one sweep; `f` fills its output slice at
    /// each node.
    pub fn integrate_many<F>(&self, k: usize, mut f: F) -> Vec<f64>
    where
        F: FnMut(&Vector3<f64>, &mut [f64]),
    {
        let mut acc = vec![0.0; k];
        let mut buf = vec![0.0; k];
        for (i, &px) in self.nodes[0].iter().enumerate() {
            for (j, &py) in self.nodes[1].iter().enumerate() {
                for (l, &pz) in self.nodes[2].iter().enumerate() {
                    let w = self.weights[0][i] * self.weights[1][j] * self.weights[2][l];
                    let p = Vector3::new(px, py, pz);
                    buf.iter_mut().for_each(|b| *b = 0.0);
                    f(&p, &mut buf);
                    for (a, b) in acc.iter_mut().zip(&buf) {
                        *a += w * b;
                    }
                }
            }
        }
        acc
    }

    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&Vector3<f64>) -> f64,
    {
        self.integrate_many(1, |p, out| out[0] = f(p))[0]
    }
}
