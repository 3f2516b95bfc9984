//! Gauss-Hermite rule for the standard normal distribution.

use std::f64::consts::PI;

/// Nodes and weights with Σ w_k f(ξ_k) ≈ E[f(ξ)], ξ ~ N(0, 1).
#[derive(Clone, Debug, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// `n`-point rule, exact for polynomials of degree below 2n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        // Newton iteration on the orthonormal physicists' Hermite polynomials,
        // then rescale x → √2 x and w → w/√π.
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0] / 2f64.sqrt(),
                3 => 1.91 * z - 0.91 * nodes[1] / 2f64.sqrt(),
                _ => 2.0 * z - nodes[i - 2] / 2f64.sqrt(),
            };
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = hermite_orthonormal(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            let w = 2.0 / (dp * dp) / PI.sqrt();
            nodes[i] = z * 2f64.sqrt();
            nodes[n - 1 - i] = -z * 2f64.sqrt();
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        nodes.reverse();
        weights.reverse();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Value and derivative of the orthonormal physicists' Hermite polynomial of degree `n` at `z`.
fn hermite_orthonormal(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}
