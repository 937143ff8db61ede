use crate::fields::global_maxwellian;
use crate::geometry::Vec3;

use super::CollisionError;

/// Cell-centred uniform grid on `[−R_v, R_v]³`, symmetric under `v → −v`.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityGrid {
    cutoff: f64,
    n: usize,
    h: f64,
    nodes: Vec<Vec3>,
}

impl VelocityGrid {
    pub fn new(cutoff: f64, n: usize) -> Result<Self, CollisionError> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(CollisionError::InvalidGrid(format!(
                "velocity cutoff must be positive, got {cutoff}"
            )));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(CollisionError::InvalidGrid(format!(
                "points per axis must be even and at least 4, got {n}"
            )));
        }
        let h = 2.0 * cutoff / n as f64;
        let coord = |i: usize| -cutoff + (i as f64 + 0.5) * h;
        let mut nodes = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    nodes.push(Vec3::new(coord(i), coord(j), coord(k)));
                }
            }
        }
        Ok(Self {
            cutoff,
            n,
            h,
            nodes,
        })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Vec3 {
        self.nodes[i]
    }

    /// Quadrature weight of every node.
    pub fn weight(&self) -> f64 {
        self.h * self.h * self.h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn axis_indices(&self, idx: usize) -> [usize; 3] {
        [
            idx / (self.n * self.n),
            (idx / self.n) % self.n,
            idx % self.n,
        ]
    }

    /// Index of the node `−v_idx`.
    pub fn mirror(&self, idx: usize) -> usize {
        let [i, j, k] = self.axis_indices(idx);
        self.index(self.n - 1 - i, self.n - 1 - j, self.n - 1 - k)
    }

    /// Index after flipping the sign of the components selected by `mask`.
    pub fn reflect(&self, idx: usize, mask: u8) -> usize {
        let mut a = self.axis_indices(idx);
        for (d, ad) in a.iter_mut().enumerate() {
            if mask & (1 << d) != 0 {
                *ad = self.n - 1 - *ad;
            }
        }
        self.index(a[0], a[1], a[2])
    }

    /// Continuous index coordinate of `v` along each axis (node `i` at `i`).
    #[inline]
    pub fn fractional_index(&self, v: &Vec3) -> [f64; 3] {
        let s = 1.0 / self.h;
        [
            (v[0] + self.cutoff) * s - 0.5,
            (v[1] + self.cutoff) * s - 0.5,
            (v[2] + self.cutoff) * s - 0.5,
        ]
    }

    pub fn maxwellian(&self) -> Vec<f64> {
        self.nodes.iter().map(global_maxwellian).collect()
    }

    pub fn sqrt_maxwellian(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|v| (-0.25 * v.norm_squared()).exp())
            .collect()
    }

    /// `Σ_i w_i g(v_i)`.
    pub fn integrate<F: Fn(&Vec3) -> f64>(&self, g: F) -> f64 {
        self.nodes.iter().map(g).sum::<f64>() * self.weight()
    }

    /// Grid inner product `Σ_i w_i a_i b_i`.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * self.weight()
    }
}
