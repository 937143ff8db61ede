use super::grid::VelocityGrid;
use crate::geometry::Vec3;

/// Sparse interpolation weights onto grid nodes.
#[derive(Clone, Copy, Debug)]
pub struct Stencil<const K: usize> {
    pub idx: [u32; K],
    pub w: [f64; K],
    pub len: usize,
}

impl<const K: usize> Stencil<K> {
    fn empty() -> Self {
        Self {
            idx: [0; K],
            w: [0.0; K],
            len: 0,
        }
    }

    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.len {
            s += self.w[k] * values[self.idx[k] as usize];
        }
        s
    }

    #[inline]
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |k| (self.idx[k] as usize, self.w[k]))
    }
}

/// How trilinear interpolation treats points outside the node hull.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extension {
    /// Constant continuation of the boundary values; weights sum to one.
    Clamp,
    /// Values beyond the grid are zero.
    Zero,
}

#[inline]
fn linear_axis(t: f64, n: usize, ext: Extension) -> [(isize, f64); 2] {
    let last = n as f64 - 1.0;
    match ext {
        Extension::Clamp => {
            if t <= 0.0 {
                [(0, 1.0), (1, 0.0)]
            } else if t >= last {
                [(n as isize - 2, 0.0), (n as isize - 1, 1.0)]
            } else {
                let i = (t.floor() as isize).min(n as isize - 2);
                let f = t - i as f64;
                [(i, 1.0 - f), (i + 1, f)]
            }
        }
        Extension::Zero => {
            let i = t.floor() as isize;
            let f = t - i as f64;
            let keep = |j: isize, w: f64| {
                if j >= 0 && j < n as isize {
                    (j, w)
                } else {
                    (0, 0.0)
                }
            };
            [keep(i, 1.0 - f), keep(i + 1, f)]
        }
    }
}

impl VelocityGrid {
    /// Trilinear weights; nonnegative in both extension modes.
    #[inline]
    pub fn trilinear(&self, v: &Vec3, ext: Extension) -> Stencil<8> {
        let n = self.points_per_axis();
        let t = self.fractional_index(v);
        let a = linear_axis(t[0], n, ext);
        let b = linear_axis(t[1], n, ext);
        let c = linear_axis(t[2], n, ext);
        let mut s = Stencil::<8>::empty();
        for &(i, wi) in &a {
            if wi == 0.0 {
                continue;
            }
            for &(j, wj) in &b {
                if wj == 0.0 {
                    continue;
                }
                let wij = wi * wj;
                for &(k, wk) in &c {
                    if wk == 0.0 {
                        continue;
                    }
                    s.idx[s.len] = self.index(i as usize, j as usize, k as usize) as u32;
                    s.w[s.len] = wij * wk;
                    s.len += 1;
                }
            }
        }
        s
    }

    /// Triquadratic Lagrange weights on the three nodes nearest along each
    /// axis. Reproduces quadratic polynomials exactly, also when
    /// extrapolating beyond the node hull.
    #[inline]
    pub fn triquadratic(&self, v: &Vec3) -> Stencil<27> {
        let n = self.points_per_axis() as isize;
        let t = self.fractional_index(v);
        let axis = |t: f64| -> [(usize, f64); 3] {
            let c = (t.round() as isize).clamp(1, n - 2);
            let s = t - c as f64;
            [
                ((c - 1) as usize, 0.5 * s * (s - 1.0)),
                (c as usize, 1.0 - s * s),
                ((c + 1) as usize, 0.5 * s * (s + 1.0)),
            ]
        };
        let (a, b, c) = (axis(t[0]), axis(t[1]), axis(t[2]));
        let mut s = Stencil::<27>::empty();
        for &(i, wi) in &a {
            for &(j, wj) in &b {
                for &(k, wk) in &c {
                    s.idx[s.len] = self.index(i, j, k) as u32;
                    s.w[s.len] = wi * wj * wk;
                    s.len += 1;
                }
            }
        }
        s
    }
}
