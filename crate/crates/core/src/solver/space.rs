use std::f64::consts::PI;

use super::SolverError;
use crate::collision::Stencil;
use crate::geometry::{LevelSetDomain, Vec3};

/// Subcells per axis used to integrate `Ω` inside each grid cell.
pub const VOLUME_SUBSAMPLES: usize = 8;

/// Cell-centred `n³` grid on the bounding cube, masked by `ξ < 0`.
///
/// Each interior node carries the volume of the part of `Ω` closest to it.
#[derive(Clone, Debug)]
pub struct SpatialGrid {
    n: usize,
    half_width: f64,
    h: f64,
    nodes: Vec<Vec3>,
    cells: Vec<[usize; 3]>,
    lookup: Vec<Option<u32>>,
    weights: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(domain: &LevelSetDomain, n: usize) -> Result<Self, SolverError> {
        if n < 2 {
            return Err(SolverError::InvalidConfig(format!(
                "spatial grid needs at least 2 points per axis, got {n}"
            )));
        }
        let r = domain.bounding_radius();
        let h = 2.0 * r / n as f64;
        let coord = |i: usize| -r + (i as f64 + 0.5) * h;
        let mut nodes = Vec::new();
        let mut cells = Vec::new();
        let mut lookup = vec![None; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x = Vec3::new(coord(i), coord(j), coord(k));
                    if domain.level(&x) < 0.0 {
                        lookup[(i * n + j) * n + k] = Some(nodes.len() as u32);
                        nodes.push(x);
                        cells.push([i, j, k]);
                    }
                }
            }
        }
        if nodes.is_empty() {
            return Err(SolverError::InvalidConfig(
                "no spatial grid node lies inside the domain".into(),
            ));
        }
        let mut grid = Self {
            n,
            half_width: r,
            h,
            nodes,
            cells,
            lookup,
            weights: Vec::new(),
        };
        grid.weights = grid.volume_weights(domain);
        Ok(grid)
    }

    fn volume_weights(&self, domain: &LevelSetDomain) -> Vec<f64> {
        let s = VOLUME_SUBSAMPLES;
        let hs = self.h / s as f64;
        let dv = hs * hs * hs;
        let mut w = vec![0.0; self.nodes.len()];
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for a in 0..s {
                        for b in 0..s {
                            for c in 0..s {
                                let p = Vec3::new(
                                    -self.half_width + i as f64 * self.h + (a as f64 + 0.5) * hs,
                                    -self.half_width + j as f64 * self.h + (b as f64 + 0.5) * hs,
                                    -self.half_width + k as f64 * self.h + (c as f64 + 0.5) * hs,
                                );
                                if domain.level(&p) < 0.0 {
                                    let idx = match self.lookup[(i * n + j) * n + k] {
                                        Some(id) => id as usize,
                                        None => self.nearest(&p),
                                    };
                                    w[idx] += dv;
                                }
                            }
                        }
                    }
                }
            }
        }
        w
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

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Node index of cell `(i, j, k)` when it lies inside `Ω`.
    pub fn node_at(&self, i: usize, j: usize, k: usize) -> Option<usize> {
        self.lookup[(i * self.n + j) * self.n + k].map(|x| x as usize)
    }

    pub fn cell_of(&self, node: usize) -> [usize; 3] {
        self.cells[node]
    }

    /// Nearest interior node, searching outward shell by shell.
    pub fn nearest(&self, x: &Vec3) -> usize {
        let t = self.fractional(x);
        let c = t.map(|ti| (ti.round().max(0.0) as usize).min(self.n - 1));
        let mut best = (f64::INFINITY, 0usize);
        for radius in 0..self.n {
            let lo = |a: usize| a.saturating_sub(radius);
            let hi = |a: usize| (a + radius).min(self.n - 1);
            for i in lo(c[0])..=hi(c[0]) {
                for j in lo(c[1])..=hi(c[1]) {
                    for k in lo(c[2])..=hi(c[2]) {
                        if let Some(id) = self.node_at(i, j, k) {
                            let d = (self.nodes[id] - x).norm_squared();
                            if d < best.0 {
                                best = (d, id);
                            }
                        }
                    }
                }
            }
            // any node outside this shell is at least `radius·h` away
            if best.0.is_finite() && best.0.sqrt() <= radius as f64 * self.h {
                break;
            }
        }
        best.1
    }

    #[inline]
    fn fractional(&self, x: &Vec3) -> [f64; 3] {
        let s = 1.0 / self.h;
        [
            (x[0] + self.half_width) * s - 0.5,
            (x[1] + self.half_width) * s - 0.5,
            (x[2] + self.half_width) * s - 0.5,
        ]
    }

    /// Trilinear weights over the interior corners of the cell containing
    /// `x`, renormalized to sum to one. Falls back to the nearest node when
    /// no corner carries weight.
    pub fn trilinear(&self, x: &Vec3) -> Stencil<8> {
        let t = self.fractional(x);
        let last = (self.n - 1) as f64;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for d in 0..3 {
            let td = t[d].clamp(0.0, last);
            let i = (td.floor() as usize).min(self.n - 2);
            base[d] = i;
            frac[d] = td - i as f64;
        }
        let mut st = Stencil::<8> {
            idx: [0; 8],
            w: [0.0; 8],
            len: 0,
        };
        let mut total = 0.0;
        let wx = [1.0 - frac[0], frac[0]];
        let wy = [1.0 - frac[1], frac[1]];
        let wz = [1.0 - frac[2], frac[2]];
        let n = self.n;
        for (a, wa) in wx.iter().enumerate() {
            for (b, wb) in wy.iter().enumerate() {
                let row = ((base[0] + a) * n + base[1] + b) * n + base[2];
                for (c, wc) in wz.iter().enumerate() {
                    let w = wa * wb * wc;
                    if w == 0.0 {
                        continue;
                    }
                    if let Some(id) = self.lookup[row + c] {
                        st.idx[st.len] = id;
                        st.w[st.len] = w;
                        st.len += 1;
                        total += w;
                    }
                }
            }
        }
        if total <= 1e-12 {
            st.idx[0] = self.nearest(x) as u32;
            st.w[0] = 1.0;
            st.len = 1;
            return st;
        }
        for k in 0..st.len {
            st.w[k] /= total;
        }
        st
    }

    /// Tricubic Lagrange weights when the full `4³` neighbourhood is
    /// interior; `None` otherwise.
    pub fn tricubic(&self, x: &Vec3) -> Option<Stencil<64>> {
        let t = self.fractional(x);
        let mut base = [0usize; 3];
        let mut wts = [[0.0; 4]; 3];
        for d in 0..3 {
            let i = t[d].floor() as isize - 1;
            if i < 0 || i + 3 >= self.n as isize {
                return None;
            }
            base[d] = i as usize;
            let s = t[d] - i as f64;
            for (a, w) in wts[d].iter_mut().enumerate() {
                let mut l = 1.0;
                for b in 0..4 {
                    if b != a {
                        l *= (s - b as f64) / (a as f64 - b as f64);
                    }
                }
                *w = l;
            }
        }
        let mut st = Stencil::<64> {
            idx: [0; 64],
            w: [0.0; 64],
            len: 0,
        };
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let id = self.node_at(base[0] + a, base[1] + b, base[2] + c)?;
                    st.idx[st.len] = id as u32;
                    st.w[st.len] = wts[0][a] * wts[1][b] * wts[2][c];
                    st.len += 1;
                }
            }
        }
        Some(st)
    }
}

/// Quadrature points on `∂Ω` with outward normals and area weights, used to
/// evaluate the diffuse closure. Points come from a Fibonacci set of
/// directions cast from the origin, so `Ω` must be star-shaped about it.
#[derive(Clone, Debug)]
pub struct WallSamples {
    points: Vec<Vec3>,
    normals: Vec<Vec3>,
    areas: Vec<f64>,
    bucket_size: f64,
    /// Dense bucket grid over the bounding cube, in CSR form.
    dims: i64,
    origin: f64,
    starts: Vec<u32>,
    members: Vec<u32>,
}

impl WallSamples {
    pub fn new(domain: &LevelSetDomain, count: usize) -> Result<Self, SolverError> {
        if count < 4 {
            return Err(SolverError::InvalidConfig(format!(
                "need at least 4 wall samples, got {count}"
            )));
        }
        let golden = PI * (3.0 - 5f64.sqrt());
        let far = 2.0 * domain.bounding_radius();
        let mut points = Vec::with_capacity(count);
        let mut normals = Vec::with_capacity(count);
        let mut areas = Vec::with_capacity(count);
        for k in 0..count {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            let d = Vec3::new(r * phi.cos(), r * phi.sin(), z);
            let s = domain
                .ray_boundary_crossing(&Vec3::zeros(), &(d * far))?
                .ok_or_else(|| {
                    SolverError::InvalidConfig("domain is not star-shaped about the origin".into())
                })?;
            let p = domain.project_to_boundary(&(d * far * s))?;
            let n = domain.outward_normal(&p)?;
            let rho = p.norm();
            let cos = n.dot(&d);
            if cos <= 0.0 {
                return Err(SolverError::InvalidConfig(
                    "domain is not star-shaped about the origin".into(),
                ));
            }
            points.push(p);
            normals.push(n);
            areas.push(rho * rho / cos * 4.0 * PI / count as f64);
        }
        let bucket_size = (4.0 * PI / count as f64).sqrt() * domain.bounding_radius();
        let origin = -1.01 * domain.bounding_radius();
        let dims = ((-2.0 * origin / bucket_size).ceil() as i64).max(1);
        let cell = |p: &Vec3| -> usize {
            let k = bucket_key(p, origin, bucket_size).map(|a| a.clamp(0, dims - 1));
            ((k[0] * dims + k[1]) * dims + k[2]) as usize
        };
        let total = (dims * dims * dims) as usize;
        let mut starts = vec![0u32; total + 1];
        for p in &points {
            starts[cell(p) + 1] += 1;
        }
        for c in 0..total {
            starts[c + 1] += starts[c];
        }
        let mut fill = starts.clone();
        let mut members = vec![0u32; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = cell(p);
            members[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        Ok(Self {
            points,
            normals,
            areas,
            bucket_size,
            dims,
            origin,
            starts,
            members,
        })
    }

    /// Sample count giving about two samples per `h²` of surface.
    pub fn count_for(domain: &LevelSetDomain, h: f64) -> usize {
        let r = domain.bounding_radius();
        ((8.0 * PI * r * r / (h * h)).ceil() as usize).max(32)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    /// Index of the sample nearest to `x`.
    pub fn nearest(&self, x: &Vec3) -> usize {
        let key = bucket_key(x, self.origin, self.bucket_size);
        let n = self.dims;
        let mut best = (f64::INFINITY, usize::MAX);
        for reach in 1..4i64 {
            for a in (key[0] - reach).max(0)..=(key[0] + reach).min(n - 1) {
                for b in (key[1] - reach).max(0)..=(key[1] + reach).min(n - 1) {
                    for c in (key[2] - reach).max(0)..=(key[2] + reach).min(n - 1) {
                        let cell = ((a * n + b) * n + c) as usize;
                        let (lo, hi) = (self.starts[cell] as usize, self.starts[cell + 1] as usize);
                        for &i in &self.members[lo..hi] {
                            let d = (self.points[i as usize] - x).norm_squared();
                            if d < best.0 || (d == best.0 && (i as usize) < best.1) {
                                best = (d, i as usize);
                            }
                        }
                    }
                }
            }
            if best.1 != usize::MAX && best.0.sqrt() <= reach as f64 * self.bucket_size {
                return best.1;
            }
        }
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| ((p - x).norm_squared(), i))
            .fold(
                (f64::INFINITY, 0),
                |acc, e| if e.0 < acc.0 { e } else { acc },
            )
            .1
    }
}

fn bucket_key(x: &Vec3, origin: f64, size: f64) -> [i64; 3] {
    [
        ((x[0] - origin) / size).floor() as i64,
        ((x[1] - origin) / size).floor() as i64,
        ((x[2] - origin) / size).floor() as i64,
    ]
}
