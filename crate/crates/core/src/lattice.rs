//! Discrete velocity sets and the population storage they act on.
//!
//! Populations are stored as one contiguous plane per velocity index
//! (structure of arrays), so streaming along a velocity is a shifted slice
//! copy. Nodes are numbered row-major: `node = y * nx + x`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("unsupported moment order {0} (expected 0, 1 or 2)")]
    UnsupportedMomentOrder(u32),
    #[error("lattice {kind:?} is {dim}-dimensional but the grid has shape {nx}x{ny}")]
    ShapeMismatch {
        kind: LatticeKind,
        dim: usize,
        nx: usize,
        ny: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LatticeKind {
    D1Q3,
    D2Q5,
    D2Q9,
}

impl LatticeKind {
    pub fn dimension(self) -> usize {
        match self {
            LatticeKind::D1Q3 => 1,
            LatticeKind::D2Q5 | LatticeKind::D2Q9 => 2,
        }
    }
}

impl std::fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LatticeKind::D1Q3 => "D1Q3",
            LatticeKind::D2Q5 => "D2Q5",
            LatticeKind::D2Q9 => "D2Q9",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for LatticeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "D1Q3" => Ok(LatticeKind::D1Q3),
            "D2Q5" => Ok(LatticeKind::D2Q5),
            "D2Q9" => Ok(LatticeKind::D2Q9),
            other => Err(format!("unknown lattice `{other}`")),
        }
    }
}

/// Velocity set, weights and opposite-direction map of a DdQq stencil.
///
/// Velocities are stored as `[ex, ey]`; one-dimensional lattices keep
/// `ey = 0`. Index 0 is always the rest velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    kind: LatticeKind,
    velocities: Vec<[i32; 2]>,
    weights: Vec<f64>,
    opposite: Vec<usize>,
}

impl Lattice {
    pub fn new(kind: LatticeKind) -> Self {
        let (velocities, weights): (Vec<[i32; 2]>, Vec<f64>) = match kind {
            LatticeKind::D1Q3 => (
                vec![[0, 0], [1, 0], [-1, 0]],
                vec![2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
            ),
            LatticeKind::D2Q5 => (
                vec![[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1]],
                vec![1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0],
            ),
            LatticeKind::D2Q9 => (
                vec![
                    [0, 0],
                    [1, 0],
                    [0, 1],
                    [-1, 0],
                    [0, -1],
                    [1, 1],
                    [-1, 1],
                    [-1, -1],
                    [1, -1],
                ],
                vec![
                    4.0 / 9.0,
                    1.0 / 9.0,
                    1.0 / 9.0,
                    1.0 / 9.0,
                    1.0 / 9.0,
                    1.0 / 36.0,
                    1.0 / 36.0,
                    1.0 / 36.0,
                    1.0 / 36.0,
                ],
            ),
        };
        let opposite = velocities
            .iter()
            .map(|e| {
                velocities
                    .iter()
                    .position(|o| o[0] == -e[0] && o[1] == -e[1])
                    .expect("velocity sets are symmetric")
            })
            .collect();
        Self {
            kind,
            velocities,
            weights,
            opposite,
        }
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.kind.dimension()
    }

    pub fn q(&self) -> usize {
        self.velocities.len()
    }

    pub fn velocities(&self) -> &[[i32; 2]] {
        &self.velocities
    }

    pub fn velocity(&self, i: usize) -> [i32; 2] {
        self.velocities[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn opposite(&self, i: usize) -> usize {
        self.opposite[i]
    }
}

/// Shorthand for [`Lattice::new`].
pub fn make_lattice(kind: LatticeKind) -> Lattice {
    Lattice::new(kind)
}

/// Node counts and spacing of a uniform Cartesian lattice.
///
/// One-dimensional grids have `ny == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
}

impl Grid {
    pub fn line(nx: usize, dx: f64) -> Self {
        Self { nx, ny: 1, dx }
    }

    pub fn square(n: usize, dx: f64) -> Self {
        Self { nx: n, ny: n, dx }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.nx + x
    }

    #[inline]
    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node % self.nx, node / self.nx)
    }

    /// Physical coordinates of a node, origin at node (0, 0).
    pub fn position(&self, node: usize) -> [f64; 2] {
        let (x, y) = self.coords(node);
        [x as f64 * self.dx, y as f64 * self.dx]
    }
}

/// Result of [`DistributionField::moment`].
#[derive(Debug, Clone, PartialEq)]
pub enum Moment {
    Scalar(Vec<f64>),
    Vector(Vec<[f64; 2]>),
    Tensor(Vec<[[f64; 2]; 2]>),
}

/// q populations per lattice node.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    lattice: Lattice,
    grid: Grid,
    data: Vec<f64>,
}

impl DistributionField {
    pub fn zeros(lattice: Lattice, grid: Grid) -> Result<Self, LatticeError> {
        let ok = match lattice.dimension() {
            1 => grid.ny == 1,
            _ => true,
        };
        if !ok {
            return Err(LatticeError::ShapeMismatch {
                kind: lattice.kind(),
                dim: lattice.dimension(),
                nx: grid.nx,
                ny: grid.ny,
            });
        }
        let data = vec![0.0; lattice.q() * grid.len()];
        Ok(Self {
            lattice,
            grid,
            data,
        })
    }

    /// Equilibrium populations `w_i * value(node)`.
    pub fn from_equilibrium(
        lattice: Lattice,
        grid: Grid,
        value: impl Fn(usize) -> f64,
    ) -> Result<Self, LatticeError> {
        let mut field = Self::zeros(lattice, grid)?;
        let n = grid.len();
        for i in 0..field.lattice.q() {
            let w = field.lattice.weight(i);
            for (node, v) in field.data[i * n..(i + 1) * n].iter_mut().enumerate() {
                *v = w * value(node);
            }
        }
        Ok(field)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn plane(&self, i: usize) -> &[f64] {
        let n = self.nodes();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn plane_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.nodes();
        &mut self.data[i * n..(i + 1) * n]
    }

    #[inline]
    pub fn get(&self, node: usize, i: usize) -> f64 {
        self.data[i * self.grid.len() + node]
    }

    #[inline]
    pub fn set(&mut self, node: usize, i: usize, value: f64) {
        let n = self.grid.len();
        self.data[i * n + node] = value;
    }

    /// Sum of all populations at one node.
    #[inline]
    pub fn node_sum(&self, node: usize) -> f64 {
        let n = self.grid.len();
        (0..self.lattice.q()).map(|i| self.data[i * n + node]).sum()
    }

    /// Zeroth moment at every node, written into `out`.
    pub fn moment0_into(&self, out: &mut [f64]) {
        let n = self.nodes();
        assert_eq!(out.len(), n);
        out.copy_from_slice(self.plane(0));
        for i in 1..self.lattice.q() {
            for (o, v) in out.iter_mut().zip(self.plane(i)) {
                *o += v;
            }
        }
    }

    pub fn moment0(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes()];
        self.moment0_into(&mut out);
        out
    }

    /// Moment of order `k`: per node `sum_i e_i^{(x)k} f_i`.
    pub fn moment(&self, k: u32) -> Result<Moment, LatticeError> {
        let n = self.nodes();
        match k {
            0 => Ok(Moment::Scalar(self.moment0())),
            1 => {
                let mut out = vec![[0.0; 2]; n];
                for (i, e) in self.lattice.velocities().iter().enumerate() {
                    let e = [e[0] as f64, e[1] as f64];
                    for (o, v) in out.iter_mut().zip(self.plane(i)) {
                        o[0] += e[0] * v;
                        o[1] += e[1] * v;
                    }
                }
                Ok(Moment::Vector(out))
            }
            2 => {
                let mut out = vec![[[0.0; 2]; 2]; n];
                for (i, e) in self.lattice.velocities().iter().enumerate() {
                    let e = [e[0] as f64, e[1] as f64];
                    for (o, v) in out.iter_mut().zip(self.plane(i)) {
                        for a in 0..2 {
                            for b in 0..2 {
                                o[a][b] += e[a] * e[b] * v;
                            }
                        }
                    }
                }
                Ok(Moment::Tensor(out))
            }
            other => Err(LatticeError::UnsupportedMomentOrder(other)),
        }
    }

    /// Pull-streaming `self -> dst`: `dst_i(x) = self_i(x - e_i)`.
    ///
    /// Along axes flagged in `periodic` the source index wraps; along the
    /// other axes destinations whose source lies outside the lattice are left
    /// untouched and must be filled by a boundary closure.
    pub fn stream_into(&self, dst: &mut DistributionField, periodic: [bool; 2]) {
        self.shift_into(dst, periodic, 1);
    }

    /// Inverse of [`stream_into`](Self::stream_into): `dst_i(x) = self_i(x + e_i)`.
    pub fn stream_reverse_into(&self, dst: &mut DistributionField, periodic: [bool; 2]) {
        self.shift_into(dst, periodic, -1);
    }

    fn shift_into(&self, dst: &mut DistributionField, periodic: [bool; 2], sign: i32) {
        debug_assert_eq!(self.grid, dst.grid);
        debug_assert_eq!(self.lattice.kind(), dst.lattice.kind());
        let Grid { nx, ny, .. } = self.grid;
        let n = nx * ny;
        for i in 0..self.lattice.q() {
            let e = self.lattice.velocity(i);
            let (ex, ey) = ((sign * e[0]) as isize, (sign * e[1]) as isize);
            let src = &self.data[i * n..(i + 1) * n];
            let out = &mut dst.data[i * n..(i + 1) * n];
            for y in 0..ny {
                let Some(sy) = wrap(y as isize - ey, ny, periodic[1]) else {
                    continue;
                };
                let src_row = &src[sy * nx..(sy + 1) * nx];
                let dst_row = &mut out[y * nx..(y + 1) * nx];
                shift_row(src_row, dst_row, ex, periodic[0]);
            }
        }
    }
}

#[inline]
fn wrap(s: isize, len: usize, periodic: bool) -> Option<usize> {
    if (0..len as isize).contains(&s) {
        Some(s as usize)
    } else if periodic {
        Some(s.rem_euclid(len as isize) as usize)
    } else {
        None
    }
}

/// `dst[x] = src[x - shift]` for in-range sources, wrapping when periodic.
#[inline]
fn shift_row(src: &[f64], dst: &mut [f64], shift: isize, periodic: bool) {
    let len = src.len();
    let s = shift.unsigned_abs().min(len);
    match shift.cmp(&0) {
        std::cmp::Ordering::Equal => dst.copy_from_slice(src),
        std::cmp::Ordering::Greater => {
            dst[s..].copy_from_slice(&src[..len - s]);
            if periodic {
                dst[..s].copy_from_slice(&src[len - s..]);
            }
        }
        std::cmp::Ordering::Less => {
            dst[..len - s].copy_from_slice(&src[s..]);
            if periodic {
                dst[len - s..].copy_from_slice(&src[..s]);
            }
        }
    }
}
