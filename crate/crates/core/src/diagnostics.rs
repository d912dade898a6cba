//! Measurements on solver fields: interface position, error norms,
//! isolines, diagonal profiles and energy sums.

use std::collections::HashMap;

use thiserror::Error;

use crate::analytic::{AnalyticError, AnalyticSolution};
use crate::lattice::Grid;
use crate::schemes::SolverState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("field has {got} values, grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("expected a 1D field, grid is {nx}x{ny}")]
    NotOneDimensional { nx: usize, ny: usize },
    #[error("expected a square 2D field, grid is {nx}x{ny}")]
    NotSquare { nx: usize, ny: usize },
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("trace times must increase strictly: {previous} then {next}")]
    NonIncreasingTime { previous: f64, next: f64 },
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

/// Outcome of a 1D interface search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterfaceLocation {
    /// First crossing from `> level` to `<= level`; `multiple` flags that
    /// more than one crossing exists.
    Found { position: f64, multiple: bool },
    /// The field never crosses the level (fully melted or fully solid).
    NoInterface,
}

impl InterfaceLocation {
    pub fn position(self) -> Option<f64> {
        match self {
            InterfaceLocation::Found { position, .. } => Some(position),
            InterfaceLocation::NoInterface => None,
        }
    }
}

/// Zero crossing of `theta` on nodes `x_j = j dx`, located by linear
/// interpolation `x = x_j + dx theta_j / (theta_j - theta_{j+1})`.
pub fn locate_interface_1d(theta: &[f64], dx: f64) -> InterfaceLocation {
    locate_level_1d(theta, dx, 0.0)
}

/// First crossing of `level` from above; used with `level = 1/2` on a
/// liquid-fraction field as an alternative interface definition.
pub fn locate_level_1d(values: &[f64], dx: f64, level: f64) -> InterfaceLocation {
    let mut found = None;
    let mut count = 0usize;
    for (j, pair) in values.windows(2).enumerate() {
        let (a, b) = (pair[0] - level, pair[1] - level);
        if a > 0.0 && b <= 0.0 {
            count += 1;
            if found.is_none() {
                found = Some(dx * (j as f64 + a / (a - b)));
            }
        }
    }
    match found {
        Some(position) => InterfaceLocation::Found {
            position,
            multiple: count > 1,
        },
        None => InterfaceLocation::NoInterface,
    }
}

/// Numerical and exact interface positions sampled over a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InterfaceTrace {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub exact_positions: Vec<f64>,
    pub errors: Vec<f64>,
}

impl InterfaceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: f64, position: f64, exact: f64) -> Result<(), DiagnosticsError> {
        if let Some(&previous) = self.times.last() {
            if !(time > previous) {
                return Err(DiagnosticsError::NonIncreasingTime {
                    previous,
                    next: time,
                });
            }
        }
        self.times.push(time);
        self.positions.push(position);
        self.exact_positions.push(exact);
        self.errors.push((position - exact).abs());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Samples whose index is at least `fraction` of the trace length.
    pub fn tail(&self, fraction: f64) -> &[f64] {
        let start = ((self.len() as f64) * fraction).ceil() as usize;
        &self.errors[start.min(self.len())..]
    }

    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_error(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.errors.iter().sum::<f64>() / self.len() as f64
    }

    /// Peak-to-trough spread `max - min` of the error after the first
    /// `skip_fraction` of samples.
    pub fn oscillation_amplitude(&self, skip_fraction: f64) -> f64 {
        let tail = self.tail(skip_fraction);
        if tail.is_empty() {
            return 0.0;
        }
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
                (lo.min(e), hi.max(e))
            });
        hi - lo
    }

    /// Largest deviation of the error from its running mean over `window`
    /// consecutive samples, after the first `skip_fraction`. Removes the slow
    /// drift of the error and keeps the node-passage ripple.
    pub fn ripple_amplitude(&self, skip_fraction: f64, window: usize) -> f64 {
        let tail = self.tail(skip_fraction);
        let window = window.max(1);
        if tail.len() < window {
            return 0.0;
        }
        let mut sum: f64 = tail[..window].iter().sum();
        let mut worst: f64 = 0.0;
        for start in 0..=tail.len() - window {
            if start > 0 {
                sum += tail[start + window - 1] - tail[start - 1];
            }
            let mean = sum / window as f64;
            for &e in &tail[start..start + window] {
                worst = worst.max((e - mean).abs());
            }
        }
        2.0 * worst
    }
}

fn check_len(values: &[f64], grid: &Grid) -> Result<(), DiagnosticsError> {
    if values.len() != grid.len() {
        return Err(DiagnosticsError::LengthMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    Ok(())
}

/// `max_j |theta_j - exact(x_j, t)|` for a 1D field with `x_j = j dx`.
pub fn linf_error(
    theta: &[f64],
    grid: &Grid,
    oracle: &AnalyticSolution,
    t: f64,
) -> Result<f64, DiagnosticsError> {
    if grid.ny != 1 {
        return Err(DiagnosticsError::NotOneDimensional {
            nx: grid.nx,
            ny: grid.ny,
        });
    }
    check_len(theta, grid)?;
    if !(t > 0.0) {
        return Err(DiagnosticsError::NonPositiveTime(t));
    }
    let mut worst: f64 = 0.0;
    for (j, &v) in theta.iter().enumerate() {
        let exact = oracle.exact_theta(j as f64 * grid.dx, t)?;
        worst = worst.max((v - exact).abs());
    }
    Ok(worst)
}

/// Energy monitor of the state, see [`SolverState::total_enthalpy`].
pub fn total_enthalpy(state: &SolverState) -> f64 {
    state.total_enthalpy()
}

/// Temperature along the diagonal `x = y` with arclength `i dx sqrt(2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalProfile {
    pub arclength: Vec<f64>,
    pub theta: Vec<f64>,
}

pub fn sample_diagonal(theta: &[f64], grid: &Grid) -> Result<DiagonalProfile, DiagnosticsError> {
    if grid.nx != grid.ny || grid.ny < 2 {
        return Err(DiagnosticsError::NotSquare {
            nx: grid.nx,
            ny: grid.ny,
        });
    }
    check_len(theta, grid)?;
    let step = grid.dx * std::f64::consts::SQRT_2;
    Ok(DiagonalProfile {
        arclength: (0..grid.nx).map(|i| i as f64 * step).collect(),
        theta: (0..grid.nx).map(|i| theta[grid.index(i, i)]).collect(),
    })
}

/// Level sets of a 2D field as polylines in domain coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolineSet {
    pub isolines: Vec<Isoline>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Isoline {
    pub level: f64,
    /// Closed polylines repeat their first vertex at the end.
    pub polylines: Vec<Vec<[f64; 2]>>,
}

impl IsolineSet {
    pub fn level(&self, level: f64) -> Option<&Isoline> {
        self.isolines.iter().find(|l| l.level == level)
    }
}

impl Isoline {
    pub fn vertices(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.polylines.iter().flatten().copied()
    }
}

/// Edge of the node lattice: horizontal edges join `(i, j)`-`(i+1, j)`,
/// vertical edges join `(i, j)`-`(i, j+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Marching squares with linear interpolation along cell edges. A node with
/// `theta >= level` counts as above; saddle cells are split according to the
/// cell-average.
pub fn extract_isolines_2d(
    theta: &[f64],
    grid: &Grid,
    levels: &[f64],
) -> Result<IsolineSet, DiagnosticsError> {
    check_len(theta, grid)?;
    let isolines = levels
        .iter()
        .map(|&level| Isoline {
            level,
            polylines: trace_level(theta, grid, level),
        })
        .collect();
    Ok(IsolineSet { isolines })
}

fn trace_level(theta: &[f64], grid: &Grid, level: f64) -> Vec<Vec<[f64; 2]>> {
    let (nx, ny, dx) = (grid.nx, grid.ny, grid.dx);
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let at = |i: usize, j: usize| theta[grid.index(i, j)];
    let point = |edge: Edge| -> [f64; 2] {
        let ((i0, j0), (i1, j1)) = match edge {
            Edge::H(i, j) => ((i, j), (i + 1, j)),
            Edge::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (a, b) = (at(i0, j0), at(i1, j1));
        let s = if a == b { 0.5 } else { (level - a) / (b - a) };
        [
            dx * (i0 as f64 + s * (i1 as f64 - i0 as f64)),
            dx * (j0 as f64 + s * (j1 as f64 - j0 as f64)),
        ]
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let corners = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let mut case = 0u8;
            for (k, &c) in corners.iter().enumerate() {
                if c >= level {
                    case |= 1 << k;
                }
            }
            let bottom = Edge::H(i, j);
            let right = Edge::V(i + 1, j);
            let top = Edge::H(i, j + 1);
            let left = Edge::V(i, j);
            match case {
                0 | 15 => {}
                5 | 10 => {
                    let centre_above = corners.iter().sum::<f64>() / 4.0 >= level;
                    // a (bit 0) and c (bit 2) above in case 5
                    if (case == 5) == centre_above {
                        segments.push((bottom, right));
                        segments.push((left, top));
                    } else {
                        segments.push((bottom, left));
                        segments.push((right, top));
                    }
                }
                _ => {
                    let above = |k: usize| case & (1 << k) != 0;
                    let mut crossed = Vec::with_capacity(2);
                    if above(0) != above(1) {
                        crossed.push(bottom);
                    }
                    if above(1) != above(2) {
                        crossed.push(right);
                    }
                    if above(3) != above(2) {
                        crossed.push(top);
                    }
                    if above(0) != above(3) {
                        crossed.push(left);
                    }
                    debug_assert_eq!(crossed.len(), 2);
                    segments.push((crossed[0], crossed[1]));
                }
            }
        }
    }

    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(k);
        by_edge.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    let walk = |start: usize, from: Edge, used: &mut Vec<bool>| -> Vec<Edge> {
        let mut chain = vec![from];
        let mut seg = start;
        let mut at_edge = from;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at_edge { b } else { a };
            chain.push(next);
            match by_edge[&next].iter().find(|&&s| !used[s]) {
                Some(&s) => {
                    seg = s;
                    at_edge = next;
                }
                None => break,
            }
        }
        chain
    };
    // open chains start at an edge used once, i.e. on the domain border
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by_key(|&k| {
        let (a, b) = segments[k];
        !(by_edge[&a].len() == 1 || by_edge[&b].len() == 1)
    });
    for k in order {
        if used[k] {
            continue;
        }
        let (a, b) = segments[k];
        let from = if by_edge[&a].len() == 1 {
            a
        } else if by_edge[&b].len() == 1 {
            b
        } else {
            a
        };
        let chain = walk(k, from, &mut used);
        polylines.push(chain.into_iter().map(point).collect());
    }
    polylines
}
