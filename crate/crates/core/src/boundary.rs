//! Boundary closures on post-stream populations.
//!
//! After streaming, a boundary node lacks every population whose source node
//! `x - e_i` lies outside the lattice. Those are filled here, per face:
//!
//! * bounce-back: the population leaving the node in the opposite direction
//!   during this step is sent back (`q_i(x) = Omega_{opp(i)}(x)`);
//! * Dirichlet on q (implicit regularized scheme): the missing populations close
//!   the zeroth moment so the local Newton solve returns the wall value;
//! * Neumann on q: the zeroth moment copies the one of the inward neighbour;
//! * Dirichlet by moment closure (explicit enthalpy and liquid-fraction
//!   schemes): the zeroth moment equals the wall temperature or enthalpy.
//!
//! When several populations are missing and one moment constraint has to be
//! met, the deficit is shared in proportion to the lattice weights.

use thiserror::Error;

use crate::lattice::{DistributionField, Grid, Lattice, LatticeKind};
use crate::schemes::{phi_delta, Method};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("face {face:?}: {condition} is not valid with the {method} scheme")]
    IncompatibleCondition {
        face: Face,
        condition: &'static str,
        method: Method,
    },
    #[error("periodic condition on {0:?} needs a periodic opposite face")]
    UnpairedPeriodic(Face),
    #[error("Neumann node ({x}, {y}) has no usable interior neighbour")]
    NeighborOutside { x: usize, y: usize },
    #[error("grid {nx}x{ny} is too small for non-periodic boundaries")]
    GridTooSmall { nx: usize, ny: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Left,
    Right,
    Bottom,
    Top,
}

impl Face {
    pub const ALL: [Face; 4] = [Face::Left, Face::Right, Face::Bottom, Face::Top];

    pub fn axis(self) -> usize {
        match self {
            Face::Left | Face::Right => 0,
            Face::Bottom | Face::Top => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    Periodic,
    BounceBack,
    /// Wall temperature imposed through the post-stream moment (implicit
    /// regularized scheme only).
    DirichletOnQ(f64),
    /// Zero normal gradient through the post-stream moment (implicit
    /// regularized scheme only). Falls back to bounce-back on D2Q9.
    NeumannOnQ,
    /// Wall temperature imposed by closing the zeroth moment of `f`
    /// (explicit enthalpy and liquid-fraction schemes).
    DirichletEquilibrium(f64),
}

impl BoundaryCondition {
    fn name(&self) -> &'static str {
        match self {
            BoundaryCondition::Periodic => "periodic",
            BoundaryCondition::BounceBack => "bounce-back",
            BoundaryCondition::DirichletOnQ(_) => "Dirichlet-on-q",
            BoundaryCondition::NeumannOnQ => "Neumann-on-q",
            BoundaryCondition::DirichletEquilibrium(_) => "Dirichlet-equilibrium",
        }
    }

    fn dirichlet_value(&self) -> Option<f64> {
        match *self {
            BoundaryCondition::DirichletOnQ(v) | BoundaryCondition::DirichletEquilibrium(v) => {
                Some(v)
            }
            _ => None,
        }
    }
}

/// How nodes shared by two faces are closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CornerPolicy {
    /// Dirichlet wins: populations missing through a Neumann or bounce-back
    /// face are reflected first, then the Dirichlet moment closure fills the
    /// rest. Two Neumann faces close on the diagonal neighbour.
    #[default]
    DirichletFirst,
}

/// One condition per face. One-dimensional runs only read `left`/`right`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec {
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
    pub bottom: BoundaryCondition,
    pub top: BoundaryCondition,
    pub corners: CornerPolicy,
}

impl BoundarySpec {
    pub fn one_d(left: BoundaryCondition, right: BoundaryCondition) -> Self {
        Self {
            left,
            right,
            bottom: BoundaryCondition::Periodic,
            top: BoundaryCondition::Periodic,
            corners: CornerPolicy::default(),
        }
    }

    pub fn uniform(condition: BoundaryCondition) -> Self {
        Self {
            left: condition,
            right: condition,
            bottom: condition,
            top: condition,
            corners: CornerPolicy::default(),
        }
    }

    pub fn periodic() -> Self {
        Self::uniform(BoundaryCondition::Periodic)
    }

    pub fn closed_box() -> Self {
        Self::uniform(BoundaryCondition::BounceBack)
    }

    pub fn face(&self, face: Face) -> BoundaryCondition {
        match face {
            Face::Left => self.left,
            Face::Right => self.right,
            Face::Bottom => self.bottom,
            Face::Top => self.top,
        }
    }

    fn active_faces(dim: usize) -> &'static [Face] {
        if dim == 1 {
            &Face::ALL[..2]
        } else {
            &Face::ALL
        }
    }

    pub fn validate(&self, method: Method, dim: usize) -> Result<(), BoundaryError> {
        for &face in Self::active_faces(dim) {
            let cond = self.face(face);
            let ok = match cond {
                BoundaryCondition::DirichletOnQ(_) | BoundaryCondition::NeumannOnQ => {
                    method == Method::Irebm
                }
                BoundaryCondition::DirichletEquilibrium(_) => method != Method::Irebm,
                BoundaryCondition::Periodic | BoundaryCondition::BounceBack => true,
            };
            if !ok {
                return Err(BoundaryError::IncompatibleCondition {
                    face,
                    condition: cond.name(),
                    method,
                });
            }
        }
        for (a, b) in [(Face::Left, Face::Right), (Face::Bottom, Face::Top)] {
            if a.axis() >= dim {
                continue;
            }
            let pa = self.face(a) == BoundaryCondition::Periodic;
            let pb = self.face(b) == BoundaryCondition::Periodic;
            if pa != pb {
                return Err(BoundaryError::UnpairedPeriodic(if pa { a } else { b }));
            }
        }
        Ok(())
    }

    pub fn periodic_axes(&self, dim: usize) -> [bool; 2] {
        let p = |f| self.face(f) == BoundaryCondition::Periodic;
        [p(Face::Left), dim == 1 || p(Face::Bottom)]
    }
}

/// How the moment-constrained populations of a boundary node are closed.
#[derive(Debug, Clone, PartialEq)]
pub enum Closure {
    /// Only reflected populations.
    None,
    Dirichlet {
        value: f64,
        dirs: Vec<usize>,
    },
    Neumann {
        neighbor: usize,
        dirs: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryNode {
    pub node: usize,
    pub coords: (usize, usize),
    /// Directions filled by bounce-back.
    pub reflect: Vec<usize>,
    pub closure: Closure,
}

/// Boundary nodes of one lattice with their missing populations, built once
/// per run. Reflective and Dirichlet nodes come first; Neumann nodes last
/// since they read the completed moment of an interior neighbour.
#[derive(Debug, Clone)]
pub struct BoundaryPlan {
    periodic: [bool; 2],
    nodes: Vec<BoundaryNode>,
    first_neumann: usize,
}

impl BoundaryPlan {
    pub fn new(spec: &BoundarySpec, lattice: &Lattice, grid: &Grid) -> Result<Self, BoundaryError> {
        let dim = lattice.dimension();
        let periodic = spec.periodic_axes(dim);
        let Grid { nx, ny, .. } = *grid;
        if (!periodic[0] && nx < 3) || (!periodic[1] && ny < 3) {
            return Err(BoundaryError::GridTooSmall { nx, ny });
        }

        let mut plain = Vec::new();
        let mut neumann = Vec::new();
        for y in 0..ny {
            for x in 0..nx {
                let on_x = !periodic[0] && (x == 0 || x == nx - 1);
                let on_y = !periodic[1] && (y == 0 || y == ny - 1);
                if !(on_x || on_y) {
                    continue;
                }
                let Some(entry) = classify(spec, lattice, grid, periodic, x, y) else {
                    continue;
                };
                match entry.closure {
                    Closure::Neumann { .. } => neumann.push(entry),
                    _ => plain.push(entry),
                }
            }
        }
        // A Neumann closure copies from a neighbour whose populations must be
        // complete before it runs, so that neighbour cannot be Neumann itself.
        let neumann_nodes: Vec<usize> = neumann.iter().map(|e| e.node).collect();
        for entry in &neumann {
            if let Closure::Neumann { neighbor, .. } = entry.closure {
                if neumann_nodes.contains(&neighbor) {
                    return Err(BoundaryError::NeighborOutside {
                        x: entry.coords.0,
                        y: entry.coords.1,
                    });
                }
            }
        }
        let first_neumann = plain.len();
        plain.extend(neumann);
        Ok(Self {
            periodic,
            nodes: plain,
            first_neumann,
        })
    }

    pub fn periodic(&self) -> [bool; 2] {
        self.periodic
    }

    pub fn nodes(&self) -> &[BoundaryNode] {
        &self.nodes
    }

    pub fn dirichlet_nodes(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match n.closure {
            Closure::Dirichlet { value, .. } => Some((n.node, value)),
            _ => None,
        })
    }

    pub fn neumann_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes[self.first_neumann..]
            .iter()
            .filter_map(|n| match n.closure {
                Closure::Neumann { neighbor, .. } => Some((n.node, neighbor)),
                _ => None,
            })
    }

    /// Fills every missing population of `q`.
    ///
    /// `post` holds the post-collision populations that were streamed into
    /// `q`; `dirichlet_target(node, value)` returns the zeroth moment a
    /// Dirichlet node must reach.
    pub fn apply(
        &self,
        post: &DistributionField,
        q: &mut DistributionField,
        dirichlet_target: impl Fn(usize, f64) -> f64,
    ) {
        for entry in &self.nodes {
            apply_bounceback(post, q, entry.node, &entry.reflect);
            match &entry.closure {
                Closure::None => {}
                Closure::Dirichlet { value, dirs } => {
                    let target = dirichlet_target(entry.node, *value);
                    close_moment(q, entry.node, dirs, target);
                }
                Closure::Neumann { neighbor, dirs } => {
                    apply_neumann_on_q(q, entry.node, *neighbor, dirs);
                }
            }
        }
    }

    /// Largest `|theta - value|` over Dirichlet nodes.
    pub fn dirichlet_deviation(&self, theta: &[f64]) -> f64 {
        self.dirichlet_nodes()
            .map(|(n, v)| (theta[n] - v).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|theta(x) - theta(neighbour)|` over Neumann-on-q nodes.
    pub fn neumann_deviation(&self, theta: &[f64]) -> f64 {
        self.neumann_pairs()
            .map(|(a, b)| (theta[a] - theta[b]).abs())
            .fold(0.0, f64::max)
    }
}

fn classify(
    spec: &BoundarySpec,
    lattice: &Lattice,
    grid: &Grid,
    periodic: [bool; 2],
    x: usize,
    y: usize,
) -> Option<BoundaryNode> {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let mut dirichlet_dirs = Vec::new();
    let mut neumann_dirs = Vec::new();
    let mut reflect = Vec::new();
    for (i, e) in lattice.velocities().iter().enumerate() {
        let sx = x as isize - e[0] as isize;
        let sy = y as isize - e[1] as isize;
        let mut crossed = Vec::with_capacity(2);
        if !periodic[0] {
            if sx < 0 {
                crossed.push(Face::Left);
            } else if sx >= nx {
                crossed.push(Face::Right);
            }
        }
        if !periodic[1] {
            if sy < 0 {
                crossed.push(Face::Bottom);
            } else if sy >= ny {
                crossed.push(Face::Top);
            }
        }
        if crossed.is_empty() {
            continue;
        }
        let conds: Vec<_> = crossed.iter().map(|&f| spec.face(f)).collect();
        if conds.iter().any(|c| c.dirichlet_value().is_some()) {
            dirichlet_dirs.push(i);
        } else if conds.contains(&BoundaryCondition::NeumannOnQ) {
            neumann_dirs.push(i);
        } else {
            reflect.push(i);
        }
    }

    // Faces the node itself sits on, for its Dirichlet value.
    let mut faces = Vec::new();
    if !periodic[0] {
        if x == 0 {
            faces.push(Face::Left);
        }
        if x as isize == nx - 1 {
            faces.push(Face::Right);
        }
    }
    if !periodic[1] {
        if y == 0 {
            faces.push(Face::Bottom);
        }
        if y as isize == ny - 1 {
            faces.push(Face::Top);
        }
    }
    let wall_values: Vec<f64> = faces
        .iter()
        .filter_map(|&f| spec.face(f).dirichlet_value())
        .collect();

    let node = grid.index(x, y);
    let closure = if !wall_values.is_empty() {
        reflect.append(&mut neumann_dirs);
        reflect.sort_unstable();
        let value = wall_values.iter().sum::<f64>() / wall_values.len() as f64;
        Closure::Dirichlet {
            value,
            dirs: dirichlet_dirs,
        }
    } else if !dirichlet_dirs.is_empty() {
        // Diagonal populations entering through a neighbouring Dirichlet
        // face at a node that is itself on a non-Dirichlet face.
        reflect.append(&mut dirichlet_dirs);
        reflect.append(&mut neumann_dirs);
        reflect.sort_unstable();
        Closure::None
    } else if !neumann_dirs.is_empty() && lattice.kind() == LatticeKind::D2Q9 {
        reflect.append(&mut neumann_dirs);
        reflect.sort_unstable();
        Closure::None
    } else if !neumann_dirs.is_empty() {
        let mut nb = [x as isize, y as isize];
        for &i in &neumann_dirs {
            let e = lattice.velocity(i);
            nb[0] += e[0] as isize;
            nb[1] += e[1] as isize;
        }
        let neighbor = grid.index(nb[0] as usize, nb[1] as usize);
        Closure::Neumann {
            neighbor,
            dirs: neumann_dirs,
        }
    } else {
        Closure::None
    };

    if reflect.is_empty() && closure == Closure::None {
        return None;
    }
    Some(BoundaryNode {
        node,
        coords: (x, y),
        reflect,
        closure,
    })
}

/// Reflects each direction in `dirs`: `q_i(x) = post_{opp(i)}(x)`.
pub fn apply_bounceback(
    post: &DistributionField,
    q: &mut DistributionField,
    node: usize,
    dirs: &[usize],
) {
    for &i in dirs {
        let o = post.lattice().opposite(i);
        q.set(node, i, post.get(node, o));
    }
}

/// Sets the populations in `dirs` so that the node's zeroth moment equals
/// `target`, sharing the deficit in proportion to the weights.
pub fn close_moment(q: &mut DistributionField, node: usize, dirs: &[usize], target: f64) {
    if dirs.is_empty() {
        return;
    }
    let q_count = q.lattice().q();
    let known: f64 = (0..q_count)
        .filter(|i| !dirs.contains(i))
        .map(|i| q.get(node, i))
        .sum();
    let deficit = target - known;
    let w_missing: f64 = dirs.iter().map(|&i| q.lattice().weight(i)).sum();
    for &i in dirs {
        let share = q.lattice().weight(i) / w_missing;
        q.set(node, i, deficit * share);
    }
}

/// Post-stream moment a Dirichlet node needs so that the local implicit
/// solve returns `theta_dir_next`.
///
/// From `theta~ = M0(q) + (phi(theta) - phi(theta~)) / Ste` with
/// `theta~ = theta_dir_next` and `theta = theta_prev`, the node's own
/// temperature at the start of the step.
pub fn dirichlet_on_q_target(theta_dir_next: f64, theta_prev: f64, ste: f64, delta: f64) -> f64 {
    theta_dir_next - (phi_delta(theta_prev, delta) - phi_delta(theta_dir_next, delta)) / ste
}

pub fn apply_dirichlet_on_q(
    q: &mut DistributionField,
    node: usize,
    dirs: &[usize],
    theta_dir_next: f64,
    theta_prev: f64,
    ste: f64,
    delta: f64,
) {
    let target = dirichlet_on_q_target(theta_dir_next, theta_prev, ste, delta);
    close_moment(q, node, dirs, target);
}

/// Zero-gradient closure: the node's post-stream moment copies the one of
/// `neighbor`. With one missing direction this is
/// `q_ix(x) = sum_i q_i(x + e_ix) - sum_{i != ix} q_i(x)`.
pub fn apply_neumann_on_q(q: &mut DistributionField, node: usize, neighbor: usize, dirs: &[usize]) {
    let target = q.node_sum(neighbor);
    close_moment(q, node, dirs, target);
}

/// Dirichlet closure for the explicit enthalpy / liquid-fraction schemes.
/// `target` is the wall temperature (liquid-fraction scheme) or the wall
/// enthalpy (explicit enthalpy scheme).
pub fn apply_dirichlet_equilibrium(
    f: &mut DistributionField,
    node: usize,
    dirs: &[usize],
    target: f64,
) {
    close_moment(f, node, dirs, target);
}
