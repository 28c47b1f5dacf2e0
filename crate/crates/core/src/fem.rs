//! Bilinear (Q1) finite elements on a uniform grid of the unit square.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Grid with `cells × cells` squares of width `h`; node `(i, j)` sits at
/// `(i h, j h)` and has global index `j (cells + 1) + i`.
#[derive(Debug, Clone)]
pub struct FemDiscretization {
    pub h: f64,
    pub cells: usize,
    /// Mass and stiffness matrices over all `(cells + 1)²` nodes.
    pub mass_full: DMatrix<f64>,
    pub stiffness_full: DMatrix<f64>,
    /// Nodes off the whole boundary (Dirichlet everywhere).
    pub interior: Vec<usize>,
    /// `mass_full` and `stiffness_full` restricted to `interior`.
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// Nodes off the bottom edge `y = 0`, the only Dirichlet edge of the
    /// boundary-control problem.
    pub state_nodes: Vec<usize>,
    /// Nodes on the left, top and right edges, excluding the two bottom
    /// corners; the control lives here.
    pub control_nodes: Vec<usize>,
    /// Boundary mass matrix on the controlled edges (`control × control`).
    pub mass_boundary: DMatrix<f64>,
    /// Boundary coupling between state and control dofs (`state × control`).
    pub coupling_boundary: DMatrix<f64>,
}

const ELEMENT_MASS: [[f64; 4]; 4] = [
    [4.0, 2.0, 1.0, 2.0],
    [2.0, 4.0, 2.0, 1.0],
    [1.0, 2.0, 4.0, 2.0],
    [2.0, 1.0, 2.0, 4.0],
];

const ELEMENT_STIFFNESS: [[f64; 4]; 4] = [
    [4.0, -1.0, -2.0, -1.0],
    [-1.0, 4.0, -1.0, -2.0],
    [-2.0, -1.0, 4.0, -1.0],
    [-1.0, -2.0, -1.0, 4.0],
];

/// Number of cells per side for a mesh width, if `1/h` is an integer ≥ 2.
pub fn cells_for(h: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!("mesh width h = {h} must be positive")));
    }
    let n = (1.0 / h).round();
    if n < 2.0 || (n * h - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!("1/h must be an integer >= 2, got h = {h}")));
    }
    Ok(n as usize)
}

fn restrict(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn q1_discretize(h: f64) -> Result<FemDiscretization> {
    let cells = cells_for(h)?;
    let h = 1.0 / cells as f64;
    let side = cells + 1;
    let nodes = side * side;
    let idx = |i: usize, j: usize| j * side + i;

    let mut mass_full = DMatrix::zeros(nodes, nodes);
    let mut stiffness_full = DMatrix::zeros(nodes, nodes);
    let mass_scale = h * h / 36.0;
    for j in 0..cells {
        for i in 0..cells {
            // counter-clockwise from the lower-left corner
            let local = [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)];
            for (a, &ga) in local.iter().enumerate() {
                for (b, &gb) in local.iter().enumerate() {
                    mass_full[(ga, gb)] += mass_scale * ELEMENT_MASS[a][b];
                    stiffness_full[(ga, gb)] += ELEMENT_STIFFNESS[a][b] / 6.0;
                }
            }
        }
    }

    let interior: Vec<usize> = (1..cells)
        .flat_map(|j| (1..cells).map(move |i| idx(i, j)))
        .collect();
    let state_nodes: Vec<usize> = (1..=cells)
        .flat_map(|j| (0..=cells).map(move |i| idx(i, j)))
        .collect();
    let mut control_nodes: Vec<usize> = (1..=cells).map(|j| idx(0, j)).collect();
    control_nodes.extend((1..cells).map(|i| idx(i, cells)));
    control_nodes.extend((1..=cells).map(|j| idx(cells, j)));

    // boundary mass over the controlled edges, on all nodes first
    let mut edge_mass = DMatrix::zeros(nodes, nodes);
    let mut add_edge = |a: usize, b: usize| {
        let e = h / 6.0;
        edge_mass[(a, a)] += 2.0 * e;
        edge_mass[(b, b)] += 2.0 * e;
        edge_mass[(a, b)] += e;
        edge_mass[(b, a)] += e;
    };
    for j in 0..cells {
        add_edge(idx(0, j), idx(0, j + 1));
        add_edge(idx(cells, j), idx(cells, j + 1));
    }
    for i in 0..cells {
        add_edge(idx(i, cells), idx(i + 1, cells));
    }

    Ok(FemDiscretization {
        h,
        cells,
        mass: restrict(&mass_full, &interior, &interior),
        stiffness: restrict(&stiffness_full, &interior, &interior),
        mass_boundary: restrict(&edge_mass, &control_nodes, &control_nodes),
        coupling_boundary: restrict(&edge_mass, &state_nodes, &control_nodes),
        mass_full,
        stiffness_full,
        interior,
        state_nodes,
        control_nodes,
    })
}

impl FemDiscretization {
    /// Mass and stiffness restricted to the boundary-control state nodes.
    pub fn state_mass(&self) -> DMatrix<f64> {
        restrict(&self.mass_full, &self.state_nodes, &self.state_nodes)
    }

    pub fn state_stiffness(&self) -> DMatrix<f64> {
        restrict(&self.stiffness_full, &self.state_nodes, &self.state_nodes)
    }
}
