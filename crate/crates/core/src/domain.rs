use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;

/// Region `Omega` carved out of the grid box, centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainShape {
    Ball { radius: f64 },
    Cube { half_width: f64 },
}

impl DomainShape {
    /// Distance from `x` to the boundary, positive inside.
    pub fn depth(&self, x: [f64; 3]) -> f64 {
        match *self {
            DomainShape::Ball { radius } => radius - norm3(x),
            DomainShape::Cube { half_width } => {
                half_width - x.iter().fold(0.0f64, |m, c| m.max(c.abs()))
            }
        }
    }

    fn size(&self) -> f64 {
        match *self {
            DomainShape::Ball { radius } => radius,
            DomainShape::Cube { half_width } => half_width,
        }
    }
}

/// Which set a grid node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Outside,
    Interior(usize),
    Boundary(usize),
}

/// Discrete domain: `Omega` nodes split into interior and boundary nodes.
///
/// A node of `Omega` is a boundary node when at least one of its six lattice
/// neighbours lies outside `Omega`. Each boundary node carries the staircase
/// face vector `h^2 * sum(missing directions)`: its length is the quadrature
/// weight and its direction the outward normal. With these weights the
/// boundary sums reproduce the discrete Green identity exactly, which is what
/// the Dirichlet-to-Neumann machinery relies on.
#[derive(Debug, Clone)]
pub struct Domain {
    grid: Grid,
    shape: DomainShape,
    collar_width: f64,
    roles: Vec<NodeRole>,
    inside: Vec<bool>,
    boundary: Vec<usize>,
    interior: Vec<usize>,
    weights: Vec<f64>,
    normals: Vec<[f64; 3]>,
    hash: String,
}

const NEIGHBOURS: [[i64; 3]; 6] = [
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
];

impl Domain {
    pub fn new(grid: Grid, shape: DomainShape, collar_width: f64) -> Result<Self> {
        if !(shape.size() > 0.0) {
            return Err(Error::InvalidParameter("domain size must be positive".into()));
        }
        if !(collar_width > 0.0 && collar_width < shape.size()) {
            return Err(Error::InvalidParameter(format!(
                "collar width {collar_width} must lie in (0, {})",
                shape.size()
            )));
        }
        let n = grid.n();
        let h = grid.spacing();
        let inside: Vec<bool> = grid.positions().map(|x| shape.depth(x) >= -1e-12 * h).collect();

        // Omega must stay two nodes away from the box faces so every stencil used
        // on it is an ordinary interior stencil.
        for (idx, &ins) in inside.iter().enumerate() {
            if ins {
                let c = grid.ijk(idx);
                if c.iter().any(|&v| v < 2 || v + 2 >= n) {
                    return Err(Error::InvalidParameter(
                        "domain must stay at least two nodes inside the box".into(),
                    ));
                }
            }
        }

        let mut roles = vec![NodeRole::Outside; grid.len()];
        let mut boundary = Vec::new();
        let mut interior = Vec::new();
        let mut weights = Vec::new();
        let mut normals = Vec::new();
        for idx in 0..grid.len() {
            if !inside[idx] {
                continue;
            }
            let [i, j, k] = grid.ijk(idx);
            let mut face = [0.0f64; 3];
            let mut missing = 0;
            for d in NEIGHBOURS {
                let nb = grid.index(
                    (i as i64 + d[0]) as usize,
                    (j as i64 + d[1]) as usize,
                    (k as i64 + d[2]) as usize,
                );
                if !inside[nb] {
                    missing += 1;
                    for a in 0..3 {
                        face[a] += d[a] as f64;
                    }
                }
            }
            if missing == 0 {
                roles[idx] = NodeRole::Interior(interior.len());
                interior.push(idx);
            } else {
                roles[idx] = NodeRole::Boundary(boundary.len());
                boundary.push(idx);
                let len = norm3(face);
                if len > 0.5 {
                    weights.push(h * h * len);
                    normals.push([face[0] / len, face[1] / len, face[2] / len]);
                } else {
                    // Opposite faces both missing: a one-node sliver. Fall back to
                    // one face area and the direction away from the centre.
                    let x = grid.position(idx);
                    let r = norm3(x).max(f64::MIN_POSITIVE);
                    weights.push(h * h);
                    normals.push([x[0] / r, x[1] / r, x[2] / r]);
                }
            }
        }
        if boundary.is_empty() || interior.is_empty() {
            return Err(Error::InvalidParameter("domain is too small for this grid".into()));
        }

        let mut hasher = Sha256::new();
        hasher.update((n as u64).to_le_bytes());
        hasher.update(grid.half_width().to_le_bytes());
        match shape {
            DomainShape::Ball { radius } => {
                hasher.update(b"ball");
                hasher.update(radius.to_le_bytes());
            }
            DomainShape::Cube { half_width } => {
                hasher.update(b"cube");
                hasher.update(half_width.to_le_bytes());
            }
        }
        for &b in &boundary {
            hasher.update((b as u64).to_le_bytes());
        }
        let digest = hasher.finalize();
        let hash = digest[..8].iter().map(|b| format!("{b:02x}")).collect();

        Ok(Self {
            grid,
            shape,
            collar_width,
            roles,
            inside,
            boundary,
            interior,
            weights,
            normals,
            hash,
        })
    }

    /// Ball of radius `0.7 L` with a collar of `0.2 L`.
    pub fn default_ball(grid: Grid) -> Result<Self> {
        let l = grid.half_width();
        Self::new(grid, DomainShape::Ball { radius: 0.7 * l }, 0.2 * l)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn shape(&self) -> DomainShape {
        self.shape
    }

    #[inline]
    pub fn collar_width(&self) -> f64 {
        self.collar_width
    }

    #[inline]
    pub fn role(&self, idx: usize) -> NodeRole {
        self.roles[idx]
    }

    /// Mask of `Omega` nodes (interior and boundary).
    #[inline]
    pub fn inside_mask(&self) -> &[bool] {
        &self.inside
    }

    /// Grid indices of the boundary nodes, ascending.
    #[inline]
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    #[inline]
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    #[inline]
    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    #[inline]
    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    /// Quadrature weights of the boundary nodes (surface elements).
    #[inline]
    pub fn boundary_weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn boundary_normals(&self) -> &[[f64; 3]] {
        &self.normals
    }

    pub fn boundary_position(&self, b: usize) -> [f64; 3] {
        self.grid.position(self.boundary[b])
    }

    /// Stable identifier of the grid and boundary node ordering.
    #[inline]
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn same_as(&self, other: &Domain) -> Result<()> {
        if self.hash == other.hash {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    /// Nodes (inside or outside `Omega`) within the collar width of the boundary.
    pub fn collar_mask(&self) -> Vec<bool> {
        self.grid
            .positions()
            .map(|x| self.shape.depth(x) < self.collar_width)
            .collect()
    }

    /// Largest deviation of `field` from `background` on the collar and outside `Omega`.
    pub fn collar_deviation(&self, field: &ScalarField, background: f64) -> f64 {
        let mask = self.collar_mask();
        field
            .values()
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| (v - background).norm())
            .fold(0.0, f64::max)
    }

    pub fn check_collar(&self, field: &ScalarField, background: f64, tol: f64) -> Result<()> {
        let deviation = self.collar_deviation(field, background);
        if deviation > tol {
            Err(Error::CollarViolation { deviation })
        } else {
            Ok(())
        }
    }
}

#[inline]
pub(crate) fn norm3(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_partition_is_consistent() {
        let g = Grid::new(24, 1.0).unwrap();
        let d = Domain::default_ball(g).unwrap();
        let n_inside = d.inside_mask().iter().filter(|&&b| b).count();
        assert_eq!(n_inside, d.n_boundary() + d.n_interior());
        for (b, &idx) in d.boundary_nodes().iter().enumerate() {
            assert_eq!(d.role(idx), NodeRole::Boundary(b));
            assert!(d.boundary_weights()[b] > 0.0);
            let nu = d.boundary_normals()[b];
            assert!((norm3(nu) - 1.0).abs() < 1e-12);
            // Outward: the normal points away from the centre on a ball.
            let x = d.boundary_position(b);
            assert!(x[0] * nu[0] + x[1] * nu[1] + x[2] * nu[2] > 0.0);
        }
    }

    #[test]
    fn domain_touching_faces_is_rejected() {
        let g = Grid::new(16, 1.0).unwrap();
        assert!(Domain::new(g, DomainShape::Ball { radius: 0.99 }, 0.1).is_err());
    }

    #[test]
    fn hash_distinguishes_domains() {
        let g = Grid::new(20, 1.0).unwrap();
        let a = Domain::new(g, DomainShape::Ball { radius: 0.7 }, 0.2).unwrap();
        let b = Domain::new(g, DomainShape::Cube { half_width: 0.6 }, 0.2).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert!(a.same_as(&b).is_err());
        let a2 = Domain::new(g, DomainShape::Ball { radius: 0.7 }, 0.2).unwrap();
        assert_eq!(a.hash(), a2.hash());
    }
}
