use alloc::format;

use crate::error::{Error, Result};

/// Boundary treatment of a uniform grid on the unit interval, square or cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Homogeneous Dirichlet: `N + 2` nodes, the two boundary nodes are eliminated.
    Dirichlet,
    /// Periodic: `N + 1` nodes, the right-most one is identified with the left-most.
    Periodic,
}

/// Uniform tensor-product grid with `n` unknowns per axis.
///
/// Fields are flattened row-major with axis 0 varying slowest, so the stride of
/// axis `a` is `n^(dim - 1 - a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    dim: usize,
    n: usize,
    boundary: Boundary,
    staggered: bool,
}

impl Grid {
    pub fn new(dim: usize, n: usize, boundary: Boundary) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points per axis, got {n}")));
        }
        Ok(Self { dim, n, boundary, staggered: false })
    }

    pub fn dirichlet(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, Boundary::Dirichlet)
    }

    pub fn periodic(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, Boundary::Periodic)
    }

    /// Biperiodic 2D grid with backward staggering: `u1` on vertical faces,
    /// `u2` on horizontal faces, pressure at cell centers.
    pub fn staggered(n: usize) -> Result<Self> {
        let mut g = Self::new(2, n, Boundary::Periodic)?;
        g.staggered = true;
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_staggered(&self) -> bool {
        self.staggered
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn spacing(&self) -> f64 {
        match self.boundary {
            Boundary::Dirichlet => 1.0 / (self.n as f64 + 1.0),
            Boundary::Periodic => 1.0 / self.n as f64,
        }
    }

    /// Unknowns per scalar field, `n^dim`.
    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Scalar fields per state: 3 (`u1`, `u2`, `p`) on staggered grids, else 1.
    pub fn components(&self) -> usize {
        if self.staggered {
            3
        } else {
            1
        }
    }

    pub fn dofs(&self) -> usize {
        self.components() * self.points()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Coordinate of the unknown `j` along an axis (collocated nodes).
    pub fn node(&self, j: usize) -> f64 {
        match self.boundary {
            Boundary::Dirichlet => (j + 1) as f64 * self.spacing(),
            Boundary::Periodic => j as f64 * self.spacing(),
        }
    }

    /// Index of the neighbor `offset` cells away along `axis`, or `None` if it
    /// falls on an eliminated Dirichlet node.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, offset: isize) -> Option<usize> {
        let s = self.stride(axis);
        let c = (idx / s) % self.n;
        let n = self.n as isize;
        let t = c as isize + offset;
        let t = if (0..n).contains(&t) {
            t
        } else if self.is_periodic() {
            t.rem_euclid(n)
        } else {
            return None;
        };
        Some(idx - c * s + t as usize * s)
    }

    pub(crate) fn check_len(&self, len: usize, expected: usize) -> Result<()> {
        if len == expected {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { expected, got: len })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_follows_boundary() {
        assert_eq!(Grid::dirichlet(1, 3).unwrap().spacing(), 0.25);
        assert_eq!(Grid::periodic(1, 4).unwrap().spacing(), 0.25);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::dirichlet(1, 1).is_err());
        assert!(Grid::dirichlet(4, 8).is_err());
    }

    #[test]
    fn staggered_dofs() {
        let g = Grid::staggered(6).unwrap();
        assert_eq!(g.dofs(), 108);
    }

    #[test]
    fn neighbors_wrap_or_vanish() {
        let p = Grid::periodic(2, 3).unwrap();
        assert_eq!(p.neighbor(0, 0, -1), Some(6));
        assert_eq!(p.neighbor(2, 1, 1), Some(0));
        let d = Grid::dirichlet(2, 3).unwrap();
        assert_eq!(d.neighbor(0, 0, -1), None);
        assert_eq!(d.neighbor(4, 1, 1), Some(5));
    }
}
