//! Structured quadrilateral meshes on axis-aligned rectangles.
//!
//! Elements are uniform rectangles, indexed lexicographically: element
//! `(ex, ey)` has linear index `ex * ny + ey`. Connectivity is formulaic, so
//! no tables are stored.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Axis-aligned rectangular domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let tol = 1e-12 * self.width().max(self.height());
        x >= self.x0 - tol && x <= self.x1 + tol && y >= self.y0 - tol && y <= self.y1 + tol
    }
}

/// Uniform partition of a rectangle into `nx * ny` elements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
    /// Element size per axis, derived.
    pub hx: f64,
    pub hy: f64,
}

impl MeshSpec {
    /// Build a structured mesh. Rejects degenerate domains and zero counts.
    pub fn build(domain: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh(format!(
                "element counts must be positive, got nx={nx}, ny={ny}"
            )));
        }
        if domain.width() <= 0.0 || domain.height() <= 0.0 {
            return Err(Error::InvalidMesh("degenerate domain".into()));
        }
        Ok(MeshSpec {
            domain,
            nx,
            ny,
            hx: domain.width() / nx as f64,
            hy: domain.height() / ny as f64,
        })
    }

    /// Unit square shortcut used throughout the experiments.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::build(Rect::UNIT, n, n)
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.ny
    }

    /// Largest element side, the `h` of the estimates.
    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }

    pub fn element_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// Lower-left corner of element `(ex, ey)`.
    pub fn element_origin(&self, ex: usize, ey: usize) -> (f64, f64) {
        (
            self.domain.x0 + ex as f64 * self.hx,
            self.domain.y0 + ey as f64 * self.hy,
        )
    }

    /// Element owning `(x, y)`, with the lexicographic tie-break: points on
    /// inter-element boundaries belong to the element with the larger index
    /// range start, i.e. floor division clamped to the last element.
    pub fn element_of(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        if !self.domain.contains(x, y) {
            return Err(Error::OutOfDomain { x, y });
        }
        let ex = (((x - self.domain.x0) / self.hx).floor() as isize)
            .clamp(0, self.nx as isize - 1) as usize;
        let ey = (((y - self.domain.y0) / self.hy).floor() as isize)
            .clamp(0, self.ny as isize - 1) as usize;
        Ok((ex, ey))
    }

    /// Map `(x, y)` to reference coordinates of its owning element.
    pub fn to_reference(&self, ex: usize, ey: usize, x: f64, y: f64) -> (f64, f64) {
        let (ox, oy) = self.element_origin(ex, ey);
        (2.0 * (x - ox) / self.hx - 1.0, 2.0 * (y - oy) / self.hy - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_unit_square() {
        let m = MeshSpec::unit_square(1).unwrap();
        assert_eq!(m.n_elements(), 1);
        assert!((m.element_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn paper_reference_grid() {
        let m = MeshSpec::unit_square(120).unwrap();
        assert_eq!(m.n_elements(), 14400);
        assert!((m.h() - 1.0 / 120.0).abs() < 1e-15);
    }

    #[test]
    fn element_areas_partition_domain() {
        let m = MeshSpec::unit_square(3).unwrap();
        let total: f64 = (0..m.n_elements()).map(|_| m.element_area()).sum();
        assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(MeshSpec::build(Rect::UNIT, 0, 3).is_err());
        assert!(MeshSpec::build(Rect::UNIT, 3, 0).is_err());
    }

    #[test]
    fn element_lookup_with_tie_break() {
        let m = MeshSpec::unit_square(4).unwrap();
        // interior boundary x = 0.25 belongs to element 1 (floor rule)
        assert_eq!(m.element_of(0.25, 0.1).unwrap(), (1, 0));
        // domain edge clamps to the last element
        assert_eq!(m.element_of(1.0, 1.0).unwrap(), (3, 3));
        assert!(m.element_of(1.5, 0.5).is_err());
    }
}
