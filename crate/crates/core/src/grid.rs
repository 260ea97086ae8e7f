use crate::error::{Error, Result};
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};

/// Uniform planar grid. Node `(i, j)` sits at `origin + spacing * (i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub origin: Vec2,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn new(origin: Vec2, spacing: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidInput(format!("grid spacing {spacing} must be positive")));
        }
        if nx < 16 || ny < 16 {
            return Err(Error::InvalidInput(format!("grid must have >= 16 nodes per axis, got {nx}x{ny}")));
        }
        Ok(Grid2D { origin, spacing, nx, ny })
    }

    /// Square grid centered at the origin covering `[-half_width, half_width]^2`.
    pub fn centered(half_width: f64, spacing: f64) -> Result<Self> {
        let n = (2.0 * half_width / spacing).round() as usize + 1;
        let origin = Vec2::new(-half_width, -half_width);
        Grid2D::new(origin, spacing, n, n)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn pos(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + self.spacing * i as f64,
            self.origin.y + self.spacing * j as f64,
        )
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_corner(&self) -> Vec2 {
        self.pos(self.nx - 1, self.ny - 1)
    }

    /// True if the closed ball `B_r(center)` lies strictly inside the grid box.
    pub fn contains_ball(&self, center: Vec2, r: f64) -> bool {
        let hi = self.max_corner();
        center.x - r > self.origin.x
            && center.y - r > self.origin.y
            && center.x + r < hi.x
            && center.y + r < hi.y
    }

    /// Fractional index coordinates of a point.
    #[inline]
    pub fn frac_coords(&self, p: Vec2) -> (f64, f64) {
        (
            (p.x - self.origin.x) / self.spacing,
            (p.y - self.origin.y) / self.spacing,
        )
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }
}

/// Scalar samples on a [`Grid2D`], one finite value per node (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} values for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("field contains non-finite values".into()));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        let n = grid.len();
        ScalarField { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(Vec2) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.pos(i, j)));
            }
        }
        ScalarField { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Bilinear interpolation; clamps to the grid box.
    pub fn bilinear(&self, p: Vec2) -> f64 {
        let (fx, fy) = self.grid.frac_coords(p);
        let fx = fx.clamp(0.0, (self.grid.nx - 1) as f64);
        let fy = fy.clamp(0.0, (self.grid.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.grid.nx - 2);
        let j = (fy.floor() as usize).min(self.grid.ny - 2);
        let u = fx - i as f64;
        let v = fy - j as f64;
        let f00 = self.at(i, j);
        let f10 = self.at(i + 1, j);
        let f01 = self.at(i, j + 1);
        let f11 = self.at(i + 1, j + 1);
        f00 * (1.0 - u) * (1.0 - v) + f10 * u * (1.0 - v) + f01 * (1.0 - u) * v + f11 * u * v
    }

    /// Cubic Lagrange interpolation on the 4x4 neighborhood (falls back to
    /// bilinear within one cell of the box edge).
    pub fn bicubic(&self, p: Vec2) -> f64 {
        let (fx, fy) = self.grid.frac_coords(p);
        let i = fx.floor() as isize;
        let j = fy.floor() as isize;
        if i < 1 || j < 1 || i + 2 >= self.grid.nx as isize || j + 2 >= self.grid.ny as isize {
            return self.bilinear(p);
        }
        let u = fx - i as f64;
        let v = fy - j as f64;
        let wu = cubic_weights(u);
        let wv = cubic_weights(v);
        let i = i as usize;
        let j = j as usize;
        let mut acc = 0.0;
        for (dj, wj) in wv.iter().enumerate() {
            let jj = j + dj - 1;
            let mut row = 0.0;
            for (di, wi) in wu.iter().enumerate() {
                row += wi * self.at(i + di - 1, jj);
            }
            acc += wj * row;
        }
        acc
    }

    /// Five-point discrete Laplacian. Boundary nodes are set to zero.
    pub fn laplacian(&self) -> ScalarField {
        let g = &self.grid;
        let h2 = g.spacing * g.spacing;
        let mut out = vec![0.0; g.len()];
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let c = self.at(i, j);
                out[g.idx(i, j)] =
                    (self.at(i + 1, j) + self.at(i - 1, j) + self.at(i, j + 1) + self.at(i, j - 1)
                        - 4.0 * c)
                        / h2;
            }
        }
        ScalarField { grid: g.clone(), values: out }
    }
}

/// Lagrange weights through nodes {-1, 0, 1, 2} at parameter `u` in [0, 1].
fn cubic_weights(u: f64) -> [f64; 4] {
    [
        -u * (u - 1.0) * (u - 2.0) / 6.0,
        (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
        -(u + 1.0) * u * (u - 2.0) / 2.0,
        (u + 1.0) * u * (u - 1.0) / 6.0,
    ]
}

/// Boolean flags on a [`Grid2D`], one per node.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub grid: Grid2D,
    pub flags: Vec<bool>,
}

impl RegionMask {
    pub fn new(grid: Grid2D, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != grid.len() {
            return Err(Error::InvalidInput("mask length does not match grid".into()));
        }
        Ok(RegionMask { grid, flags })
    }

    pub fn empty(grid: Grid2D) -> Self {
        let n = grid.len();
        RegionMask { grid, flags: vec![false; n] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> bool {
        self.flags[self.grid.idx(i, j)]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.spacing * self.grid.spacing
    }

    pub fn complement(&self) -> RegionMask {
        RegionMask {
            grid: self.grid.clone(),
            flags: self.flags.iter().map(|f| !f).collect(),
        }
    }

    pub fn centroid(&self) -> Option<Vec2> {
        let mut acc = Vec2::ZERO;
        let mut n = 0usize;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                if self.at(i, j) {
                    acc += self.grid.pos(i, j);
                    n += 1;
                }
            }
        }
        (n > 0).then(|| acc / n as f64)
    }

    /// True if every flagged node of `self` is also flagged in `other`.
    pub fn is_subset_of(&self, other: &RegionMask) -> Result<bool> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .flags
            .iter()
            .zip(&other.flags)
            .all(|(a, b)| !*a || *b))
    }
}

/// Area of the symmetric difference of two masks on the same grid:
/// `spacing^2` times the number of nodes where the flags differ.
pub fn symmetric_difference_area(a: &RegionMask, b: &RegionMask) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let n = a
        .flags
        .iter()
        .zip(&b.flags)
        .filter(|(x, y)| *x != *y)
        .count();
    Ok(n as f64 * a.grid.spacing * a.grid.spacing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn disk_mask(grid: &Grid2D, center: Vec2, r: f64) -> RegionMask {
        let mut m = RegionMask::empty(grid.clone());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if grid.pos(i, j).dist(center) <= r {
                    let idx = grid.idx(i, j);
                    m.flags[idx] = true;
                }
            }
        }
        m
    }

    #[test]
    fn symmetric_difference_of_identical_masks_is_zero() {
        let g = Grid2D::centered(1.0, 1.0 / 64.0).unwrap();
        let a = disk_mask(&g, Vec2::ZERO, 0.4);
        assert_eq!(symmetric_difference_area(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_difference_concentric_disks() {
        let g = Grid2D::centered(1.0, 1.0 / 128.0).unwrap();
        let a = disk_mask(&g, Vec2::ZERO, 0.4);
        let b = disk_mask(&g, Vec2::ZERO, 0.3);
        let area = symmetric_difference_area(&a, &b).unwrap();
        let exact = PI * (0.16 - 0.09);
        // tolerance 4 * spacing * perimeter of the two circles
        let tol = 4.0 * g.spacing * 2.0 * PI * (0.4 + 0.3);
        assert!((area - exact).abs() < tol, "area {area} vs {exact}");
    }

    #[test]
    fn symmetric_difference_offset_disks_matches_refined_grid() {
        let g = Grid2D::centered(1.0, 1.0 / 128.0).unwrap();
        let a = disk_mask(&g, Vec2::ZERO, 0.4);
        let b = disk_mask(&g, Vec2::new(0.02, 0.0), 0.4);
        let coarse = symmetric_difference_area(&a, &b).unwrap();

        // refined-grid oracle: same computation at twice the resolution
        let g2 = Grid2D::centered(1.0, 1.0 / 256.0).unwrap();
        let a2 = disk_mask(&g2, Vec2::ZERO, 0.4);
        let b2 = disk_mask(&g2, Vec2::new(0.02, 0.0), 0.4);
        let fine = symmetric_difference_area(&a2, &b2).unwrap();

        assert!(
            (coarse - fine).abs() <= 0.02 * fine.max(coarse),
            "coarse {coarse} fine {fine}"
        );
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = RegionMask::empty(Grid2D::centered(1.0, 1.0 / 32.0).unwrap());
        let b = RegionMask::empty(Grid2D::centered(1.0, 1.0 / 64.0).unwrap());
        assert!(matches!(
            symmetric_difference_area(&a, &b),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn bicubic_reproduces_cubics() {
        let g = Grid2D::centered(1.0, 1.0 / 16.0).unwrap();
        let f = ScalarField::from_fn(g, |p| p.x * p.x * p.x - 2.0 * p.x * p.y * p.y + 0.5);
        let p = Vec2::new(0.13377, -0.2921);
        let exact = p.x * p.x * p.x - 2.0 * p.x * p.y * p.y + 0.5;
        assert!((f.bicubic(p) - exact).abs() < 1e-12);
    }

    #[test]
    fn laplacian_of_quadratic_is_exact() {
        let g = Grid2D::centered(1.0, 1.0 / 32.0).unwrap();
        let f = ScalarField::from_fn(g, |p| -0.5 * p.norm2());
        let lap = f.laplacian();
        for j in 1..lap.grid.ny - 1 {
            for i in 1..lap.grid.nx - 1 {
                assert!((lap.at(i, j) + 2.0).abs() < 1e-10);
            }
        }
    }
}
