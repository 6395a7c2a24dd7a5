use super::ObstacleSet;
use crate::scalar::Real;

/// Fluid/solid flags on a regular grid (`true` = fluid).
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask<T> {
    rows: usize,
    cols: usize,
    fluid: Vec<bool>,
    /// Cell extent `(dx, dy)` in meters.
    cell: (T, T),
}

impl<T: Real> BinaryMask<T> {
    /// All-fluid mask covering `domain` with `dims = (rows, cols)` cells.
    pub fn all_fluid(dims: (usize, usize), domain: (T, T)) -> Self {
        let (rows, cols) = dims;
        Self {
            rows,
            cols,
            fluid: vec![true; rows * cols],
            cell: (
                domain.0 / T::from_usize_lossy(cols.max(1)),
                domain.1 / T::from_usize_lossy(rows.max(1)),
            ),
        }
    }

    pub fn from_flags(dims: (usize, usize), cell: (T, T), fluid: Vec<bool>) -> Self {
        assert_eq!(fluid.len(), dims.0 * dims.1, "mask flag count must match dims");
        Self {
            rows: dims.0,
            cols: dims.1,
            fluid,
            cell,
        }
    }

    /// `(rows, cols)` = `(H, W)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_size(&self) -> (T, T) {
        self.cell
    }

    pub fn len(&self) -> usize {
        self.fluid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fluid.is_empty()
    }

    #[inline]
    pub fn is_fluid(&self, row: usize, col: usize) -> bool {
        self.fluid[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, fluid: bool) {
        self.fluid[row * self.cols + col] = fluid;
    }

    pub fn flags(&self) -> &[bool] {
        &self.fluid
    }

    pub fn fluid_count(&self) -> usize {
        self.fluid.iter().filter(|&&f| f).count()
    }

    pub fn solid_count(&self) -> usize {
        self.len() - self.fluid_count()
    }

    /// Cell-center coordinates of `(row, col)`.
    pub fn center(&self, row: usize, col: usize) -> (T, T) {
        (
            (T::from_usize_lossy(col) + T::half()) * self.cell.0,
            (T::from_usize_lossy(row) + T::half()) * self.cell.1,
        )
    }

    pub fn domain(&self) -> (T, T) {
        (
            self.cell.0 * T::from_usize_lossy(self.cols),
            self.cell.1 * T::from_usize_lossy(self.rows),
        )
    }
}

/// Staircase rasterization: a cell is solid iff its center lies inside some
/// obstacle.
pub fn rasterize_mask<T: Real>(obs: &ObstacleSet<T>, grid_dims: (usize, usize)) -> BinaryMask<T> {
    let mut mask = BinaryMask::all_fluid(grid_dims, obs.domain_size);
    for row in 0..mask.rows {
        for col in 0..mask.cols {
            let (cx, cy) = mask.center(row, col);
            if obs.contains(cx, cy) {
                mask.set(row, col, false);
            }
        }
    }
    mask
}
