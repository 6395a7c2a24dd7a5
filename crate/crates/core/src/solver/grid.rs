//! Staggered (MAC) storage.
//!
//! ```text
//! u[i, j]  i in 0..=nx, j in 0..ny   at (i dx, (j + 1/2) dy)
//! v[i, j]  i in 0..nx,  j in 0..=ny  at ((i + 1/2) dx, j dy)
//! p[i, j]  i in 0..nx,  j in 0..ny   at cell centers
//! ```
//! `i` is the column and `j` the row; row 0 touches the bottom wall.

use crate::geometry::BinaryMask;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacGrid<T> {
    pub nx: usize,
    pub ny: usize,
    pub dx: T,
    pub dy: T,
}

impl<T: Real> MacGrid<T> {
    pub fn from_mask(mask: &BinaryMask<T>) -> Self {
        let (dx, dy) = mask.cell_size();
        Self {
            nx: mask.cols(),
            ny: mask.rows(),
            dx,
            dy,
        }
    }

    #[inline]
    pub fn u_idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn v_idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn p_idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn n_u(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn n_v(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn h_min(&self) -> T {
        self.dx.min(self.dy)
    }
}

/// Velocity and kinematic pressure at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<T> {
    pub grid: MacGrid<T>,
    pub u: Vec<T>,
    pub v: Vec<T>,
    pub p: Vec<T>,
    pub t: T,
}

impl<T: Real> FlowState<T> {
    /// Fluid at rest.
    pub fn rest(grid: MacGrid<T>) -> Self {
        Self {
            grid,
            u: vec![T::zero(); grid.n_u()],
            v: vec![T::zero(); grid.n_v()],
            p: vec![T::zero(); grid.n_cells()],
            t: T::zero(),
        }
    }

    pub fn u_at(&self, i: usize, j: usize) -> T {
        self.u[self.grid.u_idx(i, j)]
    }

    pub fn v_at(&self, i: usize, j: usize) -> T {
        self.v[self.grid.v_idx(i, j)]
    }

    pub fn max_speed(&self) -> T {
        let mu = self.u.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        self.v.iter().fold(mu, |m, x| m.max(x.abs()))
    }

    /// `½ Σ |u_f|² dx dy` over all faces.
    pub fn kinetic_energy(&self) -> T {
        let su: T = self.u.iter().map(|&x| x * x).sum();
        let sv: T = self.v.iter().map(|&x| x * x).sum();
        T::half() * (su + sv) * self.grid.dx * self.grid.dy
    }

    /// Cell-centered velocity `(u_c, v_c)` by face averaging.
    pub fn cell_velocity(&self, i: usize, j: usize) -> (T, T) {
        (
            T::half() * (self.u_at(i, j) + self.u_at(i + 1, j)),
            T::half() * (self.v_at(i, j) + self.v_at(i, j + 1)),
        )
    }

    /// Pressure shifted to zero mean over the fluid cells of `mask`.
    pub fn gauge_pressure(&self, mask: &BinaryMask<T>) -> Vec<T> {
        let g = &self.grid;
        let mut sum = T::zero();
        let mut n = 0usize;
        for j in 0..g.ny {
            for i in 0..g.nx {
                if mask.is_fluid(j, i) {
                    sum += self.p[g.p_idx(i, j)];
                    n += 1;
                }
            }
        }
        let mean = if n > 0 { sum / T::from_usize_lossy(n) } else { T::zero() };
        let mut out = vec![T::zero(); g.n_cells()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                if mask.is_fluid(j, i) {
                    out[g.p_idx(i, j)] = self.p[g.p_idx(i, j)] - mean;
                }
            }
        }
        out
    }
}

/// Staggered divergence `(u_e - u_w)/dx + (v_n - v_s)/dy` per fluid cell,
/// zero in solid cells.
pub fn divergence<T: Real>(state: &FlowState<T>, mask: &BinaryMask<T>) -> Vec<T> {
    let g = &state.grid;
    let mut out = vec![T::zero(); g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            if mask.is_fluid(j, i) {
                out[g.p_idx(i, j)] = (state.u_at(i + 1, j) - state.u_at(i, j)) / g.dx
                    + (state.v_at(i, j + 1) - state.v_at(i, j)) / g.dy;
            }
        }
    }
    out
}

/// `max |∇·u| · h / u_ref` over fluid cells.
pub fn scaled_max_divergence<T: Real>(state: &FlowState<T>, mask: &BinaryMask<T>, u_ref: T) -> T {
    let h = state.grid.h_min();
    divergence(state, mask)
        .into_iter()
        .fold(T::zero(), |m, d| m.max(d.abs()))
        * h
        / u_ref
}
