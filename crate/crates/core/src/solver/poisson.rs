//! Pressure Poisson equation on the fluid cells of a masked grid.
//!
//! The operator is the negative 5-point Laplacian (symmetric positive
//! semi-definite). Walls and solid neighbours close the stencil with a zero
//! normal gradient; an outlet face on the east side carries `p = 0`.
//! Solved with conjugate gradients preconditioned by a diagonal-based
//! incomplete Cholesky factorization with modified (MIC(0)) pivots, falling
//! back to plain IC(0) and then Jacobi on a non-positive pivot.

use super::SolverError;
use crate::geometry::BinaryMask;
use crate::scalar::Real;

/// Fraction of dropped fill-in moved onto the diagonal.
const MIC_TAU: f64 = 0.97;

#[derive(Debug, Clone)]
pub struct PoissonOperator<T> {
    nx: usize,
    ny: usize,
    /// Unknown number of each cell, `None` for solid cells.
    unknown: Vec<Option<usize>>,
    /// Cell index of each unknown.
    cells: Vec<usize>,
    diag: Vec<T>,
    /// West and south couplings `(unknown, 1/h²)`; the matrix entry is the
    /// negated weight. Missing neighbours point at the row itself with
    /// weight zero.
    lower: Vec<[(usize, T); 2]>,
    /// East and north couplings, same convention.
    upper: Vec<[(usize, T); 2]>,
    singular: bool,
    pc: Preconditioner<T>,
}

/// Stopping rule: every criterion present must hold.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    /// `‖r‖₂ ≤ rel · ‖b‖₂`.
    pub rel: Option<T>,
    /// `‖r‖∞ ≤ abs_inf`.
    pub abs_inf: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub used_fallback: bool,
}

#[derive(Debug, Clone)]
enum Preconditioner<T> {
    /// Reciprocal DIC pivots.
    Dic(Vec<T>),
    Jacobi(Vec<T>),
}

impl<T: Real> PoissonOperator<T> {
    /// Builds the operator; `outlet_east` puts a `p = 0` face on the east
    /// boundary of every fluid cell in the last column.
    pub fn new(mask: &BinaryMask<T>, outlet_east: bool) -> Self {
        let (ny, nx) = mask.dims();
        let (dx, dy) = mask.cell_size();
        let wx = T::one() / (dx * dx);
        let wy = T::one() / (dy * dy);

        let mut unknown = vec![None; nx * ny];
        let mut cells = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                if mask.is_fluid(j, i) {
                    unknown[j * nx + i] = Some(cells.len());
                    cells.push(j * nx + i);
                }
            }
        }
        let n = cells.len();
        let mut diag = vec![T::zero(); n];
        let mut lower: Vec<[(usize, T); 2]> = (0..n).map(|k| [(k, T::zero()); 2]).collect();
        let mut upper = lower.clone();
        let mut dirichlet = false;
        for (k, &c) in cells.iter().enumerate() {
            let (i, j) = (c % nx, c / nx);
            let link = |ii: usize, jj: usize| unknown[jj * nx + ii];
            if i + 1 < nx {
                if let Some(o) = link(i + 1, j) {
                    upper[k][0] = (o, wx);
                    diag[k] += wx;
                }
            } else if outlet_east {
                diag[k] += T::two() * wx;
                dirichlet = true;
            }
            if i > 0 {
                if let Some(o) = link(i - 1, j) {
                    lower[k][0] = (o, wx);
                    diag[k] += wx;
                }
            }
            if j + 1 < ny {
                if let Some(o) = link(i, j + 1) {
                    upper[k][1] = (o, wy);
                    diag[k] += wy;
                }
            }
            if j > 0 {
                if let Some(o) = link(i, j - 1) {
                    lower[k][1] = (o, wy);
                    diag[k] += wy;
                }
            }
        }
        let mut op = Self {
            nx,
            ny,
            unknown,
            cells,
            diag,
            lower,
            upper,
            singular: !dirichlet,
            pc: Preconditioner::Jacobi(Vec::new()),
        };
        op.pc = op.preconditioner();
        op
    }

    pub fn n_unknowns(&self) -> usize {
        self.cells.len()
    }

    /// Whether constants lie in the null space (no Dirichlet face).
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.ny, self.nx)
    }

    /// Gathers fluid-cell values of a full cell field.
    pub fn gather(&self, field: &[T]) -> Vec<T> {
        self.cells.iter().map(|&c| field[c]).collect()
    }

    /// Scatters unknowns into a full cell field (solid cells untouched).
    pub fn scatter(&self, x: &[T], field: &mut [T]) {
        for (k, &c) in self.cells.iter().enumerate() {
            field[c] = x[k];
        }
    }

    pub fn unknown_of(&self, cell: usize) -> Option<usize> {
        self.unknown[cell]
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        for k in 0..x.len() {
            let [w, s] = self.lower[k];
            let [e, n] = self.upper[k];
            y[k] = self.diag[k] * x[k] - w.1 * x[w.0] - s.1 * x[s.0] - e.1 * x[e.0] - n.1 * x[n.0];
        }
    }

    /// Dense copy of the matrix, row-major; intended for tests and
    /// diagnostics on small grids.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n_unknowns();
        let mut a = vec![vec![0.0; n]; n];
        for (k, row) in a.iter_mut().enumerate() {
            row[k] = self.diag[k].to_f64_lossy();
            for nb in self.lower[k].iter().chain(&self.upper[k]) {
                if nb.1 != T::zero() {
                    row[nb.0] = -nb.1.to_f64_lossy();
                }
            }
        }
        a
    }

    /// Reciprocal pivots of the incomplete factorization with fill-in
    /// compensation `tau`, or `None` on a non-positive pivot.
    fn factor(&self, tau: T) -> Option<Vec<T>> {
        let n = self.n_unknowns();
        let mut rd = vec![T::zero(); n];
        for k in 0..n {
            let mut d = self.diag[k];
            let [w, s] = self.lower[k];
            // West neighbour's north coupling and south neighbour's east
            // coupling are the fill-in dropped by IC(0).
            d -= (w.1 * w.1 + tau * w.1 * self.upper[w.0][1].1) * rd[w.0];
            d -= (s.1 * s.1 + tau * s.1 * self.upper[s.0][0].1) * rd[s.0];
            if d.is_nan() || d <= self.diag[k] * T::lit(1e-12) {
                return None;
            }
            rd[k] = T::one() / d;
        }
        Some(rd)
    }

    fn preconditioner(&self) -> Preconditioner<T> {
        self.factor(T::lit(MIC_TAU))
            .or_else(|| self.factor(T::zero()))
            .map(Preconditioner::Dic)
            .unwrap_or_else(|| Preconditioner::Jacobi(self.diag.iter().map(|&a| T::one() / a).collect()))
    }

    fn precondition(&self, r: &[T], z: &mut [T]) {
        match &self.pc {
            Preconditioner::Jacobi(inv) => {
                for k in 0..r.len() {
                    z[k] = inv[k] * r[k];
                }
            }
            Preconditioner::Dic(rd) => {
                let n = r.len();
                // Padding entries point at row k with zero weight; z[k] is
                // finite (zeroed) before it is read through them.
                z[..n].iter_mut().for_each(|v| *v = T::zero());
                for k in 0..n {
                    let [w, s] = self.lower[k];
                    z[k] = rd[k] * (r[k] + w.1 * z[w.0] + s.1 * z[s.0]);
                }
                for k in (0..n).rev() {
                    let [e, nn] = self.upper[k];
                    z[k] += rd[k] * (e.1 * z[e.0] + nn.1 * z[nn.0]);
                }
            }
        }
    }

    /// Preconditioned CG for `A x = b`, starting from the given `x`.
    ///
    /// For a singular operator `b` must already be compatible (zero sum);
    /// iterates are kept mean-free.
    pub fn solve(
        &self,
        b: &[T],
        x: &mut [T],
        tol: Tolerance<T>,
        max_iters: usize,
    ) -> Result<SolveStats, SolverError> {
        let n = b.len();
        let used_fallback = matches!(self.pc, Preconditioner::Jacobi(_));
        let b_norm = norm2(b);
        let converged = |r: &[T]| -> bool {
            let rel_ok = tol.rel.is_none_or(|t| norm2(r) <= t * b_norm);
            let abs_ok = tol
                .abs_inf
                .is_none_or(|t| r.iter().fold(T::zero(), |m, v| m.max(v.abs())) <= t);
            rel_ok && abs_ok
        };

        if self.singular {
            remove_mean(x);
        }
        let mut r = vec![T::zero(); n];
        let mut ax = vec![T::zero(); n];
        self.apply(x, &mut ax);
        for k in 0..n {
            r[k] = b[k] - ax[k];
        }
        if converged(&r) {
            return Ok(SolveStats { iterations: 0, used_fallback });
        }

        let mut z = vec![T::zero(); n];
        let mut p = vec![T::zero(); n];
        let mut q = vec![T::zero(); n];
        let mut iterations = 0;
        // Outer loop restarts from the true residual if the recursive one
        // claims convergence too early.
        loop {
            self.precondition(&r, &mut z);
            if self.singular {
                remove_mean(&mut z);
            }
            p.copy_from_slice(&z);
            let mut rz = dot(&r, &z);
            loop {
                if iterations >= max_iters {
                    return Err(SolverError::PressureDiverged {
                        iterations,
                        residual: norm2(&r).to_f64_lossy(),
                    });
                }
                iterations += 1;
                self.apply(&p, &mut q);
                let pq = dot(&p, &q);
                if pq <= T::zero() {
                    break;
                }
                let alpha = rz / pq;
                for k in 0..n {
                    x[k] += alpha * p[k];
                    r[k] -= alpha * q[k];
                }
                if converged(&r) {
                    break;
                }
                self.precondition(&r, &mut z);
                if self.singular {
                    remove_mean(&mut z);
                }
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                for k in 0..n {
                    p[k] = z[k] + beta * p[k];
                }
            }
            if self.singular {
                remove_mean(x);
            }
            self.apply(x, &mut ax);
            for k in 0..n {
                r[k] = b[k] - ax[k];
            }
            if converged(&r) {
                return Ok(SolveStats { iterations, used_fallback });
            }
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn remove_mean<T: Real>(x: &mut [T]) {
    if x.is_empty() {
        return;
    }
    let mean = x.iter().copied().sum::<T>() / T::from_usize_lossy(x.len());
    x.iter_mut().for_each(|v| *v -= mean);
}

/// Solves `∇²p = rhs` on the fluid cells of `mask` with zero normal
/// gradient on every wall and obstacle face.
///
/// `rhs` is a full cell field (solid entries ignored) whose fluid-cell sum
/// must vanish to within `1e-10` of its L1 norm. The result is zero-mean
/// over fluid cells and satisfies `‖∇²p - rhs‖₂ ≤ p_tol ‖rhs‖₂`.
pub fn solve_pressure_poisson<T: Real>(
    rhs: &[T],
    mask: &BinaryMask<T>,
    params: &super::SolverParams<T>,
) -> Result<Vec<T>, SolverError> {
    let op = PoissonOperator::new(mask, false);
    assert_eq!(rhs.len(), mask.len(), "rhs must be a full cell field");
    // A = -∇², so A p = -rhs.
    let b: Vec<T> = op.gather(rhs).into_iter().map(|v| -v).collect();
    let sum: T = b.iter().copied().sum();
    let l1: T = b.iter().map(|v| v.abs()).sum();
    if sum.abs() > T::lit(1e-10) * l1 {
        return Err(SolverError::IncompatibleRhs {
            relative_mean: (sum / l1).to_f64_lossy(),
        });
    }
    let mut x = vec![T::zero(); b.len()];
    if l1 > T::zero() {
        op.solve(
            &b,
            &mut x,
            Tolerance { rel: Some(params.p_tol), abs_inf: None },
            params.max_cg_iters,
        )?;
    }
    let mut p = vec![T::zero(); rhs.len()];
    op.scatter(&x, &mut p);
    Ok(p)
}
