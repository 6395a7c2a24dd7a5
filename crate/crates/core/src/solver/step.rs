use super::grid::{FlowState, MacGrid};
use super::poisson::{PoissonOperator, Tolerance};
use super::{CaseSetup, SolverError};
use crate::physics::FlowKind;
use crate::scalar::Real;



/// Work counters of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub cg_iters: usize,
    pub momentum_sweeps: usize,
}

/// Role of a velocity face.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Face<T> {
    /// Interior face between two fluid cells: solved for.
    Open,
    /// Prescribed value (wall, inlet, lid-adjacent or solid face).
    Fixed(T),
    /// Outflow face: zero-gradient predictor, corrected by the projection.
    Outlet,
}

/// One row of the backward-Euler momentum system
/// `(1 + a_x c_x + a_y c_y) φ_P - a_x Σ φ_x - a_y Σ φ_y = b + a_y w`.
#[derive(Debug, Clone)]
struct MomentumRow<T> {
    idx: usize,
    cx: T,
    cy: T,
    nbr_x: [Option<usize>; 2],
    nbr_y: [Option<usize>; 2],
    /// Wall-speed term from reflected ghost neighbours.
    wall: T,
}

const GHOST: isize = 2;

/// A face field on `ni × nj` positions plus `GHOST` layers on every side.
struct Padded<T> {
    data: Vec<T>,
    width: isize,
}

impl<T: Real> Padded<T> {
    fn fill(ni: isize, nj: isize, f: impl Fn(isize, isize) -> T) -> Self {
        let width = ni + 2 * GHOST;
        let mut data = Vec::with_capacity((width * (nj + 2 * GHOST)) as usize);
        for j in -GHOST..nj + GHOST {
            for i in -GHOST..ni + GHOST {
                data.push(f(i, j));
            }
        }
        Self { data, width }
    }

    #[inline]
    fn at(&self, i: isize, j: isize) -> T {
        self.data[((j + GHOST) * self.width + i + GHOST) as usize]
    }
}

/// Precomputed per-case operators; reusable across steps.
#[derive(Debug, Clone)]
pub struct Stepper<T> {
    grid: MacGrid<T>,
    kind: FlowKind,
    nu: T,
    /// Lid speed (LDC) or zero.
    u_top: T,
    boundary_speed: T,
    cfl: T,
    p_tol: T,
    u_tol: T,
    max_cg_iters: usize,
    u_faces: Vec<Face<T>>,
    v_faces: Vec<Face<T>>,
    u_rows: Vec<MomentumRow<T>>,
    v_rows: Vec<MomentumRow<T>>,
    poisson: PoissonOperator<T>,
    fluid: Vec<bool>,
}

#[inline]
fn recon<T: Real>(up2: T, up: T, down: T, down2: T, w: T) -> T {
    // Linear-upwind face value between `up` and `down`; `up2`/`down2` are
    // the next values outward on either side.
    let q = T::lit(0.25);
    if w >= T::zero() {
        up + q * (down - up2)
    } else {
        down + q * (up - down2)
    }
}

impl<T: Real> Stepper<T> {
    pub fn new(case: &CaseSetup<T>) -> Self {
        let mask = &case.mask;
        let grid = MacGrid::from_mask(mask);
        let (nx, ny) = (grid.nx, grid.ny);
        let fpo = case.kind() == FlowKind::Fpo;
        let u_top = if fpo { T::zero() } else { case.boundary.speed };
        let fluid = |i: usize, j: usize| mask.is_fluid(j, i);

        let mut u_faces = vec![Face::Fixed(T::zero()); grid.n_u()];
        for j in 0..ny {
            let y = (T::from_usize_lossy(j) + T::half()) * grid.dy;
            for i in 0..=nx {
                let f = if i == 0 {
                    if fpo && fluid(0, j) {
                        Face::Fixed(case.inlet_speed(y))
                    } else {
                        Face::Fixed(T::zero())
                    }
                } else if i == nx {
                    if fpo && fluid(nx - 1, j) {
                        Face::Outlet
                    } else {
                        Face::Fixed(T::zero())
                    }
                } else if fluid(i - 1, j) && fluid(i, j) {
                    Face::Open
                } else {
                    Face::Fixed(T::zero())
                };
                u_faces[grid.u_idx(i, j)] = f;
            }
        }
        let mut v_faces = vec![Face::Fixed(T::zero()); grid.n_v()];
        for j in 1..ny {
            for i in 0..nx {
                if fluid(i, j - 1) && fluid(i, j) {
                    v_faces[grid.v_idx(i, j)] = Face::Open;
                }
            }
        }

        let two = T::two();
        let mut u_rows = Vec::new();
        for j in 0..ny {
            for i in 1..nx {
                if u_faces[grid.u_idx(i, j)] != Face::Open {
                    continue;
                }
                let mut row = MomentumRow {
                    idx: grid.u_idx(i, j),
                    cx: T::zero(),
                    cy: T::zero(),
                    nbr_x: [None; 2],
                    nbr_y: [None; 2],
                    wall: T::zero(),
                };
                for (s, ii) in [i - 1, i + 1].into_iter().enumerate() {
                    // Zero-gradient outlet neighbours drop out of the stencil.
                    if u_faces[grid.u_idx(ii, j)] != Face::Outlet {
                        row.cx += T::one();
                        row.nbr_x[s] = Some(grid.u_idx(ii, j));
                    }
                }
                for (s, jj) in [j.checked_sub(1), (j + 1 < ny).then_some(j + 1)].into_iter().enumerate() {
                    match jj {
                        Some(jj) => {
                            row.cy += T::one();
                            row.nbr_y[s] = Some(grid.u_idx(i, jj));
                        }
                        None => {
                            let wall = if s == 1 { u_top } else { T::zero() };
                            row.cy += two;
                            row.wall += two * wall;
                        }
                    }
                }
                u_rows.push(row);
            }
        }
        let mut v_rows = Vec::new();
        for j in 1..ny {
            for i in 0..nx {
                if v_faces[grid.v_idx(i, j)] != Face::Open {
                    continue;
                }
                let mut row = MomentumRow {
                    idx: grid.v_idx(i, j),
                    cx: T::zero(),
                    cy: T::zero(),
                    nbr_x: [None; 2],
                    nbr_y: [None; 2],
                    wall: T::zero(),
                };
                for (s, ii) in [i.checked_sub(1), (i + 1 < nx).then_some(i + 1)].into_iter().enumerate() {
                    match ii {
                        Some(ii) => {
                            row.cx += T::one();
                            row.nbr_x[s] = Some(grid.v_idx(ii, j));
                        }
                        // Outlet: zero gradient, no contribution.
                        None if fpo && s == 1 => {}
                        None => row.cx += two,
                    }
                }
                for (s, jj) in [j - 1, j + 1].into_iter().enumerate() {
                    row.cy += T::one();
                    row.nbr_y[s] = Some(grid.v_idx(i, jj));
                }
                v_rows.push(row);
            }
        }

        Self {
            grid,
            kind: case.kind(),
            nu: case.fluid.nu,
            u_top,
            boundary_speed: case.boundary.speed,
            cfl: case.solver.cfl,
            p_tol: case.solver.p_tol,
            u_tol: case.solver.u_tol,
            max_cg_iters: case.solver.max_cg_iters,
            u_faces,
            v_faces,
            u_rows,
            v_rows,
            poisson: PoissonOperator::new(mask, fpo),
            fluid: mask.flags().to_vec(),
        }
    }

    pub fn grid(&self) -> &MacGrid<T> {
        &self.grid
    }

    /// Reference speed for CFL and divergence scaling: the driving boundary
    /// speed, or the largest velocity when the boundary is at rest, never
    /// below the viscous speed `ν / h`.
    pub fn reference_speed(&self, state: &FlowState<T>) -> T {
        let base = if self.boundary_speed > T::zero() {
            self.boundary_speed
        } else {
            state.max_speed()
        };
        base.max(self.nu / self.grid.h_min())
    }

    /// `cfl · h / max(|u|, u_ref)`.
    pub fn cfl_dt(&self, state: &FlowState<T>) -> T {
        let speed = state.max_speed().max(self.reference_speed(state));
        self.cfl * self.grid.h_min() / speed
    }

    /// Writes boundary values into every non-open face.
    pub fn apply_boundary(&self, u: &mut [T], v: &mut [T]) {
        let g = &self.grid;
        for (k, f) in self.u_faces.iter().enumerate() {
            match *f {
                Face::Fixed(val) => u[k] = val,
                Face::Outlet => {
                    let j = k / (g.nx + 1);
                    u[k] = u[g.u_idx(g.nx - 1, j)];
                }
                Face::Open => {}
            }
        }
        for (k, f) in self.v_faces.iter().enumerate() {
            if let Face::Fixed(val) = *f {
                v[k] = val;
            }
        }
    }

    /// A state at rest with boundary values imposed.
    pub fn initial_state(&self) -> FlowState<T> {
        let mut s = FlowState::rest(self.grid);
        self.apply_boundary(&mut s.u, &mut s.v);
        s
    }

    #[inline]
    fn ug(&self, u: &[T], i: isize, j: isize) -> T {
        let g = &self.grid;
        let (nx, ny) = (g.nx as isize, g.ny as isize);
        let i = i.clamp(0, nx) as usize;
        if j < 0 {
            -u[g.u_idx(i, (-1 - j) as usize)]
        } else if j >= ny {
            T::two() * self.u_top - u[g.u_idx(i, (2 * ny - 1 - j) as usize)]
        } else {
            u[g.u_idx(i, j as usize)]
        }
    }

    #[inline]
    fn vg(&self, v: &[T], i: isize, j: isize) -> T {
        let g = &self.grid;
        let (nx, ny) = (g.nx as isize, g.ny as isize);
        let j = j.clamp(0, ny) as usize;
        if i < 0 {
            -v[g.v_idx((-1 - i) as usize, j)]
        } else if i >= nx {
            match self.kind {
                FlowKind::Fpo => v[g.v_idx(g.nx - 1, j)],
                FlowKind::Ldc => -v[g.v_idx((2 * nx - 1 - i) as usize, j)],
            }
        } else {
            v[g.v_idx(i as usize, j)]
        }
    }

    /// Copies of `u` and `v` with two ghost layers on every side.
    fn padded(&self, u: &[T], v: &[T]) -> (Padded<T>, Padded<T>) {
        let g = &self.grid;
        let (nx, ny) = (g.nx as isize, g.ny as isize);
        let pu = Padded::fill(nx + 1, ny, |i, j| self.ug(u, i, j));
        let pv = Padded::fill(nx, ny + 1, |i, j| self.vg(v, i, j));
        (pu, pv)
    }

    /// Convective tendency `-∇·(u ⊗ u)` on open faces.
    fn convection(&self, u: &[T], v: &[T], cu: &mut [T], cv: &mut [T]) {
        let g = &self.grid;
        let half = T::half();
        let (pu, pv) = self.padded(u, v);
        let uu = |a: isize, b: isize| pu.at(a, b);
        let vv = |a: isize, b: isize| pv.at(a, b);
        for row in &self.u_rows {
            let k = row.idx;
            let (i, j) = ((k % (g.nx + 1)) as isize, (k / (g.nx + 1)) as isize);
            let ue = half * (uu(i, j) + uu(i + 1, j));
            let uw = half * (uu(i - 1, j) + uu(i, j));
            let fe = ue * recon(uu(i - 1, j), uu(i, j), uu(i + 1, j), uu(i + 2, j), ue);
            let fw = uw * recon(uu(i - 2, j), uu(i - 1, j), uu(i, j), uu(i + 1, j), uw);
            let vn = half * (vv(i - 1, j + 1) + vv(i, j + 1));
            let vs = half * (vv(i - 1, j) + vv(i, j));
            let gn = vn * recon(uu(i, j - 1), uu(i, j), uu(i, j + 1), uu(i, j + 2), vn);
            let gs = vs * recon(uu(i, j - 2), uu(i, j - 1), uu(i, j), uu(i, j + 1), vs);
            cu[k] = -((fe - fw) / g.dx + (gn - gs) / g.dy);
        }
        for row in &self.v_rows {
            let k = row.idx;
            let (i, j) = ((k % g.nx) as isize, (k / g.nx) as isize);
            let ue = half * (uu(i + 1, j - 1) + uu(i + 1, j));
            let uw = half * (uu(i, j - 1) + uu(i, j));
            let fe = ue * recon(vv(i - 1, j), vv(i, j), vv(i + 1, j), vv(i + 2, j), ue);
            let fw = uw * recon(vv(i - 2, j), vv(i - 1, j), vv(i, j), vv(i + 1, j), uw);
            let vn = half * (vv(i, j) + vv(i, j + 1));
            let vs = half * (vv(i, j - 1) + vv(i, j));
            let gn = vn * recon(vv(i, j - 1), vv(i, j), vv(i, j + 1), vv(i, j + 2), vn);
            let gs = vs * recon(vv(i, j - 2), vv(i, j - 1), vv(i, j), vv(i, j + 1), vs);
            cv[k] = -((fe - fw) / g.dx + (gn - gs) / g.dy);
        }
    }

    /// Symmetric Gauss–Seidel on one momentum component, in place.
    fn implicit_diffusion(&self, rows: &[MomentumRow<T>], phi: &mut [T], b: &[T], dt: T) -> usize {
        let g = &self.grid;
        let ax = self.nu * dt / (g.dx * g.dx);
        let ay = self.nu * dt / (g.dy * g.dy);
        let scale = rows
            .iter()
            .fold(T::zero(), |m, r| m.max(b[r.idx].abs()))
            .max(self.boundary_speed)
            .max(T::min_positive_value());
        let relax = |r: &MomentumRow<T>, phi: &[T]| -> T {
            let mut s = b[r.idx] + ay * r.wall;
            for n in r.nbr_x.iter().flatten() {
                s += ax * phi[*n];
            }
            for n in r.nbr_y.iter().flatten() {
                s += ay * phi[*n];
            }
            s / (T::one() + ax * r.cx + ay * r.cy)
        };
        let mut sweeps = 0;
        while sweeps < 200 {
            sweeps += 1;
            let mut change = T::zero();
            for r in rows.iter().chain(rows.iter().rev()) {
                let new = relax(r, phi);
                change = change.max((new - phi[r.idx]).abs());
                phi[r.idx] = new;
            }
            if change <= self.u_tol * scale {
                break;
            }
        }
        sweeps
    }

    /// Advances `state` by `dt`.
    pub fn advance(&self, state: &mut FlowState<T>, dt: T) -> Result<StepStats, SolverError> {
        let g = self.grid;
        let (nu_, nv_) = (g.n_u(), g.n_v());

        // Convection: Heun's method on open faces.
        let mut cu = vec![T::zero(); nu_];
        let mut cv = vec![T::zero(); nv_];
        self.convection(&state.u, &state.v, &mut cu, &mut cv);
        let mut u1 = state.u.clone();
        let mut v1 = state.v.clone();
        for r in &self.u_rows {
            u1[r.idx] += dt * cu[r.idx];
        }
        for r in &self.v_rows {
            v1[r.idx] += dt * cv[r.idx];
        }
        self.apply_boundary(&mut u1, &mut v1);
        let mut cu1 = vec![T::zero(); nu_];
        let mut cv1 = vec![T::zero(); nv_];
        self.convection(&u1, &v1, &mut cu1, &mut cv1);

        // Predictor right-hand side; the pressure enters only through the
        // projection.
        let half = T::half();
        let mut bu = vec![T::zero(); nu_];
        let mut bv = vec![T::zero(); nv_];
        for r in &self.u_rows {
            let k = r.idx;
            bu[k] = state.u[k] + half * dt * (cu[k] + cu1[k]);
        }
        for r in &self.v_rows {
            let k = r.idx;
            bv[k] = state.v[k] + half * dt * (cv[k] + cv1[k]);
        }

        let mut us = state.u.clone();
        let mut vs = state.v.clone();
        for r in &self.u_rows {
            us[r.idx] = bu[r.idx];
        }
        for r in &self.v_rows {
            vs[r.idx] = bv[r.idx];
        }
        self.apply_boundary(&mut us, &mut vs);
        let mut sweeps = self.implicit_diffusion(&self.u_rows, &mut us, &bu, dt);
        sweeps += self.implicit_diffusion(&self.v_rows, &mut vs, &bv, dt);
        self.apply_boundary(&mut us, &mut vs);

        // Projection: A φ = -∇·u*/dt with A = -∇².
        let mut b = vec![T::zero(); self.poisson.n_unknowns()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                if let Some(k) = self.poisson.unknown_of(g.p_idx(i, j)) {
                    let div = (us[g.u_idx(i + 1, j)] - us[g.u_idx(i, j)]) / g.dx
                        + (vs[g.v_idx(i, j + 1)] - vs[g.v_idx(i, j)]) / g.dy;
                    b[k] = -div / dt;
                }
            }
        }
        if self.poisson.is_singular() && !b.is_empty() {
            let mean = b.iter().copied().sum::<T>() / T::from_usize_lossy(b.len());
            b.iter_mut().for_each(|x| *x -= mean);
        }
        let u_ref = self.reference_speed(state);
        let abs_inf = T::half() * self.p_tol * u_ref / (dt * g.h_min());
        let mut phi = vec![T::zero(); b.len()];
        let stats = self.poisson.solve(
            &b,
            &mut phi,
            Tolerance { rel: None, abs_inf: Some(abs_inf) },
            self.max_cg_iters,
        )?;
        let mut phi_cells = vec![T::zero(); g.n_cells()];
        self.poisson.scatter(&phi, &mut phi_cells);

        for r in &self.u_rows {
            let k = r.idx;
            let (i, j) = (k % (g.nx + 1), k / (g.nx + 1));
            us[k] -= dt * (phi_cells[g.p_idx(i, j)] - phi_cells[g.p_idx(i - 1, j)]) / g.dx;
        }
        for (k, f) in self.u_faces.iter().enumerate() {
            if *f == Face::Outlet {
                // p = 0 on the outlet face, half a cell from the last center.
                let j = k / (g.nx + 1);
                us[k] += dt * T::two() * phi_cells[g.p_idx(g.nx - 1, j)] / g.dx;
            }
        }
        for r in &self.v_rows {
            let k = r.idx;
            let (i, j) = (k % g.nx, k / g.nx);
            vs[k] -= dt * (phi_cells[g.p_idx(i, j)] - phi_cells[g.p_idx(i, j - 1)]) / g.dy;
        }

        for (c, p) in state.p.iter_mut().enumerate() {
            *p = if self.fluid[c] { phi_cells[c] } else { T::zero() };
        }
        state.u = us;
        state.v = vs;
        state.t += dt;
        if !state.u.iter().chain(&state.v).all(|x| x.is_finite()) {
            return Err(SolverError::NonFinite { t: state.t.to_f64_lossy() });
        }
        Ok(StepStats { cg_iters: stats.iterations, momentum_sweeps: sweeps })
    }
}

/// Advances `state` by `dt` under `case`.
///
/// Builds the per-case operators on every call; use [`Stepper`] directly
/// when stepping repeatedly.
pub fn step<T: Real>(state: &FlowState<T>, case: &CaseSetup<T>, dt: T) -> Result<FlowState<T>, SolverError> {
    let stepper = Stepper::new(case);
    let mut next = state.clone();
    stepper.advance(&mut next, dt)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ObstacleSet;
    use crate::physics::{BoundarySetup, FluidParams};
    use crate::solver::{build_case, divergence, SolverParams};
    use rand::{Rng, SeedableRng};

    fn case(kind: FlowKind, speed: f64, n: usize) -> CaseSetup<f64> {
        let obs = ObstacleSet::empty((2.0, 2.0), 0);
        let solver = SolverParams { grid_dims: (n, n), ..Default::default() };
        build_case(&obs, BoundarySetup::with_speed(kind, speed, 100.0), FluidParams::default(), solver).unwrap()
    }

    /// Divergence-free velocities from a random stream function that
    /// vanishes on the walls.
    fn random_solenoidal(s: &mut FlowState<f64>, seed: u64, amp: f64) {
        let g = s.grid;
        let (nx, ny) = (g.nx, g.ny);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut psi = vec![0.0; (nx + 1) * (ny + 1)];
        for j in 1..ny {
            for i in 1..nx {
                psi[j * (nx + 1) + i] = amp * rng.random_range(-1.0..1.0);
            }
        }
        for j in 0..ny {
            for i in 0..=nx {
                s.u[g.u_idx(i, j)] = (psi[(j + 1) * (nx + 1) + i] - psi[j * (nx + 1) + i]) / g.dy;
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                s.v[g.v_idx(i, j)] = -(psi[j * (nx + 1) + i + 1] - psi[j * (nx + 1) + i]) / g.dx;
            }
        }
    }

    #[test]
    fn rest_is_a_fixed_point() {
        for kind in [FlowKind::Ldc, FlowKind::Fpo] {
            let c = case(kind, 0.0, 16);
            let s0 = FlowState::rest(MacGrid::from_mask(&c.mask));
            let s1 = step(&s0, &c, 0.5).unwrap();
            assert_eq!((&s1.u, &s1.v, &s1.p), (&s0.u, &s0.v, &s0.p));
            assert_eq!(s1.t, 0.5);
        }
    }

    #[test]
    fn energy_never_grows_in_a_resting_cavity() {
        let c = case(FlowKind::Ldc, 0.0, 16);
        let st = Stepper::new(&c);
        for seed in 0..100 {
            let mut s = st.initial_state();
            random_solenoidal(&mut s, seed, [1e-4, 1e-2, 1.0][seed as usize % 3]);
            let e0 = s.kinetic_energy();
            let dt = st.cfl_dt(&s);
            st.advance(&mut s, dt).unwrap();
            assert!(s.kinetic_energy() <= e0, "seed {seed}");
        }
    }

    #[test]
    fn uniform_channel_flow_is_projected_to_tolerance() {
        // The scaled divergence bound follows the pressure tolerance.
        for p_tol in [1e-6, 1e-8] {
            let mut c = case(FlowKind::Fpo, 0.01, 32);
            c.solver.p_tol = p_tol;
            let st = Stepper::new(&c);
            let mut s = st.initial_state();
            // Uniform interior flow with the same flux as the inlet.
            for j in 0..s.grid.ny {
                for i in 1..=s.grid.nx {
                    s.u[s.grid.u_idx(i, j)] = 0.01 * 2.0 / 3.0;
                }
            }
            let dt = st.cfl_dt(&s);
            st.advance(&mut s, dt).unwrap();
            let u_ref = st.reference_speed(&s);
            let h = s.grid.h_min();
            let max = divergence(&s, &c.mask).iter().fold(0.0f64, |m, d| m.max(d.abs()));
            assert!(max * h / u_ref <= p_tol, "{p_tol}: {}", max * h / u_ref);
        }
    }

    #[test]
    fn boundary_faces_hold_their_values() {
        let c = case(FlowKind::Fpo, 0.01, 16);
        let st = Stepper::new(&c);
        let mut s = st.initial_state();
        for _ in 0..3 {
            let dt = st.cfl_dt(&s);
            st.advance(&mut s, dt).unwrap();
        }
        let g = s.grid;
        for j in 0..g.ny {
            let y = (j as f64 + 0.5) * g.dy;
            let expect = crate::physics::inlet_profile(0.01, 2.0, y).unwrap();
            assert_eq!(s.u[g.u_idx(0, j)], expect);
        }
        for i in 0..g.nx {
            assert_eq!(s.v[g.v_idx(i, 0)], 0.0);
            assert_eq!(s.v[g.v_idx(i, g.ny)], 0.0);
        }

        let c = case(FlowKind::Ldc, 0.02, 16);
        let st = Stepper::new(&c);
        let mut s = st.initial_state();
        let dt = st.cfl_dt(&s);
        st.advance(&mut s, dt).unwrap();
        for j in 0..g.ny {
            assert_eq!(s.u[g.u_idx(0, j)], 0.0);
            assert_eq!(s.u[g.u_idx(g.nx, j)], 0.0);
        }
    }
}
