//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nspregen::geometry::BinaryMask;
use nspregen::trajio::{Trajectory, TrajectoryMeta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Whether the fluid cells of `mask` form one 4-connected region.
pub fn fluid_connected(mask: &BinaryMask<f64>) -> bool {
    let (rows, cols) = mask.dims();
    let Some(start) = (0..rows * cols).find(|&k| mask.is_fluid(k / cols, k % cols)) else {
        return false;
    };
    let mut seen = vec![false; rows * cols];
    let mut stack = vec![start];
    seen[start] = true;
    let mut n = 0;
    while let Some(k) = stack.pop() {
        n += 1;
        let (r, c) = (k / cols, k % cols);
        let mut push = |r: usize, c: usize| {
            let q = r * cols + c;
            if mask.is_fluid(r, c) && !seen[q] {
                seen[q] = true;
                stack.push(q);
            }
        };
        if r > 0 {
            push(r - 1, c);
        }
        if r + 1 < rows {
            push(r + 1, c);
        }
        if c > 0 {
            push(r, c - 1);
        }
        if c + 1 < cols {
            push(r, c + 1);
        }
    }
    n == mask.fluid_count()
}

/// Dense solve of the pure-Neumann 5-point Poisson problem `∇²p = rhs` on
/// the fluid cells, with the zero-mean gauge imposed by a Lagrange
/// multiplier. Returns a full cell field, zero in solid cells.
pub fn dense_neumann_poisson(mask: &BinaryMask<f64>, rhs: &[f64]) -> Vec<f64> {
    let (rows, cols) = mask.dims();
    let (dx, dy) = mask.cell_size();
    let cells: Vec<usize> = (0..rows * cols).filter(|&k| mask.is_fluid(k / cols, k % cols)).collect();
    let mut index = vec![usize::MAX; rows * cols];
    for (n, &k) in cells.iter().enumerate() {
        index[k] = n;
    }
    let n = cells.len();
    let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut b = DVector::<f64>::zeros(n + 1);
    for (row, &k) in cells.iter().enumerate() {
        let (r, c) = ((k / cols) as isize, (k % cols) as isize);
        for (dr, dc, h) in [(0, 1, dx), (0, -1, dx), (1, 0, dy), (-1, 0, dy)] {
            let (rr, cc) = (r + dr, c + dc);
            if rr < 0 || cc < 0 || rr >= rows as isize || cc >= cols as isize {
                continue;
            }
            let q = rr as usize * cols + cc as usize;
            if index[q] == usize::MAX {
                continue;
            }
            a[(row, index[q])] += 1.0 / (h * h);
            a[(row, row)] -= 1.0 / (h * h);
        }
        a[(row, n)] = 1.0;
        a[(n, row)] = 1.0;
        b[row] = rhs[k];
    }
    let x = a.lu().solve(&b).expect("augmented system is regular");
    let mut out = vec![0.0; rows * cols];
    for (row, &k) in cells.iter().enumerate() {
        out[k] = x[row];
    }
    out
}

/// Distance from `(px, py)` to the segment `a`–`b`.
fn segment_distance(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let t = (((px - a.0) * vx + (py - a.1) * vy) / (vx * vx + vy * vy)).clamp(0.0, 1.0);
    let (qx, qy) = (a.0 + t * vx, a.1 + t * vy);
    ((px - qx).powi(2) + (py - qy).powi(2)).sqrt()
}

/// Distance from every cell center to the nearest cell edge separating a
/// fluid cell from a solid one, by exhaustive search. `None` when the mask
/// has no such edge.
pub fn brute_interface_distance(mask: &BinaryMask<f64>) -> Option<Vec<f64>> {
    let (rows, cols) = mask.dims();
    let (dx, dy) = mask.cell_size();
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols && mask.is_fluid(r, c) != mask.is_fluid(r, c + 1) {
                let x = (c + 1) as f64 * dx;
                edges.push(((x, r as f64 * dy), (x, (r + 1) as f64 * dy)));
            }
            if r + 1 < rows && mask.is_fluid(r, c) != mask.is_fluid(r + 1, c) {
                let y = (r + 1) as f64 * dy;
                edges.push(((c as f64 * dx, y), ((c + 1) as f64 * dx, y)));
            }
        }
    }
    if edges.is_empty() {
        return None;
    }
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let (px, py) = ((c as f64 + 0.5) * dx, (r as f64 + 0.5) * dy);
            out.push(edges.iter().map(|&(a, b)| segment_distance(px, py, a, b)).fold(f64::INFINITY, f64::min));
        }
    }
    Some(out)
}

/// `Σ|y − ŷ| / Σ|y|` over the listed channel indices, element by element.
pub fn elementwise_nmae(pred: &[Trajectory], truth: &[Trajectory], channels: &[usize]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for y in truth {
        let p = pred.iter().find(|p| p.meta.id == y.meta.id).expect("paired");
        for t in 0..y.frames {
            for r in 0..y.rows {
                for c in 0..y.cols {
                    for &ch in channels {
                        let (a, b) = (f64::from(y.get(t, r, c, ch)), f64::from(p.get(t, r, c, ch)));
                        num += (a - b).abs();
                        den += a.abs();
                    }
                }
            }
        }
    }
    num / den
}

/// Random six-channel trajectory.
pub fn random_trajectory(rng: &mut ChaCha8Rng, id: u64, shape: (usize, usize, usize)) -> Trajectory {
    let meta = TrajectoryMeta { id, re: rng.random_range(100.0..10_000.0), seed: rng.random(), ..Default::default() };
    let mut t = Trajectory::zeros(meta, shape.0, shape.1, shape.2);
    t.data.iter_mut().for_each(|x| *x = rng.random_range(-2.0f32..2.0));
    t
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
