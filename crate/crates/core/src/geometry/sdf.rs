use super::{BinaryMask, GeometryError};
use crate::scalar::Real;

/// Signed distance to the nearest obstacle interface: positive in fluid,
/// negative in solid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfField<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Real> SdfField<T> {
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Exact Euclidean distance transform of the mask's interface.
///
/// Fluid cells carry the distance from their center to the nearest solid
/// cell center, solid cells minus the distance to the nearest fluid cell
/// center. Both bracket the true distance to the staircase interface from
/// above by at most half a cell diagonal. Distances are capped at the domain
/// diagonal, which is also the value everywhere when there are no obstacles.
pub fn compute_sdf<T: Real>(mask: &BinaryMask<T>) -> Result<SdfField<T>, GeometryError> {
    if mask.is_empty() {
        return Err(GeometryError::EmptyMask);
    }
    if mask.fluid_count() == 0 {
        return Err(GeometryError::AllSolid);
    }
    let (rows, cols) = mask.dims();
    let (w, h) = mask.domain();
    let cap = (w * w + h * h).sqrt();

    let to_solid = squared_edt(mask, |fluid| !fluid);
    let to_fluid = squared_edt(mask, |fluid| fluid);

    let values = mask
        .flags()
        .iter()
        .zip(to_solid.iter().zip(&to_fluid))
        .map(|(&fluid, (&ds, &df))| {
            if fluid {
                ds.sqrt().min(cap)
            } else {
                -df.sqrt().min(cap)
            }
        })
        .collect();
    Ok(SdfField { rows, cols, values })
}

/// Squared distance (meters²) from every cell center to the nearest center
/// of a cell for which `is_feature` holds; `+inf` when there is none.
///
/// Separable transform: an exact 1D scan down each column followed by the
/// lower envelope of parabolas along each row.
fn squared_edt<T: Real>(mask: &BinaryMask<T>, is_feature: impl Fn(bool) -> bool) -> Vec<T> {
    let (rows, cols) = mask.dims();
    let (dx, dy) = mask.cell_size();
    let inf = T::infinity();

    let mut g = vec![inf; rows * cols];
    for c in 0..cols {
        // Distance in cells to the nearest feature below, then above.
        let mut last: Option<usize> = None;
        for r in 0..rows {
            if is_feature(mask.is_fluid(r, c)) {
                last = Some(r);
            }
            if let Some(l) = last {
                let d = T::from_usize_lossy(r - l) * dy;
                g[r * cols + c] = d * d;
            }
        }
        last = None;
        for r in (0..rows).rev() {
            if is_feature(mask.is_fluid(r, c)) {
                last = Some(r);
            }
            if let Some(l) = last {
                let d = T::from_usize_lossy(l - r) * dy;
                let d2 = d * d;
                if d2 < g[r * cols + c] {
                    g[r * cols + c] = d2;
                }
            }
        }
    }

    let mut out = vec![inf; rows * cols];
    let mut env = LowerEnvelope::with_capacity(cols);
    for r in 0..rows {
        let row = &g[r * cols..(r + 1) * cols];
        env.transform(row, dx, &mut out[r * cols..(r + 1) * cols]);
    }
    out
}

/// Scratch space for the 1D squared distance transform
/// `D(p) = min_q f(q) + (dx (p - q))²`.
struct LowerEnvelope<T> {
    vertices: Vec<usize>,
    bounds: Vec<T>,
}

impl<T: Real> LowerEnvelope<T> {
    fn with_capacity(n: usize) -> Self {
        Self {
            vertices: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    fn transform(&mut self, f: &[T], dx: T, out: &mut [T]) {
        self.vertices.clear();
        self.bounds.clear();
        let dx2 = dx * dx;
        let pos = |q: usize| T::from_usize_lossy(q);
        // Abscissa (in cell units) where parabolas rooted at q and v meet.
        let meet = |q: usize, v: usize| -> T {
            let (fq, fv) = (f[q] / dx2, f[v] / dx2);
            ((fq + pos(q) * pos(q)) - (fv + pos(v) * pos(v))) / (T::two() * (pos(q) - pos(v)))
        };

        for (q, fq) in f.iter().enumerate() {
            if !fq.is_finite() {
                continue;
            }
            if self.vertices.is_empty() {
                self.vertices.push(q);
                self.bounds.push(T::neg_infinity());
                continue;
            }
            let mut s = meet(q, *self.vertices.last().unwrap());
            while s <= *self.bounds.last().unwrap() {
                self.vertices.pop();
                self.bounds.pop();
                if self.vertices.is_empty() {
                    break;
                }
                s = meet(q, *self.vertices.last().unwrap());
            }
            if self.vertices.is_empty() {
                self.bounds.push(T::neg_infinity());
            } else {
                self.bounds.push(s);
            }
            self.vertices.push(q);
        }

        if self.vertices.is_empty() {
            out.fill(T::infinity());
            return;
        }
        let mut k = 0;
        for (p, o) in out.iter_mut().enumerate() {
            let x = pos(p);
            while k + 1 < self.vertices.len() && self.bounds[k + 1] < x {
                k += 1;
            }
            let v = self.vertices[k];
            let d = (x - pos(v)) * dx;
            *o = f[v] + d * d;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rasterize_mask, sample_obstacles, ObstacleParams};
    use proptest::prelude::*;

    /// Distance from every cell center to the nearest feature center by
    /// exhaustive scan.
    fn brute_squared(mask: &BinaryMask<f64>, feature_fluid: bool) -> Vec<f64> {
        let (rows, cols) = mask.dims();
        let mut out = vec![f64::INFINITY; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let (x, y) = mask.center(r, c);
                for rr in 0..rows {
                    for cc in 0..cols {
                        if mask.is_fluid(rr, cc) == feature_fluid {
                            let (xx, yy) = mask.center(rr, cc);
                            let d = (x - xx).powi(2) + (y - yy).powi(2);
                            out[r * cols + c] = out[r * cols + c].min(d);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn all_fluid_is_capped() {
        let m = BinaryMask::<f64>::all_fluid((8, 8), (2.0, 2.0));
        let sdf = compute_sdf(&m).unwrap();
        let cap = 8f64.sqrt();
        assert!(sdf.values().iter().all(|&v| v == cap));
    }

    #[test]
    fn all_solid_is_an_error() {
        let m = BinaryMask::<f64>::from_flags((4, 4), (0.5, 0.5), vec![false; 16]);
        assert_eq!(compute_sdf(&m), Err(GeometryError::AllSolid));
        let e = BinaryMask::<f64>::from_flags((0, 0), (0.5, 0.5), vec![]);
        assert_eq!(compute_sdf(&e), Err(GeometryError::EmptyMask));
    }

    #[test]
    fn single_solid_cell_in_33x33() {
        let h = 2.0 / 33.0;
        let mut m = BinaryMask::<f64>::all_fluid((33, 33), (2.0, 2.0));
        m.set(16, 16, false);
        let sdf = compute_sdf(&m).unwrap();
        assert!(sdf.get(16, 16) <= 0.0);
        assert!((sdf.get(16, 16) + h).abs() < 1e-12);
        let half_diag = h * 2f64.sqrt() / 2.0;
        for k in 1..=16 {
            for (r, c) in [(16 + k, 16), (16 - k, 16), (16, 16 + k), (16, 16 - k)] {
                assert!((sdf.get(r, c) - k as f64 * h).abs() <= half_diag);
                assert!((sdf.get(r, c) - k as f64 * h).abs() < 1e-12);
            }
        }
        // Diagonal neighbours are at sqrt(2) cells.
        assert!((sdf.get(17, 17) - h * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn envelope_matches_brute_force_anisotropic() {
        let obs = sample_obstacles(4, &ObstacleParams::<f64>::default(), 17).unwrap();
        let m = rasterize_mask(&obs, (24, 40));
        let to_solid = squared_edt(&m, |f| !f);
        let to_fluid = squared_edt(&m, |f| f);
        let bs = brute_squared(&m, false);
        let bf = brute_squared(&m, true);
        for i in 0..m.len() {
            assert!((to_solid[i] - bs[i]).abs() < 1e-12, "cell {i}");
            assert!((to_fluid[i] - bf[i]).abs() < 1e-12, "cell {i}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn sign_agrees_with_mask(seed in any::<u64>(), count in 0usize..=10) {
            let obs = sample_obstacles(count, &ObstacleParams::<f64>::default(), seed).unwrap();
            let m = rasterize_mask(&obs, (20, 20));
            let sdf = compute_sdf(&m).unwrap();
            for r in 0..20 {
                for c in 0..20 {
                    prop_assert_eq!(sdf.get(r, c) > 0.0, m.is_fluid(r, c));
                }
            }
        }
    }
}
