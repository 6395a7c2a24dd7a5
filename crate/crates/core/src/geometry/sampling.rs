use rand::Rng;

use super::{GeometryError, ObstacleSet, Rect, MAX_OBSTACLES};
use crate::rng::{stream_rng, streams};
use crate::scalar::Real;

/// Placement constraints for random obstacle layouts.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ObstacleParams<T> {
    pub domain: (T, T),
    /// Side length range `[lo, hi]`, meters.
    pub size_range: (T, T),
    /// Clearance from every outer wall.
    pub margin_min: T,
    /// Clearance between any two obstacles.
    pub gap_min: T,
    pub max_attempts: usize,
    /// Draw squares (`w == h`) rather than independent sides.
    pub square: bool,
}

impl<T: Real> Default for ObstacleParams<T> {
    fn default() -> Self {
        Self {
            domain: (T::two(), T::two()),
            size_range: (T::lit(0.15), T::lit(0.30)),
            margin_min: T::lit(0.1),
            gap_min: T::lit(0.05),
            max_attempts: 10_000,
            square: true,
        }
    }
}

/// Places `count` non-overlapping rectangles by rejection sampling.
///
/// Each candidate draws its side(s) uniformly from `size_range` and its
/// corner uniformly from the positions that respect `margin_min`; it is
/// rejected if it comes closer than `gap_min` to an already placed obstacle
/// or cannot fit at all. Rejections are counted over the whole layout.
pub fn sample_obstacles<T: Real>(
    count: usize,
    params: &ObstacleParams<T>,
    seed: u64,
) -> Result<ObstacleSet<T>, GeometryError> {
    if count > MAX_OBSTACLES {
        return Err(GeometryError::OutOfRange(count as i64));
    }
    let (lo, hi) = params.size_range;
    if !(lo > T::zero() && hi >= lo) {
        return Err(GeometryError::InvalidParams(format!(
            "size_range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
        )));
    }
    if params.max_attempts == 0 {
        return Err(GeometryError::InvalidParams("max_attempts must be >= 1".into()));
    }
    if params.margin_min < T::zero() || params.gap_min < T::zero() {
        return Err(GeometryError::InvalidParams("margins must be non-negative".into()));
    }

    let mut rng = stream_rng(seed, streams::OBSTACLES);
    let mut uniform = |a: T, b: T| -> T { a + (b - a) * T::lit(rng.random::<f64>()) };

    let (dx, dy) = params.domain;
    let m = params.margin_min;
    let mut placed: Vec<Rect<T>> = Vec::with_capacity(count);
    let mut rejections = 0usize;

    while placed.len() < count {
        let w = uniform(lo, hi);
        let h = if params.square { w } else { uniform(lo, hi) };
        let x_hi = dx - m - w;
        let y_hi = dy - m - h;
        let candidate = if x_hi >= m && y_hi >= m {
            let r = Rect::new(uniform(m, x_hi), uniform(m, y_hi), w, h);
            placed
                .iter()
                .all(|p| p.separation(&r) >= params.gap_min)
                .then_some(r)
        } else {
            None
        };
        match candidate {
            Some(r) => placed.push(r),
            None => {
                rejections += 1;
                if rejections >= params.max_attempts {
                    return Err(GeometryError::PlacementExhausted {
                        attempts: rejections,
                        placed: placed.len(),
                        requested: count,
                    });
                }
            }
        }
    }

    Ok(ObstacleSet {
        seed,
        obstacles: placed,
        domain_size: params.domain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> ObstacleParams<f64> {
        ObstacleParams::default()
    }

    fn check_valid(set: &ObstacleSet<f64>, p: &ObstacleParams<f64>) {
        for r in &set.obstacles {
            assert!(r.w > 0.0 && r.h > 0.0);
            assert!(r.inside_with_margin(p.domain, p.margin_min), "{r:?}");
            assert!(r.w >= p.size_range.0 && r.w <= p.size_range.1);
        }
        for i in 0..set.len() {
            for j in 0..set.len() {
                if i != j {
                    assert!(set.obstacles[i].separation(&set.obstacles[j]) >= p.gap_min);
                }
            }
        }
    }

    #[test]
    fn zero_count_is_empty() {
        for seed in [0, 1, u64::MAX] {
            let set = sample_obstacles(0, &params(), seed).unwrap();
            assert!(set.is_empty());
            assert_eq!(set.seed, seed);
        }
    }

    #[test]
    fn ten_obstacles_seed_42() {
        let p = params();
        let set = sample_obstacles(10, &p, 42).unwrap();
        assert_eq!(set.len(), 10);
        check_valid(&set, &p);
        assert!(set.min_separation().unwrap() >= 0.05);
    }

    #[test]
    fn oversized_pair_exhausts() {
        let p = ObstacleParams {
            size_range: (1.5, 1.6),
            max_attempts: 500,
            ..params()
        };
        match sample_obstacles(2, &p, 3) {
            Err(GeometryError::PlacementExhausted { placed, requested, .. }) => {
                assert_eq!(placed, 1);
                assert_eq!(requested, 2);
            }
            other => panic!("expected PlacementExhausted, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(matches!(
            sample_obstacles(11, &params(), 0),
            Err(GeometryError::OutOfRange(11))
        ));
        let p = ObstacleParams { size_range: (0.0, 0.2), ..params() };
        assert!(matches!(sample_obstacles(1, &p, 0), Err(GeometryError::InvalidParams(_))));
        let p = ObstacleParams { max_attempts: 0, ..params() };
        assert!(matches!(sample_obstacles(1, &p, 0), Err(GeometryError::InvalidParams(_))));
    }

    #[test]
    fn f32_layouts_are_valid() {
        let p = ObstacleParams::<f32>::default();
        let set = sample_obstacles(6, &p, 5).unwrap();
        assert_eq!(set.len(), 6);
        assert!(set.min_separation().unwrap() >= 0.05);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn deterministic_and_disjoint(count in 0usize..=10, seed in any::<u64>()) {
            let p = params();
            let a = sample_obstacles(count, &p, seed).unwrap();
            let b = sample_obstacles(count, &p, seed).unwrap();
            prop_assert_eq!(&a, &b);
            for (ra, rb) in a.obstacles.iter().zip(&b.obstacles) {
                prop_assert_eq!(ra.x.to_bits(), rb.x.to_bits());
                prop_assert_eq!(ra.y.to_bits(), rb.y.to_bits());
            }
            prop_assert_eq!(a.len(), count);
            check_valid(&a, &p);
        }

        #[test]
        fn rectangular_mode_is_valid(count in 0usize..=10, seed in any::<u64>()) {
            let p = ObstacleParams { square: false, ..params() };
            let a = sample_obstacles(count, &p, seed).unwrap();
            for r in &a.obstacles {
                prop_assert!(r.h >= p.size_range.0 && r.h <= p.size_range.1);
            }
            check_valid(&a, &p);
        }
    }
}
