//! Reynolds-number bands, boundary speeds and run-length scheduling.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::difficulty::{Axis, DifficultyTier, Tier};
use crate::rng::{stream_rng, streams};
use crate::scalar::Real;

/// Number of stored output frames per trajectory.
pub const N_FRAMES: usize = 20;

/// Fixed run length for the viscous-dominated low-Re regime, seconds.
pub const LOW_RE_END_TIME: f64 = 2700.0;

/// Normalization of the stored Reynolds-number channel.
pub const RE_NORMALIZATION: f64 = 10_000.0;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("Reynolds number {0} outside the supported range [10, 10000]")]
    OutOfRange(f64),
    #[error("Reynolds number {0} lies outside every difficulty band")]
    UnbandedRe(f64),
    #[error("inlet coordinate y = {y} outside [0, {height}]")]
    OutOfDomain { y: f64, height: f64 },
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// Fluid properties and reference lengths (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams<T> {
    /// Kinematic viscosity, m²/s.
    pub nu: T,
    /// Characteristic length, m.
    pub length: T,
    /// Channel height, m.
    pub height: T,
}

impl<T: Real> Default for FluidParams<T> {
    fn default() -> Self {
        Self {
            nu: T::lit(1.5e-5),
            length: T::two(),
            height: T::two(),
        }
    }
}

impl<T: Real> FluidParams<T> {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        if self.nu > T::zero() && self.length > T::zero() && self.height > T::zero() {
            Ok(())
        } else {
            Err(PhysicsError::Invalid("nu, length and height must be positive".into()))
        }
    }
}

/// Truncated normal distribution over Reynolds numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReBand {
    pub lo: f64,
    pub hi: f64,
    pub mean: f64,
    pub sigma: f64,
}

impl ReBand {
    /// Band centered on its midpoint with `sigma` a quarter of its width.
    pub fn centered(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            mean: 0.5 * (lo + hi),
            sigma: 0.25 * (hi - lo),
        }
    }

    /// N(5000, 2000²) truncated to [100, 10000].
    pub fn baseline() -> Self {
        Self {
            lo: 100.0,
            hi: 10_000.0,
            mean: 5000.0,
            sigma: 2000.0,
        }
    }

    /// The band of `tier` on the physics axis.
    pub fn for_tier(tier: Tier) -> Self {
        match tier {
            Tier::Easy => Self::centered(100.0, 1000.0),
            Tier::Medium => Self::centered(2000.0, 4000.0),
            Tier::Hard => Self::centered(8000.0, 10_000.0),
        }
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        let ok = self.lo > 0.0
            && self.lo < self.hi
            && self.mean >= self.lo
            && self.mean <= self.hi
            && self.sigma > 0.0;
        if ok {
            Ok(())
        } else {
            Err(PhysicsError::Invalid(format!("invalid Re band {self:?}")))
        }
    }

    pub fn contains(&self, re: f64) -> bool {
        re >= self.lo && re <= self.hi
    }
}

/// Draws a Reynolds number from `band` by rejection from the untruncated
/// normal, using the seed's Reynolds stream.
pub fn sample_reynolds(band: &ReBand, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, streams::REYNOLDS);
    sample_reynolds_with(band, &mut rng)
}

/// As [`sample_reynolds`] with a caller-owned generator.
pub fn sample_reynolds_with<R: Rng + ?Sized>(band: &ReBand, rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let re = band.mean + band.sigma * z;
        if band.contains(re) {
            return re;
        }
    }
}

/// Peak inlet speed of the parabolic profile whose mean speed
/// `(2/3) u_max` gives Reynolds number `re` over `length`.
pub fn umax_from_re_fpo<T: Real>(re: T, p: &FluidParams<T>) -> T {
    T::lit(1.5) * re * p.nu / p.length
}

/// Plane Poiseuille inlet profile `4 u_max y (H - y) / H²`.
pub fn inlet_profile<T: Real>(u_max: T, height: T, y: T) -> Result<T, PhysicsError> {
    if y < T::zero() || y > height {
        return Err(PhysicsError::OutOfDomain {
            y: y.to_f64_lossy(),
            height: height.to_f64_lossy(),
        });
    }
    Ok(T::lit(4.0) * u_max * y * (height - y) / (height * height))
}

/// Lid speed giving Reynolds number `re`.
pub fn lid_speed_from_re<T: Real>(re: T, p: &FluidParams<T>) -> T {
    re * p.nu / p.length
}

/// Flow configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    /// Channel flow past obstacles: parabolic inlet on the west face,
    /// fixed-pressure outlet on the east face.
    Fpo,
    /// Closed cavity driven by the top wall.
    Ldc,
}

impl FlowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowKind::Fpo => "fpo",
            FlowKind::Ldc => "ldc",
        }
    }
}

impl std::fmt::Display for FlowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FlowKind {
    type Err = PhysicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fpo" => Ok(FlowKind::Fpo),
            "ldc" => Ok(FlowKind::Ldc),
            other => Err(PhysicsError::Invalid(format!("unknown flow kind `{other}`"))),
        }
    }
}

/// Driving boundary of a case. `speed` is the peak inlet speed for
/// [`FlowKind::Fpo`] and the lid speed for [`FlowKind::Ldc`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySetup<T> {
    pub kind: FlowKind,
    pub speed: T,
    pub re: T,
}

impl<T: Real> BoundarySetup<T> {
    pub fn from_re(kind: FlowKind, re: T, p: &FluidParams<T>) -> Self {
        let speed = match kind {
            FlowKind::Fpo => umax_from_re_fpo(re, p),
            FlowKind::Ldc => lid_speed_from_re(re, p),
        };
        Self { kind, speed, re }
    }

    /// A boundary with an explicit speed (zero gives a quiescent control).
    pub fn with_speed(kind: FlowKind, speed: T, re: T) -> Self {
        Self { kind, speed, re }
    }
}

/// Simulation end time and output cadence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub t_end: f64,
    pub write_interval: f64,
    pub n_frames: usize,
    /// Multiplier of the viscous time scale; `None` on the fixed-duration
    /// low-Re branch.
    pub gamma: Option<f64>,
}

impl Schedule {
    /// Time of output frame `k` (1-based).
    pub fn write_time(&self, k: usize) -> f64 {
        if k == self.n_frames {
            self.t_end
        } else {
            self.write_interval * k as f64
        }
    }
}

/// Multiplier for the viscous time scale by Reynolds-number range.
///
/// Shared endpoints go to the lower row, e.g. Re = 400 uses the 300–400 row.
pub fn gamma_for_re(re: f64) -> Option<f64> {
    const ROWS: [(f64, f64); 9] = [
        (200.0, 1.0),
        (300.0, 2.0),
        (400.0, 3.0),
        (500.0, 4.0),
        (1000.0, 5.0),
        (2500.0, 10.0),
        (4000.0, 20.0),
        (5000.0, 30.0),
        (10_000.0, 40.0),
    ];
    if re < 100.0 {
        return None;
    }
    ROWS.iter().find(|(upper, _)| re <= *upper).map(|&(_, g)| g)
}

/// Viscous diffusion time `L² / (ν Re)`.
pub fn viscous_time(re: f64, p: &FluidParams<f64>) -> f64 {
    p.length * p.length / (p.nu * re)
}

/// Re-dependent run length: fixed 2700 s below Re = 100, otherwise
/// `γ(Re) · L²/(ν Re)` rounded up to the next multiple of 100 s. Output is
/// written every `t_end / 20`.
pub fn schedule_end_time(re: f64, p: &FluidParams<f64>) -> Result<Schedule, PhysicsError> {
    if !(10.0..=10_000.0).contains(&re) {
        return Err(PhysicsError::OutOfRange(re));
    }
    let (t_end, gamma) = match gamma_for_re(re) {
        None => (LOW_RE_END_TIME, None),
        Some(g) => {
            let raw = g * viscous_time(re, p);
            ((raw / 100.0).ceil() * 100.0, Some(g))
        }
    };
    Ok(Schedule {
        t_end,
        write_interval: t_end / N_FRAMES as f64,
        n_frames: N_FRAMES,
        gamma,
    })
}

/// Physics-axis tier of a Reynolds number. Band endpoints are inclusive;
/// values in the gaps between bands are rejected.
pub fn classify_physics_difficulty(re: f64) -> Result<DifficultyTier, PhysicsError> {
    let tier = Tier::ALL
        .into_iter()
        .find(|&t| ReBand::for_tier(t).contains(re))
        .ok_or(PhysicsError::UnbandedRe(re))?;
    Ok(DifficultyTier::new(Axis::Physics, tier))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fluid() -> FluidParams<f64> {
        FluidParams::default()
    }

    #[test]
    fn fpo_peak_speed() {
        let p = fluid();
        assert!((umax_from_re_fpo(1000.0, &p) - 0.01125).abs() < 1e-15);
        assert!((umax_from_re_fpo(100.0, &p) - 0.001125).abs() < 1e-15);
        assert!((umax_from_re_fpo(2000.0, &p) - 2.0 * umax_from_re_fpo(1000.0, &p)).abs() < 1e-15);
        assert!((umax_from_re_fpo(500.0, &p) - 0.005625).abs() < 1e-15);
    }

    #[test]
    fn inlet_parabola() {
        let u = 0.01125f64;
        assert_eq!(inlet_profile(u, 2.0, 1.0).unwrap(), u);
        assert_eq!(inlet_profile(u, 2.0, 0.0).unwrap(), 0.0);
        assert_eq!(inlet_profile(u, 2.0, 2.0).unwrap(), 0.0);
        assert!((inlet_profile(u, 2.0, 0.5).unwrap() - 0.0084375).abs() < 1e-15);
        assert!(matches!(inlet_profile(u, 2.0, 2.1), Err(PhysicsError::OutOfDomain { .. })));
        assert!(matches!(inlet_profile(u, 2.0, -1e-9), Err(PhysicsError::OutOfDomain { .. })));
    }

    #[test]
    fn profile_mean_is_two_thirds_peak() {
        // Composite Simpson on 2000 panels integrates a quadratic exactly.
        let (u, h, n) = (0.7, 2.0, 2000);
        let step = h / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * inlet_profile(u, h, (i as f64 * step).min(h)).unwrap();
        }
        let integral = acc * step / 3.0;
        assert!((integral - 2.0 / 3.0 * u * h).abs() < 1e-12);
    }

    #[test]
    fn lid_speed() {
        let p = fluid();
        assert!((lid_speed_from_re(10_000.0, &p) - 0.075).abs() < 1e-15);
        assert!((lid_speed_from_re(100.0, &p) - 0.00075).abs() < 1e-15);
        let q = FluidParams { nu: 3.0e-5, ..p };
        assert!((lid_speed_from_re(100.0, &q) - 2.0 * lid_speed_from_re(100.0, &p)).abs() < 1e-18);
    }

    #[test]
    fn schedule_examples() {
        let p = fluid();
        let s = schedule_end_time(50.0, &p).unwrap();
        assert_eq!(s.t_end, 2700.0);
        assert_eq!(s.gamma, None);
        let s = schedule_end_time(6000.0, &p).unwrap();
        assert_eq!((s.gamma, s.t_end, s.write_interval), (Some(40.0), 1800.0, 90.0));
        let s = schedule_end_time(150.0, &p).unwrap();
        assert_eq!((s.gamma, s.t_end), (Some(1.0), 1800.0));
        assert!(matches!(schedule_end_time(9.9, &p), Err(PhysicsError::OutOfRange(_))));
        assert!(matches!(schedule_end_time(10_001.0, &p), Err(PhysicsError::OutOfRange(_))));
    }

    #[test]
    fn shared_endpoints_take_lower_row() {
        assert_eq!(gamma_for_re(400.0), Some(3.0));
        assert_eq!(gamma_for_re(400.0001), Some(4.0));
        assert_eq!(gamma_for_re(100.0), Some(1.0));
        assert_eq!(gamma_for_re(99.999), None);
        assert_eq!(gamma_for_re(10_000.0), Some(40.0));
    }

    #[test]
    fn physics_tiers() {
        let tier = |re| classify_physics_difficulty(re).map(|t| t.tier);
        assert_eq!(tier(500.0), Ok(Tier::Easy));
        assert_eq!(tier(3000.0), Ok(Tier::Medium));
        assert_eq!(tier(9000.0), Ok(Tier::Hard));
        assert_eq!(tier(1000.0), Ok(Tier::Easy));
        assert_eq!(tier(2000.0), Ok(Tier::Medium));
        assert_eq!(tier(1500.0), Err(PhysicsError::UnbandedRe(1500.0)));
        assert_eq!(tier(5000.0), Err(PhysicsError::UnbandedRe(5000.0)));
        assert_eq!(tier(50.0), Err(PhysicsError::UnbandedRe(50.0)));
    }

    #[test]
    fn baseline_support() {
        let band = ReBand::baseline();
        let mut rng = stream_rng(5, 0);
        for _ in 0..10_000 {
            let re = sample_reynolds_with(&band, &mut rng);
            assert!((100.0..=10_000.0).contains(&re));
        }
    }

    #[test]
    fn degenerate_sigma() {
        let band = ReBand { lo: 2000.0, hi: 4000.0, mean: 3000.0, sigma: 1e-9 };
        for seed in 0..20 {
            assert!((sample_reynolds(&band, seed) - 3000.0).abs() < 1e-6);
        }
    }

    #[test]
    fn band_validation() {
        assert!(ReBand::baseline().validate().is_ok());
        assert!(ReBand { lo: 10.0, hi: 5.0, mean: 7.0, sigma: 1.0 }.validate().is_err());
        assert!(ReBand { lo: 1.0, hi: 5.0, mean: 7.0, sigma: 1.0 }.validate().is_err());
        assert!(ReBand { lo: 1.0, hi: 5.0, mean: 3.0, sigma: 0.0 }.validate().is_err());
    }

    proptest! {
        #[test]
        fn samples_stay_in_band(seed in any::<u64>(), tier in 0usize..3) {
            let band = ReBand::for_tier(Tier::ALL[tier]);
            let re = sample_reynolds(&band, seed);
            prop_assert!(band.contains(re));
            prop_assert_eq!(re.to_bits(), sample_reynolds(&band, seed).to_bits());
        }

        #[test]
        fn viscous_time_decreasing(re in 10.0f64..9999.0, bump in 1e-3f64..10.0) {
            let p = fluid();
            prop_assert!(viscous_time(re + bump, &p) < viscous_time(re, &p));
        }

        #[test]
        fn end_time_rounds_up(re in 100.0f64..=10_000.0) {
            let s = schedule_end_time(re, &fluid()).unwrap();
            prop_assert_eq!(s.t_end % 100.0, 0.0);
            prop_assert!(s.t_end >= s.gamma.unwrap() * viscous_time(re, &fluid()));
            prop_assert!((s.write_interval * 20.0 - s.t_end).abs() <= 1e-9 * s.t_end);
        }
    }
}
