//! Synthetic per-iteration cost models.
//!
//! Stochastic models draw each iteration's cost from a hash of
//! `(seed, index)`, so `cost(i)` never depends on evaluation order or on
//! which thread asks.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::Instant;

use crate::error::WorkloadError;
use crate::executor::BodyError;
use crate::loop_desc::LoopDescriptor;

/// Every iteration costs at least this many ticks.
pub const COST_FLOOR: f64 = 1.0;

/// Per-iteration cost in virtual ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostModel {
    Constant { cost: f64 },
    Linear { base: f64, slope: f64 },
    Uniform { lo: f64, hi: f64, seed: u64 },
    Gaussian { mean: f64, stddev: f64, seed: u64 },
    Exponential { mean: f64, seed: u64 },
}

fn finite(name: &str, v: f64) -> Result<f64, WorkloadError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(WorkloadError::Param(format!("{name} must be finite")))
    }
}

impl CostModel {
    pub fn constant(cost: f64) -> Result<Self, WorkloadError> {
        if finite("cost", cost)? < 0.0 {
            return Err(WorkloadError::Param("constant cost must be nonnegative".into()));
        }
        Ok(CostModel::Constant { cost })
    }

    pub fn linear(base: f64, slope: f64) -> Result<Self, WorkloadError> {
        Ok(CostModel::Linear {
            base: finite("base", base)?,
            slope: finite("slope", slope)?,
        })
    }

    pub fn uniform(lo: f64, hi: f64, seed: u64) -> Result<Self, WorkloadError> {
        if finite("lo", lo)? > finite("hi", hi)? {
            return Err(WorkloadError::Param(format!("uniform lo {lo} exceeds hi {hi}")));
        }
        Ok(CostModel::Uniform { lo, hi, seed })
    }

    pub fn gaussian(mean: f64, stddev: f64, seed: u64) -> Result<Self, WorkloadError> {
        if finite("mean", mean)? <= 0.0 {
            return Err(WorkloadError::Param("gaussian mean must be positive".into()));
        }
        if finite("stddev", stddev)? < 0.0 {
            return Err(WorkloadError::Param("gaussian stddev must be nonnegative".into()));
        }
        Ok(CostModel::Gaussian { mean, stddev, seed })
    }

    pub fn exponential(mean: f64, seed: u64) -> Result<Self, WorkloadError> {
        if finite("mean", mean)? <= 0.0 {
            return Err(WorkloadError::Param("exponential mean must be positive".into()));
        }
        Ok(CostModel::Exponential { mean, seed })
    }

    /// Cost of logical iteration `i`, floored at [`COST_FLOOR`].
    pub fn cost(&self, i: u64) -> f64 {
        let raw = match *self {
            CostModel::Constant { cost } => cost,
            CostModel::Linear { base, slope } => base + slope * i as f64,
            CostModel::Uniform { lo, hi, seed } => lo + (hi - lo) * unit(seed, i, 0),
            CostModel::Gaussian { mean, stddev, seed } => {
                // Box-Muller on two independent hashed uniforms
                let u1 = open_unit(seed, i, 1);
                let u2 = unit(seed, i, 2);
                let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                mean + stddev * z
            }
            CostModel::Exponential { mean, seed } => -mean * open_unit(seed, i, 0).ln(),
        };
        raw.max(COST_FLOOR)
    }

    /// Sum of costs over logical iterations `range`.
    pub fn total(&self, range: std::ops::Range<u64>) -> f64 {
        range.map(|i| self.cost(i)).sum()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash(seed: u64, i: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ i) ^ stream)
}

/// Uniform in `[0, 1)`.
fn unit(seed: u64, i: u64, stream: u64) -> f64 {
    (hash(seed, i, stream) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `(0, 1]`, safe for `ln`.
fn open_unit(seed: u64, i: u64, stream: u64) -> f64 {
    ((hash(seed, i, stream) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl FromStr for CostModel {
    type Err = WorkloadError;

    fn from_str(spec: &str) -> Result<Self, WorkloadError> {
        let grammar = || WorkloadError::Grammar { spec: spec.to_owned() };
        let parts: Vec<&str> = spec.trim().split(':').map(str::trim).collect();
        let real = |s: &str| s.parse::<f64>().map_err(|_| grammar());
        let int = |s: &str| s.parse::<u64>().map_err(|_| grammar());
        match parts.as_slice() {
            ["constant", c] => CostModel::constant(real(c)?),
            ["linear", a, b] => CostModel::linear(real(a)?, real(b)?),
            ["uniform", lo, hi, seed] => CostModel::uniform(real(lo)?, real(hi)?, int(seed)?),
            ["gaussian", m, s, seed] => CostModel::gaussian(real(m)?, real(s)?, int(seed)?),
            ["exponential", m, seed] => CostModel::exponential(real(m)?, int(seed)?),
            _ => Err(grammar()),
        }
    }
}

impl fmt::Display for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CostModel::Constant { cost } => write!(f, "constant:{cost}"),
            CostModel::Linear { base, slope } => write!(f, "linear:{base}:{slope}"),
            CostModel::Uniform { lo, hi, seed } => write!(f, "uniform:{lo}:{hi}:{seed}"),
            CostModel::Gaussian { mean, stddev, seed } => write!(f, "gaussian:{mean}:{stddev}:{seed}"),
            CostModel::Exponential { mean, seed } => write!(f, "exponential:{mean}:{seed}"),
        }
    }
}

/// Nanoseconds of wall time one tick stands for in real-mode runs.
pub const TICK_NANOS: u64 = 100;

/// Spin-loop calibration: how many spin rounds take one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub spins_per_tick: f64,
}

impl Calibration {
    pub fn measure() -> Self {
        const ROUNDS: u64 = 2_000_000;
        let start = Instant::now();
        spin(ROUNDS);
        let nanos = start.elapsed().as_nanos().max(1) as f64;
        Calibration {
            spins_per_tick: ROUNDS as f64 * TICK_NANOS as f64 / nanos,
        }
    }

    /// Measured once per process.
    pub fn global() -> Calibration {
        static CAL: OnceLock<Calibration> = OnceLock::new();
        *CAL.get_or_init(Calibration::measure)
    }
}

#[inline(never)]
fn spin(rounds: u64) {
    let mut acc = 0u64;
    for r in 0..rounds {
        acc = std::hint::black_box(acc.wrapping_add(r));
    }
    std::hint::black_box(acc);
}

/// A real-mode loop body that busy-waits roughly `cost(i)` ticks and touches
/// no shared state.
pub fn as_spin_body(
    model: CostModel,
    lp: &LoopDescriptor,
) -> impl Fn(usize, i64) -> Result<(), BodyError> + Sync + Send + 'static {
    let cal = Calibration::global();
    let lp = lp.clone();
    move |_thread, source| {
        let ticks = model.cost(lp.logical_index(source));
        spin((ticks * cal.spins_per_tick).ceil() as u64);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_models() {
        let c = CostModel::constant(5.0).unwrap();
        assert_eq!(c.cost(0), 5.0);
        assert_eq!(c.cost(12345), 5.0);
        assert_eq!(CostModel::linear(1.0, 2.0).unwrap().cost(10), 21.0);
        assert_eq!(CostModel::linear(10.0, -2.0).unwrap().cost(100), 1.0);
        assert_eq!(CostModel::constant(0.0).unwrap().cost(3), 1.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(CostModel::gaussian(10.0, -1.0, 0).is_err());
        assert!(CostModel::gaussian(0.0, 1.0, 0).is_err());
        assert!(CostModel::exponential(0.0, 0).is_err());
        assert!(CostModel::uniform(5.0, 1.0, 0).is_err());
        assert!(CostModel::constant(-1.0).is_err());
        assert!(CostModel::linear(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn grammar() {
        assert_eq!("constant:5".parse::<CostModel>().unwrap(), CostModel::Constant { cost: 5.0 });
        assert_eq!(
            "linear:1:2".parse::<CostModel>().unwrap(),
            CostModel::Linear { base: 1.0, slope: 2.0 }
        );
        assert_eq!(
            "uniform:1:10:3".parse::<CostModel>().unwrap(),
            CostModel::Uniform { lo: 1.0, hi: 10.0, seed: 3 }
        );
        assert_eq!(
            "gaussian:10:3:4".parse::<CostModel>().unwrap(),
            CostModel::Gaussian { mean: 10.0, stddev: 3.0, seed: 4 }
        );
        assert_eq!(
            "exponential:10:7".parse::<CostModel>().unwrap(),
            CostModel::Exponential { mean: 10.0, seed: 7 }
        );
        for bad in ["", "constant", "linear:1", "uniform:1:2", "exponential:10:x", "poisson:3", "gaussian:10:-1:0"] {
            assert!(bad.parse::<CostModel>().is_err(), "{bad}");
        }
        let err = "nope".parse::<CostModel>().unwrap_err().to_string();
        assert!(err.contains("exponential:MEAN:SEED"), "{err}");
    }

    #[test]
    fn display_round_trips() {
        for s in ["constant:5", "linear:1:2", "uniform:1:10:3", "gaussian:10:3:4", "exponential:10:7"] {
            assert_eq!(s.parse::<CostModel>().unwrap().to_string(), s);
        }
    }

    fn mean_and_sigma(model: &CostModel, n: u64) -> (f64, f64) {
        let xs: Vec<f64> = (0..n).map(|i| model.cost(i)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, (var / n as f64).sqrt())
    }

    #[test]
    fn exponential_sample_mean() {
        let m = CostModel::exponential(10.0, 7).unwrap();
        let (mean, se) = mean_and_sigma(&m, 100_000);
        // E[max(X, 1)] = 1 + 10 e^-0.1 ≈ 10.048
        let floored = 1.0 + 10.0 * (-0.1f64).exp();
        assert!((mean - floored).abs() < 3.0 * se, "mean {mean}");
        assert!((mean - 10.0).abs() < 3.0 * 10.0 / (100_000f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn gaussian_and_uniform_moments() {
        let g = CostModel::gaussian(50.0, 5.0, 11).unwrap();
        let (mean, se) = mean_and_sigma(&g, 50_000);
        assert!((mean - 50.0).abs() < 3.0 * se, "mean {mean}");
        let u = CostModel::uniform(2.0, 10.0, 5).unwrap();
        let (mean, se) = mean_and_sigma(&u, 50_000);
        assert!((mean - 6.0).abs() < 3.0 * se, "mean {mean}");
        assert!((0..1000).all(|i| (2.0..10.0).contains(&u.cost(i))));
    }

    proptest::proptest! {
        #[test]
        fn order_independent_and_floored(seed in 0u64..1000, idx in proptest::collection::vec(0u64..100_000, 1..50)) {
            let models = [
                CostModel::uniform(0.0, 3.0, seed).unwrap(),
                CostModel::gaussian(2.0, 4.0, seed).unwrap(),
                CostModel::exponential(2.0, seed).unwrap(),
            ];
            for m in &models {
                let forward: Vec<f64> = idx.iter().map(|&i| m.cost(i)).collect();
                let backward: Vec<f64> = idx.iter().rev().map(|&i| m.cost(i)).collect::<Vec<_>>().into_iter().rev().collect();
                proptest::prop_assert_eq!(&forward, &backward);
                proptest::prop_assert!(forward.iter().all(|&c| c >= COST_FLOOR));
            }
        }
    }

    #[test]
    fn spin_body_completes() {
        let lp = LoopDescriptor::range(10);
        let body = as_spin_body(CostModel::constant(0.0).unwrap(), &lp);
        for i in 0..10 {
            body(0, i).unwrap();
        }
    }
}
