use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simulation and assignment time grid.
///
/// The horizon is `intervals * interval_s`; each assignment interval holds a
/// whole number of simulation steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Clock {
    /// Simulation step, seconds.
    pub step_s: f64,
    /// Assignment interval length, seconds.
    pub interval_s: f64,
    /// Number of assignment intervals in the horizon.
    pub intervals: usize,
}

impl Clock {
    pub fn new(step_s: f64, interval_s: f64, intervals: usize) -> Result<Self> {
        let c = Clock {
            step_s,
            interval_s,
            intervals,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_s.is_finite() && self.step_s > 0.0) {
            return Err(Error::InvalidClock(format!("step {} must be > 0", self.step_s)));
        }
        if !(self.interval_s.is_finite() && self.interval_s > 0.0) {
            return Err(Error::InvalidClock(format!(
                "interval {} must be > 0",
                self.interval_s
            )));
        }
        if self.intervals == 0 {
            return Err(Error::InvalidClock("at least one interval required".into()));
        }
        let ratio = self.interval_s / self.step_s;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidClock(format!(
                "interval {} s is not an integer multiple of step {} s",
                self.interval_s, self.step_s
            )));
        }
        if ratio.round() * self.intervals as f64 > u32::MAX as f64 {
            return Err(Error::InvalidClock("too many simulation steps".into()));
        }
        Ok(())
    }

    pub fn steps_per_interval(&self) -> usize {
        (self.interval_s / self.step_s).round() as usize
    }

    pub fn total_steps(&self) -> usize {
        self.steps_per_interval() * self.intervals
    }

    pub fn horizon_s(&self) -> f64 {
        self.interval_s * self.intervals as f64
    }

    /// Interval containing time `t`; times past the horizon map to the last interval.
    pub fn interval_at(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        ((t / self.interval_s).floor() as usize).min(self.intervals - 1)
    }

    pub fn interval_of_step(&self, step: usize) -> usize {
        (step / self.steps_per_interval()).min(self.intervals - 1)
    }

    pub fn interval_start(&self, interval: usize) -> f64 {
        interval as f64 * self.interval_s
    }

    /// Representative departure time of an interval (its midpoint).
    pub fn interval_mid(&self, interval: usize) -> f64 {
        (interval as f64 + 0.5) * self.interval_s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_multiple_interval() {
        assert!(Clock::new(1.0, 300.5, 4).is_err());
        assert!(Clock::new(2.0, 1.0, 4).is_err());
        assert!(Clock::new(1.0, 300.0, 0).is_err());
    }

    #[test]
    fn counts() {
        let c = Clock::new(0.5, 300.0, 12).unwrap();
        assert_eq!(c.steps_per_interval(), 600);
        assert_eq!(c.total_steps(), 7200);
        assert_eq!(c.interval_at(299.9), 0);
        assert_eq!(c.interval_at(300.0), 1);
        assert_eq!(c.interval_at(1e9), 11);
        assert_eq!(c.interval_of_step(600), 1);
    }
}
