//! Successive-average step sizes and proportion updates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// MSWA weighting; `gamma = 0` is plain MSA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSchedule {
    pub gamma: f64,
}

impl StepSchedule {
    pub fn msa() -> Self {
        StepSchedule { gamma: 0.0 }
    }

    pub fn mswa(gamma: f64) -> Self {
        StepSchedule { gamma }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::range("gamma", self.gamma, 0.0, f64::INFINITY));
        }
        Ok(())
    }
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self::mswa(2.0)
    }
}

fn pow(j: usize, gamma: f64) -> f64 {
    if gamma.fract() == 0.0 && gamma <= 64.0 {
        (j as f64).powi(gamma as i32)
    } else {
        (j as f64).powf(gamma)
    }
}

/// `θ_n = n^γ / Σ_{j=1..n} j^γ`.
pub fn step_size(n: usize, schedule: &StepSchedule) -> Result<f64> {
    schedule.validate()?;
    if n < 1 {
        return Err(Error::range("iteration", n as f64, 1.0, f64::INFINITY));
    }
    let denom: f64 = (1..=n).map(|j| pow(j, schedule.gamma)).sum();
    Ok(pow(n, schedule.gamma) / denom)
}

/// `p + θ (y − p)` elementwise.
pub fn update_proportions(p: &[f64], y: &[f64], theta: f64) -> Result<Vec<f64>> {
    if p.len() != y.len() {
        return Err(Error::Structural(format!(
            "proportion vectors of length {} and {}",
            p.len(),
            y.len()
        )));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::range("theta", theta, 0.0, 1.0));
    }
    Ok(p.iter().zip(y).map(|(&p, &y)| p + theta * (y - p)).collect())
}

/// Path flows `p · q` of one (OD, interval, class).
pub fn path_flows(p: &[f64], demand: f64) -> Vec<f64> {
    p.iter().map(|&x| x * demand).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        assert_eq!(step_size(4, &StepSchedule::msa()).unwrap(), 0.25);
        // γ = 1: n / (n(n+1)/2) = 2/(n+1)
        assert_eq!(step_size(3, &StepSchedule::mswa(1.0)).unwrap(), 0.5);
        for n in 1..50 {
            let t = step_size(n, &StepSchedule::mswa(1.0)).unwrap();
            assert!((t - 2.0 / (n as f64 + 1.0)).abs() < 1e-15);
        }
        assert!((step_size(2, &StepSchedule::mswa(2.0)).unwrap() - 0.8).abs() < 1e-15);
        for g in [0.0, 0.5, 1.0, 2.0, 3.7] {
            assert_eq!(step_size(1, &StepSchedule::mswa(g)).unwrap(), 1.0);
        }
        assert!(step_size(0, &StepSchedule::msa()).is_err());
        assert!(step_size(1, &StepSchedule::mswa(-1.0)).is_err());
    }

    #[test]
    fn update_examples() {
        let y = [1.0, 0.0];
        assert_eq!(update_proportions(&[0.5, 0.5], &y, 1.0).unwrap(), y);
        assert_eq!(update_proportions(&[0.5, 0.5], &y, 0.0).unwrap(), [0.5, 0.5]);
        let p = update_proportions(&[0.5, 0.5], &y, 0.4).unwrap();
        assert!((p[0] - 0.7).abs() < 1e-15 && (p[1] - 0.3).abs() < 1e-15);
        assert!(update_proportions(&[1.0], &y, 0.5).is_err());
    }

    #[test]
    fn flows_examples() {
        assert_eq!(path_flows(&[0.7, 0.3], 100.0), [70.0, 30.0]);
        assert_eq!(path_flows(&[0.7, 0.3], 0.0), [0.0, 0.0]);
    }

    #[test]
    fn msa_is_the_running_mean() {
        // starting from y¹, p after n steps is the mean of y¹..yⁿ
        let ys = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut p = ys[0].to_vec();
        for (i, y) in ys.iter().enumerate().skip(1) {
            let t = step_size(i + 1, &StepSchedule::msa()).unwrap();
            p = update_proportions(&p, y, t).unwrap();
        }
        assert_eq!(p, [0.25, 0.5, 0.25]);
    }

    proptest! {
        #[test]
        fn theta_in_unit_interval(n in 1usize..300, g in 0.0f64..5.0) {
            let t = step_size(n, &StepSchedule::mswa(g)).unwrap();
            prop_assert!(t > 0.0 && t <= 1.0);
        }

        #[test]
        fn update_preserves_sum(
            raw in proptest::collection::vec(0.01f64..1.0, 1..6),
            k in 0usize..6,
            theta in 0.0f64..=1.0,
        ) {
            let s: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let mut y = vec![0.0; p.len()];
            y[k % p.len()] = 1.0;
            let q = update_proportions(&p, &y, theta).unwrap();
            prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
