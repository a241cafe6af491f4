use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean spacing of a sequence of marker events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    pub period: f64,
    /// Largest deviation of a single interval from `period`.
    pub max_deviation: f64,
    /// Number of marker events used.
    pub events: usize,
}

impl PeriodEstimate {
    /// Needs at least three events.
    pub fn from_event_times(times: &[f64]) -> Result<Self> {
        if times.len() < 3 {
            return Err(Error::NotPeriodic(format!(
                "{} marker events, at least 3 needed",
                times.len()
            )));
        }
        let n = times.len();
        let period = (times[n - 1] - times[0]) / (n - 1) as f64;
        let max_deviation = times
            .windows(2)
            .map(|w| (w[1] - w[0] - period).abs())
            .fold(0.0, f64::max);
        Ok(Self {
            period,
            max_deviation,
            events: n,
        })
    }

    pub fn relative_spread(&self) -> f64 {
        self.max_deviation / self.period
    }
}
