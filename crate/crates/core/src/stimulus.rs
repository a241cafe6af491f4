//! Piecewise-constant inputs added to one state variable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A piecewise-constant additive input.
pub trait Input: Sync {
    /// Input value on `[t, next)` together with `next`, the first time after
    /// `t` at which the value may change (`f64::INFINITY` if never).
    fn piece(&self, t: f64) -> (f64, f64);
}

/// The zero input.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoInput;

impl Input for NoInput {
    fn piece(&self, _t: f64) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
}

/// Square pulse of a fixed amplitude and length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub amplitude: f64,
    pub length: f64,
}

impl PulseSpec {
    pub fn new(amplitude: f64, length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "pulse needs finite amplitude and positive length (A = {amplitude}, L = {length})"
            )));
        }
        Ok(Self { amplitude, length })
    }

    pub fn at(self, onset: f64) -> SinglePulse {
        SinglePulse { onset, pulse: self }
    }
}

/// One square pulse starting at `onset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePulse {
    pub onset: f64,
    pub pulse: PulseSpec,
}

impl Input for SinglePulse {
    fn piece(&self, t: f64) -> (f64, f64) {
        let off = self.onset + self.pulse.length;
        if t < self.onset {
            (0.0, self.onset)
        } else if t < off {
            (self.pulse.amplitude, off)
        } else {
            (0.0, f64::INFINITY)
        }
    }
}

/// Square pulses repeated with period `period`, the first one at `first_onset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicStimulus {
    pub pulse: PulseSpec,
    pub period: f64,
    pub first_onset: f64,
}

impl PeriodicStimulus {
    pub fn new(pulse: PulseSpec, period: f64) -> Result<Self> {
        if !(period.is_finite() && period > pulse.length) {
            return Err(Error::InvalidConfig(format!(
                "stimulus period {period} must exceed the pulse length {}",
                pulse.length
            )));
        }
        Ok(Self {
            pulse,
            period,
            first_onset: 0.0,
        })
    }

    /// Onset times in `[t0, t1]`.
    pub fn onsets(&self, t0: f64, t1: f64) -> Vec<f64> {
        let k0 = ((t0 - self.first_onset) / self.period).ceil().max(0.0) as u64;
        let mut out = Vec::new();
        let mut k = k0;
        loop {
            let t = self.first_onset + k as f64 * self.period;
            if t > t1 {
                break;
            }
            out.push(t);
            k += 1;
        }
        out
    }
}

impl Input for PeriodicStimulus {
    fn piece(&self, t: f64) -> (f64, f64) {
        if t < self.first_onset {
            return (0.0, self.first_onset);
        }
        let k = ((t - self.first_onset) / self.period).floor();
        let mut onset = self.first_onset + k * self.period;
        // floor can land one period late through rounding
        if onset > t {
            onset -= self.period;
        } else if onset + self.period <= t {
            onset += self.period;
        }
        let off = onset + self.pulse.length;
        if t < off {
            (self.pulse.amplitude, off)
        } else {
            (0.0, onset + self.period)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pulse_pieces() {
        let p = PulseSpec::new(-0.5, 0.05).unwrap().at(2.0);
        assert_eq!(p.piece(0.0), (0.0, 2.0));
        assert_eq!(p.piece(2.0), (-0.5, 2.05));
        assert_eq!(p.piece(2.05).0, 0.0);
        assert!(PulseSpec::new(1.0, 0.0).is_err());
    }

    #[test]
    fn periodic_pieces_and_onsets() {
        let s = PeriodicStimulus::new(PulseSpec::new(1.0, 0.5).unwrap(), 10.0).unwrap();
        assert_eq!(s.piece(0.0), (1.0, 0.5));
        assert_eq!(s.piece(0.5), (0.0, 10.0));
        assert_eq!(s.piece(20.2), (1.0, 20.5));
        assert_eq!(s.piece(25.2), (0.0, 30.0));
        assert_eq!(s.onsets(5.0, 40.0), vec![10.0, 20.0, 30.0, 40.0]);
        assert!(PeriodicStimulus::new(PulseSpec::new(1.0, 0.5).unwrap(), 0.4).is_err());
    }
}
