//! Programmable on-chip oscillator.
//!
//! A 4-bit control word selects the cycle time. The model interpolates
//! linearly in cycle time between the fastest setting (word 0, 134 MHz) and
//! the slowest (word 15, 44 MHz), so each step adds the same delay.

/// Frequency at control word 0, in Hz.
pub const MAX_FREQUENCY_HZ: f64 = 134.0e6;
/// Frequency at control word 15, in Hz.
pub const MIN_FREQUENCY_HZ: f64 = 44.0e6;
pub const MAX_CONTROL_WORD: u8 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("oscillator control word {0} out of range 0..=15")]
pub struct ControlWordOutOfRange(pub u8);

/// One oscillator configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorSetting {
    control_word: u8,
    cycle_time: f64,
}

impl OscillatorSetting {
    pub fn new(control_word: u8) -> Result<OscillatorSetting, ControlWordOutOfRange> {
        if control_word > MAX_CONTROL_WORD {
            return Err(ControlWordOutOfRange(control_word));
        }
        let fastest = 1.0 / MAX_FREQUENCY_HZ;
        let slowest = 1.0 / MIN_FREQUENCY_HZ;
        let step = (slowest - fastest) / MAX_CONTROL_WORD as f64;
        Ok(OscillatorSetting {
            control_word,
            cycle_time: fastest + control_word as f64 * step,
        })
    }

    pub fn control_word(&self) -> u8 {
        self.control_word
    }

    /// Seconds per cycle.
    pub fn cycle_time(&self) -> f64 {
        self.cycle_time
    }

    /// Hz.
    pub fn frequency(&self) -> f64 {
        1.0 / self.cycle_time
    }

    pub fn all() -> impl Iterator<Item = OscillatorSetting> {
        (0..=MAX_CONTROL_WORD).map(|w| OscillatorSetting::new(w).unwrap())
    }
}

/// Clock frequency in Hz for a control word.
///
/// ```
/// let f = pec::clocking::frequency_of(0).unwrap();
/// assert!((f - 134.0e6).abs() < 1.0);
/// ```
pub fn frequency_of(control_word: u8) -> Result<f64, ControlWordOutOfRange> {
    OscillatorSetting::new(control_word).map(|s| s.frequency())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        assert!((frequency_of(0).unwrap() / 134.0e6 - 1.0).abs() < 1e-12);
        assert!((frequency_of(15).unwrap() / 44.0e6 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn midpoint_word_seven() {
        // T7 = 7.4627 ns + 7 * (22.7273 - 7.4627) / 15 ns
        let s = OscillatorSetting::new(7).unwrap();
        assert!((s.cycle_time() * 1e9 - 14.5862).abs() < 1e-3);
        assert!((s.frequency() / 1e6 - 68.56).abs() < 0.01);
    }

    #[test]
    fn strictly_decreasing_and_in_range() {
        let freqs: Vec<f64> = OscillatorSetting::all().map(|s| s.frequency()).collect();
        assert_eq!(freqs.len(), 16);
        for pair in freqs.windows(2) {
            assert!(pair[1] < pair[0]);
        }
        for f in freqs {
            assert!((MIN_FREQUENCY_HZ * (1.0 - 1e-12)..=MAX_FREQUENCY_HZ * (1.0 + 1e-12)).contains(&f));
        }
    }

    #[test]
    fn period_frequency_reciprocal() {
        for s in OscillatorSetting::all() {
            assert!((s.frequency() * s.cycle_time() - 1.0).abs() < 1e-12);
            assert!((1.0 / s.frequency() - s.cycle_time()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_wide_words() {
        assert_eq!(frequency_of(16), Err(ControlWordOutOfRange(16)));
        assert!(OscillatorSetting::new(255).is_err());
    }
}
