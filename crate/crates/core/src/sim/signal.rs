use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Shape of one piece of an input signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SignalForm {
    Constant { value: f64 },
    /// Coefficients of `t^0, t^1, ...` in absolute time.
    Polynomial { coeffs: Vec<f64> },
    /// `offset + amplitude * sin(omega * t + phase)`.
    Sine { amplitude: f64, omega: f64, phase: f64, offset: f64 },
    /// Piecewise constant values `mean + amplitude * U(-1, 1)` redrawn every `hold`.
    HeldNoise { seed: u64, amplitude: f64, hold: f64, mean: f64 },
}

impl SignalForm {
    fn noise_value(seed: u64, amplitude: f64, mean: f64, cell: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(cell as u128 * 2);
        let u: f64 = rng.gen();
        mean + amplitude * (2.0 * u - 1.0)
    }

    fn value(&self, start: f64, t: f64) -> f64 {
        match self {
            SignalForm::Constant { value } => *value,
            SignalForm::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            SignalForm::Sine { amplitude, omega, phase, offset } => offset + amplitude * (omega * t + phase).sin(),
            SignalForm::HeldNoise { seed, amplitude, hold, mean } => {
                let cell = ((t - start) / hold).floor().max(0.0) as u64;
                Self::noise_value(*seed, *amplitude, *mean, cell)
            }
        }
    }

    /// Taylor coefficients at `t0` up to `order`.
    fn taylor(&self, start: f64, t0: f64, order: usize) -> Vec<f64> {
        let mut c = vec![0.0; order + 1];
        match self {
            SignalForm::Constant { value } => c[0] = *value,
            SignalForm::HeldNoise { .. } => c[0] = self.value(start, t0),
            SignalForm::Polynomial { coeffs } => {
                // repeated synthetic division gives the shifted coefficients
                let mut a = coeffs.clone();
                for slot in c.iter_mut().take(a.len().min(order + 1)) {
                    let mut acc = 0.0;
                    for k in (0..a.len()).rev() {
                        acc = acc * t0 + a[k];
                        a[k] = acc;
                    }
                    *slot = a[0];
                    a.remove(0);
                }
            }
            SignalForm::Sine { amplitude, omega, phase, offset } => {
                let theta = omega * t0 + phase;
                let (s, co) = theta.sin_cos();
                let mut scale = *amplitude;
                for (j, slot) in c.iter_mut().enumerate() {
                    let d = match j % 4 {
                        0 => s,
                        1 => co,
                        2 => -s,
                        _ => -co,
                    };
                    *slot = scale * d;
                    scale *= omega / (j as f64 + 1.0);
                }
                c[0] += offset;
            }
        }
        c
    }

    fn derivative(&self) -> SignalForm {
        match self {
            SignalForm::Constant { .. } | SignalForm::HeldNoise { .. } => SignalForm::Constant { value: 0.0 },
            SignalForm::Polynomial { coeffs } => SignalForm::Polynomial {
                coeffs: coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect(),
            },
            SignalForm::Sine { amplitude, omega, phase, .. } => SignalForm::Sine {
                amplitude: amplitude * omega,
                omega: *omega,
                phase: phase + std::f64::consts::FRAC_PI_2,
                offset: 0.0,
            },
        }
    }
}

/// Piecewise input signal. Each piece starts at its time stamp and lasts
/// until the next one; the first piece also covers all earlier times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSignal {
    pieces: Vec<(f64, SignalForm)>,
}

impl InputSignal {
    pub fn new(mut pieces: Vec<(f64, SignalForm)>) -> Self {
        assert!(!pieces.is_empty(), "a signal needs at least one piece");
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        InputSignal { pieces }
    }

    pub fn constant(v: f64) -> Self {
        Self::new(vec![(0.0, SignalForm::Constant { value: v })])
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::new(vec![(0.0, SignalForm::Polynomial { coeffs })])
    }

    pub fn sine(amplitude: f64, omega: f64, phase: f64) -> Self {
        Self::new(vec![(0.0, SignalForm::Sine { amplitude, omega, phase, offset: 0.0 })])
    }

    pub fn held_noise(seed: u64, amplitude: f64, hold: f64) -> Self {
        Self::new(vec![(0.0, SignalForm::HeldNoise { seed, amplitude, hold, mean: 0.0 })])
    }

    /// Constant values switching at the given times.
    pub fn steps(steps: &[(f64, f64)]) -> Self {
        Self::new(steps.iter().map(|&(t, v)| (t, SignalForm::Constant { value: v })).collect())
    }

    /// Same signal, zero from `t_end` on.
    pub fn until(mut self, t_end: f64) -> Self {
        self.pieces.retain(|(s, _)| *s < t_end);
        self.pieces.push((t_end, SignalForm::Constant { value: 0.0 }));
        self
    }

    /// Same signal plus the constant `c`.
    pub fn shifted(mut self, c: f64) -> Self {
        for (_, f) in &mut self.pieces {
            match f {
                SignalForm::Constant { value } => *value += c,
                SignalForm::Polynomial { coeffs } => match coeffs.first_mut() {
                    Some(a) => *a += c,
                    None => coeffs.push(c),
                },
                SignalForm::Sine { offset, .. } => *offset += c,
                SignalForm::HeldNoise { mean, .. } => *mean += c,
            }
        }
        self
    }

    pub fn pieces(&self) -> &[(f64, SignalForm)] {
        &self.pieces
    }

    fn piece_at(&self, t: f64) -> &(f64, SignalForm) {
        let idx = self.pieces.partition_point(|(s, _)| *s <= t);
        &self.pieces[idx.saturating_sub(1)]
    }

    pub fn value(&self, t: f64) -> f64 {
        let (s, f) = self.piece_at(t);
        f.value(*s, t)
    }

    /// Value at `t` of the piece active at `anchor`, for use inside a step.
    pub fn value_anchored(&self, anchor: f64, t: f64) -> f64 {
        let (s, f) = self.piece_at(anchor);
        match f {
            SignalForm::HeldNoise { .. } => f.value(*s, anchor),
            _ => f.value(*s, t),
        }
    }

    /// Right-sided Taylor coefficients at `t0`.
    pub fn taylor(&self, t0: f64, order: usize) -> Vec<f64> {
        let (s, f) = self.piece_at(t0);
        f.taylor(*s, t0, order)
    }

    /// First discontinuity strictly after `t`.
    pub fn next_breakpoint(&self, t: f64) -> Option<f64> {
        let idx = self.pieces.partition_point(|(s, _)| *s <= t);
        let next_piece = self.pieces.get(idx).map(|(s, _)| *s);
        let (s, f) = self.piece_at(t);
        let inner = match f {
            SignalForm::HeldNoise { hold, .. } if t >= *s => {
                let k = ((t - s) / hold).floor() + 1.0;
                let mut b = s + k * hold;
                if b <= t {
                    b += hold;
                }
                Some(b)
            }
            _ => None,
        };
        match (next_piece, inner) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Piecewise derivative; jumps are ignored.
    pub fn derivative(&self) -> InputSignal {
        InputSignal { pieces: self.pieces.iter().map(|(s, f)| (*s, f.derivative())).collect() }
    }

    /// Supremum of `|value|` over `[a, b]`, exact for piecewise constant signals.
    pub fn sup_abs(&self, a: f64, b: f64) -> f64 {
        let mut best = self.value(a).abs().max(self.value(b).abs());
        let mut t = a;
        while let Some(bp) = self.next_breakpoint(t) {
            if bp >= b {
                break;
            }
            best = best.max(self.value(bp).abs());
            t = bp;
        }
        let smooth = self.pieces.iter().any(|(_, f)| matches!(f, SignalForm::Sine { .. } | SignalForm::Polynomial { .. }));
        if smooth {
            let n = 512;
            for i in 0..=n {
                let s = a + (b - a) * i as f64 / n as f64;
                best = best.max(self.value(s).abs());
            }
        }
        best
    }
}

/// Infinity norm of a signal vector at `t`.
pub fn norm_at(signals: &[InputSignal], t: f64) -> f64 {
    signals.iter().map(|s| s.value(t).abs()).fold(0.0, f64::max)
}

/// Earliest breakpoint after `t` among `signals`.
pub fn next_breakpoint(signals: &[InputSignal], t: f64) -> Option<f64> {
    signals.iter().filter_map(|s| s.next_breakpoint(t)).min_by(f64::total_cmp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_taylor_matches_derivatives() {
        let s = InputSignal::sine(2.0, 3.0, 0.5);
        let c = s.taylor(1.0, 4);
        let th: f64 = 3.5;
        assert!((c[0] - 2.0 * th.sin()).abs() < 1e-15);
        assert!((c[1] - 6.0 * th.cos()).abs() < 1e-14);
        assert!((c[2] + 9.0 * th.sin()).abs() < 1e-14);
        assert!((c[3] + 27.0 / 3.0 * th.cos()).abs() < 1e-13);
    }

    #[test]
    fn polynomial_taylor_shift() {
        let s = InputSignal::polynomial(vec![1.0, 0.0, 3.0]);
        let c = s.taylor(2.0, 5);
        assert_eq!(c, vec![13.0, 12.0, 3.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn held_noise_is_deterministic_and_piecewise() {
        let a = InputSignal::held_noise(7, 0.5, 0.25);
        let b = InputSignal::held_noise(7, 0.5, 0.25);
        assert_eq!(a.value(0.3), b.value(0.3));
        assert_eq!(a.value(0.26), a.value(0.49));
        assert!(a.value(0.3).abs() <= 0.5);
        assert_eq!(a.next_breakpoint(0.3), Some(0.5));
        assert_eq!(a.next_breakpoint(0.5), Some(0.75));
        let c = InputSignal::held_noise(8, 0.5, 0.25);
        assert_ne!(a.value(0.1), c.value(0.1));
    }

    #[test]
    fn steps_and_until() {
        let s = InputSignal::steps(&[(0.0, 1.0), (2.0, 3.0)]);
        assert_eq!(s.value(1.9), 1.0);
        assert_eq!(s.value(2.0), 3.0);
        assert_eq!(s.next_breakpoint(0.0), Some(2.0));
        assert_eq!(s.next_breakpoint(2.0), None);
        let n = InputSignal::held_noise(1, 1.0, 0.5).until(1.0);
        assert_eq!(n.value(1.5), 0.0);
        assert_eq!(n.next_breakpoint(0.6), Some(1.0));
    }
}
