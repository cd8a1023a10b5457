use serde::{Deserialize, Serialize};

/// `amplitude * cos(omega * t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

impl Harmonic {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (self.omega * t + self.phase).cos()
    }

    /// `∫_a^b amplitude cos(omega t + phase) dt`.
    #[inline]
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if self.omega == 0.0 {
            return self.amplitude * self.phase.cos() * (b - a);
        }
        // sin x - sin y = 2 cos((x+y)/2) sin((x-y)/2), stable for short pieces
        let half = 0.5 * self.omega * (b - a);
        let mid = 0.5 * self.omega * (a + b) + self.phase;
        self.amplitude * 2.0 * mid.cos() * half.sin() / self.omega
    }
}

/// Intensity on one structural segment:
/// `constant + scale * Σ_h harmonic_h(t)`.
#[derive(Debug, Clone, Copy)]
pub struct RateForm<'a> {
    pub constant: f64,
    pub scale: f64,
    pub harmonics: &'a [Harmonic],
}

impl<'a> RateForm<'a> {
    pub const ZERO: RateForm<'static> = RateForm {
        constant: 0.0,
        scale: 0.0,
        harmonics: &[],
    };

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if self.scale == 0.0 {
            return self.constant;
        }
        self.constant + self.scale * self.harmonics.iter().map(|h| h.eval(t)).sum::<f64>()
    }

    #[inline]
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let base = self.constant * (b - a);
        if self.scale == 0.0 {
            return base;
        }
        base + self.scale * self.harmonics.iter().map(|h| h.integral(a, b)).sum::<f64>()
    }

    /// Dominating constant rate used for thinning.
    pub fn upper_bound(&self) -> f64 {
        self.constant + self.scale.abs() * self.harmonics.iter().map(|h| h.amplitude.abs()).sum::<f64>()
    }

    pub fn has_harmonics(&self) -> bool {
        self.scale != 0.0 && !self.harmonics.is_empty()
    }
}
