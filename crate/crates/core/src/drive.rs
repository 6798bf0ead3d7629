//! Pump and Stokes pulses and the mixing angle they define.
//!
//! Time is measured in units of the pulse width `T` and frequencies in `1/T`
//! (ħ = 1).

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step used for central-difference derivatives of shaped (non-Gaussian)
/// pulses.
pub const SHAPED_DERIVATIVE_STEP: f64 = 1e-6;

/// Pump and Stokes Rabi-frequency units at one instant, with their time
/// derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub t: f64,
    pub pump: f64,
    pub stokes: f64,
    pub pump_dot: f64,
    pub stokes_dot: f64,
}

impl FieldSample {
    /// RMS Rabi frequency `Λ = √(Ω_P² + Ω_S²)`.
    pub fn rms(&self) -> f64 {
        self.pump.hypot(self.stokes)
    }
}

pub trait Drive: Send + Sync {
    fn sample(&self, t: f64) -> FieldSample;
}

impl<D: Drive + ?Sized> Drive for &D {
    fn sample(&self, t: f64) -> FieldSample {
        (**self).sample(t)
    }
}

/// Equal-width Gaussian pump and Stokes pulses,
/// `Ω_P = Ω₀ exp[−(t − τ/2)²/T²]`, `Ω_S = Ω₀ exp[−(t + τ/2)²/T²]`.
/// A positive delay puts the Stokes pulse first (counterintuitive order).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianDrive {
    pub peak: f64,
    pub width: f64,
    pub delay: f64,
}

impl GaussianDrive {
    pub fn new(peak: f64, delay: f64) -> Result<Self> {
        Self::with_width(peak, 1.0, delay)
    }

    pub fn with_width(peak: f64, width: f64, delay: f64) -> Result<Self> {
        if !(peak.is_finite() && peak >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "peak Rabi frequency must be finite and non-negative, got {peak}"
            )));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pulse width must be positive, got {width}"
            )));
        }
        if !delay.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delay must be finite, got {delay}"
            )));
        }
        Ok(Self { peak, width, delay })
    }

    /// Drive whose individual pulse area `∫Ω_P dt = Ω₀ T √π` equals `area`.
    pub fn from_area(area: f64, delay: f64) -> Result<Self> {
        Self::new(area / PI.sqrt(), delay)
    }

    /// `Ω₀ = 10√π/T`, `τ = T`: individual pulse areas of 10π.
    pub fn reference() -> Self {
        Self {
            peak: 10.0 * PI.sqrt(),
            width: 1.0,
            delay: 1.0,
        }
    }

    pub fn pulse_area(&self) -> f64 {
        self.peak * self.width * PI.sqrt()
    }
}

impl Drive for GaussianDrive {
    fn sample(&self, t: f64) -> FieldSample {
        let w2 = self.width * self.width;
        let dp = t - 0.5 * self.delay;
        let ds = t + 0.5 * self.delay;
        let pump = self.peak * (-dp * dp / w2).exp();
        let stokes = self.peak * (-ds * ds / w2).exp();
        FieldSample {
            t,
            pump,
            stokes,
            pump_dot: -2.0 * dp / w2 * pump,
            stokes_dot: -2.0 * ds / w2 * stokes,
        }
    }
}

pub fn evaluate_drive<D: Drive + ?Sized>(drive: &D, t: f64) -> FieldSample {
    drive.sample(t)
}

/// Arbitrary pulse shapes given as closures; derivatives are taken by
/// central differences with step [`SHAPED_DERIVATIVE_STEP`].
pub struct ShapedDrive<P, S> {
    pub pump: P,
    pub stokes: S,
}

impl<P, S> Drive for ShapedDrive<P, S>
where
    P: Fn(f64) -> f64 + Send + Sync,
    S: Fn(f64) -> f64 + Send + Sync,
{
    fn sample(&self, t: f64) -> FieldSample {
        let h = SHAPED_DERIVATIVE_STEP;
        FieldSample {
            t,
            pump: (self.pump)(t),
            stokes: (self.stokes)(t),
            pump_dot: ((self.pump)(t + h) - (self.pump)(t - h)) / (2.0 * h),
            stokes_dot: ((self.stokes)(t + h) - (self.stokes)(t - h)) / (2.0 * h),
        }
    }
}

/// Wraps a drive and multiplies its Stokes field by a constant.
pub struct StokesScaled<D> {
    pub inner: D,
    pub scale: f64,
}

impl<D: Drive> Drive for StokesScaled<D> {
    fn sample(&self, t: f64) -> FieldSample {
        let mut s = self.inner.sample(t);
        s.stokes *= self.scale;
        s.stokes_dot *= self.scale;
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingState {
    pub t: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub rms: f64,
}

/// `θ = arctan(Ω_P/Ω_S)` and `θ̇ = (Ω̇_P Ω_S − Ω_P Ω̇_S)/Λ²`. Both fields are
/// rescaled by their maximum first so that far Gaussian tails do not
/// underflow `Λ²`.
pub fn mixing_state(f: &FieldSample) -> Result<MixingState> {
    if f.pump < 0.0 || f.stokes < 0.0 {
        return Err(Error::NegativeField {
            pump: f.pump,
            stokes: f.stokes,
        });
    }
    let m = f.pump.max(f.stokes);
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::UndefinedAngle);
    }
    let p = f.pump / m;
    let s = f.stokes / m;
    let theta = p.atan2(s).clamp(0.0, FRAC_PI_2);
    let theta_dot = (f.pump_dot / m * s - p * f.stokes_dot / m) / (p * p + s * s);
    Ok(MixingState {
        t: f.t,
        theta,
        theta_dot,
        rms: m * p.hypot(s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pump_peak() {
        let d = GaussianDrive::new(3.0, 1.4).unwrap();
        let f = d.sample(0.7);
        assert_abs_diff_eq!(f.pump, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.pump_dot, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn symmetry_point() {
        let d = GaussianDrive::new(2.0, 1.0).unwrap();
        let f = d.sample(0.0);
        let want = 2.0 * (-0.25_f64).exp();
        assert_abs_diff_eq!(f.pump, want, epsilon = 1e-15);
        assert_abs_diff_eq!(f.stokes, want, epsilon = 1e-15);
    }

    #[test]
    fn reference_pulse_area_is_ten_pi() {
        let d = GaussianDrive::reference();
        assert_abs_diff_eq!(d.pulse_area(), 10.0 * PI, epsilon = 1e-12);
        // trapezoid over ±12 T
        let n = 24_000;
        let h = 24.0 / n as f64;
        let area: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * d.sample(-12.0 + k as f64 * h).pump
            })
            .sum::<f64>()
            * h;
        assert_abs_diff_eq!(area, 10.0 * PI, epsilon = 1e-10);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let d = GaussianDrive::new(1.7, 0.8).unwrap();
        for &t in &[-2.0, -0.3, 0.0, 0.9, 2.5] {
            let f = d.sample(t);
            let h = 1e-6;
            let fd = (d.sample(t + h).pump - d.sample(t - h).pump) / (2.0 * h);
            assert_abs_diff_eq!(f.pump_dot, fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn limiting_angles() {
        let only_stokes = FieldSample {
            t: 0.0,
            pump: 0.0,
            stokes: 2.0,
            pump_dot: 0.0,
            stokes_dot: 0.0,
        };
        assert_eq!(mixing_state(&only_stokes).unwrap().theta, 0.0);
        let only_pump = FieldSample {
            t: 0.0,
            pump: 2.0,
            stokes: 0.0,
            pump_dot: 0.0,
            stokes_dot: 0.0,
        };
        assert_abs_diff_eq!(
            mixing_state(&only_pump).unwrap().theta,
            FRAC_PI_2,
            epsilon = 0.0
        );
    }

    #[test]
    fn undefined_angle() {
        let zero = FieldSample {
            t: 0.0,
            pump: 0.0,
            stokes: 0.0,
            pump_dot: 0.0,
            stokes_dot: 0.0,
        };
        assert_eq!(mixing_state(&zero), Err(Error::UndefinedAngle));
        let neg = FieldSample {
            t: 0.0,
            pump: -1.0,
            stokes: 1.0,
            pump_dot: 0.0,
            stokes_dot: 0.0,
        };
        assert!(matches!(
            mixing_state(&neg),
            Err(Error::NegativeField { .. })
        ));
    }

    #[test]
    fn gaussian_theta_dot_is_sech() {
        // θ = arctan(exp(2τt/T²)) for equal-width Gaussians, so
        // θ̇ = (τ/T²) sech(2τt/T²).
        let d = GaussianDrive::new(5.0, 1.3).unwrap();
        for k in -40..=40 {
            let t = 0.1 * k as f64;
            let ms = mixing_state(&d.sample(t)).unwrap();
            let closed = 1.3 / (2.0 * 1.3 * t).cosh();
            assert_abs_diff_eq!(ms.theta_dot, closed, epsilon = 1e-12);
            let h = 1e-5;
            let fd = (mixing_state(&d.sample(t + h)).unwrap().theta
                - mixing_state(&d.sample(t - h)).unwrap().theta)
                / (2.0 * h);
            assert_abs_diff_eq!(ms.theta_dot, fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn mirror_symmetry_of_mixing_angle() {
        let d = GaussianDrive::reference();
        for k in 0..=500 {
            let t = 0.01 * k as f64;
            let a = mixing_state(&d.sample(t)).unwrap();
            let b = mixing_state(&d.sample(-t)).unwrap();
            assert_abs_diff_eq!(b.theta, FRAC_PI_2 - a.theta, epsilon = 1e-12);
            assert_abs_diff_eq!(b.theta_dot, a.theta_dot, epsilon = 1e-12);
        }
    }

    #[test]
    fn far_tails_do_not_underflow() {
        let d = GaussianDrive::reference();
        let ms = mixing_state(&d.sample(-20.0)).unwrap();
        assert!(ms.theta_dot.is_finite() && ms.theta.is_finite());
    }

    #[test]
    fn shaped_drive_uses_differences() {
        let d = ShapedDrive {
            pump: |t: f64| (-(t - 0.5).powi(2)).exp(),
            stokes: |t: f64| (-(t + 0.5).powi(2)).exp(),
        };
        let g = GaussianDrive::new(1.0, 1.0).unwrap();
        let a = d.sample(0.3);
        let b = g.sample(0.3);
        assert_abs_diff_eq!(a.pump_dot, b.pump_dot, epsilon = 1e-8);
        assert_abs_diff_eq!(a.stokes_dot, b.stokes_dot, epsilon = 1e-8);
    }
}
