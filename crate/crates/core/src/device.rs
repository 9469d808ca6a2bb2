//! Rectifying memristor model.
//!
//! Forward-biased resistance interpolates geometrically between `r_off`
//! (w = 0) and `r_on` (w = 1); any reverse bias sees `r_off` regardless of
//! state. The state variable moves linearly with the overdrive beyond the
//! `v_closed` / `v_open` thresholds and is frozen in between.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum `r_off / r_on` ratio of a rectifying device.
pub const MIN_RESISTANCE_RATIO: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Low-resistance state (ohm).
    pub r_on: f64,
    /// High-resistance state and reverse-bias resistance (ohm).
    pub r_off: f64,
    /// SET threshold (V, positive).
    pub v_closed: f64,
    /// CLEAR threshold (V, negative).
    pub v_open: f64,
    /// Programming rate, (V*s)^-1.
    pub alpha: f64,
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_on > 0.0 && self.r_off.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "resistances must be positive and finite (r_on={}, r_off={})",
                self.r_on, self.r_off
            )));
        }
        if self.r_off / self.r_on < MIN_RESISTANCE_RATIO {
            return Err(Error::InvalidParams(format!(
                "r_off/r_on = {:.3e} below {MIN_RESISTANCE_RATIO:e}",
                self.r_off / self.r_on
            )));
        }
        if !(self.v_open < 0.0 && 0.0 < self.v_closed) {
            return Err(Error::InvalidParams(format!(
                "need v_open < 0 < v_closed (v_open={}, v_closed={})",
                self.v_open, self.v_closed
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// `ln(r_off / r_on)`; forward conductance is `exp(k*w) / r_off`.
    fn log_ratio(&self) -> f64 {
        (self.r_off / self.r_on).ln()
    }

    /// dw/dt at a constant applied voltage.
    pub fn rate(&self, v: f64) -> f64 {
        if v >= self.v_closed {
            self.alpha * (v - self.v_closed)
        } else if v <= self.v_open {
            self.alpha * (v - self.v_open)
        } else {
            0.0
        }
    }

    /// Time to sweep the full state range at voltage `v`, `None` inside the dead zone.
    pub fn full_switch_time(&self, v: f64) -> Option<f64> {
        let r = self.rate(v);
        (r != 0.0).then(|| 1.0 / r.abs())
    }

    /// Geometric mean of the two resistance states.
    pub fn geometric_mean(&self) -> f64 {
        (self.r_on * self.r_off).sqrt()
    }
}

/// Internal state `w` in `[0, 1]`; 1 is LRS (logic '1'), 0 is HRS.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MemristorState(f64);

impl MemristorState {
    pub const HRS: MemristorState = MemristorState(0.0);
    pub const LRS: MemristorState = MemristorState(1.0);

    /// Clamps into the valid range.
    pub fn new(w: f64) -> Self {
        MemristorState(w.clamp(0.0, 1.0))
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Self::LRS
        } else {
            Self::HRS
        }
    }

    pub fn w(self) -> f64 {
        self.0
    }

    /// Digital reading: LRS half of the range is '1'.
    pub fn bit(self) -> bool {
        self.0 >= 0.5
    }
}

pub fn resistance(params: &DeviceParams, state: MemristorState, v: f64) -> f64 {
    if v >= 0.0 {
        params.r_off * (params.r_on / params.r_off).powf(state.w())
    } else {
        params.r_off
    }
}

/// Current through the device at voltage `v`.
pub fn current(params: &DeviceParams, state: MemristorState, v: f64) -> f64 {
    v / resistance(params, state, v)
}

/// Exact integration of the state over `dt` at constant voltage.
pub fn step_state(params: &DeviceParams, state: MemristorState, v: f64, dt: f64) -> MemristorState {
    debug_assert!(dt > 0.0);
    let r = params.rate(v);
    if r == 0.0 {
        return state;
    }
    MemristorState::new(state.w() + r * dt)
}

/// Energy dissipated in the device over `dt` at constant voltage, with the
/// resistance following the state trajectory inside the interval.
pub fn step_energy(params: &DeviceParams, state: MemristorState, v: f64, dt: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    if v < 0.0 {
        return v * v / params.r_off * dt;
    }
    let k = params.log_ratio();
    let scale = v * v / params.r_off;
    let w0 = state.w();
    let r = params.rate(v);
    if r == 0.0 {
        return scale * (k * w0).exp() * dt;
    }
    // Linear ramp until w saturates, constant afterwards.
    let bound = if r > 0.0 { 1.0 } else { 0.0 };
    let t_sat = ((bound - w0) / r).clamp(0.0, dt);
    let w_sat = w0 + r * t_sat;
    let ramp = ((k * w_sat).exp() - (k * w0).exp()) / (k * r);
    let hold = (k * w_sat).exp() * (dt - t_sat);
    scale * (ramp + hold)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IvSample {
    pub t: f64,
    pub v: f64,
    pub i: f64,
    pub w: f64,
}

/// Drives the device with a sampled waveform, one sample per `dt`.
pub fn iv_sweep(
    params: &DeviceParams,
    initial: MemristorState,
    waveform: &[f64],
    dt: f64,
) -> Vec<IvSample> {
    let mut state = initial;
    waveform
        .iter()
        .enumerate()
        .map(|(n, &v)| {
            let i = current(params, state, v);
            let sample = IvSample {
                t: n as f64 * dt,
                v,
                i,
                w: state.w(),
            };
            state = step_state(params, state, v, dt);
            sample
        })
        .collect()
}

/// `n` samples of `amplitude * sin(2*pi*f*t)`.
pub fn sinusoid(amplitude: f64, frequency: f64, dt: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| amplitude * (2.0 * std::f64::consts::PI * frequency * k as f64 * dt).sin())
        .collect()
}

/// Square pulse train alternating `+amplitude` and `-amplitude`, each held
/// for `half_period_samples`.
pub fn square_train(amplitude: f64, half_period_samples: usize, periods: usize) -> Vec<f64> {
    let half = half_period_samples.max(1);
    (0..2 * half * periods)
        .map(|k| {
            if (k / half).is_multiple_of(2) {
                amplitude
            } else {
                -amplitude
            }
        })
        .collect()
}
