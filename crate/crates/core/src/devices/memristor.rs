//! Memristor statics and dynamics.
//!
//! Two descriptions share one device:
//!
//! * the metastable-switch (MSS) view, where a fraction `X` of parallel
//!   channels is ON and the conductance is `X/Ron + (1-X)/Roff`;
//! * the linear ion-drift view, where a normalized state `x = w/D` moves as
//!   `dx/dt = (mu_d * Ron / D^2) * i * F(x)` and the branch law is
//!   `R(x) = Ron*x + Roff*(1-x)`.
//!
//! The simulator initializes `x` from the MSS fraction, uses `R(x)` as the
//! branch law and integrates the drift equation between time steps. State
//! convention: `x = 1` is the ON (lowest resistance) end.

use super::ParamError;

/// Static and dynamic parameters of a memristor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemristorParams {
    /// ON resistance (Ω).
    pub r_on: f64,
    /// OFF resistance (Ω).
    pub r_off: f64,
    /// Initial resistance (Ω), mapped to an initial state through the MSS fraction.
    pub r_init: f64,
    /// Device thickness D (m).
    pub d: f64,
    /// Dopant drift mobility (m²/(V·s)).
    pub mu_d: f64,
    /// Window sharpness exponent.
    pub p: u32,
    /// State-update threshold voltage (V).
    pub v_t: f64,
}

impl MemristorParams {
    pub const DEFAULT_D: f64 = 10e-9;
    pub const DEFAULT_MU_D: f64 = 1e-14;
    pub const DEFAULT_P: u32 = 5;
    pub const DEFAULT_V_T: f64 = 0.27;

    /// Parameters with the default thickness, mobility, window exponent and threshold.
    pub fn new(r_on: f64, r_off: f64, r_init: f64) -> Self {
        Self {
            r_on,
            r_off,
            r_init,
            d: Self::DEFAULT_D,
            mu_d: Self::DEFAULT_MU_D,
            p: Self::DEFAULT_P,
            v_t: Self::DEFAULT_V_T,
        }
    }

    pub fn check(&self) -> Result<(), ParamError> {
        for (name, v) in [
            ("RON", self.r_on),
            ("ROFF", self.r_off),
            ("RINIT", self.r_init),
            ("D", self.d),
            ("MU", self.mu_d),
            ("VT", self.v_t),
        ] {
            if !v.is_finite() {
                return Err(ParamError::new(name, "must be finite"));
            }
        }
        if self.r_on <= 0.0 {
            return Err(ParamError::new("RON", "must be > 0"));
        }
        if self.r_on >= self.r_off {
            return Err(ParamError::new("ROFF", "must exceed RON"));
        }
        if self.r_init < self.r_on || self.r_init > self.r_off {
            return Err(ParamError::new("RINIT", "must lie within [RON, ROFF]"));
        }
        if self.d <= 0.0 {
            return Err(ParamError::new("D", "must be > 0"));
        }
        if self.mu_d <= 0.0 {
            return Err(ParamError::new("MU", "must be > 0"));
        }
        if self.p < 1 {
            return Err(ParamError::new("P", "must be >= 1"));
        }
        if self.v_t < 0.0 {
            return Err(ParamError::new("VT", "must be >= 0"));
        }
        Ok(())
    }

    /// Drift coefficient `mu_d * Ron / D^2` in 1/(A·s).
    pub fn drift_coefficient(&self) -> f64 {
        self.mu_d * self.r_on / (self.d * self.d)
    }

    /// Initial state derived from `r_init`.
    pub fn initial_state(&self) -> MemristorState {
        MemristorState::new(mss_on_fraction(self))
    }
}

/// Normalized drift state, always within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemristorState {
    x: f64,
}

impl MemristorState {
    /// Clamps `x` into `[0, 1]`; NaN maps to 0.
    pub fn new(x: f64) -> Self {
        let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
        Self { x }
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

/// Fraction of metastable switches in the ON state for the given initial resistance.
pub fn mss_on_fraction(params: &MemristorParams) -> f64 {
    let MemristorParams {
        r_on, r_off, r_init, ..
    } = *params;
    let x = r_on * (r_init - r_off) / (r_init * (r_on - r_off));
    x.clamp(0.0, 1.0)
}

/// MSS conductance for ON fraction `x`.
pub fn mss_conductance(x: f64, params: &MemristorParams) -> f64 {
    x / params.r_on + (1.0 - x) / params.r_off
}

/// Boundary-locking window `1 - (2x - 1)^(2p)`.
pub fn window(x: f64, p: u32) -> f64 {
    let u = 2.0 * x - 1.0;
    let exponent = 2 * p.min(i32::MAX as u32 / 2);
    (1.0 - u.powi(exponent as i32)).clamp(0.0, 1.0)
}

/// Drift-model branch resistance `Ron*x + Roff*(1-x)`.
pub fn memristance(x: f64, params: &MemristorParams) -> f64 {
    params.r_on * x + params.r_off * (1.0 - x)
}

/// One explicit Euler update of the drift state.
///
/// The state is frozen while `|branch_voltage| < v_t`; the device keeps
/// conducting through `R(x)` regardless.
pub fn memristor_step(
    state: MemristorState,
    branch_current: f64,
    branch_voltage: f64,
    dt: f64,
    params: &MemristorParams,
) -> MemristorState {
    if branch_voltage.abs() < params.v_t {
        return state;
    }
    let x = state.x();
    let dx = dt * params.drift_coefficient() * branch_current * window(x, params.p);
    MemristorState::new(x + dx)
}
