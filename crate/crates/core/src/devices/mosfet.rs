//! Square-law NMOS with channel-length modulation.

use super::ParamError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MosfetParams {
    /// Channel width (m).
    pub w: f64,
    /// Drawn channel length (m).
    pub l: f64,
    /// Per-side length reduction (m); `l_eff = l - 2*lint`.
    pub lint: f64,
    /// Threshold voltage (V).
    pub vt0: f64,
    /// Transconductance parameter (A/V²).
    pub kp: f64,
    /// Channel-length modulation (1/V).
    pub lambda: f64,
}

impl MosfetParams {
    pub const DEFAULT_VT0: f64 = 0.5;
    pub const DEFAULT_KP: f64 = 200e-6;
    pub const DEFAULT_LAMBDA: f64 = 0.05;

    pub fn new(w: f64, l: f64) -> Self {
        Self {
            w,
            l,
            lint: 0.0,
            vt0: Self::DEFAULT_VT0,
            kp: Self::DEFAULT_KP,
            lambda: Self::DEFAULT_LAMBDA,
        }
    }

    pub fn l_eff(&self) -> f64 {
        self.l - 2.0 * self.lint
    }

    /// `kp * W / L_eff`.
    pub fn beta(&self) -> f64 {
        self.kp * self.w / self.l_eff()
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.w / self.l_eff()
    }

    pub fn check(&self) -> Result<(), ParamError> {
        for (name, v) in [
            ("W", self.w),
            ("L", self.l),
            ("LINT", self.lint),
            ("VT0", self.vt0),
            ("KP", self.kp),
            ("LAMBDA", self.lambda),
        ] {
            if !v.is_finite() {
                return Err(ParamError::new(name, "must be finite"));
            }
        }
        if self.w <= 0.0 {
            return Err(ParamError::new("W", "must be > 0"));
        }
        if self.l_eff() <= 0.0 {
            return Err(ParamError::new("L", "effective length L - 2*LINT must be > 0"));
        }
        if self.kp <= 0.0 {
            return Err(ParamError::new("KP", "must be > 0"));
        }
        if self.lambda < 0.0 {
            return Err(ParamError::new("LAMBDA", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Cutoff,
    Triode,
    Saturation,
}

/// Drain current and its partials with respect to the terminal voltages.
///
/// `current` flows into the drain terminal; `gm = ∂id/∂vgs`, `gds = ∂id/∂vds`,
/// both taken in the caller's terminal orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceEval {
    pub current: f64,
    pub gm: f64,
    pub gds: f64,
    pub region: Region,
    /// True when drain and source were exchanged internally (`vds < 0`).
    pub reversed: bool,
}

fn forward(vgs: f64, vds: f64, p: &MosfetParams) -> (f64, f64, f64, Region) {
    let vov = vgs - p.vt0;
    if vov <= 0.0 {
        return (0.0, 0.0, 0.0, Region::Cutoff);
    }
    let beta = p.beta();
    let clm = 1.0 + p.lambda * vds;
    if vds < vov {
        let core = vov * vds - 0.5 * vds * vds;
        let id = beta * core * clm;
        let gm = beta * vds * clm;
        let gds = beta * (vov - vds) * clm + beta * core * p.lambda;
        (id, gm, gds, Region::Triode)
    } else {
        let core = 0.5 * vov * vov;
        let id = beta * core * clm;
        let gm = beta * vov * clm;
        let gds = beta * core * p.lambda;
        (id, gm, gds, Region::Saturation)
    }
}

/// Evaluates the square-law drain current at the given bias.
///
/// For `vds < 0` drain and source swap roles; the returned current and
/// partials are mapped back to the original terminals.
pub fn mosfet_eval(vgs: f64, vds: f64, params: &MosfetParams) -> DeviceEval {
    if vds >= 0.0 {
        let (current, gm, gds, region) = forward(vgs, vds, params);
        DeviceEval {
            current,
            gm,
            gds,
            region,
            reversed: false,
        }
    } else {
        // swapped: vgs' = vgs - vds, vds' = -vds, id = -f(vgs', vds')
        let (id, gm, gds, region) = forward(vgs - vds, -vds, params);
        DeviceEval {
            current: -id,
            gm: -gm,
            gds: gm + gds,
            region,
            reversed: true,
        }
    }
}
