//! Physical parameters of the memory and the dimensionless couplings of the
//! linearized three-field model.
//!
//! Unit conventions, declared once and used everywhere: frequencies are plain
//! (non-angular) GHz, times are ns, lengths cm; the propagation coordinate `z`
//! and the effective-time coordinate `ε` are dimensionless on [0, 1].
//!
//! The coupling constant follows `C² = d·γ/(α·Δ²)`. With the plain-frequency
//! convention this evaluates to 0.63 for the nominal parameter set, while the
//! calibrated experimental value is 0.82; the angular-frequency factor that
//! reconciles the two is not fixed here. The nominal preset therefore pins
//! `C` through `C_override` and keeps the formula path available.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Speed of light in cm/ns.
const C_LIGHT: f64 = 29.9792458;

/// Physical inputs of one memory configuration.
///
/// Config-file keys match the symbols exactly: `d`, `gamma`, `delta`,
/// `delta_s`, `L`, `T_c`, `omega_max`, `alpha`, `p1`, `p3`, `C_override`,
/// `R_override`, `storage_time`, `spinwave_decay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryParams {
    /// Resonant optical depth (dimensionless).
    pub d: f64,
    /// Homogeneous linewidth γ (GHz). Treated as a plain rate parameter;
    /// whether it denotes a half- or full-width is not specified upstream.
    pub gamma: f64,
    /// Detuning Δ from the excited state (GHz).
    pub delta: f64,
    /// Stokes shift Δ_s, the ground-state splitting (GHz).
    pub delta_s: f64,
    /// Cell length L (cm, informational; enters only the spin-wave
    /// wavevector bookkeeping).
    pub cell_length: f64,
    /// Control pulse duration T_c (ns).
    pub t_c: f64,
    /// Peak Rabi frequency Ω_max (GHz).
    pub omega_max: f64,
    /// Effective-time normalization α (ns). Taken as a direct parameter;
    /// deriving it from a pulse shape is convention-dependent (see
    /// [`effective_time_map`]).
    pub alpha: f64,
    /// Initial occupation of the populated ground state.
    pub p1: f64,
    /// Initial occupation of the storage state.
    pub p3: f64,
    /// Direct value for the Stokes coupling C, bypassing the formula.
    pub c_override: Option<f64>,
    /// Direct value for the ratio R = C'/C, bypassing Δ/Δ'.
    pub r_override: Option<f64>,
    /// Storage time T between write and read stages (ns, informational).
    pub storage_time: f64,
    /// Optional 1/e memory lifetime (ns). When set, the stored spin wave is
    /// damped by exp(-T/(2·τ)) in amplitude before read-out; disabled by
    /// default since decoherence is negligible on the nominal storage time.
    pub spinwave_decay: Option<f64>,
}

impl MemoryParams {
    /// Nominal parameter set of the experiment this model describes
    /// (available in the CLI under the preset name "paper-nominal").
    pub fn paper_nominal() -> Self {
        MemoryParams {
            d: 1800.0,
            gamma: 0.016,
            delta: 15.2,
            delta_s: 9.2,
            cell_length: 7.5,
            t_c: 0.36,
            omega_max: 4.2,
            alpha: 0.31,
            p1: 1.0,
            p3: 0.0,
            c_override: Some(0.82),
            r_override: None,
            storage_time: 12.5,
            spinwave_decay: None,
        }
    }

    /// Same optical configuration with the optical pumping blocked: the
    /// ground states thermalize to p1 = p3 = 0.5 (w = 0).
    pub fn paper_nominal_unpumped() -> Self {
        MemoryParams {
            p1: 0.5,
            p3: 0.5,
            ..Self::paper_nominal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.d > 0.0) {
            return bad(format!("d must be > 0, got {}", self.d));
        }
        if !(self.gamma > 0.0) {
            return bad(format!("gamma must be > 0, got {}", self.gamma));
        }
        if !(self.delta > 0.0) {
            return bad(format!("delta must be > 0, got {}", self.delta));
        }
        if !(self.delta_s > 0.0) {
            return bad(format!("delta_s must be > 0, got {}", self.delta_s));
        }
        if !(self.alpha > 0.0) {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        if self.p1 < 0.0 || self.p3 < 0.0 {
            return bad(format!("occupations must be >= 0: p1={}, p3={}", self.p1, self.p3));
        }
        if (self.p1 + self.p3 - 1.0).abs() > 1e-9 {
            return bad(format!(
                "occupations must satisfy p1 + p3 = 1: p1={}, p3={}",
                self.p1, self.p3
            ));
        }
        if !(self.delta + self.delta_s > 0.0) {
            return bad("delta' = delta + delta_s must be > 0".into());
        }
        if (self.delta - self.delta_s).abs() <= 1e-9 * self.delta.abs().max(1.0) {
            return bad(format!(
                "delta = delta_s (= {}) makes the Stokes wavevector singular",
                self.delta
            ));
        }
        if let Some(c) = self.c_override {
            if !(c > 0.0) {
                return bad(format!("C_override must be > 0, got {c}"));
            }
        }
        if let Some(r) = self.r_override {
            if r < 0.0 {
                return bad(format!("R_override must be >= 0, got {r}"));
            }
        }
        if let Some(tau) = self.spinwave_decay {
            if !(tau > 0.0) {
                return bad(format!("spinwave_decay must be > 0, got {tau}"));
            }
        }
        if self.storage_time < 0.0 {
            return bad("storage_time must be >= 0".into());
        }
        Ok(())
    }

    /// Amplitude damping of the stored spin wave over the storage time,
    /// exp(-T/(2τ)); 1.0 when the decay model is disabled.
    pub fn storage_decay_amplitude(&self) -> f64 {
        match self.spinwave_decay {
            Some(tau) => (-self.storage_time / (2.0 * tau)).exp(),
            None => 1.0,
        }
    }

    /// Load parameters from a flat `key = value` file. Unknown keys are
    /// rejected; omitted keys keep the nominal preset values.
    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_config_str(&text)
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
            })?;
            kv.insert(key.trim().to_string(), value.trim().to_string());
        }
        let mut params = Self::paper_nominal();
        params.apply_overrides(&kv)?;
        params.validate()?;
        Ok(params)
    }

    /// Apply `key = value` overrides (config-file keys). A value of `none`
    /// clears an optional field.
    pub fn apply_overrides(&mut self, kv: &BTreeMap<String, String>) -> Result<()> {
        for (key, value) in kv {
            self.set_key(key, value)?;
        }
        Ok(())
    }

    pub fn set_key(&mut self, key: &str, value: &str) -> Result<()> {
        let parse = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::Parse(format!("key `{key}`: not a number: `{v}`")))
        };
        let parse_opt = |v: &str| -> Result<Option<f64>> {
            if v.eq_ignore_ascii_case("none") {
                Ok(None)
            } else {
                parse(v).map(Some)
            }
        };
        match key {
            "d" => self.d = parse(value)?,
            "gamma" => self.gamma = parse(value)?,
            "delta" => self.delta = parse(value)?,
            "delta_s" => self.delta_s = parse(value)?,
            "L" => self.cell_length = parse(value)?,
            "T_c" => self.t_c = parse(value)?,
            "omega_max" => self.omega_max = parse(value)?,
            "alpha" => self.alpha = parse(value)?,
            "p1" => self.p1 = parse(value)?,
            "p3" => self.p3 = parse(value)?,
            "C_override" => self.c_override = parse_opt(value)?,
            "R_override" => self.r_override = parse_opt(value)?,
            "storage_time" => self.storage_time = parse(value)?,
            "spinwave_decay" => self.spinwave_decay = parse_opt(value)?,
            other => {
                return Err(Error::Parse(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }
}

/// Dimensionless couplings entering the propagation equations, plus the
/// wavevector bookkeeping behind the phase mismatch.
///
/// The wavevector fields hold only the dispersive (matter) contributions;
/// the common optical phases `L·ω/c` cancel exactly in κ on two-photon
/// resonance (2ω_c − ω_S − ω_A = 0) and are removed analytically rather
/// than subtracted numerically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    /// Stokes coupling C.
    pub c: f64,
    /// Anti-Stokes coupling C'.
    pub c_prime: f64,
    /// Ratio R = C'/C.
    pub r: f64,
    /// Dynamic Stark shift in effective-time units.
    pub s: f64,
    /// Four-wave-mixing phase mismatch per unit normalized z.
    pub kappa: f64,
    /// Population inversion w = p1 − p3.
    pub w: f64,
    /// Dispersive part of the control wavevector, d·γ·(p3/Δ + p1/Δ').
    pub k_omega_disp: f64,
    /// Dispersive part of the Stokes wavevector.
    pub k_s_disp: f64,
    /// Dispersive part of the anti-Stokes wavevector.
    pub k_a_disp: f64,
    /// Spin-wave wavevector k_B = k_A − k_S. The ω_c-dependent optical
    /// phases cancel in the difference; the remaining 2·Δ_s·L/c piece is
    /// kept (informational, not used by the propagator).
    pub k_b: f64,
}

/// Derive all dimensionless couplings from the physical parameters.
///
/// `C` comes from `C_override` when set, else from `√(dγ/(αΔ²))`; `C'` is
/// `R_override·C` when set, else `C·Δ/Δ'`. The phase mismatch is evaluated
/// with the cancelling optical phases already removed:
/// κ = d·γ·[2(p3/Δ + p1/Δ') − p1/Δ − p3/(Δ−Δ_s) − p3/Δ' − p1/(Δ+2Δ_s)].
pub fn derive_couplings(params: &MemoryParams) -> Result<Couplings> {
    params.validate()?;
    let MemoryParams {
        d,
        gamma,
        delta,
        delta_s,
        alpha,
        p1,
        p3,
        ..
    } = *params;
    let delta_p = delta + delta_s;
    let dg = d * gamma;

    let s = 1.0 / (alpha * delta) + 1.0 / (alpha * delta_p);
    let c = match params.c_override {
        Some(c) => c,
        None => (dg / (alpha * delta * delta)).sqrt(),
    };
    let r = match params.r_override {
        Some(r) => r,
        None => delta / delta_p,
    };
    let c_prime = r * c;
    let w = p1 - p3;

    let k_omega_disp = dg * (p3 / delta + p1 / delta_p);
    let k_s_disp = dg * (p1 / delta + p3 / (delta - delta_s));
    let k_a_disp = dg * (p3 / delta_p + p1 / (delta + 2.0 * delta_s));
    let kappa = 2.0 * k_omega_disp - k_s_disp - k_a_disp;
    let k_b = 2.0 * delta_s * params.cell_length / C_LIGHT + k_a_disp - k_s_disp;

    let cpl = Couplings {
        c,
        c_prime,
        r,
        s,
        kappa,
        w,
        k_omega_disp,
        k_s_disp,
        k_a_disp,
        k_b,
    };
    if !(cpl.c.is_finite() && cpl.c_prime.is_finite() && cpl.s.is_finite() && cpl.kappa.is_finite())
    {
        return Err(Error::Numerical("non-finite coupling derived".into()));
    }
    Ok(cpl)
}

/// Control pulse shape in laboratory time.
#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    /// Gaussian intensity envelope with the given FWHM of |Ω|² (ns).
    Gaussian { fwhm: f64 },
    /// Flat-top pulse of the given duration (ns).
    Rectangular { duration: f64 },
}

/// A sampled control pulse Ω(τ).
#[derive(Debug, Clone)]
pub struct ControlPulse {
    pub shape: PulseShape,
    /// Peak Rabi frequency Ω_max (GHz).
    pub peak: f64,
    /// Laboratory-time sample grid τ (ns), strictly increasing.
    pub grid: Vec<f64>,
}

impl ControlPulse {
    /// |Ω(τ)|² at a grid time.
    fn intensity(&self, tau: f64) -> f64 {
        match self.shape {
            PulseShape::Gaussian { fwhm } => {
                let sigma2 = fwhm * fwhm / (8.0 * std::f64::consts::LN_2);
                self.peak * self.peak * (-tau * tau / (2.0 * sigma2)).exp()
            }
            PulseShape::Rectangular { duration } => {
                if tau.abs() <= duration / 2.0 {
                    self.peak * self.peak
                } else {
                    0.0
                }
            }
        }
    }
}

/// Monotone map from laboratory time to effective time, with its
/// normalization constant.
#[derive(Debug, Clone)]
pub struct EffectiveTimeMap {
    pub tau: Vec<f64>,
    /// ε(τ) at the grid points, non-decreasing from 0 to 1.
    pub eps: Vec<f64>,
}

impl EffectiveTimeMap {
    /// Piecewise-linear evaluation of ε(τ); clamps outside the grid.
    pub fn eval(&self, tau: f64) -> f64 {
        if tau <= self.tau[0] {
            return 0.0;
        }
        if tau >= *self.tau.last().unwrap() {
            return 1.0;
        }
        let idx = self.tau.partition_point(|&t| t <= tau) - 1;
        let (t0, t1) = (self.tau[idx], self.tau[idx + 1]);
        let (e0, e1) = (self.eps[idx], self.eps[idx + 1]);
        if t1 == t0 {
            e0
        } else {
            e0 + (e1 - e0) * (tau - t0) / (t1 - t0)
        }
    }
}

/// Integrate the pulse energy and return the normalization α = 1/∫|Ω|²dτ
/// together with the cumulative map ε(τ) = α·∫_{-∞}^{τ}|Ω|²dτ'.
///
/// Note the result is convention-dependent (it inherits whatever angular
/// convention Ω carries); the nominal parameter set pins α directly instead
/// of deriving it from the pulse.
pub fn effective_time_map(pulse: &ControlPulse) -> Result<(f64, EffectiveTimeMap)> {
    if pulse.grid.len() < 2 {
        return Err(Error::InvalidParams("pulse grid needs at least 2 samples".into()));
    }
    if pulse.grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("pulse grid must be strictly increasing".into()));
    }
    let n = pulse.grid.len();
    let mut cumulative = vec![0.0; n];
    for i in 1..n {
        let dt = pulse.grid[i] - pulse.grid[i - 1];
        let f0 = pulse.intensity(pulse.grid[i - 1]);
        let f1 = pulse.intensity(pulse.grid[i]);
        cumulative[i] = cumulative[i - 1] + 0.5 * dt * (f0 + f1);
    }
    let total = cumulative[n - 1];
    if !(total > 0.0) {
        return Err(Error::InvalidParams("pulse has zero energy on the grid".into()));
    }
    let alpha = 1.0 / total;
    let eps = cumulative.iter().map(|&c| (c * alpha).clamp(0.0, 1.0)).collect();
    Ok((
        alpha,
        EffectiveTimeMap {
            tau: pulse.grid.clone(),
            eps,
        },
    ))
}
