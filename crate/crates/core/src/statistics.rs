//! Photon-number moments and pulse-integrated g² autocorrelations of
//! channel outputs, for coherent, lossy-Fock, thermal and custom inputs.
//!
//! The output field splits into the signal mode times the transfer vector
//! plus a zero-mean Gaussian noise field with no anomalous correlations
//! (the Green's decomposition is phase-insensitive: S_out involves only
//! S_in, A†_in, B_in). With A = ‖a‖², T₁ = tr n, T₂ = tr n², X = a†na and
//! input moments n_b = ⟨b†b⟩, q_b = ⟨b†²b²⟩:
//!
//! ```text
//! ⟨N⟩    = n_b A + T₁
//! ⟨:N²:⟩ = q_b A² + 2 n_b (A T₁ + X) + T₁² + T₂
//! g²     = ⟨:N²:⟩ / ⟨N⟩²
//! ```

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::channel::{channel_retrieval, channel_transmission, LinearChannel};
use crate::error::{Error, Result};
use crate::greens::{uniform_mode, Discretization, GreensSet};
use crate::linalg::{frobenius_sq, norm_sq, quadratic_form, trace};
use crate::params::{derive_couplings, MemoryParams};

/// Photon statistics of the injected signal mode.
#[derive(Debug, Clone, PartialEq)]
pub enum InputKind {
    Vacuum,
    /// Coherent state with mean photon number N_in.
    Coherent(f64),
    /// Single photon transmitted through loss: survives with probability η.
    FockWithLoss(f64),
    /// Thermal state with mean photon number N_in.
    Thermal(f64),
    /// Explicit photon-number distribution p_0..p_nmax.
    Custom(Vec<f64>),
}

/// Input state: kind plus the derived normally-ordered moments and the
/// temporal mode it occupies.
#[derive(Debug, Clone)]
pub struct InputState {
    pub kind: InputKind,
    /// ⟨b†b⟩.
    pub n_b: f64,
    /// ⟨b†²b²⟩.
    pub q_b: f64,
    pub mode: Array1<C64>,
}

impl InputState {
    pub fn new(kind: InputKind, mode: Array1<C64>) -> Result<Self> {
        let (n_b, q_b) = match &kind {
            InputKind::Vacuum => (0.0, 0.0),
            InputKind::Coherent(n) => {
                if *n < 0.0 {
                    return Err(Error::InvalidParams(format!("coherent N_in < 0: {n}")));
                }
                (*n, n * n)
            }
            InputKind::FockWithLoss(eta) => {
                if !(0.0..=1.0).contains(eta) {
                    return Err(Error::InvalidParams(format!("loss transmission outside [0,1]: {eta}")));
                }
                (*eta, 0.0)
            }
            InputKind::Thermal(n) => {
                if *n < 0.0 {
                    return Err(Error::InvalidParams(format!("thermal N_in < 0: {n}")));
                }
                (*n, 2.0 * n * n)
            }
            InputKind::Custom(dist) => {
                if dist.is_empty() || dist.iter().any(|p| *p < 0.0) {
                    return Err(Error::InvalidParams("distribution entries must be >= 0".into()));
                }
                let total: f64 = dist.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParams(format!("distribution sums to {total}, not 1")));
                }
                let n_b = dist.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
                let q_b = dist
                    .iter()
                    .enumerate()
                    .map(|(n, p)| (n * n.saturating_sub(1)) as f64 * p)
                    .sum();
                (n_b, q_b)
            }
        };
        Ok(InputState { kind, n_b, q_b, mode })
    }

    /// Convenience constructor with the uniform (control-matched) mode.
    pub fn with_uniform_mode(kind: InputKind, n_eps: usize) -> Result<Self> {
        Self::new(kind, uniform_mode(n_eps))
    }
}

/// Pulse-integrated photon-number moments of a channel output.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Moments {
    /// ⟨N⟩.
    pub mean_photons: f64,
    /// ⟨:N²:⟩.
    pub second_normal: f64,
    /// ⟨:N²:⟩/⟨N⟩², absent for a dark output.
    pub g2: Option<f64>,
}

/// Memory efficiencies extracted from the Green's functions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EffResult {
    pub eta_read_in: f64,
    pub eta_tot: f64,
}

/// Evaluate output moments for a given input state.
pub fn channel_moments(ch: &LinearChannel, input: &InputState) -> Result<Moments> {
    if input.mode.len() != ch.mode.len() {
        return Err(Error::Mismatch(format!(
            "input mode has {} bins, channel mode {}",
            input.mode.len(),
            ch.mode.len()
        )));
    }
    let dev: f64 = input
        .mode
        .iter()
        .zip(ch.mode.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    if dev > 1e-12 {
        return Err(Error::Mismatch("input mode differs from the channel's mode".into()));
    }
    let a_sq = norm_sq(&ch.a);
    let t1 = trace(&ch.n).re;
    let t2 = frobenius_sq(&ch.n); // tr(n²) for Hermitian n
    let x = quadratic_form(&ch.a, &ch.n);
    let mean = input.n_b * a_sq + t1;
    let second = input.q_b * a_sq * a_sq + 2.0 * input.n_b * (a_sq * t1 + x) + t1 * t1 + t2;
    let g2 = if mean > 0.0 { Some(second / (mean * mean)) } else { None };
    Ok(Moments {
        mean_photons: mean,
        second_normal: second,
        g2,
    })
}

/// g² of the bare channel noise: `1 + tr(n²)/tr(n)²`, the vacuum-signal
/// specialization of [`channel_moments`]. Always in (1, 2].
pub fn noise_g2(ch: &LinearChannel) -> Result<f64> {
    let t1 = trace(&ch.n).re;
    if t1 <= 0.0 {
        return Err(Error::Numerical("noise g2 of a noiseless channel".into()));
    }
    Ok(1.0 + frobenius_sq(&ch.n) / (t1 * t1))
}

/// Model memory efficiencies: read-in `‖G_SB φ‖²` and total
/// `‖G_BS^read G_SB^write φ‖²`.
pub fn memory_efficiency_model(
    write: &GreensSet,
    read: &GreensSet,
    mode: &Array1<C64>,
) -> Result<EffResult> {
    if write.disc != read.disc {
        return Err(Error::Mismatch("write and read grids differ".into()));
    }
    if mode.len() != write.disc.n_eps {
        return Err(Error::Mismatch("mode length does not match the grid".into()));
    }
    let stored = write.g_sb.dot(mode);
    let retrieved = read.g_bs.dot(&stored);
    Ok(EffResult {
        eta_read_in: norm_sq(&stored),
        eta_tot: norm_sq(&retrieved),
    })
}

/// Input-state family scanned over brightness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFamily {
    Coherent,
    FockWithLoss,
}

impl StateFamily {
    pub fn state(&self, n_in: f64, n_eps: usize) -> Result<InputState> {
        let kind = match self {
            StateFamily::Coherent => InputKind::Coherent(n_in),
            StateFamily::FockWithLoss => InputKind::FockWithLoss(n_in),
        };
        InputState::with_uniform_mode(kind, n_eps)
    }
}

/// One row of a scan curve.
#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub x: f64,
    pub g2_trans: Option<f64>,
    pub g2_ret: Option<f64>,
    pub mean_photons_trans: f64,
    pub mean_photons_ret: f64,
    pub eps_in: f64,
    pub eps_out: f64,
}

/// A computed curve with its CSV/JSON emitters.
#[derive(Debug, Clone, Serialize)]
pub struct ScanCurve {
    pub points: Vec<ScanPoint>,
}

impl ScanCurve {
    pub const CSV_HEADER: &'static str =
        "x,g2_trans,g2_ret,mean_photons_trans,mean_photons_ret,eps_in,eps_out";

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for p in &self.points {
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                p.x,
                fmt(p.g2_trans),
                fmt(p.g2_ret),
                p.mean_photons_trans,
                p.mean_photons_ret,
                p.eps_in,
                p.eps_out
            )?;
        }
        Ok(())
    }

    pub fn write_json<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    }
}

/// Scan the mean input photon number for one state family, evaluating the
/// transmission and retrieval g² at every point.
pub fn scan_input_number(
    write: &GreensSet,
    read: &GreensSet,
    family: StateFamily,
    n_list: &[f64],
    occupations: (f64, f64),
    decay: Option<f64>,
) -> Result<ScanCurve> {
    if n_list.iter().any(|n| *n < 0.0) {
        return Err(Error::InvalidParams("photon numbers must be >= 0".into()));
    }
    let mode = uniform_mode(write.disc.n_eps);
    let trans = channel_transmission(write, &mode, occupations)?;
    let ret = channel_retrieval(write, read, &mode, occupations, decay)?;
    let eps_in = trans.noise_photons();
    let eps_out = ret.noise_photons();
    let mut points = Vec::with_capacity(n_list.len());
    for &n_in in n_list {
        let state = family.state(n_in, write.disc.n_eps)?;
        let mt = channel_moments(&trans, &state)?;
        let mr = channel_moments(&ret, &state)?;
        points.push(ScanPoint {
            x: n_in,
            g2_trans: mt.g2,
            g2_ret: mr.g2,
            mean_photons_trans: mt.mean_photons,
            mean_photons_ret: mr.mean_photons,
            eps_in,
            eps_out,
        });
    }
    Ok(ScanCurve { points })
}

/// Scan the coupling ratio R = C'/C, rebuilding the Green's functions per
/// point (through the cache directory when given), and evaluate the
/// retrieval g² of a lossy single photon. The computed curve must be
/// monotone non-decreasing in R.
pub fn scan_ratio_r(
    params: &MemoryParams,
    disc: Discretization,
    r_list: &[f64],
    eta: f64,
    cache_dir: Option<&std::path::Path>,
) -> Result<ScanCurve> {
    if r_list.iter().any(|r| *r < 0.0) {
        return Err(Error::InvalidParams("ratio entries must be >= 0".into()));
    }
    if r_list.is_empty() {
        return Err(Error::InvalidParams("empty ratio grid".into()));
    }
    let occupations = (params.p1, params.p3);
    let decay = Some(params.storage_decay_amplitude());
    let state = InputState::with_uniform_mode(InputKind::FockWithLoss(eta), disc.n_eps)?;
    let mode = uniform_mode(disc.n_eps);
    let mut points = Vec::with_capacity(r_list.len());
    for &r in r_list {
        let mut p = params.clone();
        p.r_override = Some(r);
        let cpl = derive_couplings(&p)?;
        let g = crate::cache::build_cached(cache_dir, &cpl, disc)?;
        let trans = channel_transmission(&g, &mode, occupations)?;
        let ret = channel_retrieval(&g, &g, &mode, occupations, decay)?;
        let mt = channel_moments(&trans, &state)?;
        let mr = channel_moments(&ret, &state)?;
        points.push(ScanPoint {
            x: r,
            g2_trans: mt.g2,
            g2_ret: mr.g2,
            mean_photons_trans: mt.mean_photons,
            mean_photons_ret: mr.mean_photons,
            eps_in: trans.noise_photons(),
            eps_out: ret.noise_photons(),
        });
    }
    let mut sorted: Vec<(f64, Option<f64>)> = points.iter().map(|p| (p.x, p.g2_ret)).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for pair in sorted.windows(2) {
        if let (Some(a), Some(b)) = (pair[0].1, pair[1].1) {
            if b < a - 1e-9 {
                return Err(Error::Numerical(format!(
                    "retrieval g2 not monotone in R: {a} at R={} vs {b} at R={}",
                    pair[0].0, pair[1].0
                )));
            }
        }
    }
    Ok(ScanCurve { points })
}

/// g² of an incoherent mixture of a signal and a noise field combined on a
/// beam splitter, given their brightnesses and autocorrelations.
pub fn incoherent_g2(n_sig: f64, n_noise: f64, g2_sig: f64, g2_noise: f64) -> Result<f64> {
    if n_sig < 0.0 || n_noise < 0.0 {
        return Err(Error::InvalidParams("photon numbers must be >= 0".into()));
    }
    let total = n_sig + n_noise;
    if total == 0.0 {
        return Err(Error::InvalidParams("both fields empty".into()));
    }
    Ok((n_sig * n_sig * g2_sig + 2.0 * n_sig * n_noise + n_noise * n_noise * g2_noise)
        / (total * total))
}

/// Signal-to-noise ratio of the retrieved field:
/// `η_tot · η_herald / ε_out`.
pub fn snr_model(eta_tot: f64, eta_herald: f64, eps_out: f64) -> Result<f64> {
    if eps_out <= 0.0 {
        return Err(Error::Numerical(format!("eps_out must be > 0, got {eps_out}")));
    }
    Ok(eta_tot * eta_herald / eps_out)
}
