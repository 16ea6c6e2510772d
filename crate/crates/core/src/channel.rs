//! Composition of Green's-function stages into end-to-end linear channels
//! for the two detection time bins.
//!
//! A channel is characterized by the transfer vector of the injected signal
//! mode and the normally-ordered covariance matrix collecting every vacuum
//! and thermal noise input. Initial-state correlators: anti-Stokes inputs
//! are vacuum (fresh and independent per stage), the initial spin wave is
//! boson-like with ⟨B†B⟩ = p3, ⟨BB†⟩ = p1.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::greens::GreensSet;
use crate::linalg::{aat, adjoint, hermitize, min_eigenvalue, norm_sq, trace};

/// Signal transfer vector and noise covariance of one output field.
#[derive(Debug, Clone)]
pub struct LinearChannel {
    /// Response of the output field to the normalized input signal mode.
    pub a: Array1<C64>,
    /// Hermitian PSD normally-ordered noise covariance over output ε-bins,
    /// n[j][k] = ⟨S_k† S_j⟩ of the noise component.
    pub n: Array2<C64>,
    /// The input mode the channel was built for.
    pub mode: Array1<C64>,
}

impl LinearChannel {
    /// Unconditional noise photons in the bin, trace of the covariance.
    pub fn noise_photons(&self) -> f64 {
        trace(&self.n).re
    }

    /// `‖a‖²`, the channel's signal-mode transmission.
    pub fn signal_transmission(&self) -> f64 {
        norm_sq(&self.a)
    }

    /// Lower bound on the smallest noise eigenvalue (≥ -1e-9 expected).
    pub fn min_noise_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.n)
    }
}

fn check_mode(g: &GreensSet, mode: &Array1<C64>) -> Result<()> {
    if mode.len() != g.disc.n_eps {
        return Err(Error::Mismatch(format!(
            "mode has {} bins, grid has {}",
            mode.len(),
            g.disc.n_eps
        )));
    }
    let n2 = norm_sq(mode);
    if (n2 - 1.0).abs() > 1e-8 {
        return Err(Error::Mismatch(format!("input mode not normalized: ‖φ‖² = {n2}")));
    }
    Ok(())
}

fn check_occupations(occ: (f64, f64), g: &GreensSet) -> Result<f64> {
    let (p1, p3) = occ;
    if p1 < 0.0 || p3 < 0.0 || (p1 + p3 - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "occupations must be non-negative and sum to 1: ({p1}, {p3})"
        )));
    }
    let w = p1 - p3;
    if (w - g.couplings.w).abs() > 1e-9 {
        return Err(Error::Mismatch(format!(
            "occupations give w = {w} but the stage was built with w = {}",
            g.couplings.w
        )));
    }
    Ok(p3)
}

/// Transmission channel (read-in time bin): the write stage alone.
///
/// `a = G_SS·φ`; noise collects the anti-Stokes vacuum and, when p3 > 0,
/// the thermal spin wave: `n = G_AS G_AS† + p3 · G_BS G_BS†`. Vacuum signal
/// modes orthogonal to φ contribute nothing normally ordered.
pub fn channel_transmission(
    write: &GreensSet,
    mode: &Array1<C64>,
    occupations: (f64, f64),
) -> Result<LinearChannel> {
    check_mode(write, mode)?;
    let p3 = check_occupations(occupations, write)?;
    let a = write.g_ss.dot(mode);
    let mut n = aat(&write.g_as);
    if p3 > 0.0 {
        let mut th = aat(&write.g_bs);
        th.mapv_inplace(|v| v * p3);
        n += &th;
    }
    Ok(LinearChannel {
        a,
        n: hermitize(&n),
        mode: mode.clone(),
    })
}

/// Retrieval channel (read-out time bin): write stage, storage, read stage.
///
/// The stored spin wave is damped in amplitude by the optional `decay`
/// factor; the decohered fraction re-thermalizes, contributing
/// `(1-decay²)·p3` of fresh thermal occupation. The read stage sees fresh
/// anti-Stokes vacuum, independent of the write-stage vacuum.
pub fn channel_retrieval(
    write: &GreensSet,
    read: &GreensSet,
    mode: &Array1<C64>,
    occupations: (f64, f64),
    decay: Option<f64>,
) -> Result<LinearChannel> {
    if write.disc != read.disc {
        return Err(Error::Mismatch(format!(
            "write grid ({}, {}) differs from read grid ({}, {})",
            write.disc.n_z, write.disc.n_eps, read.disc.n_z, read.disc.n_eps
        )));
    }
    check_mode(write, mode)?;
    let p3 = check_occupations(occupations, write)?;
    check_occupations(occupations, read)?;
    let d = decay.unwrap_or(1.0);
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::InvalidParams(format!("decay amplitude must lie in [0, 1], got {d}")));
    }
    let d2 = d * d;

    // a = G_BS^read · decay · G_SB^write · φ
    let stored = write.g_sb.dot(mode);
    let a = read.g_bs.dot(&stored).mapv(|v| v * d);

    // spin-wave covariance handed to the read stage
    let nz = write.disc.n_z;
    let mut spin = aat(&write.g_ab);
    if p3 > 0.0 {
        let mut th = aat(&write.g_bb);
        th.mapv_inplace(|v| v * p3);
        spin += &th;
    }
    spin.mapv_inplace(|v| v * d2);
    if p3 > 0.0 && d2 < 1.0 {
        let fresh = (1.0 - d2) * p3;
        for i in 0..nz {
            spin[[i, i]] += C64::new(fresh, 0.0);
        }
    }

    let mut n = aat(&read.g_as);
    n += &read.g_bs.dot(&spin).dot(&adjoint(&read.g_bs));
    Ok(LinearChannel {
        a,
        n: hermitize(&n),
        mode: mode.clone(),
    })
}
