//! Monte-Carlo propagation of parameter uncertainties into g² bands.
//!
//! Each sample draws the five measured parameters from independent
//! Gaussians and re-derives the dependent quantities before re-running the
//! full model. Seeding is counter-based (one RNG stream per sample index),
//! so serial and parallel evaluations produce bit-identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greens::{build_greens, Discretization};
use crate::linalg::pairwise_sum;
use crate::params::{derive_couplings, MemoryParams};
use crate::statistics::{scan_input_number, scan_ratio_r, StateFamily};

const REDRAW_CAP: usize = 100;

/// Gaussian standard deviations of the measured inputs.
#[derive(Debug, Clone, Serialize)]
pub struct ParamUncertainty {
    /// σ(d), optical depth.
    pub sigma_d: f64,
    /// σ(γ) in GHz.
    pub sigma_gamma: f64,
    /// σ(Δ) in GHz.
    pub sigma_delta: f64,
    /// σ(T_c) in ns.
    pub sigma_tc: f64,
    /// σ(Ω_max) in GHz.
    pub sigma_omega_max: f64,
    pub n_samples: usize,
    pub rng_seed: u64,
}

impl Default for ParamUncertainty {
    /// The experimentally estimated input errors.
    fn default() -> Self {
        ParamUncertainty {
            sigma_d: 100.0,
            sigma_gamma: 0.0005,
            sigma_delta: 0.2,
            sigma_tc: 0.020,
            sigma_omega_max: 0.1,
            n_samples: 1000,
            rng_seed: 1,
        }
    }
}

impl ParamUncertainty {
    pub fn validate(&self) -> Result<()> {
        if [self.sigma_d, self.sigma_gamma, self.sigma_delta, self.sigma_tc, self.sigma_omega_max]
            .iter()
            .any(|s| *s < 0.0)
        {
            return Err(Error::InvalidParams("sigmas must be >= 0".into()));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidParams("n_samples must be >= 2".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        ParamUncertainty {
            sigma_d: self.sigma_d * factor,
            sigma_gamma: self.sigma_gamma * factor,
            sigma_delta: self.sigma_delta * factor,
            sigma_tc: self.sigma_tc * factor,
            sigma_omega_max: self.sigma_omega_max * factor,
            ..*self
        }
    }
}

/// Draw one parameter sample. The stream is derived from (seed, index), so
/// sample i is identical no matter how many samples run or in what order.
/// Draw order is fixed: d, γ, Δ, T_c, Ω_max; invalid draws redraw the whole
/// sample up to a retry cap.
///
/// Dependent quantities are re-derived per sample: α scales with the pulse
/// energy (∝ 1/(Ω²·T_c)) and a pinned C_override scales with the coupling
/// formula √(dγ/(αΔ²)), keeping the nominal calibration while propagating
/// sensitivity.
pub fn sample_params(
    nominal: &MemoryParams,
    u: &ParamUncertainty,
    index: usize,
) -> Result<MemoryParams> {
    nominal.validate()?;
    u.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(u.rng_seed);
    rng.set_stream(index as u64);
    let draw = |rng: &mut ChaCha8Rng, mean: f64, sigma: f64| -> f64 {
        if sigma == 0.0 {
            mean
        } else {
            Normal::new(mean, sigma).expect("finite sigma").sample(rng)
        }
    };
    for _attempt in 0..REDRAW_CAP {
        let mut p = nominal.clone();
        p.d = draw(&mut rng, nominal.d, u.sigma_d);
        p.gamma = draw(&mut rng, nominal.gamma, u.sigma_gamma);
        p.delta = draw(&mut rng, nominal.delta, u.sigma_delta);
        p.t_c = draw(&mut rng, nominal.t_c, u.sigma_tc);
        p.omega_max = draw(&mut rng, nominal.omega_max, u.sigma_omega_max);
        if p.t_c <= 0.0 || p.omega_max <= 0.0 {
            continue;
        }
        // pulse energy ratio drives alpha
        let energy_ratio = (p.omega_max * p.omega_max * p.t_c)
            / (nominal.omega_max * nominal.omega_max * nominal.t_c);
        p.alpha = nominal.alpha / energy_ratio;
        if let Some(c_nom) = nominal.c_override {
            let f = |q: &MemoryParams| q.d * q.gamma / (q.alpha * q.delta * q.delta);
            let ratio = f(&p) / f(nominal);
            if ratio <= 0.0 {
                continue;
            }
            p.c_override = Some(c_nom * ratio.sqrt());
        }
        if p.validate().is_ok() {
            return Ok(p);
        }
    }
    Err(Error::Numerical(format!(
        "sample {index}: no valid parameter draw within {REDRAW_CAP} attempts"
    )))
}

/// What to evaluate per sample.
#[derive(Debug, Clone, Serialize)]
pub enum McScan {
    /// Input-photon-number scan of one channel's g².
    InputNumber {
        family: StateFamily,
        grid: Vec<f64>,
        /// true: retrieval bin, false: transmission bin.
        retrieval: bool,
    },
    /// Coupling-ratio scan (retrieval bin).
    Ratio { eta: f64, grid: Vec<f64> },
}

/// A Monte-Carlo scan task.
#[derive(Debug, Clone, Serialize)]
pub struct McTask {
    pub params: MemoryParams,
    pub disc: Discretization,
    pub scan: McScan,
}

impl McTask {
    fn grid(&self) -> &[f64] {
        match &self.scan {
            McScan::InputNumber { grid, .. } => grid,
            McScan::Ratio { grid, .. } => grid,
        }
    }

    /// g² at every grid point for one parameter set.
    fn evaluate(&self, params: &MemoryParams) -> Result<Vec<f64>> {
        match &self.scan {
            McScan::InputNumber {
                family,
                grid,
                retrieval,
            } => {
                let cpl = derive_couplings(params)?;
                let g = build_greens(&cpl, self.disc)?;
                let curve = scan_input_number(
                    &g,
                    &g,
                    *family,
                    grid,
                    (params.p1, params.p3),
                    Some(params.storage_decay_amplitude()),
                )?;
                curve
                    .points
                    .iter()
                    .map(|p| {
                        let v = if *retrieval { p.g2_ret } else { p.g2_trans };
                        v.ok_or_else(|| Error::Numerical("dark output in scan".into()))
                    })
                    .collect()
            }
            McScan::Ratio { eta, grid } => {
                let curve = scan_ratio_r(params, self.disc, grid, *eta, None)?;
                curve
                    .points
                    .iter()
                    .map(|p| p.g2_ret.ok_or_else(|| Error::Numerical("dark output in scan".into())))
                    .collect()
            }
        }
    }
}

/// Per-point Monte-Carlo band.
#[derive(Debug, Clone, Serialize)]
pub struct McPoint {
    pub x: f64,
    pub g2_mean: f64,
    pub g2_std: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Band container with CSV/JSON emitters matching the scan schema.
#[derive(Debug, Clone, Serialize)]
pub struct McBand {
    pub points: Vec<McPoint>,
}

impl McBand {
    pub const CSV_HEADER: &'static str = "x,g2_mean,g2_std,n_samples,seed";

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for p in &self.points {
            writeln!(w, "{},{},{},{},{}", p.x, p.g2_mean, p.g2_std, p.n_samples, p.seed)?;
        }
        Ok(())
    }

    pub fn write_json<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    }
}

/// Run the full Monte-Carlo: n_samples model evaluations, then per-point
/// sample mean and standard deviation. Samples evaluate in parallel;
/// aggregation is pairwise in sample order, so the band is deterministic
/// under any thread schedule. Any sample failure aborts with the offending
/// sample's parameters.
pub fn mc_band(task: &McTask, u: &ParamUncertainty) -> Result<McBand> {
    u.validate()?;
    task.params.validate()?;
    let samples: Vec<Vec<f64>> = (0..u.n_samples)
        .into_par_iter()
        .map(|idx| -> Result<Vec<f64>> {
            let p = sample_params(&task.params, u, idx)?;
            task.evaluate(&p)
                .map_err(|e| Error::Numerical(format!("sample {idx} failed: {e}; params: {p:?}")))
        })
        .collect::<Result<_>>()?;

    let grid = task.grid();
    let n = u.n_samples as f64;
    let mut points = Vec::with_capacity(grid.len());
    for (pi, &x) in grid.iter().enumerate() {
        let vals: Vec<f64> = samples.iter().map(|s| s[pi]).collect();
        // degenerate draws (all sigmas zero) yield an exactly zero width
        let all_same = vals.iter().all(|v| v.to_bits() == vals[0].to_bits());
        let mean = if all_same { vals[0] } else { pairwise_sum(&vals) / n };
        let std = if all_same {
            0.0
        } else {
            let devs: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&devs) / (n - 1.0)).sqrt()
        };
        points.push(McPoint {
            x,
            g2_mean: mean,
            g2_std: std,
            n_samples: u.n_samples,
            seed: u.rng_seed,
        });
    }
    Ok(McBand { points })
}
