//! Estimators over experimental coincidence-count records: pooled and
//! per-run g², duration-weighted averages, memory efficiency from the four
//! blocking settings, and heralding efficiency.
//!
//! Count errors are Poissonian (Δc = √c) throughout, propagated to first
//! order; triple-coincidence counts get no continuity correction even when
//! small.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Input-field blocking configuration of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    /// Signal + control + optical pumping: memory on.
    Scd,
    /// Signal + pumping, control blocked: input only.
    Sd,
    /// Control + pumping, signal blocked: noise only.
    Cd,
    /// Pumping only.
    D,
}

impl Setting {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "scd" => Ok(Setting::Scd),
            "sd" => Ok(Setting::Sd),
            "cd" => Ok(Setting::Cd),
            "d" => Ok(Setting::D),
            other => Err(Error::Parse(format!("unknown setting `{other}` (expected scd|sd|cd|d)"))),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Setting::Scd => "scd",
            Setting::Sd => "sd",
            Setting::Cd => "cd",
            Setting::D => "d",
        };
        f.write_str(s)
    }
}

/// Detection time bin at the memory output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum TimeBin {
    In,
    Out,
}

impl TimeBin {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "in" => Ok(TimeBin::In),
            "out" => Ok(TimeBin::Out),
            other => Err(Error::Parse(format!("unknown time bin `{other}` (expected in|out)"))),
        }
    }
}

impl fmt::Display for TimeBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeBin::In => "in",
            TimeBin::Out => "out",
        })
    }
}

/// Counts of one run at one setting and time bin.
///
/// CSV schema (one row per run × setting × bin):
/// `run_id,setting,bin,duration_s,c_her,c_her_H,c_her_V,c_her_H_V`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub setting: Setting,
    pub bin: TimeBin,
    pub duration_s: f64,
    /// Herald detector counts over the run.
    pub c_her: u64,
    /// Herald–H coincidences in the bin.
    #[serde(rename = "c_her_H")]
    pub c_her_h: u64,
    /// Herald–V coincidences in the bin.
    #[serde(rename = "c_her_V")]
    pub c_her_v: u64,
    /// Triple coincidences in the bin.
    #[serde(rename = "c_her_H_V")]
    pub c_her_h_v: u64,
}

impl RunRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) {
            return Err(Error::Counts(format!(
                "run {}: duration must be > 0, got {}",
                self.run_id, self.duration_s
            )));
        }
        if self.c_her_h_v > self.c_her_h.min(self.c_her_v) {
            return Err(Error::Counts(format!(
                "run {}: triple coincidences exceed a pair count",
                self.run_id
            )));
        }
        for c in [self.c_her_h, self.c_her_v, self.c_her_h_v] {
            if c > self.c_her {
                return Err(Error::Counts(format!(
                    "run {}: coincidence count exceeds herald count",
                    self.run_id
                )));
            }
        }
        Ok(())
    }
}

/// Read and validate run records from CSV.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<RunRecord>() {
        let rec = row.map_err(|e| Error::Parse(format!("records csv: {e}")))?;
        rec.validate()?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::Counts("no records in file".into()));
    }
    Ok(out)
}

pub fn read_records_file(path: &Path) -> Result<Vec<RunRecord>> {
    read_records(std::fs::File::open(path)?)
}

/// Summed counts entering a pooled estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PooledCounts {
    pub c_her: u64,
    pub c_her_h: u64,
    pub c_her_v: u64,
    pub c_her_h_v: u64,
}

/// A g² estimate with its propagated Poissonian error.
#[derive(Debug, Clone, Serialize)]
pub struct G2Estimate {
    pub value: f64,
    pub error: f64,
    pub counts: PooledCounts,
}

/// Pooled g² over all runs of one setting and bin:
/// `g² = (Σc_hHV · Σc_her)/(Σc_hH · Σc_hV)`, the probability-normalized
/// triple-to-pair coincidence ratio of the summed counts. The error
/// propagates Δc = √c through every summed count, heralds included.
pub fn pooled_g2(records: &[RunRecord], setting: Setting, bin: TimeBin) -> Result<G2Estimate> {
    let mut pooled = PooledCounts {
        c_her: 0,
        c_her_h: 0,
        c_her_v: 0,
        c_her_h_v: 0,
    };
    let mut found = false;
    for r in records.iter().filter(|r| r.setting == setting && r.bin == bin) {
        r.validate()?;
        pooled.c_her += r.c_her;
        pooled.c_her_h += r.c_her_h;
        pooled.c_her_v += r.c_her_v;
        pooled.c_her_h_v += r.c_her_h_v;
        found = true;
    }
    if !found {
        return Err(Error::Counts(format!("no records for setting {setting}, bin {bin}")));
    }
    if pooled.c_her_h == 0 || pooled.c_her_v == 0 || pooled.c_her == 0 {
        return Err(Error::Counts(format!(
            "zero denominator pooling setting {setting}, bin {bin}"
        )));
    }
    let (hv, her, h, v) = (
        pooled.c_her_h_v as f64,
        pooled.c_her as f64,
        pooled.c_her_h as f64,
        pooled.c_her_v as f64,
    );
    let value = hv * her / (h * v);
    // relative Poisson errors in quadrature; zero triples give zero error on
    // a zero estimate
    let error = if hv > 0.0 {
        value * (1.0 / hv + 1.0 / her + 1.0 / h + 1.0 / v).sqrt()
    } else {
        0.0
    };
    Ok(G2Estimate {
        value,
        error,
        counts: pooled,
    })
}

/// Single-run g² from the record's own counts.
pub fn per_run_g2(record: &RunRecord) -> Result<f64> {
    record.validate()?;
    if record.c_her_h == 0 || record.c_her_v == 0 {
        return Err(Error::Counts(format!(
            "run {}: zero pair-coincidence denominator",
            record.run_id
        )));
    }
    Ok(record.c_her_h_v as f64 * record.c_her as f64
        / (record.c_her_h as f64 * record.c_her_v as f64))
}

/// Duration-weighted mean of g² values with the standard error of the
/// weighted mean (reliability weights; 0 for a single value).
pub fn weighted_mean_g2(values: &[f64], weights: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::Counts(format!(
            "need equal-length, non-empty samples: {} values, {} weights",
            values.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| *w <= 0.0) {
        return Err(Error::Counts("weights must be > 0".into()));
    }
    let w_sum: f64 = weights.iter().sum();
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / w_sum;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let w2_sum: f64 = weights.iter().map(|w| w * w).sum();
    let eff_dof = w_sum - w2_sum / w_sum;
    if eff_dof <= 0.0 {
        return Ok((mean, 0.0));
    }
    let var_w = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - mean) * (v - mean))
        .sum::<f64>()
        / eff_dof;
    let se = (var_w * w2_sum).sqrt() / w_sum;
    Ok((mean, se))
}

/// Per-herald signal rate (H + V) of a setting/bin, with the raw sums
/// needed for error propagation.
struct NormalizedRate {
    rate: f64,
    signal: f64,
    herald: f64,
}

fn normalized_rate(records: &[RunRecord], setting: Setting, bin: TimeBin) -> Option<NormalizedRate> {
    let mut signal = 0u64;
    let mut herald = 0u64;
    let mut found = false;
    for r in records.iter().filter(|r| r.setting == setting && r.bin == bin) {
        signal += r.c_her_h + r.c_her_v;
        herald += r.c_her;
        found = true;
    }
    if !found || herald == 0 {
        return None;
    }
    Some(NormalizedRate {
        rate: signal as f64 / herald as f64,
        signal: signal as f64,
        herald: herald as f64,
    })
}

/// Total memory efficiency from the blocking settings:
/// `η = [r_scd^out − r_cd^out − (r_sd^out − r_d^out)]/(r_sd^in − r_d^in)`
/// on per-herald normalized rates (the herald normalization makes the
/// settings' different measurement times commensurate). The `d` setting is
/// optional and defaults to zero. Error by first-order Poisson propagation
/// through every summed count.
pub fn efficiency_from_counts(records: &[RunRecord]) -> Result<(f64, f64)> {
    let need = |s: Setting, b: TimeBin| {
        normalized_rate(records, s, b)
            .ok_or_else(|| Error::Counts(format!("missing required setting {s} (bin {b})")))
    };
    let scd_out = need(Setting::Scd, TimeBin::Out)?;
    let cd_out = need(Setting::Cd, TimeBin::Out)?;
    let sd_out = need(Setting::Sd, TimeBin::Out)?;
    let sd_in = need(Setting::Sd, TimeBin::In)?;
    let d_out = normalized_rate(records, Setting::D, TimeBin::Out);
    let d_in = normalized_rate(records, Setting::D, TimeBin::In);

    let num = scd_out.rate - cd_out.rate - (sd_out.rate - d_out.as_ref().map_or(0.0, |r| r.rate));
    let den = sd_in.rate - d_in.as_ref().map_or(0.0, |r| r.rate);
    if den == 0.0 {
        return Err(Error::Counts("zero input-bin denominator".into()));
    }
    let eta = num / den;

    // variance in rate space: var(r) = s/h² + s²/h³ for r = s/h
    let rate_var = |r: &NormalizedRate| r.signal / (r.herald * r.herald)
        + r.signal * r.signal / (r.herald * r.herald * r.herald);
    let mut num_var = rate_var(&scd_out) + rate_var(&cd_out) + rate_var(&sd_out);
    if let Some(r) = &d_out {
        num_var += rate_var(r);
    }
    let mut den_var = rate_var(&sd_in);
    if let Some(r) = &d_in {
        den_var += rate_var(r);
    }
    let var = (num_var + eta * eta * den_var) / (den * den);
    Ok((eta, var.sqrt()))
}

/// Heralding efficiency: signal-per-herald corrected for path transmission
/// and detector efficiency.
pub fn heralding_efficiency(c_her_sig: f64, c_her: f64, t_tot: f64, eta_spcm: f64) -> Result<f64> {
    if c_her <= 0.0 || t_tot <= 0.0 || eta_spcm <= 0.0 {
        return Err(Error::Counts("heralding efficiency denominator must be > 0".into()));
    }
    if c_her_sig < 0.0 {
        return Err(Error::Counts("signal coincidences must be >= 0".into()));
    }
    Ok(c_her_sig / (c_her * t_tot * eta_spcm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(setting: Setting, bin: TimeBin, dur: f64, her: u64, h: u64, v: u64, hv: u64) -> RunRecord {
        RunRecord {
            run_id: "t".into(),
            setting,
            bin,
            duration_s: dur,
            c_her: her,
            c_her_h: h,
            c_her_v: v,
            c_her_h_v: hv,
        }
    }

    #[test]
    fn per_run_examples() {
        assert_eq!(per_run_g2(&rec(Setting::Scd, TimeBin::Out, 1.0, 1000, 10, 10, 0)).unwrap(), 0.0);
        let g = per_run_g2(&rec(Setting::Scd, TimeBin::Out, 1.0, 1000, 10, 10, 1)).unwrap();
        assert!((g - 10.0).abs() < 1e-12);
        assert!(per_run_g2(&rec(Setting::Scd, TimeBin::Out, 1.0, 1000, 0, 10, 0)).is_err());
    }

    #[test]
    fn pooling_identical_runs_matches_per_run() {
        let r = rec(Setting::Scd, TimeBin::Out, 60.0, 350_000, 1700, 1750, 9);
        let single = per_run_g2(&r).unwrap();
        let many: Vec<RunRecord> = (0..7).map(|_| r.clone()).collect();
        let pooled = pooled_g2(&many, Setting::Scd, TimeBin::Out).unwrap();
        assert!((pooled.value - single).abs() < 1e-12);
    }

    #[test]
    fn zero_triples_give_zero() {
        let r = rec(Setting::Cd, TimeBin::In, 10.0, 10_000, 50, 60, 0);
        let est = pooled_g2(&[r], Setting::Cd, TimeBin::In).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.error, 0.0);
    }

    #[test]
    fn record_invariants() {
        assert!(rec(Setting::D, TimeBin::In, 1.0, 100, 10, 5, 6).validate().is_err());
        assert!(rec(Setting::D, TimeBin::In, 0.0, 100, 10, 5, 2).validate().is_err());
        assert!(rec(Setting::D, TimeBin::In, 1.0, 5, 10, 5, 2).validate().is_err());
    }

    #[test]
    fn weighted_mean_examples() {
        let (m, _) = weighted_mean_g2(&[1.0, 1.02], &[345.0, 160.0]).unwrap();
        assert!((m - 1.0063366336633663).abs() < 1e-12);
        let (m, e) = weighted_mean_g2(&[1.7], &[30.0]).unwrap();
        assert_eq!((m, e), (1.7, 0.0));
        let (m, _) = weighted_mean_g2(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]).unwrap();
        assert!((m - 2.0).abs() < 1e-12);
        assert!(weighted_mean_g2(&[], &[]).is_err());
        assert!(weighted_mean_g2(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn efficiency_hand_example() {
        // normalized rates (0.030, 0.010, 0.002, -, 0.080, -) -> 0.225
        let her = 1_000_000u64;
        let records = vec![
            rec(Setting::Scd, TimeBin::Out, 60.0, her, 15_000, 15_000, 0),
            rec(Setting::Cd, TimeBin::Out, 60.0, her, 5_000, 5_000, 0),
            rec(Setting::Sd, TimeBin::Out, 60.0, her, 1_000, 1_000, 0),
            rec(Setting::Sd, TimeBin::In, 60.0, her, 40_000, 40_000, 0),
        ];
        let (eta, _) = efficiency_from_counts(&records).unwrap();
        assert!((eta - 0.225).abs() < 1e-12);
    }

    #[test]
    fn efficiency_balanced_counts_give_zero() {
        let her = 1_000_000u64;
        let records = vec![
            rec(Setting::Scd, TimeBin::Out, 60.0, her, 6_000, 6_000, 0),
            rec(Setting::Cd, TimeBin::Out, 60.0, her, 5_000, 5_000, 0),
            rec(Setting::Sd, TimeBin::Out, 60.0, her, 1_000, 1_000, 0),
            rec(Setting::Sd, TimeBin::In, 60.0, her, 40_000, 40_000, 0),
        ];
        let (eta, _) = efficiency_from_counts(&records).unwrap();
        assert!(eta.abs() < 1e-12);
    }

    #[test]
    fn efficiency_missing_setting() {
        let her = 1_000_000u64;
        let records = vec![rec(Setting::Scd, TimeBin::Out, 60.0, her, 6_000, 6_000, 0)];
        let err = efficiency_from_counts(&records).unwrap_err();
        assert!(err.to_string().contains("missing required setting"));
    }

    #[test]
    fn efficiency_invariant_under_common_rescaling() {
        let base = vec![
            rec(Setting::Scd, TimeBin::Out, 60.0, 400_000, 2_400, 2_350, 10),
            rec(Setting::Cd, TimeBin::Out, 60.0, 400_000, 1_800, 1_780, 8),
            rec(Setting::Sd, TimeBin::Out, 60.0, 400_000, 70, 72, 0),
            rec(Setting::Sd, TimeBin::In, 60.0, 400_000, 2_430, 2_420, 1),
        ];
        let (eta, _) = efficiency_from_counts(&base).unwrap();
        let scaled: Vec<RunRecord> = base
            .iter()
            .map(|r| {
                let mut r2 = r.clone();
                if r2.setting == Setting::Cd {
                    r2.duration_s *= 3.0;
                    r2.c_her *= 3;
                    r2.c_her_h *= 3;
                    r2.c_her_v *= 3;
                    r2.c_her_h_v *= 3;
                }
                r2
            })
            .collect();
        let (eta2, _) = efficiency_from_counts(&scaled).unwrap();
        assert!((eta - eta2).abs() < 1e-12);
    }

    #[test]
    fn heralding_examples() {
        let v = heralding_efficiency(0.011, 1.0, 0.10, 0.50).unwrap();
        assert!((v - 0.22).abs() < 1e-12);
        assert_eq!(heralding_efficiency(5.0, 5.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(heralding_efficiency(0.0, 5.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(heralding_efficiency(1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let text = "run_id,setting,bin,duration_s,c_her,c_her_H,c_her_V,c_her_H_V\n\
                    r1,scd,out,60.5,350000,1700,1750,9\n\
                    r1,scd,in,60.5,350000,1650,1620,3\n";
        let recs = read_records(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].setting, Setting::Scd);
        assert_eq!(recs[1].bin, TimeBin::In);
        assert!(read_records("run_id,setting\nr1,scd\n".as_bytes()).is_err());
    }
}
