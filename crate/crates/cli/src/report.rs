//! JSON report structures for the analysis commands.

use serde::Serialize;

use raman_fwm::counts::{
    efficiency_from_counts, per_run_g2, pooled_g2, PooledCounts, RunRecord, Setting, TimeBin,
};
use raman_fwm::stats_tests::{shapiro_wilk, t_test_one_sample_two_sided};
use raman_fwm::{Error, Result};

#[derive(Debug, Serialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub dof: Option<f64>,
    pub p_value: f64,
}

#[derive(Debug, Serialize)]
pub struct ShapiroReport {
    pub w: f64,
    pub p_value: f64,
}

#[derive(Debug, Serialize)]
pub struct EstimateReport {
    pub setting: String,
    pub bin: String,
    pub g2: f64,
    pub error: f64,
    pub counts: PooledCounts,
    pub n_runs: usize,
    /// Two-sided t-test of the per-run values against the pooled mean;
    /// present when at least two runs carry valid per-run estimates.
    pub per_run_t_test: Option<TestReport>,
    /// Shapiro-Wilk normality test of the per-run values (n >= 3).
    pub per_run_shapiro: Option<ShapiroReport>,
}

#[derive(Debug, Serialize)]
pub struct EfficiencyReport {
    pub eta_tot: f64,
    pub error: f64,
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub estimates: Vec<EstimateReport>,
    pub efficiency: Option<EfficiencyReport>,
    pub notes: Vec<String>,
}

/// Build the full analysis report over a record set.
///
/// `require_efficiency` turns a missing blocking setting into a hard error
/// instead of a note.
pub fn analyze_records(records: &[RunRecord], require_efficiency: bool) -> Result<AnalysisReport> {
    let mut groups: Vec<(Setting, TimeBin)> = records.iter().map(|r| (r.setting, r.bin)).collect();
    groups.sort();
    groups.dedup();

    let mut estimates = Vec::new();
    for (setting, bin) in groups {
        let pooled = pooled_g2(records, setting, bin)?;
        let runs: Vec<&RunRecord> = records
            .iter()
            .filter(|r| r.setting == setting && r.bin == bin)
            .collect();
        let per_run: Vec<f64> = runs.iter().filter_map(|r| per_run_g2(r).ok()).collect();
        let per_run_t_test = if per_run.len() >= 2 {
            t_test_one_sample_two_sided(&per_run, pooled.value)
                .ok()
                .map(|t| TestReport {
                    test: "t-one-sample-two-sided".into(),
                    statistic: t.statistic,
                    dof: t.dof,
                    p_value: t.p_value,
                })
        } else {
            None
        };
        let per_run_shapiro = if per_run.len() >= 3 {
            shapiro_wilk(&per_run).ok().map(|(w, p)| ShapiroReport { w, p_value: p })
        } else {
            None
        };
        estimates.push(EstimateReport {
            setting: setting.to_string(),
            bin: bin.to_string(),
            g2: pooled.value,
            error: pooled.error,
            counts: pooled.counts,
            n_runs: runs.len(),
            per_run_t_test,
            per_run_shapiro,
        });
    }

    let mut notes = Vec::new();
    let efficiency = match efficiency_from_counts(records) {
        Ok((eta_tot, error)) => Some(EfficiencyReport { eta_tot, error }),
        Err(e) => {
            if require_efficiency {
                return Err(Error::Counts(format!(
                    "efficiency requested but not computable: {e}; settings scd, cd, sd are required"
                )));
            }
            notes.push(format!("efficiency skipped: {e}"));
            None
        }
    };

    Ok(AnalysisReport {
        estimates,
        efficiency,
        notes,
    })
}
