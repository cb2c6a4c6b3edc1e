//! Trace and summary files.
//!
//! All CSVs use LF line endings and print floats in their shortest form that
//! parses back to the same value.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::config::{ExperimentConfig, Suite};
use super::plot;
use super::runner::{run_trials, TraceRecord};

pub const TRACE_HEADER: [&str; 7] = ["trial", "slot", "rss", "rss_max", "ratio", "n_active", "stage"];
pub const RATIO_HEADER: [&str; 4] = ["slot", "mean", "std", "series_name"];
pub const RSS_HEADER: [&str; 4] = ["slot", "rss_mean", "rss_std", "series_name"];

/// Suffix of the companion series carrying the mean `rss_max` in churn
/// summaries.
pub const RSS_MAX_SUFFIX: &str = ":rss_max";

/// Shortest round-trip decimal form.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Ratio,
    Rss,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesStats {
    pub name: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Per-slot statistics over all trials of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub metric: Metric,
    pub slots: Vec<u64>,
    /// The main series, then (for RSS summaries) the mean `rss_max`.
    pub series: Vec<SeriesStats>,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn stats(name: String, traces: &[Vec<TraceRecord>], f: impl Fn(&TraceRecord) -> f64) -> SeriesStats {
    let len = traces.first().map_or(0, Vec::len);
    let (mean, std) = (0..len).map(|k| mean_std(traces.iter().map(|t| f(&t[k])))).unzip();
    SeriesStats { name, mean, std }
}

/// Averages traces slot by slot: the gain ratio normally, raw RSS (plus the
/// mean `rss_max`) when the network membership changes over time.
pub fn summarize(cfg: &ExperimentConfig, traces: &[Vec<TraceRecord>]) -> Summary {
    let slots = traces.first().map(|t| t.iter().map(|r| r.slot).collect()).unwrap_or_default();
    let name = cfg.series_name();
    if cfg.scenario.has_churn() {
        Summary {
            metric: Metric::Rss,
            slots,
            series: vec![
                stats(name.clone(), traces, |r| r.rss),
                stats(format!("{name}{RSS_MAX_SUFFIX}"), traces, |r| r.rss_max),
            ],
        }
    } else {
        Summary {
            metric: Metric::Ratio,
            slots,
            series: vec![stats(name, traces, |r| r.ratio)],
        }
    }
}

pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.trial.to_string(),
            r.slot.to_string(),
            fmt_f64(r.rss),
            fmt_f64(r.rss_max),
            fmt_f64(r.ratio),
            r.n_active.to_string(),
            r.stage.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(match summary.metric {
        Metric::Ratio => RATIO_HEADER,
        Metric::Rss => RSS_HEADER,
    })?;
    for s in &summary.series {
        for (k, slot) in summary.slots.iter().enumerate() {
            w.write_record([slot.to_string(), fmt_f64(s.mean[k]), fmt_f64(s.std[k]), s.name.clone()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    // Probe writability now rather than after the trials ran.
    let probe = dir.join(".beamsim-write-test");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Files written by one experiment.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub summary_path: PathBuf,
    pub summary: Summary,
}

/// Runs all trials of `cfg` and writes `config.resolved.json`,
/// `summary.csv` and `traces/trial_NNNN.csv` under `dir`.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentOutput> {
    ensure_dir(dir)?;
    let traces_dir = dir.join("traces");
    if cfg.write_traces {
        ensure_dir(&traces_dir)?;
    }
    let traces = run_trials(cfg)?;
    let resolved = serde_json::to_string_pretty(cfg).expect("config serializes") + "\n";
    let resolved_path = dir.join("config.resolved.json");
    fs::write(&resolved_path, resolved).map_err(|e| Error::io(&resolved_path, e))?;
    if cfg.write_traces {
        for (t, trace) in traces.iter().enumerate() {
            write_trace(&traces_dir.join(format!("trial_{t:04}.csv")), trace)?;
        }
    }
    let summary = summarize(cfg, &traces);
    let summary_path = dir.join("summary.csv");
    write_summary(&summary_path, &summary)?;
    Ok(ExperimentOutput {
        dir: dir.to_path_buf(),
        summary_path,
        summary,
    })
}

/// Runs every experiment of a suite into `root/<series name>/` and draws
/// all summaries into `root/plot.svg`.
pub fn run_suite(suite: &Suite, root: &Path) -> Result<Vec<ExperimentOutput>> {
    ensure_dir(root)?;
    let mut outputs = Vec::with_capacity(suite.runs.len());
    for run in &suite.runs {
        outputs.push(run_experiment(run, &root.join(run.series_name()))?);
    }
    let paths: Vec<PathBuf> = outputs.iter().map(|o| o.summary_path.clone()).collect();
    plot::emit_plot(&paths, &root.join("plot.svg"), Some(&suite.name))?;
    Ok(outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::AlgorithmKind;
    use crate::channel::{ScenarioKind, ScenarioSpec};

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0, 1e-300, 123456.789, 0.0, 2.0f64.sqrt()] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(0.25), "0.25");
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std([1.0, 3.0].into_iter());
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_std([5.0].into_iter()), (5.0, 0.0));
    }

    #[test]
    fn experiment_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(AlgorithmKind::Dqesa, ScenarioSpec::static_rayleigh(5));
        cfg.n_trials = 3;
        cfg.slot_budget = 40;
        let out = run_experiment(&cfg, dir.path()).unwrap();
        let summary = fs::read_to_string(&out.summary_path).unwrap();
        let lines: Vec<_> = summary.lines().collect();
        assert_eq!(lines[0], "slot,mean,std,series_name");
        assert_eq!(lines.len(), 41);
        assert!(!summary.contains('\r'));
        let trace = fs::read_to_string(dir.path().join("traces/trial_0002.csv")).unwrap();
        assert!(trace.starts_with("trial,slot,rss,rss_max,ratio,n_active,stage\n2,1,"));
        assert!(dir.path().join("config.resolved.json").exists());
    }

    #[test]
    fn churn_summary_reports_rss() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ScenarioSpec {
            kind: ScenarioKind::Churn,
            p_remove: 0.05,
            n_nodes_initial: 8,
            ..ScenarioSpec::default()
        };
        let mut cfg = ExperimentConfig::new(AlgorithmKind::Dbsa, spec);
        cfg.n_trials = 2;
        cfg.slot_budget = 30;
        cfg.write_traces = false;
        let out = run_experiment(&cfg, dir.path()).unwrap();
        let text = fs::read_to_string(&out.summary_path).unwrap();
        assert!(text.starts_with("slot,rss_mean,rss_std,series_name\n"));
        assert!(text.contains(",dbsa:rss_max\n"));
        assert!(!dir.path().join("traces").exists());
    }

    #[test]
    fn unwritable_dir_fails_before_running() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let cfg = ExperimentConfig::new(AlgorithmKind::Dbsa, ScenarioSpec::static_rayleigh(3));
        let err = run_experiment(&cfg, &blocker.join("sub")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
