use std::io::Write;
use std::path::Path;

use minn_core::channel::watts_to_dbm;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::runner::{RunRecord, SweepAxis};

fn num(v: f64) -> String {
    format!("{v}")
}

/// Per-epoch history of every seed. Power-controlled runs add `gamma` and
/// `constraint_satisfied`.
pub fn write_metrics<W: Write>(w: W, record: &RunRecord) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["seed", "epoch", "step", "loss", "train_acc", "test_acc", "mean_power_w", "mean_power_dbm"];
    if record.gamma.is_some() {
        header.extend(["gamma", "constraint_satisfied"]);
    }
    out.write_record(&header)?;
    for s in &record.seeds {
        for r in &s.history {
            let mut row = vec![
                r.seed.to_string(),
                r.epoch.to_string(),
                r.step.to_string(),
                num(r.loss),
                num(r.train_acc),
                r.test_acc.map(num).unwrap_or_default(),
                num(r.mean_power),
                num(watts_to_dbm(r.mean_power)),
            ];
            if let (Some(g), Some(p_max)) = (record.gamma, record.p_max_w) {
                row.push(num(g));
                row.push((r.mean_power <= p_max).to_string());
            }
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One row per (axis value, seed).
pub fn write_sweep<W: Write>(w: W, axis: SweepAxis, runs: &[(f64, RunRecord)]) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["axis", "axis_value", "seed", "accuracy", "mean_power_w", "mean_power_dbm"])?;
    for (v, rec) in runs {
        for s in &rec.seeds {
            out.write_record([
                axis.name().to_string(),
                num(*v),
                s.seed.to_string(),
                num(s.accuracy),
                num(s.mean_power_w),
                num(watts_to_dbm(s.mean_power_w)),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Config echo with its hash and the aggregated results.
pub fn run_json(config: &ExperimentConfig, records: &[&RunRecord]) -> String {
    let value = json!({
        "config_hash": config.hash(),
        "config": config,
        "results": records,
    });
    serde_json::to_string_pretty(&value).expect("records serialize")
}

pub fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> anyhow::Result<()>) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, buf)?;
    Ok(())
}
