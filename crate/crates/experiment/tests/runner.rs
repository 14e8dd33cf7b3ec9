use std::path::Path;
use std::process::Command;

use minn_experiment::config::{DataSource, MsModeChoice, MsTypeChoice, PowerControlSection};
use minn_experiment::output::{write_metrics, write_sweep};
use minn_experiment::runner::{digital_widths, SweepAxis};
use minn_experiment::{
    baseline_digital_prepared, mac_count, no_ms_config, prepare_data, run_prepared, sweep, ExperimentConfig,
};

fn blobs(epochs: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.name = "blobs".into();
    c.seeds = vec![1, 2];
    c.epochs = epochs;
    c.batch_size = 8;
    c.data.source = DataSource::Blobs;
    c.data.train = 96;
    c.data.test = 48;
    c.data.blob_classes = 4;
    c.data.blob_dim = 6;
    c.system.n_t = 2;
    c.system.n_r = 2;
    c.system.n_m = 16;
    c.system.layers = 2;
    c.network.encoder_hidden = vec![12];
    c.network.decoder_hidden = vec![12];
    c.optimizer.lr = 1e-2;
    c
}

fn no_data() -> &'static Path {
    Path::new("/nonexistent")
}

#[test]
fn config_round_trips_through_toml() {
    let c = ExperimentConfig::default();
    let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.hash(), c.hash());
    let mut d = c.clone();
    d.epochs += 1;
    assert_ne!(d.hash(), c.hash());
}

#[test]
fn unknown_keys_are_rejected() {
    let err = ExperimentConfig::from_toml("epochs = 3\n[system]\nn_tx = 4\n").unwrap_err();
    assert!(err.to_string().contains("n_tx"), "{err}");
    assert!(ExperimentConfig::from_toml("epoch = 3\n").is_err());
}

#[test]
fn validation_lists_every_problem() {
    let mut c = ExperimentConfig::default();
    c.seeds = vec![4, 4];
    c.batch_size = 0;
    c.variant.ms_mode = MsModeChoice::Controllable;
    c.network.controller_hidden = vec![];
    c.variant.ms_type = MsTypeChoice::Ris;
    let problems = c.validate(Some(no_data())).unwrap_err();
    let text = problems.join("\n");
    for needle in ["distinct", "batch_size", "controller_hidden", "RIS has exactly one layer", "does not exist"] {
        assert!(text.contains(needle), "missing {needle:?} in\n{text}");
    }
    assert!(problems.len() >= 6);
}

#[test]
fn untrained_model_sits_near_chance() {
    let c = blobs(0);
    let data = prepare_data(&c, no_data()).unwrap();
    let rec = run_prepared(&c, &data).unwrap();
    assert!(rec.accuracy_mean < 0.6, "{}", rec.accuracy_mean);
    assert!(rec.seeds.iter().all(|s| s.history.is_empty()));
}

#[test]
fn identical_config_reproduces_bit_identical_csv() {
    let c = blobs(2);
    let data = prepare_data(&c, no_data()).unwrap();
    let csv = || {
        let rec = run_prepared(&c, &data).unwrap();
        let mut buf = Vec::new();
        write_metrics(&mut buf, &rec).unwrap();
        (rec, buf)
    };
    let (a, ca) = csv();
    let (b, cb) = csv();
    assert_eq!(a, b);
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2);
    assert!(text.starts_with("seed,epoch,step,loss,train_acc,test_acc,mean_power_w,mean_power_dbm\n"));
}

#[test]
fn singleton_sweep_equals_run() {
    let mut c = blobs(2);
    c.transmit.snr_db = Some(40.0);
    let data = prepare_data(&c, no_data()).unwrap();
    let single = run_prepared(&c, &data).unwrap();
    let swept = sweep(&c, SweepAxis::Snr, &[40.0], no_data());
    // blob data never touches the data directory
    let swept = swept.unwrap();
    assert_eq!(swept.len(), 1);
    assert_eq!(swept[0].1.seeds, single.seeds);
    let mut buf = Vec::new();
    write_sweep(&mut buf, SweepAxis::Snr, &swept).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + c.seeds.len());
    assert!(text.lines().nth(1).unwrap().starts_with("snr,40,1,"));
}

#[test]
fn sweep_rejects_axis_variant_mismatch() {
    let c = blobs(1);
    assert!(SweepAxis::Gamma.apply(&c, 0.1).is_err());
    assert!(SweepAxis::Elements.apply(&no_ms_config(&c), 16.0).is_err());
    let mut ris = c.clone();
    ris.variant.ms_type = MsTypeChoice::Ris;
    ris.system.layers = 1;
    assert!(SweepAxis::Layers.apply(&ris, 3.0).is_err());
    assert!(SweepAxis::Elements.apply(&c, 2.5).is_err());
    assert!(sweep(&c, SweepAxis::Gamma, &[0.0], no_data()).is_err());
    assert!("bandwidth".parse::<SweepAxis>().is_err());
    let mut pc = c.clone();
    pc.power_control = Some(PowerControlSection::default());
    assert_eq!(SweepAxis::Gamma.apply(&pc, 0.1).unwrap().power_control.unwrap().gamma, 0.1);
}

#[test]
fn mac_counts_follow_the_closed_form() {
    let mut c = ExperimentConfig::default();
    c.network.encoder_hidden = vec![10];
    c.network.decoder_hidden = vec![10];
    c.system.n_t = 4;
    c.system.n_r = 4;
    c.system.n_m = 64;
    c.system.layers = 3;
    let r = mac_count(&c, 784, 10).unwrap();
    // 784→10 trunk, 10→8 head
    assert_eq!(r.get("encoder"), Some(7840 + 80));
    let complex = 4 * 64 + 64 * 4 + 2 * 64 * 64 + 3 * 64;
    assert_eq!(r.get("channel"), Some(4 * complex));
    assert_eq!(r.total(), r.modules.iter().map(|m| m.1).sum::<u64>());

    c.system.layers = 1;
    let one = mac_count(&c, 784, 10).unwrap().get("channel").unwrap();
    assert_eq!(one, 4 * (4 * 64 + 64 * 4 + 64));

    let no_ms = mac_count(&no_ms_config(&c), 784, 10).unwrap();
    assert_eq!(no_ms.get("channel"), Some(0));
    assert!(no_ms.total() < mac_count(&c, 784, 10).unwrap().total());

    c.power_control = Some(PowerControlSection::default());
    let with_power = mac_count(&c, 784, 10).unwrap();
    assert_eq!(with_power.get("power"), Some(2 * 32 + 32 * 32 + 32));
}

#[test]
fn digital_baseline_learns_blobs_and_is_deterministic() {
    let c = blobs(15);
    let data = prepare_data(&c, no_data()).unwrap();
    let a = baseline_digital_prepared(&c, &data).unwrap();
    assert!(a.accuracy_mean > 0.9, "{}", a.accuracy_mean);
    assert_eq!(a, baseline_digital_prepared(&c, &data).unwrap());
    assert_eq!(digital_widths(&c, 6, 4), vec![6, 12, 4, 12, 4]);
}

#[test]
fn power_controlled_run_reports_extra_columns() {
    let mut c = blobs(3);
    c.channel.model = minn_experiment::config::FadingKind::MobileSv;
    c.power_control = Some(PowerControlSection {
        warmup_epochs: 1,
        hidden: vec![4],
        ..PowerControlSection::default()
    });
    let data = prepare_data(&c, no_data()).unwrap();
    let rec = run_prepared(&c, &data).unwrap();
    let mut buf = Vec::new();
    write_metrics(&mut buf, &rec).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",gamma,constraint_satisfied"));
    assert!(text.lines().nth(1).unwrap().ends_with(",0.01,true"));
}

#[test]
fn cli_trains_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("blobs.toml");
    std::fs::write(&cfg_path, blobs(1).to_toml()).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_minn-experiment"))
        .args(["train", cfg_path.to_str().unwrap(), "--seed", "5", "--out-dir", out.to_str().unwrap()])
        .env("RUST_LOG", "warn")
        .status()
        .unwrap();
    assert!(status.success());
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.lines().nth(1).unwrap().starts_with("5,1,"));
    let echo: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(echo["config"]["seeds"], serde_json::json!([5]));
    assert_eq!(echo["config_hash"].as_str().unwrap().len(), 64);

    std::fs::write(&cfg_path, "epochs = 1\nbogus = 2\n").unwrap();
    let bad = Command::new(env!("CARGO_BIN_EXE_minn-experiment"))
        .args(["maccount", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("bogus"));
}
