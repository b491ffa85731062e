use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ahc_cli::commands::{self, load_agent, read_learning_curve, training_greedy_return};
use ahc_cli::config::ControllerKind;
use ahc_cli::{Config, RunManifest};
use ahc_core::evalkit::read_results_csv;
use ahc_core::nn::Checkpoint;
use ahc_core::series::TimeSeries;

const SMOKE: &str = "\
agent.episodes = 2
agent.steps_per_episode = 50
agent.batch_size = 16
train.reference_duration = 100
";

fn ahc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ahc")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn series(path: &Path) -> TimeSeries {
    TimeSeries::read_csv(std::io::BufReader::new(fs::File::open(path).unwrap())).unwrap()
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).to_string();
    assert_eq!(text.trim_end().lines().count(), 1, "stderr: {text}");
    text.trim_end().to_string()
}

#[test]
fn config_reads_sections() {
    let cfg = Config::parse(
        "# comment\n\
         run.seed = 7\n\
         sea.state = rough\n\
         plant.K_oil = 1.7e9   # trailing comment\n\
         agent.gamma = 0.99\n\
         pd.kp = 4\n\
         scenario.controller = none\n\
         scenario.seas = slight,moderate\n\
         scenario.offsets = 10:20:1;30:40:-0.5\n\
         scenario.noise = 1e-6,3.14,30\n",
    )
    .unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!((cfg.sea.hs, cfg.sea.tp), (6.0, 12.0));
    assert_eq!(cfg.plant.K_oil, 1.7e9);
    assert_eq!(cfg.agent.gamma, 0.99);
    assert_eq!(cfg.pd.kp, 4.0);
    assert_eq!(cfg.scenario.controller, ControllerKind::None);
    assert_eq!(cfg.scenario.seas.len(), 2);
    assert_eq!(cfg.scenario.offsets.len(), 2);
    assert_eq!(cfg.scenario.offsets[1].level, -0.5);
    assert_eq!(cfg.scenario.noise.unwrap().omega_hi, 30.0);
}

#[test]
fn config_itemizes_every_bad_line() {
    let err = Config::parse("agent.gama = 0.9\nfoo.bar = 1\nplant.K_oil = x\nrun.seed = 1\nrun.seed = 2\nnot a line\n")
        .unwrap_err()
        .to_string();
    for needle in ["line 1: agent.gama", "line 2: foo.bar", "line 3: plant.K_oil", "line 5: `run.seed` set twice", "line 6"] {
        assert!(err.contains(needle), "{needle} missing from: {err}");
    }
}

#[test]
fn config_rejects_separate_agent_seed() {
    assert!(Config::parse("agent.seed = 3\n").is_err());
}

#[test]
fn config_rejects_mismatched_control_interval() {
    assert!(Config::parse("agent.dt = 0.05\n").is_err());
    assert!(Config::parse("agent.dt = 0.05\nsea.dt = 0.05\n").is_ok());
}

#[test]
fn config_text_round_trips() {
    let cfg = Config::parse("run.seed = 11\nsea.hs = 2.5\nplant.m = 1200\nscenario.offsets = 100:300:1\nscenario.disturbance = 10,0,0.5\n")
        .unwrap();
    let again = Config::parse(&cfg.to_text()).unwrap();
    assert_eq!(cfg.entries(), again.entries());
}

#[test]
fn synth_calm_sea_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::parse("sea.hs = 0\nsea.duration = 50\n").unwrap();
    commands::synth(&cfg, dir.path()).unwrap();
    assert!(series(&dir.path().join("z_winch.csv")).values().iter().all(|&v| v == 0.0));
}

#[test]
fn synth_writes_parseable_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = ahc(&["synth", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    for name in ["wave", "heave", "roll", "pitch", "z_winch"] {
        let s = series(&out.join(format!("{name}.csv")));
        assert_eq!(s.len(), 10_001);
    }
    assert!(series(&out.join("z_winch.csv")).variance() > 0.0);
    let manifest = RunManifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(manifest.command, "synth");
    assert!(manifest.finished_unix >= manifest.started_unix);
    for file in manifest.artifacts.values() {
        assert!(out.join(file).is_file());
    }
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::parse("sea.duration = 200\nrun.seed = 5\n").unwrap();
    commands::synth(&cfg, &dir.path().join("a")).unwrap();
    commands::synth(&cfg, &dir.path().join("b")).unwrap();
    for name in ["wave", "heave", "roll", "pitch", "z_winch"] {
        let f = format!("{name}.csv");
        assert_eq!(fs::read(dir.path().join("a").join(&f)).unwrap(), fs::read(dir.path().join("b").join(&f)).unwrap());
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.cfg", "sea.duration = 20\nrun.seed = 1\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(ahc(&["synth", "--config", &config, "--seed", "2", "--out", a.to_str().unwrap()]).status.success());
    assert!(ahc(&["synth", "--config", &config, "--out", b.to_str().unwrap()]).status.success());
    assert_ne!(fs::read(a.join("wave.csv")).unwrap(), fs::read(b.join("wave.csv")).unwrap());
    assert_eq!(RunManifest::read(&a.join("manifest.json")).unwrap().seeds["master"], 2);
}

#[test]
fn bad_config_exits_with_one_line_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "bad.cfg", "sea.hz = 4\nagent.lr = 1\n");
    let o = ahc(&["synth", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    let line = stderr_line(&o);
    assert!(line.starts_with("error[parse] "), "{line}");
    assert!(line.contains("sea.hz") && line.contains("agent.lr"), "{line}");
}

#[test]
fn smoke_training_writes_loadable_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "smoke.cfg", &format!("{SMOKE}train.checkpoint_every = 1\n"));
    let out = dir.path().join("t");
    let o = ahc(&["train", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let agent = load_agent(&out.join("agent.ckpt")).unwrap();
    assert!(agent.is_finite());
    assert_eq!(read_learning_curve(&out.join("learning_curve.csv")).unwrap().len(), 2);
    assert!(out.join("agent_ep0001.ckpt").is_file() && out.join("agent_ep0002.ckpt").is_file());

    // The saved agent replays the recorded greedy return bit for bit.
    let manifest = RunManifest::read(&out.join("manifest.json")).unwrap();
    let cfg = Config::load(&out.join("config.txt")).unwrap();
    let replay = training_greedy_return(&cfg, &agent).unwrap();
    assert_eq!(replay.to_bits(), manifest.summary["final_greedy_return"].to_bits());
}

#[test]
fn training_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::parse(SMOKE).unwrap();
    commands::train(&cfg, &dir.path().join("a"), |_| {}).unwrap();
    commands::train(&cfg, &dir.path().join("b"), |_| {}).unwrap();
    for f in ["agent.ckpt", "learning_curve.csv"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn training_abort_leaves_diagnostic_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "blowup.cfg", &format!("{SMOKE}agent.lr_critic = 1e300\nagent.lr_actor = 1e300\n"));
    let out = dir.path().join("t");
    let o = ahc(&["train", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    let line = stderr_line(&o);
    assert!(line.starts_with("error[diverged] "), "{line}");
    let diag = out.join("diagnostic.ckpt");
    assert!(line.contains(diag.to_str().unwrap()), "{line}");
    Checkpoint::read(std::io::BufReader::new(fs::File::open(diag).unwrap())).unwrap();
}

#[test]
fn pd_eval_covers_four_sea_states() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::parse("scenario.duration = 200\n").unwrap();
    let manifest = commands::eval(&cfg, dir.path(), None).unwrap();
    let rows = read_results_csv(fs::File::open(dir.path().join("results.csv")).unwrap()).unwrap();
    let names: Vec<_> = rows.iter().map(|r| r.scenario.as_str()).collect();
    assert_eq!(names, ["slight", "moderate", "rough", "very_rough"]);
    assert!(rows.iter().all(|r| r.controller == "pd" && r.comp_percent > 50.0));
    for file in manifest.artifacts.values() {
        assert!(dir.path().join(file).is_file());
    }
    let psd = fs::read_to_string(dir.path().join("pd_moderate_psd_comp.csv")).unwrap();
    assert!(psd.starts_with("omega,density\n"));
}

#[test]
fn uncontrolled_eval_compensates_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::parse("scenario.controller = none\nscenario.seas = moderate\nscenario.duration = 100\n").unwrap();
    commands::eval(&cfg, dir.path(), None).unwrap();
    let rows = read_results_csv(fs::File::open(dir.path().join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].comp_percent.abs() < 1e-9, "{}", rows[0].comp_percent);
}

#[test]
fn eval_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::parse("scenario.duration = 100\nscenario.noise = 1e-6,3.14,30\n").unwrap();
    commands::eval(&cfg, &dir.path().join("a"), None).unwrap();
    commands::eval(&cfg, &dir.path().join("b"), None).unwrap();
    for f in ["results.csv", "pd_rough_series.csv", "pd_rough_psd_comp.csv"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn rl_eval_needs_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "rl.cfg", "scenario.controller = rl\n");
    let o = ahc(&["eval", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr_line(&o).starts_with("error[missing_checkpoint] "));

    let missing = dir.path().join("nope.ckpt");
    let o = ahc(&[
        "eval",
        "--config",
        &config,
        "--checkpoint",
        missing.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert!(stderr_line(&o).starts_with("error[missing_checkpoint] "));
}

#[test]
fn compare_runs_both_controllers_per_sea() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::parse(&format!("{SMOKE}scenario.duration = 50\n")).unwrap();
    commands::train(&cfg, &dir.path().join("t"), |_| {}).unwrap();
    let ck = dir.path().join("t").join("agent.ckpt");
    commands::compare(&cfg, &dir.path().join("c"), Some(&ck)).unwrap();
    let rows = read_results_csv(fs::File::open(dir.path().join("c").join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 8);
    for pair in rows.chunks(2) {
        assert_eq!((pair[0].controller.as_str(), pair[1].controller.as_str()), ("pd", "rl"));
        assert_eq!(pair[0].scenario, pair[1].scenario);
        assert_eq!(pair[0].rms_uncomp, pair[1].rms_uncomp);
    }
}
