use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use ahc_core::ddpg::{self, greedy_return, Agent, EnvConfig, EpisodeLog, Reference, ReferenceSource};
use ahc_core::evalkit::{
    compare_controllers, welch_psd, winch_motion, write_results_csv, ControllerSpec, Policy, RaoSource, ResultRow,
    RunResult, ScenarioConfig, SeaState,
};
use ahc_core::nn::Checkpoint;
use ahc_core::plant::{hanging_equilibrium, WinchState};
use ahc_core::series::{fmt_g17, TimeSeries};
use ahc_core::vessel::{parametric_rao, Rao, VesselMotion};
use ahc_core::{Error, Result, RngSeed};

use crate::config::{Config, ControllerKind};
use crate::manifest::RunManifest;
use crate::CliError;

pub const CHECKPOINT_FILE: &str = "agent.ckpt";
pub const DIAGNOSTIC_CHECKPOINT_FILE: &str = "diagnostic.ckpt";
pub const LEARNING_CURVE_FILE: &str = "learning_curve.csv";
pub const RESULTS_FILE: &str = "results.csv";
pub const CONFIG_SNAPSHOT_FILE: &str = "config.txt";

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_series(dir: &Path, name: &str, s: &TimeSeries) -> Result<()> {
    let mut w = create(&dir.join(name))?;
    s.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let mut w = create(path)?;
    ck.write(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes the effective configuration where `Config::load` can replay it.
fn snapshot(dir: &Path, cfg: &Config, manifest: &mut RunManifest) -> Result<()> {
    fs::write(dir.join(CONFIG_SNAPSHOT_FILE), cfg.to_text())?;
    manifest.artifact("config", CONFIG_SNAPSHOT_FILE);
    Ok(())
}

pub fn rao(cfg: &Config) -> Result<Rao> {
    match &cfg.vessel.rao_file {
        Some(path) => Rao::read_csv(BufReader::new(File::open(path)?)),
        None => parametric_rao(&cfg.vessel.parametric(), cfg.vessel.heading_deg),
    }
}

fn sea(cfg: &Config) -> SeaState {
    SeaState {
        name: "configured",
        hs: cfg.sea.hs,
        tp: cfg.sea.tp,
    }
}

/// Sea seed for `synth`; matches the one `run_scenario` uses, so a synthesized
/// record is the uncompensated input of the same-seed scenario.
pub fn synth_seed(cfg: &Config) -> RngSeed {
    RngSeed(cfg.seed).derive("sea")
}

pub fn training_seed(cfg: &Config) -> RngSeed {
    RngSeed(cfg.seed).derive("train-sea")
}

/// Synthesizes the sea and vessel response and writes them as `t,value`
/// CSVs: `wave.csv`, `heave.csv`, `roll.csv`, `pitch.csv`, `z_winch.csv`.
pub fn synth(cfg: &Config, out: &Path) -> Result<RunManifest> {
    let mut manifest = RunManifest::start("synth", cfg);
    fs::create_dir_all(out)?;
    let seed = synth_seed(cfg);
    manifest.seeds.insert("sea".into(), seed.0);
    let m = winch_motion(sea(cfg), &rao(cfg)?, &cfg.vessel.crane, cfg.sea.duration, cfg.sea.dt, seed)?;
    let VesselMotion { eta3, eta4, eta5 } = &m.vessel;
    for (role, series) in [
        ("wave", &m.wave),
        ("heave", eta3),
        ("roll", eta4),
        ("pitch", eta5),
        ("z_winch", &m.z_winch),
    ] {
        let file = format!("{role}.csv");
        write_series(out, &file, series)?;
        manifest.artifact(role, file);
    }
    snapshot(out, cfg, &mut manifest)?;
    manifest.finish(out)?;
    Ok(manifest)
}

pub fn env_config(cfg: &Config) -> EnvConfig {
    EnvConfig {
        params: cfg.plant,
        gravity_bias: cfg.gravity_bias,
        dt: cfg.agent.dt,
    }
}

/// The agent configuration with its seed taken from the master seed.
pub fn agent_config(cfg: &Config) -> ddpg::AgentConfig {
    ddpg::AgentConfig {
        seed: RngSeed(cfg.seed),
        ..cfg.agent.clone()
    }
}

/// Net winch heave over `train.reference_duration` in the configured sea,
/// from a seed independent of every evaluation sea.
pub fn training_reference(cfg: &Config) -> Result<ReferenceSource> {
    let m = winch_motion(
        sea(cfg),
        &rao(cfg)?,
        &cfg.vessel.crane,
        cfg.train.reference_duration,
        cfg.agent.dt,
        training_seed(cfg),
    )?;
    Ok(ReferenceSource {
        full: Reference::from_series(&m.z_winch, &m.zdot_winch)?,
        start: (cfg.train.reference_start / cfg.agent.dt).round() as usize,
    })
}

/// The state greedy returns are measured from.
pub fn greedy_start(cfg: &Config) -> WinchState {
    if cfg.gravity_bias {
        hanging_equilibrium(&cfg.plant)
    } else {
        WinchState::default()
    }
}

/// Noise-free return of `agent` on the fixed training slice.
pub fn training_greedy_return(cfg: &Config, agent: &Agent) -> Result<f64> {
    let source = training_reference(cfg)?;
    let reference = source.full.slice(source.start, cfg.agent.steps_per_episode + 1)?;
    greedy_return(agent, &env_config(cfg), reference, greedy_start(cfg))
}

fn write_learning_curve(path: &Path, logs: &[EpisodeLog]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "episode,total_reward,rolling_mean_30")?;
    for l in logs {
        writeln!(w, "{},{},{}", l.episode, fmt_g17(l.total_reward), fmt_g17(l.rolling_mean_30))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_learning_curve(path: &Path) -> Result<Vec<EpisodeLog>> {
    let mut rows = Vec::new();
    for rec in csv::Reader::from_path(path)?.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Parse("short learning-curve row".into()));
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}`")));
        rows.push(EpisodeLog {
            episode: field(0)?.parse().map_err(|_| Error::Parse("bad episode number".into()))?,
            total_reward: num(field(1)?)?,
            rolling_mean_30: num(field(2)?)?,
        });
    }
    Ok(rows)
}

/// Trains an agent, calling `progress` after each episode. Writes
/// `agent.ckpt`, `learning_curve.csv` and, every `train.checkpoint_every`
/// episodes, `agent_epNNNN.ckpt`. On abort the agent at the point of
/// failure goes to `diagnostic.ckpt`.
pub fn train(
    cfg: &Config,
    out: &Path,
    mut progress: impl FnMut(&EpisodeLog),
) -> std::result::Result<RunManifest, CliError> {
    let mut manifest = RunManifest::start("train", cfg);
    fs::create_dir_all(out).map_err(Error::from)?;
    let agent_cfg = agent_config(cfg);
    manifest.seeds.insert("agent".into(), agent_cfg.seed.0);
    manifest.seeds.insert("train-sea".into(), training_seed(cfg).0);
    let source = training_reference(cfg)?;
    let env = env_config(cfg);

    let mut write_error = None;
    let mut periodic = Vec::new();
    let result = ddpg::train_with(&env, &agent_cfg, &source, |log, agent| {
        progress(log);
        let every = cfg.train.checkpoint_every;
        if every > 0 && log.episode % every == 0 && write_error.is_none() {
            let file = format!("agent_ep{:04}.ckpt", log.episode);
            match write_checkpoint(&out.join(&file), &agent.to_checkpoint()) {
                Ok(()) => periodic.push(file),
                Err(e) => write_error = Some(e),
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e.into());
    }
    for file in periodic {
        manifest.artifact(file.trim_end_matches(".ckpt").to_string(), file);
    }

    let trained = match result {
        Ok(t) => t,
        Err(abort) => {
            let diag = out.join(DIAGNOSTIC_CHECKPOINT_FILE);
            write_checkpoint(&diag, &abort.agent.to_checkpoint())?;
            write_learning_curve(&out.join(LEARNING_CURVE_FILE), &abort.logs)?;
            manifest.artifact("diagnostic_checkpoint", DIAGNOSTIC_CHECKPOINT_FILE);
            manifest.artifact("learning_curve", LEARNING_CURVE_FILE);
            snapshot(out, cfg, &mut manifest)?;
            manifest.finish(out)?;
            return Err(CliError {
                class: abort.error.class(),
                message: format!("{abort}; diagnostic checkpoint at {}", diag.display()),
            });
        }
    };

    write_checkpoint(&out.join(CHECKPOINT_FILE), &trained.agent.to_checkpoint())?;
    write_learning_curve(&out.join(LEARNING_CURVE_FILE), &trained.logs)?;
    manifest.artifact("checkpoint", CHECKPOINT_FILE);
    manifest.artifact("learning_curve", LEARNING_CURVE_FILE);
    manifest
        .summary
        .insert("final_greedy_return".into(), training_greedy_return(cfg, &trained.agent)?);
    if let Some(last) = trained.logs.last() {
        manifest.summary.insert("final_rolling_mean_30".into(), last.rolling_mean_30);
    }
    snapshot(out, cfg, &mut manifest)?;
    manifest.finish(out)?;
    Ok(manifest)
}

pub fn load_agent(path: &Path) -> Result<Agent> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingCheckpoint(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    Agent::from_checkpoint(&Checkpoint::read(BufReader::new(file))?)
}

/// Scenario settings shared by every sea state of `eval` and `compare`.
pub fn scenario_base(cfg: &Config) -> Result<ScenarioConfig> {
    let s = &cfg.scenario;
    Ok(ScenarioConfig {
        heading_deg: cfg.vessel.heading_deg,
        duration: s.duration,
        dt: cfg.sea.dt,
        controller: ControllerSpec::Pd(cfg.pd),
        offsets: s.offsets.clone(),
        disturbance: s.disturbance,
        noise: s.noise,
        crane: cfg.vessel.crane,
        rao: match &cfg.vessel.rao_file {
            Some(_) => RaoSource::Table(rao(cfg)?),
            None => RaoSource::Parametric(cfg.vessel.parametric()),
        },
        plant: cfg.plant,
        gravity_bias: cfg.gravity_bias,
        initial: s.initial,
        discard: s.discard,
        seed: RngSeed(cfg.seed),
        ..ScenarioConfig::default()
    })
}

fn policy(checkpoint: Option<&Path>) -> Result<Policy> {
    let path = checkpoint.ok_or_else(|| Error::MissingCheckpoint("the rl controller needs --checkpoint <path>".into()))?;
    Policy::load(path)
}

pub fn controller(cfg: &Config, kind: ControllerKind, checkpoint: Option<&Path>) -> Result<ControllerSpec> {
    Ok(match kind {
        ControllerKind::None => ControllerSpec::None,
        ControllerKind::Pd => ControllerSpec::Pd(cfg.pd),
        ControllerKind::Rl => ControllerSpec::Rl(policy(checkpoint)?),
    })
}

fn write_run_series(path: &Path, r: &RunResult) -> Result<()> {
    let mut w = create(path)?;
    let noise = r.noise.as_ref().map(TimeSeries::values);
    write!(w, "t,uncompensated,compensated,command,swash,offset")?;
    writeln!(w, "{}", if noise.is_some() { ",noise" } else { "" })?;
    let u = r.uncompensated.values();
    for k in 0..u.len() {
        write!(
            w,
            "{},{},{},{},{},{}",
            fmt_g17(r.uncompensated.time(k)),
            fmt_g17(u[k]),
            fmt_g17(r.compensated.values()[k]),
            fmt_g17(r.command.values()[k]),
            fmt_g17(r.swash.values()[k]),
            fmt_g17(r.offset.values()[k]),
        )?;
        match noise {
            Some(n) => writeln!(w, ",{}", fmt_g17(n[k]))?,
            None => writeln!(w)?,
        }
    }
    w.flush()?;
    Ok(())
}

fn write_psd(path: &Path, series: &TimeSeries, cfg: &Config) -> Result<()> {
    let k0 = ((cfg.scenario.discard / series.dt()).round() as usize).min(series.len() - 1);
    let window = series.slice(k0, series.len() - k0)?;
    let segment = cfg.scenario.psd_segment.min(window.len());
    let psd = welch_psd(&window, segment, cfg.scenario.psd_overlap)?;
    let mut w = create(path)?;
    psd.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = create(path)?;
    write_results_csv(rows, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Runs the configured controller in every configured sea state, one thread
/// per sea. Writes `results.csv` plus, per sea, the time histories and the
/// Welch PSDs of the uncompensated and compensated heave.
pub fn eval(cfg: &Config, out: &Path, checkpoint: Option<&Path>) -> Result<RunManifest> {
    let mut manifest = RunManifest::start("eval", cfg);
    fs::create_dir_all(out)?;
    let base = ScenarioConfig {
        controller: controller(cfg, cfg.scenario.controller, checkpoint)?,
        ..scenario_base(cfg)?
    };
    manifest.seeds.insert("scenario".into(), base.seed.0);
    for label in ["sea", "disturbance", "noise-z", "noise-zdot"] {
        manifest.seeds.insert(label.into(), base.seed.derive(label).0);
    }
    if let Some(path) = checkpoint {
        manifest.config.insert("checkpoint".into(), path.display().to_string());
    }

    let scenarios: Vec<ScenarioConfig> = cfg
        .scenario
        .seas
        .iter()
        .map(|sea| ScenarioConfig {
            name: sea.name.into(),
            sea: *sea,
            ..base.clone()
        })
        .collect();
    let outcomes: Vec<Result<RunResult>> = thread::scope(|s| {
        let jobs: Vec<_> = scenarios
            .iter()
            .map(|sc| s.spawn(move || ahc_core::evalkit::run_scenario(sc)))
            .collect();
        jobs.into_iter()
            .map(|j| j.join().unwrap_or_else(|_| Err(Error::Domain("scenario worker panicked".into()))))
            .collect()
    });

    let tag = base.controller.name();
    let mut rows = Vec::with_capacity(scenarios.len());
    for (sc, outcome) in scenarios.iter().zip(outcomes) {
        let r = outcome?;
        let stem = format!("{tag}_{}", sc.name);
        let files = [
            (format!("series.{stem}"), format!("{stem}_series.csv")),
            (format!("psd_uncomp.{stem}"), format!("{stem}_psd_uncomp.csv")),
            (format!("psd_comp.{stem}"), format!("{stem}_psd_comp.csv")),
        ];
        write_run_series(&out.join(&files[0].1), &r)?;
        write_psd(&out.join(&files[1].1), &r.uncompensated, cfg)?;
        write_psd(&out.join(&files[2].1), &r.compensated, cfg)?;
        for (role, file) in files {
            manifest.artifact(role, file);
        }
        manifest
            .summary
            .insert(format!("comp_percent.{}", sc.name), r.metrics.comp_percent);
        if let Some(snr) = r.metrics.snr_db {
            manifest.summary.insert(format!("snr_db.{}", sc.name), snr);
        }
        rows.push(ResultRow::new(sc, &r.metrics));
    }
    write_results(&out.join(RESULTS_FILE), &rows)?;
    manifest.artifact("results", RESULTS_FILE);
    snapshot(out, cfg, &mut manifest)?;
    manifest.finish(out)?;
    Ok(manifest)
}

/// PD against the trained policy on the same waves in every configured sea
/// state; one `results.csv` row per (sea, controller).
pub fn compare(cfg: &Config, out: &Path, checkpoint: Option<&Path>) -> Result<RunManifest> {
    let mut manifest = RunManifest::start("compare", cfg);
    fs::create_dir_all(out)?;
    let base = scenario_base(cfg)?;
    manifest.seeds.insert("scenario".into(), base.seed.0);
    manifest.seeds.insert("sea".into(), base.seed.derive("sea").0);
    let controllers = [ControllerSpec::Pd(cfg.pd), ControllerSpec::Rl(policy(checkpoint)?)];
    if let Some(path) = checkpoint {
        manifest.config.insert("checkpoint".into(), path.display().to_string());
    }
    let rows = compare_controllers(&base, &controllers, &cfg.scenario.seas)?;
    for r in &rows {
        manifest
            .summary
            .insert(format!("comp_percent.{}.{}", r.controller, r.scenario), r.comp_percent);
    }
    write_results(&out.join(RESULTS_FILE), &rows)?;
    manifest.artifact("results", RESULTS_FILE);
    snapshot(out, cfg, &mut manifest)?;
    manifest.finish(out)?;
    Ok(manifest)
}

/// Output directory default: `runs/<command>`.
pub fn default_out(command: &str) -> PathBuf {
    PathBuf::from("runs").join(command)
}
