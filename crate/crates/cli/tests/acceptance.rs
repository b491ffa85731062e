//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Criteria 6, 7 and the RL half of 9 train three
//! agents with the full protocol, which takes well over an hour on one core.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng;

use ahc_cli::commands;
use ahc_cli::Config;
use ahc_core::ddpg::{reward, Agent, AgentConfig, EpisodeLog, Observation, Transition, TransitionBatch};
use ahc_core::evalkit::{
    run_scenario, welch_psd, BandSpec, ControllerSpec, Metrics, Policy, ScenarioConfig, SEA_STATES,
};
use ahc_core::nn::Mlp;
use ahc_core::plant::{hanging_equilibrium, system_matrices, WinchParams, WinchPlant};
use ahc_core::seaway::{band_limited_series, pm_wave_elevation};
use ahc_core::RngSeed;

const TRAINING_SEEDS: [u64; 3] = [1, 2, 3];
const TRAINING_BUDGET: Duration = Duration::from_secs(60 * 60);
/// Analytic RMS of the low-noise band, sqrt(1e-6 · (30 − 3.14)).
const LOW_NOISE_RMS: f64 = 5.183e-3;

struct Report {
    failures: usize,
}

impl Report {
    fn record(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{} criterion {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn moderate() -> ScenarioConfig {
    ScenarioConfig {
        sea: SEA_STATES[1],
        name: "moderate".into(),
        ..ScenarioConfig::default()
    }
}

fn metrics(cfg: &ScenarioConfig) -> Metrics {
    run_scenario(cfg).unwrap().metrics
}

fn spectral_fidelity(report: &mut Report) {
    let t = Instant::now();
    let wave = pm_wave_elevation(4.0, 9.0, 10_000.0, 0.1, RngSeed(1)).unwrap();
    let hs_err = (4.0 * wave.std() / 4.0 - 1.0).abs();
    let band = band_limited_series(10.0, 0.0, 0.5, 10_000.0, 0.1, RngSeed(2)).unwrap();
    let psd = welch_psd(&band, 1024, 0.5).unwrap();
    // Bins clear of the band edges by more than the Hann main lobe.
    let worst_in_band = psd
        .omega
        .iter()
        .zip(&psd.density)
        .filter(|(w, _)| **w > 0.1 && **w < 0.4)
        .map(|(_, d)| (d / 10.0 - 1.0).abs())
        .fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    report.record(
        1,
        "spectral fidelity",
        hs_err < 0.05 && worst_in_band < 0.2 && secs < 10.0,
        format!("|4σ/Hs − 1| = {hs_err:.4}, worst in-band PSD error {worst_in_band:.3}, {secs:.2} s"),
    );
}

/// Forward Euler at `h`, clamping the swash angle like the plant does.
fn euler(params: &WinchParams, x0: [f64; 4], inputs: &[f64], dt: f64, h: f64) -> Vec<[f64; 4]> {
    let m = system_matrices(params);
    let n = (dt / h).round() as usize;
    let mut x = x0;
    let mut out = Vec::with_capacity(inputs.len());
    for &u in inputs {
        for _ in 0..n {
            let d = [
                m.a[0][0] * x[0] + m.b[0] * u,
                m.a[1][0] * x[0] + m.a[1][1] * x[1] + m.a[1][2] * x[2],
                m.a[2][1] * x[1] + m.a[2][2] * x[2] + m.d0,
                m.a[3][2] * x[2],
            ];
            for i in 0..4 {
                x[i] += h * d[i];
            }
            x[0] = x[0].clamp(-1.0, 1.0);
        }
        out.push(x);
    }
    out
}

fn plant_oracle(report: &mut Report) {
    let params = WinchParams::default();
    let eq = hanging_equilibrium(&params);
    let (dt, steps) = (0.1, 100);
    let h_oracle = ahc_core::plant::DEFAULT_SUBSTEP / 100.0;
    let mut worst: f64 = 0.0;
    for seq in 0..5u64 {
        let mut rng = RngSeed(100 + seq).rng();
        let inputs: Vec<f64> = (0..steps).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut plant = WinchPlant::new(params).unwrap();
        plant.set_state(eq);
        let rk: Vec<[f64; 4]> = inputs.iter().map(|&u| plant.step(u, 0.0, dt).unwrap().to_array()).collect();
        let oracle = euler(&params, eq.to_array(), &inputs, dt, h_oracle);
        for i in 1..4 {
            let diff: f64 = rk.iter().zip(&oracle).map(|(a, b)| (a[i] - b[i]).powi(2)).sum();
            let norm: f64 = oracle.iter().map(|b| b[i].powi(2)).sum();
            worst = worst.max((diff / norm).sqrt());
        }
    }
    let mut plant = WinchPlant::new(params).unwrap();
    plant.set_state(eq);
    let mut drift: f64 = 0.0;
    for _ in 0..steps {
        drift = drift.max(plant.step(0.0, 0.0, dt).unwrap().zdot_w.abs());
    }
    let dp_err = (eq.delta_p / 9.4231e6 - 1.0).abs();
    report.record(
        2,
        "plant oracle equivalence",
        worst <= 1e-4 && drift < 1e-6 && dp_err < 1e-4,
        format!("worst relative RMS {worst:.2e}, equilibrium Δp {:.5e}, |ż_w| drift {drift:.2e} m/s", eq.delta_p),
    );
}

fn random_obs(rng: &mut impl Rng) -> Observation {
    Observation {
        z_w: rng.random_range(-1.0..1.0),
        zdot_w: rng.random_range(-1.0..1.0),
        z_winch: rng.random_range(-1.0..1.0),
        zdot_winch: rng.random_range(-1.0..1.0),
    }
}

fn random_batch(n: usize, rng: &mut impl Rng) -> TransitionBatch {
    let items: Vec<Transition> = (0..n)
        .map(|_| Transition {
            s: random_obs(rng),
            u: rng.random_range(-1.0..1.0),
            r: rng.random_range(-2.0..1.0),
            s_next: random_obs(rng),
        })
        .collect();
    TransitionBatch::from_transitions(&items)
}

fn scramble(net: &mut Mlp, rng: &mut impl Rng) {
    for p in net.params_mut() {
        *p = rng.random_range(-1.0..1.0);
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn gradient_suite(report: &mut Report) {
    let t = Instant::now();
    let h = 1e-5;
    let mut worst_critic: f64 = 0.0;
    let mut worst_actor: f64 = 0.0;
    for k in 0..20u64 {
        let mut rng = RngSeed(200 + k).rng();
        let cfg = AgentConfig {
            actor_hidden: vec![rng.random_range(2..6)],
            critic_state_width: rng.random_range(2..5),
            critic_action_width: rng.random_range(1..4),
            critic_hidden: vec![rng.random_range(2..6)],
            batch_size: 6,
            seed: RngSeed(k),
            ..AgentConfig::default()
        };
        let mut agent = Agent::new(cfg).unwrap();
        for net in [&mut agent.actor, &mut agent.critic.state, &mut agent.critic.action, &mut agent.critic.head] {
            scramble(net, &mut rng);
        }
        let batch = random_batch(6, &mut rng);

        let (_, g) = agent.critic_gradient(&batch).unwrap();
        let analytic: Vec<f64> = [&g.state, &g.action, &g.head].iter().flat_map(|b| b.flat()).collect();
        let mut idx = 0;
        for part in 0..3 {
            let count = [&agent.critic.state, &agent.critic.action, &agent.critic.head][part].param_count();
            for i in 0..count {
                let loss_at = |delta: f64| {
                    let mut a = agent.clone();
                    let net = [&mut a.critic.state, &mut a.critic.action, &mut a.critic.head]
                        .into_iter()
                        .nth(part)
                        .unwrap();
                    *net.params_mut().nth(i).unwrap() += delta;
                    a.critic_gradient(&batch).unwrap().0
                };
                let fd = (loss_at(h) - loss_at(-h)) / (2.0 * h);
                worst_critic = worst_critic.max(rel_err(fd, analytic[idx]));
                idx += 1;
            }
        }

        let (_, g) = agent.actor_gradient(&batch).unwrap();
        for (i, a) in g.flat().iter().enumerate() {
            let j_at = |delta: f64| {
                let mut ag = agent.clone();
                *ag.actor.params_mut().nth(i).unwrap() += delta;
                ag.actor_gradient(&batch).unwrap().0
            };
            // Analytic gradient is of −J.
            let fd = -(j_at(h) - j_at(-h)) / (2.0 * h);
            worst_actor = worst_actor.max(rel_err(fd, *a));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    report.record(
        3,
        "gradient suite",
        worst_critic < 1e-5 && worst_actor < 1e-5 && secs < 30.0,
        format!("worst relative error critic {worst_critic:.2e}, actor {worst_actor:.2e} over 20 nets, {secs:.2} s"),
    );
}

fn unit_conformance(report: &mut Report) {
    let rewards = reward(0.0, 0.0) == 1.0 && reward(0.05, 0.1) == -0.1 && reward(0.1, 0.05) == -1.1;

    let mut agent = Agent::new(AgentConfig {
        actor_hidden: vec![3],
        critic_state_width: 3,
        critic_action_width: 2,
        critic_hidden: vec![4],
        ..AgentConfig::default()
    })
    .unwrap();
    let head = agent.target_critic.head.layers_mut().last_mut().unwrap();
    head.w.iter_mut().for_each(|w| *w = 0.0);
    head.b.iter_mut().for_each(|b| *b = 2.0);
    let mut batch = random_batch(4, &mut RngSeed(9).rng());
    batch.r = vec![1.0; 4];
    let targets = agent.td_targets(&batch).unwrap();
    let td = targets.iter().all(|&y| y == 2.996);

    agent.target_actor.params_mut().for_each(|p| *p = 0.0);
    agent.actor.params_mut().for_each(|p| *p = 1.0);
    agent.soft_update().unwrap();
    let soft = agent.target_actor.params().all(|&p| p == 0.005);

    report.record(
        4,
        "unit conformance",
        rewards && td && soft,
        format!("reward examples {rewards}, TD target 2.996 {td}, soft update 0.005 {soft}"),
    );
}

fn pd_regression(report: &mut Report) -> Vec<f64> {
    let t = Instant::now();
    let comps: Vec<f64> = SEA_STATES
        .iter()
        .map(|sea| {
            metrics(&ScenarioConfig {
                name: sea.name.into(),
                sea: *sea,
                ..ScenarioConfig::default()
            })
            .comp_percent
        })
        .collect();
    let secs = t.elapsed().as_secs_f64();
    let pass = comps.iter().all(|&c| c >= 75.0) && comps[1] >= 80.0 && secs < 120.0;
    let list: Vec<String> = SEA_STATES.iter().zip(&comps).map(|(s, c)| format!("{} {c:.2}%", s.name)).collect();
    report.record(5, "PD baseline", pass, format!("{}, {secs:.2} s", list.join(", ")));
    comps
}

fn disturbance_rejection(report: &mut Report, pd_moderate: f64) {
    let with = metrics(&ScenarioConfig {
        disturbance: Some(BandSpec { s0: 10.0, omega_lo: 0.0, omega_hi: 0.5 }),
        ..moderate()
    })
    .comp_percent;
    let drop = pd_moderate - with;
    report.record(
        8,
        "disturbance rejection",
        drop < 5.0,
        format!("PD moderate {pd_moderate:.2}% → {with:.2}% with disturbance (drop {drop:.2} points)"),
    );
}

struct TrainedSeed {
    seed: u64,
    policy: Policy,
    logs: Vec<EpisodeLog>,
    elapsed: Duration,
    comp: f64,
}

fn train_seed(seed: u64, dir: &Path) -> TrainedSeed {
    let mut cfg = Config::default();
    cfg.seed = seed;
    let out = dir.join(format!("seed{seed}"));
    let t = Instant::now();
    let manifest = commands::train(&cfg, &out, |log| {
        if log.episode % 10 == 0 {
            eprintln!(
                "  seed {seed} episode {:>3}: return {:.1}, rolling mean {:.1}, {:.0} s",
                log.episode,
                log.total_reward,
                log.rolling_mean_30,
                t.elapsed().as_secs_f64()
            );
        }
    })
    .unwrap_or_else(|e| panic!("training seed {seed}: {e}"));
    let elapsed = t.elapsed();
    let policy = Policy::load(&out.join(&manifest.artifacts["checkpoint"])).unwrap();
    let logs = commands::read_learning_curve(&out.join(&manifest.artifacts["learning_curve"])).unwrap();
    let comp = metrics(&ScenarioConfig {
        controller: ControllerSpec::Rl(policy.clone()),
        ..moderate()
    })
    .comp_percent;
    eprintln!("  seed {seed}: moderate-sea compensation {comp:.2}% after {:.0} s", elapsed.as_secs_f64());
    TrainedSeed { seed, policy, logs, elapsed, comp }
}

fn rl_beats_pd(report: &mut Report, agents: &[TrainedSeed], pd_moderate: f64) {
    let wins = agents.iter().filter(|a| a.comp >= pd_moderate).count();
    let best = agents.iter().map(|a| a.comp).fold(f64::NEG_INFINITY, f64::max);
    let slowest = agents.iter().map(|a| a.elapsed).max().unwrap_or_default();
    let list: Vec<String> = agents.iter().map(|a| format!("seed {} {:.2}%", a.seed, a.comp)).collect();
    report.record(
        6,
        "RL beats PD",
        wins >= 2 && best >= 90.0 && slowest <= TRAINING_BUDGET,
        format!(
            "PD {pd_moderate:.2}%; {}; {wins}/3 at or above PD, best {best:.2}%, slowest training {:.1} min",
            list.join(", "),
            slowest.as_secs_f64() / 60.0
        ),
    );
}

fn learning_curves(report: &mut Report, agents: &[TrainedSeed]) {
    let mut rising = 0;
    let mut parts = Vec::new();
    for a in agents {
        let at = |ep: usize| a.logs.iter().find(|l| l.episode == ep).map(|l| l.rolling_mean_30);
        match (at(30), at(150)) {
            (Some(early), Some(late)) => {
                if late > early {
                    rising += 1;
                }
                parts.push(format!("seed {} {early:.1} → {late:.1}", a.seed));
            }
            _ => parts.push(format!("seed {} has {} episodes", a.seed, a.logs.len())),
        }
    }
    report.record(
        7,
        "learning curve",
        rising >= 2,
        format!("rolling mean at 30 → 150: {}; {rising}/3 rising", parts.join(", ")),
    );
}

fn noise_cases(report: &mut Report, pd_moderate: f64, best: Option<&TrainedSeed>) {
    let low = BandSpec { s0: 1e-6, omega_lo: 3.14, omega_hi: 30.0 };
    let high = BandSpec { s0: 1e-3, ..low };
    let noisy = |controller: ControllerSpec, band: Option<BandSpec>| {
        metrics(&ScenarioConfig {
            controller,
            noise: band,
            ..moderate()
        })
    };
    let pd = ControllerSpec::Pd(Default::default());

    let low_pd = noisy(pd.clone(), Some(low));
    let snr = low_pd.snr_db.unwrap();
    let snr_expected = 20.0 * (low_pd.rms_uncomp / LOW_NOISE_RMS).log10();
    let analytic_ok = (low.analytic_rms() / LOW_NOISE_RMS - 1.0).abs() < 1e-3;
    let snr_ok = (snr - snr_expected).abs() < 0.5 && analytic_ok;
    let low_change = (low_pd.comp_percent - pd_moderate).abs();

    let clean_pd = noisy(pd.clone(), None);
    let high_pd = noisy(pd, Some(high));
    let pd_degrades = high_pd.comp_percent < clean_pd.comp_percent && high_pd.sat_fraction > clean_pd.sat_fraction;

    let mut detail = format!(
        "low noise SNR {snr:.2} dB vs {snr_expected:.2} dB, PD change {low_change:.2} points; \
         high noise PD {:.2}% → {:.2}%, saturation {:.4} → {:.4}",
        clean_pd.comp_percent, high_pd.comp_percent, clean_pd.sat_fraction, high_pd.sat_fraction
    );
    let rl_degrades = match best {
        Some(agent) => {
            let rl = ControllerSpec::Rl(agent.policy.clone());
            let clean = noisy(rl.clone(), None);
            let high_rl = noisy(rl, Some(high));
            detail += &format!(
                "; RL (seed {}) {:.2}% → {:.2}%, saturation {:.4} → {:.4}",
                agent.seed, clean.comp_percent, high_rl.comp_percent, clean.sat_fraction, high_rl.sat_fraction
            );
            high_rl.comp_percent < clean.comp_percent && high_rl.sat_fraction > clean.sat_fraction
        }
        None => {
            detail += "; no trained agent";
            false
        }
    };
    report.record(9, "noise cases", snr_ok && low_change < 2.0 && pd_degrades && rl_degrades, detail);
}

fn files_equal(a: &Path, b: &Path, names: &[&str]) -> bool {
    names.iter().all(|n| fs::read(a.join(n)).unwrap() == fs::read(b.join(n)).unwrap())
}

fn determinism(report: &mut Report, dir: &Path) {
    let run = |tag: &str| -> PathBuf {
        let root = dir.join(format!("determinism_{tag}"));
        let mut cfg = Config::parse(
            "agent.episodes = 3\nagent.steps_per_episode = 200\ntrain.reference_duration = 400\nscenario.duration = 300\n",
        )
        .unwrap();
        cfg.seed = 17;
        commands::synth(&cfg, &root.join("synth")).unwrap();
        commands::train(&cfg, &root.join("train"), |_| {}).unwrap();
        cfg.scenario.noise = Some(BandSpec { s0: 1e-6, omega_lo: 3.14, omega_hi: 30.0 });
        commands::eval(&cfg, &root.join("eval"), None).unwrap();
        commands::compare(&cfg, &root.join("compare"), Some(&root.join("train").join("agent.ckpt"))).unwrap();
        root
    };
    let (a, b) = (run("a"), run("b"));
    let synth = files_equal(&a.join("synth"), &b.join("synth"), &["wave.csv", "heave.csv", "roll.csv", "pitch.csv", "z_winch.csv"]);
    let train = files_equal(&a.join("train"), &b.join("train"), &["agent.ckpt", "learning_curve.csv"]);
    let eval = files_equal(
        &a.join("eval"),
        &b.join("eval"),
        &["results.csv", "pd_moderate_series.csv", "pd_moderate_psd_comp.csv", "pd_very_rough_psd_uncomp.csv"],
    );
    let compare = files_equal(&a.join("compare"), &b.join("compare"), &["results.csv"]);
    report.record(
        10,
        "determinism",
        synth && train && eval && compare,
        format!("synth {synth}, train {train}, eval {eval}, compare {compare}"),
    );
}

fn main() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    let mut report = Report { failures: 0 };

    spectral_fidelity(&mut report);
    plant_oracle(&mut report);
    gradient_suite(&mut report);
    unit_conformance(&mut report);
    let pd = pd_regression(&mut report);
    let pd_moderate = pd[1];
    disturbance_rejection(&mut report, pd_moderate);
    determinism(&mut report, &dir);

    eprintln!("training {} agents with the full protocol", TRAINING_SEEDS.len());
    let agents: Vec<TrainedSeed> = TRAINING_SEEDS.iter().map(|&s| train_seed(s, &dir)).collect();
    rl_beats_pd(&mut report, &agents, pd_moderate);
    learning_curves(&mut report, &agents);
    let best = agents.iter().max_by(|a, b| a.comp.total_cmp(&b.comp));
    noise_cases(&mut report, pd_moderate, best);

    println!("{} of 10 criteria failed", report.failures);
    if report.failures > 0 {
        std::process::exit(1);
    }
}
