use ahc_core::evalkit::*;
use ahc_core::pid::PdGains;
use ahc_core::seaway::pm_wave_elevation;
use ahc_core::RngSeed;

fn pd() -> ControllerSpec {
    ControllerSpec::Pd(PdGains::default())
}

fn scenario(sea: SeaState, controller: ControllerSpec) -> ScenarioConfig {
    ScenarioConfig {
        name: sea.name.into(),
        sea,
        controller,
        ..ScenarioConfig::default()
    }
}

#[test]
fn open_loop_does_nothing() {
    let cfg = ScenarioConfig {
        controller: ControllerSpec::None,
        initial: InitialState::Zero,
        gravity_bias: false,
        duration: 300.0,
        ..ScenarioConfig::default()
    };
    let r = run_scenario(&cfg).unwrap();
    assert!(r.metrics.comp_percent.abs() < 1e-9, "{}", r.metrics.comp_percent);
    assert_eq!(r.compensated.values(), r.uncompensated.values());
    assert!(r.command.values().iter().all(|&u| u == 0.0));
}

#[test]
fn pd_compensates_in_every_sea_state() {
    for sea in SEA_STATES {
        let m = run_scenario(&scenario(sea, pd())).unwrap().metrics;
        let floor = if sea.name == "moderate" { 80.0 } else { 75.0 };
        assert!(m.comp_percent >= floor, "{}: {:.2}%", sea.name, m.comp_percent);
        assert!(m.comp_percent <= 100.0);
    }
}

#[test]
fn run_result_series_share_sampling() {
    let r = run_scenario(&ScenarioConfig {
        duration: 100.0,
        noise: Some(BandSpec { s0: 1e-6, omega_lo: 3.14, omega_hi: 30.0 }),
        ..ScenarioConfig::default()
    })
    .unwrap();
    for s in [&r.compensated, &r.command, &r.swash, &r.offset, r.noise.as_ref().unwrap()] {
        assert!(s.same_sampling(&r.uncompensated));
    }
    assert_eq!(r.uncompensated.len(), 1001);
}

#[test]
fn pd_tracks_offset_window() {
    let window = OffsetWindow::default();
    let cfg = ScenarioConfig {
        offsets: vec![window],
        ..ScenarioConfig::default()
    };
    let r = run_scenario(&cfg).unwrap();
    // z_w + z_winch over the second half of the window.
    let dt = r.compensated.dt();
    let lo = ((window.t_start + window.t_end) / 2.0 / dt).round() as usize;
    let hi = (window.t_end / dt).round() as usize;
    let level: Vec<f64> = (lo..hi)
        .map(|k| r.compensated.values()[k] + r.offset.values()[k])
        .collect();
    let mean = level.iter().sum::<f64>() / level.len() as f64;
    assert!((mean - window.level).abs() <= 0.2 * window.level.abs(), "mean {mean}");
    assert!(r.offset.values()[lo..hi].iter().all(|&o| o == window.level));
}

#[test]
fn measurement_noise_leaves_true_motion_alone() {
    let base = ScenarioConfig {
        controller: ControllerSpec::None,
        duration: 200.0,
        ..ScenarioConfig::default()
    };
    let quiet = run_scenario(&base).unwrap();
    let noisy = run_scenario(&ScenarioConfig {
        noise: Some(BandSpec { s0: 1e-3, omega_lo: 3.14, omega_hi: 30.0 }),
        ..base
    })
    .unwrap();
    assert_eq!(quiet.compensated.values(), noisy.compensated.values());
    assert!(noisy.metrics.snr_db.is_some() && quiet.metrics.snr_db.is_none());
}

#[test]
fn saturation_grows_with_wave_height() {
    let mut last = 0.0;
    for sea in SEA_STATES {
        let sat = run_scenario(&scenario(sea, pd())).unwrap().metrics.sat_fraction;
        assert!((0.0..=1.0).contains(&sat));
        assert!(sat >= last, "{}: {sat} < {last}", sea.name);
        last = sat;
    }
    assert!(last > 0.0);
}

#[test]
fn comparison_table_has_the_four_sea_states() {
    let base = ScenarioConfig {
        duration: 100.0,
        ..ScenarioConfig::default()
    };
    let rows = compare_controllers(&base, &[pd(), pd()], &SEA_STATES).unwrap();
    assert_eq!(rows.len(), 8);
    let pairs: Vec<(f64, f64)> = rows.iter().step_by(2).map(|r| (r.hs, r.tp)).collect();
    assert_eq!(pairs, [(1.5, 6.0), (4.0, 9.0), (6.0, 12.0), (8.5, 14.0)]);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0], pair[1]);
    }

    let mut buf = Vec::new();
    write_results_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("scenario,controller,Hs,Tp,comp_percent,rms_uncomp,rms_comp,sat_fraction,seed\n"));
    assert_eq!(read_results_csv(buf.as_slice()).unwrap(), rows);
}

#[test]
fn rl_without_checkpoint_is_missing() {
    let err = Policy::load(std::path::Path::new("/nonexistent/agent.ckpt")).unwrap_err();
    assert_eq!(err.class(), "missing_checkpoint");
}

#[test]
fn welch_integral_matches_variance_of_long_seas() {
    for (i, sea) in SEA_STATES.iter().enumerate() {
        let wave = pm_wave_elevation(sea.hs, sea.tp, 5000.0, 0.1, RngSeed(40 + i as u64)).unwrap();
        let psd = welch_psd(&wave, 2048, 0.5).unwrap();
        let ratio = psd.integral() / wave.variance();
        assert!((ratio - 1.0).abs() < 0.1, "{}: {ratio}", sea.name);
    }
}
