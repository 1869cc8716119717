//! The experiment registry and one runner per experiment.

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::analysis::{
    self, atom_loss_fock_fidelity, coherent_loss_fidelity, fit_decay_rate, fit_loglog,
    flip_readout_fidelity_exact, phase_flip_fidelity, reference_fidelity, spin_flip_fidelity,
    symmetric_flip_fidelity, Scenario, ScalingPoint,
};
use crate::channels::{
    motion_fidelity_floor, motion_sample_fidelity, thermal_prepare, EventFlavor, MotionParams,
    ThermalParams,
};
use crate::dynamics::{
    nonadiabatic_linear, photon_round_trip, HamiltonianParams, LinearModelParams, SweepSchedule,
};
use crate::{C64, Error, Result};

use super::config::{self, parse_profile};
use super::output::{
    config_value, fingerprint, fmt_f64, write_csv, write_summary, Assertion, Summary,
};
use super::Engine;

/// Dispatch a named experiment. Writes the CSV and JSON outputs and
/// returns the summary for exit-code evaluation.
pub fn run(
    experiment: &str,
    config_path: &Path,
    seed_flag: Option<u64>,
    out_dir: &Path,
    engine_flag: Option<&str>,
) -> Result<Summary> {
    std::fs::create_dir_all(out_dir)?;
    match experiment {
        "spinflip-scan" => run_scan(Scenario::SpinFlip, experiment, config_path, out_dir, engine_flag),
        "symflip-scan" => run_scan(Scenario::SymmetricFlip, experiment, config_path, out_dir, engine_flag),
        "phaseflip-scan" => run_scan(Scenario::PhaseFlip, experiment, config_path, out_dir, engine_flag),
        "loss-scan" => run_loss_scan(experiment, config_path, out_dir, engine_flag),
        "motion-mc" => run_motion(experiment, config_path, seed_flag, out_dir, engine_flag),
        "liouvillian-reduce" => run_liouvillian(experiment, config_path, out_dir, engine_flag),
        "thermal-prep" => run_thermal(experiment, config_path, out_dir, engine_flag),
        "adiabatic-transfer" => run_transfer(experiment, config_path, out_dir, engine_flag),
        "nonadiabatic-isolation" => run_isolation(experiment, config_path, out_dir, engine_flag),
        "discrepancy-ledger" => run_ledger(experiment, config_path, out_dir, engine_flag),
        other => Err(Error::UnknownScenario(format!("experiment '{other}'"))),
    }
}

fn reject_engine_flag(engine_flag: Option<&str>, experiment: &str) -> Result<()> {
    if engine_flag.is_some() {
        return Err(Error::ConfigInvalid(format!(
            "experiment '{experiment}' does not take --engine"
        )));
    }
    Ok(())
}

fn finish(
    experiment: &str,
    engine: &str,
    seed: Option<u64>,
    config: serde_json::Value,
    out_dir: &Path,
    csv_name: String,
    results: serde_json::Value,
    assertions: Vec<Assertion>,
) -> Result<Summary> {
    let summary_name = format!("{experiment}_summary.json");
    let summary = Summary {
        experiment: experiment.to_string(),
        engine: engine.to_string(),
        seed,
        config_fingerprint: fingerprint(experiment, engine, seed, &config),
        config,
        outputs: vec![csv_name, summary_name],
        results,
        assertions,
    };
    write_summary(out_dir, &summary)?;
    Ok(summary)
}

fn csv_path(out_dir: &Path, experiment: &str) -> (PathBuf, String) {
    let name = format!("{experiment}.csv");
    (out_dir.join(&name), name)
}

/// Exact reference for the chosen scenario and engine. The exact spin
/// engine's read-out fidelity for flips has its own closed form.
fn scan_reference(scenario: Scenario, engine: Engine, n_atoms: usize, n: usize) -> f64 {
    let nn = n_atoms as f64;
    let x = n as f64;
    match (scenario, engine) {
        (Scenario::SpinFlip, Engine::Exact) => 1.0 - (x + 1.0) / nn,
        (Scenario::SymmetricFlip, Engine::Exact) => {
            1.0 - (2.0 * x + 1.0) / nn + 2.0 * x * x / (nn * nn)
        }
        _ => reference_fidelity(scenario, n_atoms, n).exact,
    }
}

fn scan_fidelity(scenario: Scenario, engine: Engine, n_atoms: usize, n: usize) -> Result<f64> {
    match (scenario, engine) {
        (Scenario::SpinFlip, Engine::Bosonic) => spin_flip_fidelity(n_atoms, n),
        (Scenario::SpinFlip, Engine::Exact) => {
            flip_readout_fidelity_exact(n_atoms, n, EventFlavor::FlipCb)
        }
        (Scenario::SymmetricFlip, Engine::Bosonic) => symmetric_flip_fidelity(n_atoms, n),
        (Scenario::SymmetricFlip, Engine::Exact) => {
            flip_readout_fidelity_exact(n_atoms, n, EventFlavor::SymmetricFlip)
        }
        (Scenario::PhaseFlip, Engine::Exact) => phase_flip_fidelity(n_atoms, n),
        (Scenario::PhaseFlip, Engine::Bosonic) => Err(Error::ConfigInvalid(
            "the phase flip has no faithful bosonic shortcut; use the exact engine".into(),
        )),
        (Scenario::AtomLoss, Engine::Exact) => atom_loss_fock_fidelity(n_atoms, n),
        (Scenario::AtomLoss, Engine::Bosonic) => Err(Error::ConfigInvalid(
            "atom loss traces a physical atom; use the exact engine".into(),
        )),
    }
}

fn run_scan(
    scenario: Scenario,
    experiment: &str,
    config_path: &Path,
    out_dir: &Path,
    engine_flag: Option<&str>,
) -> Result<Summary> {
    let mut cfg: config::ScanConfig = config::load(config_path)?;
    if let Some(e) = engine_flag {
        cfg.engine = e.to_string();
    }
    let engine = Engine::parse(&cfg.engine)?;
    if cfg.n_list.is_empty() || cfg.quanta.is_empty() {
        return Err(Error::ConfigInvalid(
            "n_list and quanta must be non-empty".into(),
        ));
    }
    cfg.n_list.sort_unstable();
    cfg.n_list.dedup();
    let mut quanta = cfg.quanta.clone();
    quanta.sort_unstable();
    quanta.dedup();

    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut max_dev = 0.0f64;
    let mut assertions = Vec::new();
    for &n in &quanta {
        let mut points = Vec::new();
        for &n_atoms in &cfg.n_list {
            let f = scan_fidelity(scenario, engine, n_atoms, n)?;
            let reference = scan_reference(scenario, engine, n_atoms, n);
            max_dev = max_dev.max((f - reference).abs());
            rows.push(vec![
                n_atoms.to_string(),
                n.to_string(),
                fmt_f64(f),
                fmt_f64(reference),
                fmt_f64(1.0 - f),
                engine.name().to_string(),
            ]);
            points.push(ScalingPoint {
                n_atoms,
                fidelity: f,
                infidelity: 1.0 - f,
            });
        }
        if points.iter().filter(|p| p.infidelity > 0.0).count() >= 4 {
            let fit = fit_loglog(&points)?;
            assertions.push(Assertion::check(
                &format!("loglog-slope-n{n}"),
                (fit.slope + 1.0).abs() <= 0.1,
                format!("slope {} (want -1.0 +/- 0.1)", fit.slope),
            ));
            fits.push(json!({
                "n_quanta": n,
                "slope": fit.slope,
                "slope_stderr": fit.slope_stderr,
                "intercept": fit.intercept,
                "points_used": fit.n_used,
            }));
        }
    }
    assertions.push(Assertion::check(
        "reference-match",
        max_dev < 1e-12,
        format!("max |f - reference| = {max_dev:.3e} (want < 1e-12)"),
    ));

    let (path, csv_name) = csv_path(out_dir, experiment);
    write_csv(
        &path,
        &["n_atoms", "n_quanta", "f_computed", "f_reference", "infidelity", "engine"],
        &rows,
    )?;
    let config = config_value(&cfg)?;
    let results = json!({
        "scenario": scenario.name(),
        "max_reference_deviation": max_dev,
        "fits": fits,
    });
    finish(experiment, engine.name(), None, config, out_dir, csv_name, results, assertions)
}

fn run_loss_scan(
    experiment: &str,
    config_path: &Path,
    out_dir: &Path,
    engine_flag: Option<&str>,
) -> Result<Summary> {
    let mut cfg: config::LossScanConfig = config::load(config_path)?;
    if let Some(e) = engine_flag {
        cfg.engine = e.to_string();
    }
    let engine = Engine::parse(&cfg.engine)?;
    if engine != Engine::Exact {
        return Err(Error::ConfigInvalid(
            "atom loss traces a physical atom; use the exact engine".into(),
        ));
    }
    cfg.n_list.sort_unstable();
    cfg.n_list.dedup();

    let mut rows = Vec::new();
    let mut assertions = Vec::new();
    let mut fits = Vec::new();
    match cfg.state.as_str() {
        "fock" => {
            if cfg.quanta.is_empty() {
                return Err(Error::ConfigInvalid("fock loss scan needs quanta".into()));
            }
            let mut quanta = cfg.quanta.clone();
            quanta.sort_unstable();
            quanta.dedup();
            let mut max_dev = 0.0f64;
            for &n in &quanta {
                for &n_atoms in &cfg.n_list {
                    let f = atom_loss_fock_fidelity(n_atoms, n)?;
                    let reference = reference_fidelity(Scenario::AtomLoss, n_atoms, n).exact;
                    max_dev = max_dev.max((f - reference).abs());
                    rows.push(vec![
                        n_atoms.to_string(),
                        n.to_string(),
                        fmt_f64(f),
                        fmt_f64(reference),
                        fmt_f64(1.0 - f),
                        (if (f - reference).abs() < 1e-12 { "true" } else { "false" }).to_string(),
                    ]);
                }
            }
            assertions.push(Assertion::check(
                "reference-match",
                max_dev < 1e-12,
                format!("max |f - (1 - n/N)| = {max_dev:.3e} (want < 1e-12)"),
            ));
        }
        "coherent" => {
            if cfg.alpha_list.is_empty() {
                return Err(Error::ConfigInvalid(
                    "coherent loss scan needs alpha_list".into(),
                ));
            }
            let mut alphas = cfg.alpha_list.clone();
            alphas.sort_by(f64::total_cmp);
            for &alpha in &alphas {
                let mut points = Vec::new();
                let mut worst_ratio = 0.0f64;
                for &n_atoms in &cfg.n_list {
                    let f = coherent_loss_fidelity(n_atoms, alpha)?;
                    let infid = 1.0 - f;
                    let bound = 4.0 / (n_atoms * n_atoms) as f64;
                    worst_ratio = worst_ratio.max(infid / bound);
                    rows.push(vec![
                        n_atoms.to_string(),
                        fmt_f64(alpha),
                        fmt_f64(f),
                        fmt_f64(bound),
                        fmt_f64(infid),
                        "true".to_string(),
                    ]);
                    points.push(ScalingPoint {
                        n_atoms,
                        fidelity: f,
                        infidelity: infid,
                    });
                }
                assertions.push(Assertion::check(
                    &format!("coherent-bound-alpha{alpha}"),
                    worst_ratio <= 1.0,
                    format!("max infidelity / (4/N^2) = {worst_ratio:.3}"),
                ));
                if points.len() >= 3 {
                    let fit = fit_loglog(&points)?;
                    assertions.push(Assertion::check(
                        &format!("coherent-slope-alpha{alpha}"),
                        fit.slope <= -1.8,
                        format!("slope {} (want <= -1.8)", fit.slope),
                    ));
                    fits.push(json!({
                        "alpha": alpha,
                        "slope": fit.slope,
                        "slope_stderr": fit.slope_stderr,
                        "intercept": fit.intercept,
                        "points_used": fit.n_used,
                    }));
                }
            }
        }
        other => {
            return Err(Error::ConfigInvalid(format!(
                "unknown state '{other}' (expected 'fock' or 'coherent')"
            )));
        }
    }

    let (path, csv_name) = csv_path(out_dir, experiment);
    write_csv(
        &path,
        &["n_atoms", "n_or_alpha", "f_computed", "f_reference", "infidelity", "reference_match"],
        &rows,
    )?;
    let config = config_value(&cfg)?;
    let results = json!({ "state": cfg.state, "fits": fits });
    finish(experiment, engine.name(), None, config, out_dir, csv_name, results, assertions)
}

fn run_motion(
    experiment: &str,
    config_path: &Path,
    seed_flag: Option<u64>,
    out_dir: &Path,
    engine_flag: Option<&str>,
) -> Result<Summary> {
    reject_engine_flag(engine_flag, experiment)?;
    let cfg: config::MotionConfig = config::load(config_path)?;
    let seed = seed_flag.or(cfg.seed).ok_or(Error::SeedMissing)?;
    if cfg.n_quanta == 0 || cfg.n_quanta > 2 {
        return Err(Error::ConfigInvalid(
            "motion-mc supports n_quanta in {1, 2}".into(),
        ));
    }
    let params = MotionParams {
        n_atoms: cfg.n_atoms,
        n_quanta: cfg.n_quanta,
        diffusion: cfg.diffusion,
        t_final: cfg.t_final,
        dt: cfg.dt,
        n_trajectories: cfg.n_trajectories,
        seed,
    };
    let curve = motion_sample_fidelity(&params)?;
    let floor = motion_fidelity_floor(cfg.n_atoms, cfg.n_quanta);
    let window = cfg.fit_window.unwrap_or((0.0, cfg.t_final));
    let fit = fit_decay_rate(&curve, floor, window)?;

    let n = cfg.n_atoms as f64;
    let mut rows = Vec::new();
    for ((&t, &m), &e) in curve.times.iter().zip(&curve.mean).zip(&curve.stderr) {
        let closed = if cfg.n_quanta == 1 {
            fmt_f64((1.0 + (n - 1.0) * (-cfg.diffusion * t).exp()) / n)
        } else {
            String::new()
        };
        rows.push(vec![fmt_f64(t), fmt_f64(m), fmt_f64(e), closed]);
    }
    let (path, csv_name) = csv_path(out_dir, experiment);
    write_csv(&path, &["t", "f_mean", "f_stderr", "f_closed_form"], &rows)?;

    let expected_rate = if cfg.n_quanta == 1 {
        cfg.diffusion
    } else {
        2.0 * cfg.diffusion
    };
    let config = config_value(&cfg)?;
    let results = json!({
        "fidelity_floor": floor,
        "fitted_rate": fit.slope,
        "fitted_rate_stderr": fit.slope_stderr,
        "expected_rate": expected_rate,
        "fit_points_used": fit.n_used,
        "fit_window": [window.0, window.1],
        "n_trajectories": cfg.n_trajectories,
        "dt": cfg.dt,
    });
    finish(
        experiment,
        "monte-carlo",
        Some(seed),
        config,
        out_dir,
        csv_name,
        results,
        Vec::new(),
    )
}

fn run_liouvillian(
    experiment: &str,
    config_path: &Path,
    out_dir: &Path,
    engine_flag: Option<&str>,
) -> Result<Summary> {
    reject_engine_flag(engine_flag, experiment)?;
    let cfg: config::LiouvillianConfig = config::load(config_path)?;
    let cmp = analysis::compare_flip_liouvillian(
        cfg.n_atoms,
        cfg.gamma,
        cfg.t_final,
        cfg.snapshots,
        cfg.dt,
    )?;

    let mut rows = Vec::new();
    let mut max_gap = 0.0f64;
    let mut gap_ok = true;
    let mut p0_dev = 0.0f64;
    for (i, &t) in cmp.times.iter().enumerate() {
        let tol = 5.0 * cmp.mean_occupation[i] / cfg.n_atoms as f64 + 1e-12;
        for level in 0..cmp.full[i].len() {
            let gap = (cmp.full[i][level] - cmp.reduced[i][level]).abs();
            max_gap = max_gap.max(gap);
            if gap > tol {
                gap_ok = false;
            }
            rows.push(vec![
                fmt_f64(t),
                level.to_string(),
                fmt_f64(cmp.full[i][level]),
                fmt_f64(cmp.reduced[i][level]),
                fmt_f64(gap),
            ]);
        }
        p0_dev = p0_dev.max((cmp.reduced[i][0] - (-cfg.gamma * t).exp()).abs());
    }
    let (path, csv_name) = csv_path(out_dir, experiment);
    write_csv(&path, &["t", "level", "p_full", "p_reduced", "gap"], &rows)?;

    let assertions = vec![
        Assertion::check(
            "reduction-gap",
            gap_ok,
            format!("max |p_full - p_reduced| = {max_gap:.3e} (tol 5 <n>/N per snapshot)"),
        ),
        Assertion::check(
            "vacuum-decay",
            p0_dev < 1e-6,
            format!("max |p_0 - exp(-gamma t)| = {p0_dev:.3e} (want < 1e-6)"),
        ),
    ];
    let config = config_value(&cfg)?;
    let results = json!({
        "max_gap": max_gap,
        "p0_deviation": p0_dev,
        "mean_occupation": cmp.mean_occupation,
        "times": cmp.times,
    });
    finish(experiment, "exact", None, config, out_dir, csv_name, results, assertions)
}

fn run_thermal(
    experiment: &str,
    config_path: &Path,
    out_dir: &Path,
    engine_flag: Option<&str>,
) -> Result<Summary> {
    reject_engine_flag(engine_flag, experiment)?;
    let cfg: config::ThermalConfig = config::load(config_path)?;
    let report = thermal_prepare(&ThermalParams {
        n_atoms: cfg.n_atoms,
        theta: cfg.theta,
        beta_omega: cfg.beta_omega,
        tail_tol: cfg.tail_tol,
    })?;

    let rows = vec![vec![
        cfg.n_atoms.to_string(),
        fmt_f64(cfg.theta),
        fmt_f64(cfg.beta_omega),
        fmt_f64(report.nbar_exact),
        fmt_f64(report.dark_occupation),
        fmt_f64(report.atomic_density),
        report.cutoff.to_string(),
        fmt_f64(report.tail),
    ]];
    let (path, csv_name) = csv_path(out_dir, experiment);
    write_csv(
        &path,
        &["n_atoms", "theta", "beta_omega", "nbar_exact", "dark_occupation",
          "atomic_density", "cutoff", "tail"],
        &rows,
    )?;

    let bose_dev = (report.dark_occupation - report.nbar_exact).abs();
    let density_dev = (report.atomic_density - report.dark_occupation).abs();
    let assertions = vec![
        Assertion::check(
            "bose-occupation",
            bose_dev < 1e-4,
            format!("|<n_dark> - Bose formula| = {bose_dev:.3e} (want < 1e-4)"),
        ),
        Assertion::check(
            "atomic-density",
            density_dev < 1e-10,
            format!("|<n_dark> - (1/N) sum <sigma_cc>| = {density_dev:.3e} (want < 1e-10)"),
        ),
    ];
    let config = config_value(&cfg)?;
    let results = json!({
        "nbar_exact": report.nbar_exact,
        "dark_occupation": report.dark_occupation,
        "atomic_density": report.atomic_density,
        "cutoff": report.cutoff,
        "tail": report.tail,
    });
    finish(experiment, "closed-form", None, config, out_dir, csv_name, results, assertions)
}

fn run_transfer(
    experiment: &str,
    config_path: &Path,
    out_dir: &Path,
    engine_flag: Option<&str>,
) -> Result<Summary> {
    reject_engine_flag(engine_flag, experiment)?;
    let mut cfg: config::TransferConfig = config::load(config_path)?;
    let profile = parse_profile(&cfg.profile)?;
    if cfg.gn_t_list.is_empty() {
        return Err(Error::ConfigInvalid("gn_t_list must be non-empty".into()));
    }
    cfg.gn_t_list.sort_by(f64::total_cmp);
    let params = HamiltonianParams {
        g: cfg.g,
        gamma: cfg.gamma,
        n_atoms: cfg.n_atoms,
    };

    let mut rows = Vec::new();
    let mut infidelities = Vec::new();
    let mut slow_ok = true;
    for &gnt in &cfg.gn_t_list {
        let duration = gnt / params.g_root_n();
        let trip = photon_round_trip(&params, duration, profile)?;
        infidelities.push(1.0 - trip.fidelity);
        if gnt >= 100.0 && trip.fidelity < 0.98 {
            slow_ok = false;
        }
        rows.push(vec![
            fmt_f64(gnt),
            fmt_f64(duration),
            fmt_f64(trip.theta0),
            fmt_f64(trip.dt),
            fmt_f64(trip.fidelity),
            fmt_f64(1.0 - trip.fidelity),
            fmt_f64(trip.stored_atomic_weight),
            fmt_f64(trip.final_norm),
        ]);
    }
    let monotone = infidelities.windows(2).all(|w| w[1] < w[0]);
    let (path, csv_name) = csv_path(out_dir, experiment);
    write_csv(
        &path,
        &["gn_t", "duration", "theta0", "dt", "fidelity", "infidelity",
          "stored_atomic_weight", "final_norm"],
        &rows,
    )?;

    let assertions = vec![
        Assertion::check(
            "monotone-infidelity",
            monotone,
            format!("infidelities over sorted gn_t: {infidelities:?}"),
        ),
        Assertion::check(
            "slow-sweep-fidelity",
            slow_ok,
            "round-trip fidelity >= 0.98 for every gn_t >= 100".to_string(),
        ),
    ];
    let config = config_value(&cfg)?;
    let results = json!({ "gn_t": cfg.gn_t_list, "infidelities": infidelities });
    finish(experiment, "exact", None, config, out_dir, csv_name, results, assertions)
}

fn run_isolation(
    experiment: &str,
    config_path: &Path,
    out_dir: &Path,
    engine_flag: Option<&str>,
) -> Result<Summary> {
    reject_engine_flag(engine_flag, experiment)?;
    let cfg: config::IsolationConfig = config::load(config_path)?;
    let profile = parse_profile(&cfg.profile)?;
    if cfg.n_spin_waves == 0 {
        return Err(Error::ConfigInvalid("n_spin_waves must be positive".into()));
    }
    let schedule = SweepSchedule::retrieve(cfg.theta_end, cfg.duration, profile);
    let params = LinearModelParams {
        kappa: cfg.kappa,
        n_bath: cfg.n_bath,
    };
    let zeros = vec![C64::ZERO; cfg.n_spin_waves];
    let base = nonadiabatic_linear(&schedule, &params, C64::ONE, C64::ZERO, &zeros, cfg.dt)?;

    let mut rows = vec![vec![
        "none".to_string(),
        fmt_f64(base.dark.re),
        fmt_f64(base.dark.im),
        fmt_f64(base.bright.norm()),
        fmt_f64(base.bath_weight),
        fmt_f64(0.0),
    ]];
    let mut max_spin_delta = 0.0f64;
    for l in 1..=cfg.n_spin_waves {
        let mut seeds = zeros.clone();
        seeds[l - 1] = C64::ONE;
        let r = nonadiabatic_linear(&schedule, &params, C64::ONE, C64::ZERO, &seeds, cfg.dt)?;
        let delta = (r.dark - base.dark).norm()
            + (r.bright - base.bright).norm()
            + (r.bath_weight - base.bath_weight).abs();
        max_spin_delta = max_spin_delta.max(delta);
        rows.push(vec![
            format!("phi_{l}"),
            fmt_f64(r.dark.re),
            fmt_f64(r.dark.im),
            fmt_f64(r.bright.norm()),
            fmt_f64(r.bath_weight),
            fmt_f64(delta),
        ]);
    }
    let bright = nonadiabatic_linear(
        &schedule,
        &params,
        C64::ONE,
        C64::new(cfg.bright_seed, 0.0),
        &zeros,
        cfg.dt,
    )?;
    let bright_delta = (bright.dark - base.dark).norm();
    rows.push(vec![
        "phi_0".to_string(),
        fmt_f64(bright.dark.re),
        fmt_f64(bright.dark.im),
        fmt_f64(bright.bright.norm()),
        fmt_f64(bright.bath_weight),
        fmt_f64(bright_delta),
    ]);

    let (path, csv_name) = csv_path(out_dir, experiment);
    write_csv(
        &path,
        &["seeded_mode", "dark_re", "dark_im", "bright_abs", "bath_weight", "delta"],
        &rows,
    )?;

    let assertions = vec![
        Assertion::check(
            "spin-wave-decoupling",
            max_spin_delta < 1e-12,
            format!("max retrieved-amplitude change = {max_spin_delta:.3e} (want < 1e-12)"),
        ),
        Assertion::check(
            "bright-coupling",
            bright_delta > 1e-3,
            format!("bright-seeded change = {bright_delta:.3e} (want > 1e-3)"),
        ),
        Assertion::check(
            "norm-conservation",
            base.norm_defect < 1e-9,
            format!("norm defect {:.3e} (want < 1e-9)", base.norm_defect),
        ),
    ];
    let config = config_value(&cfg)?;
    let results = json!({
        "baseline_dark": [base.dark.re, base.dark.im],
        "baseline_bath_weight": base.bath_weight,
        "max_spin_wave_delta": max_spin_delta,
        "bright_delta": bright_delta,
        "norm_defect": base.norm_defect,
    });
    finish(experiment, "reduced-linear", None, config, out_dir, csv_name, results, assertions)
}

fn run_ledger(
    experiment: &str,
    config_path: &Path,
    out_dir: &Path,
    engine_flag: Option<&str>,
) -> Result<Summary> {
    reject_engine_flag(engine_flag, experiment)?;
    let cfg: config::LedgerConfig = config::load(config_path)?;
    let entries = analysis::discrepancy_ledger()?;

    let mut rows = Vec::new();
    let mut assertions = Vec::new();
    let mut table = Vec::new();
    for e in &entries {
        rows.push(vec![
            e.channel.to_string(),
            e.printed.to_string(),
            e.derived.to_string(),
            e.verdict.name().to_string(),
            fmt_f64(e.printed_gap),
            fmt_f64(e.derived_gap),
        ]);
        let ok = match e.verdict {
            analysis::Verdict::Match => e.printed_gap < 1e-12,
            analysis::Verdict::TypoCandidate => e.derived_gap < 1e-12 && e.printed_gap > 1e-3,
        };
        assertions.push(Assertion::check(
            &format!("ledger-{}", e.channel),
            ok,
            format!(
                "{}: printed gap {:.3e}, derived gap {:.3e}",
                e.verdict.name(),
                e.printed_gap,
                e.derived_gap
            ),
        ));
        table.push(json!({
            "channel": e.channel,
            "printed": e.printed,
            "derived": e.derived,
            "verdict": e.verdict.name(),
            "printed_gap": e.printed_gap,
            "derived_gap": e.derived_gap,
        }));
    }
    let (path, csv_name) = csv_path(out_dir, experiment);
    write_csv(
        &path,
        &["channel", "printed_formula", "derived_formula", "verdict",
          "printed_gap", "derived_gap"],
        &rows,
    )?;
    let config = config_value(&cfg)?;
    finish(
        experiment,
        "both",
        None,
        config,
        out_dir,
        csv_name,
        json!({ "entries": table }),
        assertions,
    )
}
