//! Subcommand runners. Each turns a validated config into a [`Table`].

use fermibath::bath::{
    mode_correlator, weak_coupling_correlators, weak_coupling_rates, CorrelatorMode,
};
use fermibath::density::{
    evolve_density, evolve_density_series, generic_correlators, rho_decay, rho_limiting,
};
use fermibath::greens::{
    greens_on_grid, hole_propagator_weak_closed_form, particle_propagator_weak_closed_form,
    propagator,
};
use fermibath::oracle::{
    finite_bath_evolution, four_point_quadrature, hole_propagator_quadrature,
    particle_propagator_quadrature, wick_density, FiniteBathConfig,
};
use fermibath::{
    DecayFunction, DensityMatrix, LevelWindow, ModeCorrelator, ModelParams, PropagatorKind,
};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::table::{Cell, Table};

const SERIES_QUADRATURE_TOL: f64 = 1e-8;
const WICK_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-6;
const HERMITICITY_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-8;
const LADDER_TOL: f64 = 1e-12;
const ENVELOPE_TOL: f64 = 0.10;

fn density_columns() -> Vec<&'static str> {
    vec!["t", "n", "n_prime", "re", "im", "abs", "trace"]
}

fn push_density(table: &mut Table, rho: &DensityMatrix) {
    let trace = rho.particle_count();
    for n in rho.window.levels() {
        for np in rho.window.levels() {
            let v = rho.element(n, np).expect("level inside window");
            table.push(vec![
                rho.time.into(),
                n.into(),
                np.into(),
                v.re.into(),
                v.im.into(),
                v.norm().into(),
                trace.into(),
            ]);
        }
    }
}

/// Mode correlators for the center-of-mass-only commands.
fn cm_correlators(cfg: &ExperimentConfig) -> Result<Vec<ModeCorrelator>, CliError> {
    let profile = cfg.profile()?;
    if cfg.flags.exact_cm {
        if !profile.is_center_of_mass_only() {
            return Err(CliError::Config(
                "--exact-cm needs f_q = \"cm-only\"".into(),
            ));
        }
        return Ok(vec![mode_correlator(
            &cfg.model,
            Some(&cfg.bath),
            1,
            0.0,
            CorrelatorMode::ExactCm,
        )?]);
    }
    if cfg.model.temperature > 0.0 {
        return Err(CliError::Config(
            "weak-coupling correlators are zero-temperature; use --exact-cm for T > 0".into(),
        ));
    }
    Ok(weak_coupling_correlators(
        &cfg.model, &cfg.bath, &profile, None,
    )?)
}

/// Center-of-mass rate, for the closed-form and limiting paths.
fn cm_rate(cfg: &ExperimentConfig, what: &str) -> Result<f64, CliError> {
    let profile = cfg.profile()?;
    if !profile.is_center_of_mass_only() || cfg.flags.exact_cm {
        return Err(CliError::Usage(format!(
            "{what} applies to the weak-coupling center-of-mass model only"
        )));
    }
    if cfg.model.temperature > 0.0 {
        return Err(CliError::Usage(format!(
            "{what} is a zero-temperature result"
        )));
    }
    Ok(weak_coupling_rates(&cfg.model, &cfg.bath, &profile)?[0])
}

fn greens_levels(cfg: &ExperimentConfig, kind: PropagatorKind) -> Result<LevelWindow, CliError> {
    if let Some(w) = cfg.window {
        return Ok(LevelWindow::new(w.lo, w.hi)?);
    }
    let nf = cfg.model.fermi_level();
    Ok(match kind {
        PropagatorKind::Hole => LevelWindow::new((nf - 12).max(0), nf)?,
        PropagatorKind::Particle => LevelWindow::new(nf + 1, nf + 12)?,
    })
}

pub fn greens(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let times = cfg.times()?;
    let kind = cfg.greens.kind;
    let levels = greens_levels(cfg, kind)?;
    let mut columns: Vec<Vec<fermibath::Complex64>> = Vec::new();
    if cfg.flags.closed_form {
        let rate = cm_rate(cfg, "--closed-form")?;
        for n in levels.levels() {
            let col = times
                .iter()
                .map(|&t| match kind {
                    PropagatorKind::Hole => {
                        hole_propagator_weak_closed_form(&cfg.model, rate, n, t)
                    }
                    PropagatorKind::Particle => {
                        particle_propagator_weak_closed_form(&cfg.model, rate, n, t)
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            columns.push(col);
        }
    } else {
        let corr = cm_correlators(cfg)?;
        for n in levels.levels() {
            let r = greens_on_grid(kind, &cfg.model, &corr, n, n, &times, cfg.policy())?;
            columns.push(r.values);
        }
    }
    let mut table = Table::new(vec!["t", "n", "n_prime", "re", "im", "abs"]);
    for (k, &t) in times.iter().enumerate() {
        for (col, n) in columns.iter().zip(levels.levels()) {
            let v = col[k];
            table.push(vec![
                t.into(),
                n.into(),
                n.into(),
                v.re.into(),
                v.im.into(),
                v.norm().into(),
            ]);
        }
    }
    Ok(table)
}

pub fn evolve(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let times = cfg.times()?;
    let state = cfg.injection_state()?;
    let window = cfg.level_window()?;
    let rhos = if cfg.flags.limiting {
        let decay = DecayFunction::new(&cfg.model, cm_rate(cfg, "--limiting")?);
        times
            .iter()
            .map(|&t| rho_limiting(&cfg.model, &decay, &state, t, &window))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        let corr = cm_correlators(cfg)?;
        evolve_density_series(&cfg.model, &corr, &state, &times, &window, cfg.policy())?
    };
    let mut table = Table::new(density_columns());
    for rho in &rhos {
        push_density(&mut table, rho);
    }
    Ok(table)
}

pub fn generic(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    if cfg.flags.exact_cm || cfg.flags.limiting || cfg.flags.closed_form {
        return Err(CliError::Usage(
            "generic takes none of --exact-cm, --limiting, --closed-form".into(),
        ));
    }
    if cfg.model.temperature > 0.0 {
        return Err(CliError::Config(
            "generic coupling is evaluated at T = 0".into(),
        ));
    }
    let times = cfg.times()?;
    let state = cfg.injection_state()?;
    if state.amplitudes().len() != 1 {
        return Err(CliError::Config(
            "generic expects a single injected level".into(),
        ));
    }
    let window = cfg.level_window()?;
    let corr = generic_correlators(&cfg.model, &cfg.bath, &cfg.profile()?, &state)?;
    let rhos = evolve_density_series(&cfg.model, &corr, &state, &times, &window, cfg.policy())?;
    let mut table = Table::new(vec!["t", "n", "population"]);
    for rho in &rhos {
        for (n, p) in window.levels().zip(rho.populations()) {
            table.push(vec![rho.time.into(), n.into(), p.into()]);
        }
    }
    Ok(table)
}

struct Check {
    name: &'static str,
    deviation: f64,
    tolerance: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

fn sample_times(times: &[f64]) -> Vec<f64> {
    let mut idx = vec![0, times.len() / 2, times.len() - 1];
    idx.dedup();
    idx.into_iter().map(|i| times[i]).collect()
}

/// Oracle comparisons on the configured experiment. The table lists every
/// check; the caller turns failures into exit code 1.
pub fn verify(cfg: &ExperimentConfig) -> Result<(Table, usize), CliError> {
    let times = sample_times(&cfg.times()?);
    let state = cfg.injection_state()?;
    let window = cfg.level_window()?;
    let profile = cfg.profile()?;
    let cm_only = profile.is_center_of_mass_only();
    let corr = if cm_only {
        cm_correlators(cfg)?
    } else {
        generic_correlators(&cfg.model, &cfg.bath, &profile, &state)?
    };
    let nf = cfg.model.fermi_level();
    let policy = cfg.policy();
    let mut checks = Vec::new();

    let mut dev: f64 = 0.0;
    for &t in &times {
        for n in (nf - 3).max(0)..=nf {
            let s = propagator(PropagatorKind::Hole, &cfg.model, &corr, n, n, t, policy)?;
            let q = hole_propagator_quadrature(&cfg.model, &corr, n, n, t, 128)?;
            dev = dev.max((s - q).norm());
        }
        for n in nf + 1..=nf + 2 {
            let s = propagator(PropagatorKind::Particle, &cfg.model, &corr, n, n, t, policy)?;
            let q = particle_propagator_quadrature(&cfg.model, &corr, n, n, t, 128)?;
            dev = dev.max((s - q).norm());
        }
    }
    checks.push(Check {
        name: "propagator_series_vs_quadrature",
        deviation: dev,
        tolerance: SERIES_QUADRATURE_TOL,
    });

    let (n0, _) = state
        .amplitudes()
        .iter()
        .copied()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("state is nonempty");
    let mut dev: f64 = 0.0;
    for &t in &times {
        for n in [n0, nf, nf + 1] {
            let s = fermibath::density::four_point_function(
                &cfg.model, &corr, n, n, n0, n0, t, policy,
            )?;
            // coarse grid first; refine only when the doubling check objects
            let q = match four_point_quadrature(&cfg.model, &corr, n, n, n0, n0, t, 16) {
                Err(fermibath::Error::Resolution { .. }) => {
                    four_point_quadrature(&cfg.model, &corr, n, n, n0, n0, t, 32)?
                }
                other => other?,
            };
            dev = dev.max((s - q).norm());
        }
    }
    checks.push(Check {
        name: "four_point_series_vs_quadrature",
        deviation: dev,
        tolerance: SERIES_QUADRATURE_TOL,
    });

    let free = ModelParams {
        omega0_prime: cfg.model.omega0,
        temperature: 0.0,
        ..cfg.model.clone()
    };
    let free_corr = [ModeCorrelator::weak_coupling(1, free.omega0, 0.0)];
    let mut dev: f64 = 0.0;
    for &t in &times {
        let rho = evolve_density(&free, &free_corr, &state, t, &window, policy)?;
        let w = wick_density(&free, &state, t, &window);
        dev = (&rho.matrix - &w.matrix)
            .iter()
            .map(|d| d.norm())
            .fold(dev, f64::max);
    }
    checks.push(Check {
        name: "zero_coupling_vs_wick",
        deviation: dev,
        tolerance: WICK_TOL,
    });

    let (mut trace, mut herm, mut neg): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for &t in &times {
        let rho = evolve_density(&cfg.model, &corr, &state, t, &window, policy)?;
        trace = trace.max((rho.particle_count() - (cfg.model.n_particles as f64 + 1.0)).abs());
        herm = herm.max(rho.hermiticity_residual());
        neg = neg.max(-rho.min_eigenvalue());
    }
    checks.push(Check {
        name: "density_trace",
        deviation: trace,
        tolerance: TRACE_TOL,
    });
    checks.push(Check {
        name: "density_hermiticity",
        deviation: herm,
        tolerance: HERMITICITY_TOL,
    });
    checks.push(Check {
        name: "density_positivity",
        deviation: neg.max(0.0),
        tolerance: POSITIVITY_TOL,
    });

    let weak_cm = cm_only && !cfg.flags.exact_cm && cfg.model.temperature == 0.0;
    if weak_cm {
        let rate = cm_rate(cfg, "verify")?;
        let decay = DecayFunction::new(&cfg.model, rate);
        let mut dev: f64 = 0.0;
        for &t in &cfg.times()? {
            let sum = (0..=60)
                .map(|m| rho_decay(&decay, m, t))
                .sum::<Result<f64, _>>()?;
            dev = dev.max((sum - 1.0).abs());
        }
        checks.push(Check {
            name: "decay_ladder_normalization",
            deviation: dev,
            tolerance: LADDER_TOL,
        });

        if rate > 0.0 {
            let grid: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64 / rate).collect();
            let fb =
                finite_bath_evolution(&cfg.model, &cfg.bath, &FiniteBathConfig::default(), &grid)?;
            let mut dev: f64 = 0.0;
            for (k, &t) in grid.iter().enumerate() {
                if t >= fb.recurrence_time() {
                    break;
                }
                let env = (-0.5 * rate * t).exp();
                dev = dev.max((fb.p[k].norm() / fb.p[0].norm() - env).abs() / env);
            }
            checks.push(Check {
                name: "finite_bath_envelope",
                deviation: dev,
                tolerance: ENVELOPE_TOL,
            });
        }
    }

    let mut table = Table::new(vec!["check", "status", "max_deviation", "tolerance"]);
    let mut failed = 0;
    for c in &checks {
        if !c.passed() {
            failed += 1;
        }
        table.push(vec![
            c.name.into(),
            Cell::from(if c.passed() { "PASS" } else { "FAIL" }),
            c.deviation.into(),
            c.tolerance.into(),
        ]);
    }
    Ok((table, failed))
}
