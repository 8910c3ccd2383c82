//! Validation and dispatch of the configured experiment into a CSV table.

use std::f64::consts::LN_2;

use memlab_core::decoder::{Decoder, MatchingDecoder};
use memlab_core::dynamics::{
    first_passage, kitaev_memory_lifetime, magnetization_reversed, Readout, SimulationParams,
};
use memlab_core::ensemble::{rng_from_seed, trajectory_seed};
use memlab_core::exact::{build_generator, spectral_gap, state_count, ProtocolSchedule};
use memlab_core::lattice::{build_model, ModelKind, ModelSpec};
use memlab_core::qtoolkit::{
    apply_channel, correctable_isometry_check, erasure_balance, fannes_check, random_channel,
    random_repetition_state, random_state, repetition_code, DensityMatrix, FannesOutcome,
    IsometryReport, MAX_DIM,
};
use memlab_core::thermo::{
    entropy_production_samples, memory_engine_cycle_with, szilard_run_with, MemoryModel,
    SzilardProtocol,
};
use memlab_core::Error;
use rand::Rng;

use crate::config::{
    CycleParams, FluctuationParams, GapParams, IsingLifetimeParams, KitaevLifetimeParams, Params,
    SzilardParams, ToolkitParams,
};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

fn invalid(msg: String) -> CliError {
    CliError::Invalid(Error::InvalidParameter(msg))
}

fn nonempty<T>(name: &str, v: &[T]) -> CliResult<()> {
    if v.is_empty() {
        return Err(invalid(format!("`{name}` must not be empty")));
    }
    Ok(())
}

fn f(x: f64) -> String {
    // -0 and 0 must print alike so reruns and goldens compare cleanly.
    format!("{}", x + 0.0)
}

fn szilard_protocol(
    beta: f64,
    beta_e: f64,
    ramp: f64,
    p: f64,
    gamma: f64,
    law: memlab_core::exact::RateLaw,
) -> SzilardProtocol {
    SzilardProtocol {
        gamma,
        rate_law: law,
        ..SzilardProtocol::new(beta_e / beta, ramp, beta, p)
    }
}

fn triangle(p: &FluctuationParams, cycles: usize) -> ProtocolSchedule {
    ProtocolSchedule::periodic_triangle(p.amplitude, p.period, cycles, p.gamma, p.beta)
        .with_rate_law(p.rate_law)
}

fn cycle_memories(p: &CycleParams) -> CliResult<Vec<MemoryModel>> {
    let mut out = Vec::new();
    for &e in &p.error_probabilities {
        out.push(MemoryModel::with_error(e).map_err(CliError::Invalid)?);
    }
    for m in &p.lifetimes {
        out.push(MemoryModel::from_lifetime(m.t_cycle, m.tau).map_err(CliError::Invalid)?);
    }
    Ok(out)
}

/// Checks every module precondition the run will hit, without running it.
pub fn validate(params: &Params) -> CliResult<()> {
    let bad = CliError::Invalid;
    match params {
        Params::IsingLifetime(p) => {
            nonempty("sizes", &p.sizes)?;
            nonempty("betas", &p.betas)?;
            if !p.model.is_ising() {
                return Err(invalid(format!(
                    "ising-lifetime needs an Ising model, got {}",
                    p.model.name()
                )));
            }
            for &n in &p.sizes {
                build_model(ModelSpec::new(p.model, n).with_coupling(p.coupling)).map_err(bad)?;
            }
            for &b in &p.betas {
                SimulationParams::new(b, p.t_max, p.n_traj)
                    .validate()
                    .map_err(bad)?;
            }
        }
        Params::KitaevLifetime(p) => {
            nonempty("sizes", &p.sizes)?;
            nonempty("betas", &p.betas)?;
            for &l in &p.sizes {
                build_model(ModelSpec::new(ModelKind::Kitaev2D, l)).map_err(bad)?;
            }
            for &b in &p.betas {
                kitaev_params(p, b).validate().map_err(bad)?;
            }
        }
        Params::Gap(p) => {
            nonempty("sizes", &p.sizes)?;
            nonempty("betas", &p.betas)?;
            for &n in &p.sizes {
                let model = build_model(ModelSpec::new(p.model, n).with_coupling(p.coupling))
                    .map_err(bad)?;
                state_count(&model).map_err(bad)?;
            }
            for &b in &p.betas {
                if !(b.is_finite() && b >= 0.0) {
                    return Err(invalid(format!("beta must be finite and >= 0, got {b}")));
                }
            }
        }
        Params::Szilard(p) => {
            nonempty("beta_e", &p.beta_e)?;
            nonempty("ramp_times", &p.ramp_times)?;
            nonempty("p_init", &p.p_init)?;
            for &e in &p.beta_e {
                for &t in &p.ramp_times {
                    for &q in &p.p_init {
                        let proto = szilard_protocol(p.beta, e, t, q, p.gamma, p.rate_law);
                        proto.validate().map_err(bad)?;
                        proto.schedule().validate().map_err(bad)?;
                    }
                }
            }
        }
        Params::Cycle(p) => {
            nonempty("beta_e", &p.beta_e)?;
            nonempty("ramp_times", &p.ramp_times)?;
            let mems = cycle_memories(p)?;
            if mems.is_empty() {
                return Err(invalid("give `error_probabilities` or `lifetimes`".into()));
            }
            for &e in &p.beta_e {
                for &t in &p.ramp_times {
                    let proto = szilard_protocol(p.beta, e, t, 0.0, p.gamma, p.rate_law);
                    proto.validate().map_err(bad)?;
                    proto.schedule().validate().map_err(bad)?;
                }
            }
        }
        Params::Fluctuation(p) => {
            nonempty("cycles", &p.cycles)?;
            if p.n_traj == 0 {
                return Err(invalid("n_traj must be >= 1".into()));
            }
            if !(p.period.is_finite() && p.period > 0.0 && p.amplitude.is_finite()) {
                return Err(invalid(
                    "period must be positive and amplitude finite".into(),
                ));
            }
            for &c in &p.cycles {
                if c == 0 {
                    return Err(invalid("cycles must be >= 1".into()));
                }
                triangle(p, c).validate().map_err(bad)?;
            }
        }
        Params::ToolkitCheck(p) => {
            nonempty("dims", &p.dims)?;
            if p.n_pairs == 0 {
                return Err(invalid("n_pairs must be >= 1".into()));
            }
            if let Some(&d) = p.dims.iter().find(|&&d| !(2..=MAX_DIM).contains(&d)) {
                return Err(invalid(format!("dimension {d} outside 2..={MAX_DIM}")));
            }
            repetition_code(p.flip_probability).map_err(bad)?;
        }
    }
    Ok(())
}

fn kitaev_params(p: &KitaevLifetimeParams, beta: f64) -> SimulationParams {
    SimulationParams {
        probe_cadence: p.probe_cadence,
        move_rate: p.move_rate,
        ..SimulationParams::new(beta, p.t_max, p.n_traj)
    }
}

/// Runs the experiment; `seed` is the master seed, split per row.
pub fn run(params: &Params, seed: u64) -> CliResult<Table> {
    let rt = CliError::Runtime;
    match params {
        Params::IsingLifetime(p) => ising_lifetime(p, seed).map_err(rt),
        Params::KitaevLifetime(p) => kitaev_lifetime(p, seed).map_err(rt),
        Params::Gap(p) => gap(p).map_err(rt),
        Params::Szilard(p) => szilard(p).map_err(rt),
        Params::Cycle(p) => cycle(p).map_err(rt),
        Params::Fluctuation(p) => fluctuation(p, seed).map_err(rt),
        Params::ToolkitCheck(p) => toolkit(p, seed).map_err(rt),
    }
}

type Res<T> = memlab_core::Result<T>;

fn ising_lifetime(p: &IsingLifetimeParams, seed: u64) -> Res<Table> {
    let mut rows = Vec::new();
    for &n in &p.sizes {
        let model = build_model(ModelSpec::new(p.model, n).with_coupling(p.coupling))?;
        for &beta in &p.betas {
            let row_seed = trajectory_seed(seed, rows.len() as u64);
            let params = SimulationParams::new(beta, p.t_max, p.n_traj);
            let est = first_passage(&model, &params, magnetization_reversed, row_seed)?;
            rows.push(vec![
                p.model.name().to_string(),
                n.to_string(),
                f(beta),
                f(p.coupling),
                p.n_traj.to_string(),
                est.censored.to_string(),
                f(est.mean),
                f(est.stderr),
            ]);
        }
    }
    Ok(Table {
        header: &[
            "model",
            "N",
            "beta",
            "J",
            "n_traj",
            "censored",
            "mean_lifetime",
            "stderr",
        ],
        rows,
    })
}

fn kitaev_lifetime(p: &KitaevLifetimeParams, seed: u64) -> Res<Table> {
    let decoder = MatchingDecoder {
        exact_limit: p.exact_limit,
    };
    let decoder_name = match p.readout {
        Readout::Bare => "none".to_string(),
        Readout::Dressed => decoder.name(),
    };
    let mut rows = Vec::new();
    for &l in &p.sizes {
        for &beta in &p.betas {
            let row_seed = trajectory_seed(seed, rows.len() as u64);
            let est =
                kitaev_memory_lifetime(l, &kitaev_params(p, beta), &decoder, p.readout, row_seed)?;
            rows.push(vec![
                l.to_string(),
                f(beta),
                p.n_traj.to_string(),
                est.censored.to_string(),
                decoder_name.clone(),
                f(est.mean),
                f(est.stderr),
            ]);
        }
    }
    Ok(Table {
        header: &[
            "L",
            "beta",
            "n_traj",
            "censored",
            "decoder",
            "mean_lifetime",
            "stderr",
        ],
        rows,
    })
}

fn gap(p: &GapParams) -> Res<Table> {
    let mut rows = Vec::new();
    for &n in &p.sizes {
        let model = build_model(ModelSpec::new(p.model, n).with_coupling(p.coupling))?;
        for &beta in &p.betas {
            let g = spectral_gap(&build_generator(&model, beta)?)?;
            rows.push(vec![
                p.model.name().to_string(),
                n.to_string(),
                f(beta),
                f(g),
            ]);
        }
    }
    Ok(Table {
        header: &["model", "size", "beta", "gap"],
        rows,
    })
}

const LEDGER_HEADER: &[&str] = &[
    "p_init",
    "beta_E",
    "ramp_time",
    "work_on",
    "heat_in",
    "net_extracted",
    "violation_flag",
];

fn szilard(p: &SzilardParams) -> Res<Table> {
    let mut rows = Vec::new();
    for &q in &p.p_init {
        for &e in &p.beta_e {
            for &t in &p.ramp_times {
                let ledger =
                    szilard_run_with(&szilard_protocol(p.beta, e, t, q, p.gamma, p.rate_law))?;
                let extracted = ledger.extracted();
                rows.push(vec![
                    f(q),
                    f(e),
                    f(t),
                    f(ledger.work_on_system),
                    f(ledger.heat_into_system),
                    f(extracted),
                    (extracted > LN_2 / p.beta).to_string(),
                ]);
            }
        }
    }
    Ok(Table {
        header: LEDGER_HEADER,
        rows,
    })
}

fn cycle(p: &CycleParams) -> Res<Table> {
    let mems = cycle_memories(p).map_err(|e| match e {
        CliError::Invalid(inner) | CliError::Runtime(inner) => inner,
        other => Error::InvalidParameter(other.to_string()),
    })?;
    let mut rows = Vec::new();
    for mem in &mems {
        for &e in &p.beta_e {
            for &t in &p.ramp_times {
                let proto =
                    szilard_protocol(p.beta, e, t, mem.error_probability, p.gamma, p.rate_law);
                let out = memory_engine_cycle_with(&proto, p.measurement)?;
                rows.push(vec![
                    f(mem.error_probability),
                    f(e),
                    f(t),
                    f(out.ledger.work_on_system),
                    f(out.ledger.heat_into_system),
                    f(out.net_extracted),
                    out.violation.to_string(),
                ]);
            }
        }
    }
    Ok(Table {
        header: LEDGER_HEADER,
        rows,
    })
}

fn fluctuation(p: &FluctuationParams, seed: u64) -> Res<Table> {
    let mut rows = Vec::new();
    for &c in &p.cycles {
        let row_seed = trajectory_seed(seed, rows.len() as u64);
        let sched = triangle(p, c);
        let start = sched.knots[0];
        let z = 1.0 + (-p.beta * (start.e1 - start.e0)).exp();
        let ep = entropy_production_samples(&sched, [1.0 / z, 1.0 - 1.0 / z], p.n_traj, row_seed)?;
        rows.push(vec![
            f(c as f64 * p.period),
            p.n_traj.to_string(),
            f(ep.mean_sigma),
            f(ep.ift_estimate),
            f(ep.p_sigma_negative),
        ]);
    }
    Ok(Table {
        header: &[
            "duration",
            "n_traj",
            "mean_sigma",
            "ift_estimate",
            "p_sigma_negative",
        ],
        rows,
    })
}

fn toolkit(p: &ToolkitParams, seed: u64) -> Res<Table> {
    let mut rows = Vec::new();
    let mut rng = rng_from_seed(seed);
    for &d in &p.dims {
        let mut worst_excess = f64::NEG_INFINITY;
        let mut min_slack = f64::INFINITY;
        for _ in 0..p.n_pairs {
            let n_kraus = rng.random_range(1..=4);
            let channel = random_channel(&mut rng, d, n_kraus);
            let (ra, rb) = (rng.random_range(1..=d), rng.random_range(1..=d));
            let a = random_state(&mut rng, d, ra);
            let b = random_state(&mut rng, d, rb);
            let (_, rep) = apply_channel(&channel, &a, &[(a.clone(), b.clone())])?;
            worst_excess = worst_excess.max(rep.worst_excess);
            let w = rng.random_range(0.0..0.18);
            match fannes_check(&a, &a.mix(&b, w)?, d)? {
                FannesOutcome::Evaluated { slack, .. } => min_slack = min_slack.min(slack),
                FannesOutcome::OutsideWindow { distance } => {
                    return Err(Error::InvalidState(format!(
                        "pair left the Fannes window at {distance}"
                    )))
                }
            }
        }
        rows.push(vec![
            "contraction".into(),
            d.to_string(),
            p.n_pairs.to_string(),
            f(worst_excess),
            (worst_excess <= 1e-10).to_string(),
        ]);
        rows.push(vec![
            "fannes".into(),
            d.to_string(),
            p.n_pairs.to_string(),
            f(min_slack),
            (min_slack >= -1e-12).to_string(),
        ]);
    }
    let (noise, recovery) = repetition_code(p.flip_probability)?;
    let states: Vec<DensityMatrix> = (0..p.n_pairs.min(50))
        .map(|_| random_repetition_state(&mut rng))
        .collect();
    let (dev, ok) = match correctable_isometry_check(&noise, &recovery, &states)? {
        IsometryReport::Preserved { max_deviation, .. } => (max_deviation, max_deviation <= 1e-8),
        IsometryReport::RecoveryFails { max_recovery_error } => (max_recovery_error, false),
        IsometryReport::DistanceChanged { max_deviation } => (max_deviation, false),
    };
    rows.push(vec![
        "isometry".into(),
        "8".into(),
        states.len().to_string(),
        f(dev),
        ok.to_string(),
    ]);
    let pure = DensityMatrix::from_diagonal(&[1.0, 0.0])?;
    let mixed = DensityMatrix::maximally_mixed(2)?;
    let bal = erasure_balance(&pure, &mixed);
    rows.push(vec![
        "erasure-boundary".into(),
        "2".into(),
        "1".into(),
        f(bal.delta_s - LN_2),
        format!("{:?}", bal.verdict).to_lowercase(),
    ]);
    Ok(Table {
        header: &["check", "dim", "n", "worst", "pass"],
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GapParams;

    #[test]
    fn single_spin_gap_row() {
        let p = Params::Gap(GapParams {
            model: ModelKind::IsingMeanField,
            sizes: vec![1],
            betas: vec![1.0],
            coupling: 0.0,
        });
        validate(&p).unwrap();
        let t = run(&p, 0).unwrap();
        assert_eq!(t.rows.len(), 1);
        let g: f64 = t.rows[0][3].parse().unwrap();
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oversized_gap_rejected_before_running() {
        let p = Params::Gap(GapParams {
            model: ModelKind::Ising1D,
            sizes: vec![30],
            betas: vec![1.0],
            coupling: 1.0,
        });
        let e = validate(&p).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }
}
