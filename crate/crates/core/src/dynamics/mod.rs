//! Continuous-time thermal dynamics of the lattice models.
//!
//! Ising models use heat-bath (Glauber) single-spin-flip rates. The Kitaev
//! model evolves its plaquette-sector error frame: creating an anyon pair costs
//! e^{−2β}, annihilation has rate 1 and hopping has rate `move_rate` (1 by
//! default). The star sector is the lattice dual and behaves identically.

mod kmc;
mod lifetime;
mod rates;

use serde::{Deserialize, Serialize};

pub use lifetime::{
    first_passage, first_passage_from, kitaev_memory_lifetime, magnetization_reversed,
    LifetimeEstimate, Readout,
};
pub use rates::{classify_flip, heat_bath_rate, metropolis_rate, EventClass, EventTag, RateParams};

pub(crate) use kmc::Kmc;

use crate::ensemble::rng_from_seed;
use crate::error::{Error, Result};
use crate::lattice::{EdgeSet, LatticeModel, ModelKind, SpinConfiguration};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationParams {
    pub beta: f64,
    pub t_max: f64,
    #[serde(default = "one")]
    pub n_traj: usize,
    /// Sampling interval for probes and dressed readouts; `None` observes
    /// after every event.
    #[serde(default)]
    pub probe_cadence: Option<f64>,
    #[serde(default = "unit_rate")]
    pub move_rate: f64,
}

fn one() -> usize {
    1
}

fn unit_rate() -> f64 {
    1.0
}

impl SimulationParams {
    pub fn new(beta: f64, t_max: f64, n_traj: usize) -> Self {
        Self {
            beta,
            t_max,
            n_traj,
            probe_cadence: None,
            move_rate: 1.0,
        }
    }

    pub fn with_probe_cadence(mut self, cadence: f64) -> Self {
        self.probe_cadence = Some(cadence);
        self
    }

    pub fn rates(&self) -> RateParams {
        RateParams {
            beta: self.beta,
            move_rate: self.move_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rates().validate()?;
        if self.t_max.is_nan() || self.t_max <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "t_max must be > 0, got {}",
                self.t_max
            )));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidParameter("n_traj must be >= 1".into()));
        }
        if let Some(c) = self.probe_cadence {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "probe_cadence must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub class: EventClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub time: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FinalState {
    Spins(SpinConfiguration),
    Errors(EdgeSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub events: Vec<Event>,
    /// Magnetization (Ising) or anyon count (Kitaev) at each probe time.
    pub probes: Vec<Probe>,
    pub final_state: FinalState,
}

/// Exact Gillespie trajectory from the all-up state (empty error frame).
pub fn simulate_trajectory(
    model: &LatticeModel,
    params: &SimulationParams,
    seed: u64,
) -> Result<TrajectoryRecord> {
    simulate_trajectory_from(
        model,
        params,
        SpinConfiguration::all_up(model.n_sites()),
        seed,
    )
}

/// As [`simulate_trajectory`] from a given state. With an infinite `t_max`
/// the run only ends by reaching an absorbing state, which is an error.
pub fn simulate_trajectory_from(
    model: &LatticeModel,
    params: &SimulationParams,
    initial: SpinConfiguration,
    seed: u64,
) -> Result<TrajectoryRecord> {
    params.validate()?;
    let mut kmc = Kmc::new(model, params.rates(), initial)?;
    let mut rng = rng_from_seed(seed);
    let mut events = Vec::new();
    let mut probes = Vec::new();
    let mut next_probe = 0usize;
    let probe_time = |k: usize| params.probe_cadence.map(|c| k as f64 * c);
    loop {
        let jump = kmc.propose(&mut rng);
        if jump.is_none() && params.t_max.is_infinite() {
            return Err(Error::AbsorbingState);
        }
        let horizon = jump
            .as_ref()
            .map_or(f64::INFINITY, |j| j.time)
            .min(params.t_max);
        while let Some(t) = probe_time(next_probe) {
            if t > horizon || (t == horizon && jump.as_ref().is_some_and(|j| j.time == t)) {
                break;
            }
            probes.push(Probe {
                time: t,
                value: kmc.observable(),
            });
            next_probe += 1;
        }
        match jump {
            Some(j) if j.time <= params.t_max => {
                events.push(Event {
                    time: j.time,
                    class: kmc.event_class(&j),
                });
                kmc.apply(&j);
            }
            _ => break,
        }
    }
    let config = kmc.config().clone();
    let final_state = match model.kind() {
        ModelKind::Kitaev2D => FinalState::Errors(EdgeSet::from_configuration(&config)),
        _ => FinalState::Spins(config),
    };
    Ok(TrajectoryRecord {
        seed,
        events,
        probes,
        final_state,
    })
}
