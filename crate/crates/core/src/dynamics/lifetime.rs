use serde::{Deserialize, Serialize};

use super::{Kmc, SimulationParams};
use crate::decoder::Decoder;
use crate::ensemble::{rng_from_seed, run_ensemble, MeanEstimate};
use crate::error::{Error, Result};
use crate::lattice::{
    build_model, EdgeSet, LatticeModel, LogicalKind, ModelKind, ModelSpec, Sector,
    SpinConfiguration, Syndrome,
};

/// Ensemble statistics of first-failure times. Censored trajectories enter
/// the mean at `t_max`, so with censoring the mean is a lower bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifetimeEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub censored: usize,
    pub samples: Vec<f64>,
}

impl LifetimeEstimate {
    fn from_outcomes(outcomes: Vec<(f64, bool)>) -> Self {
        let censored = outcomes.iter().filter(|o| o.1).count();
        let samples: Vec<f64> = outcomes.into_iter().map(|o| o.0).collect();
        let est = MeanEstimate::from_samples(&samples);
        Self {
            mean: est.mean,
            stderr: est.stderr,
            n: est.n,
            censored,
            samples,
        }
    }
}

/// Classical memory failure: the magnetization has lost its initial sign.
pub fn magnetization_reversed(config: &SpinConfiguration) -> bool {
    config.magnetization() <= 0
}

/// Mean first time `predicate` holds, starting from all up.
pub fn first_passage<P>(
    model: &LatticeModel,
    params: &SimulationParams,
    predicate: P,
    master_seed: u64,
) -> Result<LifetimeEstimate>
where
    P: Fn(&SpinConfiguration) -> bool + Sync,
{
    first_passage_from(
        model,
        params,
        &SpinConfiguration::all_up(model.n_sites()),
        predicate,
        master_seed,
    )
}

pub fn first_passage_from<P>(
    model: &LatticeModel,
    params: &SimulationParams,
    initial: &SpinConfiguration,
    predicate: P,
    master_seed: u64,
) -> Result<LifetimeEstimate>
where
    P: Fn(&SpinConfiguration) -> bool + Sync,
{
    params.validate()?;
    model.check_config(initial)?;
    if predicate(initial) {
        return Err(Error::PredicateHoldsInitially);
    }
    let outcomes = run_ensemble(params.n_traj, master_seed, |_, seed| {
        let mut kmc = Kmc::new(model, params.rates(), initial.clone())?;
        let mut rng = rng_from_seed(seed);
        loop {
            match kmc.propose(&mut rng) {
                Some(jump) if jump.time <= params.t_max => {
                    kmc.apply(&jump);
                    if predicate(kmc.config()) {
                        return Ok((jump.time, false));
                    }
                }
                None if params.t_max.is_infinite() => return Err(Error::AbsorbingState),
                _ => return Ok((params.t_max, true)),
            }
        }
    });
    Ok(LifetimeEstimate::from_outcomes(
        outcomes.into_iter().collect::<Result<_>>()?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Readout {
    /// Raw loop parity.
    Bare,
    /// Loop parity times the decoder's correction sign.
    Dressed,
}

/// First time the tracked Z logical (winding along x) reads −1, from the
/// code space, with the plaquette-sector error frame as the state.
pub fn kitaev_memory_lifetime(
    l: usize,
    params: &SimulationParams,
    decoder: &dyn Decoder,
    readout: Readout,
    master_seed: u64,
) -> Result<LifetimeEstimate> {
    params.validate()?;
    let model = build_model(ModelSpec::new(ModelKind::Kitaev2D, l))?;
    let code = model.require_toric()?;
    let op = code.logical(LogicalKind::ZType, 1)?;

    let failed = |kmc: &Kmc, trajectory: usize| -> Result<bool> {
        let frame = kmc.config();
        let bare_flips = op.support.iter().filter(|&&e| frame.is_down(e)).count();
        match readout {
            Readout::Bare => Ok(bare_flips % 2 == 1),
            Readout::Dressed => {
                let syndrome = Syndrome {
                    sector: Sector::Plaquette,
                    anyons: kmc
                        .occupancy()
                        .iter()
                        .enumerate()
                        .filter_map(|(p, &o)| o.then_some(p))
                        .collect(),
                };
                let correction =
                    decoder
                        .decode(code, &syndrome)
                        .map_err(|e| Error::DecoderFailure {
                            trajectory,
                            time: kmc.time(),
                            source: Box::new(e),
                        })?;
                Ok((bare_flips + correction.edges.overlap(&op.support)) % 2 == 1)
            }
        }
    };

    let outcomes = run_ensemble(
        params.n_traj,
        master_seed,
        |index, seed| -> Result<(f64, bool)> {
            let mut kmc = Kmc::new(
                &model,
                params.rates(),
                EdgeSet::empty(code.n_edges()).to_configuration(),
            )?;
            let mut rng = rng_from_seed(seed);
            let mut next_probe = 1u64;
            loop {
                let jump = kmc.propose(&mut rng);
                let horizon = jump
                    .as_ref()
                    .map_or(f64::INFINITY, |j| j.time)
                    .min(params.t_max);
                if let Some(c) = params.probe_cadence {
                    if horizon.is_infinite() {
                        return Err(Error::AbsorbingState);
                    }
                    // The state is constant until the next jump: one readout covers
                    // every probe before it.
                    let t = next_probe as f64 * c;
                    if t < horizon
                        || (t <= params.t_max
                            && jump.as_ref().is_none_or(|j| j.time > params.t_max))
                    {
                        if failed(&kmc, index)? {
                            return Ok((t, false));
                        }
                        next_probe = (horizon / c).floor() as u64 + 1;
                        while (next_probe as f64) * c < horizon {
                            next_probe += 1;
                        }
                    }
                }
                match jump {
                    Some(j) if j.time <= params.t_max => {
                        kmc.apply(&j);
                        if params.probe_cadence.is_none() && failed(&kmc, index)? {
                            return Ok((j.time, false));
                        }
                    }
                    None if params.t_max.is_infinite() => return Err(Error::AbsorbingState),
                    _ => return Ok((params.t_max, true)),
                }
            }
        },
    );
    Ok(LifetimeEstimate::from_outcomes(
        outcomes.into_iter().collect::<Result<_>>()?,
    ))
}
