use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{flip_delta, LatticeModel, ModelKind, Sector, SpinConfiguration};

/// Rate constants shared by the Monte Carlo engine and the exact generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    /// Inverse temperature; `f64::INFINITY` freezes all uphill moves.
    pub beta: f64,
    /// Kitaev anyon hopping rate. Pair annihilation always has rate 1.
    pub move_rate: f64,
}

impl RateParams {
    pub fn new(beta: f64) -> Self {
        Self {
            beta,
            move_rate: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta.is_nan() || self.beta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if !(self.move_rate.is_finite() && self.move_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "move_rate must be positive, got {}",
                self.move_rate
            )));
        }
        Ok(())
    }

    /// Kitaev pair creation rate e^{−2β}.
    pub fn creation_rate(&self) -> f64 {
        (-2.0 * self.beta).exp()
    }
}

/// Glauber heat-bath rate 1/(1 + e^{βΔE}).
pub fn heat_bath_rate(beta: f64, delta_e: f64) -> f64 {
    if delta_e == 0.0 {
        return 0.5;
    }
    let x = beta * delta_e;
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Metropolis rate min(1, e^{−βΔE}).
pub fn metropolis_rate(beta: f64, delta_e: f64) -> f64 {
    if delta_e <= 0.0 {
        1.0
    } else {
        (-beta * delta_e).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventTag {
    CreatePair,
    AnnihilatePair,
    MoveAnyon,
    IsingFlip,
}

/// A possible spin flip with its current rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventClass {
    pub tag: EventTag,
    pub site: usize,
    pub rate: f64,
}

/// Kitaev event for an edge whose two adjacent plaquettes hold `occupied` anyons.
pub(crate) fn kitaev_event(rates: &RateParams, occupied: usize) -> (EventTag, f64) {
    match occupied {
        0 => (EventTag::CreatePair, rates.creation_rate()),
        1 => (EventTag::MoveAnyon, rates.move_rate),
        _ => (EventTag::AnnihilatePair, 1.0),
    }
}

/// Rate and kind of flipping `site` in `state`.
///
/// For the Kitaev model `state` is the plaquette-sector error frame and the
/// event is read off the occupancy of the two plaquettes adjacent to the edge.
pub fn classify_flip(
    model: &LatticeModel,
    rates: &RateParams,
    state: &SpinConfiguration,
    site: usize,
) -> Result<EventClass> {
    model.check_config(state)?;
    model.check_site(site)?;
    if model.kind() == ModelKind::Kitaev2D {
        let code = model.require_toric()?;
        let occupied = code
            .edge_neighbors(Sector::Plaquette, site)
            .iter()
            .filter(|&&p| {
                code.stabilizer_edges(Sector::Plaquette, p)
                    .iter()
                    .filter(|&&e| state.is_down(e))
                    .count()
                    % 2
                    == 1
            })
            .count();
        let (tag, rate) = kitaev_event(rates, occupied);
        Ok(EventClass { tag, site, rate })
    } else {
        let delta = flip_delta(model, state, site)?;
        Ok(EventClass {
            tag: EventTag::IsingFlip,
            site,
            rate: heat_bath_rate(rates.beta, delta),
        })
    }
}
