//! Spin models and their energies.
//!
//! Ising chains and the mean-field model carry one bit per spin. The Kitaev
//! model is tracked as an error frame relative to the all-up reference ground
//! state: a down spin on an edge marks a flipped edge. Energy is measured in
//! anyons, one unit per violated stabilizer.

mod spins;
mod toric;

use serde::{Deserialize, Serialize};

pub use spins::{EdgeSet, SpinConfiguration};
pub(crate) use toric::parity_sign;
pub use toric::{dual_sector, LogicalKind, LogicalOperator, Sector, Syndrome, ToricCode};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Periodic chain, H = −J Σ σ_j σ_{j+1}.
    #[serde(rename = "ising1d")]
    Ising1D,
    /// All-to-all, H = −(J/2N) (Σσ)².
    IsingMeanField,
    /// Periodic L×L square lattice with nearest-neighbour coupling.
    #[serde(rename = "ising2d")]
    Ising2D,
    /// Toric code on an L×L torus.
    #[serde(rename = "kitaev2d")]
    Kitaev2D,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ising1D => "ising1d",
            ModelKind::IsingMeanField => "ising-mean-field",
            ModelKind::Ising2D => "ising2d",
            ModelKind::Kitaev2D => "kitaev2d",
        }
    }

    pub fn is_ising(self) -> bool {
        !matches!(self, ModelKind::Kitaev2D)
    }
}

/// Model descriptor. `size` is N for the chain and mean-field models and the
/// linear size L for the square-lattice models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub size: usize,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
}

fn default_coupling() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn new(kind: ModelKind, size: usize) -> Self {
        Self {
            kind,
            size,
            coupling: 1.0,
        }
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeModel {
    spec: ModelSpec,
    n_sites: usize,
    toric: Option<ToricCode>,
}

/// Validates a descriptor and precomputes incidence tables.
pub fn build_model(spec: ModelSpec) -> Result<LatticeModel> {
    if !spec.coupling.is_finite() {
        return Err(Error::InvalidModel(format!(
            "coupling must be finite, got {}",
            spec.coupling
        )));
    }
    if spec.size == 0 {
        return Err(Error::InvalidModel("size must be positive".into()));
    }
    let (n_sites, toric) = match spec.kind {
        ModelKind::Ising1D => {
            if spec.size < 2 {
                return Err(Error::InvalidModel("ring needs N >= 2".into()));
            }
            (spec.size, None)
        }
        ModelKind::IsingMeanField => (spec.size, None),
        ModelKind::Ising2D => {
            if spec.size < 2 {
                return Err(Error::InvalidModel("square lattice needs L >= 2".into()));
            }
            (spec.size * spec.size, None)
        }
        ModelKind::Kitaev2D => {
            let code = ToricCode::new(spec.size)?;
            (code.n_edges(), Some(code))
        }
    };
    Ok(LatticeModel {
        spec,
        n_sites,
        toric,
    })
}

impl LatticeModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    pub fn coupling(&self) -> f64 {
        self.spec.coupling
    }

    /// N for chains, L for square lattices.
    pub fn size(&self) -> usize {
        self.spec.size
    }

    /// Number of spins (qubits for the Kitaev model).
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn toric(&self) -> Option<&ToricCode> {
        self.toric.as_ref()
    }

    pub fn require_toric(&self) -> Result<&ToricCode> {
        self.toric.as_ref().ok_or_else(|| {
            Error::Unsupported(format!("{} is not a toric code", self.kind().name()))
        })
    }

    pub(crate) fn check_config(&self, config: &SpinConfiguration) -> Result<()> {
        if config.len() != self.n_sites {
            return Err(Error::SizeMismatch {
                expected: self.n_sites,
                actual: config.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::IndexOutOfRange {
                index: site,
                len: self.n_sites,
            });
        }
        Ok(())
    }

    /// Square-lattice neighbours of site `i` (right, left, up, down).
    fn square_neighbors(&self, i: usize) -> [usize; 4] {
        let l = self.spec.size;
        let (x, y) = (i % l, i / l);
        [
            y * l + (x + 1) % l,
            y * l + (x + l - 1) % l,
            ((y + 1) % l) * l + x,
            ((y + l - 1) % l) * l + x,
        ]
    }

    /// σ_i times the sum of its neighbours, for the short-range Ising models.
    pub(crate) fn local_alignment(&self, config: &SpinConfiguration, i: usize) -> i32 {
        let s = config.get(i) as i32;
        match self.kind() {
            ModelKind::Ising1D => {
                let n = self.n_sites;
                s * (config.get((i + 1) % n) as i32 + config.get((i + n - 1) % n) as i32)
            }
            ModelKind::Ising2D => {
                s * self
                    .square_neighbors(i)
                    .iter()
                    .map(|&j| config.get(j) as i32)
                    .sum::<i32>()
            }
            _ => unreachable!("local alignment is only defined for short-range models"),
        }
    }
}

/// Total energy of `config`.
///
/// For the Kitaev model the down edges are an error pattern applied in both
/// sectors, and the energy is the total anyon count.
pub fn energy(model: &LatticeModel, config: &SpinConfiguration) -> Result<f64> {
    model.check_config(config)?;
    let j = model.coupling();
    Ok(match model.kind() {
        ModelKind::Ising1D => {
            let n = config.len();
            let bonds: i64 = (0..n)
                .map(|i| (config.get(i) * config.get((i + 1) % n)) as i64)
                .sum();
            -j * bonds as f64
        }
        ModelKind::IsingMeanField => {
            let m = config.magnetization() as f64;
            -(j / (2.0 * config.len() as f64)) * m * m
        }
        ModelKind::Ising2D => {
            let bonds: i64 = (0..config.len())
                .map(|i| {
                    let nb = model.square_neighbors(i);
                    (config.get(i) * (config.get(nb[0]) + config.get(nb[2]))) as i64
                })
                .sum();
            -j * bonds as f64
        }
        ModelKind::Kitaev2D => {
            let code = model.require_toric()?;
            let frame = EdgeSet::from_configuration(config);
            (code.syndrome(&frame, Sector::Star)?.len()
                + code.syndrome(&frame, Sector::Plaquette)?.len()) as f64
        }
    })
}

/// Anyon count of one sector of a Kitaev error frame.
pub fn sector_energy(model: &LatticeModel, frame: &EdgeSet, sector: Sector) -> Result<f64> {
    Ok(model.require_toric()?.syndrome(frame, sector)?.len() as f64)
}

/// Energy change from flipping spin `site` of an Ising configuration.
pub fn flip_delta(model: &LatticeModel, config: &SpinConfiguration, site: usize) -> Result<f64> {
    model.check_config(config)?;
    model.check_site(site)?;
    let j = model.coupling();
    Ok(match model.kind() {
        ModelKind::Ising1D | ModelKind::Ising2D => {
            2.0 * j * model.local_alignment(config, site) as f64
        }
        ModelKind::IsingMeanField => {
            let n = config.len() as f64;
            let s = config.get(site) as f64;
            let m = config.magnetization() as f64;
            (2.0 * j / n) * (s * m - 1.0)
        }
        ModelKind::Kitaev2D => {
            return Err(Error::Unsupported(
                "use the anyon occupancy of the two adjacent stabilizers".into(),
            ))
        }
    })
}

/// Energy cost of flipping a contiguous block of `k` spins out of the all-up state.
pub fn block_flip_delta(model: &LatticeModel, k: usize) -> Result<f64> {
    let n = model.n_sites();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "block length must satisfy 0 < k < N = {n}, got {k}"
        )));
    }
    let j = model.coupling();
    match model.kind() {
        // Two broken bonds at the domain walls, whatever the block length.
        ModelKind::Ising1D => Ok(4.0 * j),
        ModelKind::IsingMeanField => {
            let (k, n) = (k as f64, n as f64);
            // 2Jk − 2Jk²/N
            Ok(2.0 * j * k * (n - k) / n)
        }
        other => Err(Error::Unsupported(format!(
            "block flips are defined for ising1d and mean-field, not {}",
            other.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(kind: ModelKind, size: usize) -> LatticeModel {
        build_model(ModelSpec::new(kind, size)).unwrap()
    }

    #[test]
    fn kitaev_counts() {
        let m = model(ModelKind::Kitaev2D, 2);
        let code = m.toric().unwrap();
        assert_eq!(m.n_sites(), 8);
        assert_eq!(code.n_stabilizers(), 4);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(build_model(ModelSpec::new(ModelKind::Ising1D, 1)).is_err());
        assert!(build_model(ModelSpec::new(ModelKind::Kitaev2D, 1)).is_err());
        assert!(build_model(ModelSpec::new(ModelKind::IsingMeanField, 0)).is_err());
        assert!(build_model(ModelSpec::new(ModelKind::Ising2D, 1)).is_err());
    }

    #[test]
    fn ring_all_up() {
        let m = model(ModelKind::Ising1D, 4);
        assert_eq!(energy(&m, &SpinConfiguration::all_up(4)).unwrap(), -4.0);
    }

    #[test]
    fn kitaev_ground_state_is_zero() {
        let m = model(ModelKind::Kitaev2D, 3);
        assert_eq!(energy(&m, &SpinConfiguration::all_up(18)).unwrap(), 0.0);
    }

    #[test]
    fn mean_field_zero_magnetization() {
        let m = model(ModelKind::IsingMeanField, 4);
        let up = energy(&m, &SpinConfiguration::all_up(4)).unwrap();
        let half = energy(&m, &SpinConfiguration::from_signs(&[1, 1, -1, -1]).unwrap()).unwrap();
        assert!((half - up - 2.0).abs() < 1e-12);
    }

    #[test]
    fn size_mismatch() {
        let m = model(ModelKind::Ising1D, 4);
        assert_eq!(
            energy(&m, &SpinConfiguration::all_up(5)),
            Err(Error::SizeMismatch {
                expected: 4,
                actual: 5
            })
        );
    }

    #[test]
    fn block_flip_examples() {
        assert_eq!(
            block_flip_delta(&model(ModelKind::IsingMeanField, 4), 2).unwrap(),
            2.0
        );
        assert_eq!(
            block_flip_delta(&model(ModelKind::IsingMeanField, 8), 2).unwrap(),
            3.0
        );
        assert_eq!(
            block_flip_delta(&model(ModelKind::Ising1D, 9), 5).unwrap(),
            4.0
        );
        assert!(block_flip_delta(&model(ModelKind::Ising1D, 9), 9).is_err());
        assert!(block_flip_delta(&model(ModelKind::Ising1D, 9), 0).is_err());
        assert!(block_flip_delta(&model(ModelKind::Kitaev2D, 2), 1).is_err());
    }

    #[test]
    fn flip_delta_matches_energy_difference() {
        for (kind, size) in [
            (ModelKind::Ising1D, 7),
            (ModelKind::IsingMeanField, 7),
            (ModelKind::Ising2D, 3),
        ] {
            let m = build_model(ModelSpec::new(kind, size).with_coupling(0.7)).unwrap();
            let n = m.n_sites();
            for mask in (0..(1u64 << n)).step_by(37) {
                let c = SpinConfiguration::from_mask(mask, n);
                let e0 = energy(&m, &c).unwrap();
                for i in 0..n {
                    let mut d = c.clone();
                    d.flip(i);
                    let brute = energy(&m, &d).unwrap() - e0;
                    assert!((flip_delta(&m, &c, i).unwrap() - brute).abs() < 1e-12);
                }
            }
        }
    }
}
