//! Rejection-free kinetic Monte Carlo.
//!
//! Sites are bucketed by rate class. A class has one rate shared by all its
//! members, so picking an event costs O(#classes) and a flip only reclassifies
//! the handful of sites whose local environment changed.

use rand::Rng;
use rand_distr::Exp1;

use super::rates::{heat_bath_rate, kitaev_event, EventClass, EventTag, RateParams};
use crate::error::Result;
use crate::lattice::{EdgeSet, LatticeModel, ModelKind, Sector, SpinConfiguration};

/// Per-class site buckets with O(1) membership updates.
#[derive(Debug, Clone)]
struct ClassIndex {
    buckets: Vec<Vec<u32>>,
    position: Vec<u32>,
    class_of: Vec<u8>,
}

impl ClassIndex {
    fn new(n_classes: usize, classes: impl ExactSizeIterator<Item = usize>) -> Self {
        let mut index = Self {
            buckets: vec![Vec::new(); n_classes],
            position: Vec::with_capacity(classes.len()),
            class_of: Vec::with_capacity(classes.len()),
        };
        for (site, c) in classes.enumerate() {
            index.position.push(index.buckets[c].len() as u32);
            index.class_of.push(c as u8);
            index.buckets[c].push(site as u32);
        }
        index
    }

    fn reassign(&mut self, site: usize, class: usize) {
        let old = self.class_of[site] as usize;
        if old == class {
            return;
        }
        let pos = self.position[site] as usize;
        let bucket = &mut self.buckets[old];
        let last = *bucket.last().expect("site is in its bucket");
        bucket.swap_remove(pos);
        if last as usize != site {
            self.position[last as usize] = pos as u32;
        }
        self.position[site] = self.buckets[class].len() as u32;
        self.buckets[class].push(site as u32);
        self.class_of[site] = class as u8;
    }
}

/// Mutable state of a single trajectory.
#[derive(Debug, Clone)]
pub(crate) struct Kmc<'m> {
    model: &'m LatticeModel,
    rates: RateParams,
    config: SpinConfiguration,
    index: ClassIndex,
    /// Plaquette anyon occupancy (Kitaev only).
    occupancy: Vec<bool>,
    anyons: usize,
    magnetization: i64,
    time: f64,
}

pub(crate) struct Jump {
    pub time: f64,
    pub site: usize,
    pub class: usize,
}

impl<'m> Kmc<'m> {
    pub fn new(
        model: &'m LatticeModel,
        rates: RateParams,
        initial: SpinConfiguration,
    ) -> Result<Self> {
        rates.validate()?;
        model.check_config(&initial)?;
        let mut occupancy = Vec::new();
        if let Some(code) = model.toric() {
            occupancy = vec![false; code.n_stabilizers()];
            let syn = code.syndrome(&EdgeSet::from_configuration(&initial), Sector::Plaquette)?;
            for p in syn.anyons {
                occupancy[p] = true;
            }
        }
        let anyons = occupancy.iter().filter(|&&o| o).count();
        let magnetization = initial.magnetization();
        let mut kmc = Self {
            model,
            rates,
            config: initial,
            index: ClassIndex::new(0, std::iter::empty()),
            occupancy,
            anyons,
            magnetization,
            time: 0.0,
        };
        let classes: Vec<usize> = (0..model.n_sites()).map(|s| kmc.class_key(s)).collect();
        kmc.index = ClassIndex::new(kmc.n_classes(), classes.into_iter());
        Ok(kmc)
    }

    fn n_classes(&self) -> usize {
        match self.model.kind() {
            ModelKind::Ising1D => 3,
            ModelKind::Ising2D => 5,
            ModelKind::IsingMeanField => 2,
            ModelKind::Kitaev2D => 3,
        }
    }

    fn class_key(&self, site: usize) -> usize {
        match self.model.kind() {
            ModelKind::Ising1D => {
                ((self.model.local_alignment(&self.config, site) + 2) / 2) as usize
            }
            ModelKind::Ising2D => {
                ((self.model.local_alignment(&self.config, site) + 4) / 2) as usize
            }
            ModelKind::IsingMeanField => self.config.is_down(site) as usize,
            ModelKind::Kitaev2D => {
                let code = self.model.toric().expect("kitaev model has a toric code");
                code.edge_neighbors(Sector::Plaquette, site)
                    .iter()
                    .filter(|&&p| self.occupancy[p])
                    .count()
            }
        }
    }

    fn class_rate(&self, class: usize) -> f64 {
        let j = self.model.coupling();
        let beta = self.rates.beta;
        match self.model.kind() {
            ModelKind::Ising1D => heat_bath_rate(beta, 2.0 * j * (2 * class as i32 - 2) as f64),
            ModelKind::Ising2D => heat_bath_rate(beta, 2.0 * j * (2 * class as i32 - 4) as f64),
            ModelKind::IsingMeanField => {
                let n = self.config.len() as f64;
                let s = if class == 0 { 1.0 } else { -1.0 };
                heat_bath_rate(beta, (2.0 * j / n) * (s * self.magnetization as f64 - 1.0))
            }
            ModelKind::Kitaev2D => kitaev_event(&self.rates, class).1,
        }
    }

    fn class_tag(&self, class: usize) -> EventTag {
        match self.model.kind() {
            ModelKind::Kitaev2D => kitaev_event(&self.rates, class).0,
            _ => EventTag::IsingFlip,
        }
    }

    pub fn event_class(&self, jump: &Jump) -> EventClass {
        EventClass {
            tag: self.class_tag(jump.class),
            site: jump.site,
            rate: self.class_rate(jump.class),
        }
    }

    #[cfg(test)]
    pub fn total_rate(&self) -> f64 {
        self.index
            .buckets
            .iter()
            .enumerate()
            .map(|(c, b)| {
                if b.is_empty() {
                    0.0
                } else {
                    self.class_rate(c) * b.len() as f64
                }
            })
            .sum()
    }

    /// Samples the next jump without applying it. `None` if no move has a
    /// positive rate.
    pub fn propose<R: Rng>(&self, rng: &mut R) -> Option<Jump> {
        let weights: Vec<f64> = self
            .index
            .buckets
            .iter()
            .enumerate()
            .map(|(c, b)| {
                if b.is_empty() {
                    0.0
                } else {
                    self.class_rate(c) * b.len() as f64
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let wait: f64 = rng.sample::<f64, _>(Exp1) / total;
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut class = weights
            .iter()
            .rposition(|&w| w > 0.0)
            .expect("positive total");
        for (c, &w) in weights.iter().enumerate() {
            acc += w;
            if w > 0.0 && target < acc {
                class = c;
                break;
            }
        }
        let bucket = &self.index.buckets[class];
        let site = bucket[rng.random_range(0..bucket.len())] as usize;
        Some(Jump {
            time: self.time + wait,
            site,
            class,
        })
    }

    /// Applies a proposed jump, advancing the clock.
    pub fn apply(&mut self, jump: &Jump) {
        self.time = jump.time;
        self.flip(jump.site);
    }

    fn flip(&mut self, site: usize) {
        let was_down = self.config.is_down(site);
        self.config.flip(site);
        self.magnetization += if was_down { 2 } else { -2 };
        let model = self.model;
        match model.kind() {
            ModelKind::Ising1D => {
                let n = model.n_sites();
                for s in [(site + n - 1) % n, site, (site + 1) % n] {
                    self.reclassify(s);
                }
            }
            ModelKind::Ising2D => {
                let l = model.size();
                let (x, y) = (site % l, site / l);
                for s in [
                    site,
                    y * l + (x + 1) % l,
                    y * l + (x + l - 1) % l,
                    ((y + 1) % l) * l + x,
                    ((y + l - 1) % l) * l + x,
                ] {
                    self.reclassify(s);
                }
            }
            ModelKind::IsingMeanField => self.reclassify(site),
            ModelKind::Kitaev2D => {
                let code = model.toric().expect("kitaev model has a toric code");
                for p in code.edge_neighbors(Sector::Plaquette, site) {
                    self.occupancy[p] = !self.occupancy[p];
                    if self.occupancy[p] {
                        self.anyons += 1;
                    } else {
                        self.anyons -= 1;
                    }
                }
                for p in code.edge_neighbors(Sector::Plaquette, site) {
                    for &e in code.stabilizer_edges(Sector::Plaquette, p) {
                        self.reclassify(e);
                    }
                }
            }
        }
    }

    fn reclassify(&mut self, site: usize) {
        let c = self.class_key(site);
        self.index.reassign(site, c);
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn config(&self) -> &SpinConfiguration {
        &self.config
    }

    #[cfg(test)]
    pub fn magnetization(&self) -> i64 {
        self.magnetization
    }

    #[cfg(test)]
    pub fn anyon_count(&self) -> usize {
        self.anyons
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    /// Scalar probe: magnetization for Ising models, anyon count for Kitaev.
    pub fn observable(&self) -> f64 {
        match self.model.kind() {
            ModelKind::Kitaev2D => self.anyons as f64,
            _ => self.magnetization as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rates::classify_flip;
    use crate::ensemble::rng_from_seed;
    use crate::lattice::{build_model, ModelSpec};

    /// After every jump, the cached class rates must match a from-scratch classification.
    fn check_consistency(kind: ModelKind, size: usize, beta: f64) {
        let model = build_model(ModelSpec::new(kind, size).with_coupling(0.9)).unwrap();
        let rates = RateParams::new(beta);
        let mut kmc = Kmc::new(&model, rates, SpinConfiguration::all_up(model.n_sites())).unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..400 {
            let Some(jump) = kmc.propose(&mut rng) else {
                break;
            };
            kmc.apply(&jump);
            let mut total = 0.0;
            for s in 0..model.n_sites() {
                let ev = classify_flip(&model, &rates, kmc.config(), s).unwrap();
                let c = kmc.index.class_of[s] as usize;
                assert!(
                    (kmc.class_rate(c) - ev.rate).abs() < 1e-12,
                    "{kind:?} site {s}"
                );
                assert_eq!(kmc.class_tag(c), ev.tag);
                total += ev.rate;
            }
            assert!((kmc.total_rate() - total).abs() < 1e-9 * total.max(1.0));
            if kind == ModelKind::Kitaev2D {
                assert_eq!(kmc.anyon_count() % 2, 0);
            } else {
                assert_eq!(kmc.magnetization(), kmc.config().magnetization());
            }
        }
    }

    #[test]
    fn incremental_index_matches_full_classification() {
        check_consistency(ModelKind::Ising1D, 9, 0.7);
        check_consistency(ModelKind::Ising2D, 4, 0.4);
        check_consistency(ModelKind::IsingMeanField, 11, 0.8);
        check_consistency(ModelKind::Kitaev2D, 3, 0.5);
        check_consistency(ModelKind::Kitaev2D, 5, 1.0);
    }
}
