//! Work and heat accounting for driven two-level protocols: the Szilard
//! extraction step, the memory-powered engine cycle, and trajectory entropy
//! production.
//!
//! Sign convention: `work_on_system > 0` when energy flows into the system;
//! extracted work is `-work_on_system`.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::ensemble::{rng_from_seed, run_ensemble, MeanEstimate};
use crate::error::{Error, Result};
use crate::exact::{
    integrate_master, Knot, MasterSolution, ProtocolSchedule, RateLaw, SegmentLedger,
};

/// Bath coupling used when a protocol does not specify one.
pub const DEFAULT_GAMMA: f64 = 1.0;
/// Relative tolerance of the first-law check.
pub const FIRST_LAW_TOL: f64 = 1e-8;
/// Entropy productions within this distance of zero count as zero.
pub const SIGMA_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkLedger {
    pub work_on_system: f64,
    pub heat_into_system: f64,
    pub internal_energy_change: f64,
    pub segments: Vec<SegmentLedger>,
    /// k_B T = 1/β, the energy unit of the run.
    pub kt: f64,
}

impl WorkLedger {
    pub fn from_solution(sol: &MasterSolution, beta: f64) -> Self {
        Self {
            work_on_system: sol.total_work(),
            heat_into_system: sol.total_heat(),
            internal_energy_change: sol.internal_energy_change(),
            segments: sol.segments.clone(),
            kt: 1.0 / beta,
        }
    }

    pub fn extracted(&self) -> f64 {
        -self.work_on_system
    }

    /// Largest violation of ΔU = W + Q over the segments and the total,
    /// relative to the energy that flowed through each. The total is scaled
    /// by the summed segment flows, since a closed cycle has ΔU = 0.
    pub fn first_law_residual(&self) -> f64 {
        let floor = 1e-12 * self.kt;
        let flow = |s: &SegmentLedger| s.delta_u.abs().max(s.work_on.abs()).max(s.heat_in.abs());
        let through: f64 = self.segments.iter().map(flow).sum();
        let total_scale = through
            .max(self.internal_energy_change.abs())
            .max(self.work_on_system.abs())
            .max(self.heat_into_system.abs())
            .max(floor);
        let total = (self.internal_energy_change - self.work_on_system - self.heat_into_system)
            .abs()
            / total_scale;
        self.segments
            .iter()
            .map(|s| (s.delta_u - s.work_on - s.heat_in).abs() / flow(s).max(floor))
            .fold(total, f64::max)
    }

    pub fn check_first_law(&self) -> Result<()> {
        let r = self.first_law_residual();
        if r > FIRST_LAW_TOL {
            return Err(Error::NonConvergence(format!(
                "first law violated, relative residual {r:e}"
            )));
        }
        Ok(())
    }

    /// Appends `other`, which must start where `self` ends.
    pub fn extend(&mut self, other: WorkLedger) {
        self.work_on_system += other.work_on_system;
        self.heat_into_system += other.heat_into_system;
        self.internal_energy_change += other.internal_energy_change;
        self.segments.extend(other.segments);
    }
}

/// Driving parameters of one Szilard extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SzilardProtocol {
    pub e_max: f64,
    pub ramp_time: f64,
    pub beta: f64,
    /// Probability that the particle sits in the level believed empty.
    pub p_init: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub rate_law: RateLaw,
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

impl SzilardProtocol {
    pub fn new(e_max: f64, ramp_time: f64, beta: f64, p_init: f64) -> Self {
        Self {
            e_max,
            ramp_time,
            beta,
            p_init,
            gamma: DEFAULT_GAMMA,
            rate_law: RateLaw::HeatBath,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_max.is_finite() && self.e_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "e_max must be > 0, got {}",
                self.e_max
            )));
        }
        if !(self.ramp_time.is_finite() && self.ramp_time >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ramp_time must be finite and >= 0, got {}",
                self.ramp_time
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite and > 0, got {}",
                self.beta
            )));
        }
        if !(0.0..=1.0).contains(&self.p_init) {
            return Err(Error::InvalidParameter(format!(
                "p_init must lie in [0, 1], got {}",
                self.p_init
            )));
        }
        Ok(())
    }

    /// Decoupled raise of level 1 to `e_max`, then a coupled linear ramp back
    /// to zero. A zero ramp time lowers the level suddenly without coupling.
    pub fn schedule(&self) -> ProtocolSchedule {
        let e = self.e_max;
        let t = self.ramp_time;
        let mut knots = vec![Knot::new(0.0, 0.0, 0.0), Knot::new(0.0, 0.0, e)];
        let coupled = if t > 0.0 {
            knots.push(Knot::new(t, 0.0, 0.0));
            vec![(0.0, t)]
        } else {
            knots.push(Knot::new(0.0, 0.0, 0.0));
            Vec::new()
        };
        ProtocolSchedule {
            knots,
            coupled,
            gamma: self.gamma,
            beta: self.beta,
            rate_law: self.rate_law,
        }
    }
}

pub fn szilard_run(e_max: f64, ramp_time: f64, beta: f64, p_init: f64) -> Result<WorkLedger> {
    szilard_run_with(&SzilardProtocol::new(e_max, ramp_time, beta, p_init))
}

pub fn szilard_run_with(protocol: &SzilardProtocol) -> Result<WorkLedger> {
    Ok(szilard_solution(protocol)?.0)
}

fn szilard_solution(protocol: &SzilardProtocol) -> Result<(WorkLedger, MasterSolution)> {
    protocol.validate()?;
    let sol = integrate_master(
        &protocol.schedule(),
        [1.0 - protocol.p_init, protocol.p_init],
    )?;
    let ledger = WorkLedger::from_solution(&sol, protocol.beta);
    ledger.check_first_law()?;
    Ok((ledger, sol))
}

/// kT (ln 2 − ln(1 + e^{−βE})): quasi-static extraction from a known state.
pub fn quasi_static_extraction(e_max: f64, beta: f64) -> f64 {
    (std::f64::consts::LN_2 - (-beta * e_max).exp().ln_1p()) / beta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementCost {
    /// Reading a stable memory costs no work.
    #[default]
    Stable,
    /// Reading a relaxing register costs kT ln 2.
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MemorySource {
    Ideal,
    Given,
    DerivedFromLifetime { t_cycle: f64, tau: f64 },
}

/// Probability that the memory reads the wrong value when it is swapped in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryModel {
    pub error_probability: f64,
    pub source: MemorySource,
}

impl MemoryModel {
    pub fn ideal() -> Self {
        Self {
            error_probability: 0.0,
            source: MemorySource::Ideal,
        }
    }

    pub fn with_error(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "error probability {p} outside [0, 1]"
            )));
        }
        Ok(Self {
            error_probability: p,
            source: MemorySource::Given,
        })
    }

    /// A symmetric bit flipping at total rate 2/τ: p = (1 − e^{−2t/τ}) / 2.
    pub fn from_lifetime(t_cycle: f64, tau: f64) -> Result<Self> {
        if !(t_cycle >= 0.0 && tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need t_cycle >= 0 and tau > 0, got {t_cycle}, {tau}"
            )));
        }
        Ok(Self {
            error_probability: -0.5 * (-2.0 * t_cycle / tau).exp_m1(),
            source: MemorySource::DerivedFromLifetime { t_cycle, tau },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleOutcome {
    /// Extracted work minus measurement cost.
    pub net_extracted: f64,
    pub measurement_work: f64,
    /// Net positive work from a single bath.
    pub violation: bool,
    pub ledger: WorkLedger,
}

/// One engine cycle: measurement of the memory, work-free swap at zero
/// level energies, Szilard extraction with the memory's error rate, and
/// relaxation back to the maximally mixed state at (0, 0) for free.
pub fn memory_engine_cycle(
    mem: &MemoryModel,
    e_max: f64,
    ramp_time: f64,
    beta: f64,
    cost: MeasurementCost,
) -> Result<CycleOutcome> {
    let protocol = SzilardProtocol::new(e_max, ramp_time, beta, mem.error_probability);
    memory_engine_cycle_with(&protocol, cost)
}

pub fn memory_engine_cycle_with(
    protocol: &SzilardProtocol,
    cost: MeasurementCost,
) -> Result<CycleOutcome> {
    let (ledger, _) = szilard_solution(protocol)?;
    let measurement_work = match cost {
        MeasurementCost::Stable => 0.0,
        MeasurementCost::Unstable => std::f64::consts::LN_2 / protocol.beta,
    };
    let net_extracted = ledger.extracted() - measurement_work;
    Ok(CycleOutcome {
        net_extracted,
        measurement_work,
        violation: net_extracted > 0.0,
        ledger,
    })
}

/// Bisection for a sign change of `f` on [lo, hi].
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        return Err(Error::NonConvergence(format!(
            "no sign change on [{lo}, {hi}]: f = {f_lo}, {f_hi}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Error probability at which the cycle's net work changes sign.
pub fn cycle_zero_crossing(
    protocol: &SzilardProtocol,
    cost: MeasurementCost,
    tol: f64,
) -> Result<f64> {
    bisect(
        |p| {
            Ok(memory_engine_cycle_with(
                &SzilardProtocol {
                    p_init: p,
                    ..*protocol
                },
                cost,
            )?
            .net_extracted)
        },
        0.0,
        0.5,
        tol,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyProduction {
    pub samples: Vec<f64>,
    pub mean_sigma: f64,
    pub stderr_sigma: f64,
    /// Sample mean of e^{−σ}.
    pub ift_estimate: f64,
    pub ift_stderr: f64,
    pub p_sigma_negative: f64,
}

/// One jump trajectory of the driven two-level system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoLevelPath {
    pub initial: usize,
    /// (time, state entered) for every transition.
    pub jumps: Vec<(f64, usize)>,
    /// Σ ln(k_forward / k_backward) over the jumps.
    pub log_rate_ratio: f64,
}

impl TwoLevelPath {
    pub fn state_at(&self, t: f64) -> usize {
        self.jumps
            .iter()
            .take_while(|j| j.0 <= t)
            .last()
            .map_or(self.initial, |j| j.1)
    }

    pub fn final_state(&self) -> usize {
        self.jumps.last().map_or(self.initial, |j| j.1)
    }
}

/// Samples jump trajectories by thinning at the rate bound γ.
pub fn sample_two_level_paths(
    schedule: &ProtocolSchedule,
    p_init: [f64; 2],
    n_traj: usize,
    seed: u64,
) -> Result<Vec<TwoLevelPath>> {
    schedule.validate()?;
    if p_init.iter().any(|&p| !(p >= 0.0)) || (p_init[0] + p_init[1] - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!(
            "{p_init:?} is not a probability vector"
        )));
    }
    let intervals: Vec<(f64, f64)> = schedule
        .coupled
        .iter()
        .copied()
        .filter(|(a, b)| b > a)
        .collect();
    let bound = schedule.gamma;
    let paths = run_ensemble(n_traj, seed, |_, s| -> Result<TwoLevelPath> {
        let mut rng = rng_from_seed(s);
        let initial = usize::from(rng.random::<f64>() >= p_init[0]);
        let mut path = TwoLevelPath {
            initial,
            jumps: Vec::new(),
            log_rate_ratio: 0.0,
        };
        let mut x = initial;
        for &(a, b) in &intervals {
            let mut t = a;
            loop {
                let wait: f64 = rng.sample(Exp1);
                t += wait / bound;
                if t > b {
                    break;
                }
                let (k01, k10) = schedule.rates(schedule.energies_at(t));
                let (out, back) = if x == 0 { (k01, k10) } else { (k10, k01) };
                if rng.random::<f64>() * bound < out {
                    if back <= 0.0 {
                        return Err(Error::ZeroBackwardRate(t));
                    }
                    path.log_rate_ratio += (out / back).ln();
                    x ^= 1;
                    path.jumps.push((t, x));
                }
            }
        }
        Ok(path)
    });
    paths.into_iter().collect()
}

/// Total entropy production of sampled trajectories, with the boundary term
/// taken from the master-equation final populations.
pub fn entropy_production_samples(
    schedule: &ProtocolSchedule,
    p_init: [f64; 2],
    n_traj: usize,
    seed: u64,
) -> Result<EntropyProduction> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter("n_traj must be >= 1".into()));
    }
    let paths = sample_two_level_paths(schedule, p_init, n_traj, seed)?;
    let p_fin = integrate_master(schedule, p_init)?.final_populations();
    let samples: Vec<f64> = paths
        .iter()
        .map(|p| p.log_rate_ratio + p_init[p.initial].ln() - p_fin[p.final_state()].ln())
        .collect();
    let sigma = MeanEstimate::from_samples(&samples);
    let weights: Vec<f64> = samples.iter().map(|s| (-s).exp()).collect();
    let ift = MeanEstimate::from_samples(&weights);
    let negative = samples.iter().filter(|&&s| s < -SIGMA_ZERO_TOL).count();
    Ok(EntropyProduction {
        mean_sigma: sigma.mean,
        stderr_sigma: sigma.stderr,
        ift_estimate: ift.mean,
        ift_stderr: ift.stderr,
        p_sigma_negative: negative as f64 / samples.len() as f64,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;

    #[test]
    fn quasi_static_szilard_matches_free_energy() {
        let ledger = szilard_run(5.0, 400.0, 1.0, 0.0).unwrap();
        let expect = 2f64.ln() - (1.0 + (-5f64).exp()).ln();
        assert!((expect - 0.68645).abs() < 1e-4);
        assert!(
            (ledger.extracted() - expect).abs() < 0.01 * expect,
            "{}",
            ledger.extracted()
        );
        assert!(ledger.first_law_residual() < FIRST_LAW_TOL);
    }

    #[test]
    fn sudden_ramp_does_no_work() {
        let ledger = szilard_run(5.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(ledger.extracted(), 0.0);
        assert_eq!(ledger.heat_into_system, 0.0);
        // With an error, the raise costs p·E and the drop returns it.
        let ledger = szilard_run(5.0, 0.0, 1.0, 0.3).unwrap();
        assert!(ledger.extracted().abs() < 1e-15);
    }

    #[test]
    fn szilard_first_law_per_segment() {
        for (t, p) in [(0.5, 0.0), (3.0, 0.2), (50.0, 0.5)] {
            let ledger = szilard_run(3.0, t, 0.7, p).unwrap();
            assert!(ledger.first_law_residual() < FIRST_LAW_TOL, "{t} {p}");
            assert_eq!(ledger.segments.len(), 2);
            assert!((ledger.segments[0].work_on - 3.0 * p).abs() < 1e-15);
        }
    }

    #[test]
    fn szilard_rejects_bad_input() {
        assert!(szilard_run(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(szilard_run(1.0, -1.0, 1.0, 0.0).is_err());
        assert!(szilard_run(1.0, 1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn memory_model_forms() {
        assert_eq!(MemoryModel::ideal().error_probability, 0.0);
        let m = MemoryModel::from_lifetime(1.0, 2.0).unwrap();
        assert!((m.error_probability - 0.5 * (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!(
            MemoryModel::from_lifetime(1e9, 1.0)
                .unwrap()
                .error_probability
                <= 0.5
        );
        assert!(MemoryModel::with_error(-0.1).is_err());
    }

    #[test]
    fn cycle_examples() {
        let ideal = memory_engine_cycle(
            &MemoryModel::ideal(),
            5.0,
            400.0,
            1.0,
            MeasurementCost::Stable,
        )
        .unwrap();
        assert!(ideal.violation);
        assert!((ideal.net_extracted - 0.68645).abs() < 0.01);
        let random = memory_engine_cycle(
            &MemoryModel::with_error(0.5).unwrap(),
            5.0,
            400.0,
            1.0,
            MeasurementCost::Stable,
        )
        .unwrap();
        assert!(random.net_extracted <= 0.0 && !random.violation);
        let paid = memory_engine_cycle(
            &MemoryModel::ideal(),
            5.0,
            400.0,
            1.0,
            MeasurementCost::Unstable,
        )
        .unwrap();
        assert!(paid.net_extracted <= 0.0 && !paid.violation);
    }

    #[test]
    fn bisection_finds_root() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
        assert!(bisect(|x| Ok(x * x + 1.0), 0.0, 1.0, 1e-6).is_err());
    }

    /// ⟨e^{−σ}⟩ by exact summation over paths: the path weight with each jump
    /// multiplied by k_back/k_forward is the tilted generator whose
    /// off-diagonal entries are the reverse rates.
    fn exact_ift(segments: &[((f64, f64), f64)], p_init: [f64; 2]) -> (f64, [f64; 2]) {
        let mut tilted = Matrix2::identity();
        let mut evolve = Matrix2::identity();
        for &((k01, k10), dt) in segments {
            let gen = Matrix2::new(-k01, k10, k01, -k10);
            let tilt = Matrix2::new(-k01, k01, k10, -k10);
            tilted = (tilt * dt).exp() * tilted;
            evolve = (gen * dt).exp() * evolve;
        }
        let p_fin = evolve * nalgebra::Vector2::new(p_init[0], p_init[1]);
        let mut total = 0.0;
        for xt in 0..2 {
            for x0 in 0..2 {
                total += p_fin[xt] * tilted[(xt, x0)];
            }
        }
        (total, [p_fin[0], p_fin[1]])
    }

    fn two_segment_schedule() -> ProtocolSchedule {
        ProtocolSchedule {
            knots: vec![
                Knot::new(0.0, 0.0, 0.5),
                Knot::new(1.0, 0.0, 0.5),
                Knot::new(1.0, 0.0, 2.5),
                Knot::new(2.0, 0.0, 2.5),
            ],
            coupled: vec![(0.0, 1.0), (1.0, 2.0)],
            gamma: 1.0,
            beta: 1.0,
            rate_law: RateLaw::HeatBath,
        }
    }

    #[test]
    fn integral_fluctuation_theorem_two_segments() {
        let sched = two_segment_schedule();
        let p_init = [0.8, 0.2];
        let segs = [
            (sched.rates([0.0, 0.5]), 1.0),
            (sched.rates([0.0, 2.5]), 1.0),
        ];
        let (oracle, p_fin) = exact_ift(&segs, p_init);
        assert!((oracle - 1.0).abs() < 1e-12, "{oracle}");
        let ode = integrate_master(&sched, p_init)
            .unwrap()
            .final_populations();
        assert!((ode[1] - p_fin[1]).abs() < 1e-7);

        let ep = entropy_production_samples(&sched, p_init, 40_000, 17).unwrap();
        assert!(
            (ep.ift_estimate - oracle).abs() < 3.0 * ep.ift_stderr,
            "{} ± {}",
            ep.ift_estimate,
            ep.ift_stderr
        );
        assert!(ep.mean_sigma > 0.0);
    }

    #[test]
    fn equilibrium_has_no_entropy_production() {
        let sched = ProtocolSchedule::constant(0.0, 1.0, 5.0, 1.0, 1.0);
        let z = 1.0 + (-1f64).exp();
        let gibbs = [1.0 / z, (-1f64).exp() / z];
        let ep = entropy_production_samples(&sched, gibbs, 5000, 3).unwrap();
        assert!(ep.mean_sigma.abs() <= 3.0 * ep.stderr_sigma.max(1e-9));
        assert_eq!(ep.p_sigma_negative, 0.0);
    }

    #[test]
    fn entropy_production_is_reproducible() {
        let sched = ProtocolSchedule::periodic_triangle(2.0, 2.0, 1, 1.0, 1.0);
        let a = entropy_production_samples(&sched, [0.5, 0.5], 200, 99).unwrap();
        let b = entropy_production_samples(&sched, [0.5, 0.5], 200, 99).unwrap();
        assert_eq!(a, b);
    }
}
