//! Exact numerics on enumerable state spaces: Markov generators, their
//! stationary vectors and spectral gaps, and the driven two-level master
//! equation.

mod lanczos;
mod master;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub use master::{
    integrate_master, integrate_master_at, Knot, MasterSolution, ProtocolSchedule, RateLaw,
    SegmentKind, SegmentLedger,
};

use crate::dynamics::{classify_flip, RateParams};
use crate::error::{Error, Result};
use crate::lattice::{
    energy, sector_energy, EdgeSet, LatticeModel, ModelKind, Sector, SpinConfiguration,
};

/// Largest state space `build_generator` enumerates.
pub const MAX_STATES: usize = 1 << 20;
/// Dimension from which solves switch to sparse iterative methods.
pub const DENSE_LIMIT: usize = 4096;
/// Column sums and null-vector residuals are checked against this.
pub const GENERATOR_TOL: f64 = 1e-12;

/// Sparse continuous-time Markov generator in column form: column `x` holds
/// the rates out of state `x`, and the diagonal makes each column sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    dim: usize,
    transitions: Vec<Vec<(usize, f64)>>,
    diagonal: Vec<f64>,
}

impl GeneratorMatrix {
    /// Builds from per-state outgoing transitions; self-loops are ignored.
    pub fn from_transitions(transitions: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let dim = transitions.len();
        let mut cleaned = Vec::with_capacity(dim);
        let mut diagonal = Vec::with_capacity(dim);
        for (x, out) in transitions.into_iter().enumerate() {
            let mut kept = Vec::with_capacity(out.len());
            let mut exit = 0.0;
            for (y, r) in out {
                if y >= dim {
                    return Err(Error::IndexOutOfRange { index: y, len: dim });
                }
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(Error::InvalidParameter(format!("rate {r} from {x} to {y}")));
                }
                if y != x && r > 0.0 {
                    exit += r;
                    kept.push((y, r));
                }
            }
            cleaned.push(kept);
            diagonal.push(-exit);
        }
        Ok(Self {
            dim,
            transitions: cleaned,
            diagonal,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rate of the jump `from → to` (diagonal entry when equal).
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        if from == to {
            return self.diagonal[from];
        }
        self.transitions[from]
            .iter()
            .filter(|&&(y, _)| y == to)
            .map(|&(_, r)| r)
            .sum()
    }

    pub fn transitions(&self, from: usize) -> &[(usize, f64)] {
        &self.transitions[from]
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.diagonal.iter().fold(0.0, |m, &d| m.max(-d))
    }

    /// y = G p.
    pub fn apply(&self, p: &[f64], out: &mut [f64]) {
        for (x, o) in out.iter_mut().enumerate() {
            *o = self.diagonal[x] * p[x];
        }
        for (x, row) in self.transitions.iter().enumerate() {
            let px = p[x];
            if px != 0.0 {
                for &(y, r) in row {
                    out[y] += r * px;
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.dim, self.dim);
        for x in 0..self.dim {
            g[(x, x)] = self.diagonal[x];
            for &(y, r) in &self.transitions[x] {
                g[(y, x)] += r;
            }
        }
        g
    }

    /// Largest |column sum|, zero up to rounding for a valid generator.
    pub fn max_column_sum(&self) -> f64 {
        (0..self.dim)
            .map(|x| {
                (self.diagonal[x] + self.transitions[x].iter().map(|t| t.1).sum::<f64>()).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Size of the full configuration space, if it is small enough to enumerate.
pub fn state_count(model: &LatticeModel) -> Result<usize> {
    let n = model.n_sites();
    if n >= 64 || (1u128 << n) > MAX_STATES as u128 {
        return Err(Error::StateSpaceTooLarge(if n >= 127 {
            u128::MAX
        } else {
            1u128 << n
        }));
    }
    Ok(1usize << n)
}

/// Energy that sets the Gibbs weights of the simulated dynamics: the Ising
/// Hamiltonian, or the plaquette anyon count of a Kitaev error frame.
pub fn dynamical_energy(model: &LatticeModel, config: &SpinConfiguration) -> Result<f64> {
    match model.kind() {
        ModelKind::Kitaev2D => sector_energy(
            model,
            &EdgeSet::from_configuration(config),
            Sector::Plaquette,
        ),
        _ => energy(model, config),
    }
}

/// Generator of the single-flip dynamics, states indexed by the down-spin mask.
pub fn build_generator(model: &LatticeModel, beta: f64) -> Result<GeneratorMatrix> {
    build_generator_with(model, &RateParams::new(beta))
}

pub fn build_generator_with(model: &LatticeModel, rates: &RateParams) -> Result<GeneratorMatrix> {
    rates.validate()?;
    let dim = state_count(model)?;
    let n = model.n_sites();
    let mut transitions = Vec::with_capacity(dim);
    for mask in 0..dim as u64 {
        let config = SpinConfiguration::from_mask(mask, n);
        let mut out = Vec::with_capacity(n);
        for site in 0..n {
            let ev = classify_flip(model, rates, &config, site)?;
            out.push(((mask ^ (1 << site)) as usize, ev.rate));
        }
        transitions.push(out);
    }
    GeneratorMatrix::from_transitions(transitions)
}

/// Boltzmann distribution e^{−βE}/Z over the same state indexing.
pub fn gibbs_distribution(model: &LatticeModel, beta: f64) -> Result<Vec<f64>> {
    let dim = state_count(model)?;
    let energies: Vec<f64> = (0..dim as u64)
        .map(|m| dynamical_energy(model, &SpinConfiguration::from_mask(m, model.n_sites())))
        .collect::<Result<_>>()?;
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies
        .iter()
        .map(|&e| {
            if e == e_min {
                1.0
            } else {
                (-beta * (e - e_min)).exp()
            }
        })
        .collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}

/// Normalised null vector of `g`, found independently of any model energy:
/// an LU solve with one balance row replaced by normalisation in the dense
/// regime, uniformised power iteration above it.
pub fn stationary_distribution(g: &GeneratorMatrix) -> Result<Vec<f64>> {
    let dim = g.dim();
    if dim == 0 {
        return Err(Error::InvalidParameter("empty generator".into()));
    }
    let mut p = if dim < DENSE_LIMIT {
        let mut a = g.to_dense();
        for j in 0..dim {
            a[(dim - 1, j)] = 1.0;
        }
        let mut b = DVector::zeros(dim);
        b[dim - 1] = 1.0;
        let sol = a.lu().solve(&b).ok_or_else(|| {
            Error::NonConvergence("singular balance system (reducible chain?)".into())
        })?;
        sol.iter().copied().collect::<Vec<f64>>()
    } else {
        power_stationary(g)?
    };
    for x in p.iter_mut() {
        if *x < 0.0 {
            if *x < -1e-9 {
                return Err(Error::NonConvergence(format!(
                    "negative stationary weight {x}"
                )));
            }
            *x = 0.0;
        }
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    Ok(p)
}

fn power_stationary(g: &GeneratorMatrix) -> Result<Vec<f64>> {
    let dim = g.dim();
    let lambda = 2.0 * g.max_exit_rate();
    if lambda == 0.0 {
        return Ok(vec![1.0 / dim as f64; dim]);
    }
    let mut p = vec![1.0 / dim as f64; dim];
    let mut gp = vec![0.0; dim];
    for _ in 0..2_000_000 {
        g.apply(&p, &mut gp);
        let mut change = 0.0;
        for (x, d) in p.iter_mut().zip(&gp) {
            let step = d / lambda;
            *x += step;
            change += step.abs();
        }
        if change < 1e-15 {
            return Ok(p);
        }
    }
    Err(Error::NonConvergence(
        "power iteration for the stationary vector".into(),
    ))
}

/// Relaxation gap of a reversible generator: minus the second-largest
/// eigenvalue of D^{−1/2} G D^{1/2}, D = diag(π).
pub fn spectral_gap(g: &GeneratorMatrix) -> Result<f64> {
    let dim = g.dim();
    if dim < 2 {
        return Ok(0.0);
    }
    let pi = stationary_distribution(g)?;
    let min_weight = pi.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_weight > 0.0) {
        return Err(Error::NotReversible {
            max_asymmetry: f64::NAN,
            min_weight,
        });
    }
    let sqrt_pi: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
    // Symmetrised rates S_{yx} = G_{yx} √(π_x/π_y); detailed balance makes them symmetric.
    let mut max_asymmetry: f64 = 0.0;
    for x in 0..dim {
        for &(y, r) in g.transitions(x) {
            let s_yx = r * sqrt_pi[x] / sqrt_pi[y];
            let s_xy = g.rate(y, x) * sqrt_pi[y] / sqrt_pi[x];
            max_asymmetry = max_asymmetry.max((s_yx - s_xy).abs() / s_yx.abs().max(s_xy.abs()));
        }
    }
    if max_asymmetry > 1e-8 {
        return Err(Error::NotReversible {
            max_asymmetry,
            min_weight,
        });
    }
    let second = if dim < DENSE_LIMIT {
        let mut s = g.to_dense();
        for x in 0..dim {
            for y in 0..dim {
                s[(y, x)] *= sqrt_pi[x] / sqrt_pi[y];
            }
        }
        let s = (&s + s.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev[1]
    } else {
        let apply = |v: &[f64], out: &mut [f64]| {
            // S v = D^{-1/2} G D^{1/2} v
            let scaled: Vec<f64> = v.iter().zip(&sqrt_pi).map(|(a, b)| a * b).collect();
            g.apply(&scaled, out);
            out.iter_mut().zip(&sqrt_pi).for_each(|(o, s)| *o /= s);
        };
        lanczos::top_eigenvalue_deflated(dim, apply, &sqrt_pi, 1e-12, 5000)?
    };
    Ok((-second).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_model, ModelSpec};

    fn model(kind: ModelKind, size: usize) -> LatticeModel {
        build_model(ModelSpec::new(kind, size)).unwrap()
    }

    #[test]
    fn ising_ring_generator_shape() {
        let g = build_generator(&model(ModelKind::Ising1D, 3), 0.7).unwrap();
        assert_eq!(g.dim(), 8);
        assert!(g.max_column_sum() < GENERATOR_TOL);
        let d = g.to_dense();
        for x in 0..8 {
            for y in 0..8 {
                if x != y {
                    assert!(d[(y, x)] >= 0.0);
                }
            }
        }
    }

    #[test]
    fn free_spin_spectrum() {
        let m =
            build_model(ModelSpec::new(ModelKind::IsingMeanField, 1).with_coupling(0.0)).unwrap();
        let g = build_generator(&m, 1.0).unwrap();
        let mut ev: Vec<f64> = g
            .to_dense()
            .eigenvalues()
            .unwrap()
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        assert!((ev[0] + 1.0).abs() < 1e-14 && ev[1].abs() < 1e-14);
        assert!((spectral_gap(&g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        let g = build_generator(&model(ModelKind::Ising1D, 5), 0.0).unwrap();
        let pi = stationary_distribution(&g).unwrap();
        assert!(pi.iter().all(|p| (p - 1.0 / 32.0).abs() < 1e-14));
    }

    #[test]
    fn two_state_detailed_balance_closed_form() {
        // Two states separated by ΔE = 2 with heat-bath rates: π ∝ (1, e^{−2β}).
        use crate::dynamics::heat_bath_rate;
        let beta = 0.9;
        let g = GeneratorMatrix::from_transitions(vec![
            vec![(1, heat_bath_rate(beta, 2.0))],
            vec![(0, heat_bath_rate(beta, -2.0))],
        ])
        .unwrap();
        let pi = stationary_distribution(&g).unwrap();
        let w = (-2.0 * beta).exp();
        assert!((pi[0] - 1.0 / (1.0 + w)).abs() < 1e-14);
        assert!((pi[1] - w / (1.0 + w)).abs() < 1e-14);
    }

    #[test]
    fn too_large_state_space() {
        let m = model(ModelKind::Ising1D, 21);
        assert!(matches!(
            build_generator(&m, 1.0),
            Err(Error::StateSpaceTooLarge(_))
        ));
    }

    #[test]
    fn gibbs_is_null_vector_kitaev_l2() {
        let m = model(ModelKind::Kitaev2D, 2);
        let g = build_generator(&m, 1.0).unwrap();
        assert_eq!(g.dim(), 256);
        let gibbs = gibbs_distribution(&m, 1.0).unwrap();
        let mut r = vec![0.0; 256];
        g.apply(&gibbs, &mut r);
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm < 1e-10, "{norm}");
    }

    #[test]
    fn dense_and_sparse_gaps_agree() {
        let g = build_generator(&model(ModelKind::Ising1D, 8), 0.8).unwrap();
        let dense = spectral_gap(&g).unwrap();
        let pi = stationary_distribution(&g).unwrap();
        let sqrt_pi: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
        let apply = |v: &[f64], out: &mut [f64]| {
            let scaled: Vec<f64> = v.iter().zip(&sqrt_pi).map(|(a, b)| a * b).collect();
            g.apply(&scaled, out);
            out.iter_mut().zip(&sqrt_pi).for_each(|(o, s)| *o /= s);
        };
        let sparse =
            -lanczos::top_eigenvalue_deflated(g.dim(), apply, &sqrt_pi, 1e-13, 2000).unwrap();
        assert!((dense - sparse).abs() < 1e-8 * dense, "{dense} vs {sparse}");
        let power = power_stationary(&g).unwrap();
        let err = power
            .iter()
            .zip(&pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn irreversible_generator_rejected() {
        // Three-state cycle driven one way.
        let g = GeneratorMatrix::from_transitions(vec![
            vec![(1, 2.0), (2, 0.1)],
            vec![(2, 2.0), (0, 0.1)],
            vec![(0, 2.0), (1, 0.1)],
        ])
        .unwrap();
        assert!(matches!(spectral_gap(&g), Err(Error::NotReversible { .. })));
    }
}
