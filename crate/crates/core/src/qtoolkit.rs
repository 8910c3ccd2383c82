//! Small-dimension density-matrix numerics: entropy, trace distance, Kraus
//! channels, the contraction and correctability checks, the Fannes bound and
//! the erasure entropy balance. Entropies are in nats (k_B = 1).

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const MAX_DIM: usize = 64;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const EIGEN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Distances above this are outside the range where the Fannes bound is monotone.
pub const FANNES_WINDOW: f64 = 1.0 / std::f64::consts::E;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Real spectrum of a Hermitian matrix, ascending. The input is symmetrised first.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
        }
        let d = m.nrows();
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidState(format!(
                "dimension {d} outside 1..={MAX_DIM}"
            )));
        }
        let asym = (&m - m.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if asym > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {asym:e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let m = hermitian_part(&m);
        let min = hermitian_eigenvalues(&m)[0];
        if min < -EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { m })
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        let d = p.len();
        Self::new(CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                c(p[i])
            } else {
                c(0.0)
            }
        }))
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalised) vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let d = psi.len();
        Self::new(CMatrix::from_fn(d, d, |i, j| {
            psi[i] * psi[j].conj() / (norm * norm)
        }))
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        Self::from_diagonal(&vec![1.0 / d as f64; d])
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.m)
    }

    /// (1 − w) self + w other.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Self::new(&self.m * c(1.0 - w) + &other.m * c(w))
    }

    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        Self::new(u * &self.m * u.adjoint())
    }
}

/// Von Neumann entropy −Tr ρ ln ρ, with 0 ln 0 = 0.
pub fn entropy(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues()
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum()
}

/// Full trace norm ‖ρ − σ‖₁, in [0, 2].
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(hermitian_eigenvalues(&(a.matrix() - b.matrix()))
        .iter()
        .map(|l| l.abs())
        .sum())
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    kraus: Vec<CMatrix>,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidParameter("no Kraus operators".into()))?;
        let (d_out, d_in) = first.shape();
        for k in &kraus {
            if k.shape() != (d_out, d_in) {
                return Err(Error::DimensionMismatch(k.nrows(), d_out));
            }
        }
        let mut sum = CMatrix::zeros(d_in, d_in);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let dev = (sum - CMatrix::identity(d_in, d_in))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > COMPLETENESS_TOL {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Self { kraus })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            kraus: vec![CMatrix::identity(d, d)],
        }
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// ρ ↦ (1 − p) ρ + p I/d.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "depolarizing probability {p}"
            )));
        }
        // Uniform mixture over the d² Weyl operators, weight 1/d² each, is the full twirl.
        let mut kraus = vec![CMatrix::identity(d, d) * c((1.0 - p + p / (d * d) as f64).sqrt())];
        let omega =
            |k: usize| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64);
        for a in 0..d {
            for b in 0..d {
                if a == 0 && b == 0 {
                    continue;
                }
                let w = CMatrix::from_fn(d, d, |i, j| {
                    if i == (j + a) % d {
                        omega(b * j)
                    } else {
                        c(0.0)
                    }
                });
                kraus.push(w * c((p / (d * d) as f64).sqrt()));
            }
        }
        Self::new(kraus)
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn input_dim(&self) -> usize {
        self.kraus[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch(rho.dim(), self.input_dim()));
        }
        let d = self.output_dim();
        let mut out = CMatrix::zeros(d, d);
        for k in &self.kraus {
            out += k * rho.matrix() * k.adjoint();
        }
        DensityMatrix::new(hermitian_part(&out))
    }

    /// The channel `after ∘ self`.
    pub fn then(&self, after: &QuantumChannel) -> Result<Self> {
        if after.input_dim() != self.output_dim() {
            return Err(Error::DimensionMismatch(
                after.input_dim(),
                self.output_dim(),
            ));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * after.kraus.len());
        for a in &after.kraus {
            for k in &self.kraus {
                kraus.push(a * k);
            }
        }
        Self::new(kraus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionReport {
    pub pairs: usize,
    /// Pairs whose output distance exceeds the input distance by more than 1e−10.
    pub violations: usize,
    /// max over pairs of ‖Tρ − Tρ'‖₁ − ‖ρ − ρ'‖₁.
    pub worst_excess: f64,
}

/// Applies `channel` to `rho` and checks trace-norm contraction on `pairs`.
pub fn apply_channel(
    channel: &QuantumChannel,
    rho: &DensityMatrix,
    pairs: &[(DensityMatrix, DensityMatrix)],
) -> Result<(DensityMatrix, ContractionReport)> {
    let out = channel.apply(rho)?;
    let mut report = ContractionReport {
        pairs: pairs.len(),
        violations: 0,
        worst_excess: f64::NEG_INFINITY,
    };
    for (a, b) in pairs {
        let before = trace_distance(a, b)?;
        let after = trace_distance(&channel.apply(a)?, &channel.apply(b)?)?;
        let excess = after - before;
        report.worst_excess = report.worst_excess.max(excess);
        if excess > 1e-10 {
            report.violations += 1;
        }
    }
    Ok((out, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum IsometryReport {
    /// R∘T fixes every code state and T preserves every pairwise distance.
    Preserved { pairs: usize, max_deviation: f64 },
    /// R∘T moves some code state; the correctability precondition fails.
    RecoveryFails { max_recovery_error: f64 },
    /// Recovery holds but a distance changed; impossible for a valid CP pair.
    DistanceChanged { max_deviation: f64 },
}

/// Checks that a correctable noise channel acts isometrically on code states.
pub fn correctable_isometry_check(
    noise: &QuantumChannel,
    recovery: &QuantumChannel,
    code_states: &[DensityMatrix],
) -> Result<IsometryReport> {
    let corrected = noise.then(recovery)?;
    let mut worst_recovery: f64 = 0.0;
    let mut noisy = Vec::with_capacity(code_states.len());
    for rho in code_states {
        worst_recovery = worst_recovery.max(trace_distance(&corrected.apply(rho)?, rho)?);
        noisy.push(noise.apply(rho)?);
    }
    if worst_recovery > 1e-8 {
        return Ok(IsometryReport::RecoveryFails {
            max_recovery_error: worst_recovery,
        });
    }
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for i in 0..code_states.len() {
        for j in i + 1..code_states.len() {
            let before = trace_distance(&code_states[i], &code_states[j])?;
            let after = trace_distance(&noisy[i], &noisy[j])?;
            worst = worst.max((after - before).abs());
            pairs += 1;
        }
    }
    if worst > 1e-8 {
        return Ok(IsometryReport::DistanceChanged {
            max_deviation: worst,
        });
    }
    Ok(IsometryReport::Preserved {
        pairs,
        max_deviation: worst,
    })
}

/// T ln D − T ln T: the Fannes allowance for entropy change at trace distance T.
pub fn fannes_allowance(distance: f64, dim: usize) -> f64 {
    let eta = if distance > 0.0 {
        -distance * distance.ln()
    } else {
        0.0
    };
    distance * (dim as f64).ln() + eta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum FannesOutcome {
    Evaluated {
        distance: f64,
        bound: f64,
        entropy_gap: f64,
        slack: f64,
    },
    OutsideWindow {
        distance: f64,
    },
}

/// Slack of the Fannes inequality for a pair of states in dimension `dim`.
pub fn fannes_check(a: &DensityMatrix, b: &DensityMatrix, dim: usize) -> Result<FannesOutcome> {
    if dim < a.dim() {
        return Err(Error::DimensionMismatch(dim, a.dim()));
    }
    let distance = trace_distance(a, b)?;
    if distance > FANNES_WINDOW {
        return Ok(FannesOutcome::OutsideWindow { distance });
    }
    let bound = fannes_allowance(distance, dim);
    let entropy_gap = (entropy(a) - entropy(b)).abs();
    Ok(FannesOutcome::Evaluated {
        distance,
        bound,
        entropy_gap,
        slack: bound - entropy_gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BalanceVerdict {
    Satisfied,
    Boundary,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErasureBalance {
    pub delta_s: f64,
    pub verdict: BalanceVerdict,
}

/// Bath entropy change S(ω_out) − S(ω_in) against the ln 2 erasure threshold.
pub fn erasure_balance(omega_in: &DensityMatrix, omega_out: &DensityMatrix) -> ErasureBalance {
    let delta_s = entropy(omega_out) - entropy(omega_in);
    let margin = delta_s - std::f64::consts::LN_2;
    let verdict = if margin.abs() <= 1e-10 {
        BalanceVerdict::Boundary
    } else if margin > 0.0 {
        BalanceVerdict::Satisfied
    } else {
        BalanceVerdict::Violated
    };
    ErasureBalance { delta_s, verdict }
}

fn ginibre<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-random unitary (QR of a Ginibre matrix with phase fix).
pub fn random_unitary<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let qr = ginibre(rng, d, d).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let z = r[(i, i)];
            if z.norm() > 0.0 {
                z / z.norm()
            } else {
                c(1.0)
            }
        } else {
            c(0.0)
        }
    });
    q * phases
}

/// Random mixed state from the Hilbert–Schmidt ensemble of the given rank.
pub fn random_state<R: Rng>(rng: &mut R, d: usize, rank: usize) -> DensityMatrix {
    let g = ginibre(rng, d, rank.max(1));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(hermitian_part(&(m / c(tr)))).expect("Wishart matrix is a valid state")
}

/// Random channel from a random Stinespring isometry with `n_kraus` outputs.
pub fn random_channel<R: Rng>(rng: &mut R, d: usize, n_kraus: usize) -> QuantumChannel {
    let u = random_unitary(rng, d * n_kraus);
    let kraus = (0..n_kraus)
        .map(|k| u.view((k * d, 0), (d, d)).into_owned())
        .collect();
    QuantumChannel::new(kraus).expect("isometry blocks are complete")
}

fn pauli_x_on(qubit: usize, n_qubits: usize) -> CMatrix {
    let d = 1 << n_qubits;
    let bit = 1 << (n_qubits - 1 - qubit);
    CMatrix::from_fn(d, d, |i, j| if i == j ^ bit { c(1.0) } else { c(0.0) })
}

/// Three-qubit bit-flip code: the noise flips one qubit with probability `p`
/// each (p ≤ 1/3), the recovery projects onto a syndrome space and undoes
/// the indicated flip.
pub fn repetition_code(p: f64) -> Result<(QuantumChannel, QuantumChannel)> {
    if !(0.0..=1.0 / 3.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "flip probability {p} outside [0, 1/3]"
        )));
    }
    let id = CMatrix::identity(8, 8);
    let mut noise = vec![id.clone() * c((1.0 - 3.0 * p).sqrt())];
    for q in 0..3 {
        noise.push(pauli_x_on(q, 3) * c(p.sqrt()));
    }
    let code_projector = CMatrix::from_fn(8, 8, |i, j| {
        if i == j && (i == 0 || i == 7) {
            c(1.0)
        } else {
            c(0.0)
        }
    });
    let mut recovery = vec![code_projector.clone()];
    for q in 0..3 {
        let x = pauli_x_on(q, 3);
        let projector = &x * &code_projector * &x;
        recovery.push(&x * projector);
    }
    Ok((QuantumChannel::new(noise)?, QuantumChannel::new(recovery)?))
}

/// Random logical state encoded into span{|000⟩, |111⟩}.
pub fn random_repetition_state<R: Rng>(rng: &mut R) -> DensityMatrix {
    let logical = random_state(rng, 2, 2);
    let embed = CMatrix::from_fn(8, 2, |i, j| {
        if (i == 0 && j == 0) || (i == 7 && j == 1) {
            c(1.0)
        } else {
            c(0.0)
        }
    });
    DensityMatrix::new(&embed * logical.matrix() * embed.adjoint()).expect("isometric embedding")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::rng_from_seed;

    #[test]
    fn entropy_examples() {
        let pure = DensityMatrix::pure(&[c(0.6), Complex64::new(0.0, 0.8)]).unwrap();
        assert!(entropy(&pure).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert!((entropy(&mixed) - std::f64::consts::LN_2).abs() < 1e-14);
        let d = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
        let expect = 4f64.ln() - 0.75 * 3f64.ln();
        assert!((entropy(&d) - expect).abs() < 1e-14);
        assert!((entropy(&d) - 0.56233).abs() < 1e-5);
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(DensityMatrix::from_diagonal(&[0.7, 0.7]).is_err());
        assert!(DensityMatrix::from_diagonal(&[1.2, -0.2]).is_err());
        let nonherm = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(DensityMatrix::new(nonherm).is_err());
    }

    #[test]
    fn trace_distance_examples() {
        let a = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let b = DensityMatrix::from_diagonal(&[0.0, 1.0]).unwrap();
        let m = DensityMatrix::maximally_mixed(2).unwrap();
        assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
        assert!((trace_distance(&a, &b).unwrap() - 2.0).abs() < 1e-14);
        assert!((trace_distance(&a, &m).unwrap() - 1.0).abs() < 1e-14);
        assert!(trace_distance(&a, &DensityMatrix::maximally_mixed(3).unwrap()).is_err());
    }

    #[test]
    fn channel_examples() {
        let mut rng = rng_from_seed(1);
        let rho = random_state(&mut rng, 2, 2);
        let sigma = random_state(&mut rng, 2, 1);
        let pairs = vec![(rho.clone(), sigma.clone())];
        let (out, rep) = apply_channel(&QuantumChannel::identity(2), &rho, &pairs).unwrap();
        assert!(trace_distance(&out, &rho).unwrap() < 1e-14);
        assert!(rep.worst_excess.abs() < 1e-12);
        let full = QuantumChannel::depolarizing(2, 1.0).unwrap();
        let a = full.apply(&rho).unwrap();
        let b = full.apply(&sigma).unwrap();
        assert!(trace_distance(&a, &b).unwrap() < 1e-12);
        let bad = vec![CMatrix::identity(2, 2) * c(0.9)];
        assert!(matches!(
            QuantumChannel::new(bad),
            Err(Error::NotTracePreserving(_))
        ));
    }

    #[test]
    fn repetition_code_is_isometric_on_code_space() {
        let mut rng = rng_from_seed(2);
        let (noise, recovery) = repetition_code(0.1).unwrap();
        let states: Vec<DensityMatrix> =
            (0..12).map(|_| random_repetition_state(&mut rng)).collect();
        match correctable_isometry_check(&noise, &recovery, &states).unwrap() {
            IsometryReport::Preserved {
                pairs,
                max_deviation,
            } => {
                assert_eq!(pairs, 66);
                assert!(max_deviation < 1e-10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unitary_noise_with_inverse_recovery() {
        let mut rng = rng_from_seed(3);
        let u = random_unitary(&mut rng, 4);
        let t = QuantumChannel::unitary(u.clone()).unwrap();
        let r = QuantumChannel::unitary(u.adjoint()).unwrap();
        let states: Vec<DensityMatrix> = (0..6).map(|_| random_state(&mut rng, 4, 2)).collect();
        assert!(matches!(
            correctable_isometry_check(&t, &r, &states).unwrap(),
            IsometryReport::Preserved { .. }
        ));
    }

    #[test]
    fn strong_depolarizing_is_not_correctable() {
        let mut rng = rng_from_seed(4);
        let noise = QuantumChannel::depolarizing(8, 0.9).unwrap();
        let (_, recovery) = repetition_code(0.0).unwrap();
        let states: Vec<DensityMatrix> =
            (0..4).map(|_| random_repetition_state(&mut rng)).collect();
        assert!(matches!(
            correctable_isometry_check(&noise, &recovery, &states).unwrap(),
            IsometryReport::RecoveryFails { .. }
        ));
    }

    #[test]
    fn fannes_examples() {
        let a = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        match fannes_check(&a, &a, 2).unwrap() {
            FannesOutcome::Evaluated { slack, .. } => assert_eq!(slack, 0.0),
            o => panic!("{o:?}"),
        }
        let b = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
        match fannes_check(&a, &b, 2).unwrap() {
            FannesOutcome::Evaluated {
                distance,
                bound,
                entropy_gap,
                slack,
            } => {
                assert!((distance - 0.2).abs() < 1e-14);
                let exp_bound = 0.2 * 2f64.ln() - 0.2 * 0.2f64.ln();
                let exp_gap = -(0.9f64 * 0.9f64.ln() + 0.1 * 0.1f64.ln());
                assert!((bound - exp_bound).abs() < 1e-12 && (bound - 0.4605).abs() < 1e-4);
                assert!(
                    (entropy_gap - exp_gap).abs() < 1e-12 && (entropy_gap - 0.3251).abs() < 1e-4
                );
                assert!((slack - 0.1354).abs() < 1e-4);
            }
            o => panic!("{o:?}"),
        }
        let far = DensityMatrix::from_diagonal(&[0.0, 1.0]).unwrap();
        assert!(matches!(
            fannes_check(&a, &far, 2).unwrap(),
            FannesOutcome::OutsideWindow { .. }
        ));
    }

    #[test]
    fn erasure_examples() {
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert_eq!(
            erasure_balance(&pure, &mixed).verdict,
            BalanceVerdict::Boundary
        );
        let same = erasure_balance(&mixed, &mixed);
        assert_eq!(same.delta_s, 0.0);
        assert_eq!(same.verdict, BalanceVerdict::Violated);
        assert_eq!(
            erasure_balance(&pure, &DensityMatrix::maximally_mixed(4).unwrap()).verdict,
            BalanceVerdict::Satisfied
        );
        let allowance = fannes_allowance(0.01, 1 << 10);
        assert!((allowance - 0.1154).abs() < 1e-4, "{allowance}");
    }

    #[test]
    fn depolarizing_kraus_is_twirl() {
        let mut rng = rng_from_seed(5);
        for d in [2, 3, 4] {
            let rho = random_state(&mut rng, d, d);
            let out = QuantumChannel::depolarizing(d, 0.4)
                .unwrap()
                .apply(&rho)
                .unwrap();
            let expect = rho
                .mix(&DensityMatrix::maximally_mixed(d).unwrap(), 0.4)
                .unwrap();
            assert!(trace_distance(&out, &expect).unwrap() < 1e-12);
        }
    }
}
