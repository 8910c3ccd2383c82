use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::ensemble::rng_from_seed;
use crate::error::{Error, Result};

/// Largest eigenvalue of a symmetric operator restricted to the orthogonal
/// complement of the unit vector `deflate`.
///
/// Plain Lanczos with explicit re-projection against `deflate` and the two
/// previous basis vectors; the extremal Ritz value converges even though
/// spurious copies may appear deeper in the spectrum.
pub(crate) fn top_eigenvalue_deflated<F>(
    dim: usize,
    apply: F,
    deflate: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    if dim < 2 {
        return Err(Error::NonConvergence(
            "operator has no complement to deflate".into(),
        ));
    }
    let project = |v: &mut [f64]| {
        let c: f64 = v.iter().zip(deflate).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(deflate).for_each(|(a, b)| *a -= c * b);
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut rng = rng_from_seed(0x1a2c_7e55);
    let mut q: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    project(&mut q);
    let n0 = norm(&q);
    q.iter_mut().for_each(|x| *x /= n0);
    let mut q_prev = vec![0.0; dim];
    let mut w = vec![0.0; dim];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last = f64::NAN;
    let mut beta_prev = 0.0;

    for k in 0..max_iter.min(dim - 1) {
        apply(&q, &mut w);
        let alpha: f64 = w.iter().zip(&q).map(|(a, b)| a * b).sum();
        for i in 0..dim {
            w[i] -= alpha * q[i] + beta_prev * q_prev[i];
        }
        project(&mut w);
        // One pass of local re-orthogonalisation.
        let c1: f64 = w.iter().zip(&q).map(|(a, b)| a * b).sum();
        let c0: f64 = w.iter().zip(&q_prev).map(|(a, b)| a * b).sum();
        for i in 0..dim {
            w[i] -= c1 * q[i] + c0 * q_prev[i];
        }
        alphas.push(alpha + c1);
        let beta = norm(&w);

        if (k + 1) % 5 == 0 || beta < 1e-12 {
            let top = tridiagonal_max(&alphas, &betas);
            let scale = top.abs().max(1e-300);
            if beta < 1e-12 || (top - last).abs() <= tol * scale {
                return Ok(top);
            }
            last = top;
        }
        betas.push(beta);
        std::mem::swap(&mut q_prev, &mut q);
        for i in 0..dim {
            q[i] = w[i] / beta;
        }
        beta_prev = beta;
    }
    let top = tridiagonal_max(&alphas, &betas[..alphas.len() - 1]);
    if dim - 1 <= max_iter {
        // Krylov space exhausted: the tridiagonal spectrum is exact.
        return Ok(top);
    }
    Err(Error::NonConvergence(format!(
        "Lanczos did not converge in {max_iter} iterations (last estimate {top})"
    )))
}

fn tridiagonal_max(alphas: &[f64], betas: &[f64]) -> f64 {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    SymmetricEigen::new(t)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        // Spectrum 0, −1, −2, ...; deflating e_0 leaves −1 on top.
        let dim = 300;
        let diag: Vec<f64> = (0..dim).map(|i| -(i as f64)).collect();
        let mut e0 = vec![0.0; dim];
        e0[0] = 1.0;
        let top = top_eigenvalue_deflated(
            dim,
            |x, y| {
                for i in 0..dim {
                    y[i] = diag[i] * x[i];
                }
            },
            &e0,
            1e-13,
            2000,
        )
        .unwrap();
        assert!((top + 1.0).abs() < 1e-9, "{top}");
    }
}
