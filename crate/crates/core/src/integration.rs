//! Integration with respect to `μ` (Lebesgue measure on the torus).
//!
//! [`q_2n_r`] integrates the approximant `A_n^r f` exactly and adds a plain
//! Monte Carlo average of the residual `f − A_n^r f` over `n` independent
//! uniform points: a control variate built from the approximation.

use std::sync::Arc;

use num_complex::Complex64;

use crate::approximation::{a_n_r, bound_constants};
use crate::error::{Error, Result};
use crate::function::{CoefficientFunction, Evaluable};
use crate::sampling::{sample_mu, ReplicationSeed, StreamRole};
use crate::spectral::{preasymptotic_exponent, SpectralBasis};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralEstimate {
    pub value: Complex64,
    pub evals_used: u64,
    pub seed: ReplicationSeed,
}

/// `∫ b_{index+1} dμ`: one for the zero frequency, zero otherwise. Custom
/// orthonormal systems must supply their own integrals.
pub fn integral_of_basis(basis: &SpectralBasis, index: usize) -> Result<Complex64> {
    let freq = basis.frequency(index)?;
    match basis.system() {
        None => Ok(if freq.is_zero() {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }),
        Some(system) => system.integral(index).ok_or(Error::MissingIntegral(index)),
    }
}

/// Exact `∫ f dμ` from the coefficients.
pub fn integral_of(f: &CoefficientFunction) -> Result<Complex64> {
    let basis = f.basis();
    f.coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != Complex64::new(0.0, 0.0))
        .map(|(j, c)| integral_of_basis(basis, j).map(|i| c * i))
        .sum()
}

/// `Q_{2n}^r f = I(A_n^r f) + (1/n) Σ_i (f − A_n^r f)(X_i)`.
pub fn q_2n_r(
    f: &dyn Evaluable,
    basis: &Arc<SpectralBasis>,
    n: u64,
    r: f64,
    seed: &ReplicationSeed,
) -> Result<IntegralEstimate> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let approx = a_n_r(f, basis, n, r, seed)?;
    let exact_part = integral_of(&approx.value)?;
    let mut rng = seed.stream(StreamRole::Residual, 0);
    let m = approx.value.len();
    let mut ev = basis.evaluator(m);
    let mut values = vec![Complex64::new(0.0, 0.0); m];
    let mut sum = Complex64::new(0.0, 0.0);
    for _ in 0..n {
        let x = sample_mu(basis.dim(), &mut rng);
        ev.fill(&x, &mut values);
        let a: Complex64 = approx.value.coeffs().iter().zip(&values).map(|(c, b)| c * b).sum();
        sum += f.evaluate(&x) - a;
    }
    Ok(IntegralEstimate {
        value: exact_part + sum / n as f64,
        evals_used: approx.evals_used + n,
        seed: *seed,
    })
}

/// `S_n f = (1/n) Σ_i f(X_i)` with uniform `X_i`.
pub fn direct_simulation(f: &dyn Evaluable, n: u64, seed: &ReplicationSeed) -> Result<IntegralEstimate> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let mut rng = seed.stream(StreamRole::Direct, 0);
    let mut sum = Complex64::new(0.0, 0.0);
    for _ in 0..n {
        let x = sample_mu(f.dim(), &mut rng);
        sum += f.evaluate(&x);
    }
    Ok(IntegralEstimate {
        value: sum / n as f64,
        evals_used: n,
        seed: *seed,
    })
}

/// `n^{-1/2}`, the worst-case root-mean-square error of direct simulation.
pub fn direct_simulation_bound(n: u64) -> f64 {
    1.0 / (n as f64).sqrt()
}

/// `C n^{-p-1/2}` with `p = r/(2+ln d)` and `C = 2^{p⌈2p+4⌉+1}`.
pub fn integration_bound(n: u64, r: f64, d: u64) -> Result<f64> {
    check_n(n)?;
    let p = preasymptotic_exponent(r, d)?;
    let c = (p * (2.0 * p + 4.0).ceil() + 1.0).exp2();
    Ok(c * (n as f64).powf(-p - 0.5))
}

/// `2 (2^{⌈2p+4⌉}/n)^p` with `p = r/(2+ln d)`.
pub fn approx_bound(n: u64, r: f64, d: u64) -> Result<f64> {
    check_n(n)?;
    let p = preasymptotic_exponent(r, d)?;
    Ok(2.0 * ((2.0 * p + 4.0).ceil().exp2() / n as f64).powf(p))
}

/// `c_r n^{-1/2} L(n)`, the integration bound for a majorant `L` of `σ`.
pub fn integration_bound_for(n: u64, r: f64, majorant: f64) -> Result<f64> {
    check_n(n)?;
    Ok(bound_constants(r)?.c_r * majorant / (n as f64).sqrt())
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    Ok(())
}
