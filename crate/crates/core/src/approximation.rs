//! The multilevel estimator `M^(k)` and its schedules.
//!
//! Level `j` draws `n_j` points from `μ_{m_j}`, evaluates the residual of
//! the current approximant at each of them, and adds importance-weighted
//! Monte Carlo estimates of the residual's first `m_j` coefficients.
//! [`schedule_a_n_r`] gives the doubling schedule with at most `n`
//! evaluations, [`schedule_q_m`] the schedule driven by projection error
//! bounds `ε`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::function::{CoefficientFunction, Evaluable};
use crate::sampling::{sample_mu_m, ReplicationSeed, StreamRole};
use crate::spectral::SpectralBasis;

/// Samples per level and coefficient counts after each level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    n_levels: Vec<u64>,
    m_levels: Vec<usize>,
}

impl Schedule {
    /// Checks that the counts have equal length, `m` is nondecreasing, a
    /// level without samples leaves `m` unchanged, a level with samples
    /// estimates at least one coefficient, and the total fits in a `u64`.
    pub fn new(n_levels: Vec<u64>, m_levels: Vec<usize>) -> Result<Self> {
        if n_levels.len() != m_levels.len() {
            return Err(Error::InvalidSchedule(format!(
                "{} sample counts but {} coefficient counts",
                n_levels.len(),
                m_levels.len()
            )));
        }
        let mut prev_m = 0;
        let mut total: u64 = 0;
        for (j, (&n, &m)) in n_levels.iter().zip(&m_levels).enumerate() {
            let level = j + 1;
            if m < prev_m {
                return Err(Error::InvalidSchedule(format!(
                    "coefficient count decreases at level {level}"
                )));
            }
            if n == 0 && m != prev_m {
                return Err(Error::InvalidSchedule(format!(
                    "level {level} has no samples but raises the coefficient count"
                )));
            }
            if n > 0 && m == 0 {
                return Err(Error::InvalidSchedule(format!(
                    "level {level} has samples but no coefficients to estimate"
                )));
            }
            total = total
                .checked_add(n)
                .ok_or(Error::ScheduleOverflow { level })?;
            prev_m = m;
        }
        Ok(Schedule { n_levels, m_levels })
    }

    pub fn empty() -> Self {
        Schedule {
            n_levels: Vec::new(),
            m_levels: Vec::new(),
        }
    }

    /// Number of levels `k`.
    pub fn levels(&self) -> usize {
        self.n_levels.len()
    }

    pub fn n_levels(&self) -> &[u64] {
        &self.n_levels
    }

    pub fn m_levels(&self) -> &[usize] {
        &self.m_levels
    }

    /// `m_k`, the number of coefficients in the output.
    pub fn final_m(&self) -> usize {
        self.m_levels.last().copied().unwrap_or(0)
    }

    /// `Σ_j n_j`.
    pub fn total_evals(&self) -> u64 {
        self.n_levels.iter().sum()
    }

    /// CSV with columns `j, n_j, m_j`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,n_j,m_j\n");
        for (j, (n, m)) in self.n_levels.iter().zip(&self.m_levels).enumerate() {
            out.push_str(&format!("{},{n},{m}\n", j + 1));
        }
        out
    }
}

/// Output of a run: the approximant and the number of function values used.
#[derive(Clone, Debug)]
pub struct Approximant {
    pub value: CoefficientFunction,
    pub evals_used: u64,
}

impl Approximant {
    /// Coefficient CSV followed by an `# evals_used=` footer.
    pub fn to_csv(&self) -> String {
        let mut out = self.value.to_csv();
        out.push_str(&format!("# evals_used={}\n", self.evals_used));
        out
    }
}

/// Constants of the explicit error bounds for smoothness parameter `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundConstants {
    pub r: f64,
    /// `⌈2r+1⌉`
    pub ell_r: u64,
    /// `2^{r⌈2r+3⌉+1}`
    pub c_r: f64,
    /// `2^{r(ℓ_r+1)+1}`
    pub cbar_r: f64,
    /// `2^{r⌈2r+4⌉+3/2}`
    pub ctilde_r: f64,
}

fn check_r(r: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "r must be a nonnegative real, got {r}"
        )));
    }
    Ok(())
}

pub fn bound_constants(r: f64) -> Result<BoundConstants> {
    check_r(r)?;
    let ell = (2.0 * r + 1.0).ceil();
    Ok(BoundConstants {
        r,
        ell_r: ell as u64,
        c_r: (r * (2.0 * r + 3.0).ceil() + 1.0).exp2(),
        cbar_r: (r * (ell + 1.0) + 1.0).exp2(),
        ctilde_r: (r * (2.0 * r + 4.0).ceil() + 1.5).exp2(),
    })
}

/// Runs all levels of the schedule and returns `M^(k) f`.
pub fn multilevel_run(
    f: &dyn Evaluable,
    basis: &Arc<SpectralBasis>,
    schedule: &Schedule,
    seed: &ReplicationSeed,
) -> Result<Approximant> {
    let mut last = None;
    run_levels(f, basis, schedule, seed, |a| last = Some(a))?;
    Ok(last.unwrap_or_else(|| Approximant {
        value: CoefficientFunction::zero(basis.clone()),
        evals_used: 0,
    }))
}

/// All intermediate approximants `M^(0) f, …, M^(k) f` of one run.
pub fn multilevel_trace(
    f: &dyn Evaluable,
    basis: &Arc<SpectralBasis>,
    schedule: &Schedule,
    seed: &ReplicationSeed,
) -> Result<Vec<Approximant>> {
    let mut trace = vec![Approximant {
        value: CoefficientFunction::zero(basis.clone()),
        evals_used: 0,
    }];
    run_levels(f, basis, schedule, seed, |a| trace.push(a))?;
    Ok(trace)
}

fn run_levels(
    f: &dyn Evaluable,
    basis: &Arc<SpectralBasis>,
    schedule: &Schedule,
    seed: &ReplicationSeed,
    mut emit: impl FnMut(Approximant),
) -> Result<()> {
    if f.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: f.dim(),
        });
    }
    if schedule.final_m() > basis.len() {
        return Err(Error::InvalidSchedule(format!(
            "schedule needs {} coefficients but the basis has {}",
            schedule.final_m(),
            basis.len()
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    let fourier = basis.is_fourier();
    let mut coeffs: Vec<Complex64> = Vec::new();
    let mut evals = 0u64;
    for (j, (&n_j, &m_j)) in schedule.n_levels.iter().zip(&schedule.m_levels).enumerate() {
        if n_j > 0 {
            let mut rng = seed.stream(StreamRole::Level, (j + 1) as u64);
            let width = m_j.max(coeffs.len());
            let mut ev = basis.evaluator(width);
            let mut values = vec![zero; width];
            let mut acc = vec![zero; m_j];
            for _ in 0..n_j {
                let x = sample_mu_m(basis, m_j, &mut rng)?;
                ev.fill(&x, &mut values);
                let current: Complex64 = coeffs.iter().zip(&values).map(|(c, b)| c * b).sum();
                let residual = f.evaluate(&x) - current;
                evals += 1;
                let u = if fourier {
                    1.0
                } else {
                    values[..m_j].iter().map(|b| b.norm_sqr()).sum::<f64>() / m_j as f64
                };
                // u = 0 forces b_j(x) = 0 for all j ≤ m_j: the sample contributes nothing
                if u == 0.0 {
                    continue;
                }
                let w = residual / u;
                for (a, b) in acc.iter_mut().zip(&values[..m_j]) {
                    *a += w * b.conj();
                }
            }
            coeffs.resize(m_j, zero);
            let inv = 1.0 / n_j as f64;
            for (c, a) in coeffs.iter_mut().zip(acc) {
                *c += a * inv;
            }
        }
        emit(Approximant {
            value: CoefficientFunction::new(basis.clone(), coeffs.clone())?,
            evals_used: evals,
        });
    }
    Ok(())
}

/// Doubling schedule: with `ℓ = ⌈2r+1⌉` and `2^k ≤ n < 2^{k+1}`, levels
/// `j ≤ ℓ` are empty and level `j > ℓ` uses `2^{j-1}` points for
/// `min(2^{j-1-ℓ}, N)` coefficients. Uses `max(0, 2^k − 2^ℓ) < n` points.
pub fn schedule_a_n_r(n: u64, r: f64, basis_len: usize) -> Result<Schedule> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let ell = bound_constants(r)?.ell_r;
    let k = u64::from(63 - n.leading_zeros());
    let mut n_levels = Vec::with_capacity(k as usize);
    let mut m_levels = Vec::with_capacity(k as usize);
    for j in 1..=k {
        if j <= ell {
            n_levels.push(0);
            m_levels.push(0);
        } else {
            n_levels.push(1u64 << (j - 1));
            let m = 1u64 << (j - 1 - ell);
            m_levels.push(usize::try_from(m).unwrap_or(usize::MAX).min(basis_len));
        }
    }
    Schedule::new(n_levels, m_levels)
}

/// `A_n^r f`.
pub fn a_n_r(
    f: &dyn Evaluable,
    basis: &Arc<SpectralBasis>,
    n: u64,
    r: f64,
    seed: &ReplicationSeed,
) -> Result<Approximant> {
    let schedule = schedule_a_n_r(n, r, basis.len())?;
    multilevel_run(f, basis, &schedule, seed)
}

fn power_of_two_exponent(m: u64) -> Result<u32> {
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(m));
    }
    Ok(m.trailing_zeros())
}

fn epsilon_ratio(epsilon: &dyn Fn(u64) -> f64, num: u64, den: u64) -> Result<f64> {
    let (a, b) = (epsilon(num), epsilon(den));
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be positive and finite (ε({num}) = {a}, ε({den}) = {b})"
        )));
    }
    Ok((a / b).ceil())
}

/// Schedule of `Q_m` for `m = 2^k`: `k+1` levels with `m_j = 2^{j-1}` and
/// `n_j = 2^j ⌈ε(⌊2^{j-2}⌋)/ε(2^{j-1})⌉`. `ε(0)` is always queried.
pub fn schedule_q_m(epsilon: &dyn Fn(u64) -> f64, m: u64) -> Result<Schedule> {
    let k = power_of_two_exponent(m)?;
    let mut n_levels = Vec::with_capacity(k as usize + 1);
    let mut m_levels = Vec::with_capacity(k as usize + 1);
    for j in 1..=u64::from(k) + 1 {
        let ratio = epsilon_ratio(epsilon, (1u64 << (j - 1)) >> 1, 1u64 << (j - 1))?;
        let level = j as usize;
        if ratio >= u64::MAX as f64 {
            return Err(Error::ScheduleOverflow { level });
        }
        let n_j = (1u64 << j)
            .checked_mul(ratio as u64)
            .ok_or(Error::ScheduleOverflow { level })?;
        n_levels.push(n_j);
        m_levels.push(1usize << (j - 1));
    }
    Schedule::new(n_levels, m_levels)
}

/// `4m · max_{0≤j≤k} ⌈ε(⌊2^{j-1}⌋)/ε(2^j)⌉`, the evaluation budget of `Q_m`.
pub fn q_m_cost_bound(epsilon: &dyn Fn(u64) -> f64, m: u64) -> Result<f64> {
    let k = power_of_two_exponent(m)?;
    let mut worst: f64 = 0.0;
    for j in 0..=k {
        worst = worst.max(epsilon_ratio(epsilon, (1u64 << j) >> 1, 1u64 << j)?);
    }
    Ok(4.0 * m as f64 * worst)
}

/// `Q_m f`: mean squared error at most `2ε(m)` whenever
/// `‖f − P_j f‖₂² ≤ ε(j)` for all `j`.
pub fn q_m(
    f: &dyn Evaluable,
    basis: &Arc<SpectralBasis>,
    epsilon: &dyn Fn(u64) -> f64,
    m: u64,
    seed: &ReplicationSeed,
) -> Result<Approximant> {
    let schedule = schedule_q_m(epsilon, m)?;
    multilevel_run(f, basis, &schedule, seed)
}
