//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails.

use std::f64::consts::FRAC_1_SQRT_2;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use mlapprox::approximation::{
    a_n_r, bound_constants, multilevel_run, multilevel_trace, q_m, q_m_cost_bound, schedule_a_n_r,
    schedule_q_m, Schedule,
};
use mlapprox::error::Error;
use mlapprox::experiment::{estimate_mse, log_log_slope, replicate, run_convergence, ExperimentConfig, MseEstimate};
use mlapprox::function::{exact_l2_error, hard_instance, random_unit_ball, weak_instance, CoefficientFunction};
use mlapprox::integration::{direct_simulation, direct_simulation_bound, integral_of, integration_bound, q_2n_r};
use mlapprox::sampling::{ReplicationSeed, StreamRole};
use mlapprox::spectral::{enumerate_basis, SpectralBasis, WeightSpec};
use mlapprox::Complex64;
use num_bigint::BigUint;

type Outcome = Result<String, String>;
type Epsilon = Box<dyn Fn(u64) -> f64>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    format!("error: {e}")
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn index_of(basis: &SpectralBasis, k: &[i64]) -> usize {
    basis
        .entries()
        .iter()
        .position(|e| e.frequency.as_slice() == k)
        .expect("frequency in basis")
}

fn exact_recovery() -> Outcome {
    let basis = Arc::new(enumerate_basis(&WeightSpec::mixed(1, 1), 4096).map_err(fail)?);
    let b1 = CoefficientFunction::basis_function(basis.clone(), 0).map_err(fail)?;
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for r in [0.0, 1.0] {
        let ell = bound_constants(r).map_err(fail)?.ell_r;
        // the schedule depends on n only through ⌊log2 n⌋
        for k in ell + 1..=12 {
            for n in [1u64 << k, (1u64 << (k + 1)) - 1] {
                for seed in [0, 1, 0xdead_beef] {
                    let a = a_n_r(&b1, &basis, n, r, &ReplicationSeed::new(seed, 7)).map_err(fail)?;
                    worst = worst.max(exact_l2_error(&b1, &a.value).map_err(fail)?);
                    runs += 1;
                }
            }
        }
    }
    check(worst <= 1e-12, format!("{runs} runs, max L2 error {worst:e}"))
}

fn single_level_oracle() -> Outcome {
    let basis = Arc::new(enumerate_basis(&WeightSpec::mixed(1, 1), 4).map_err(fail)?);
    let f = CoefficientFunction::new(basis.clone(), vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]).map_err(fail)?;
    let schedule = Schedule::new(vec![4], vec![1]).map_err(fail)?;
    // c_1 estimate has variance (‖f‖² − |c_1|²)/n = 0.5/4; the dropped c_2 adds 0.5
    let oracle = 0.5 / 4.0 + 0.5;
    let est = estimate_mse(&f, |f, s| multilevel_run(f, &basis, &schedule, s).map(|a| a.value), 10_000, 2, 1)
        .map_err(fail)?;
    let z = (est.mean - oracle) / est.stderr;
    check(
        z.abs() <= 4.0,
        format!("MSE {:.5} ± {:.5}, oracle {oracle}, z = {z:.2}", est.mean, est.stderr),
    )
}

/// `⌈ε(⌊2^{j-2}⌋)/ε(2^{j-1})⌉` in exact arithmetic.
fn exact_ratio(kind: &str, num: u64, den: u64) -> BigUint {
    match kind {
        "2^-m" => BigUint::from(1u8) << (den - num),
        "1/(m+1)" => BigUint::from((den + 1).div_ceil(num + 1)),
        _ => BigUint::from(1u8),
    }
}

fn budget_exactness() -> Outcome {
    let mut checked = 0u64;
    for r in [0.0, 0.5, 1.0, 2.0] {
        let ell = (2.0 * r + 1.0f64).ceil() as u32;
        for n in 1..=1u64 << 14 {
            let s = schedule_a_n_r(n, r, usize::MAX).map_err(fail)?;
            let k = 63 - n.leading_zeros();
            let expected = (1u64 << k).saturating_sub(1u64 << ell);
            if s.total_evals() != expected || s.total_evals() > n {
                return Err(format!("A_n^r r={r} n={n}: {} evals, expected {expected}", s.total_evals()));
            }
            checked += 1;
        }
    }
    // the run's own counter, once per distinct schedule
    let basis = Arc::new(enumerate_basis(&WeightSpec::mixed(1, 1), 2048).map_err(fail)?);
    let f = CoefficientFunction::basis_function(basis.clone(), 1).map_err(fail)?;
    for r in [0.0, 0.5, 1.0, 2.0] {
        for k in 0..=14 {
            let n = 1u64 << k;
            let a = a_n_r(&f, &basis, n, r, &ReplicationSeed::new(3, k)).map_err(fail)?;
            let s = schedule_a_n_r(n, r, basis.len()).map_err(fail)?;
            if a.evals_used != s.total_evals() || a.evals_used > n {
                return Err(format!("run r={r} n={n} used {}", a.evals_used));
            }
        }
    }

    let epsilons: [(&str, Epsilon); 3] = [
        ("2^-m", Box::new(|j| (-(j as f64)).exp2())),
        ("1/(m+1)", Box::new(|j| 1.0 / (j as f64 + 1.0))),
        ("const", Box::new(|_| 0.25)),
    ];
    let mut overflowed = 0;
    let mut ran = 0;
    for (kind, eps) in &epsilons {
        for k in 0..=10u64 {
            let m = 1u64 << k;
            let mut total = BigUint::from(0u8);
            let mut worst = BigUint::from(0u8);
            for j in 1..=k + 1 {
                let ratio = exact_ratio(kind, (1u64 << (j - 1)) >> 1, 1u64 << (j - 1));
                total += (BigUint::from(1u8) << j) * &ratio;
                worst = worst.max(ratio);
            }
            let bound = BigUint::from(4 * m) * &worst;
            if total > bound {
                return Err(format!("{kind} m={m}: formula cost {total} exceeds {bound}"));
            }
            match schedule_q_m(eps.as_ref(), m) {
                Ok(s) => {
                    if BigUint::from(s.total_evals()) != total {
                        return Err(format!("{kind} m={m}: {} evals, expected {total}", s.total_evals()));
                    }
                    let b = q_m_cost_bound(eps.as_ref(), m).map_err(fail)?;
                    if BigUint::from(b as u64) != bound {
                        return Err(format!("{kind} m={m}: cost bound {b}, expected {bound}"));
                    }
                    if s.total_evals() <= 1 << 16 {
                        let a = q_m(&f, &basis, eps.as_ref(), m, &ReplicationSeed::new(4, m)).map_err(fail)?;
                        if a.evals_used != s.total_evals() {
                            return Err(format!("{kind} m={m}: run used {}", a.evals_used));
                        }
                        ran += 1;
                    }
                }
                Err(Error::ScheduleOverflow { .. }) if total.bits() > 64 => overflowed += 1,
                Err(e) => return Err(format!("{kind} m={m}: {e}")),
            }
        }
    }
    check(
        true,
        format!("{checked} A_n^r schedules; 33 Q_m cases exact ({ran} run, {overflowed} exceed u64 and are refused)"),
    )
}

fn lemma_recursion() -> Outcome {
    let basis = Arc::new(enumerate_basis(&WeightSpec::mixed(1, 2), 256).map_err(fail)?);
    let n = 512;
    let schedule = schedule_a_n_r(n, 1.0, basis.len()).map_err(fail)?;
    let reps = 2000;
    let mut worst_margin = f64::INFINITY;
    let mut checks = 0;
    for fi in 0..5 {
        let mut rng = ReplicationSeed::new(40, fi).stream(StreamRole::Target, 0);
        let f = random_unit_ball(basis.clone(), basis.len(), &mut rng).map_err(fail)?;
        let errors = replicate(reps, 41 + fi, 1, |s| {
            let trace = multilevel_trace(&f, &basis, &schedule, s)?;
            trace
                .iter()
                .map(|a| exact_l2_error(&f, &a.value).map(|e| e * e))
                .collect::<mlapprox::Result<Vec<f64>>>()
        })
        .map_err(fail)?;
        for (j, (&n_j, &m_j)) in schedule.n_levels().iter().zip(schedule.m_levels()).enumerate() {
            if n_j == 0 {
                continue;
            }
            let level = |i: usize| -> mlapprox::Result<MseEstimate> {
                MseEstimate::from_samples(&errors.iter().map(|e| e[i]).collect::<Vec<_>>())
            };
            let prev = level(j).map_err(fail)?;
            let cur = level(j + 1).map_err(fail)?;
            let q = m_j as f64 / n_j as f64;
            let rhs = q * prev.mean + basis.sigma(m_j).powi(2);
            let se = (cur.stderr.powi(2) + (q * prev.stderr).powi(2)).sqrt();
            let margin = (rhs + 4.0 * se - cur.mean) / rhs;
            worst_margin = worst_margin.min(margin);
            checks += 1;
            if margin < 0.0 {
                return Err(format!(
                    "f{fi} level {}: MSE {:.4e} > {q}·{:.4e} + σ² {:.4e} + 4·{se:.2e}",
                    j + 1,
                    cur.mean,
                    prev.mean,
                    basis.sigma(m_j).powi(2)
                ));
            }
        }
    }
    check(true, format!("{checks} level checks, smallest relative slack {worst_margin:.3}"))
}

fn theorem_bound_and_lower_bound() -> (Outcome, Outcome) {
    let run = || -> Result<(String, String, bool, bool), String> {
        let basis = Arc::new(enumerate_basis(&WeightSpec::power_law(1.0, 4096), 4096).map_err(fail)?);
        let c_1 = bound_constants(1.0).map_err(fail)?.c_r;
        let randoms: Vec<CoefficientFunction> = (0..20)
            .map(|i| {
                let mut rng = ReplicationSeed::new(50, i).stream(StreamRole::Target, 0);
                random_unit_ball(basis.clone(), 256, &mut rng)
            })
            .collect::<mlapprox::Result<_>>()
            .map_err(fail)?;
        let (mut upper_ok, mut lower_ok) = (true, true);
        let (mut worst_upper, mut worst_lower) = (0.0f64, f64::INFINITY);
        let mut k = 4;
        while 1u64 << k <= 2048 {
            let n = 1u64 << k;
            let m_k = schedule_a_n_r(n, 1.0, basis.len()).map_err(fail)?.final_m();
            let bound = c_1 * basis.singular_value(n as usize);
            let hard = hard_instance(basis.clone(), m_k).map_err(fail)?;
            let alg = |f: &CoefficientFunction, s: &ReplicationSeed| a_n_r(f, &basis, n, 1.0, s).map(|a| a.value);
            let mut targets = vec![&hard];
            targets.extend(randoms.iter());
            for (i, f) in targets.into_iter().enumerate() {
                let est = estimate_mse(f, alg, 500, 60 + n + 1000 * i as u64, 1).map_err(fail)?;
                let upper = (est.mean + 4.0 * est.stderr).sqrt() / bound;
                worst_upper = worst_upper.max(upper);
                upper_ok &= upper <= 1.0;
                if i == 0 {
                    let floor = basis.sigma(m_k).powi(2);
                    let lower = (est.mean + 4.0 * est.stderr) / floor;
                    worst_lower = worst_lower.min(lower);
                    lower_ok &= lower >= 1.0;
                }
            }
            k += 1;
        }
        Ok((
            format!("max (MSE + 4 stderr)^(1/2) / (64/n) = {worst_upper:.4}"),
            format!("min (MSE + 4 stderr) / σ(m_k+1)² = {worst_lower:.4}"),
            upper_ok,
            lower_ok,
        ))
    };
    match run() {
        Ok((u, l, uo, lo)) => (check(uo, u), check(lo, l)),
        Err(e) => (Err(e.clone()), Err(e)),
    }
}

fn convergence_rate() -> Outcome {
    let cfg = ExperimentConfig::parse(
        "spec = mixed\nr = 1\nd = 1\nbasis_size = 4097\nalgorithm = a_n_r\nn_grid = 2^6..2^12\nreplications = 500\nseed = 70\ntarget = hard_instance\n",
    )
    .map_err(fail)?;
    let records = run_convergence(&cfg).map_err(fail)?;
    let xs: Vec<f64> = records.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.rmse()).collect();
    let slope = log_log_slope(&xs, &ys);
    check((-1.3..=-0.8).contains(&slope), format!("fitted slope {slope:.4}"))
}

fn integration_checks() -> Outcome {
    let basis = Arc::new(enumerate_basis(&WeightSpec::mixed(1, 2), 64).map_err(fail)?);
    let mut rng = ReplicationSeed::new(80, 0).stream(StreamRole::Target, 0);
    let f = random_unit_ball(basis.clone(), 64, &mut rng).map_err(fail)?;
    let exact = integral_of(&f).map_err(fail)?;
    let n = 64;
    let runs = replicate(100_000, 81, 1, |s| {
        let q = q_2n_r(&f, &basis, n, 1.0, s)?;
        let a = a_n_r(&f, &basis, n, 1.0, s)?;
        Ok((q.value, exact_l2_error(&f, &a.value)?.powi(2)))
    })
    .map_err(fail)?;
    let re = MseEstimate::from_samples(&runs.iter().map(|r| r.0.re).collect::<Vec<_>>()).map_err(fail)?;
    let im = MseEstimate::from_samples(&runs.iter().map(|r| r.0.im).collect::<Vec<_>>()).map_err(fail)?;
    let z_re = (re.mean - exact.re) / re.stderr;
    let z_im = (im.mean - exact.im) / im.stderr;
    let q_mse = MseEstimate::from_samples(&runs.iter().map(|r| (r.0 - exact).norm_sqr()).collect::<Vec<_>>())
        .map_err(fail)?;
    let a_mse = MseEstimate::from_samples(&runs.iter().map(|r| r.1).collect::<Vec<_>>()).map_err(fail)?;
    let inv = 1.0 / n as f64;
    let se = (q_mse.stderr.powi(2) + (inv * a_mse.stderr).powi(2)).sqrt();
    let variance_ok = q_mse.mean <= inv * a_mse.mean + 4.0 * se;

    // smooth trigonometric polynomial in d = 1
    let b1 = Arc::new(enumerate_basis(&WeightSpec::mixed(1, 1), 64).map_err(fail)?);
    let mut coeffs = vec![c(0.0); b1.len()];
    coeffs[index_of(&b1, &[0])] = c(1.0);
    coeffs[index_of(&b1, &[1])] = Complex64::new(0.5, -0.2);
    coeffs[index_of(&b1, &[-2])] = c(0.3);
    coeffs[index_of(&b1, &[3])] = Complex64::new(0.0, 0.1);
    let g = CoefficientFunction::new(b1.clone(), coeffs).map_err(fail)?;
    let g_exact = integral_of(&g).map_err(fail)?;
    let m = 256;
    let pair = replicate(10_000, 82, 1, |s| {
        let q = q_2n_r(&g, &b1, m, 1.0, s)?;
        let d = direct_simulation(&g, 2 * m, s)?;
        Ok(((q.value - g_exact).norm_sqr(), (d.value - g_exact).norm_sqr()))
    })
    .map_err(fail)?;
    let gq = MseEstimate::from_samples(&pair.iter().map(|p| p.0).collect::<Vec<_>>()).map_err(fail)?;
    let gs = MseEstimate::from_samples(&pair.iter().map(|p| p.1).collect::<Vec<_>>()).map_err(fail)?;

    check(
        z_re.abs() <= 4.0 && z_im.abs() <= 4.0 && variance_ok && gq.mean < gs.mean,
        format!(
            "bias z = ({z_re:.3}, {z_im:.3}); MSE(Q) {:.3e} vs MSE(A)/n {:.3e} + 4·{se:.1e}; n=256: MSE(Q) {:.3e} < MSE(S_2n) {:.3e}",
            q_mse.mean,
            inv * a_mse.mean,
            gq.mean,
            gs.mean
        ),
    )
}

fn paper_numbers() -> Outcome {
    let bound = integration_bound(500_000, 8.0, 500).map_err(fail)?;
    let p = 8.0 / (2.0 + 500f64.ln());
    let oracle = (p * (2.0 * p + 4.0).ceil() + 1.0).exp2() * 500_000f64.powf(-p - 0.5);
    let direct = direct_simulation_bound(1_000_000);
    check(
        bound < 5e-7 && (bound - oracle).abs() <= 1e-15 * oracle && direct == 1e-3,
        format!("integration_bound = {bound:.4e}, S_n bound at 10^6 = {direct}"),
    )
}

fn weak_assumption() -> Outcome {
    let basis = Arc::new(enumerate_basis(&WeightSpec::power_law(1.0, 512), 512).map_err(fail)?);
    let f = weak_instance(basis.clone(), basis.len()).map_err(fail)?;
    let eps = |j: u64| basis.sigma(j as usize).powi(2);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for k in 1..=8 {
        let m = 1u64 << k;
        let est = estimate_mse(&f, |f, s| q_m(f, &basis, &eps, m, s).map(|a| a.value), 1000, 90 + m, 1)
            .map_err(fail)?;
        let ratio = (est.mean - 4.0 * est.stderr) / (2.0 * eps(m));
        worst = worst.max(ratio);
        ok &= est.mean <= 2.0 * eps(m) + 4.0 * est.stderr;
    }
    check(ok, format!("max (MSE − 4 stderr) / 2ε(m) = {worst:.4}"))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, outcome: Outcome, start: Instant| {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {id:>2} PASS  {name} [{secs:.1}s]: {d}"),
            Err(d) => {
                failures += 1;
                println!("criterion {id:>2} FAIL  {name} [{secs:.1}s]: {d}");
            }
        }
    };
    let t = Instant::now();
    report(1, "exact recovery", exact_recovery(), t);
    let t = Instant::now();
    report(2, "single-level oracle", single_level_oracle(), t);
    let t = Instant::now();
    report(3, "budget exactness", budget_exactness(), t);
    let t = Instant::now();
    report(4, "level recursion", lemma_recursion(), t);
    let t = Instant::now();
    let (upper, lower) = theorem_bound_and_lower_bound();
    report(5, "error bound c_1 σ(n)", upper, t);
    report(6, "per-instance lower bound", lower, t);
    let t = Instant::now();
    report(7, "convergence rate", convergence_rate(), t);
    let t = Instant::now();
    report(8, "integration", integration_checks(), t);
    let t = Instant::now();
    report(9, "paper numbers", paper_numbers(), t);
    let t = Instant::now();
    report(10, "weak-assumption bound", weak_assumption(), t);
    if failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
