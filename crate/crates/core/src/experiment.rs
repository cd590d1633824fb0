//! Replicated experiments: configuration, MSE estimation, convergence runs.
//!
//! Configuration files are flat `key = value` text; `#` starts a comment.
//! Recognised keys are listed on [`ExperimentConfig`]. Every replication
//! derives its random streams from `(seed, replication index)`, so results
//! are identical for any thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::approximation::{
    a_n_r, bound_constants, q_m, schedule_a_n_r, schedule_q_m, Schedule,
};
use crate::error::{Error, Result};
use crate::function::{
    exact_l2_error, hard_instance, random_unit_ball, weak_instance, CoefficientFunction,
};
use crate::integration::{direct_simulation, direct_simulation_bound, integral_of, q_2n_r};
use crate::sampling::{ReplicationSeed, StreamRole};
use crate::spectral::{enumerate_basis, SpectralBasis, WeightSpec};

/// Mean and standard error of replicated squared errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MseEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl MseEstimate {
    /// Sample mean and `std/√R` (unbiased sample variance), summed in index
    /// order.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InvalidInput(
                "at least two replications are needed for a standard error".into(),
            ));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(MseEstimate {
            mean,
            stderr: (var / n as f64).sqrt(),
        })
    }

    pub fn rmse(&self) -> f64 {
        self.mean.sqrt()
    }
}

/// Evaluates `trial` for replications `0..replications`, on `threads` worker
/// threads when `threads > 1`. Output order is replication order.
pub fn replicate<T, F>(replications: u64, seed: u64, threads: usize, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&ReplicationSeed) -> Result<T> + Sync + Send,
{
    let run = |rep: u64| trial(&ReplicationSeed::new(seed, rep));
    if threads <= 1 {
        (0..replications).map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        pool.install(|| (0..replications).into_par_iter().map(run).collect())
    }
}

/// Monte Carlo estimate of `E‖f − A f‖₂²` using exact per-replication errors.
pub fn estimate_mse<A>(
    f: &CoefficientFunction,
    algorithm: A,
    replications: u64,
    seed: u64,
    threads: usize,
) -> Result<MseEstimate>
where
    A: Fn(&CoefficientFunction, &ReplicationSeed) -> Result<CoefficientFunction> + Sync + Send,
{
    let errors = replicate(replications, seed, threads, |s| {
        let g = algorithm(f, s)?;
        Ok(exact_l2_error(f, &g)?.powi(2))
    })?;
    MseEstimate::from_samples(&errors)
}

/// Exact `E‖f − M^(1) f‖₂²` for one level with `m` coefficients and `n`
/// uniform points on a Fourier basis:
/// `Σ_{j≤m} (‖f‖₂² − |c_j|²)/n + Σ_{j>m} |c_j|²`.
pub fn analytic_single_level_mse(f: &CoefficientFunction, m: usize, n: u64) -> Result<f64> {
    if !f.basis().is_fourier() {
        return Err(Error::NotFourier);
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let energy = f.l2_norm().powi(2);
    let variance: f64 = (0..m).map(|j| energy - f.coeff(j).norm_sqr()).sum();
    Ok(variance / n as f64 + f.tail_energy(m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    ANR,
    QM,
    Q2NR,
    DirectSimulation,
}

impl Algorithm {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "a_n_r" => Ok(Algorithm::ANR),
            "q_m" => Ok(Algorithm::QM),
            "q_2n_r" => Ok(Algorithm::Q2NR),
            "direct_simulation" => Ok(Algorithm::DirectSimulation),
            other => Err(Error::config(
                "algorithm",
                format!("unknown algorithm `{other}` (a_n_r, q_m, q_2n_r, direct_simulation)"),
            )),
        }
    }
}

/// Projection error bounds `ε(j)` for `Q_m`.
#[derive(Clone, Debug, PartialEq)]
pub enum EpsilonSpec {
    /// `σ(j+1)²` of the basis.
    SigmaNextSquared,
    /// `2^{-j}`
    InversePowerOfTwo,
    /// `(j+1)^{-1}`
    InverseLinear,
    Constant(f64),
    /// `ε(j)` for `j = 0..len`.
    Table(Vec<f64>),
}

impl EpsilonSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "sigma_next_sq" => Ok(EpsilonSpec::SigmaNextSquared),
            "inv_pow2" => Ok(EpsilonSpec::InversePowerOfTwo),
            "inv_linear" => Ok(EpsilonSpec::InverseLinear),
            "constant" => Ok(EpsilonSpec::Constant(1.0)),
            _ => {
                if let Some(v) = s.strip_prefix("constant:") {
                    return parse_f64("epsilon", v).map(EpsilonSpec::Constant);
                }
                let table = parse_list("epsilon", s, |v| parse_f64("epsilon", v))?;
                Ok(EpsilonSpec::Table(table))
            }
        }
    }

    /// `ε` as a function; values outside a table are NaN and rejected by
    /// the schedule.
    pub fn function(&self, basis: &Arc<SpectralBasis>) -> impl Fn(u64) -> f64 + Sync + Send + '_ {
        let basis = basis.clone();
        move |j: u64| match self {
            EpsilonSpec::SigmaNextSquared => basis.sigma(j as usize).powi(2),
            EpsilonSpec::InversePowerOfTwo => (-(j as f64)).exp2(),
            EpsilonSpec::InverseLinear => 1.0 / (j as f64 + 1.0),
            EpsilonSpec::Constant(c) => *c,
            EpsilonSpec::Table(t) => t.get(j as usize).copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    HardInstance,
    WeakInstance,
    RandomUnitBall,
    File(PathBuf),
}

impl Target {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "hard_instance" => Ok(Target::HardInstance),
            "weak_instance" => Ok(Target::WeakInstance),
            "random_unit_ball" => Ok(Target::RandomUnitBall),
            other => match other.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(Target::File(PathBuf::from(path))),
                _ => Err(Error::config(
                    "target",
                    format!(
                        "unknown target `{other}` (hard_instance, weak_instance, random_unit_ball, file:<path>)"
                    ),
                )),
            },
        }
    }
}

/// Raw `key = value` pairs, later entries overriding earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues(BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            map.insert(key.to_string(), v.trim().to_string());
        }
        Ok(KeyValues(map))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

fn parse_f64(field: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::config(field, format!("`{v}` is not a number")))
}

fn parse_u64(field: &str, v: &str) -> Result<u64> {
    let v = v.trim();
    if let Some(exp) = v.strip_prefix("2^") {
        let e: u32 = exp
            .parse()
            .map_err(|_| Error::config(field, format!("`{v}` is not an integer")))?;
        return 1u64
            .checked_shl(e)
            .filter(|_| e < 64)
            .ok_or_else(|| Error::config(field, format!("`{v}` is too large")));
    }
    v.parse()
        .map_err(|_| Error::config(field, format!("`{v}` is not a nonnegative integer")))
}

fn parse_bool(field: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::config(field, format!("`{other}` is not a boolean"))),
    }
}

fn parse_list<T>(field: &str, v: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::config(field, "empty list"));
    }
    Ok(items)
}

/// `a,b,c` or a power-of-two range `2^a..2^b`.
fn parse_grid(v: &str) -> Result<Vec<u64>> {
    if let Some((lo, hi)) = v.split_once("..") {
        let (lo, hi) = (parse_u64("n_grid", lo)?, parse_u64("n_grid", hi)?);
        if !(lo.is_power_of_two() && hi.is_power_of_two() && lo <= hi) {
            return Err(Error::config(
                "n_grid",
                "ranges must run between powers of two, e.g. 2^4..2^12",
            ));
        }
        let mut out = Vec::new();
        let mut n = lo;
        while n <= hi {
            out.push(n);
            if n == hi {
                break;
            }
            n *= 2;
        }
        return Ok(out);
    }
    parse_list("n_grid", v, |s| parse_u64("n_grid", s))
}

fn sobolev_order(field: &str, r: f64) -> Result<u32> {
    if r < 0.0 || r.fract() != 0.0 || r > u32::MAX as f64 {
        return Err(Error::config(
            field,
            format!("Sobolev smoothness must be a nonnegative integer, got {r}"),
        ));
    }
    Ok(r as u32)
}

fn parse_factor(v: &str) -> Result<WeightSpec> {
    let (kind, r) = v
        .split_once(':')
        .ok_or_else(|| Error::config("factors", format!("expected kind:r, found `{v}`")))?;
    let r = sobolev_order("factors", parse_f64("factors", r)?)?;
    match kind.trim() {
        "mixed" | "isotropic" => Ok(WeightSpec::MixedSobolev {
            r,
            d: 1,
            angular: true,
        }),
        other => Err(Error::config("factors", format!("unknown factor kind `{other}`"))),
    }
}

/// Typed experiment configuration.
///
/// | key | meaning | default |
/// |---|---|---|
/// | `spec` | `mixed`, `isotropic`, `tensor`, `explicit` | `mixed` |
/// | `r` | Sobolev smoothness (integer) | `1` |
/// | `d` | dimension | `1` |
/// | `angular` | include `2π` in derivatives | `true` |
/// | `factors` | tensor factors, e.g. `mixed:1,mixed:2` | |
/// | `sigma` | explicit singular values, comma separated | |
/// | `sigma_power` | explicit `σ(j) = j^{-p}` for `j ≤ basis_size` | |
/// | `basis_size` | truncation `N` | largest grid value + 1 |
/// | `algorithm` | `a_n_r`, `q_m`, `q_2n_r`, `direct_simulation` | `a_n_r` |
/// | `order` | the `r` of `A_n^r` (real) | `r` |
/// | `epsilon` | `sigma_next_sq`, `inv_pow2`, `inv_linear`, `constant[:c]`, or a table | `sigma_next_sq` |
/// | `n_grid` | `16,32,64` or `2^4..2^12` | `2^4..2^10` |
/// | `replications` | `R ≥ 2` | `100` |
/// | `seed` | 64-bit seed | `1` |
/// | `target` | `hard_instance`, `weak_instance`, `random_unit_ball`, `file:<csv>` | `random_unit_ball` |
/// | `target_len` | coefficients of generated targets | `basis_size` |
/// | `threads` | worker threads | `1` |
/// | `output` | CSV path (stdout when absent) | |
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub spec: WeightSpec,
    pub basis_size: usize,
    pub algorithm: Algorithm,
    pub order: f64,
    pub epsilon: EpsilonSpec,
    pub n_grid: Vec<u64>,
    pub replications: u64,
    pub seed: u64,
    pub target: Target,
    pub target_len: Option<usize>,
    pub threads: usize,
    pub output: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "spec",
    "r",
    "d",
    "angular",
    "factors",
    "sigma",
    "sigma_power",
    "basis_size",
    "algorithm",
    "order",
    "epsilon",
    "n_grid",
    "replications",
    "seed",
    "target",
    "target_len",
    "threads",
    "output",
];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_key_values(&KeyValues::parse(text)?)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        if let Some(unknown) = kv.0.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(Error::config(unknown, "unknown key"));
        }
        let get = |k: &str| kv.get(k);

        let n_grid = parse_grid(get("n_grid").unwrap_or("2^4..2^10"))?;
        if n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("n_grid", "grid must be strictly increasing"));
        }
        if n_grid[0] == 0 {
            return Err(Error::config("n_grid", "grid values must be positive"));
        }
        let max_n = *n_grid.last().expect("grid is nonempty");
        let basis_size = match get("basis_size") {
            Some(v) => parse_u64("basis_size", v)? as usize,
            None => (max_n as usize).saturating_add(1),
        };
        if basis_size == 0 {
            return Err(Error::config("basis_size", "must be at least 1"));
        }

        let r = match get("r") {
            Some(v) => parse_f64("r", v)?,
            None => 1.0,
        };
        let d = match get("d") {
            Some(v) => parse_u64("d", v)? as usize,
            None => 1,
        };
        let angular = match get("angular") {
            Some(v) => parse_bool("angular", v)?,
            None => true,
        };
        let spec = match get("spec").unwrap_or("mixed") {
            "mixed" => WeightSpec::MixedSobolev {
                r: sobolev_order("r", r)?,
                d,
                angular,
            },
            "isotropic" => WeightSpec::IsotropicSobolev {
                r: sobolev_order("r", r)?,
                d,
                angular,
            },
            "tensor" => {
                let factors = get("factors")
                    .ok_or_else(|| Error::config("factors", "required for spec = tensor"))?;
                let mut factors = parse_list("factors", factors, parse_factor)?;
                for f in &mut factors {
                    if let WeightSpec::MixedSobolev { angular: a, .. } = f {
                        *a = angular;
                    }
                }
                WeightSpec::TensorProduct(factors)
            }
            "explicit" => {
                let sigma = match (get("sigma"), get("sigma_power")) {
                    (Some(s), None) => parse_list("sigma", s, |v| parse_f64("sigma", v))?,
                    (None, Some(p)) => {
                        let p = parse_f64("sigma_power", p)?;
                        (1..=basis_size).map(|j| (j as f64).powf(-p)).collect()
                    }
                    _ => {
                        return Err(Error::config(
                            "sigma",
                            "explicit spectra need exactly one of `sigma` or `sigma_power`",
                        ))
                    }
                };
                WeightSpec::ExplicitSigma { sigma, d }
            }
            other => return Err(Error::config("spec", format!("unknown spec `{other}`"))),
        };
        spec.validate()
            .map_err(|e| Error::config("spec", e.to_string()))?;

        let order = match get("order") {
            Some(v) => parse_f64("order", v)?,
            None => r,
        };
        if !(order >= 0.0 && order.is_finite()) {
            return Err(Error::config("order", "must be a nonnegative real"));
        }
        let replications = match get("replications") {
            Some(v) => parse_u64("replications", v)?,
            None => 100,
        };
        if replications < 2 {
            return Err(Error::config("replications", "must be at least 2"));
        }
        let algorithm = Algorithm::parse(get("algorithm").unwrap_or("a_n_r"))?;
        if algorithm == Algorithm::QM {
            if let Some(bad) = n_grid.iter().find(|n| !n.is_power_of_two()) {
                return Err(Error::config(
                    "n_grid",
                    format!("q_m needs powers of two, found {bad}"),
                ));
            }
        }
        Ok(ExperimentConfig {
            spec,
            basis_size,
            algorithm,
            order,
            epsilon: EpsilonSpec::parse(get("epsilon").unwrap_or("sigma_next_sq"))?,
            n_grid,
            replications,
            seed: match get("seed") {
                Some(v) => parse_u64("seed", v)?,
                None => 1,
            },
            target: Target::parse(get("target").unwrap_or("random_unit_ball"))?,
            target_len: get("target_len")
                .map(|v| parse_u64("target_len", v).map(|t| t as usize))
                .transpose()?,
            threads: match get("threads") {
                Some(v) => (parse_u64("threads", v)? as usize).max(1),
                None => 1,
            },
            output: get("output").map(PathBuf::from),
        })
    }

    pub fn basis(&self) -> Result<Arc<SpectralBasis>> {
        Ok(Arc::new(enumerate_basis(&self.spec, self.basis_size)?))
    }

    fn target_len(&self, basis: &SpectralBasis) -> Result<usize> {
        let s = self.target_len.unwrap_or(basis.len());
        if s == 0 || s > basis.len() {
            return Err(Error::config(
                "target_len",
                format!("must lie in 1..={}", basis.len()),
            ));
        }
        Ok(s)
    }

    /// The target function; `m` is the coefficient count of the method's
    /// output, used by `hard_instance`.
    pub fn target_function(&self, basis: &Arc<SpectralBasis>, m: usize) -> Result<CoefficientFunction> {
        match &self.target {
            Target::HardInstance => hard_instance(basis.clone(), m)
                .map_err(|_| Error::config("basis_size", format!("hard instance needs N > {m}"))),
            Target::WeakInstance => weak_instance(basis.clone(), self.target_len(basis)?),
            Target::RandomUnitBall => {
                let mut rng = ReplicationSeed::new(self.seed, 0).stream(StreamRole::Target, 0);
                random_unit_ball(basis.clone(), self.target_len(basis)?, &mut rng)
            }
            Target::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                CoefficientFunction::from_csv(basis.clone(), &text)
            }
        }
    }
}

/// One row of a convergence study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunRecord {
    pub n: u64,
    pub replications: u64,
    pub mse_mean: f64,
    pub mse_stderr: f64,
    pub sigma_next: f64,
    pub bound: f64,
    pub evals_used: u64,
}

impl RunRecord {
    pub fn rmse(&self) -> f64 {
        self.mse_mean.sqrt()
    }
}

pub const RUN_RECORD_HEADER: &str = "n,R,mse_mean,mse_stderr,rmse,sigma_next,bound,evals_used";

pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RUN_RECORD_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.replications,
            r.mse_mean,
            r.mse_stderr,
            r.rmse(),
            r.sigma_next,
            r.bound,
            r.evals_used
        );
    }
    out
}

fn singular_value_at(basis: &SpectralBasis, n: u64) -> Result<f64> {
    if n == 0 || n as usize > basis.len() {
        return Err(Error::config(
            "basis_size",
            format!("σ({n}) is needed for the bound but the basis has {} entries", basis.len()),
        ));
    }
    Ok(basis.singular_value(n as usize))
}

/// Runs the configured algorithm for every `n` in the grid.
///
/// For `q_m` the grid values are the output dimensions `m`; for `q_2n_r`
/// they are the `n` of `Q_{2n}^r` (budget `2n`); the error of integration
/// methods is `|I(f) − Q f|²`. The `bound` column is a root-mean-square
/// bound: `c_r σ(n)`, `(2ε(m))^{1/2}`, `c_r n^{-1/2} σ(n)` or `n^{-1/2}`.
pub fn run_convergence(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let basis = config.basis()?;
    let consts = bound_constants(config.order)?;
    let mut records = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let seed = config.seed.wrapping_add(n);
        let record = match config.algorithm {
            Algorithm::ANR => {
                let schedule = schedule_a_n_r(n, config.order, basis.len())?;
                let f = config.target_function(&basis, schedule.final_m())?;
                let order = config.order;
                let est = estimate_mse(
                    &f,
                    |f, s| a_n_r(f, &basis, n, order, s).map(|a| a.value),
                    config.replications,
                    seed,
                    config.threads,
                )?;
                RunRecord {
                    n,
                    replications: config.replications,
                    mse_mean: est.mean,
                    mse_stderr: est.stderr,
                    sigma_next: basis.sigma(schedule.final_m()),
                    bound: consts.c_r * singular_value_at(&basis, n)?,
                    evals_used: schedule.total_evals(),
                }
            }
            Algorithm::QM => {
                let eps = config.epsilon.function(&basis);
                let schedule = schedule_q_m(&eps, n)?;
                let f = config.target_function(&basis, n as usize)?;
                let est = estimate_mse(
                    &f,
                    |f, s| q_m(f, &basis, &eps, n, s).map(|a| a.value),
                    config.replications,
                    seed,
                    config.threads,
                )?;
                RunRecord {
                    n,
                    replications: config.replications,
                    mse_mean: est.mean,
                    mse_stderr: est.stderr,
                    sigma_next: basis.sigma(n as usize),
                    bound: (2.0 * eps(n)).sqrt(),
                    evals_used: schedule.total_evals(),
                }
            }
            Algorithm::Q2NR | Algorithm::DirectSimulation => {
                let direct = config.algorithm == Algorithm::DirectSimulation;
                let schedule = if direct {
                    Schedule::empty()
                } else {
                    schedule_a_n_r(n, config.order, basis.len())?
                };
                let f = config.target_function(&basis, schedule.final_m())?;
                let exact = integral_of(&f)?;
                let order = config.order;
                let errors = replicate(config.replications, seed, config.threads, |s| {
                    let est = if direct {
                        direct_simulation(&f, n, s)?
                    } else {
                        q_2n_r(&f, &basis, n, order, s)?
                    };
                    Ok(((est.value - exact).norm_sqr(), est.evals_used))
                })?;
                let sq: Vec<f64> = errors.iter().map(|e| e.0).collect();
                let est = MseEstimate::from_samples(&sq)?;
                let evals = errors.iter().map(|e| e.1).max().unwrap_or(0);
                let bound = if direct {
                    direct_simulation_bound(n)
                } else {
                    consts.c_r * singular_value_at(&basis, n)? / (n as f64).sqrt()
                };
                RunRecord {
                    n,
                    replications: config.replications,
                    mse_mean: est.mean,
                    mse_stderr: est.stderr,
                    sigma_next: basis.sigma(schedule.final_m()),
                    bound,
                    evals_used: evals,
                }
            }
        };
        records.push(record);
    }
    Ok(records)
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Replicated comparison of `Q_{2n}^r` with direct simulation on `2n` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationComparison {
    pub n: u64,
    pub replications: u64,
    pub exact: Complex64,
    pub q_mean: Complex64,
    pub q_mse: MseEstimate,
    pub s_mse: MseEstimate,
    pub q_evals: u64,
    pub s_evals: u64,
}

pub const INTEGRATION_HEADER: &str =
    "n,R,exact_re,exact_im,q_mean_re,q_mean_im,q_mse,q_stderr,s_mse,s_stderr,q_evals,s_evals";

pub fn compare_integration(config: &ExperimentConfig) -> Result<Vec<IntegrationComparison>> {
    let basis = config.basis()?;
    let mut out = Vec::new();
    for &n in &config.n_grid {
        let schedule = schedule_a_n_r(n, config.order, basis.len())?;
        let f = config.target_function(&basis, schedule.final_m())?;
        let exact = integral_of(&f)?;
        let seed = config.seed.wrapping_add(n);
        let runs = replicate(config.replications, seed, config.threads, |s| {
            let q = q_2n_r(&f, &basis, n, config.order, s)?;
            let d = direct_simulation(&f, 2 * n, s)?;
            Ok((q, d))
        })?;
        let q_err: Vec<f64> = runs.iter().map(|(q, _)| (q.value - exact).norm_sqr()).collect();
        let s_err: Vec<f64> = runs.iter().map(|(_, d)| (d.value - exact).norm_sqr()).collect();
        let q_mean = runs.iter().map(|(q, _)| q.value).sum::<Complex64>() / runs.len() as f64;
        out.push(IntegrationComparison {
            n,
            replications: config.replications,
            exact,
            q_mean,
            q_mse: MseEstimate::from_samples(&q_err)?,
            s_mse: MseEstimate::from_samples(&s_err)?,
            q_evals: runs.iter().map(|(q, _)| q.evals_used).max().unwrap_or(0),
            s_evals: 2 * n,
        });
    }
    Ok(out)
}

pub fn comparisons_to_csv(rows: &[IntegrationComparison]) -> String {
    let mut out = String::from(INTEGRATION_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.replications,
            r.exact.re,
            r.exact.im,
            r.q_mean.re,
            r.q_mean.im,
            r.q_mse.mean,
            r.q_mse.stderr,
            r.s_mse.mean,
            r.s_mse.stderr,
            r.q_evals,
            r.s_evals
        );
    }
    out
}
