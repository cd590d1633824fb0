//! Weight functions and ordered singular value decompositions.
//!
//! For the periodic Sobolev spaces on the torus `[0,1)^d` the singular value
//! decomposition of the embedding into `L²` is the Fourier basis
//! `b(x) = exp(2πi⟨k,x⟩)`, and the singular value belonging to frequency `k`
//! is the reciprocal of the F-norm of that exponential. [`weight`] computes
//! that norm, [`enumerate_basis`] materializes the `N` frequencies with the
//! smallest weights in nonincreasing order of singular values.
//!
//! Indices into a [`SpectralBasis`] are zero-based: index `0` is `b_1`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Lattice frequency on the torus.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrequencyVector(Vec<i64>);

impl FrequencyVector {
    pub fn new(k: Vec<i64>) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::InvalidInput(
                "frequency vector must have at least one coordinate".into(),
            ));
        }
        Ok(FrequencyVector(k))
    }

    pub fn zero(d: usize) -> Self {
        FrequencyVector(vec![0; d.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn l1(&self) -> u64 {
        self.0.iter().map(|k| k.unsigned_abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }
}

impl From<Vec<i64>> for FrequencyVector {
    fn from(k: Vec<i64>) -> Self {
        FrequencyVector(k)
    }
}

impl fmt::Display for FrequencyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// Describes the source space `F` through the F-norms of the basis functions.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec {
    /// Dominating mixed smoothness: `Π_j (Σ_{a≤r} (2πk_j)^{2a})^{1/2}`.
    MixedSobolev { r: u32, d: usize, angular: bool },
    /// Isotropic smoothness: `(Σ_{‖α‖₁≤r} Π_j (2πk_j)^{2α_j})^{1/2}`.
    IsotropicSobolev { r: u32, d: usize, angular: bool },
    /// One univariate factor per coordinate; the weight is the product.
    TensorProduct(Vec<WeightSpec>),
    /// A prescribed nonincreasing sequence of singular values. The basis
    /// functions default to Fourier exponentials labelled by frequencies in
    /// order of increasing `‖k‖₁` (ties lexicographic).
    ExplicitSigma { sigma: Vec<f64>, d: usize },
}

impl WeightSpec {
    pub fn mixed(r: u32, d: usize) -> Self {
        WeightSpec::MixedSobolev { r, d, angular: true }
    }

    pub fn isotropic(r: u32, d: usize) -> Self {
        WeightSpec::IsotropicSobolev { r, d, angular: true }
    }

    pub fn explicit(sigma: Vec<f64>) -> Self {
        WeightSpec::ExplicitSigma { sigma, d: 1 }
    }

    /// `σ(j) = j^{-power}` for `j = 1..=len`.
    pub fn power_law(power: f64, len: usize) -> Self {
        WeightSpec::explicit((1..=len).map(|j| (j as f64).powf(-power)).collect())
    }

    pub fn dim(&self) -> usize {
        match self {
            WeightSpec::MixedSobolev { d, .. }
            | WeightSpec::IsotropicSobolev { d, .. }
            | WeightSpec::ExplicitSigma { d, .. } => *d,
            WeightSpec::TensorProduct(factors) => factors.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightSpec::MixedSobolev { d, .. } | WeightSpec::IsotropicSobolev { d, .. } => {
                if *d == 0 {
                    return Err(Error::InvalidSpec("dimension must be at least 1".into()));
                }
            }
            WeightSpec::TensorProduct(factors) => {
                if factors.is_empty() {
                    return Err(Error::InvalidSpec(
                        "tensor product needs at least one factor".into(),
                    ));
                }
                for f in factors {
                    f.validate()?;
                    if f.dim() != 1 {
                        return Err(Error::InvalidSpec(
                            "tensor product factors must be univariate".into(),
                        ));
                    }
                }
            }
            WeightSpec::ExplicitSigma { sigma, d } => {
                if *d == 0 {
                    return Err(Error::InvalidSpec("dimension must be at least 1".into()));
                }
                if sigma.is_empty() {
                    return Err(Error::InvalidSpec("sigma sequence is empty".into()));
                }
                if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                    return Err(Error::InvalidSpec(
                        "sigma values must be positive and finite".into(),
                    ));
                }
                if sigma.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::InvalidSpec("sigma sequence must be nonincreasing".into()));
                }
            }
        }
        Ok(())
    }

    /// Weight without dimension checks. `INFINITY` marks frequencies outside
    /// a finite explicit spectrum.
    fn raw_weight(&self, k: &[i64]) -> f64 {
        match self {
            WeightSpec::MixedSobolev { r, angular, .. } => {
                let mut factors: Vec<f64> =
                    k.iter().map(|&kj| sobolev_sum(squared_derivative(kj, *angular), *r)).collect();
                // sorted so that coordinate permutations give bit-identical weights
                factors.sort_by(f64::total_cmp);
                factors.iter().product::<f64>().sqrt()
            }
            WeightSpec::IsotropicSobolev { r, angular, .. } => {
                let mut t: Vec<f64> = k.iter().map(|&kj| squared_derivative(kj, *angular)).collect();
                t.sort_by(f64::total_cmp);
                isotropic_sum(&t, *r as usize).sqrt()
            }
            WeightSpec::TensorProduct(factors) => factors
                .iter()
                .zip(k)
                .map(|(f, &kj)| f.raw_weight(&[kj]))
                .product(),
            WeightSpec::ExplicitSigma { sigma, d } => {
                let rank = if *d == 1 {
                    Some(univariate_rank(k[0]))
                } else {
                    l1_lex_order(*d, sigma.len())
                        .iter()
                        .position(|f| f.as_slice() == k)
                };
                match rank {
                    Some(i) if i < sigma.len() => 1.0 / sigma[i],
                    _ => f64::INFINITY,
                }
            }
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::MixedSobolev { r, d, angular } => {
                write!(f, "mixed(r={r},d={d},angular={angular})")
            }
            WeightSpec::IsotropicSobolev { r, d, angular } => {
                write!(f, "isotropic(r={r},d={d},angular={angular})")
            }
            WeightSpec::TensorProduct(factors) => {
                write!(f, "tensor[")?;
                for (i, factor) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{factor}")?;
                }
                write!(f, "]")
            }
            WeightSpec::ExplicitSigma { sigma, d } => {
                write!(f, "explicit(d={d},len={})", sigma.len())
            }
        }
    }
}

fn squared_derivative(k: i64, angular: bool) -> f64 {
    let k = k as f64;
    if angular {
        (TAU * k) * (TAU * k)
    } else {
        k * k
    }
}

/// `Σ_{a=0}^{r} t^a` by Horner's rule.
fn sobolev_sum(t: f64, r: u32) -> f64 {
    (0..r).fold(1.0, |acc, _| 1.0 + t * acc)
}

/// `Σ_{‖α‖₁≤r} Π_c t_c^{α_c}`, one coordinate at a time.
fn isotropic_sum(t: &[f64], r: usize) -> f64 {
    // tail[b] = sum over multi-indices of the remaining coordinates with |α| ≤ b
    let mut tail = vec![1.0; r + 1];
    for &tc in t.iter().rev() {
        let mut powers = Vec::with_capacity(r + 1);
        let mut p = 1.0;
        for _ in 0..=r {
            powers.push(p);
            p *= tc;
        }
        let next: Vec<f64> = (0..=r)
            .map(|b| (0..=b).map(|a| powers[a] * tail[b - a]).sum())
            .collect();
        tail = next;
    }
    tail[r]
}

/// Position of `k` in the univariate order `0, -1, 1, -2, 2, …`.
fn univariate_rank(k: i64) -> usize {
    match k.cmp(&0) {
        Ordering::Equal => 0,
        Ordering::Less => (2 * k.unsigned_abs() - 1) as usize,
        Ordering::Greater => (2 * k as u64) as usize,
    }
}

/// F-norm of the L²-normalized exponential with frequency `k`.
///
/// For [`WeightSpec::ExplicitSigma`] the frequency is looked up in the label
/// order of the spectrum; frequencies past the end of a finite spectrum get
/// an infinite weight.
pub fn weight(spec: &WeightSpec, k: &FrequencyVector) -> Result<f64> {
    spec.validate()?;
    if k.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: k.dim(),
        });
    }
    Ok(spec.raw_weight(k.as_slice()))
}

/// `r / (2 + ln d)`.
pub fn preasymptotic_exponent(r: f64, d: u64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("smoothness must be positive, got {r}")));
    }
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    Ok(r / (2.0 + (d as f64).ln()))
}

struct Candidate {
    weight: f64,
    l1: u64,
    k: Vec<i64>,
}

impl Candidate {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.l1.cmp(&other.l1))
            .then_with(|| self.k.cmp(&other.k))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Best-first expansion from the origin. Requires `weight` to be
/// nondecreasing in every `|k_j|`; then the pop order is exactly the order by
/// `(weight, ‖k‖₁, k)` because every lattice path out of the origin has
/// strictly increasing keys.
fn best_first<W>(d: usize, count: usize, weight: W) -> Vec<(Vec<i64>, f64)>
where
    W: Fn(&[i64]) -> f64,
{
    let mut out = Vec::with_capacity(count);
    let mut heap = BinaryHeap::new();
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let origin = vec![0i64; d];
    let w0 = weight(&origin);
    if w0.is_finite() {
        seen.insert(origin.clone());
        heap.push(Candidate { weight: w0, l1: 0, k: origin });
    }
    while out.len() < count {
        let Some(c) = heap.pop() else { break };
        for j in 0..d {
            let steps: &[i64] = match c.k[j].cmp(&0) {
                Ordering::Equal => &[-1, 1],
                Ordering::Less => &[-1],
                Ordering::Greater => &[1],
            };
            for &s in steps {
                let mut next = c.k.clone();
                next[j] += s;
                if seen.contains(&next) {
                    continue;
                }
                let w = weight(&next);
                if !w.is_finite() {
                    continue;
                }
                seen.insert(next.clone());
                heap.push(Candidate {
                    weight: w,
                    l1: c.l1 + 1,
                    k: next,
                });
            }
        }
        out.push((c.k, c.weight));
    }
    out
}

/// First `count` frequencies of `Z^d` ordered by `‖k‖₁`, then lexicographically.
pub fn l1_lex_order(d: usize, count: usize) -> Vec<FrequencyVector> {
    best_first(d, count, |_| 1.0)
        .into_iter()
        .map(|(k, _)| FrequencyVector(k))
        .collect()
}

/// An L²-orthonormal system supplied by the caller, used in place of the
/// Fourier basis. Indices are zero-based.
pub trait OrthonormalSystem: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    /// Number of functions available.
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn eval(&self, index: usize, x: &[f64]) -> Complex64;
    /// An upper bound for `sup_x |b(x)|²`, used for rejection sampling.
    fn sup_abs_sq(&self, index: usize) -> f64;
    /// `∫ b dμ`, when known.
    fn integral(&self, _index: usize) -> Option<Complex64> {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisEntry {
    pub frequency: FrequencyVector,
    pub sigma: f64,
}

/// Ordered, truncated singular value decomposition. Immutable once built.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    spec: WeightSpec,
    entries: Vec<BasisEntry>,
    system: Option<Arc<dyn OrthonormalSystem>>,
}

/// The `n` frequencies with the smallest weights, sorted by
/// `(weight, ‖k‖₁, k)`, with `σ = 1/weight`. Explicit spectra are truncated
/// at their length.
pub fn enumerate_basis(spec: &WeightSpec, n: usize) -> Result<SpectralBasis> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("basis size must be at least 1".into()));
    }
    let entries = match spec {
        WeightSpec::ExplicitSigma { sigma, d } => {
            let len = n.min(sigma.len());
            l1_lex_order(*d, len)
                .into_iter()
                .zip(sigma)
                .map(|(frequency, &sigma)| BasisEntry { frequency, sigma })
                .collect()
        }
        _ => best_first(spec.dim(), n, |k| spec.raw_weight(k))
            .into_iter()
            .map(|(k, w)| BasisEntry {
                frequency: FrequencyVector(k),
                sigma: 1.0 / w,
            })
            .collect(),
    };
    Ok(SpectralBasis {
        spec: spec.clone(),
        entries,
        system: None,
    })
}

impl SpectralBasis {
    /// Explicit spectrum over a caller-supplied orthonormal system.
    pub fn with_system(sigma: Vec<f64>, system: Arc<dyn OrthonormalSystem>) -> Result<Self> {
        let spec = WeightSpec::ExplicitSigma {
            sigma,
            d: system.dim(),
        };
        spec.validate()?;
        let len = match &spec {
            WeightSpec::ExplicitSigma { sigma, .. } => sigma.len().min(system.len()),
            _ => unreachable!(),
        };
        let mut basis = enumerate_basis(&spec, len)?;
        basis.system = Some(system);
        Ok(basis)
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn entries(&self) -> &[BasisEntry] {
        &self.entries
    }

    pub fn is_fourier(&self) -> bool {
        self.system.is_none()
    }

    pub fn system(&self) -> Option<&Arc<dyn OrthonormalSystem>> {
        self.system.as_ref()
    }

    pub fn frequency(&self, index: usize) -> Result<&FrequencyVector> {
        self.entries
            .get(index)
            .map(|e| &e.frequency)
            .ok_or(Error::IndexOutOfRange {
                index,
                len: self.len(),
            })
    }

    /// Singular value at zero-based `index`, i.e. `σ(index+1)`. Zero past
    /// the end of the truncation.
    pub fn sigma(&self, index: usize) -> f64 {
        self.entries.get(index).map_or(0.0, |e| e.sigma)
    }

    /// `σ(n)` with the usual one-based numbering.
    pub fn singular_value(&self, n: usize) -> f64 {
        assert!(n >= 1, "singular values are numbered from 1");
        self.sigma(n - 1)
    }

    pub fn sigmas(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.sigma)
    }

    /// Zero-based index of the constant function, if the basis has one.
    pub fn zero_frequency_index(&self) -> Option<usize> {
        if !self.is_fourier() {
            return None;
        }
        self.entries.iter().position(|e| e.frequency.is_zero())
    }

    pub(crate) fn same_as(&self, other: &SpectralBasis) -> bool {
        std::ptr::eq(self, other)
            || (self.spec == other.spec
                && self.entries == other.entries
                && match (&self.system, &other.system) {
                    (None, None) => true,
                    (Some(a), Some(b)) => Arc::ptr_eq(a, b),
                    _ => false,
                })
    }

    /// CSV with columns `j, k_1..k_d, sigma` (one-based `j`).
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::from("j");
        for c in 1..=d {
            out.push_str(&format!(",k_{c}"));
        }
        out.push_str(",sigma\n");
        for (i, e) in self.entries.iter().enumerate() {
            out.push_str(&(i + 1).to_string());
            for k in e.frequency.as_slice() {
                out.push_str(&format!(",{k}"));
            }
            out.push_str(&format!(",{}\n", e.sigma));
        }
        out
    }

    pub fn evaluator(&self, m: usize) -> BasisEvaluator<'_> {
        BasisEvaluator::new(self, m)
    }
}

fn check_point(d: usize, x: &[f64]) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    if x.iter().any(|&v| !(0.0..1.0).contains(&v)) {
        return Err(Error::InvalidInput("point must lie in [0,1)^d".into()));
    }
    Ok(())
}

/// `exp(2πi·t)` with the argument reduced modulo 1 first.
pub(crate) fn cis_turns(t: f64) -> Complex64 {
    let (s, c) = (TAU * t.rem_euclid(1.0)).sin_cos();
    Complex64::new(c, s)
}

/// `b_{index+1}(x)`.
pub fn evaluate_basis(basis: &SpectralBasis, index: usize, x: &[f64]) -> Result<Complex64> {
    let freq = basis.frequency(index)?;
    check_point(basis.dim(), x)?;
    Ok(match &basis.system {
        Some(system) => system.eval(index, x),
        None => {
            let phase: f64 = freq
                .as_slice()
                .iter()
                .zip(x)
                .map(|(&k, &xc)| (k as f64 * xc).rem_euclid(1.0))
                .sum();
            cis_turns(phase)
        }
    })
}

/// `u_m(x) = (1/m) Σ_{j≤m} |b_j(x)|²`; identically one for Fourier bases.
pub fn density_u_m(basis: &SpectralBasis, m: usize, x: &[f64]) -> Result<f64> {
    if m == 0 || m > basis.len() {
        return Err(Error::IndexOutOfRange {
            index: m,
            len: basis.len(),
        });
    }
    check_point(basis.dim(), x)?;
    Ok(match &basis.system {
        None => 1.0,
        Some(system) => (0..m).map(|j| system.eval(j, x).norm_sqr()).sum::<f64>() / m as f64,
    })
}

const REANCHOR: usize = 32;

/// Evaluates `b_1..b_m` at a point in one sweep. For Fourier bases the
/// per-coordinate powers of `exp(2πi x_c)` are tabulated once, so each basis
/// value costs `d` complex multiplications.
#[derive(Debug)]
pub struct BasisEvaluator<'a> {
    basis: &'a SpectralBasis,
    m: usize,
    bounds: Vec<usize>,
    offsets: Vec<usize>,
    table: Vec<Complex64>,
}

impl<'a> BasisEvaluator<'a> {
    fn new(basis: &'a SpectralBasis, m: usize) -> Self {
        let m = m.min(basis.len());
        let d = basis.dim();
        let mut bounds = vec![0usize; d];
        if basis.is_fourier() {
            for e in &basis.entries[..m] {
                for (b, &k) in bounds.iter_mut().zip(e.frequency.as_slice()) {
                    *b = (*b).max(k.unsigned_abs() as usize);
                }
            }
        }
        let mut offsets = Vec::with_capacity(d);
        let mut total = 0;
        for &b in &bounds {
            offsets.push(total);
            total += 2 * b + 1;
        }
        BasisEvaluator {
            basis,
            m,
            bounds,
            offsets,
            table: vec![Complex64::new(0.0, 0.0); total],
        }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Writes `b_j(x)` into `out[j]` for `j < m`.
    pub fn fill(&mut self, x: &[f64], out: &mut [Complex64]) {
        debug_assert!(out.len() >= self.m);
        if let Some(system) = &self.basis.system {
            for (j, o) in out[..self.m].iter_mut().enumerate() {
                *o = system.eval(j, x);
            }
            return;
        }
        for (c, &xc) in x.iter().enumerate() {
            let bound = self.bounds[c];
            let row = &mut self.table[self.offsets[c]..self.offsets[c] + 2 * bound + 1];
            row[bound] = Complex64::new(1.0, 0.0);
            let w = cis_turns(xc);
            let mut p = Complex64::new(1.0, 0.0);
            for k in 1..=bound {
                p = if k % REANCHOR == 0 {
                    cis_turns(k as f64 * xc)
                } else {
                    p * w
                };
                row[bound + k] = p;
                row[bound - k] = p.conj();
            }
        }
        for (e, o) in self.basis.entries[..self.m].iter().zip(out.iter_mut()) {
            let mut v = Complex64::new(1.0, 0.0);
            for (c, &k) in e.frequency.as_slice().iter().enumerate() {
                let idx = self.offsets[c] as i64 + self.bounds[c] as i64 + k;
                v *= self.table[idx as usize];
            }
            *o = v;
        }
    }
}
