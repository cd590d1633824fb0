//! Target functions as finite coefficient vectors in a spectral basis.
//!
//! Every function here is `Σ_j c_j b_j` with finitely many terms, so norms,
//! projections and L² distances are exact by Parseval.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

/// Anything that can be evaluated at points of `[0,1)^d`.
pub trait Evaluable: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> Complex64;
}

/// Wraps a closure as an [`Evaluable`].
pub struct FnTarget<F> {
    dim: usize,
    f: F,
}

impl<F> FnTarget<F>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnTarget { dim, f }
    }
}

impl<F> Evaluable for FnTarget<F>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> Complex64 {
        (self.f)(x)
    }
}

#[derive(Clone, Debug)]
pub struct CoefficientFunction {
    basis: Arc<SpectralBasis>,
    coeffs: Vec<Complex64>,
}

impl CoefficientFunction {
    pub fn new(basis: Arc<SpectralBasis>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() > basis.len() {
            return Err(Error::IndexOutOfRange {
                index: coeffs.len(),
                len: basis.len(),
            });
        }
        Ok(CoefficientFunction { basis, coeffs })
    }

    pub fn zero(basis: Arc<SpectralBasis>) -> Self {
        CoefficientFunction {
            basis,
            coeffs: Vec::new(),
        }
    }

    /// `b_{index+1}` itself.
    pub fn basis_function(basis: Arc<SpectralBasis>, index: usize) -> Result<Self> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); index + 1];
        coeffs[index] = Complex64::new(1.0, 0.0);
        Self::new(basis, coeffs)
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient `⟨f, b_{index+1}⟩`, zero past the stored length.
    pub fn coeff(&self, index: usize) -> Complex64 {
        self.coeffs.get(index).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn f_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(self.basis.sigmas())
            .map(|(c, s)| c.norm_sqr() / (s * s))
            .sum::<f64>()
            .sqrt()
    }

    /// Orthogonal projection onto the span of the first `m` basis functions.
    pub fn project(&self, m: usize) -> Result<Self> {
        if m > self.basis.len() {
            return Err(Error::IndexOutOfRange {
                index: m,
                len: self.basis.len(),
            });
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.truncate(m);
        Ok(CoefficientFunction {
            basis: self.basis.clone(),
            coeffs,
        })
    }

    /// `‖f − P_m f‖₂²`.
    pub fn tail_energy(&self, m: usize) -> f64 {
        self.coeffs.iter().skip(m).map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        CoefficientFunction {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|c| c * alpha).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !self.basis.same_as(&other.basis) {
            return Err(Error::BasisMismatch);
        }
        let len = self.len().max(other.len());
        Ok(CoefficientFunction {
            basis: self.basis.clone(),
            coeffs: (0..len).map(|j| self.coeff(j) + other.coeff(j)).collect(),
        })
    }

    /// Coefficients in CSV form: a `# spec=` header, then `j,re,im` rows.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# spec={}\nj,re,im\n", self.basis.spec());
        for (j, c) in self.coeffs.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", j + 1, c.re, c.im));
        }
        out
    }

    /// Parses [`to_csv`](Self::to_csv) output. Indices must be one-based and
    /// may skip entries (missing coefficients are zero). A `# spec=` header,
    /// when present, must name the basis spec.
    pub fn from_csv(basis: Arc<SpectralBasis>, text: &str) -> Result<Self> {
        let mut coeffs: Vec<Complex64> = Vec::new();
        let expected = basis.spec().to_string();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let parse_err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(spec) = comment.trim().strip_prefix("spec=") {
                    if spec.trim() != expected {
                        return Err(Error::BasisMismatch);
                    }
                }
                continue;
            }
            if line.starts_with("j,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("expected 3 columns, found {}", fields.len())));
            }
            let j: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad index `{}`", fields[0])))?;
            if j == 0 {
                return Err(parse_err("indices are one-based".into()));
            }
            let re: f64 = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad number `{}`", fields[1])))?;
            let im: f64 = fields[2]
                .parse()
                .map_err(|_| parse_err(format!("bad number `{}`", fields[2])))?;
            if coeffs.len() < j {
                coeffs.resize(j, Complex64::new(0.0, 0.0));
            }
            coeffs[j - 1] = Complex64::new(re, im);
        }
        Self::new(basis, coeffs)
    }
}

impl Evaluable for CoefficientFunction {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn evaluate(&self, x: &[f64]) -> Complex64 {
        if self.coeffs.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let mut ev = self.basis.evaluator(self.coeffs.len());
        let mut values = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        ev.fill(x, &mut values);
        self.coeffs.iter().zip(&values).map(|(c, b)| c * b).sum()
    }
}

/// `‖f − g‖₂`, with missing coefficients treated as zero.
pub fn exact_l2_error(f: &CoefficientFunction, g: &CoefficientFunction) -> Result<f64> {
    if !f.basis.same_as(&g.basis) {
        return Err(Error::BasisMismatch);
    }
    let len = f.len().max(g.len());
    Ok((0..len)
        .map(|j| (f.coeff(j) - g.coeff(j)).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// `σ(m+1)·b_{m+1}`: unit F-norm and orthogonal to the first `m` basis
/// functions, so any method with output in their span errs by `σ(m+1)`.
pub fn hard_instance(basis: Arc<SpectralBasis>, m: usize) -> Result<CoefficientFunction> {
    if m >= basis.len() {
        return Err(Error::IndexOutOfRange {
            index: m + 1,
            len: basis.len(),
        });
    }
    let sigma = basis.sigma(m);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); m + 1];
    coeffs[m] = Complex64::new(sigma, 0.0);
    CoefficientFunction::new(basis, coeffs)
}

/// Coefficients `(σ(k)² − σ(k+1)²)^{1/2}` for `k < s` and `σ(s)` at `k = s`,
/// so that `‖f − P_m f‖₂² = σ(m+1)²` for every `m < s`.
pub fn weak_instance(basis: Arc<SpectralBasis>, s: usize) -> Result<CoefficientFunction> {
    if s == 0 || s > basis.len() {
        return Err(Error::IndexOutOfRange {
            index: s,
            len: basis.len(),
        });
    }
    let coeffs = (0..s)
        .map(|i| {
            let here = basis.sigma(i);
            let c = if i + 1 < s {
                let next = basis.sigma(i + 1);
                (here * here - next * next).max(0.0).sqrt()
            } else {
                here
            };
            Complex64::new(c, 0.0)
        })
        .collect();
    CoefficientFunction::new(basis, coeffs)
}

/// Uniform direction on the complex unit sphere of dimension `s`, with
/// coordinate `j` scaled by `σ(j)`: a random element of the F-unit sphere.
pub fn random_unit_ball<R: Rng + ?Sized>(
    basis: Arc<SpectralBasis>,
    s: usize,
    rng: &mut R,
) -> Result<CoefficientFunction> {
    if s == 0 || s > basis.len() {
        return Err(Error::IndexOutOfRange {
            index: s,
            len: basis.len(),
        });
    }
    let z: Vec<Complex64> = (0..s)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let coeffs = z
        .iter()
        .zip(basis.sigmas())
        .map(|(c, sigma)| c * (sigma / norm))
        .collect();
    CoefficientFunction::new(basis, coeffs)
}
