//! Dense symmetric linear algebra for small matrices: an exact cyclic-Jacobi
//! eigensolver and a Rayleigh-quotient gradient iteration for the extreme
//! eigenpairs. Everything here is deterministic; the Rayleigh iteration takes
//! an explicit seed for its restarts.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of full Jacobi sweeps before giving up on tightening
/// the off-diagonal norm further.
const JACOBI_MAX_SWEEPS: usize = 100;
/// Convergence threshold relative to the Frobenius norm of the input.
const JACOBI_REL_TOL: f64 = 1e-12;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    if n == 0.0 {
        return a.to_vec();
    }
    a.iter().map(|x| x / n).collect()
}

/// Flips the sign so the first nonzero component is positive. Makes
/// eigenvectors reproducible across runs.
pub(crate) fn fix_sign(v: &mut [f64]) {
    for &x in v.iter() {
        if x != 0.0 {
            if x < 0.0 {
                for y in v.iter_mut() {
                    *y = -*y;
                }
            }
            return;
        }
    }
}

/// Symmetric matrix with row-major storage. Construction symmetrizes the
/// entries as (A + Aᵀ)/2 and rejects non-finite values, so every value of
/// this type is exactly symmetric and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("matrix dimension must be positive".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if !entries.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        let mut m = SymMatrix { dim, entries };
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (m.entries[i * dim + j] + m.entries[j * dim + i]);
                m.entries[i * dim + j] = avg;
                m.entries[j * dim + i] = avg;
            }
        }
        Ok(m)
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix { dim, entries: vec![0.0; dim * dim] }
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let dim = values.len();
        let mut entries = vec![0.0; dim * dim];
        for (i, &v) in values.iter().enumerate() {
            entries[i * dim + i] = v;
        }
        SymMatrix::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub(crate) fn add_scaled_outer(&mut self, coeff: f64, v: &[f64]) {
        debug_assert_eq!(v.len(), self.dim);
        for i in 0..self.dim {
            let ci = coeff * v[i];
            for j in 0..self.dim {
                self.entries[i * self.dim + j] += ci * v[j];
            }
        }
    }

    pub(crate) fn scale(&mut self, t: f64) {
        for e in &mut self.entries {
            *e *= t;
        }
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        let mut m = self.clone();
        m.scale(t);
        if !m.entries.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("scaling produced non-finite entries".into()));
        }
        Ok(m)
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| dot(&self.entries[i * self.dim..(i + 1) * self.dim], v))
            .collect()
    }

    /// vᵀ S v.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.mat_vec(v))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Extreme eigenpairs and the spectrum radius of a symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub v_min: Vec<f64>,
    pub v_max: Vec<f64>,
    /// max(|λmin|, |λmax|).
    pub rho: f64,
}

/// Full spectrum: eigenvalues ascending, `vectors[k]` paired with `values[k]`,
/// vectors orthonormal with the first nonzero component positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi eigendecomposition. Sweeps rotate away every off-diagonal
/// entry until the off-diagonal Frobenius norm drops below
/// `1e-12 * ||S||_F`. Robust for the small dimensions used here (d ≤ ~64).
pub fn sym_eig(s: &SymMatrix) -> EigenDecomposition {
    let n = s.dim;
    let mut a: Vec<f64> = s.entries.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let threshold = JACOBI_REL_TOL * s.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= threshold {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta.abs() > 1e150 {
                    // avoid overflow in theta^2; tan tends to 1/(2 theta)
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;

                // A <- Jᵀ A J with J the rotation in the (p, q) plane.
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                // keep symmetry exact against rounding drift
                a[q * n + p] = a[p * n + q];

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());

    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| {
            let mut vec_col: Vec<f64> = (0..n).map(|row| v[row * n + col]).collect();
            fix_sign(&mut vec_col);
            vec_col
        })
        .collect();

    EigenDecomposition { values, vectors }
}

/// Exact extreme eigenpairs via [`sym_eig`].
pub fn spectral_extremes(s: &SymMatrix) -> SpectralSummary {
    let eig = sym_eig(s);
    let last = eig.values.len() - 1;
    SpectralSummary {
        lambda_min: eig.values[0],
        lambda_max: eig.values[last],
        v_min: eig.vectors[0].clone(),
        v_max: eig.vectors[last].clone(),
        rho: eig.values[0].abs().max(eig.values[last].abs()),
    }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let n = norm(&v);
        if n > 1e-6 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// One gradient climb on the Rayleigh quotient R(v) = vᵀSv / vᵀv, keeping v
/// on the unit sphere. `sign` is +1 for ascent (λmax) and -1 for descent
/// (λmin). The step halves on non-improvement and doubles (capped) on
/// acceptance.
fn rayleigh_climb(
    s: &SymMatrix,
    mut v: Vec<f64>,
    max_iters: usize,
    step0: f64,
    sign: f64,
) -> (f64, Vec<f64>) {
    let mut r = s.quadratic_form(&v);
    let mut step = step0;
    for _ in 0..max_iters {
        let sv = s.mat_vec(&v);
        let grad: Vec<f64> = sv.iter().zip(&v).map(|(a, b)| 2.0 * (a - r * b)).collect();
        let gnorm = norm(&grad);
        if gnorm <= 1e-15 * r.abs().max(1.0) {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = v
                .iter()
                .zip(&grad)
                .map(|(x, g)| x + sign * step * g)
                .collect();
            let cand = normalized(&cand);
            let rc = s.quadratic_form(&cand);
            if sign * (rc - r) > 0.0 {
                v = cand;
                r = rc;
                accepted = true;
                step = (step * 2.0).min(1.0);
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    (r, v)
}

/// Approximate extreme eigenpairs by seeded gradient ascent/descent on the
/// Rayleigh quotient, best over `restarts` unit-sphere-uniform starts.
/// Best effort: always returns a summary, bit-reproducible for a fixed seed.
pub fn rayleigh_extremes(
    s: &SymMatrix,
    max_iters: usize,
    step: f64,
    restarts: usize,
    seed: u64,
) -> SpectralSummary {
    let max_iters = max_iters.max(1);
    let restarts = restarts.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = s.dim();

    let mut best_min: Option<(f64, Vec<f64>)> = None;
    let mut best_max: Option<(f64, Vec<f64>)> = None;
    for _ in 0..restarts {
        let start_max = random_unit(&mut rng, dim);
        let start_min = random_unit(&mut rng, dim);
        let (lam, v) = rayleigh_climb(s, start_max, max_iters, step, 1.0);
        if best_max.as_ref().is_none_or(|(b, _)| lam > *b) {
            best_max = Some((lam, v));
        }
        let (lam, v) = rayleigh_climb(s, start_min, max_iters, step, -1.0);
        if best_min.as_ref().is_none_or(|(b, _)| lam < *b) {
            best_min = Some((lam, v));
        }
    }
    let (lambda_min, mut v_min) = best_min.expect("at least one restart");
    let (lambda_max, mut v_max) = best_max.expect("at least one restart");
    fix_sign(&mut v_min);
    fix_sign(&mut v_max);
    SpectralSummary {
        lambda_min,
        lambda_max,
        v_min,
        v_max,
        rho: lambda_min.abs().max(lambda_max.abs()),
    }
}

/// How a caller wants extreme eigenpairs computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EigenBackend {
    Exact,
    Rayleigh { max_iters: usize, step: f64, restarts: usize },
}

impl EigenBackend {
    pub fn rayleigh_default() -> Self {
        EigenBackend::Rayleigh { max_iters: 1000, step: 0.1, restarts: 3 }
    }

    /// The seed only matters for the Rayleigh backend.
    pub fn extremes(&self, s: &SymMatrix, seed: u64) -> SpectralSummary {
        match *self {
            EigenBackend::Exact => spectral_extremes(s),
            EigenBackend::Rayleigh { max_iters, step, restarts } => {
                rayleigh_extremes(s, max_iters, step, restarts, seed)
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, EigenBackend::Exact)
    }
}
