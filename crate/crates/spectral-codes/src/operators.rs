//! Dense complex linear-algebra substrate.
//!
//! Everything downstream works with explicit complex matrices: Dirac
//! operators are [`HermitianOperator`]s, code spaces are [`CodeProjection`]s
//! obtained from spectral intervals, and logical action is detected with
//! [`is_scalar_on_code`]. Target dimensions are desk scale (up to a few
//! thousand dense, with compressed fast paths for Pauli-string scans), so the
//! module deliberately sticks to dense storage and full eigendecompositions.
//!
//! Numerical conventions:
//!
//! * an eigenvalue counts as zero iff `|lambda| <= 1e-9 * max(1, ||H||)`;
//! * the same relative threshold separates eigenvalue clusters in a
//!   [`SpectrumReport`];
//! * scalar tests are relative to `max(1, ||X||)` and every consumer passes
//!   its tolerance explicitly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Operator-norm tolerance for `P^2 = P` and `P = P*`.
pub const PROJECTION_TOL: f64 = 1e-10;
/// Tolerance for `trace(P)` to sit on an integer rank.
pub const TRACE_RANK_TOL: f64 = 1e-8;
/// Relative reconstruction tolerance for the eigendecomposition round trip.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Default relative tolerance of the scalar-on-code test.
pub const SCALAR_TOL: f64 = 1e-9;
/// Relative threshold below which an eigenvalue counts as zero.
pub const ZERO_EIG_REL_TOL: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn trace(m: &CMat) -> Complex64 {
    (0..m.nrows().min(m.ncols()))
        .map(|i| m[(i, i)])
        .sum()
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Largest entry magnitude; cheap scale estimate for relative tolerances.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Which tensor factor an operation refers to, for a space `H_A (x) H_B`
/// indexed row-major (`i = a * dim_b + b`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

/// Partial trace of `x` on `H_A (x) H_B` over the named factor.
///
/// Linear and total-trace preserving; the remaining factor keeps its index
/// order.
pub fn partial_trace(x: &CMat, dims: (usize, usize), over: Factor) -> Result<CMat> {
    let (da, db) = dims;
    if x.nrows() != da * db || x.ncols() != da * db {
        return Err(Error::Dimension {
            context: "partial_trace factor product",
            expected: da * db,
            got: x.nrows(),
        });
    }
    match over {
        Factor::Second => {
            let mut out = CMat::zeros(da, da);
            for a in 0..da {
                for ap in 0..da {
                    let mut s = Complex64::default();
                    for b in 0..db {
                        s += x[(a * db + b, ap * db + b)];
                    }
                    out[(a, ap)] = s;
                }
            }
            Ok(out)
        }
        Factor::First => {
            let mut out = CMat::zeros(db, db);
            for b in 0..db {
                for bp in 0..db {
                    let mut s = Complex64::default();
                    for a in 0..da {
                        s += x[(a * db + b, a * db + bp)];
                    }
                    out[(b, bp)] = s;
                }
            }
            Ok(out)
        }
    }
}

/// A validated Hermitian matrix.
///
/// Construction symmetrizes the input after checking the defect, so the
/// stored matrix is exactly self-adjoint entrywise.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    mat: CMat,
}

impl HermitianOperator {
    /// Wrap a matrix, rejecting if its max entrywise asymmetry exceeds
    /// `1e-12 * max(1, max entry)`.
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::Dimension {
                context: "HermitianOperator square nonzero dimension",
                expected: mat.nrows().max(1),
                got: mat.ncols(),
            });
        }
        let scale = max_abs(&mat).max(1.0);
        let asym = (&mat - mat.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian {
                asymmetry: asym,
                tol: HERMITICITY_TOL * scale,
            });
        }
        let sym = (&mat + mat.adjoint()).scale(0.5);
        Ok(HermitianOperator { mat: sym })
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut mat = CMat::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            mat[(i, i)] = c(v, 0.0);
        }
        HermitianOperator { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    /// Full eigendecomposition with eigenvalues sorted ascending.
    pub fn eigh(&self) -> Eigh {
        let es = self.mat.clone().symmetric_eigen();
        let n = self.dim();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| es.eigenvalues[a].total_cmp(&es.eigenvalues[b]));
        let values: Vec<f64> = idx.iter().map(|&i| es.eigenvalues[i]).collect();
        let cols: Vec<_> = idx.iter().map(|&i| es.eigenvectors.column(i).into_owned()).collect();
        let vectors = CMat::from_columns(&cols);
        Eigh { values, vectors }
    }

    /// Cluster the spectrum and report multiplicities, kernel size, and gap.
    pub fn spectrum(&self) -> SpectrumReport {
        let eigh = self.eigh();
        SpectrumReport::from_sorted_values(&eigh.values)
    }

    pub fn operator_norm(&self) -> f64 {
        self.eigh()
            .values
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

/// Sorted eigendecomposition of a Hermitian matrix.
pub struct Eigh {
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, same order as `values`.
    pub vectors: CMat,
}

impl Eigh {
    /// `U diag(values) U*`; should reproduce the input within 1e-10 relative.
    pub fn reconstruct(&self) -> CMat {
        let n = self.values.len();
        let mut d = CMat::zeros(n, n);
        for (i, &v) in self.values.iter().enumerate() {
            d[(i, i)] = c(v, 0.0);
        }
        &self.vectors * d * self.vectors.adjoint()
    }
}

/// Clustered spectrum of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct SpectrumReport {
    /// Distinct eigenvalues (cluster means), ascending.
    pub eigenvalues: Vec<f64>,
    /// Multiplicity of each cluster; sums to the dimension.
    pub multiplicities: Vec<usize>,
    /// Smallest `|eigenvalue|` above the zero threshold; 0 if none.
    pub gap: f64,
    /// Number of eigenvalues within the zero threshold.
    pub kernel_dim: usize,
    /// Absolute threshold used: `1e-9 * max(1, max |eigenvalue|)`.
    pub zero_threshold: f64,
}

impl SpectrumReport {
    pub fn from_sorted_values(values: &[f64]) -> Self {
        let scale = values.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let thr = ZERO_EIG_REL_TOL * scale;
        let mut eigenvalues = Vec::new();
        let mut multiplicities = Vec::new();
        for &v in values {
            match eigenvalues.last().copied() {
                Some(last) if v - last <= thr => {
                    let k = eigenvalues.len() - 1;
                    let m = multiplicities[k] as f64;
                    // running cluster mean keeps the representative centered
                    eigenvalues[k] = (eigenvalues[k] * m + v) / (m + 1.0);
                    multiplicities[k] += 1;
                }
                _ => {
                    eigenvalues.push(v);
                    multiplicities.push(1);
                }
            }
        }
        let kernel_dim = values.iter().filter(|v| v.abs() <= thr).count();
        let gap = values
            .iter()
            .map(|v| v.abs())
            .filter(|a| *a > thr)
            .fold(f64::INFINITY, f64::min);
        let gap = if gap.is_finite() { gap } else { 0.0 };
        SpectrumReport {
            eigenvalues,
            multiplicities,
            gap,
            kernel_dim,
            zero_threshold: thr,
        }
    }
}

/// A Hermitian idempotent with a cached orthonormal range basis.
#[derive(Clone, Debug)]
pub struct CodeProjection {
    mat: CMat,
    basis: CMat,
    rank: usize,
}

impl CodeProjection {
    /// Validate `P = P*`, `P^2 = P` (operator norm, 1e-10) and an integer
    /// trace (1e-8), then extract the range basis.
    pub fn from_matrix(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::Dimension {
                context: "CodeProjection square nonzero dimension",
                expected: mat.nrows().max(1),
                got: mat.ncols(),
            });
        }
        let herm_defect = operator_norm(&(&mat - mat.adjoint()));
        if herm_defect > PROJECTION_TOL {
            return Err(Error::NotProjection {
                what: "self-adjointness",
                defect: herm_defect,
                tol: PROJECTION_TOL,
            });
        }
        let sym = (&mat + mat.adjoint()).scale(0.5);
        let idem_defect = operator_norm(&(&sym * &sym - &sym));
        if idem_defect > PROJECTION_TOL {
            return Err(Error::NotProjection {
                what: "idempotency",
                defect: idem_defect,
                tol: PROJECTION_TOL,
            });
        }
        let tr = trace(&sym).re;
        let rank = tr.round();
        if (tr - rank).abs() > TRACE_RANK_TOL || rank < 0.0 {
            return Err(Error::NotProjection {
                what: "integer trace",
                defect: (tr - rank).abs(),
                tol: TRACE_RANK_TOL,
            });
        }
        let rank = rank as usize;
        let h = HermitianOperator { mat: sym.clone() };
        let eigh = h.eigh();
        let cols: Vec<_> = eigh
            .values
            .iter()
            .zip(0..)
            .filter(|(v, _)| **v >= 0.5)
            .map(|(_, i)| eigh.vectors.column(i).into_owned())
            .collect();
        if cols.len() != rank {
            return Err(Error::NotProjection {
                what: "eigenvalue count vs trace",
                defect: (cols.len() as f64 - rank as f64).abs(),
                tol: 0.0,
            });
        }
        let basis = if cols.is_empty() {
            CMat::zeros(sym.nrows(), 0)
        } else {
            CMat::from_columns(&cols)
        };
        Ok(CodeProjection { mat: sym, basis, rank })
    }

    /// Build from orthonormal columns spanning the range.
    pub fn from_basis(basis: CMat) -> Result<Self> {
        let (n, r) = (basis.nrows(), basis.ncols());
        if n == 0 {
            return Err(Error::Dimension {
                context: "CodeProjection basis ambient dimension",
                expected: 1,
                got: 0,
            });
        }
        let gram = basis.adjoint() * &basis;
        let defect = operator_norm(&(&gram - identity(r)));
        if defect > PROJECTION_TOL {
            return Err(Error::NotProjection {
                what: "basis orthonormality",
                defect,
                tol: PROJECTION_TOL,
            });
        }
        let raw = &basis * basis.adjoint();
        let mat = (&raw + raw.adjoint()).scale(0.5);
        Ok(CodeProjection { mat, basis, rank: r })
    }

    pub fn identity(dim: usize) -> Self {
        CodeProjection {
            mat: identity(dim),
            basis: identity(dim),
            rank: dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// Orthonormal columns spanning the range (`dim x rank`).
    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    /// Orthonormal columns spanning the orthogonal complement
    /// (`dim x (dim - rank)`).
    pub fn complement_basis(&self) -> CMat {
        let h = HermitianOperator { mat: self.mat.clone() };
        let eigh = h.eigh();
        let cols: Vec<_> = eigh
            .values
            .iter()
            .zip(0..)
            .filter(|(v, _)| **v < 0.5)
            .map(|(_, i)| eigh.vectors.column(i).into_owned())
            .collect();
        if cols.is_empty() {
            CMat::zeros(self.dim(), 0)
        } else {
            CMat::from_columns(&cols)
        }
    }

    /// `B* X B`: the operator `X` compressed to the code space.
    pub fn compress(&self, x: &CMat) -> CMat {
        self.basis.adjoint() * x * &self.basis
    }
}

/// Projection onto the eigenspaces of `h` with eigenvalue in `[lo, hi]`.
///
/// The interval is enlarged by the zero threshold `1e-9 * max(1, ||h||)` so
/// that eigenvalues sitting on an endpoint up to rounding are included. An
/// empty selection yields the zero projection.
pub fn spectral_projection(h: &HermitianOperator, lo: f64, hi: f64) -> Result<CodeProjection> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::domain(format!(
            "spectral_projection interval [{lo}, {hi}] must be finite and ordered"
        )));
    }
    let eigh = h.eigh();
    let scale = eigh.values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let slack = ZERO_EIG_REL_TOL * scale;
    let cols: Vec<_> = eigh
        .values
        .iter()
        .zip(0..)
        .filter(|(v, _)| **v >= lo - slack && **v <= hi + slack)
        .map(|(_, i)| eigh.vectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return Ok(CodeProjection {
            mat: CMat::zeros(h.dim(), h.dim()),
            basis: CMat::zeros(h.dim(), 0),
            rank: 0,
        });
    }
    let basis = CMat::from_columns(&cols);
    CodeProjection::from_basis(basis)
}

/// Projection onto the numerical kernel of `h`.
pub fn kernel_projection(h: &HermitianOperator) -> Result<CodeProjection> {
    spectral_projection(h, 0.0, 0.0)
}

/// Decide whether `P X P` is a scalar multiple of `P`.
///
/// Returns `(verdict, lambda)` with `lambda = trace(P X P) / rank(P)`; the
/// verdict is true iff `||P X P - lambda P|| <= tol * max(1, ||X||)`.
pub fn is_scalar_on_code(x: &CMat, p: &CodeProjection, tol: f64) -> Result<(bool, Complex64)> {
    is_scalar_on_code_with_norm(x, p, tol, operator_norm(x))
}

/// Same as [`is_scalar_on_code`] with the caller supplying `||X||` (the scan
/// over unitary families passes 1 and skips a singular-value decomposition
/// per candidate).
pub fn is_scalar_on_code_with_norm(
    x: &CMat,
    p: &CodeProjection,
    tol: f64,
    x_norm: f64,
) -> Result<(bool, Complex64)> {
    if x.nrows() != p.dim() || x.ncols() != p.dim() {
        return Err(Error::Dimension {
            context: "is_scalar_on_code operator vs projection",
            expected: p.dim(),
            got: x.nrows(),
        });
    }
    if p.rank() == 0 {
        return Err(Error::domain("is_scalar_on_code: projection has rank 0"));
    }
    let m = p.compress(x);
    Ok(compressed_scalar_test(&m, tol, x_norm))
}

/// Scalar test on an already-compressed `rank x rank` block `B* X B`.
///
/// Errors with `Domain` never arise here; rank 0 is rejected by the callers
/// that own the projection. The defect is the operator norm of
/// `B* X B - lambda I`, which equals `||P X P - lambda P||` because the basis
/// is an isometry.
pub fn compressed_scalar_test(m: &CMat, tol: f64, x_norm: f64) -> (bool, Complex64) {
    let r = m.nrows();
    let lambda = trace(m) / c(r as f64, 0.0);
    let mut shifted = m.clone();
    for i in 0..r {
        shifted[(i, i)] -= lambda;
    }
    let defect = operator_norm(&shifted);
    (defect <= tol * x_norm.max(1.0), lambda)
}

/// Hermitian square root of a positive semidefinite matrix.
///
/// Eigenvalues in `[-tol, 0)` are clamped to zero; anything more negative is
/// rejected.
pub fn hermitian_sqrt(h: &HermitianOperator) -> Result<CMat> {
    let eigh = h.eigh();
    let scale = eigh.values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let tol = ZERO_EIG_REL_TOL * scale;
    let mut roots = Vec::with_capacity(eigh.values.len());
    for &v in &eigh.values {
        if v < -tol {
            return Err(Error::domain(format!(
                "hermitian_sqrt: eigenvalue {v:.3e} is negative beyond tolerance"
            )));
        }
        roots.push(v.max(0.0).sqrt());
    }
    let n = roots.len();
    let mut d = CMat::zeros(n, n);
    for (i, r) in roots.iter().enumerate() {
        d[(i, i)] = c(*r, 0.0);
    }
    Ok(&eigh.vectors * d * eigh.vectors.adjoint())
}

/// `h^{-1/2}` on the support of `h`: eigenvalues below `cutoff_rel * ||h||`
/// are treated as zero and inverted to zero (pseudo-inverse convention).
pub fn hermitian_pseudo_inv_sqrt(h: &HermitianOperator, cutoff_rel: f64) -> Result<CMat> {
    let eigh = h.eigh();
    let scale = eigh.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let cutoff = cutoff_rel * scale.max(f64::MIN_POSITIVE);
    let mut inv = Vec::with_capacity(eigh.values.len());
    for &v in &eigh.values {
        if v < -cutoff {
            return Err(Error::domain(format!(
                "hermitian_pseudo_inv_sqrt: eigenvalue {v:.3e} is negative beyond cutoff"
            )));
        }
        inv.push(if v > cutoff { 1.0 / v.sqrt() } else { 0.0 });
    }
    let n = inv.len();
    let mut d = CMat::zeros(n, n);
    for (i, r) in inv.iter().enumerate() {
        d[(i, i)] = c(*r, 0.0);
    }
    Ok(&eigh.vectors * d * eigh.vectors.adjoint())
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller; avoids pulling in a distributions crate for one density
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn random_complex(rng: &mut impl Rng) -> Complex64 {
    c(standard_normal(rng), standard_normal(rng))
}

/// Ginibre matrix: iid standard complex Gaussian entries.
pub fn random_ginibre(n: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(n, n, |_, _| random_complex(rng))
}

/// GUE-normalized random Hermitian matrix.
pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> HermitianOperator {
    let g = random_ginibre(n, rng);
    let sym = (&g + g.adjoint()).scale(0.5);
    HermitianOperator { mat: sym }
}

/// Haar-ish random unitary via QR of a Ginibre matrix with phase fixing.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let g = random_ginibre(n, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random unit vector.
pub fn random_state(n: usize, rng: &mut impl Rng) -> CVec {
    let mut v = CVec::from_fn(n, |_, _| random_complex(rng));
    let norm = v.norm();
    v /= c(norm, 0.0);
    v
}

/// Random full-rank density matrix (Haar basis, exponential weights).
pub fn random_density(n: usize, rng: &mut impl Rng) -> CMat {
    let u = random_unitary(n, rng);
    let mut w: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln()).collect();
    let s: f64 = w.iter().sum();
    for v in &mut w {
        *v /= s;
    }
    let mut d = CMat::zeros(n, n);
    for (i, v) in w.iter().enumerate() {
        d[(i, i)] = c(*v, 0.0);
    }
    &u * d * u.adjoint()
}
