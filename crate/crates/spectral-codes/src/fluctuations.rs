//! Inner fluctuations of a Dirac operator and code-preserving perturbations.
//!
//! The first half implements the differential-geometric side: one-forms
//! `sum a_j [D, b_j]`, real structures (antiunitaries `J = U . conj`), the
//! fluctuated operator `D_A = D + A + J A J^{-1}`, and gauge transforms with
//! their covariance. The second half is spectral engineering: perturbations
//! `D + lambda V` that keep the kernel (the code) fixed while opening the gap
//! linearly, the resulting decay of the correctability bound `k(lambda)`, and
//! a sweep that shows how the gap suppresses the leakage bound chain.

use crate::channels::{leakage_probability, least_squares_slope, noise_family};
use crate::error::{Error, Result};
use crate::operators::{
    c, commutator, dagger, identity, kernel_projection, max_abs, operator_norm, CMat,
    CodeProjection, HermitianOperator, SpectrumReport,
};

const SELF_ADJOINT_TOL: f64 = 1e-10;
const STRUCTURE_TOL: f64 = 1e-10;
const SPEC_TOL: f64 = 1e-10;
const KERNEL_PRESERVATION_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// one-forms

/// A one-form `A = sum_j a_j [D, b_j]`, kept together with its realization.
#[derive(Clone, Debug)]
pub struct OneForm {
    terms: Vec<(CMat, CMat)>,
    realized: CMat,
}

impl OneForm {
    pub fn terms(&self) -> &[(CMat, CMat)] {
        &self.terms
    }

    pub fn realized(&self) -> &CMat {
        &self.realized
    }

    pub fn dim(&self) -> usize {
        self.realized.nrows()
    }

    /// Defect between the stored matrix and a fresh evaluation of the terms.
    pub fn realization_defect(&self, d: &HermitianOperator) -> f64 {
        max_abs(&(&self.realized - realize(d, &self.terms)))
    }

    pub fn is_self_adjoint(&self) -> bool {
        max_abs(&(&self.realized - dagger(&self.realized))) <= SELF_ADJOINT_TOL
    }
}

fn realize(d: &HermitianOperator, terms: &[(CMat, CMat)]) -> CMat {
    let mut out = CMat::zeros(d.dim(), d.dim());
    for (a, b) in terms {
        out += a * commutator(d.matrix(), b);
    }
    out
}

/// Assemble `sum_j a_j [D, b_j]` from coefficient pairs.
pub fn one_form(d: &HermitianOperator, terms: Vec<(CMat, CMat)>) -> Result<OneForm> {
    for (a, b) in &terms {
        for m in [a, b] {
            if m.nrows() != d.dim() || m.ncols() != d.dim() {
                return Err(Error::Dimension {
                    context: "one-form coefficient",
                    expected: d.dim(),
                    got: m.nrows().max(m.ncols()),
                });
            }
        }
    }
    let realized = realize(d, &terms);
    Ok(OneForm { terms, realized })
}

// ---------------------------------------------------------------------------
// real structures

/// An antiunitary `J = U . conj` with declared KO-signs: `J^2 = eps' I` is
/// checked at construction, `J D = eps D J` on demand against a given `D`.
#[derive(Clone, Debug)]
pub struct RealStructure {
    unitary: CMat,
    epsilon: i8,
    epsilon_prime: i8,
}

impl RealStructure {
    pub fn new(unitary: CMat, epsilon: i8, epsilon_prime: i8) -> Result<Self> {
        if unitary.nrows() != unitary.ncols() {
            return Err(Error::Dimension {
                context: "real structure unitary",
                expected: unitary.nrows(),
                got: unitary.ncols(),
            });
        }
        if !matches!(epsilon, -1 | 1) || !matches!(epsilon_prime, -1 | 1) {
            return Err(Error::domain("KO-signs must be +1 or -1".to_string()));
        }
        let n = unitary.nrows();
        let unit_defect = operator_norm(&(&unitary * dagger(&unitary) - identity(n)));
        if unit_defect > STRUCTURE_TOL {
            return Err(Error::domain(format!(
                "real structure is not antiunitary: unitarity defect {unit_defect:.3e}"
            )));
        }
        // J^2 v = U conj(U conj v) = U conj(U) v
        let square_defect = operator_norm(
            &(&unitary * unitary.conjugate() - identity(n) * c(epsilon_prime as f64, 0.0)),
        );
        if square_defect > STRUCTURE_TOL {
            return Err(Error::domain(format!(
                "J^2 differs from {epsilon_prime} I by {square_defect:.3e}"
            )));
        }
        Ok(RealStructure {
            unitary,
            epsilon,
            epsilon_prime,
        })
    }

    /// Entrywise complex conjugation in the computational basis
    /// (`eps = eps' = +1`).
    pub fn conjugation(dim: usize) -> Self {
        RealStructure {
            unitary: identity(dim),
            epsilon: 1,
            epsilon_prime: 1,
        }
    }

    /// Factor exchange composed with conjugation on `C^n (x) C^n`.
    ///
    /// On the algebra `a (x) I` the induced conjugate action lands in the
    /// opposite factor, so gauge unitaries `u J u J^{-1} = w (x) conj(w)` act
    /// faithfully; the plain conjugation structure would give the identity on
    /// any real subalgebra.
    pub fn flip(n: usize) -> Self {
        let dim = n * n;
        let mut swap = CMat::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                swap[(j * n + i, i * n + j)] = c(1.0, 0.0);
            }
        }
        RealStructure {
            unitary: swap,
            epsilon: 1,
            epsilon_prime: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.unitary.nrows()
    }

    pub fn unitary_part(&self) -> &CMat {
        &self.unitary
    }

    pub fn epsilon(&self) -> i8 {
        self.epsilon
    }

    pub fn epsilon_prime(&self) -> i8 {
        self.epsilon_prime
    }

    /// Conjugation action on operators: `J a J^{-1} = U conj(a) U^dag`.
    pub fn conjugate_operator(&self, a: &CMat) -> CMat {
        &self.unitary * a.conjugate() * dagger(&self.unitary)
    }

    /// `||J D - eps D J||` as a matrix defect: `U conj(D) = eps D U`.
    pub fn commutation_defect(&self, d: &HermitianOperator) -> f64 {
        let lhs = &self.unitary * d.matrix().conjugate();
        let rhs = d.matrix() * &self.unitary * c(self.epsilon as f64, 0.0);
        max_abs(&(lhs - rhs))
    }

    /// The gauge unitary `U = u J u J^{-1}` induced by an algebra unitary.
    pub fn gauge_unitary(&self, u: &CMat) -> CMat {
        u * self.conjugate_operator(u)
    }
}

// ---------------------------------------------------------------------------
// fluctuations and gauge transforms

/// The fluctuated operator `D_A = D + A + J A J^{-1}` (or `D + A` without a
/// real structure). `A` must be self-adjoint.
pub fn inner_fluctuation(
    d: &HermitianOperator,
    a: &OneForm,
    j: Option<&RealStructure>,
) -> Result<HermitianOperator> {
    if a.dim() != d.dim() {
        return Err(Error::Dimension {
            context: "inner fluctuation one-form",
            expected: d.dim(),
            got: a.dim(),
        });
    }
    let defect = max_abs(&(a.realized() - dagger(a.realized())));
    if defect > SELF_ADJOINT_TOL {
        return Err(Error::domain(format!(
            "one-form is not self-adjoint: defect {defect:.3e}"
        )));
    }
    let mut out = d.matrix() + a.realized();
    if let Some(j) = j {
        if j.dim() != d.dim() {
            return Err(Error::Dimension {
                context: "inner fluctuation real structure",
                expected: d.dim(),
                got: j.dim(),
            });
        }
        out += j.conjugate_operator(a.realized());
    }
    // self-adjoint up to the tolerance above; store the exact Hermitian part
    HermitianOperator::new((&out + dagger(&out)) * c(0.5, 0.0))
}

/// Gauge transform `A^u = u [D, u^{-1}] + u A u^{-1}` of a one-form by a
/// unitary algebra element.
///
/// The result is returned as a one-form again: `u a [D, b] u^dag` expands to
/// `u a [D, b u^dag] - u a b [D, u^dag]`, so the transformed term list stays
/// inside `{sum a_j [D, b_j]}`.
pub fn gauge_transform(a: &OneForm, u: &CMat, d: &HermitianOperator) -> Result<OneForm> {
    if u.nrows() != d.dim() || u.ncols() != d.dim() {
        return Err(Error::Dimension {
            context: "gauge element",
            expected: d.dim(),
            got: u.nrows().max(u.ncols()),
        });
    }
    let defect = operator_norm(&(u * dagger(u) - identity(d.dim())));
    if defect > STRUCTURE_TOL {
        return Err(Error::domain(format!(
            "gauge element is not unitary: defect {defect:.3e}"
        )));
    }
    let uh = dagger(u);
    let mut terms: Vec<(CMat, CMat)> = vec![(u.clone(), uh.clone())];
    for (aj, bj) in a.terms() {
        terms.push((u * aj, bj * &uh));
        terms.push((-(u * aj * bj), uh.clone()));
    }
    one_form(d, terms)
}

// ---------------------------------------------------------------------------
// code-preserving perturbations

/// A perturbation direction `V` certified to leave a code projection alone:
/// `[P, V] = 0`, `P V P = 0`, and `(I-P) V (I-P) >= c` on the complement.
#[derive(Clone, Debug)]
pub struct PerturbationSpec {
    v: HermitianOperator,
    p: CodeProjection,
    c: f64,
}

impl PerturbationSpec {
    pub fn v(&self) -> &HermitianOperator {
        &self.v
    }

    pub fn p(&self) -> &CodeProjection {
        &self.p
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// Validate the perturbation hypotheses, naming the first failed condition.
pub fn perturbation_spec(
    v: HermitianOperator,
    p: CodeProjection,
    c_bound: f64,
) -> Result<PerturbationSpec> {
    if v.dim() != p.dim() {
        return Err(Error::Dimension {
            context: "perturbation direction",
            expected: p.dim(),
            got: v.dim(),
        });
    }
    if !(c_bound > 0.0 && c_bound.is_finite()) {
        return Err(Error::domain(format!(
            "complement lower bound must be positive, got {c_bound}"
        )));
    }
    let pm = p.matrix();
    let comm = operator_norm(&commutator(pm, v.matrix()));
    if comm > SPEC_TOL {
        return Err(Error::domain(format!(
            "perturbation does not commute with the projection: ||[P,V]|| = {comm:.3e}"
        )));
    }
    let on_code = operator_norm(&(pm * v.matrix() * pm));
    if on_code > SPEC_TOL {
        return Err(Error::domain(format!(
            "perturbation does not vanish on the code: ||PVP|| = {on_code:.3e}"
        )));
    }
    if p.rank() < p.dim() {
        let comp = p.complement_basis();
        let block = comp.adjoint() * v.matrix() * comp;
        let eigh = HermitianOperator::new((&block + dagger(&block)) * c(0.5, 0.0))?.eigh();
        let min = eigh.values.first().copied().unwrap_or(f64::INFINITY);
        if min < c_bound - SPEC_TOL {
            return Err(Error::domain(format!(
                "complement block violates the lower bound: min eigenvalue {min:.6} < c = {c_bound}"
            )));
        }
    }
    Ok(PerturbationSpec { v, p, c: c_bound })
}

/// `D_lambda = D + lambda V` for a certified spec, with the kernel
/// preservation and gap growth checked on the result.
///
/// `D` must be positive semidefinite with `spec.p()` as its kernel
/// projection; the returned report is the spectrum of `D_lambda`.
pub fn perturb_code_preserving(
    d: &HermitianOperator,
    spec: &PerturbationSpec,
    lambda: f64,
) -> Result<(HermitianOperator, SpectrumReport)> {
    if spec.p.dim() != d.dim() {
        return Err(Error::Dimension {
            context: "perturbation base operator",
            expected: spec.p.dim(),
            got: d.dim(),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!(
            "perturbation strength must be nonnegative, got {lambda}"
        )));
    }
    let base = d.spectrum();
    if base.eigenvalues.first().copied().unwrap_or(0.0) < -base.zero_threshold {
        return Err(Error::domain(
            "base operator must be positive semidefinite for the gap to open".to_string(),
        ));
    }
    let scale = d.operator_norm().max(1.0);
    if operator_norm(&(d.matrix() * spec.p.matrix())) > 1e-8 * scale
        || spec.p.rank() != base.kernel_dim
    {
        return Err(Error::domain(
            "spec projection is not the kernel projection of the base operator".to_string(),
        ));
    }

    let fluct = HermitianOperator::new(d.matrix() + spec.v.matrix() * c(lambda, 0.0))?;
    let report = fluct.spectrum();

    let kernel = kernel_projection(&fluct)?;
    if kernel.rank() != spec.p.rank()
        || max_abs(&(kernel.matrix() - spec.p.matrix())) > KERNEL_PRESERVATION_TOL
    {
        return Err(Error::numerical(format!(
            "kernel moved under the perturbation: rank {} vs {}",
            kernel.rank(),
            spec.p.rank()
        )));
    }
    if report.gap < base.gap + lambda * spec.c - 1e-9 {
        return Err(Error::numerical(format!(
            "gap failed to open: {} < {} + {lambda} * {}",
            report.gap, base.gap, spec.c
        )));
    }
    Ok((fluct, report))
}

/// `k(lambda) = sum_i eps_i^2 (1 + C^2 / (Delta + lambda c)^2)`: the
/// correctability constant after opening the gap by `lambda c`.
pub fn k_lambda(eps: &[f64], c_const: f64, delta: f64, c_bound: f64, lambda: f64) -> Result<f64> {
    if eps.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::domain("error norms must be nonnegative".to_string()));
    }
    if !(c_const > 0.0) || !(delta > 0.0) || !(c_bound > 0.0) || !(lambda >= 0.0) {
        return Err(Error::domain(
            "constants C, Delta, c must be positive and lambda nonnegative".to_string(),
        ));
    }
    let denom = delta + lambda * c_bound;
    let factor = 1.0 + c_const * c_const / (denom * denom);
    Ok(eps.iter().map(|e| e * e * factor).sum())
}

// ---------------------------------------------------------------------------
// leakage / gap sweep

/// How the error operator is treated while the gap opens.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    /// Report `||[D_lambda, E]||` for the fixed `E`; the commutator itself
    /// grows with `lambda`, so the bound ratio flattens.
    Raw,
    /// Rescale the commutator column to its `lambda = 0` value, matching the
    /// hypothesis that errors have fixed commutator size; the bound then
    /// decays like `1 / gap`.
    NormalizedCommutator,
}

/// One sweep row; columns in CSV order.
#[derive(Clone, Debug)]
pub struct GapSweepRow {
    pub lambda: f64,
    pub gap: f64,
    pub comm_norm: f64,
    /// `comm_norm / gap`, the single-power bound term.
    pub bound: f64,
    /// `theta * bound^2`, the leakage-suppression estimate.
    pub bound_sq_times_theta: f64,
    /// Literal leakage of the fixed error at `theta`; independent of
    /// `lambda` because the code projection does not move.
    pub leak_literal: f64,
}

#[derive(Clone, Debug)]
pub struct GapSweepReport {
    pub rows: Vec<GapSweepRow>,
    /// Log-log slope of `bound` against the gap (NaN when the bound
    /// vanishes, e.g. for commuting errors).
    pub fitted_slope: f64,
}

/// Open the gap along `lambda` and report how the commutator bound chain
/// tightens, next to the literal leakage it upper-bounds.
pub fn leakage_gap_sweep(
    d: &HermitianOperator,
    spec: &PerturbationSpec,
    error: &CMat,
    theta: f64,
    lambdas: &[f64],
    mode: SweepMode,
) -> Result<GapSweepReport> {
    if error.nrows() != d.dim() || error.ncols() != d.dim() {
        return Err(Error::Dimension {
            context: "sweep error operator",
            expected: d.dim(),
            got: error.nrows().max(error.ncols()),
        });
    }
    if lambdas.is_empty() {
        return Err(Error::domain("sweep grid is empty".to_string()));
    }
    let p = spec.p();
    let sigma = p.matrix() / c(p.rank() as f64, 0.0);
    let family = noise_family(vec![error.clone()])?;
    let base_comm = operator_norm(&commutator(d.matrix(), error));

    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let (fluct, report) = perturb_code_preserving(d, spec, lambda)?;
        let comm_norm = match mode {
            SweepMode::Raw => operator_norm(&commutator(fluct.matrix(), error)),
            SweepMode::NormalizedCommutator => base_comm,
        };
        let bound = comm_norm / report.gap;
        let leak_literal = leakage_probability(p, &family.channel(theta)?, &sigma)?;
        rows.push(GapSweepRow {
            lambda,
            gap: report.gap,
            comm_norm,
            bound,
            bound_sq_times_theta: theta * bound * bound,
            leak_literal,
        });
    }

    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.bound > 0.0)
        .map(|r| (r.gap.ln(), r.bound.ln()))
        .collect();
    let fitted_slope = if pts.len() < 2 {
        f64::NAN
    } else {
        least_squares_slope(&pts)
    };
    Ok(GapSweepReport { rows, fitted_slope })
}

/// Render a gap sweep as CSV with fixed column order and formatting.
pub fn gap_sweep_csv(report: &GapSweepReport) -> String {
    let mut out = String::from("lambda,gap,comm_norm,bound,bound_sq_times_theta,leak_literal\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.lambda, r.gap, r.comm_norm, r.bound, r.bound_sq_times_theta, r.leak_literal
        ));
    }
    out
}
