//! Noise channels, recovery maps, decoders, and threshold estimation.
//!
//! A [`KrausChannel`] is a completely positive map given by its Kraus family,
//! with a trace-preservation certificate checked at construction. Channels are
//! either trace-preserving on the whole space or on a declared support
//! projection (recovery maps built by [`petz_recovery`] are of the second
//! kind). [`NoiseFamily`] turns a fixed error set `{F_i}` into a
//! one-parameter family `theta -> E_theta`, and the remaining functions
//! quantify how well a decoder undoes `E_theta`: entanglement fidelity,
//! leakage, the residual error `T(theta)`, its second-order expansion
//! certificate for the randomizing decoder, and the threshold estimate
//! obtained by fitting `T(theta) = k theta + gamma theta^2`.

use crate::error::{Error, Result};
use crate::operators::{
    c, commutator, dagger, identity, max_abs, operator_norm, partial_trace, trace, CMat,
    CodeProjection, Factor, HermitianOperator,
};

/// Certificate target for trace preservation of constructed channels.
pub const TP_CERT_TOL: f64 = 1e-10;

/// Hard rejection bound for the trace-preservation defect.
pub const TP_REJECT_TOL: f64 = 1e-8;

/// Relative eigenvalue cutoff for the pseudo-inverse in the Petz map.
pub const PETZ_CUTOFF_REL: f64 = 1e-10;

/// Remainders at or below this are treated as "already second order exactly"
/// by the expansion certificate: the log-log fit would only measure noise.
pub const REMAINDER_FLOOR: f64 = 1e-13;

const STATE_TRACE_TOL: f64 = 1e-10;
const STATE_PSD_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// channels

/// A completely positive map in Kraus form.
///
/// `support` is `None` for maps that are trace-preserving on the whole space;
/// a recovery map is trace-preserving only on the support of the channel
/// output it inverts, and carries that projection instead.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    label: String,
    kraus: Vec<CMat>,
    support: Option<CodeProjection>,
    tp_defect: f64,
}

impl KrausChannel {
    /// Build a channel and certify `sum K^dag K = I`.
    ///
    /// Defects above [`TP_REJECT_TOL`] are rejected.
    pub fn new(label: impl Into<String>, kraus: Vec<CMat>) -> Result<Self> {
        let label = label.into();
        let dim = check_kraus_dims(&label, &kraus)?;
        let defect = tp_defect_against(&kraus, &identity(dim));
        if defect > TP_REJECT_TOL {
            return Err(Error::numerical(format!(
                "channel {label} is not trace-preserving: defect {defect:.3e} exceeds {TP_REJECT_TOL:.1e}"
            )));
        }
        Ok(KrausChannel {
            label,
            kraus,
            support: None,
            tp_defect: defect,
        })
    }

    /// Build a channel that is trace-preserving on a declared support only:
    /// the certificate compares `sum K^dag K` against the support projection.
    pub fn new_on_support(
        label: impl Into<String>,
        kraus: Vec<CMat>,
        support: CodeProjection,
    ) -> Result<Self> {
        let label = label.into();
        let dim = check_kraus_dims(&label, &kraus)?;
        if support.dim() != dim {
            return Err(Error::Dimension {
                context: "channel support projection",
                expected: dim,
                got: support.dim(),
            });
        }
        let defect = tp_defect_against(&kraus, support.matrix());
        if defect > TP_REJECT_TOL {
            return Err(Error::numerical(format!(
                "channel {label} is not trace-preserving on its support: defect {defect:.3e}"
            )));
        }
        Ok(KrausChannel {
            label,
            kraus,
            support: Some(support),
            tp_defect: defect,
        })
    }

    /// Composite `self after inner`, Kraus family `{K_self K_inner}`.
    ///
    /// The trace-preservation defect of the composite is measured against the
    /// identity and stored, but not enforced: a support-restricted recovery
    /// composed with noise is trace-preserving only where the noise output
    /// stays inside the recovery's support.
    pub fn compose(&self, inner: &KrausChannel) -> Result<KrausChannel> {
        if self.dim() != inner.dim() {
            return Err(Error::Dimension {
                context: "channel composition",
                expected: self.dim(),
                got: inner.dim(),
            });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * inner.kraus.len());
        for a in &self.kraus {
            for b in &inner.kraus {
                kraus.push(a * b);
            }
        }
        let defect = tp_defect_against(&kraus, &identity(self.dim()));
        Ok(KrausChannel {
            label: format!("{} . {}", self.label, inner.label),
            kraus,
            support: None,
            tp_defect: defect,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    /// Measured trace-preservation defect (against the support if declared).
    pub fn tp_defect(&self) -> f64 {
        self.tp_defect
    }

    /// Dimension of the declared support, if the channel carries one.
    pub fn support_rank(&self) -> Option<usize> {
        self.support.as_ref().map(|p| p.rank())
    }

    pub fn support(&self) -> Option<&CodeProjection> {
        self.support.as_ref()
    }
}

fn check_kraus_dims(label: &str, kraus: &[CMat]) -> Result<usize> {
    if kraus.is_empty() {
        return Err(Error::domain(format!("channel {label} has no Kraus operators")));
    }
    let dim = kraus[0].nrows();
    for k in kraus {
        if k.nrows() != dim || k.ncols() != dim {
            return Err(Error::Dimension {
                context: "Kraus operator",
                expected: dim,
                got: k.nrows().max(k.ncols()),
            });
        }
    }
    Ok(dim)
}

fn tp_defect_against(kraus: &[CMat], target: &CMat) -> f64 {
    let mut acc = CMat::zeros(target.nrows(), target.ncols());
    for k in kraus {
        acc += dagger(k) * k;
    }
    operator_norm(&(acc - target))
}

fn apply_raw(kraus: &[CMat], x: &CMat) -> CMat {
    let mut out = CMat::zeros(x.nrows(), x.ncols());
    for k in kraus {
        out += k * x * dagger(k);
    }
    out
}

/// Validate that `rho` is a density matrix and return its Hermitian part.
fn validate_state(rho: &CMat) -> Result<CMat> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::Dimension {
            context: "density matrix",
            expected: rho.nrows(),
            got: rho.ncols(),
        });
    }
    let herm = (rho + dagger(rho)) * c(0.5, 0.0);
    let asym = max_abs(&(rho - dagger(rho)));
    if asym > STATE_TRACE_TOL {
        return Err(Error::domain(format!(
            "state is not Hermitian: asymmetry {asym:.3e}"
        )));
    }
    let tr = trace(&herm);
    if (tr.re - 1.0).abs() > STATE_TRACE_TOL || tr.im.abs() > STATE_TRACE_TOL {
        return Err(Error::domain(format!(
            "state trace is {:.12} + {:.1e}i, expected 1",
            tr.re, tr.im
        )));
    }
    let eigh = HermitianOperator::new(herm.clone())?.eigh();
    let scale = eigh.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if let Some(min) = eigh.values.first() {
        if *min < -STATE_PSD_TOL * scale {
            return Err(Error::domain(format!(
                "state is not positive semidefinite: eigenvalue {min:.3e}"
            )));
        }
    }
    Ok(herm)
}

/// Apply a channel to a density matrix.
///
/// The input must be a state; for channels without a declared support the
/// output trace is certified to stay at 1 within 1e-9.
pub fn apply_channel(ch: &KrausChannel, rho: &CMat) -> Result<CMat> {
    if rho.nrows() != ch.dim() {
        return Err(Error::Dimension {
            context: "apply_channel state",
            expected: ch.dim(),
            got: rho.nrows(),
        });
    }
    let herm = validate_state(rho)?;
    let out = apply_raw(&ch.kraus, &herm);
    if ch.support.is_none() {
        let tr = trace(&out);
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::numerical(format!(
                "channel output trace drifted to {:.12}",
                tr.re
            )));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// recovery maps and decoders

/// Petz recovery map of `ch` with respect to the state `sigma`:
/// `R_j = sigma^{1/2} E_j^dag E(sigma)^{-1/2}`, pseudo-inverted on the
/// support of `E(sigma)` with relative cutoff [`PETZ_CUTOFF_REL`].
///
/// The returned channel is trace-preserving on that support, which it carries
/// as its declared support (rank available via `support_rank`).
pub fn petz_recovery(sigma: &CMat, ch: &KrausChannel) -> Result<KrausChannel> {
    if sigma.nrows() != ch.dim() {
        return Err(Error::Dimension {
            context: "petz_recovery state",
            expected: ch.dim(),
            got: sigma.nrows(),
        });
    }
    let sigma = validate_state(sigma)?;
    let sigma_half = crate::operators::hermitian_sqrt(&HermitianOperator::new(sigma.clone())?)?;

    let out = apply_raw(&ch.kraus, &sigma);
    let out = HermitianOperator::new((&out + dagger(&out)) * c(0.5, 0.0))?;
    let eigh = out.eigh();
    let scale = eigh.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = PETZ_CUTOFF_REL * scale.max(f64::MIN_POSITIVE);

    let kept: Vec<usize> = (0..eigh.values.len())
        .filter(|&i| eigh.values[i] > cutoff)
        .collect();
    if kept.is_empty() {
        return Err(Error::numerical(
            "channel output on sigma vanished; no support to recover on".to_string(),
        ));
    }
    let n = out.dim();
    let mut inv_half = CMat::zeros(n, n);
    let mut support_basis = CMat::zeros(n, kept.len());
    for (col, &i) in kept.iter().enumerate() {
        let v = eigh.vectors.column(i);
        let w = c(1.0 / eigh.values[i].sqrt(), 0.0);
        for r in 0..n {
            support_basis[(r, col)] = v[r];
        }
        // inv_half += v v^dag / sqrt(lambda)
        for rr in 0..n {
            for cc in 0..n {
                inv_half[(rr, cc)] += v[rr] * v[cc].conj() * w;
            }
        }
    }
    let support = CodeProjection::from_basis(support_basis)?;

    let kraus: Vec<CMat> = ch
        .kraus
        .iter()
        .map(|e| &sigma_half * dagger(e) * &inv_half)
        .collect();
    KrausChannel::new_on_support(format!("petz({})", ch.label), kraus, support)
}

/// Conditional expectation onto the first tensor factor of
/// `H = H_low (x) H_high`: the normalized partial trace
/// `E(X) = tr_high(X) / high_dim`, returned on the low factor.
///
/// Unital and trace-scaling; fails when the matrix dimension does not
/// factor as `low_dim * high_dim` (callers without a factorization should
/// use [`poor_decoder`] instead).
pub fn conditional_expectation(x: &CMat, low_dim: usize, high_dim: usize) -> Result<CMat> {
    if low_dim == 0 || high_dim == 0 || x.nrows() != low_dim * high_dim || !x.is_square() {
        return Err(Error::domain(format!(
            "no tensor factorization: matrix dimension {} is not {low_dim} x {high_dim}",
            x.nrows()
        )));
    }
    let reduced = partial_trace(x, (low_dim, high_dim), Factor::Second)?;
    Ok(reduced / c(high_dim as f64, 0.0))
}

/// The conditional expectation of [`conditional_expectation`] as a channel on
/// the full space: `X -> E(X) (x) I_high`, with Kraus family
/// `(1/sqrt(high)) (I_low (x) |i><j|)`.
pub fn conditional_expectation_channel(low_dim: usize, high_dim: usize) -> Result<KrausChannel> {
    if low_dim == 0 || high_dim == 0 {
        return Err(Error::domain(
            "tensor factors must have positive dimension".to_string(),
        ));
    }
    let dim = low_dim * high_dim;
    let amp = c(1.0 / (high_dim as f64).sqrt(), 0.0);
    let mut kraus = Vec::with_capacity(high_dim * high_dim);
    for i in 0..high_dim {
        for j in 0..high_dim {
            let mut k = CMat::zeros(dim, dim);
            for a in 0..low_dim {
                k[(a * high_dim + i, a * high_dim + j)] = amp;
            }
            kraus.push(k);
        }
    }
    KrausChannel::new("conditional-expectation", kraus)
}

/// The randomizing decoder `Pi(X) = P X P + tr((I-P)X) sigma` with
/// `sigma = P / rank(P)`: keep the code block, replace everything that leaked
/// with the maximally mixed code state.
pub fn poor_decoder(p: &CodeProjection, x: &CMat) -> Result<CMat> {
    if x.nrows() != p.dim() || !x.is_square() {
        return Err(Error::Dimension {
            context: "poor_decoder input",
            expected: p.dim(),
            got: x.nrows(),
        });
    }
    let pm = p.matrix();
    let kept = pm * x * pm;
    let leaked = trace(x) - trace(&kept);
    Ok(&kept + pm * (leaked / c(p.rank() as f64, 0.0)))
}

/// Kraus form of [`poor_decoder`]: `{P} ∪ {(1/sqrt d) |k><alpha|}` over the
/// code basis `k` and a complement basis `alpha`.
pub fn poor_decoder_channel(p: &CodeProjection) -> Result<KrausChannel> {
    let n = p.dim();
    let d = p.rank();
    let mut kraus = vec![p.matrix().clone()];
    let code = p.basis();
    let comp = p.complement_basis();
    let amp = c(1.0 / (d as f64).sqrt(), 0.0);
    for k in 0..d {
        for a in 0..comp.ncols() {
            let mut op = CMat::zeros(n, n);
            for r in 0..n {
                for cc in 0..n {
                    op[(r, cc)] = amp * code[(r, k)] * comp[(cc, a)].conj();
                }
            }
            kraus.push(op);
        }
    }
    KrausChannel::new("poor-decoder", kraus)
}

// ---------------------------------------------------------------------------
// fidelity and leakage

fn fe_from_kraus(sigma: &CMat, kraus: &[CMat]) -> f64 {
    let mut fe = 0.0;
    for k in kraus {
        let t = trace(&(sigma * k));
        fe += t.norm_sqr();
    }
    fe.min(1.0)
}

/// Entanglement fidelity `F_e(sigma, ch) = sum_j |tr(sigma K_j)|^2`.
///
/// Invariant under isometric remixing of the Kraus list.
pub fn entanglement_fidelity(sigma: &CMat, ch: &KrausChannel) -> Result<f64> {
    if sigma.nrows() != ch.dim() {
        return Err(Error::Dimension {
            context: "entanglement_fidelity state",
            expected: ch.dim(),
            got: sigma.nrows(),
        });
    }
    let herm = validate_state(sigma)?;
    Ok(fe_from_kraus(&herm, &ch.kraus))
}

/// Leakage probability `tr((I-P) ch(sigma))` for a state supported in `P`.
pub fn leakage_probability(p: &CodeProjection, ch: &KrausChannel, sigma: &CMat) -> Result<f64> {
    if p.dim() != ch.dim() {
        return Err(Error::Dimension {
            context: "leakage_probability projection",
            expected: ch.dim(),
            got: p.dim(),
        });
    }
    let herm = validate_state(sigma)?;
    let pm = p.matrix();
    if max_abs(&(&herm - pm * &herm * pm)) > 1e-9 {
        return Err(Error::domain(
            "state is not supported inside the code projection".to_string(),
        ));
    }
    let out = apply_raw(&ch.kraus, &herm);
    let leak = (trace(&out) - trace(&(pm * &out))).re;
    Ok(leak.clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// noise families

enum Completion {
    /// `sum F^dag F = s I`: the completing operator is the scalar
    /// `sqrt(1 - theta s) I`.
    Scalar { s: f64 },
    /// General completion `E_0 = (I - theta sum F^dag F)^{1/2}` from the
    /// eigendecomposition of the error overlap.
    General { values: Vec<f64>, vectors: CMat },
}

/// A one-parameter noise family `theta -> {E_0(theta)} ∪ {sqrt(theta) F_i}`
/// built from a fixed error set, trace-preserving for
/// `theta ∈ [0, max_theta]`.
pub struct NoiseFamily {
    errors: Vec<CMat>,
    dim: usize,
    completion: Completion,
}

impl NoiseFamily {
    pub fn errors(&self) -> &[CMat] {
        &self.errors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest `theta` for which the completed channel exists.
    pub fn max_theta(&self) -> f64 {
        match &self.completion {
            Completion::Scalar { s } => {
                if *s > 0.0 {
                    1.0 / s
                } else {
                    f64::INFINITY
                }
            }
            Completion::General { values, .. } => {
                let top = values.iter().fold(0.0f64, |m, v| m.max(*v));
                if top > 0.0 {
                    1.0 / top
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// The channel at noise strength `theta`.
    pub fn channel(&self, theta: f64) -> Result<KrausChannel> {
        if !theta.is_finite() || theta < 0.0 || theta > self.max_theta() {
            return Err(Error::domain(format!(
                "noise strength {theta} outside [0, {:.6}]",
                self.max_theta()
            )));
        }
        let e0 = match &self.completion {
            Completion::Scalar { s } => identity(self.dim) * c((1.0 - theta * s).max(0.0).sqrt(), 0.0),
            Completion::General { values, vectors } => {
                let mut d = CMat::zeros(self.dim, self.dim);
                for (i, v) in values.iter().enumerate() {
                    d[(i, i)] = c((1.0 - theta * v).max(0.0).sqrt(), 0.0);
                }
                vectors * d * vectors.adjoint()
            }
        };
        let mut kraus = vec![e0];
        let amp = c(theta.sqrt(), 0.0);
        for f in &self.errors {
            kraus.push(f * amp);
        }
        KrausChannel::new(format!("noise(theta={theta})"), kraus)
    }
}

/// Build a [`NoiseFamily`] from its error set.
///
/// When `sum F^dag F` is a scalar the cheap scalar completion is used;
/// otherwise the matrix square root completion.
pub fn noise_family(errors: Vec<CMat>) -> Result<NoiseFamily> {
    if errors.is_empty() {
        return Err(Error::domain("noise family has no error operators".to_string()));
    }
    let dim = errors[0].nrows();
    for f in &errors {
        if f.nrows() != dim || f.ncols() != dim {
            return Err(Error::Dimension {
                context: "noise family error operator",
                expected: dim,
                got: f.nrows().max(f.ncols()),
            });
        }
    }
    let mut overlap = CMat::zeros(dim, dim);
    for f in &errors {
        overlap += dagger(f) * f;
    }
    let s = trace(&overlap).re / dim as f64;
    let completion = if operator_norm(&(&overlap - identity(dim) * c(s, 0.0))) <= 1e-12 {
        Completion::Scalar { s }
    } else {
        let eigh = HermitianOperator::new(overlap)?.eigh();
        Completion::General {
            values: eigh.values,
            vectors: eigh.vectors,
        }
    };
    Ok(NoiseFamily {
        errors,
        dim,
        completion,
    })
}

// ---------------------------------------------------------------------------
// residual error and its second-order certificate

/// Which decoder closes the noise channel in `T(theta) = 1 - F_e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decoder {
    /// Petz recovery with respect to the reference state (default).
    Petz,
    /// Petz recovery followed by the conditional expectation onto the first
    /// factor of the supplied tensor factorization.
    PetzThenExpectation { low_dim: usize, high_dim: usize },
    /// The randomizing decoder of [`poor_decoder`].
    Poor,
}

/// Residual error `T(theta) = 1 - F_e(sigma, decode ∘ E_theta)`.
pub fn residual_error_t(
    sigma: &CMat,
    p: &CodeProjection,
    noise: &NoiseFamily,
    theta: f64,
    decoder: &Decoder,
) -> Result<f64> {
    let ch = noise.channel(theta)?;
    let composite = match decoder {
        Decoder::Petz => petz_recovery(sigma, &ch)?.compose(&ch)?,
        Decoder::PetzThenExpectation { low_dim, high_dim } => {
            if low_dim * high_dim != ch.dim() {
                return Err(Error::domain(format!(
                    "decoder factorization {low_dim} x {high_dim} does not match dimension {}; \
                     use the randomizing decoder when no factorization exists",
                    ch.dim()
                )));
            }
            let ce = conditional_expectation_channel(*low_dim, *high_dim)?;
            ce.compose(&petz_recovery(sigma, &ch)?)?.compose(&ch)?
        }
        Decoder::Poor => poor_decoder_channel(p)?.compose(&ch)?,
    };
    let fe = entanglement_fidelity(sigma, &composite)?;
    Ok(1.0 - fe)
}

/// Fit report for the second-order expansion of the randomizing decoder's
/// residual error.
#[derive(Clone, Debug)]
pub struct ExpansionFit {
    pub thetas: Vec<f64>,
    /// `T~(theta)` as computed.
    pub residual: Vec<f64>,
    /// `theta sum_i Var(P F_i P) + (1 - 1/d^2) P_leak(theta)`.
    pub expansion: Vec<f64>,
    /// `|residual - expansion|` per grid point.
    pub remainder: Vec<f64>,
    /// Log-log slope of the remainder; `>= 1.9` certifies a second-order
    /// remainder, infinite when the remainder sits at the floating floor.
    pub slope: f64,
    /// True when the remainders are too small to fit (already exactly
    /// second order to machine precision).
    pub at_floor: bool,
}

/// Sum of code-state variances `Var(P F_i P)` over the error set, with
/// respect to `sigma`.
fn variance_sum(p: &CodeProjection, sigma: &CMat, errors: &[CMat]) -> f64 {
    let pm = p.matrix();
    let mut total = 0.0;
    for f in errors {
        let a = pm * f * pm;
        let second = trace(&(sigma * dagger(&a) * &a)).re;
        let first = trace(&(sigma * &a)).norm_sqr();
        total += second - first;
    }
    total
}

/// Evaluate `T~(theta) - [theta sum Var(P F_i P) + (1 - 1/d^2) P_leak]` on a
/// grid and certify that the remainder is second order in `theta`.
pub fn verify_poor_decoder_expansion(
    p: &CodeProjection,
    noise: &NoiseFamily,
    thetas: &[f64],
) -> Result<ExpansionFit> {
    if thetas.len() < 2 {
        return Err(Error::domain(
            "expansion certificate needs at least 2 grid points".to_string(),
        ));
    }
    for &t in thetas {
        if !(t > 0.0 && t <= 1e-2) {
            return Err(Error::domain(format!(
                "expansion grid point {t} outside (0, 1e-2]"
            )));
        }
    }
    if noise.dim() != p.dim() {
        return Err(Error::Dimension {
            context: "expansion noise family",
            expected: p.dim(),
            got: noise.dim(),
        });
    }
    let d = p.rank() as f64;
    let sigma = p.matrix() / c(d, 0.0);
    let var = variance_sum(p, &sigma, noise.errors());

    let mut residual = Vec::with_capacity(thetas.len());
    let mut expansion = Vec::with_capacity(thetas.len());
    let mut remainder = Vec::with_capacity(thetas.len());
    for &t in thetas {
        let tt = residual_error_t(&sigma, p, noise, t, &Decoder::Poor)?;
        let leak = leakage_probability(p, &noise.channel(t)?, &sigma)?;
        let exp = t * var + (1.0 - 1.0 / (d * d)) * leak;
        residual.push(tt);
        expansion.push(exp);
        remainder.push((tt - exp).abs());
    }

    let fit: Vec<(f64, f64)> = thetas
        .iter()
        .zip(&remainder)
        .filter(|(_, r)| **r > REMAINDER_FLOOR)
        .map(|(t, r)| (t.ln(), r.ln()))
        .collect();
    let (slope, at_floor) = if fit.len() < 2 {
        (f64::INFINITY, true)
    } else {
        (least_squares_slope(&fit), false)
    };
    Ok(ExpansionFit {
        thetas: thetas.to_vec(),
        residual,
        expansion,
        remainder,
        slope,
        at_floor,
    })
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in points {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

// ---------------------------------------------------------------------------
// threshold estimation

/// Result of fitting `T(theta) = k theta + gamma theta^2` and iterating the
/// fitted map.
#[derive(Clone, Debug)]
pub struct ThresholdReport {
    pub thetas: Vec<f64>,
    pub samples: Vec<f64>,
    pub k: f64,
    pub gamma: f64,
    /// `(1 - k) / gamma` when `k < 1`; 0 when `k >= 1`; infinite when the
    /// fitted map is subcritical with no quadratic term.
    pub theta_th: f64,
    /// Largest absolute deviation of the fit from the samples.
    pub max_residual: f64,
    /// True when a negative fitted coefficient was clipped to 0 and refit.
    pub clipped: bool,
    /// Trace of `theta_{n+1} = k theta_n + gamma theta_n^2` from `theta_0`.
    pub iteration: Vec<f64>,
    /// True when the iteration decreased strictly at every step.
    pub monotone_decreasing: bool,
}

/// Constrained least-squares fit of residual-error samples and iteration of
/// the fitted map from `theta0`.
pub fn threshold_estimate(
    thetas: &[f64],
    samples: &[f64],
    theta0: f64,
    steps: usize,
) -> Result<ThresholdReport> {
    if thetas.len() < 4 {
        return Err(Error::domain(format!(
            "threshold fit needs at least 4 grid points, got {}",
            thetas.len()
        )));
    }
    if thetas.len() != samples.len() {
        return Err(Error::Dimension {
            context: "threshold samples",
            expected: thetas.len(),
            got: samples.len(),
        });
    }
    for &t in thetas {
        if !(t > 0.0 && t <= 1e-1) {
            return Err(Error::domain(format!(
                "threshold grid point {t} outside (0, 1e-1]"
            )));
        }
    }
    if samples.iter().any(|s| !s.is_finite()) || !theta0.is_finite() || theta0 < 0.0 {
        return Err(Error::domain("threshold samples and theta0 must be finite".to_string()));
    }

    // normal equations for the two-column Vandermonde system in (theta, theta^2)
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &y) in thetas.iter().zip(samples) {
        s11 += t * t;
        s12 += t * t * t;
        s22 += t * t * t * t;
        b1 += t * y;
        b2 += t * t * y;
    }
    let det = s11 * s22 - s12 * s12;
    if det <= 0.0 {
        return Err(Error::domain(
            "threshold grid points must not all coincide".to_string(),
        ));
    }
    let mut k = (b1 * s22 - b2 * s12) / det;
    let mut gamma = (s11 * b2 - s12 * b1) / det;
    let mut clipped = false;
    if k < 0.0 {
        k = 0.0;
        gamma = (b2 / s22).max(0.0);
        clipped = true;
    }
    if gamma < 0.0 {
        gamma = 0.0;
        k = (b1 / s11).max(0.0);
        clipped = true;
    }

    let theta_th = if k >= 1.0 {
        0.0
    } else if gamma > 0.0 {
        (1.0 - k) / gamma
    } else {
        f64::INFINITY
    };
    let max_residual = thetas
        .iter()
        .zip(samples)
        .map(|(&t, &y)| (k * t + gamma * t * t - y).abs())
        .fold(0.0, f64::max);

    let mut iteration = Vec::with_capacity(steps + 1);
    iteration.push(theta0);
    for _ in 0..steps {
        let cur = *iteration.last().unwrap();
        iteration.push(k * cur + gamma * cur * cur);
    }
    let monotone_decreasing = iteration.windows(2).all(|w| w[1] < w[0]);

    Ok(ThresholdReport {
        thetas: thetas.to_vec(),
        samples: samples.to_vec(),
        k,
        gamma,
        theta_th,
        max_residual,
        clipped,
        iteration,
        monotone_decreasing,
    })
}

// ---------------------------------------------------------------------------
// gap and commutator bounds

/// Norm data for one error operator against a gapped reference operator.
#[derive(Clone, Debug)]
pub struct CommutatorBound {
    /// `||(I-P) E P||`: how strongly the error maps code out of code.
    pub leakage_norm: f64,
    /// `||[P, E]||`.
    pub projector_commutator_norm: f64,
    /// `||[D, E]||`.
    pub dirac_commutator_norm: f64,
    /// Empirical constant `||[P,E]|| * gap / ||[D,E]||` (0 when `[D,E] = 0`).
    pub c_emp: f64,
    /// `||(I-P) E P|| <= ||[P,E]||`, which holds as an operator identity.
    pub chain_holds: bool,
}

#[derive(Clone, Debug)]
pub struct GapCommutatorReport {
    pub gap: f64,
    pub bounds: Vec<CommutatorBound>,
}

/// For each error `E`, report `||(I-P)EP||`, `||[P,E]||`, `||[D,E]||`, and
/// the empirical constant relating them through the spectral gap of `D`.
///
/// `P` must be the kernel projection of `D`, and `D` must have a positive
/// gap.
pub fn gap_commutator_bounds(
    p: &CodeProjection,
    d: &HermitianOperator,
    errors: &[CMat],
) -> Result<GapCommutatorReport> {
    if p.dim() != d.dim() {
        return Err(Error::Dimension {
            context: "gap_commutator_bounds projection",
            expected: d.dim(),
            got: p.dim(),
        });
    }
    let spectrum = d.spectrum();
    if spectrum.gap <= 0.0 {
        return Err(Error::domain(
            "operator has no spectral gap above its kernel".to_string(),
        ));
    }
    let dm = d.matrix();
    let scale = operator_norm(dm).max(1.0);
    if operator_norm(&(dm * p.matrix())) > 1e-8 * scale || p.rank() != spectrum.kernel_dim {
        return Err(Error::domain(
            "projection is not the kernel projection of the operator".to_string(),
        ));
    }

    let pm = p.matrix();
    let comp = identity(p.dim()) - pm;
    let mut bounds = Vec::with_capacity(errors.len());
    for e in errors {
        if e.nrows() != p.dim() || e.ncols() != p.dim() {
            return Err(Error::Dimension {
                context: "gap_commutator_bounds error",
                expected: p.dim(),
                got: e.nrows().max(e.ncols()),
            });
        }
        let leakage_norm = operator_norm(&(&comp * e * pm));
        let projector_commutator_norm = operator_norm(&commutator(pm, e));
        let dirac_commutator_norm = operator_norm(&commutator(dm, e));
        let c_emp = if dirac_commutator_norm > 1e-14 * scale {
            projector_commutator_norm * spectrum.gap / dirac_commutator_norm
        } else {
            0.0
        };
        let chain_holds =
            leakage_norm <= projector_commutator_norm + 1e-12 * projector_commutator_norm.max(1.0);
        bounds.push(CommutatorBound {
            leakage_norm,
            projector_commutator_norm,
            dirac_commutator_norm,
            c_emp,
            chain_holds,
        });
    }
    Ok(GapCommutatorReport {
        gap: spectrum.gap,
        bounds,
    })
}

// ---------------------------------------------------------------------------
// sweeps

/// One row of a noise-strength sweep.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub theta: f64,
    /// Residual error under the chosen decoder.
    pub t: f64,
    /// Second-order expansion `theta sum Var + (1 - 1/d^2) P_leak`.
    pub t_expansion: f64,
    pub p_leak: f64,
    pub fe: f64,
}

/// Evaluate the residual error, its expansion, the leakage, and the fidelity
/// on a grid of noise strengths.
pub fn threshold_sweep(
    sigma: &CMat,
    p: &CodeProjection,
    noise: &NoiseFamily,
    thetas: &[f64],
    decoder: &Decoder,
) -> Result<Vec<SweepRow>> {
    if thetas.is_empty() {
        return Err(Error::domain("sweep grid is empty".to_string()));
    }
    let herm = validate_state(sigma)?;
    let d = p.rank() as f64;
    let var = variance_sum(p, &herm, noise.errors());
    let mut rows = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let t = residual_error_t(&herm, p, noise, theta, decoder)?;
        let p_leak = leakage_probability(p, &noise.channel(theta)?, &herm)?;
        rows.push(SweepRow {
            theta,
            t,
            t_expansion: theta * var + (1.0 - 1.0 / (d * d)) * p_leak,
            p_leak,
            fe: 1.0 - t,
        });
    }
    Ok(rows)
}

/// Render sweep rows as CSV with a fixed column order and fixed-width
/// scientific formatting, so identical runs produce identical bytes.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("theta,T,T_expansion,P_leak,Fe\n");
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.theta, r.t, r.t_expansion, r.p_leak, r.fe
        ));
    }
    out
}
