//! Matrix quantization of the round 2-sphere.
//!
//! At flux `p` the sphere is represented on the `p + 1` dimensional space
//! spanned by the lowest-level basis `psi_k ~ z^k (1 + |z|^2)^{-p/2}`, and a
//! function `f` becomes the [`toeplitz_matrix`] `T(f)` with entries
//! `<psi_j | f | psi_k>` computed by Gauss-Legendre x uniform-angle
//! quadrature. As `p` grows these matrices restore the algebra of functions:
//! products, Poisson brackets, traces, and sup norms are reproduced up to
//! `O(1/p)` defects, which [`verify_axioms`] measures and fits. The
//! first-order product correction has an explicit closed form checked by
//! [`verify_c1`], and [`kl_approx_check`] quantifies how close `T(f)* T(g)`
//! is to a scalar, the approximate error-correction statement for
//! functions with far-apart supports.
//!
//! Conventions fixed here once and used throughout: the area form is
//! `du ^ dphi` (total area `4 pi`), the Poisson bracket is
//! `{f, g} = f_u g_phi - f_phi g_u` so that `{x, y} = -z` and cyclic, and
//! the semiclassical parameter is `hbar = Area / (2 pi p) = 2 / p`.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;

use crate::channels::least_squares_slope;
use crate::error::{Error, Result};
use crate::operators::{c, commutator, dagger, identity, operator_norm, trace, CMat};

/// Certificate target for the basis Gram matrix against the identity.
pub const GRAM_CERT_TOL: f64 = 1e-8;

/// Hard rejection bound for the Gram defect.
pub const GRAM_REJECT_TOL: f64 = 1e-6;

/// Central-difference step for gradients of callable functions.
pub const FD_STEP: f64 = 1e-5;

/// Grid used by [`SphereFunction::sup_norm`]: polar intervals x azimuthal
/// points. Coarse enough to be cheap, fine enough that the poles and both
/// coordinate equator extremes are hit exactly.
const SUP_GRID: (usize, usize) = (1024, 256);

// ---------------------------------------------------------------------------
// functions on the sphere

/// A real observable on the unit sphere.
///
/// Polynomials in the embedding coordinates carry exact gradients; arbitrary
/// callables of the polar angles are differentiated by central differences
/// with step [`FD_STEP`]. Real-valued functions produce Hermitian Toeplitz
/// matrices.
#[derive(Clone)]
pub enum SphereFunction {
    /// `sum c * x^a y^b z^e` over the listed `(c, [a, b, e])` terms.
    Monomials(Vec<(f64, [u32; 3])>),
    /// `f(theta, phi)` with `theta` measured from the north pole.
    Callable(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl SphereFunction {
    pub fn constant(v: f64) -> Self {
        Self::Monomials(vec![(v, [0, 0, 0])])
    }

    pub fn x() -> Self {
        Self::Monomials(vec![(1.0, [1, 0, 0])])
    }

    pub fn y() -> Self {
        Self::Monomials(vec![(1.0, [0, 1, 0])])
    }

    /// The height function, `cos theta`.
    pub fn z() -> Self {
        Self::Monomials(vec![(1.0, [0, 0, 1])])
    }

    pub fn from_fn(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Callable(Arc::new(f))
    }

    /// Smooth cap bump: `exp(1 - 1/(1 - t^2))` for `t = (theta - theta0)/width`
    /// inside `|t| < 1`, zero outside. Peak value 1 at `theta0`.
    pub fn bump(theta0: f64, width: f64) -> Self {
        Self::from_fn(move |theta, _| {
            let t = (theta - theta0) / width;
            if t.abs() < 1.0 {
                (1.0 - 1.0 / (1.0 - t * t)).exp()
            } else {
                0.0
            }
        })
    }

    pub fn eval(&self, theta: f64, phi: f64) -> f64 {
        match self {
            Self::Monomials(_) => self.eval_u(theta.cos(), phi),
            Self::Callable(f) => f(theta, phi),
        }
    }

    /// Evaluate at `u = cos theta`.
    fn eval_u(&self, u: f64, phi: f64) -> f64 {
        match self {
            Self::Monomials(terms) => {
                let s = (1.0 - u * u).max(0.0).sqrt();
                let (x, y, z) = (s * phi.cos(), s * phi.sin(), u);
                terms
                    .iter()
                    .map(|&(coeff, [a, b, e])| {
                        coeff * x.powi(a as i32) * y.powi(b as i32) * z.powi(e as i32)
                    })
                    .sum()
            }
            Self::Callable(f) => f(u.clamp(-1.0, 1.0).acos(), phi),
        }
    }

    /// Tangential gradient at `u = cos theta`, in ambient components.
    ///
    /// Exact for monomials (symbolic ambient gradient projected onto the
    /// tangent plane), central differences in `(u, phi)` for callables.
    fn gradient_u(&self, u: f64, phi: f64) -> [f64; 3] {
        let s = (1.0 - u * u).max(0.0).sqrt();
        let (cp, sp) = (phi.cos(), phi.sin());
        match self {
            Self::Monomials(terms) => {
                let (x, y, z) = (s * cp, s * sp, u);
                let mut g = [0.0; 3];
                for &(coeff, [a, b, e]) in terms {
                    let pw = |v: f64, n: u32| v.powi(n as i32);
                    if a > 0 {
                        g[0] += coeff * a as f64 * pw(x, a - 1) * pw(y, b) * pw(z, e);
                    }
                    if b > 0 {
                        g[1] += coeff * pw(x, a) * b as f64 * pw(y, b - 1) * pw(z, e);
                    }
                    if e > 0 {
                        g[2] += coeff * pw(x, a) * pw(y, b) * e as f64 * pw(z, e - 1);
                    }
                }
                let radial = g[0] * x + g[1] * y + g[2] * z;
                [g[0] - radial * x, g[1] - radial * y, g[2] - radial * z]
            }
            Self::Callable(_) => {
                let h = FD_STEP;
                let f_u = (self.eval_u(u + h, phi) - self.eval_u(u - h, phi)) / (2.0 * h);
                let f_phi = (self.eval_u(u, phi + h) - self.eval_u(u, phi - h)) / (2.0 * h);
                // grad = f_theta the_hat + (f_phi / s) phi_hat, f_theta = -s f_u
                [
                    -s * f_u * u * cp - f_phi * sp / s,
                    -s * f_u * u * sp + f_phi * cp / s,
                    s * s * f_u,
                ]
            }
        }
    }

    /// Sup of `|f|` over a fixed fine angular grid.
    pub fn sup_norm(&self) -> f64 {
        let (n_theta, n_phi) = SUP_GRID;
        let mut sup: f64 = 0.0;
        for i in 0..=n_theta {
            let theta = PI * i as f64 / n_theta as f64;
            for j in 0..n_phi {
                let phi = TAU * j as f64 / n_phi as f64;
                sup = sup.max(self.eval(theta, phi).abs());
            }
        }
        sup
    }
}

/// Pointwise `{f, g} = -r . (grad f x grad g)` from tangential gradients.
fn poisson_value(f: &SphereFunction, g: &SphereFunction, u: f64, phi: f64) -> f64 {
    let s = (1.0 - u * u).max(0.0).sqrt();
    let r = [s * phi.cos(), s * phi.sin(), u];
    let gf = f.gradient_u(u, phi);
    let gg = g.gradient_u(u, phi);
    let cross = [
        gf[1] * gg[2] - gf[2] * gg[1],
        gf[2] * gg[0] - gf[0] * gg[2],
        gf[0] * gg[1] - gf[1] * gg[0],
    ];
    -(r[0] * cross[0] + r[1] * cross[1] + r[2] * cross[2])
}

/// First product coefficient `C1(f, g) = -1/2 <grad f, grad g> + i/2 {f, g}`.
///
/// The antisymmetric part is pinned by the commutator axiom: expanding
/// `T(f) T(g) - T(fg) = hbar T(C1) + O(hbar^2)` and antisymmetrizing must
/// reproduce `[T(f), T(g)] = i hbar T({f, g}) + O(hbar^2)`.
fn c1_value(f: &SphereFunction, g: &SphereFunction, u: f64, phi: f64) -> Complex64 {
    let gf = f.gradient_u(u, phi);
    let gg = g.gradient_u(u, phi);
    let pairing = gf[0] * gg[0] + gf[1] * gg[1] + gf[2] * gg[2];
    c(-0.5 * pairing, 0.5 * poisson_value(f, g, u, phi))
}

// ---------------------------------------------------------------------------
// quadrature

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (value, slope) = legendre_with_derivative(q, x);
            let step = value / slope;
            x -= step;
            if step.abs() <= 1e-15 {
                break;
            }
        }
        let (_, slope) = legendre_with_derivative(q, x);
        let w = 2.0 / ((1.0 - x * x) * slope * slope);
        nodes[i] = -x;
        weights[i] = w;
        nodes[q - 1 - i] = x;
        weights[q - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_q(x), P_q'(x))` by the three-term recurrence.
fn legendre_with_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut curr = x;
    for n in 1..q {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * x * curr - nf * prev) / (nf + 1.0);
        prev = curr;
        curr = next;
    }
    (curr, q as f64 * (x * curr - prev) / (x * x - 1.0))
}

// ---------------------------------------------------------------------------
// the quantizer

/// Quadrature, orthonormal basis, and semiclassical scale at a fixed flux.
///
/// The basis magnitudes are evaluated through log-gamma weights so large `p`
/// stays finite; azimuthal dependence of `psi_k` is the pure mode
/// `exp(i k phi)` and is handled exactly by the uniform angle grid.
#[derive(Clone)]
pub struct ToeplitzQuantizer {
    p: usize,
    order: usize,
    u_nodes: Vec<f64>,
    u_weights: Vec<f64>,
    n_phi: usize,
    phi_weight: f64,
    /// `basis[k][iu]`: magnitude of `psi_k` at the polar node.
    basis: Vec<Vec<f64>>,
    hbar: f64,
    volume: f64,
    gram_defect: f64,
}

/// Build the quantizer at flux `p` with Gauss-Legendre order `order`.
///
/// Requires `p >= 1` and `order >= p + 4`; the azimuthal grid has `2p + 8`
/// points, exact for every mode the basis products contain. The Gram matrix
/// of the basis is certified against the identity: defects above
/// [`GRAM_REJECT_TOL`] are rejected as insufficient quadrature.
pub fn build_quantizer(p: usize, order: usize) -> Result<ToeplitzQuantizer> {
    if p < 1 {
        return Err(Error::domain("flux p must be at least 1"));
    }
    if order < p + 4 {
        return Err(Error::domain(format!(
            "quadrature order {order} is below the required p + 4 = {}",
            p + 4
        )));
    }
    let (u_nodes, u_weights) = gauss_legendre(order);
    let n_phi = 2 * p + 8;
    let phi_weight = TAU / n_phi as f64;

    // ln binomial(p, k), summed in logs so p in the hundreds stays finite
    let mut ln_binom = vec![0.0; p + 1];
    for k in 1..=p {
        ln_binom[k] =
            ln_binom[k - 1] + ((p - k + 1) as f64).ln() - (k as f64).ln();
    }
    let ln_scale = ((p + 1) as f64 / (4.0 * PI)).ln();
    let basis: Vec<Vec<f64>> = (0..=p)
        .map(|k| {
            u_nodes
                .iter()
                .map(|&u| {
                    let ln_mag = 0.5
                        * (ln_scale
                            + ln_binom[k]
                            + k as f64 * ((1.0 - u) / 2.0).ln()
                            + (p - k) as f64 * ((1.0 + u) / 2.0).ln());
                    ln_mag.exp()
                })
                .collect()
        })
        .collect();

    let volume = u_weights.iter().sum::<f64>() * TAU;
    let mut qz = ToeplitzQuantizer {
        p,
        order,
        u_nodes,
        u_weights,
        n_phi,
        phi_weight,
        basis,
        hbar: volume / (TAU * p as f64),
        volume,
        gram_defect: 0.0,
    };
    let gram = toeplitz_matrix(&qz, &SphereFunction::constant(1.0));
    let defect = operator_norm(&(gram - identity(p + 1)));
    if defect > GRAM_REJECT_TOL {
        return Err(Error::numerical(format!(
            "basis Gram defect {defect:.3e} at flux {p}: quadrature order {order} is too low"
        )));
    }
    qz.gram_defect = defect;
    Ok(qz)
}

impl ToeplitzQuantizer {
    pub fn p(&self) -> usize {
        self.p
    }

    /// Matrix dimension `p + 1`.
    pub fn basis_size(&self) -> usize {
        self.p + 1
    }

    pub fn quadrature_order(&self) -> usize {
        self.order
    }

    /// Semiclassical parameter; defaults to `Area / (2 pi p) = 2 / p`.
    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Override the semiclassical parameter (must be positive and finite).
    pub fn set_hbar(&mut self, hbar: f64) -> Result<()> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::domain(format!(
                "hbar must be positive and finite, got {hbar}"
            )));
        }
        self.hbar = hbar;
        Ok(())
    }

    /// Operator-norm distance of the basis Gram matrix from the identity.
    pub fn gram_defect(&self) -> f64 {
        self.gram_defect
    }

    /// Quadrature area of the sphere (`4 pi` up to rounding).
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// `integral f dmu` by the stored quadrature.
    pub fn integrate(&self, f: &SphereFunction) -> f64 {
        let mut acc = 0.0;
        for (iu, &u) in self.u_nodes.iter().enumerate() {
            let mut ring = 0.0;
            for t in 0..self.n_phi {
                ring += f.eval_u(u, self.phi_weight * t as f64);
            }
            acc += self.u_weights[iu] * ring;
        }
        acc * self.phi_weight
    }

    /// Values of `f` on the quadrature grid, `[iu][iphi]`.
    fn grid(&self, f: &SphereFunction) -> Vec<Vec<Complex64>> {
        self.u_nodes
            .iter()
            .map(|&u| {
                (0..self.n_phi)
                    .map(|t| c(f.eval_u(u, self.phi_weight * t as f64), 0.0))
                    .collect()
            })
            .collect()
    }

    /// `T` of arbitrary complex grid values.
    ///
    /// Per polar node the azimuthal sum is a plain Fourier transform of the
    /// values; entry `(j, k)` only sees the mode `k - j`.
    fn compress(&self, values: &[Vec<Complex64>]) -> CMat {
        let n = self.p + 1;
        let span = self.p as i64;
        let roots: Vec<Complex64> = (0..self.n_phi)
            .map(|idx| Complex64::from_polar(1.0, TAU * idx as f64 / self.n_phi as f64))
            .collect();
        let mut out = CMat::zeros(n, n);
        for (iu, row) in values.iter().enumerate() {
            let mut modes = vec![Complex64::ZERO; 2 * self.p + 1];
            for (m_idx, mode) in modes.iter_mut().enumerate() {
                let m = m_idx as i64 - span;
                let mut acc = Complex64::ZERO;
                for (t, &v) in row.iter().enumerate() {
                    acc += v * roots[(m * t as i64).rem_euclid(self.n_phi as i64) as usize];
                }
                *mode = acc * self.phi_weight;
            }
            let wu = self.u_weights[iu];
            for j in 0..n {
                for k in 0..n {
                    let weight = wu * self.basis[j][iu] * self.basis[k][iu];
                    out[(j, k)] += weight * modes[(k as i64 - j as i64 + span) as usize];
                }
            }
        }
        out
    }
}

/// `T(f)_{jk} = <psi_j | f | psi_k>` by quadrature; Hermitian for real `f`.
pub fn toeplitz_matrix(qz: &ToeplitzQuantizer, f: &SphereFunction) -> CMat {
    qz.compress(&qz.grid(f))
}

// ---------------------------------------------------------------------------
// calibration and the trace law

/// Result of fitting the commutator scale, see
/// [`calibrate_commutator_scale`].
#[derive(Clone, Debug)]
pub struct CommutatorCalibration {
    /// Multiplier on the `1/p` baseline that best matches the bracket.
    pub s: f64,
    /// `||(i s/p)^{-1} [T(x), T(y)] - T({x, y})||` at the fitted `s`.
    pub residual: f64,
}

/// Fit the scalar `s` minimizing
/// `||(1 / (i s/p)) [T(x), T(y)] - T({x, y})||`.
///
/// The minimum is convex in `1/s`, so a ternary search localizes it to
/// machine precision; the fitted value converges to 2 from below
/// (`2p / (p + 2)` exactly), confirming the measure-derived default
/// `hbar = 2/p`.
pub fn calibrate_commutator_scale(qz: &ToeplitzQuantizer) -> CommutatorCalibration {
    let tx = toeplitz_matrix(qz, &SphereFunction::x());
    let ty = toeplitz_matrix(qz, &SphereFunction::y());
    let bracket = qz.compress(&poisson_grid(qz, &SphereFunction::x(), &SphereFunction::y()));
    // t = 1/s: minimize ||t A - B|| with A = -i p [Tx, Ty]
    let a = commutator(&tx, &ty) * c(0.0, -(qz.p as f64));
    let objective = |t: f64| operator_norm(&(&a * c(t, 0.0) - &bracket));
    let (mut lo, mut hi) = (0.0, 8.0);
    for _ in 0..120 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if objective(m1) < objective(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t = 0.5 * (lo + hi);
    CommutatorCalibration {
        s: 1.0 / t,
        residual: objective(t),
    }
}

/// `(2 pi hbar) Tr T(1) / Area`; converges to 1 (it is `(p+1)/p` exactly).
pub fn trace_law_constant(qz: &ToeplitzQuantizer) -> f64 {
    let t_one = toeplitz_matrix(qz, &SphereFunction::constant(1.0));
    TAU * qz.hbar * trace(&t_one).re / qz.volume
}

fn poisson_grid(
    qz: &ToeplitzQuantizer,
    f: &SphereFunction,
    g: &SphereFunction,
) -> Vec<Vec<Complex64>> {
    qz.u_nodes
        .iter()
        .map(|&u| {
            (0..qz.n_phi)
                .map(|t| c(poisson_value(f, g, u, qz.phi_weight * t as f64), 0.0))
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// axiom defects

/// Defect sizes at one flux value; see [`verify_axioms`].
#[derive(Clone, Debug)]
pub struct AxiomRow {
    pub p: usize,
    /// `||T(f) T(g) - T(fg)||`.
    pub delta1: f64,
    /// `||(i hbar)^{-1} [T(x), T(y)] - T({x, y})||` on the coordinate
    /// witness pair.
    pub delta2: f64,
    /// `|(2 pi hbar) Tr T(f) - integral f| / Area`.
    pub delta3: f64,
    /// `| ||T(f)|| - sup |f| |`.
    pub delta4: f64,
    /// Distance of `T(f)* T(g)` from the nearest scalar.
    pub kl_defect: f64,
}

/// Axiom defects over an ascending flux list, with fitted decay rates.
#[derive(Clone, Debug)]
pub struct AxiomTable {
    pub rows: Vec<AxiomRow>,
    /// Log-log slope of `delta1` against `p` (NaN below 2 usable points).
    pub delta1_slope: f64,
    /// Log-log slope of `delta2` against `p`.
    pub delta2_slope: f64,
}

/// Measure how fast the four regularization defects decay along `quantizers`.
///
/// `delta1`, `delta3`, `delta4`, and the scalar defect are measured on the
/// supplied pair; the bracket defect `delta2` is always measured on the
/// coordinate pair `(x, y)` against `{x, y} = -z`, because a commuting pair
/// (such as `f = g = z`) makes the literal bracket defect identically zero
/// and says nothing about the commutator scaling.
pub fn verify_axioms(
    quantizers: &[ToeplitzQuantizer],
    f: &SphereFunction,
    g: &SphereFunction,
) -> Result<AxiomTable> {
    if quantizers.len() < 3 {
        return Err(Error::domain(format!(
            "need at least 3 flux values to fit decay rates, got {}",
            quantizers.len()
        )));
    }
    if quantizers.windows(2).any(|w| w[1].p <= w[0].p) {
        return Err(Error::domain("flux values must be strictly ascending"));
    }
    let sup_f = f.sup_norm();
    let rows: Vec<AxiomRow> = quantizers
        .iter()
        .map(|qz| {
            let tf = toeplitz_matrix(qz, f);
            let tg = toeplitz_matrix(qz, g);
            let product_grid: Vec<Vec<Complex64>> = qz
                .grid(f)
                .into_iter()
                .zip(qz.grid(g))
                .map(|(rf, rg)| rf.into_iter().zip(rg).map(|(a, b)| a * b).collect())
                .collect();
            let tfg = qz.compress(&product_grid);
            let delta1 = operator_norm(&(&tf * &tg - tfg));

            let tx = toeplitz_matrix(qz, &SphereFunction::x());
            let ty = toeplitz_matrix(qz, &SphereFunction::y());
            let bracket =
                qz.compress(&poisson_grid(qz, &SphereFunction::x(), &SphereFunction::y()));
            let delta2 =
                operator_norm(&(commutator(&tx, &ty) * c(0.0, -1.0 / qz.hbar) - bracket));

            let delta3 =
                (TAU * qz.hbar * trace(&tf).re - qz.integrate(f)).abs() / qz.volume;
            let delta4 = (operator_norm(&tf) - sup_f).abs();
            let (_, kl_defect) = kl_defect_of(&tf, &tg);
            AxiomRow {
                p: qz.p,
                delta1,
                delta2,
                delta3,
                delta4,
                kl_defect,
            }
        })
        .collect();

    let slope_of = |pick: fn(&AxiomRow) -> f64| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| pick(r) > 0.0)
            .map(|r| ((r.p as f64).ln(), pick(r).ln()))
            .collect();
        if pts.len() < 2 {
            f64::NAN
        } else {
            least_squares_slope(&pts)
        }
    };
    Ok(AxiomTable {
        delta1_slope: slope_of(|r| r.delta1),
        delta2_slope: slope_of(|r| r.delta2),
        rows,
    })
}

/// Residual of the first-order product expansion:
/// `|| hbar^{-1} (T(f) T(g) - T(fg)) - T(C1(f, g)) ||`.
///
/// For `f = g = z` this equals `1 / (p + 3)` exactly (even `p`); it vanishes
/// to rounding when either argument is constant.
pub fn verify_c1(qz: &ToeplitzQuantizer, f: &SphereFunction, g: &SphereFunction) -> f64 {
    let tf = toeplitz_matrix(qz, f);
    let tg = toeplitz_matrix(qz, g);
    let product_grid: Vec<Vec<Complex64>> = qz
        .grid(f)
        .into_iter()
        .zip(qz.grid(g))
        .map(|(rf, rg)| rf.into_iter().zip(rg).map(|(a, b)| a * b).collect())
        .collect();
    let tfg = qz.compress(&product_grid);
    let c1_grid: Vec<Vec<Complex64>> = qz
        .u_nodes
        .iter()
        .map(|&u| {
            (0..qz.n_phi)
                .map(|t| c1_value(f, g, u, qz.phi_weight * t as f64))
                .collect()
        })
        .collect();
    let t_c1 = qz.compress(&c1_grid);
    operator_norm(&((&tf * &tg - tfg) * c(1.0 / qz.hbar, 0.0) - t_c1))
}

/// `(lambda, defect)` for the scalar test `T(f)* T(g) ~ lambda I`:
/// `lambda = Tr(T(f)* T(g)) / (p + 1)` and the defect is the operator-norm
/// distance from `lambda I`. Functions with far-apart supports drive both
/// to zero rapidly in `p`.
pub fn kl_approx_check(
    qz: &ToeplitzQuantizer,
    f: &SphereFunction,
    g: &SphereFunction,
) -> (f64, f64) {
    let tf = toeplitz_matrix(qz, f);
    let tg = toeplitz_matrix(qz, g);
    kl_defect_of(&tf, &tg)
}

fn kl_defect_of(tf: &CMat, tg: &CMat) -> (f64, f64) {
    let n = tf.nrows();
    let m = dagger(tf) * tg;
    let lambda = trace(&m) / c(n as f64, 0.0);
    let defect = operator_norm(&(m - identity(n) * lambda));
    // real functions give Hermitian factors, so the trace is real
    (lambda.re, defect)
}

// ---------------------------------------------------------------------------
// CSV

/// Serialize an axiom table; full precision, stable layout.
pub fn axiom_csv(table: &AxiomTable) -> String {
    let mut out = String::from("p,delta1,delta2,delta3,delta4,kl_defect\n");
    for r in &table.rows {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.p, r.delta1, r.delta2, r.delta3, r.delta4, r.kl_defect
        ));
    }
    out
}
