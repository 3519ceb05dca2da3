//! Finite metric geometry from block Dirac operators.
//!
//! A finite point set with a positive pair weight `w(x, y)` is encoded into a
//! block-diagonal Dirac operator with one 2x2 block `[[0, 1/w], [1/w, 0]]`
//! per unordered pair. For functions `f` on the points the commutator norm is
//! `max |f(x) - f(y)| / w(x, y)`, so the associated state distance
//! `sup { |f(x) - f(y)| : ||[D, f]|| <= 1 }` is the shortest-path closure of
//! the weights. The module computes that distance twice: in closed form
//! ([`DiscreteMetricTriple::connes_distance_closed`]) and by constrained
//! first-order maximization over the algebra
//! ([`FiniteSpectralTriple::connes_distance_general`]), which also works for
//! triples that are not of pure block form.
//!
//! On top of the metric sit the operator-support notions: regions, local
//! membership (a twisted-algebra element lies in the algebra of `Y` iff every
//! coefficient `f_u` is supported in `Y` and `Y + u`), supports, diameters,
//! the scalar Knill-Laflamme check, and a geometric code distance that scans
//! monomials in ascending diameter order.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::crossed::{
    code_distance_via_w, AbelianGroup, Cocycle, CrossedProductElement, GroupElement,
    WeightFunction, WeylRepresentation, COEFF_TOL,
};
use crate::error::{Error, Result};
use crate::operators::{
    c, commutator, compressed_scalar_test, operator_norm, CMat, CVec, CodeProjection,
    HermitianOperator,
};

/// Relative agreement target between the closed form and the general solver.
pub const GENERAL_SOLVER_TOL: f64 = 1e-4;

/// Finite point set with symmetric positive pair weights and the associated
/// block Dirac operator.
#[derive(Clone, Debug)]
pub struct DiscreteMetricTriple {
    labels: Vec<String>,
    weight: Vec<Vec<f64>>,
}

impl DiscreteMetricTriple {
    /// Validate and store: `weight` must be square over the labels, symmetric,
    /// zero on the diagonal, and strictly positive off it.
    pub fn new(labels: Vec<String>, weight: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::domain("metric triple needs at least one point".to_string()));
        }
        if weight.len() != n || weight.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension {
                context: "weight matrix shape",
                expected: n,
                got: weight.len(),
            });
        }
        for i in 0..n {
            if weight[i][i] != 0.0 {
                return Err(Error::domain(format!(
                    "weight({label}, {label}) must be 0",
                    label = labels[i]
                )));
            }
            for j in (i + 1)..n {
                let (a, b) = (weight[i][j], weight[j][i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::domain(format!(
                        "weight is not symmetric at ({}, {})",
                        labels[i], labels[j]
                    )));
                }
                if !(a > 0.0) || !a.is_finite() {
                    return Err(Error::domain(format!(
                        "weight({}, {}) = {a} must be positive and finite",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        Ok(DiscreteMetricTriple { labels, weight })
    }

    /// Points labeled by the group elements, weights `wt(x - y)`.
    pub fn from_group(group: &AbelianGroup, weight: &WeightFunction) -> Result<Self> {
        weight.check_compatible(group)?;
        let elements = group.elements();
        let labels: Vec<String> = elements.iter().map(|u| element_label(u)).collect();
        let w: Vec<Vec<f64>> = elements
            .iter()
            .map(|x| {
                elements
                    .iter()
                    .map(|y| weight.weight(group, &group.sub(x, y)))
                    .collect()
            })
            .collect();
        DiscreteMetricTriple::new(labels, w)
    }

    pub fn n_points(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weight[i][j]
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::domain(format!("unknown point label \"{label}\"")))
    }

    /// Unordered pairs `(i, j, w_ij)` with `i < j`, in block order.
    pub fn pairs(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_points();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push((i, j, self.weight[i][j]));
            }
        }
        out
    }

    /// The 2x2 block for one pair: `[[0, 1/w], [1/w, 0]]`.
    pub fn block(&self, i: usize, j: usize) -> CMat {
        let inv = 1.0 / self.weight[i.min(j)][i.max(j)];
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(inv, 0.0), c(inv, 0.0), c(0.0, 0.0)])
    }

    /// Block-diagonal Dirac operator on one 2-dimensional slot per pair;
    /// dimension `n(n-1)`. Single-point sets have no blocks and no operator.
    pub fn dirac(&self) -> Result<HermitianOperator> {
        let pairs = self.pairs();
        if pairs.is_empty() {
            return Err(Error::domain(
                "single-point metric triple has no pair blocks".to_string(),
            ));
        }
        let dim = 2 * pairs.len();
        let mut m = CMat::zeros(dim, dim);
        for (k, &(_, _, w)) in pairs.iter().enumerate() {
            let inv = c(1.0 / w, 0.0);
            m[(2 * k, 2 * k + 1)] = inv;
            m[(2 * k + 1, 2 * k)] = inv;
        }
        HermitianOperator::new(m)
    }

    /// All-pairs shortest-path closure of the weights.
    pub fn closed_distance_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n_points();
        let mut d = self.weight.clone();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d
    }

    /// Closed-form state distance between two points: the shortest-path
    /// closure of the pairwise caps `|f(x) - f(y)| <= w(x, y)`.
    pub fn connes_distance_closed(&self, x: &str, y: &str) -> Result<f64> {
        let i = self.label_index(x)?;
        let j = self.label_index(y)?;
        Ok(self.closed_distance_matrix()[i][j])
    }

    /// Spectral-triple form with the points' indicator functions as algebra
    /// generators and one labeled vector state per point.
    pub fn to_spectral_triple(&self) -> Result<FiniteSpectralTriple> {
        assemble_metric_triple(self, None, true)
    }
}

fn element_label(u: &GroupElement) -> String {
    u.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// A named algebra generator.
#[derive(Clone, Debug)]
pub struct NamedOperator {
    pub name: String,
    pub mat: CMat,
}

/// A labeled unit vector.
#[derive(Clone, Debug)]
pub struct LabeledState {
    pub label: String,
    pub vector: CVec,
}

/// Certificate that the triple has pure pair-block structure: diagonal
/// algebra elements built from point values `c` have commutator norm
/// `max |c_i - c_j| / w_ij`. Lets the distance solver evaluate its constraint
/// in `O(pairs)` instead of a singular value decomposition per step.
#[derive(Clone, Debug)]
struct BlockStructure {
    pairs: Vec<(usize, usize, f64)>,
    point_of_state: Vec<usize>,
}

/// A finite spectral triple: Hilbert dimension, Dirac operator, named algebra
/// generators, and a distinguished set of labeled vector states.
#[derive(Clone, Debug)]
pub struct FiniteSpectralTriple {
    pub hilbert_dim: usize,
    pub dirac: HermitianOperator,
    pub algebra_generators: Vec<NamedOperator>,
    pub state_set: Vec<LabeledState>,
    block_structure: Option<BlockStructure>,
}

/// Solver controls for [`FiniteSpectralTriple::connes_distance_general`].
#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { restarts: 5, iterations: 2000, seed: 0x5eed }
    }
}

/// Outcome of the general distance solver. The reported value is always the
/// objective of a feasible (norm-rescaled) algebra element, hence a valid
/// lower bound on the distance; `converged` records whether the ascent
/// stabilized before the iteration cap.
#[derive(Clone, Copy, Debug)]
pub struct GeneralDistance {
    pub value: f64,
    pub converged: bool,
}

impl FiniteSpectralTriple {
    pub fn state(&self, label: &str) -> Result<&LabeledState> {
        self.state_set
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| Error::domain(format!("unknown state label \"{label}\"")))
    }

    /// `||[D, g]||` for every generator; finite by construction, recorded so
    /// callers can see the Lipschitz data of the algebra.
    pub fn generator_commutator_norms(&self) -> Vec<(String, f64)> {
        self.algebra_generators
            .iter()
            .map(|g| {
                (
                    g.name.clone(),
                    operator_norm(&commutator(self.dirac.matrix(), &g.mat)),
                )
            })
            .collect()
    }

    /// Maximize `|omega_1(a) - omega_2(a)|` over self-adjoint `a` in the
    /// generator span subject to `||[D, a]|| <= 1`.
    ///
    /// The search ascends the scale-invariant ratio
    /// `(omega_1(a) - omega_2(a)) / ||[D, a]||` with exact line searches and
    /// restarts; the final value is realized by a feasible element, so a
    /// non-converged result is still a correct lower bound and is flagged as
    /// such.
    pub fn connes_distance_general(
        &self,
        state_a: &str,
        state_b: &str,
        opts: &SolverOptions,
    ) -> Result<GeneralDistance> {
        let va = self.state(state_a)?.vector.clone();
        let vb = self.state(state_b)?.vector.clone();
        if state_a == state_b {
            return Ok(GeneralDistance { value: 0.0, converged: true });
        }

        // objective functional per basis coefficient
        let (objective, oracle) = match &self.block_structure {
            Some(blocks) => {
                let ia = blocks.point_of_state[self.state_index(state_a)?];
                let ib = blocks.point_of_state[self.state_index(state_b)?];
                let n = self.algebra_generators.len();
                let mut g = vec![0.0; n];
                g[ia] += 1.0;
                g[ib] -= 1.0;
                (g, ConstraintOracle::Blocks { pairs: blocks.pairs.clone() })
            }
            None => {
                let mut basis: Vec<CMat> = Vec::new();
                for gen in &self.algebra_generators {
                    // self-adjoint closure of the generator span
                    let h = (&gen.mat + gen.mat.adjoint()).scale(0.5);
                    let ah = (&gen.mat - gen.mat.adjoint()).scale(0.5) * c(0.0, -1.0);
                    for m in [h, ah] {
                        if operator_norm(&m) > 1e-14 {
                            basis.push(m);
                        }
                    }
                }
                if basis.is_empty() {
                    return Err(Error::domain(
                        "algebra has no nonzero self-adjoint part".to_string(),
                    ));
                }
                let g: Vec<f64> = basis
                    .iter()
                    .map(|m| {
                        let ea = (va.adjoint() * m * &va)[(0, 0)].re;
                        let eb = (vb.adjoint() * m * &vb)[(0, 0)].re;
                        ea - eb
                    })
                    .collect();
                let ks: Vec<CMat> = basis
                    .iter()
                    .map(|m| commutator(self.dirac.matrix(), m))
                    .collect();
                (g, ConstraintOracle::Dense { ks })
            }
        };

        let norm_g = objective.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm_g < 1e-14 {
            return Ok(GeneralDistance { value: 0.0, converged: true });
        }
        Ok(maximize_ratio(&objective, &oracle, opts))
    }

    fn state_index(&self, label: &str) -> Result<usize> {
        self.state_set
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::domain(format!("unknown state label \"{label}\"")))
    }
}

/// Commutator-norm oracle of the solver: either the pair-block fast path or
/// dense commutators per basis element.
enum ConstraintOracle {
    Blocks { pairs: Vec<(usize, usize, f64)> },
    Dense { ks: Vec<CMat> },
}

impl ConstraintOracle {
    fn norm(&self, coeff: &[f64]) -> f64 {
        match self {
            ConstraintOracle::Blocks { pairs } => pairs
                .iter()
                .map(|&(i, j, w)| (coeff[i] - coeff[j]).abs() / w)
                .fold(0.0, f64::max),
            ConstraintOracle::Dense { ks } => {
                let m = combine(ks, coeff);
                operator_norm(&m)
            }
        }
    }

    /// Norm plus one supergradient of the norm at `coeff` (an average over
    /// near-active pieces, which damps zigzagging at kinks).
    fn norm_and_subgradient(&self, coeff: &[f64]) -> (f64, Vec<f64>) {
        match self {
            ConstraintOracle::Blocks { pairs } => {
                let h = self.norm(coeff);
                let mut sub = vec![0.0; coeff.len()];
                if h == 0.0 {
                    return (h, sub);
                }
                let mut active = 0usize;
                for &(i, j, w) in pairs {
                    let v = (coeff[i] - coeff[j]) / w;
                    if v.abs() >= h * (1.0 - 1e-9) {
                        let s = v.signum() / w;
                        sub[i] += s;
                        sub[j] -= s;
                        active += 1;
                    }
                }
                if active > 1 {
                    for s in &mut sub {
                        *s /= active as f64;
                    }
                }
                (h, sub)
            }
            ConstraintOracle::Dense { ks } => {
                let m = combine(ks, coeff);
                let svd = m.clone().svd(true, true);
                let (mut top, mut idx) = (0.0, 0usize);
                for (i, s) in svd.singular_values.iter().enumerate() {
                    if *s > top {
                        top = *s;
                        idx = i;
                    }
                }
                let u = svd.u.as_ref().expect("svd with u").column(idx).into_owned();
                let vt = svd.v_t.as_ref().expect("svd with v_t").row(idx).into_owned();
                let v = vt.adjoint();
                let sub: Vec<f64> = ks
                    .iter()
                    .map(|k| (u.adjoint() * k * &v)[(0, 0)].re)
                    .collect();
                (top, sub)
            }
        }
    }

    /// Ratio probe along the line `c + t d`, with the numerator and the norm
    /// evaluated from one shared coordinate vector so near-cancellation
    /// points cannot inflate the ratio through inconsistent rounding.
    fn line<'a>(&'a self, g: &'a [f64], coeff: &[f64], dir: &[f64]) -> RatioLine<'a> {
        match self {
            ConstraintOracle::Blocks { pairs } => RatioLine::Blocks {
                pairs,
                g,
                c: coeff.to_vec(),
                d: dir.to_vec(),
            },
            ConstraintOracle::Dense { ks } => RatioLine::Dense {
                m0: combine(ks, coeff),
                md: combine(ks, dir),
                gc: dot(g, coeff),
                gd: dot(g, dir),
            },
        }
    }
}

enum RatioLine<'a> {
    Blocks {
        pairs: &'a [(usize, usize, f64)],
        g: &'a [f64],
        c: Vec<f64>,
        d: Vec<f64>,
    },
    Dense {
        m0: CMat,
        md: CMat,
        gc: f64,
        gd: f64,
    },
}

impl RatioLine<'_> {
    fn phi(&self, t: f64) -> f64 {
        match self {
            RatioLine::Blocks { pairs, g, c, d } => {
                let y: Vec<f64> = c.iter().zip(d.iter()).map(|(ci, di)| ci + t * di).collect();
                let num = dot(g, &y);
                let h = pairs
                    .iter()
                    .map(|&(i, j, w)| (y[i] - y[j]).abs() / w)
                    .fold(0.0, f64::max);
                ratio(num, h)
            }
            RatioLine::Dense { m0, md, gc, gd } => {
                let h = operator_norm(&(m0 + md * c(t, 0.0)));
                ratio(gc + t * gd, h)
            }
        }
    }
}

fn ratio(num: f64, h: f64) -> f64 {
    if h > 0.0 {
        num / h
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

fn combine(ks: &[CMat], coeff: &[f64]) -> CMat {
    let mut m = CMat::zeros(ks[0].nrows(), ks[0].ncols());
    for (k, &x) in ks.iter().zip(coeff) {
        if x != 0.0 {
            m += k * c(x, 0.0);
        }
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Exact ray search: maximize `phi(t) = (g . (c + t d)) / h(c + t d)` over
/// `t >= 0`. `phi` is quasiconcave along the ray wherever its value exceeds
/// the (positive) starting value, because the superlevel sets
/// `{t : g.(c + t d) >= lambda h(c + t d)}` are intervals for `lambda > 0`;
/// bracketing by doubling plus golden-section is therefore exact. Returns the
/// improved point when one exists.
fn ray_improve(
    g: &[f64],
    oracle: &ConstraintOracle,
    c: &[f64],
    dir: &[f64],
    val: f64,
) -> Option<(Vec<f64>, f64)> {
    let line = oracle.line(g, c, dir);
    let phi_t = |t: f64| line.phi(t);
    // find any improving step by halving, then expand the bracket by doubling
    let mut t = 1.0;
    let mut found = false;
    for _ in 0..60 {
        if phi_t(t) > val {
            found = true;
            break;
        }
        t *= 0.5;
        if t < 1e-16 {
            break;
        }
    }
    if !found {
        return None;
    }
    let mut t_next = 2.0 * t;
    for _ in 0..60 {
        let v = phi_t(t_next);
        if !v.is_finite() || v <= phi_t(t) {
            break;
        }
        t = t_next;
        t_next *= 2.0;
    }
    let t_star = golden_section(&phi_t, 0.0, t_next);

    // accept only on the oracle's own evaluation of the candidate, so the
    // value handed back is always the true ratio of a feasible point
    let mut out = c.to_vec();
    for (x, d) in out.iter_mut().zip(dir) {
        *x += t_star * d;
    }
    let new_val = ratio(dot(g, &out), oracle.norm(&out));
    if new_val > val * (1.0 + 1e-15) {
        Some((out, new_val))
    } else {
        None
    }
}

/// Ascent on the scale-invariant ratio `phi(c) = (g . c) / h(c)`: exact line
/// searches along the ratio supergradient, with exact coordinate-direction
/// sweeps as a fallback at kinks of `h` and small random nudges as a last
/// resort, over several restarts. Every iterate is feasible after rescaling,
/// so the best ratio seen is always a valid lower bound on the supremum.
fn maximize_ratio(g: &[f64], oracle: &ConstraintOracle, opts: &SolverOptions) -> GeneralDistance {
    let n = g.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = 0.0f64;
    let mut best_converged = false;

    for restart in 0..opts.restarts.max(1) {
        let mut c: Vec<f64> = if restart == 0 {
            g.to_vec()
        } else {
            (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
        };
        if dot(g, &c) < 0.0 {
            for x in &mut c {
                *x = -*x;
            }
        } else if dot(g, &c) <= 0.0 {
            c = g.to_vec();
        }
        let s = norm2(&c);
        if s == 0.0 {
            continue;
        }
        for x in &mut c {
            *x /= s;
        }

        let h0 = oracle.norm(&c);
        if h0 == 0.0 {
            // constraint vanishes on a direction with positive objective:
            // the supremum is unbounded
            return GeneralDistance { value: f64::INFINITY, converged: true };
        }
        let mut val = dot(g, &c) / h0;
        let mut cur_best = val;
        let mut kicks = 0usize;
        let mut flat = 0usize;
        let mut converged = false;

        for _ in 0..opts.iterations {
            let before = cur_best;
            let (h, sub) = oracle.norm_and_subgradient(&c);
            if h == 0.0 {
                return GeneralDistance { value: f64::INFINITY, converged: true };
            }
            val = dot(g, &c) / h;

            // ratio supergradient: d/dc of (g.c)/h = g/h - ((g.c)/h^2) s
            let scale = val / h;
            let mut dir: Vec<f64> = g
                .iter()
                .zip(&sub)
                .map(|(gi, si)| gi / h - scale * si)
                .collect();
            let nd = norm2(&dir);
            let mut moved = false;
            if nd > 1e-14 * (norm2(g) / h).max(1e-300) {
                for x in &mut dir {
                    *x /= nd;
                }
                if let Some((cc, v)) = ray_improve(g, oracle, &c, &dir, val) {
                    if v.is_infinite() {
                        return GeneralDistance { value: f64::INFINITY, converged: true };
                    }
                    c = cc;
                    renormalize(&mut c);
                    val = v;
                    moved = true;
                }
            }

            if !moved {
                // kink of h: axis-aligned exact searches still make progress
                // where the supergradient direction does not
                let mut e = vec![0.0; n];
                for k in 0..n {
                    for sgn in [1.0, -1.0] {
                        e[k] = sgn;
                        if let Some((cc, v)) = ray_improve(g, oracle, &c, &e, val) {
                            if v.is_infinite() {
                                return GeneralDistance { value: f64::INFINITY, converged: true };
                            }
                            c = cc;
                            renormalize(&mut c);
                            val = v;
                            moved = true;
                        }
                    }
                    e[k] = 0.0;
                }
            }

            if moved {
                kicks = 0;
                cur_best = cur_best.max(val);
            } else {
                kicks += 1;
                if kicks > 12 {
                    converged = true;
                    break;
                }
                // nudge off the stationary point and retry
                let eps = 1e-3 / kicks as f64;
                let mut cand = c.clone();
                for x in cand.iter_mut() {
                    *x += eps * (rng.random::<f64>() - 0.5);
                }
                if dot(g, &cand) > 0.0 && oracle.norm(&cand) > 0.0 {
                    c = cand;
                    renormalize(&mut c);
                }
            }

            if cur_best - before <= 1e-13 * before.abs().max(1.0) {
                flat += 1;
                if flat >= 25 {
                    converged = true;
                    break;
                }
            } else {
                flat = 0;
            }
        }

        if cur_best > best * (1.0 + 1e-12) {
            best = cur_best;
            best_converged = converged;
        } else if cur_best >= best * (1.0 - 1e-12) {
            best = best.max(cur_best);
            best_converged |= converged;
        }
    }
    GeneralDistance { value: best, converged: best_converged }
}

fn renormalize(c: &mut [f64]) {
    let s = norm2(c);
    if s > 0.0 {
        for x in c.iter_mut() {
            *x /= s;
        }
    }
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c1 = b - INV_PHI * (b - a);
    let mut c2 = a + INV_PHI * (b - a);
    let mut f1 = f(c1);
    let mut f2 = f(c2);
    for _ in 0..70 {
        if f1 >= f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - INV_PHI * (b - a);
            f1 = f(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + INV_PHI * (b - a);
            f2 = f(c2);
        }
    }
    if f1 >= f2 {
        c1
    } else {
        c2
    }
}

/// Assemble the metric part, optionally extended by a second Dirac summand.
///
/// `regular_states = true` places the vector states on the position basis of
/// the second summand (which then must have dimension `|points|`); otherwise
/// states live on the pair-block slots.
fn assemble_metric_triple(
    metric: &DiscreteMetricTriple,
    d_c: Option<&HermitianOperator>,
    prefer_position_states: bool,
) -> Result<FiniteSpectralTriple> {
    let n = metric.n_points();
    let pairs = metric.pairs();
    let metric_dim = 2 * pairs.len();
    let c_dim = d_c.map_or(0, |d| d.dim());
    let dim = metric_dim + c_dim;
    if dim == 0 {
        return Err(Error::domain(
            "triple is empty: single point and no second Dirac summand".to_string(),
        ));
    }
    let regular = prefer_position_states && c_dim == n;

    let mut dmat = CMat::zeros(dim, dim);
    for (k, &(_, _, w)) in pairs.iter().enumerate() {
        let inv = c(1.0 / w, 0.0);
        dmat[(2 * k, 2 * k + 1)] = inv;
        dmat[(2 * k + 1, 2 * k)] = inv;
    }
    if let Some(d) = d_c {
        for i in 0..c_dim {
            for j in 0..c_dim {
                dmat[(metric_dim + i, metric_dim + j)] = d.matrix()[(i, j)];
            }
        }
    }
    let dirac = HermitianOperator::new(dmat)?;

    // indicator generators: diagonal on the pair slots, position-diagonal on
    // a regular second summand, zero on a physical one
    let mut generators = Vec::with_capacity(n);
    for (p, label) in metric.labels().iter().enumerate() {
        let mut m = CMat::zeros(dim, dim);
        for (k, &(i, j, _)) in pairs.iter().enumerate() {
            if i == p {
                m[(2 * k, 2 * k)] = c(1.0, 0.0);
            }
            if j == p {
                m[(2 * k + 1, 2 * k + 1)] = c(1.0, 0.0);
            }
        }
        if regular {
            m[(metric_dim + p, metric_dim + p)] = c(1.0, 0.0);
        }
        generators.push(NamedOperator { name: label.clone(), mat: m });
    }

    // one vector state per point
    let mut states = Vec::with_capacity(n);
    for (p, label) in metric.labels().iter().enumerate() {
        let slot = if regular {
            Some(metric_dim + p)
        } else {
            pairs.iter().enumerate().find_map(|(k, &(i, j, _))| {
                if i == p {
                    Some(2 * k)
                } else if j == p {
                    Some(2 * k + 1)
                } else {
                    None
                }
            })
        };
        if let Some(s) = slot {
            let mut v = CVec::zeros(dim);
            v[s] = c(1.0, 0.0);
            states.push(LabeledState { label: label.clone(), vector: v });
        }
    }

    // the pair-block constraint formula needs the second summand to commute
    // with every generator
    let blocks_valid = match d_c {
        None => true,
        Some(d) => {
            if regular {
                generators.iter().all(|g| {
                    let sub = g.mat.view((metric_dim, metric_dim), (c_dim, c_dim)).into_owned();
                    operator_norm(&commutator(d.matrix(), &sub)) <= 1e-12
                })
            } else {
                true
            }
        }
    };
    let block_structure = if blocks_valid && !pairs.is_empty() {
        Some(BlockStructure {
            pairs,
            point_of_state: (0..n).collect(),
        })
    } else {
        None
    };

    Ok(FiniteSpectralTriple {
        hilbert_dim: dim,
        dirac,
        algebra_generators: generators,
        state_set: states,
        block_structure,
    })
}

/// Full triple of a twisted group algebra: metric part from the weight plus a
/// second Dirac summand on `l^2(V)`. The summand dimension must equal the
/// group size; states sit on the position basis.
pub fn assemble_triple(
    weight: &WeightFunction,
    cocycle: &Cocycle,
    d_c: &HermitianOperator,
) -> Result<FiniteSpectralTriple> {
    let group = cocycle.group();
    if d_c.dim() != group.size() {
        return Err(Error::Dimension {
            context: "assemble_triple second summand vs group size",
            expected: group.size(),
            got: d_c.dim(),
        });
    }
    let metric = DiscreteMetricTriple::from_group(group, weight)?;
    assemble_metric_triple(&metric, Some(d_c), true)
}

/// Variant for code families whose Dirac operator acts on a declared
/// physical space (for instance `2^n` for `n` qubits) rather than on
/// `l^2(V)`: the algebra of point functions acts on the metric part only and
/// states live on the pair-block slots.
pub fn assemble_triple_physical(
    weight: &WeightFunction,
    cocycle: &Cocycle,
    d_c: &HermitianOperator,
) -> Result<FiniteSpectralTriple> {
    let metric = DiscreteMetricTriple::from_group(cocycle.group(), weight)?;
    assemble_metric_triple(&metric, Some(d_c), false)
}

/// A finite set of group-labeled points.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Region {
    points: BTreeSet<GroupElement>,
}

impl Region {
    pub fn new(points: impl IntoIterator<Item = GroupElement>) -> Self {
        Region { points: points.into_iter().collect() }
    }

    pub fn points(&self) -> impl Iterator<Item = &GroupElement> {
        self.points.iter()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, u: &GroupElement) -> bool {
        self.points.contains(u)
    }
}

/// Group metric `d(x, y) = wt_closed(x - y)`: the shortest-path closure of
/// the weight over the Cayley graph. The built-in weights are subadditive, so
/// their closure is the weight itself; the closure table is still computed
/// (single-source shortest path from 0) on small groups as a guard.
pub struct GroupMetric {
    group: AbelianGroup,
    weight: WeightFunction,
    closed: Option<Vec<f64>>,
}

/// Group sizes up to this get an explicit closure table.
const MAX_CLOSURE_SIZE: usize = 1 << 12;

impl GroupMetric {
    pub fn new(group: AbelianGroup, weight: WeightFunction) -> Result<Self> {
        weight.check_compatible(&group)?;
        let closed = if group.size() <= MAX_CLOSURE_SIZE {
            Some(closed_weights(&group, &weight))
        } else {
            None
        };
        Ok(GroupMetric { group, weight, closed })
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn distance(&self, x: &GroupElement, y: &GroupElement) -> f64 {
        let u = self.group.sub(x, y);
        match &self.closed {
            Some(table) => table[self.group.index_of(&u)],
            None => self.weight.weight(&self.group, &u),
        }
    }

    /// Closed weight of a single difference vector.
    pub fn closed_weight(&self, u: &GroupElement) -> f64 {
        match &self.closed {
            Some(table) => table[self.group.index_of(u)],
            None => self.weight.weight(&self.group, u),
        }
    }
}

/// Single-source shortest paths from 0 over the complete Cayley graph with
/// edge lengths `wt(step)`; array-based Dijkstra, fine at these sizes.
fn closed_weights(group: &AbelianGroup, weight: &WeightFunction) -> Vec<f64> {
    let n = group.size();
    let elements = group.elements();
    let base: Vec<f64> = elements.iter().map(|u| weight.weight(group, u)).collect();
    let mut dist = base.clone();
    dist[0] = 0.0;
    let mut done = vec![false; n];
    done[0] = true;
    for _ in 1..n {
        let mut best = f64::INFINITY;
        let mut pick = usize::MAX;
        for i in 0..n {
            if !done[i] && dist[i] < best {
                best = dist[i];
                pick = i;
            }
        }
        if pick == usize::MAX {
            break;
        }
        done[pick] = true;
        for (j, w) in base.iter().enumerate() {
            if j == 0 {
                continue;
            }
            let target = group.index_of(&group.add(&elements[pick], &elements[j]));
            if !done[target] && dist[pick] + w < dist[target] {
                dist[target] = dist[pick] + w;
            }
        }
    }
    dist
}

/// Max pairwise distance within a region; 0 for the empty or one-point case.
pub fn diameter(region: &Region, metric: &GroupMetric) -> f64 {
    let pts: Vec<&GroupElement> = region.points().collect();
    let mut best = 0.0f64;
    for (i, x) in pts.iter().enumerate() {
        for y in pts.iter().skip(i + 1) {
            best = best.max(metric.distance(x, y));
        }
    }
    best
}

/// Two-sided locality: `a` belongs to the algebra of `Y` iff for every term
/// `f_u U_u` the coefficient support lies in `Y` and in `Y + u` (equivalently
/// both evaluation endpoints `x` and `x - u` of every nonzero matrix element
/// stay inside `Y`).
pub fn local_algebra_membership(a: &CrossedProductElement, region: &Region) -> bool {
    let group = a.group();
    for (u, f) in a.terms() {
        for (ix, z) in f.iter().enumerate() {
            if z.norm() > COEFF_TOL {
                let x = group.element_at(ix);
                if !region.contains(&x) || !region.contains(&group.sub(&x, u)) {
                    return false;
                }
            }
        }
    }
    true
}

/// The minimal region supporting `a`: the union over terms of
/// `supp(f_u) ∪ (supp(f_u) - u)`. Rejects `a = 0`, which has no minimal
/// region.
pub fn support_of(a: &CrossedProductElement) -> Result<Region> {
    if a.is_zero() {
        return Err(Error::domain(
            "the zero element has no minimal supporting region".to_string(),
        ));
    }
    let group = a.group();
    let mut points = BTreeSet::new();
    for (u, f) in a.terms() {
        for (ix, z) in f.iter().enumerate() {
            if z.norm() > COEFF_TOL {
                let x = group.element_at(ix);
                points.insert(group.sub(&x, u));
                points.insert(x);
            }
        }
    }
    Ok(Region { points })
}

/// Result of the scalar Knill-Laflamme check.
#[derive(Clone, Debug)]
pub struct KlReport {
    /// True iff every compressed pair product is scalar within `tol`.
    pub satisfied: bool,
    /// `lambda_{ab} = trace(P E_a* E_b P) / rank(P)`.
    pub lambda: CMat,
    /// Largest `||P E_a* E_b P - lambda_{ab} P||` over pairs.
    pub worst_violation: f64,
}

/// Check `P E_a* E_b P = lambda_{ab} P` for all pairs of the error family,
/// with an absolute operator-norm tolerance.
pub fn kl_check(p: &CodeProjection, errors: &[CMat], tol: f64) -> Result<KlReport> {
    if p.rank() == 0 {
        return Err(Error::domain("Knill-Laflamme check needs a nonzero code".to_string()));
    }
    let k = errors.len();
    let r = p.rank();
    let mut compressed = Vec::with_capacity(k);
    for e in errors {
        if e.nrows() != p.dim() || e.ncols() != p.dim() {
            return Err(Error::Dimension {
                context: "kl_check error matrix dimension",
                expected: p.dim(),
                got: e.nrows(),
            });
        }
        compressed.push(e * p.basis());
    }
    let mut lambda = CMat::zeros(k, k);
    let mut worst = 0.0f64;
    for a in 0..k {
        for b in 0..k {
            let m = compressed[a].adjoint() * &compressed[b];
            let l = crate::operators::trace(&m) / c(r as f64, 0.0);
            lambda[(a, b)] = l;
            let mut shifted = m;
            for i in 0..r {
                shifted[(i, i)] -= l;
            }
            worst = worst.max(operator_norm(&shifted));
        }
    }
    Ok(KlReport { satisfied: worst <= tol, lambda, worst_violation: worst })
}

/// Monomial family for the geometric distance scan.
#[derive(Clone, Debug)]
pub enum MonomialBasis {
    /// Localized translation monomials `delta_z U_u`, `u != 0`, acting in the
    /// regular representation; the support of each is `{z, z - u}` with
    /// diameter the closed weight of `u`.
    Localized(Cocycle),
    /// The Weyl family `{U_u : u != 0}` in the given representation, each
    /// assigned diameter `wt(u)` (the diameter any localized monomial over
    /// `u` has, independent of the localization point).
    Weyl(WeylRepresentation),
}

/// Minimum, over monomials acting non-scalar on the code, of the diameter of
/// the monomial's support. Scans in ascending diameter so the first hit is
/// the answer; returns `+inf` if no monomial acts non-scalar.
pub fn code_distance_geometric(
    group: &AbelianGroup,
    weight: &WeightFunction,
    p: &CodeProjection,
    basis: &MonomialBasis,
    tol: f64,
) -> Result<f64> {
    match basis {
        MonomialBasis::Weyl(rep) => code_distance_via_w(p, group, rep, weight),
        MonomialBasis::Localized(cocycle) => {
            if cocycle.group() != group {
                return Err(Error::domain(
                    "monomial basis cocycle is over a different group".to_string(),
                ));
            }
            if p.dim() != group.size() {
                return Err(Error::Dimension {
                    context: "localized scan projection vs regular representation",
                    expected: group.size(),
                    got: p.dim(),
                });
            }
            if p.rank() == 0 {
                return Err(Error::domain(
                    "code distance of a rank-0 projection".to_string(),
                ));
            }
            let metric = GroupMetric::new(group.clone(), *weight)?;
            let n = group.size();
            let r = p.rank();
            let b = p.basis();
            let mut order: Vec<GroupElement> = group.elements();
            order.retain(|u| u != &group.zero());
            order.sort_by(|a, bb| metric.closed_weight(a).total_cmp(&metric.closed_weight(bb)));
            for u in order {
                let diam = metric.closed_weight(&u);
                for iz in 0..n {
                    let z = group.element_at(iz);
                    let from = group.index_of(&group.sub(&z, &u));
                    // compressed rank-one block of sigma * |z><z-u|
                    let sigma = cocycle.phase(&u, &group.sub(&z, &u));
                    let mut m = CMat::zeros(r, r);
                    for i in 0..r {
                        for j in 0..r {
                            m[(i, j)] = sigma * b[(iz, i)].conj() * b[(from, j)];
                        }
                    }
                    let (scalar, _) = compressed_scalar_test(&m, tol, 1.0);
                    if !scalar {
                        return Ok(diam);
                    }
                }
            }
            Ok(f64::INFINITY)
        }
    }
}
