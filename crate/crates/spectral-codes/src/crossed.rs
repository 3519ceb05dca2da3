//! Twisted group algebras over finite abelian groups.
//!
//! A finite abelian group `V` (bit vectors, symplectic bit-vector pairs, or a
//! truncated integer torus) together with a 2-cocycle `sigma` generates a
//! twisted algebra spanned by Weyl operators `U_u` with
//! `U_u U_v = sigma(u, v) U_{u+v}`. The regular representation acts on
//! `l^2(V)` by `pi(f)|x> = f(x)|x>` and `pi(U_u)|x> = sigma(u, x)|x+u>`;
//! symplectic pairs additionally carry the qubit representation
//! `U_{(p|q)} = X^p Z^q` on `2^n` dimensions, which satisfies the same
//! multiplication law with the one-sided cocycle `sigma = (-1)^{q . p'}`.
//!
//! Both representations realize every Weyl operator as a signed permutation,
//! so scans over large element families (logical-operator searches,
//! minimum-weight sweeps) apply them to a thin code basis in `O(dim * rank)`
//! per candidate instead of materializing dense matrices. The scans are
//! embarrassingly parallel over group elements; they run sequentially here
//! because every target instance finishes in milliseconds.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::operators::{c, compressed_scalar_test, CMat, CodeProjection};

/// Group elements are small unsigned tuples: bits for the binary kinds,
/// residues mod `M` for the torus.
pub type GroupElement = Vec<u32>;

/// Largest group size accepted by exhaustive element enumeration.
pub const MAX_ENUMERATION: usize = 1 << 16;
/// Largest group size accepted by the dense regular representation.
pub const MAX_REGULAR_DIM: usize = 1 << 12;
/// Scalar-test tolerance used by the logical-operator scans.
pub const W_SET_TOL: f64 = 1e-9;

/// A finite abelian group with a fixed element enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AbelianGroup {
    /// `F_2^n`, componentwise addition mod 2.
    BitVectors(usize),
    /// `F_2^{2n}` of pairs `(p|q)`, stored as `[p_1..p_n, q_1..q_n]`.
    SymplecticBitVectors(usize),
    /// `Z_M x Z_M` with `M` even, componentwise addition mod `M`.
    TorusLattice(u32),
}

use AbelianGroup::*;

impl AbelianGroup {
    /// Torus constructor enforcing the evenness the mod-2 cocycle needs.
    pub fn torus(m: u32) -> Result<Self> {
        if m < 2 || m % 2 != 0 {
            return Err(Error::domain(format!(
                "TorusLattice truncation M = {m} must be even and at least 2"
            )));
        }
        Ok(TorusLattice(m))
    }

    pub fn size(&self) -> usize {
        match self {
            BitVectors(n) => 1usize << n,
            SymplecticBitVectors(n) => 1usize << (2 * n),
            TorusLattice(m) => (*m as usize) * (*m as usize),
        }
    }

    /// Number of components in an element tuple.
    pub fn tuple_len(&self) -> usize {
        match self {
            BitVectors(n) => *n,
            SymplecticBitVectors(n) => 2 * n,
            TorusLattice(_) => 2,
        }
    }

    fn modulus(&self) -> u32 {
        match self {
            BitVectors(_) | SymplecticBitVectors(_) => 2,
            TorusLattice(m) => *m,
        }
    }

    pub fn zero(&self) -> GroupElement {
        vec![0; self.tuple_len()]
    }

    pub fn validate(&self, u: &GroupElement) -> Result<()> {
        if u.len() != self.tuple_len() {
            return Err(Error::Dimension {
                context: "group element tuple length",
                expected: self.tuple_len(),
                got: u.len(),
            });
        }
        let m = self.modulus();
        if u.iter().any(|&x| x >= m) {
            return Err(Error::domain(format!(
                "group element {u:?} has a component outside 0..{m}"
            )));
        }
        Ok(())
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let m = self.modulus();
        a.iter().zip(b).map(|(&x, &y)| (x + y) % m).collect()
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        let m = self.modulus();
        a.iter().map(|&x| (m - x) % m).collect()
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.add(a, &self.neg(b))
    }

    /// Index of an element in the fixed enumeration: big-endian digits for
    /// the binary kinds, `x * M + y` for the torus.
    pub fn index_of(&self, u: &GroupElement) -> usize {
        let m = self.modulus() as usize;
        u.iter().fold(0usize, |acc, &x| acc * m + x as usize)
    }

    pub fn element_at(&self, mut idx: usize) -> GroupElement {
        let len = self.tuple_len();
        let m = self.modulus() as usize;
        let mut out = vec![0u32; len];
        for slot in out.iter_mut().rev() {
            *slot = (idx % m) as u32;
            idx /= m;
        }
        out
    }

    /// All elements in enumeration order. Guarded: scans that need large
    /// groups iterate by weight shell instead of materializing this.
    pub fn elements(&self) -> Vec<GroupElement> {
        assert!(
            self.size() <= MAX_ENUMERATION,
            "group of size {} is too large for exhaustive enumeration",
            self.size()
        );
        (0..self.size()).map(|i| self.element_at(i)).collect()
    }

    pub fn random_element(&self, rng: &mut impl Rng) -> GroupElement {
        let m = self.modulus();
        (0..self.tuple_len()).map(|_| rng.random_range(0..m)).collect()
    }

    /// Mod-2 symplectic pairing. For pairs `(p|q)` this is
    /// `p.q' + q.p' mod 2`; on the torus the same formula on the two residue
    /// components. Undefined for plain bit vectors.
    pub fn symplectic_form(&self, u: &GroupElement, v: &GroupElement) -> Result<u32> {
        match self {
            SymplecticBitVectors(n) => {
                let mut acc = 0u32;
                for i in 0..*n {
                    acc += u[i] * v[n + i] + u[n + i] * v[i];
                }
                Ok(acc % 2)
            }
            TorusLattice(_) => Ok((u[0] * v[1] + u[1] * v[0]) % 2),
            BitVectors(_) => Err(Error::domain(
                "symplectic form is undefined for plain bit vectors".to_string(),
            )),
        }
    }
}

/// A normalized 2-cocycle on a group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cocycle {
    group: AbelianGroup,
    kind: CocycleKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CocycleKind {
    /// `sigma = 1`.
    Trivial,
    /// One-sided binary phase: `sigma((p|q), (p'|q')) = (-1)^{q . p'}`.
    ///
    /// Its commutation ratio is the full symplectic sign
    /// `(-1)^{p.q' + q.p'}`, and it keeps every phase in `{+1, -1}` so the
    /// qubit realization is `X^p Z^q` with no quartic roots of unity. On the
    /// torus the exponent is the product of the second component of the first
    /// argument with the first component of the second, reduced mod 2 (this
    /// is a genuine cocycle exactly because `M` is even).
    SymplecticOneSided,
}

impl Cocycle {
    pub fn trivial(group: AbelianGroup) -> Self {
        Cocycle { group, kind: CocycleKind::Trivial }
    }

    /// The canonical cocycle for each group kind: trivial on bit vectors,
    /// the one-sided binary phase on symplectic pairs and on the torus.
    pub fn standard(group: AbelianGroup) -> Self {
        let kind = match &group {
            BitVectors(_) => CocycleKind::Trivial,
            SymplecticBitVectors(_) | TorusLattice(_) => CocycleKind::SymplecticOneSided,
        };
        Cocycle { group, kind }
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn kind(&self) -> CocycleKind {
        self.kind
    }

    pub fn phase(&self, u: &GroupElement, v: &GroupElement) -> Complex64 {
        match self.kind {
            CocycleKind::Trivial => c(1.0, 0.0),
            CocycleKind::SymplecticOneSided => {
                let exponent = match &self.group {
                    SymplecticBitVectors(n) => {
                        (0..*n).map(|i| u[n + i] * v[i]).sum::<u32>() % 2
                    }
                    TorusLattice(_) => (u[1] * v[0]) % 2,
                    BitVectors(_) => 0,
                };
                if exponent == 0 { c(1.0, 0.0) } else { c(-1.0, 0.0) }
            }
        }
    }
}

/// Nonnegative weight on group elements, vanishing exactly at 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightFunction {
    /// Number of nonzero components.
    Hamming,
    /// Number of qubit sites `i` with `(p_i, q_i) != (0, 0)`.
    Pauli,
    /// Sum of `|r|` over components, `r` the representative in `[-M/2, M/2)`.
    WrappedManhattan,
}

impl WeightFunction {
    /// The usual pairing of weight kind to group kind.
    pub fn standard(group: &AbelianGroup) -> Self {
        match group {
            BitVectors(_) => WeightFunction::Hamming,
            SymplecticBitVectors(_) => WeightFunction::Pauli,
            TorusLattice(_) => WeightFunction::WrappedManhattan,
        }
    }

    pub fn check_compatible(&self, group: &AbelianGroup) -> Result<()> {
        let ok = match self {
            WeightFunction::Hamming => true,
            WeightFunction::Pauli => matches!(group, SymplecticBitVectors(_)),
            WeightFunction::WrappedManhattan => matches!(group, TorusLattice(_)),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "weight {self:?} is not defined on group {group:?}"
            )))
        }
    }

    pub fn weight(&self, group: &AbelianGroup, u: &GroupElement) -> f64 {
        match self {
            WeightFunction::Hamming => u.iter().filter(|&&x| x != 0).count() as f64,
            WeightFunction::Pauli => {
                let n = match group {
                    SymplecticBitVectors(n) => *n,
                    _ => panic!("Pauli weight needs a symplectic group"),
                };
                (0..n).filter(|&i| u[i] != 0 || u[n + i] != 0).count() as f64
            }
            WeightFunction::WrappedManhattan => {
                let m = match group {
                    TorusLattice(m) => *m as i64,
                    _ => panic!("wraparound Manhattan weight needs a torus"),
                };
                u.iter()
                    .map(|&x| {
                        let r = ((x as i64 + m / 2).rem_euclid(m)) - m / 2;
                        r.abs() as f64
                    })
                    .sum()
            }
        }
    }
}

/// A signed permutation `|x> -> phase[x] |perm[x]>`: the concrete form every
/// Weyl operator takes in both representations.
#[derive(Clone, Debug)]
pub struct SignedPermutation {
    pub perm: Vec<usize>,
    pub phase: Vec<Complex64>,
}

impl SignedPermutation {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn apply_vec_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::default());
        for (x, (&p, &ph)) in self.perm.iter().zip(&self.phase).enumerate() {
            out[p] = ph * v[x];
        }
    }

    /// Apply columnwise to a thin matrix.
    pub fn apply_mat(&self, b: &CMat) -> CMat {
        let mut out = CMat::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            for (x, (&p, &ph)) in self.perm.iter().zip(&self.phase).enumerate() {
                out[(p, j)] = ph * b[(x, j)];
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.dim();
        let mut m = CMat::zeros(n, n);
        for (x, (&p, &ph)) in self.perm.iter().zip(&self.phase).enumerate() {
            m[(p, x)] = ph;
        }
        m
    }

    /// Multiply the global phase.
    pub fn scaled(mut self, s: Complex64) -> Self {
        for ph in &mut self.phase {
            *ph *= s;
        }
        self
    }
}

/// Regular-representation Weyl operator `pi(U_u)` on `l^2(V)`.
pub fn weyl(cocycle: &Cocycle, u: &GroupElement) -> Result<SignedPermutation> {
    let group = cocycle.group();
    group.validate(u)?;
    let n = group.size();
    if n > MAX_REGULAR_DIM {
        return Err(Error::domain(format!(
            "regular representation of a group of size {n} is too large"
        )));
    }
    let mut perm = vec![0usize; n];
    let mut phase = vec![Complex64::default(); n];
    for ix in 0..n {
        let x = group.element_at(ix);
        perm[ix] = group.index_of(&group.add(&x, u));
        phase[ix] = cocycle.phase(u, &x);
    }
    Ok(SignedPermutation { perm, phase })
}

/// Qubit realization `X^p Z^q` of a symplectic pair, on `2^n` dimensions.
///
/// Satisfies the same one-sided multiplication law
/// `U_u U_v = (-1)^{q.p'} U_{u+v}` as the regular representation.
pub fn qubit_weyl(n: usize, u: &GroupElement) -> Result<SignedPermutation> {
    let group = SymplecticBitVectors(n);
    group.validate(u)?;
    let dim = 1usize << n;
    let mut p_mask = 0usize;
    let mut q_mask = 0usize;
    for j in 0..n {
        if u[j] != 0 {
            p_mask |= 1 << (n - 1 - j);
        }
        if u[n + j] != 0 {
            q_mask |= 1 << (n - 1 - j);
        }
    }
    let mut perm = vec![0usize; dim];
    let mut phase = vec![Complex64::default(); dim];
    for x in 0..dim {
        perm[x] = x ^ p_mask;
        let sign = (x & q_mask).count_ones() % 2;
        phase[x] = if sign == 0 { c(1.0, 0.0) } else { c(-1.0, 0.0) };
    }
    Ok(SignedPermutation { perm, phase })
}

/// Hermitian unitary form `i^{p.q} X^p Z^q` of a symplectic pair: the literal
/// Pauli string with `Y` on sites where both bits are set.
pub fn hermitian_qubit_weyl(n: usize, u: &GroupElement) -> Result<SignedPermutation> {
    let w = qubit_weyl(n, u)?;
    let ys: u32 = (0..n).map(|j| u[j] * u[n + j]).sum();
    let s = match ys % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    };
    Ok(w.scaled(s))
}

/// Parse a Pauli string like `"XZZXI"` into its symplectic pair.
pub fn symplectic_from_pauli(s: &str) -> Result<(usize, GroupElement)> {
    let n = s.chars().count();
    if n == 0 {
        return Err(Error::domain("empty Pauli string".to_string()));
    }
    let mut u = vec![0u32; 2 * n];
    for (j, ch) in s.chars().enumerate() {
        match ch {
            'I' => {}
            'X' => u[j] = 1,
            'Z' => u[n + j] = 1,
            'Y' => {
                u[j] = 1;
                u[n + j] = 1;
            }
            other => {
                return Err(Error::domain(format!(
                    "invalid Pauli letter '{other}' in \"{s}\""
                )))
            }
        }
    }
    Ok((n, u))
}

/// Format a symplectic pair as a Pauli string.
pub fn pauli_from_symplectic(n: usize, u: &GroupElement) -> String {
    (0..n)
        .map(|j| match (u[j], u[n + j]) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (0, 1) => 'Z',
            _ => 'Y',
        })
        .collect()
}

/// Dense matrix of a Pauli string (Hermitian convention, `Y` literal).
pub fn pauli_string_matrix(s: &str) -> Result<CMat> {
    let (n, u) = symplectic_from_pauli(s)?;
    Ok(hermitian_qubit_weyl(n, &u)?.to_dense())
}

/// An element `a = sum_u f_u U_u` with finitely many nonzero coefficient
/// functions, each stored densely over the group.
#[derive(Clone, Debug)]
pub struct CrossedProductElement {
    cocycle: Cocycle,
    terms: BTreeMap<GroupElement, Vec<Complex64>>,
}

/// Coefficient magnitudes below this count as absent.
pub const COEFF_TOL: f64 = 1e-12;

impl CrossedProductElement {
    pub fn zero(cocycle: &Cocycle) -> Self {
        CrossedProductElement { cocycle: cocycle.clone(), terms: BTreeMap::new() }
    }

    /// `f U_u` with a dense coefficient vector indexed like the enumeration.
    pub fn monomial(cocycle: &Cocycle, u: &GroupElement, f: Vec<Complex64>) -> Result<Self> {
        let group = cocycle.group();
        group.validate(u)?;
        if f.len() != group.size() {
            return Err(Error::Dimension {
                context: "coefficient function length",
                expected: group.size(),
                got: f.len(),
            });
        }
        let mut terms = BTreeMap::new();
        if f.iter().any(|z| z.norm() > COEFF_TOL) {
            terms.insert(u.clone(), f);
        }
        Ok(CrossedProductElement { cocycle: cocycle.clone(), terms })
    }

    /// Multiplication operator for a plain function (`u = 0` term).
    pub fn from_function(cocycle: &Cocycle, f: Vec<Complex64>) -> Result<Self> {
        let zero = cocycle.group().zero();
        Self::monomial(cocycle, &zero, f)
    }

    /// `delta_z U_u`.
    pub fn delta_monomial(cocycle: &Cocycle, z: &GroupElement, u: &GroupElement) -> Result<Self> {
        let group = cocycle.group();
        group.validate(z)?;
        let mut f = vec![Complex64::default(); group.size()];
        f[group.index_of(z)] = c(1.0, 0.0);
        Self::monomial(cocycle, u, f)
    }

    /// `U_u` itself (constant coefficient 1).
    pub fn weyl_monomial(cocycle: &Cocycle, u: &GroupElement) -> Result<Self> {
        let size = cocycle.group().size();
        Self::monomial(cocycle, u, vec![c(1.0, 0.0); size])
    }

    pub fn group(&self) -> &AbelianGroup {
        self.cocycle.group()
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.cocycle
    }

    pub fn terms(&self) -> &BTreeMap<GroupElement, Vec<Complex64>> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_same_algebra(&self, other: &Self) -> Result<()> {
        if self.cocycle != other.cocycle {
            return Err(Error::domain(
                "elements live in different twisted algebras".to_string(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_algebra(other)?;
        let mut terms = self.terms.clone();
        for (u, g) in &other.terms {
            match terms.get_mut(u) {
                Some(f) => {
                    for (a, b) in f.iter_mut().zip(g) {
                        *a += b;
                    }
                }
                None => {
                    terms.insert(u.clone(), g.clone());
                }
            }
        }
        let mut out = CrossedProductElement { cocycle: self.cocycle.clone(), terms };
        out.prune();
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for f in out.terms.values_mut() {
            for z in f.iter_mut() {
                *z *= s;
            }
        }
        out.prune();
        out
    }

    /// Twisted convolution:
    /// `(ab)_w(x) = sum_{u+v=w} sigma(u, v) f_u(x) g_v(x - u)`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_algebra(other)?;
        let group = self.group().clone();
        let size = group.size();
        let mut terms: BTreeMap<GroupElement, Vec<Complex64>> = BTreeMap::new();
        for (u, f) in &self.terms {
            for (v, g) in &other.terms {
                let w = group.add(u, v);
                let sigma = self.cocycle.phase(u, v);
                let slot = terms
                    .entry(w)
                    .or_insert_with(|| vec![Complex64::default(); size]);
                for ix in 0..size {
                    let x = group.element_at(ix);
                    let shifted = group.index_of(&group.sub(&x, u));
                    slot[ix] += sigma * f[ix] * g[shifted];
                }
            }
        }
        let mut out = CrossedProductElement { cocycle: self.cocycle.clone(), terms };
        out.prune();
        Ok(out)
    }

    /// Adjoint: `(f U_u)* = conj(sigma(u, -u)) (conj . f . (+u)) U_{-u}`.
    pub fn adjoint(&self) -> Self {
        let group = self.group().clone();
        let size = group.size();
        let mut terms: BTreeMap<GroupElement, Vec<Complex64>> = BTreeMap::new();
        for (u, f) in &self.terms {
            let v = group.neg(u);
            let sigma = self.cocycle.phase(u, &v).conj();
            let slot = terms
                .entry(v)
                .or_insert_with(|| vec![Complex64::default(); size]);
            for ix in 0..size {
                let x = group.element_at(ix);
                let shifted = group.index_of(&group.add(&x, u));
                slot[ix] += sigma * f[shifted].conj();
            }
        }
        let mut out = CrossedProductElement { cocycle: self.cocycle.clone(), terms };
        out.prune();
        out
    }

    fn prune(&mut self) {
        self.terms.retain(|_, f| f.iter().any(|z| z.norm() > COEFF_TOL));
    }

    /// Dense regular-representation matrix:
    /// entry `[x+u, x] += sigma(u, x) f_u(x+u)`.
    pub fn represent(&self) -> Result<CMat> {
        let group = self.group();
        let n = group.size();
        if n > MAX_REGULAR_DIM {
            return Err(Error::domain(format!(
                "regular representation of a group of size {n} is too large"
            )));
        }
        let mut m = CMat::zeros(n, n);
        for (u, f) in &self.terms {
            for ix in 0..n {
                let x = group.element_at(ix);
                let target = group.index_of(&group.add(&x, u));
                m[(target, ix)] += self.cocycle.phase(u, &x) * f[target];
            }
        }
        Ok(m)
    }
}

/// How Weyl operators are realized as matrices for code scans.
#[derive(Clone, Debug)]
pub enum WeylRepresentation {
    /// Left regular representation on `l^2(V)` with the given cocycle.
    Regular(Cocycle),
    /// `X^p Z^q` on `n` qubits; group must be `SymplecticBitVectors(n)`.
    QubitPauli,
}

impl WeylRepresentation {
    pub fn dim(&self, group: &AbelianGroup) -> Result<usize> {
        match self {
            WeylRepresentation::Regular(cocycle) => {
                if cocycle.group() != group {
                    return Err(Error::domain(
                        "regular representation cocycle is over a different group".to_string(),
                    ));
                }
                Ok(group.size())
            }
            WeylRepresentation::QubitPauli => match group {
                SymplecticBitVectors(n) => Ok(1usize << n),
                other => Err(Error::domain(format!(
                    "qubit representation needs symplectic pairs, got {other:?}"
                ))),
            },
        }
    }

    pub fn operator(&self, group: &AbelianGroup, u: &GroupElement) -> Result<SignedPermutation> {
        match self {
            WeylRepresentation::Regular(cocycle) => weyl(cocycle, u),
            WeylRepresentation::QubitPauli => match group {
                SymplecticBitVectors(n) => qubit_weyl(*n, u),
                other => Err(Error::domain(format!(
                    "qubit representation needs symplectic pairs, got {other:?}"
                ))),
            },
        }
    }
}

fn scan_candidate(
    p: &CodeProjection,
    rep: &WeylRepresentation,
    group: &AbelianGroup,
    u: &GroupElement,
) -> Result<bool> {
    let op = rep.operator(group, u)?;
    if op.dim() != p.dim() {
        return Err(Error::Dimension {
            context: "W-set projection vs representation",
            expected: op.dim(),
            got: p.dim(),
        });
    }
    let moved = op.apply_mat(p.basis());
    let compressed = p.basis().adjoint() * moved;
    let (scalar, _) = compressed_scalar_test(&compressed, W_SET_TOL, 1.0);
    Ok(!scalar)
}

/// All `u` whose Weyl operator acts non-scalar on the code space:
/// `W = { u : P U_u P not in C P }`, by exhaustive scan at tolerance 1e-9.
pub fn compute_w_set(
    p: &CodeProjection,
    group: &AbelianGroup,
    rep: &WeylRepresentation,
) -> Result<Vec<GroupElement>> {
    if p.rank() == 0 {
        return Err(Error::domain("W-set of a rank-0 projection".to_string()));
    }
    if group.size() > MAX_ENUMERATION {
        return Err(Error::domain(format!(
            "W-set enumeration over {} elements is too large",
            group.size()
        )));
    }
    let mut w = Vec::new();
    for u in group.elements() {
        if scan_candidate(p, rep, group, &u)? {
            w.push(u);
        }
    }
    Ok(w)
}

/// Iterator over symplectic pairs in ascending Pauli weight: weight shells
/// are generated as qubit subsets times nonidentity letter choices, so large
/// groups never get materialized.
fn symplectic_by_weight(n: usize) -> impl Iterator<Item = GroupElement> {
    (0..=n).flat_map(move |w| {
        let mut out: Vec<GroupElement> = Vec::new();
        if w == 0 {
            out.push(vec![0u32; 2 * n]);
            return out.into_iter();
        }
        // all w-subsets of qubit positions
        let mut subset: Vec<usize> = (0..w).collect();
        loop {
            // 3^w letter assignments: 1 -> X, 2 -> Z, 3 -> Y
            for letters in 0..3usize.pow(w as u32) {
                let mut u = vec![0u32; 2 * n];
                let mut rest = letters;
                for &site in &subset {
                    let letter = rest % 3;
                    rest /= 3;
                    match letter {
                        0 => u[site] = 1,
                        1 => u[n + site] = 1,
                        _ => {
                            u[site] = 1;
                            u[n + site] = 1;
                        }
                    }
                }
                out.push(u);
            }
            // next subset in lexicographic order
            let mut i = w;
            loop {
                if i == 0 {
                    return out.into_iter();
                }
                i -= 1;
                if subset[i] != i + n - w {
                    break;
                }
            }
            subset[i] += 1;
            for j in i + 1..w {
                subset[j] = subset[j - 1] + 1;
            }
        }
    })
}

/// Minimum weight over the W-set, scanning candidates in ascending weight so
/// the first non-scalar operator settles the answer. Returns `+inf` when no
/// Weyl operator acts non-scalar (no nontrivial logical action).
pub fn code_distance_via_w(
    p: &CodeProjection,
    group: &AbelianGroup,
    rep: &WeylRepresentation,
    weight: &WeightFunction,
) -> Result<f64> {
    if p.rank() == 0 {
        return Err(Error::domain("code distance of a rank-0 projection".to_string()));
    }
    weight.check_compatible(group)?;
    if let (SymplecticBitVectors(n), WeightFunction::Pauli) = (group, weight) {
        // shell iterator: weights arrive in ascending order
        for u in symplectic_by_weight(*n) {
            let w = weight.weight(group, &u);
            if w == 0.0 {
                continue;
            }
            if scan_candidate(p, rep, group, &u)? {
                return Ok(w);
            }
        }
        return Ok(f64::INFINITY);
    }
    if group.size() > MAX_ENUMERATION {
        return Err(Error::domain(format!(
            "weight-ordered scan over {} elements is too large",
            group.size()
        )));
    }
    let mut candidates = group.elements();
    candidates.sort_by(|a, b| {
        weight
            .weight(group, a)
            .total_cmp(&weight.weight(group, b))
    });
    for u in candidates {
        let w = weight.weight(group, &u);
        if w == 0.0 {
            continue;
        }
        if scan_candidate(p, rep, group, &u)? {
            return Ok(w);
        }
    }
    Ok(f64::INFINITY)
}
