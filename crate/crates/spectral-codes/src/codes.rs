//! Concrete code families: classical linear codes, qubit stabilizer codes, a
//! discrete translation (GKP-style) code on a torus, and the Z2 toric code,
//! each packaged as a Dirac operator whose kernel is the code space together
//! with its projection and distance. Also the formal converse: any projection
//! extends to a spectral triple whose Dirac kernel is exactly its range.
//!
//! Distances come from the Weyl scan machinery in [`crate::crossed`]: the
//! minimum weight of a translation acting non-scalar on the code.

use crate::crossed::{
    code_distance_via_w, hermitian_qubit_weyl, pauli_from_symplectic, symplectic_from_pauli, weyl,
    AbelianGroup, Cocycle, GroupElement, WeightFunction, WeylRepresentation,
};
use crate::error::{Error, Result};
use crate::operators::{
    c, kernel_projection, spectral_projection, CMat, CodeProjection, HermitianOperator,
};

/// Largest dense operator dimension the constructors will build.
const MAX_DENSE_DIM: usize = 1 << 12;

// ---------------------------------------------------------------------------
// GF(2) linear algebra

/// Row space in reduced echelon form over GF(2).
#[derive(Clone, Debug, Default)]
struct Gf2Space {
    rows: Vec<Vec<u8>>,
    pivots: Vec<usize>,
}

impl Gf2Space {
    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduce `v` to its canonical representative modulo the row space.
    fn reduce(&self, v: &mut [u8]) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v[p] == 1 {
                for (x, y) in v.iter_mut().zip(row) {
                    *x ^= y;
                }
            }
        }
    }

    fn contains(&self, v: &[u8]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().all(|&b| b == 0)
    }

    /// Add a vector; returns false if it was already in the span.
    fn insert(&mut self, v: &[u8]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        let Some(p) = w.iter().position(|&b| b == 1) else {
            return false;
        };
        for row in &mut self.rows {
            if row[p] == 1 {
                for (x, y) in row.iter_mut().zip(&w) {
                    *x ^= y;
                }
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.rows.insert(at, w);
        self.pivots.insert(at, p);
        true
    }

    /// Basis of `{ x : row . x = 0 for every row }` in `n` coordinates.
    fn kernel(&self, n: usize) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        for f in 0..n {
            if self.pivots.contains(&f) {
                continue;
            }
            let mut x = vec![0u8; n];
            x[f] = 1;
            for (row, &p) in self.rows.iter().zip(&self.pivots) {
                x[p] = row[f];
            }
            out.push(x);
        }
        out
    }
}

fn gf2_space(rows: impl IntoIterator<Item = Vec<u8>>) -> Gf2Space {
    let mut s = Gf2Space::default();
    for r in rows {
        s.insert(&r);
    }
    s
}

/// Every GF(2) combination of the basis vectors.
fn gf2_span(basis: &[Vec<u8>], n: usize) -> Vec<Vec<u8>> {
    assert!(basis.len() <= 20, "span enumeration over {} basis vectors", basis.len());
    let mut out = Vec::with_capacity(1 << basis.len());
    for mask in 0u32..1 << basis.len() {
        let mut v = vec![0u8; n];
        for (k, b) in basis.iter().enumerate() {
            if mask >> k & 1 == 1 {
                for (x, y) in v.iter_mut().zip(b) {
                    *x ^= y;
                }
            }
        }
        out.push(v);
    }
    out
}

fn validate_bits(row: &[u8], n: usize, what: &'static str) -> Result<()> {
    if row.len() != n {
        return Err(Error::Dimension { context: what, expected: n, got: row.len() });
    }
    if row.iter().any(|&b| b > 1) {
        return Err(Error::domain(format!("{what} entries must be 0 or 1")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Classical linear codes

/// A binary linear code `C` in `F_2^n` with the diagonal Dirac operator that
/// indicates membership: `D|x> = 0` on codewords and `|x>` off them.
#[derive(Clone, Debug)]
pub struct ClassicalCode {
    pub n: usize,
    pub codewords: Vec<GroupElement>,
    pub dirac: HermitianOperator,
}

#[derive(Clone, Debug)]
pub struct ClassicalCodeInstance {
    pub code: ClassicalCode,
    pub projection: CodeProjection,
    pub distance: f64,
}

/// Build the code spanned by the generator rows, its kernel projection on
/// `l^2(F_2^n)`, and its distance (minimum nonzero Hamming weight, found by
/// the Weyl scan). Dependent rows are rejected with the achieved rank.
pub fn classical_code(n: usize, generators: &[Vec<u8>]) -> Result<ClassicalCodeInstance> {
    if n == 0 {
        return Err(Error::domain("classical code needs length >= 1".to_string()));
    }
    if 1usize << n > MAX_DENSE_DIM {
        return Err(Error::domain(format!(
            "length {n} needs a 2^{n}-dimensional space; dense cap is {MAX_DENSE_DIM}"
        )));
    }
    for row in generators {
        validate_bits(row, n, "classical generator row")?;
    }
    let space = gf2_space(generators.iter().cloned());
    if space.rank() != generators.len() {
        return Err(Error::domain(format!(
            "generator rows are dependent: rank {} over {} rows",
            space.rank(),
            generators.len()
        )));
    }

    let group = AbelianGroup::BitVectors(n);
    let codeword_bits = gf2_span(&space.rows, n);
    let codewords: Vec<GroupElement> = {
        let mut cw: Vec<GroupElement> = codeword_bits
            .iter()
            .map(|v| v.iter().map(|&b| u32::from(b)).collect())
            .collect();
        cw.sort();
        cw
    };

    let diag: Vec<f64> = group
        .elements()
        .iter()
        .map(|x| if codewords.binary_search(x).is_ok() { 0.0 } else { 1.0 })
        .collect();
    let dirac = HermitianOperator::from_real_diagonal(&diag);
    let projection = kernel_projection(&dirac)?;

    let cocycle = Cocycle::trivial(group.clone());
    let distance = code_distance_via_w(
        &projection,
        &group,
        &WeylRepresentation::Regular(cocycle),
        &WeightFunction::Hamming,
    )?;

    Ok(ClassicalCodeInstance {
        code: ClassicalCode { n, codewords, dirac },
        projection,
        distance,
    })
}

// ---------------------------------------------------------------------------
// Stabilizer codes

/// A qubit stabilizer group given by symplectic generator vectors, together
/// with the record of which generators needed the Hermitizing `i` phase
/// (those whose X and Z parts overlap on an odd number of qubits).
#[derive(Clone, Debug)]
pub struct StabilizerCode {
    pub n: usize,
    pub generators: Vec<GroupElement>,
    pub hermitized: Vec<usize>,
}

impl StabilizerCode {
    pub fn generator_strings(&self) -> Vec<String> {
        self.generators
            .iter()
            .map(|u| pauli_from_symplectic(self.n, u))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct StabilizerCodeInstance {
    pub code: StabilizerCode,
    pub dirac: HermitianOperator,
    pub projection: CodeProjection,
    pub distance: f64,
}

/// Build `D = sum_i (I - S_i)` from Pauli strings, project onto its kernel
/// (the joint +1 eigenspace, dimension `2^(n-m)`), and compute the distance
/// as the minimum Pauli weight acting non-scalar on the code.
///
/// Generators must pairwise commute (vanishing symplectic form) and be
/// independent; violations are reported with the offending pair or the
/// achieved rank.
pub fn stabilizer_code(n: usize, generators: &[&str]) -> Result<StabilizerCodeInstance> {
    if generators.is_empty() {
        return Err(Error::domain("stabilizer code needs at least one generator".to_string()));
    }
    if 1usize << n > MAX_DENSE_DIM {
        return Err(Error::domain(format!(
            "{n} qubits need a 2^{n}-dimensional space; dense cap is {MAX_DENSE_DIM}"
        )));
    }
    let group = AbelianGroup::SymplecticBitVectors(n);
    let mut vecs = Vec::with_capacity(generators.len());
    for s in generators {
        let (len, u) = symplectic_from_pauli(s)?;
        if len != n {
            return Err(Error::Dimension {
                context: "stabilizer generator length",
                expected: n,
                got: len,
            });
        }
        vecs.push(u);
    }

    for i in 0..vecs.len() {
        for j in (i + 1)..vecs.len() {
            if group.symplectic_form(&vecs[i], &vecs[j])? != 0 {
                return Err(Error::domain(format!(
                    "generators {i} ({}) and {j} ({}) anticommute: the stabilizer set must be isotropic",
                    generators[i], generators[j]
                )));
            }
        }
    }
    let space = gf2_space(
        vecs.iter()
            .map(|u| u.iter().map(|&x| (x & 1) as u8).collect::<Vec<u8>>()),
    );
    if space.rank() != vecs.len() {
        return Err(Error::domain(format!(
            "stabilizer generators are dependent: rank {} over {} generators",
            space.rank(),
            vecs.len()
        )));
    }

    let dim = 1usize << n;
    let mut hermitized = Vec::new();
    let mut dmat = CMat::zeros(dim, dim);
    for i in 0..dim {
        dmat[(i, i)] = c(vecs.len() as f64, 0.0);
    }
    for (k, u) in vecs.iter().enumerate() {
        let overlap: u32 = (0..n).map(|j| u[j] * u[n + j]).sum();
        if overlap % 2 == 1 {
            hermitized.push(k);
        }
        let s = hermitian_qubit_weyl(n, u)?;
        dmat -= s.to_dense();
    }
    let dirac = HermitianOperator::new(dmat)?;
    let projection = kernel_projection(&dirac)?;
    let expected = 1usize << (n - vecs.len());
    if projection.rank() != expected {
        return Err(Error::numerical(format!(
            "stabilizer kernel has dimension {}, expected {expected}",
            projection.rank()
        )));
    }

    let distance = code_distance_via_w(
        &projection,
        &group,
        &WeylRepresentation::QubitPauli,
        &WeightFunction::Pauli,
    )?;

    Ok(StabilizerCodeInstance {
        code: StabilizerCode { n, generators: vecs, hermitized },
        dirac,
        projection,
        distance,
    })
}

// ---------------------------------------------------------------------------
// Discrete translation code on a torus

#[derive(Clone, Debug)]
pub struct GkpInstance {
    pub truncation: u32,
    pub dirac: HermitianOperator,
    pub projection: CodeProjection,
    pub distance: f64,
}

/// Discrete translation code on `Z_M x Z_M`: the Dirac operator penalizes
/// deviation from invariance under the sublattice translations `(2,0)` and
/// `(0,2)`, symmetrized as `1 - (U + U*)/2` per translation. The distance is
/// 1 for every even truncation; the kernel dimension is a finite-size datum,
/// not a code invariant.
pub fn gkp_discrete(truncation: u32) -> Result<GkpInstance> {
    if truncation % 2 != 0 || truncation < 4 {
        return Err(Error::domain(format!(
            "discrete translation code needs an even truncation >= 4, got {truncation}"
        )));
    }
    let group = AbelianGroup::torus(truncation)?;
    let dim = group.size();
    if dim > MAX_DENSE_DIM {
        return Err(Error::domain(format!(
            "truncation {truncation} needs dimension {dim}; dense cap is {MAX_DENSE_DIM}"
        )));
    }
    let cocycle = Cocycle::standard(group.clone());
    let mut dmat = CMat::zeros(dim, dim);
    for i in 0..dim {
        dmat[(i, i)] = c(2.0, 0.0);
    }
    for u in [vec![0u32, 2], vec![2u32, 0]] {
        let s = weyl(&cocycle, &u)?.to_dense();
        dmat -= (&s + s.adjoint()).scale(0.5);
    }
    let dirac = HermitianOperator::new(dmat)?;
    let projection = kernel_projection(&dirac)?;
    let distance = code_distance_via_w(
        &projection,
        &group,
        &WeylRepresentation::Regular(cocycle),
        &WeightFunction::WrappedManhattan,
    )?;
    Ok(GkpInstance { truncation, dirac, projection, distance })
}

// ---------------------------------------------------------------------------
// Z2 toric code

/// Edge-labeled square lattice on a torus. Horizontal edge `(x, y)` points in
/// the x direction from vertex `(x, y)`; vertical edges follow after all
/// horizontal ones. Stars and plaquettes are edge index lists.
#[derive(Clone, Debug)]
pub struct ToricLattice {
    pub lx: u32,
    pub ly: u32,
    pub n_edges: usize,
    pub stars: Vec<Vec<usize>>,
    pub plaquettes: Vec<Vec<usize>>,
}

impl ToricLattice {
    /// Validated lattice layout without any operators attached; capped at 16
    /// edges.
    pub fn layout(lx: u32, ly: u32) -> Result<Self> {
        if lx < 2 || ly < 2 {
            return Err(Error::domain(format!(
                "toric lattice needs at least 2 sites per axis, got {lx} x {ly}"
            )));
        }
        let n_edges = 2 * (lx as usize) * (ly as usize);
        if n_edges > 16 {
            return Err(Error::domain(format!(
                "oversize lattice: {n_edges} edges, cap is 16"
            )));
        }
        Ok(Self::new(lx, ly))
    }

    fn new(lx: u32, ly: u32) -> Self {
        let (lx_, ly_) = (lx as usize, ly as usize);
        let n_h = lx_ * ly_;
        let he = |x: usize, y: usize| (x % lx_) * ly_ + (y % ly_);
        let ve = |x: usize, y: usize| n_h + (x % lx_) * ly_ + (y % ly_);
        let mut stars = Vec::new();
        let mut plaquettes = Vec::new();
        for x in 0..lx_ {
            for y in 0..ly_ {
                stars.push(vec![
                    he(x, y),
                    he(x + lx_ - 1, y),
                    ve(x, y),
                    ve(x, y + ly_ - 1),
                ]);
                plaquettes.push(vec![he(x, y), he(x, y + 1), ve(x, y), ve(x + 1, y)]);
            }
        }
        ToricLattice { lx, ly, n_edges: 2 * n_h, stars, plaquettes }
    }

    fn star_bits(&self) -> Vec<Vec<u8>> {
        self.stars.iter().map(|s| edge_bits(s, self.n_edges)).collect()
    }

    fn plaquette_bits(&self) -> Vec<Vec<u8>> {
        self.plaquettes.iter().map(|s| edge_bits(s, self.n_edges)).collect()
    }

    /// All even-degree edge subsets of the primal lattice (closed loops and
    /// their unions), as edge index lists.
    pub fn primal_loops(&self) -> Vec<Vec<usize>> {
        self.loops_of(&self.incidence())
    }

    /// All closed loops of the dual lattice, where a dual edge is identified
    /// with the primal edge it crosses.
    pub fn dual_loops(&self) -> Vec<Vec<usize>> {
        self.loops_of(&self.dual_incidence())
    }

    /// Whether a primal loop bounds: lies in the span of the plaquette
    /// boundaries.
    pub fn is_contractible_primal(&self, edges: &[usize]) -> bool {
        gf2_space(self.plaquette_bits()).contains(&edge_bits(edges, self.n_edges))
    }

    /// Whether a dual loop bounds: lies in the span of the vertex stars.
    pub fn is_contractible_dual(&self, edges: &[usize]) -> bool {
        gf2_space(self.star_bits()).contains(&edge_bits(edges, self.n_edges))
    }

    /// Vertex-edge incidence rows over GF(2).
    fn incidence(&self) -> Vec<Vec<u8>> {
        let (lx, ly) = (self.lx as usize, self.ly as usize);
        let n_h = lx * ly;
        let mut rows = vec![vec![0u8; self.n_edges]; lx * ly];
        for x in 0..lx {
            for y in 0..ly {
                // horizontal edge (x, y) joins vertices (x, y) and (x+1, y);
                // vertical edge (x, y) joins (x, y) and (x, y+1)
                let e_h = x * ly + y;
                let e_v = n_h + x * ly + y;
                rows[x * ly + y][e_h] ^= 1;
                rows[((x + 1) % lx) * ly + y][e_h] ^= 1;
                rows[x * ly + y][e_v] ^= 1;
                rows[x * ly + (y + 1) % ly][e_v] ^= 1;
            }
        }
        rows
    }

    /// Face-edge incidence rows: each dual vertex is a face bounded by its
    /// plaquette edges.
    fn dual_incidence(&self) -> Vec<Vec<u8>> {
        self.plaquette_bits()
    }

    fn loops_of(&self, incidence: &[Vec<u8>]) -> Vec<Vec<usize>> {
        let space = gf2_space(incidence.to_vec());
        let cycle_basis = space.kernel(self.n_edges);
        gf2_span(&cycle_basis, self.n_edges)
            .into_iter()
            .map(|bits| {
                bits.iter()
                    .enumerate()
                    .filter(|(_, &b)| b == 1)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect()
    }
}

fn edge_bits(edges: &[usize], n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    for &e in edges {
        v[e] ^= 1;
    }
    v
}

#[derive(Clone, Debug)]
pub struct ToricCodeInstance {
    pub lattice: ToricLattice,
    pub dirac: HermitianOperator,
    pub projection: CodeProjection,
    pub distance: f64,
}

/// The Z2 toric code on an `Lx x Ly` torus: `D = sum_v (I - A_v) + sum_f
/// (I - B_f)` with X-type vertex stars and Z-type plaquettes on one qubit per
/// edge. The code space (kernel, dimension 4) is built exactly as uniform
/// superpositions over star-translates of loop configurations; the distance
/// is the minimum Pauli weight acting non-scalar, which is realized by a
/// non-contractible loop of length `min(Lx, Ly)`.
pub fn toric_code_z2(lx: u32, ly: u32) -> Result<ToricCodeInstance> {
    let lattice = ToricLattice::layout(lx, ly)?;
    let n_edges = lattice.n_edges;
    if 1usize << n_edges > MAX_DENSE_DIM {
        return Err(Error::domain(format!(
            "{n_edges} edges need a dense operator of dimension 2^{n_edges}; cap is {MAX_DENSE_DIM}"
        )));
    }
    let dim = 1usize << n_edges;
    let star_bits = lattice.star_bits();
    let plaq_bits = lattice.plaquette_bits();

    // D = (V + F) I - sum_v A_v - sum_f B_f, accumulated entry-wise: each
    // A_v is the bit-flip permutation of its star, each B_f the parity sign
    // of its plaquette
    let n_stab = (star_bits.len() + plaq_bits.len()) as f64;
    let mut dmat = CMat::zeros(dim, dim);
    for x in 0..dim {
        dmat[(x, x)] = c(n_stab, 0.0);
    }
    for s in &star_bits {
        let mask = bits_to_index(s);
        for x in 0..dim {
            dmat[(x ^ mask, x)] -= c(1.0, 0.0);
        }
    }
    for f in &plaq_bits {
        let mask = bits_to_index(f);
        for x in 0..dim {
            let sign = if (x & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            dmat[(x, x)] -= c(sign, 0.0);
        }
    }
    let dirac = HermitianOperator::new(dmat)?;

    // exact kernel basis: plaquette-even configurations grouped into cosets
    // of the star span, one uniform superposition per coset
    let plaq_space = gf2_space(plaq_bits.clone());
    let even_basis = plaq_space.kernel(n_edges);
    let star_space = gf2_space(star_bits.clone());
    let mut cosets: std::collections::BTreeMap<Vec<u8>, Vec<usize>> =
        std::collections::BTreeMap::new();
    for x in gf2_span(&even_basis, n_edges) {
        let mut rep = x.clone();
        star_space.reduce(&mut rep);
        cosets.entry(rep).or_default().push(bits_to_index(&x));
    }
    let mut basis = CMat::zeros(dim, cosets.len());
    for (k, members) in cosets.values().enumerate() {
        let amp = c(1.0 / (members.len() as f64).sqrt(), 0.0);
        for &ix in members {
            basis[(ix, k)] = amp;
        }
    }
    let projection = CodeProjection::from_basis(basis)?;
    if projection.rank() != 4 {
        return Err(Error::numerical(format!(
            "toric code space has dimension {}, expected 4",
            projection.rank()
        )));
    }
    // the constructed space must be annihilated by D; apply each stabilizer
    // by its action instead of multiplying the dense operator
    let b = projection.basis();
    for k in 0..projection.rank() {
        let c0 = b.column(k);
        let mut y: Vec<f64> = (0..dim).map(|x| n_stab * c0[x].re).collect();
        for s in &star_bits {
            let mask = bits_to_index(s);
            for x in 0..dim {
                y[x] -= c0[x ^ mask].re;
            }
        }
        for f in &plaq_bits {
            let mask = bits_to_index(f);
            for x in 0..dim {
                let sign = if (x & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                y[x] -= sign * c0[x].re;
            }
        }
        if y.iter().map(|v| v.abs()).fold(0.0, f64::max) > 1e-12 {
            return Err(Error::numerical(
                "toric code basis is not in the Dirac kernel".to_string(),
            ));
        }
    }

    let group = AbelianGroup::SymplecticBitVectors(n_edges);
    let distance = code_distance_via_w(
        &projection,
        &group,
        &WeylRepresentation::QubitPauli,
        &WeightFunction::Pauli,
    )?;

    Ok(ToricCodeInstance { lattice, dirac, projection, distance })
}

/// Computational-basis index of a bit vector, qubit 0 as the leading bit.
fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| acc << 1 | b as usize)
}

/// Pauli string supported on the given edges, `Z` for primal loops and `X`
/// for dual ones.
pub fn loop_operator(lattice: &ToricLattice, edges: &[usize], letter: char) -> Result<CMat> {
    let mut s: Vec<char> = vec!['I'; lattice.n_edges];
    for &e in edges {
        if e >= lattice.n_edges {
            return Err(Error::Dimension {
                context: "loop edge index",
                expected: lattice.n_edges,
                got: e,
            });
        }
        s[e] = letter;
    }
    crate::crossed::pauli_string_matrix(&s.into_iter().collect::<String>())
}

// ---------------------------------------------------------------------------
// Formal reconstruction

/// A spectral triple built around a given projection: the Hilbert space is
/// the code space plus one block per level, and the Dirac operator is 0 on
/// the code and `n` times the identity on level `n`, so its kernel is the
/// code space exactly.
#[derive(Clone, Debug)]
pub struct ReconstructionTriple {
    /// Projection onto the leading block of the reconstructed space.
    pub projection: CodeProjection,
    pub dirac: HermitianOperator,
    /// `(level, block dimension)` for each level, starting at 1.
    pub tower: Vec<(usize, usize)>,
    /// Unitary from the original space onto the reconstructed one (code
    /// basis to the leading block, complement into the tower); present when
    /// the level dimensions exhaust the complement, so operators can be
    /// transported without losing their off-code action.
    pub rotation: Option<CMat>,
}

/// Truncate the reconstruction tower at `level_dims.len()` levels. The
/// compactness of the resolvent is vacuous at finite size and is not part of
/// the construction.
pub fn formal_reconstruction(
    p: &CodeProjection,
    level_dims: &[usize],
) -> Result<ReconstructionTriple> {
    if p.rank() == 0 {
        return Err(Error::domain("reconstruction needs a nonzero code space".to_string()));
    }
    if level_dims.is_empty() {
        return Err(Error::domain("reconstruction needs at least one level".to_string()));
    }
    if level_dims.contains(&0) {
        return Err(Error::domain("reconstruction level dimensions must be positive".to_string()));
    }
    let r = p.rank();
    let total = r + level_dims.iter().sum::<usize>();
    let mut diag = vec![0.0; total];
    let mut at = r;
    let mut tower = Vec::with_capacity(level_dims.len());
    for (i, &d) in level_dims.iter().enumerate() {
        let level = i + 1;
        for x in &mut diag[at..at + d] {
            *x = level as f64;
        }
        tower.push((level, d));
        at += d;
    }
    let dirac = HermitianOperator::from_real_diagonal(&diag);

    let mut basis = CMat::zeros(total, r);
    for k in 0..r {
        basis[(k, k)] = c(1.0, 0.0);
    }
    let projection = CodeProjection::from_basis(basis)?;

    let rotation = if total == p.dim() {
        let mut u = CMat::zeros(total, total);
        u.view_mut((0, 0), (total, r)).copy_from(p.basis());
        u.view_mut((0, r), (total, total - r))
            .copy_from(&p.complement_basis());
        Some(u.adjoint())
    } else {
        None
    };

    let check = spectral_projection(&dirac, 0.0, 0.0)?;
    debug_assert_eq!(check.rank(), r);

    Ok(ReconstructionTriple { projection, dirac, tower, rotation })
}

