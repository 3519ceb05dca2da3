use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_codes::crossed::*;
use spectral_codes::operators::{
    c, commutator, dagger, identity, kernel_projection, operator_norm, CMat, HermitianOperator,
};

fn dense(cocycle: &Cocycle, u: &GroupElement) -> CMat {
    weyl(cocycle, u).unwrap().to_dense()
}

fn random_element_of(cocycle: &Cocycle, rng: &mut impl Rng) -> CrossedProductElement {
    let group = cocycle.group().clone();
    let size = group.size();
    let mut a = CrossedProductElement::zero(cocycle);
    for _ in 0..3 {
        let u = group.random_element(rng);
        let f: Vec<Complex64> = (0..size)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        a = a
            .add(&CrossedProductElement::monomial(cocycle, &u, f).unwrap())
            .unwrap();
    }
    a
}

#[test]
fn single_qubit_weyls_are_paulis() {
    let x = qubit_weyl(1, &vec![1, 0]).unwrap().to_dense();
    let z = qubit_weyl(1, &vec![0, 1]).unwrap().to_dense();
    let px = CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
    let pz = CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
    assert!(operator_norm(&(&x - px)) < 1e-15);
    assert!(operator_norm(&(&z - pz)) < 1e-15);
    // anticommutation
    assert!(operator_norm(&(&x * &z + &z * &x)) < 1e-15);
}

#[test]
fn weyl_of_zero_is_identity() {
    for group in [
        AbelianGroup::BitVectors(3),
        AbelianGroup::SymplecticBitVectors(2),
        AbelianGroup::torus(4).unwrap(),
    ] {
        let cocycle = Cocycle::standard(group.clone());
        let w = dense(&cocycle, &group.zero());
        assert!(operator_norm(&(&w - identity(group.size()))) < 1e-15);
    }
}

#[test]
fn product_relation_in_regular_representation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for group in [
        AbelianGroup::BitVectors(4),
        AbelianGroup::SymplecticBitVectors(2),
        AbelianGroup::torus(4).unwrap(),
    ] {
        let cocycle = Cocycle::standard(group.clone());
        for _ in 0..20 {
            let u = group.random_element(&mut rng);
            let v = group.random_element(&mut rng);
            let lhs = dense(&cocycle, &u) * dense(&cocycle, &v);
            let rhs = dense(&cocycle, &group.add(&u, &v)) * cocycle.phase(&u, &v);
            assert!(operator_norm(&(lhs - rhs)) < 1e-12);
        }
    }
}

#[test]
fn product_relation_in_qubit_representation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 3;
    let group = AbelianGroup::SymplecticBitVectors(n);
    let cocycle = Cocycle::standard(group.clone());
    for _ in 0..30 {
        let u = group.random_element(&mut rng);
        let v = group.random_element(&mut rng);
        let lhs = qubit_weyl(n, &u).unwrap().to_dense() * qubit_weyl(n, &v).unwrap().to_dense();
        let rhs = qubit_weyl(n, &group.add(&u, &v)).unwrap().to_dense() * cocycle.phase(&u, &v);
        assert!(operator_norm(&(lhs - rhs)) < 1e-12);
    }
}

#[test]
fn cocycle_identity_exhaustive_small_groups() {
    for group in [
        AbelianGroup::BitVectors(2),
        AbelianGroup::SymplecticBitVectors(2),
        AbelianGroup::torus(4).unwrap(),
    ] {
        let cocycle = Cocycle::standard(group.clone());
        let elements = group.elements();
        assert!(elements.len() <= 256);
        for u in &elements {
            // normalization
            assert_eq!(cocycle.phase(u, &group.zero()), c(1.0, 0.0));
            assert_eq!(cocycle.phase(&group.zero(), u), c(1.0, 0.0));
            for v in &elements {
                for w in &elements {
                    let lhs = cocycle.phase(u, v) * cocycle.phase(&group.add(u, v), w);
                    let rhs = cocycle.phase(v, w) * cocycle.phase(u, &group.add(v, w));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }
}

#[test]
fn cocycle_identity_random_large_group() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let group = AbelianGroup::SymplecticBitVectors(7);
    let cocycle = Cocycle::standard(group.clone());
    for _ in 0..10_000 {
        let u = group.random_element(&mut rng);
        let v = group.random_element(&mut rng);
        let w = group.random_element(&mut rng);
        let lhs = cocycle.phase(&u, &v) * cocycle.phase(&group.add(&u, &v), &w);
        let rhs = cocycle.phase(&v, &w) * cocycle.phase(&u, &group.add(&v, &w));
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn weyl_adjoint_relation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for group in [
        AbelianGroup::SymplecticBitVectors(2),
        AbelianGroup::torus(6).unwrap(),
    ] {
        let cocycle = Cocycle::standard(group.clone());
        for _ in 0..20 {
            let u = group.random_element(&mut rng);
            let lhs = dagger(&dense(&cocycle, &u));
            let rhs =
                dense(&cocycle, &group.neg(&u)) * cocycle.phase(&u, &group.neg(&u)).conj();
            assert!(operator_norm(&(lhs - rhs)) < 1e-12);
        }
    }
}

#[test]
fn represent_of_pure_function_is_diagonal() {
    let group = AbelianGroup::BitVectors(2);
    let cocycle = Cocycle::standard(group.clone());
    let f: Vec<Complex64> = (0..4).map(|i| c(i as f64, -(i as f64))).collect();
    let a = CrossedProductElement::from_function(&cocycle, f.clone()).unwrap();
    let m = a.represent().unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { f[i] } else { Complex64::default() };
            assert!((m[(i, j)] - want).norm() < 1e-15);
        }
    }
}

#[test]
fn represent_of_delta_monomial_hits_single_entry() {
    let group = AbelianGroup::SymplecticBitVectors(1);
    let cocycle = Cocycle::standard(group.clone());
    let z = vec![1, 1];
    let u = vec![0, 1];
    let a = CrossedProductElement::delta_monomial(&cocycle, &z, &u).unwrap();
    let m = a.represent().unwrap();
    let from = group.index_of(&group.sub(&z, &u));
    let sigma = cocycle.phase(&u, &group.sub(&z, &u));
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == group.index_of(&z) && j == from {
                sigma
            } else {
                Complex64::default()
            };
            assert!((m[(i, j)] - want).norm() < 1e-15);
        }
    }
}

#[test]
fn weyl_plus_adjoint_is_hermitian() {
    let group = AbelianGroup::torus(4).unwrap();
    let cocycle = Cocycle::standard(group.clone());
    let a = CrossedProductElement::weyl_monomial(&cocycle, &vec![1, 2]).unwrap();
    let sym = a.add(&a.adjoint()).unwrap();
    let m = sym.represent().unwrap();
    assert!(operator_norm(&(&m - dagger(&m))) < 1e-12);
    assert!(HermitianOperator::new(m).is_ok());
}

#[test]
fn represent_is_a_star_homomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for group in [
        AbelianGroup::BitVectors(3),
        AbelianGroup::SymplecticBitVectors(2),
        AbelianGroup::torus(4).unwrap(),
    ] {
        let cocycle = Cocycle::standard(group.clone());
        for _ in 0..200 {
            let a = random_element_of(&cocycle, &mut rng);
            let b = random_element_of(&cocycle, &mut rng);
            let ma = a.represent().unwrap();
            let mb = b.represent().unwrap();
            let prod = a.mul(&b).unwrap().represent().unwrap();
            assert!(operator_norm(&(&prod - &ma * &mb)) < 1e-10);
            let adj = a.adjoint().represent().unwrap();
            assert!(operator_norm(&(&adj - dagger(&ma))) < 1e-10);
            let sum = a.add(&b).unwrap().represent().unwrap();
            assert!(operator_norm(&(&sum - (&ma + &mb))) < 1e-10);
        }
    }
}

#[test]
fn symplectic_weyls_commute_up_to_pairing_sign() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 2;
    let group = AbelianGroup::SymplecticBitVectors(n);
    let cocycle = Cocycle::standard(group.clone());
    for _ in 0..30 {
        let u = group.random_element(&mut rng);
        let v = group.random_element(&mut rng);
        let sign = if group.symplectic_form(&u, &v).unwrap() == 0 {
            1.0
        } else {
            -1.0
        };
        for (wu, wv) in [
            (dense(&cocycle, &u), dense(&cocycle, &v)),
            (
                qubit_weyl(n, &u).unwrap().to_dense(),
                qubit_weyl(n, &v).unwrap().to_dense(),
            ),
        ] {
            let lhs = &wu * &wv;
            let rhs = (&wv * &wu) * c(sign, 0.0);
            assert!(operator_norm(&(lhs - rhs)) < 1e-12);
        }
    }
}

#[test]
fn w_set_of_trivial_code_is_everything_nonzero() {
    let group = AbelianGroup::SymplecticBitVectors(1);
    let p = spectral_codes::operators::CodeProjection::identity(2);
    let w = compute_w_set(&p, &group, &WeylRepresentation::QubitPauli).unwrap();
    assert_eq!(w.len(), 3);
    assert!(!w.contains(&group.zero()));
}

#[test]
fn w_set_of_classical_repetition_code() {
    let group = AbelianGroup::BitVectors(3);
    let cocycle = Cocycle::standard(group.clone());
    // indicator Dirac: 0 on codewords, 1 elsewhere
    let codewords = [vec![0, 0, 0], vec![1, 1, 1]];
    let diag: Vec<f64> = group
        .elements()
        .iter()
        .map(|x| if codewords.contains(x) { 0.0 } else { 1.0 })
        .collect();
    let d = HermitianOperator::from_real_diagonal(&diag);
    let p = kernel_projection(&d).unwrap();
    assert_eq!(p.rank(), 2);
    let rep = WeylRepresentation::Regular(cocycle);
    let w = compute_w_set(&p, &group, &rep).unwrap();
    assert_eq!(w, vec![vec![1, 1, 1]]);
    let dist = code_distance_via_w(&p, &group, &rep, &WeightFunction::Hamming).unwrap();
    assert_eq!(dist, 3.0);
}

#[test]
fn w_set_of_three_qubit_repetition_stabilizer() {
    let d = HermitianOperator::new(
        (identity(8) - pauli_string_matrix("ZZI").unwrap())
            + (identity(8) - pauli_string_matrix("IZZ").unwrap()),
    )
    .unwrap();
    let p = kernel_projection(&d).unwrap();
    assert_eq!(p.rank(), 2);
    let group = AbelianGroup::SymplecticBitVectors(3);
    let w = compute_w_set(&p, &group, &WeylRepresentation::QubitPauli).unwrap();
    // the commutant of the stabilizer span minus the span itself: 16 - 4
    assert_eq!(w.len(), 12);
    let stabs = [
        symplectic_from_pauli("ZZI").unwrap().1,
        symplectic_from_pauli("IZZ").unwrap().1,
    ];
    for u in &w {
        for s in &stabs {
            assert_eq!(group.symplectic_form(u, s).unwrap(), 0);
        }
    }
    let dist =
        code_distance_via_w(&p, &group, &WeylRepresentation::QubitPauli, &WeightFunction::Pauli)
            .unwrap();
    assert_eq!(dist, 1.0);
}

#[test]
fn empty_w_set_flags_infinite_distance() {
    // the one-codeword classical code has no nontrivial logical action
    let group = AbelianGroup::BitVectors(2);
    let cocycle = Cocycle::standard(group.clone());
    let diag: Vec<f64> = group
        .elements()
        .iter()
        .map(|x| if x == &group.zero() { 0.0 } else { 1.0 })
        .collect();
    let d = HermitianOperator::from_real_diagonal(&diag);
    let p = kernel_projection(&d).unwrap();
    assert_eq!(p.rank(), 1);
    let rep = WeylRepresentation::Regular(cocycle);
    assert!(compute_w_set(&p, &group, &rep).unwrap().is_empty());
    let dist = code_distance_via_w(&p, &group, &rep, &WeightFunction::Hamming).unwrap();
    assert!(dist.is_infinite());
}

#[test]
fn wrapped_manhattan_weight() {
    let group = AbelianGroup::torus(4).unwrap();
    let w = WeightFunction::WrappedManhattan;
    // (1, 3): representative of 3 in [-2, 2) is -1
    assert_eq!(w.weight(&group, &vec![1, 3]), 2.0);
    assert_eq!(w.weight(&group, &vec![2, 0]), 2.0);
    assert_eq!(w.weight(&group, &vec![0, 0]), 0.0);
    // symmetry wt(-v) = wt(v)
    for u in group.elements() {
        assert_eq!(w.weight(&group, &u), w.weight(&group, &group.neg(&u)));
    }
}

#[test]
fn pauli_string_round_trip_and_weight() {
    let (n, u) = symplectic_from_pauli("XZYIX").unwrap();
    assert_eq!(n, 5);
    assert_eq!(pauli_from_symplectic(n, &u), "XZYIX");
    assert_eq!(WeightFunction::Pauli.weight(&AbelianGroup::SymplecticBitVectors(n), &u), 4.0);
    assert!(symplectic_from_pauli("XQ").is_err());
}

#[test]
fn pauli_string_matrix_hermitian_with_y() {
    let y = pauli_string_matrix("Y").unwrap();
    let want = CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
    assert!(operator_norm(&(&y - want)) < 1e-15);
    let m = pauli_string_matrix("YZX").unwrap();
    assert!(operator_norm(&(&m - dagger(&m))) < 1e-15);
    assert!(operator_norm(&(&m * &m - identity(8))) < 1e-15);
}

#[test]
fn torus_validation() {
    assert!(AbelianGroup::torus(3).is_err());
    assert!(AbelianGroup::torus(0).is_err());
    let g = AbelianGroup::torus(6).unwrap();
    assert_eq!(g.size(), 36);
    assert!(g.validate(&vec![5, 0]).is_ok());
    assert!(g.validate(&vec![6, 0]).is_err());
    assert!(g.validate(&vec![1, 2, 3]).is_err());
}

#[test]
fn element_indexing_round_trip() {
    for group in [
        AbelianGroup::BitVectors(4),
        AbelianGroup::SymplecticBitVectors(2),
        AbelianGroup::torus(6).unwrap(),
    ] {
        for (i, u) in group.elements().iter().enumerate() {
            assert_eq!(group.index_of(u), i);
            assert_eq!(&group.element_at(i), u);
        }
    }
}

#[test]
fn commutator_of_weyls_matches_pairing() {
    // [Z1Z2, X1] on 3 qubits has norm 2 (they anticommute)
    let zz = pauli_string_matrix("ZZI").unwrap();
    let x1 = pauli_string_matrix("XII").unwrap();
    assert!((operator_norm(&commutator(&zz, &x1)) - 2.0).abs() < 1e-12);
}
