//! Randomized cross-module properties, exercised through seeded generators
//! so every failure reproduces from the printed case.

use std::sync::OnceLock;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spectral_codes::channels::{entanglement_fidelity, noise_family, KrausChannel};
use spectral_codes::codes::{stabilizer_code, StabilizerCodeInstance};
use spectral_codes::crossed::{
    pauli_string_matrix, qubit_weyl, weyl, AbelianGroup, Cocycle, CrossedProductElement,
    GroupElement, WeightFunction,
};
use spectral_codes::metric::{
    diameter, kl_check, support_of, DiscreteMetricTriple, GroupMetric, SolverOptions,
};
use spectral_codes::operators::{
    c, dagger, identity, max_abs, operator_norm, partial_trace, random_density,
    random_ginibre, random_hermitian, random_unitary, CMat, CodeProjection, Factor,
};
use spectral_codes::quantization::{build_quantizer, toeplitz_matrix, SphereFunction};

fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Groups of size at most 16, small enough that the regular representation
/// and exhaustive scans stay cheap inside a property.
fn small_group() -> impl Strategy<Value = AbelianGroup> {
    prop_oneof![
        (1usize..=4).prop_map(AbelianGroup::BitVectors),
        (1usize..=2).prop_map(AbelianGroup::SymplecticBitVectors),
        prop_oneof![Just(2u32), Just(4u32)].prop_map(|m| AbelianGroup::torus(m).unwrap()),
    ]
}

fn element(group: &AbelianGroup, raw: usize) -> GroupElement {
    group.element_at(raw % group.size())
}

/// Coefficient vector with every entry well away from zero, so products of
/// monomials never cancel and supports stay maximal.
fn never_zero_function(group: &AbelianGroup, rng: &mut ChaCha8Rng) -> Vec<num_complex::Complex64> {
    use rand::Rng;
    (0..group.size())
        .map(|_| {
            let re: f64 = rng.random_range(0.25..1.0);
            let im: f64 = rng.random_range(-1.0..1.0);
            c(re, im)
        })
        .collect()
}

fn five_qubit() -> &'static StabilizerCodeInstance {
    static CODE: OnceLock<StabilizerCodeInstance> = OnceLock::new();
    CODE.get_or_init(|| {
        stabilizer_code(5, &["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cocycle_identity_holds(group in small_group(), a in any::<usize>(), b in any::<usize>(), w in any::<usize>()) {
        let (u, v, w) = (element(&group, a), element(&group, b), element(&group, w));
        for sigma in [Cocycle::trivial(group.clone()), Cocycle::standard(group.clone())] {
            let lhs = sigma.phase(&u, &v) * sigma.phase(&group.add(&u, &v), &w);
            let rhs = sigma.phase(&v, &w) * sigma.phase(&u, &group.add(&v, &w));
            prop_assert!((lhs - rhs).norm() <= 1e-12);
        }
    }

    #[test]
    fn weyl_adjoint_is_the_negated_weyl(group in small_group(), a in any::<usize>()) {
        let u = element(&group, a);
        let sigma = Cocycle::standard(group.clone());
        let w_u = weyl(&sigma, &u).unwrap().to_dense();
        let w_neg = weyl(&sigma, &group.neg(&u)).unwrap().to_dense();
        let phase = sigma.phase(&u, &group.neg(&u)).conj();
        prop_assert!(max_abs(&(dagger(&w_u) - w_neg * phase)) <= 1e-12);
    }

    #[test]
    fn qubit_weyls_commute_by_the_symplectic_form(n in 1usize..=3, a in any::<usize>(), b in any::<usize>()) {
        let group = AbelianGroup::SymplecticBitVectors(n);
        let (u, v) = (element(&group, a), element(&group, b));
        let wu = qubit_weyl(n, &u).unwrap().to_dense();
        let wv = qubit_weyl(n, &v).unwrap().to_dense();
        let sign = if group.symplectic_form(&u, &v).unwrap() == 0 { 1.0 } else { -1.0 };
        prop_assert!(max_abs(&(&wu * &wv - (&wv * &wu) * c(sign, 0.0))) <= 1e-12);
    }

    #[test]
    fn eigendecompositions_reconstruct_their_operator(n in 2usize..=8, seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let h = random_hermitian(n, &mut rng);
        let eigh = h.eigh();
        let scale = h.operator_norm().max(1.0);
        prop_assert!(operator_norm(&(eigh.reconstruct() - h.matrix())) <= 1e-10 * scale);
    }

    #[test]
    fn complementary_spectral_projections_sum_to_identity(n in 2usize..=8, seed in any::<u64>(), pick in any::<usize>()) {
        use spectral_codes::operators::spectral_projection;
        let mut rng = rng_from(seed);
        let h = random_hermitian(n, &mut rng);
        let values = h.eigh().values.clone();
        // split between two consecutive eigenvalues when a usable gap exists,
        // otherwise above the whole spectrum
        let mut cut = values[n - 1] + 1.0;
        let splits: Vec<f64> = values
            .windows(2)
            .filter(|w| w[1] - w[0] > 1e-6)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect();
        if !splits.is_empty() {
            cut = splits[pick % splits.len()];
        }
        let lo = spectral_projection(&h, values[0] - 1.0, cut).unwrap();
        let hi = spectral_projection(&h, cut, values[n - 1] + 1.0).unwrap();
        let scale = h.operator_norm().max(1.0);
        prop_assert!(max_abs(&(lo.matrix() + hi.matrix() - identity(n))) <= 1e-10);
        for p in [&lo, &hi] {
            let m = p.matrix();
            prop_assert!(max_abs(&(m * m - m)) <= 1e-10);
            prop_assert!(
                operator_norm(&(h.matrix() * m - m * h.matrix())) <= 1e-10 * scale
            );
        }
    }

    #[test]
    fn partial_traces_preserve_the_trace(da in 2usize..=4, db in 2usize..=4, seed in any::<u64>()) {
        use spectral_codes::operators::trace;
        let mut rng = rng_from(seed);
        let rho = random_density(da * db, &mut rng);
        for over in [Factor::First, Factor::Second] {
            let reduced = partial_trace(&rho, (da, db), over).unwrap();
            prop_assert!((trace(&reduced) - trace(&rho)).norm() <= 1e-12);
        }
    }

    #[test]
    fn projections_from_random_bases_are_projections(n in 2usize..=8, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = rng_from(seed);
        let r = rng.random_range(1..=n);
        let u = random_unitary(n, &mut rng);
        let basis = u.columns(0, r).into_owned();
        let p = CodeProjection::from_basis(basis).unwrap();
        let m = p.matrix();
        prop_assert_eq!(p.rank(), r);
        prop_assert!(max_abs(&(m * m - m)) <= 1e-10);
        prop_assert!(max_abs(&(m - &dagger(m))) <= 1e-12);
        let comp = p.complement_basis();
        if r < n {
            prop_assert!(max_abs(&(m * &comp)) <= 1e-10);
            prop_assert!(max_abs(&(dagger(&comp) * &comp - identity(n - r))) <= 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn representation_is_a_star_homomorphism(group in small_group(), ua in any::<usize>(), ub in any::<usize>(), seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let sigma = Cocycle::standard(group.clone());
        let a = CrossedProductElement::monomial(
            &sigma, &element(&group, ua), never_zero_function(&group, &mut rng),
        ).unwrap();
        let b = CrossedProductElement::monomial(
            &sigma, &element(&group, ub), never_zero_function(&group, &mut rng),
        ).unwrap();
        let (ra, rb) = (a.represent().unwrap(), b.represent().unwrap());
        let rab = a.mul(&b).unwrap().represent().unwrap();
        let scale = operator_norm(&ra).max(operator_norm(&rb)).max(1.0);
        prop_assert!(operator_norm(&(&ra * &rb - rab)) <= 1e-10 * scale);
        let radj = a.adjoint().represent().unwrap();
        prop_assert!(max_abs(&(radj - dagger(&ra))) <= 1e-12);
    }

    #[test]
    fn support_diameters_are_subadditive(group in small_group(), ua in any::<usize>(), ub in any::<usize>(), seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let sigma = Cocycle::standard(group.clone());
        let metric = GroupMetric::new(group.clone(), WeightFunction::standard(&group)).unwrap();
        let a = CrossedProductElement::monomial(
            &sigma, &element(&group, ua), never_zero_function(&group, &mut rng),
        ).unwrap();
        let b = CrossedProductElement::monomial(
            &sigma, &element(&group, ub), never_zero_function(&group, &mut rng),
        ).unwrap();
        let ab = a.mul(&b).unwrap();
        prop_assert!(!ab.is_zero());
        let lhs = diameter(&support_of(&ab).unwrap(), &metric);
        let rhs = diameter(&support_of(&a).unwrap(), &metric)
            + diameter(&support_of(&b).unwrap(), &metric);
        prop_assert!(lhs <= rhs + 1e-9, "diam {lhs} > {rhs}");
    }

    #[test]
    fn closed_distances_form_a_metric(n in 2usize..=5, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = rng_from(seed);
        let labels: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let mut weight = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let w: f64 = rng.random_range(0.1..10.0);
                weight[i][j] = w;
                weight[j][i] = w;
            }
        }
        let triple = DiscreteMetricTriple::new(labels, weight).unwrap();
        let d = triple.closed_distance_matrix();
        for i in 0..n {
            prop_assert_eq!(d[i][i], 0.0);
            for j in 0..n {
                prop_assert!((d[i][j] - d[j][i]).abs() <= 1e-12);
                if i != j {
                    prop_assert!(d[i][j] > 0.0);
                }
                for k in 0..n {
                    prop_assert!(d[i][j] <= d[i][k] + d[k][j] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn entanglement_fidelity_ignores_kraus_remixing(dim in 2usize..=4, seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let errors: Vec<CMat> = (0..2)
            .map(|_| random_ginibre(dim, &mut rng) * c(0.3, 0.0))
            .collect();
        let family = noise_family(errors).unwrap();
        let theta = 0.5 * family.max_theta().min(0.1);
        let channel = family.channel(theta).unwrap();
        let sigma = random_density(dim, &mut rng);
        let base = entanglement_fidelity(&sigma, &channel).unwrap();

        let k = channel.kraus().len();
        let mix = random_unitary(k, &mut rng);
        let remixed: Vec<CMat> = (0..k)
            .map(|i| {
                let mut acc = CMat::zeros(dim, dim);
                for (j, op) in channel.kraus().iter().enumerate() {
                    acc += op * mix[(i, j)];
                }
                acc
            })
            .collect();
        let remixed_channel = KrausChannel::new("remixed", remixed).unwrap();
        let other = entanglement_fidelity(&sigma, &remixed_channel).unwrap();
        prop_assert!((base - other).abs() <= 1e-10);
    }

    #[test]
    fn noise_channels_preserve_the_trace(dim in 2usize..=5, seed in any::<u64>()) {
        use spectral_codes::channels::apply_channel;
        use spectral_codes::operators::trace;
        let mut rng = rng_from(seed);
        let errors: Vec<CMat> = (0..2)
            .map(|_| random_ginibre(dim, &mut rng) * c(0.4, 0.0))
            .collect();
        let family = noise_family(errors).unwrap();
        let theta = 0.5 * family.max_theta().min(0.1);
        let channel = family.channel(theta).unwrap();
        prop_assert!(channel.tp_defect() <= 1e-10);
        let rho = random_density(dim, &mut rng);
        let out = apply_channel(&channel, &rho).unwrap();
        prop_assert!((trace(&out).re - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn toeplitz_matrices_stay_hermitian_and_bounded(p in 2usize..=10, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = rng_from(seed);
        let terms: Vec<(f64, [u32; 3])> = (0..3)
            .map(|_| {
                let coeff: f64 = rng.random_range(-1.0..1.0);
                let exps = [
                    rng.random_range(0..3u32),
                    rng.random_range(0..3u32),
                    rng.random_range(0..3u32),
                ];
                (coeff, exps)
            })
            .collect();
        let f = SphereFunction::Monomials(terms);
        let qz = build_quantizer(p, p + 8).unwrap();
        let t = toeplitz_matrix(&qz, &f);
        prop_assert!(max_abs(&(&t - dagger(&t))) <= 1e-10);
        prop_assert!(operator_norm(&t) <= f.sup_norm() + 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn general_distances_match_the_closed_form(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = rng_from(seed);
        let labels = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let mut weight = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            for j in (i + 1)..3 {
                let w: f64 = rng.random_range(0.2..5.0);
                weight[i][j] = w;
                weight[j][i] = w;
            }
        }
        let triple = DiscreteMetricTriple::new(labels, weight).unwrap();
        let closed = triple.connes_distance_closed("a", "b").unwrap();
        let spectral = triple.to_spectral_triple().unwrap();
        let general = spectral
            .connes_distance_general("a", "b", &SolverOptions::default())
            .unwrap();
        prop_assert!(
            (general.value - closed).abs() <= 1e-4,
            "general {} vs closed {}",
            general.value,
            closed
        );
    }

    #[test]
    fn weight_one_errors_satisfy_kl_on_the_five_qubit_code(a in 0usize..15, b in 0usize..15) {
        // error diameters are 1 and the distance is 3, so 2R < d applies
        let letters = ['X', 'Y', 'Z'];
        let pauli = |idx: usize| {
            let mut s = String::from("IIIII");
            s.replace_range(idx / 3..idx / 3 + 1, &letters[idx % 3].to_string());
            s
        };
        let code = five_qubit();
        let errors = vec![
            pauli_string_matrix(&pauli(a)).unwrap(),
            pauli_string_matrix(&pauli(b)).unwrap(),
        ];
        let report = kl_check(&code.projection, &errors, 1e-9).unwrap();
        prop_assert!(report.satisfied, "violation {:.3e}", report.worst_violation);
    }
}
