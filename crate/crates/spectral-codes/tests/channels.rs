use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_codes::channels::{
    apply_channel, conditional_expectation, conditional_expectation_channel, entanglement_fidelity,
    gap_commutator_bounds, leakage_probability, noise_family, petz_recovery, poor_decoder,
    poor_decoder_channel, residual_error_t, sweep_csv, threshold_estimate, threshold_sweep,
    verify_poor_decoder_expansion, Decoder, KrausChannel,
};
use spectral_codes::codes::{stabilizer_code, StabilizerCodeInstance};
use spectral_codes::crossed::pauli_string_matrix;
use spectral_codes::operators::{
    c, dagger, identity, kron, max_abs, operator_norm, random_density, random_ginibre,
    random_unitary, trace, CMat, CodeProjection, HermitianOperator,
};

fn repetition_instance() -> StabilizerCodeInstance {
    stabilizer_code(3, &["ZZI", "IZZ"]).unwrap()
}

fn code_state(p: &CodeProjection) -> CMat {
    p.matrix() / c(p.rank() as f64, 0.0)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                a * (b / a).powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

#[test]
fn identity_channel_preserves_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ch = KrausChannel::new("id", vec![identity(6)]).unwrap();
    assert!(ch.tp_defect() <= 1e-14);
    let rho = random_density(6, &mut rng);
    let out = apply_channel(&ch, &rho).unwrap();
    assert!(max_abs(&(&out - &rho)) <= 1e-12);
    assert!((entanglement_fidelity(&rho, &ch).unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn bit_flip_channel_flips_the_ground_state() {
    let x = pauli_string_matrix("X").unwrap();
    let ch = KrausChannel::new("flip", vec![x]).unwrap();
    let mut rho = CMat::zeros(2, 2);
    rho[(0, 0)] = c(1.0, 0.0);
    let out = apply_channel(&ch, &rho).unwrap();
    assert!((out[(1, 1)].re - 1.0).abs() <= 1e-15);
    assert!(out[(0, 0)].norm() <= 1e-15);
}

#[test]
fn non_trace_preserving_family_is_rejected() {
    let err = KrausChannel::new("bad", vec![identity(3) * c(0.9, 0.0)]).unwrap_err();
    assert!(err.is_numerical(), "{err}");
    assert!(err.to_string().contains("trace-preserving"), "{err}");
    // defect within certificate but above zero is accepted
    let almost = identity(3) * c(1.0 - 2e-12, 0.0);
    assert!(KrausChannel::new("ok", vec![almost]).is_ok());
}

#[test]
fn apply_channel_validates_the_input_state() {
    let ch = KrausChannel::new("id", vec![identity(2)]).unwrap();
    let mut bad = CMat::zeros(2, 2);
    bad[(0, 0)] = c(1.0, 0.0);
    bad[(0, 1)] = c(0.3, 0.0);
    assert!(apply_channel(&ch, &bad).is_err(), "non-Hermitian accepted");

    let double = identity(2);
    assert!(apply_channel(&ch, &double).is_err(), "trace 2 accepted");

    let mut neg = CMat::zeros(2, 2);
    neg[(0, 0)] = c(1.5, 0.0);
    neg[(1, 1)] = c(-0.5, 0.0);
    assert!(apply_channel(&ch, &neg).is_err(), "negative state accepted");

    let wrong = identity(3) * c(1.0 / 3.0, 0.0);
    assert!(apply_channel(&ch, &wrong).is_err(), "dimension mismatch accepted");
}

#[test]
fn single_bit_flip_leaks_exactly_theta() {
    let inst = repetition_instance();
    let sigma = code_state(&inst.projection);
    let family = noise_family(vec![pauli_string_matrix("XII").unwrap()]).unwrap();
    for theta in [1e-4, 0.05, 0.1] {
        let ch = family.channel(theta).unwrap();
        let leak = leakage_probability(&inst.projection, &ch, &sigma).unwrap();
        assert!((leak - theta).abs() <= 1e-12, "theta {theta}: leak {leak}");

        let out = apply_channel(&ch, &sigma).unwrap();
        let inside = trace(&(inst.projection.matrix() * &out)).re;
        assert!((1.0 - inside - theta).abs() <= 1e-12);
    }
}

#[test]
fn errors_commuting_with_the_code_do_not_leak() {
    let inst = repetition_instance();
    let sigma = code_state(&inst.projection);
    let family = noise_family(vec![pauli_string_matrix("ZII").unwrap()]).unwrap();
    let leak = leakage_probability(&inst.projection, &family.channel(0.3).unwrap(), &sigma).unwrap();
    assert!(leak <= 1e-12);
}

#[test]
fn leakage_slope_matches_the_linear_coefficient() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let inst = repetition_instance();
    let p = &inst.projection;
    let sigma = code_state(p);
    let f = {
        let g = random_ginibre(8, &mut rng);
        let n = operator_norm(&g);
        g / c(n, 0.0)
    };
    let predicted = {
        let comp = identity(8) - p.matrix();
        trace(&(&comp * &f * &sigma * dagger(&f))).re
    };
    let family = noise_family(vec![f]).unwrap();
    let theta = 1e-4;
    let leak = leakage_probability(p, &family.channel(theta).unwrap(), &sigma).unwrap();
    let slope = leak / theta;
    assert!(
        (slope - predicted).abs() <= 0.01 * predicted.abs(),
        "slope {slope} vs predicted {predicted}"
    );
}

#[test]
fn leakage_rejects_states_outside_the_code() {
    let inst = repetition_instance();
    let family = noise_family(vec![pauli_string_matrix("XII").unwrap()]).unwrap();
    let mut outside = CMat::zeros(8, 8);
    outside[(1, 1)] = c(1.0, 0.0);
    let err = leakage_probability(&inst.projection, &family.channel(0.1).unwrap(), &outside)
        .unwrap_err();
    assert!(err.to_string().contains("supported"), "{err}");
}

#[test]
fn poor_decoder_keeps_code_and_randomizes_leakage() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let inst = repetition_instance();
    let p = &inst.projection;
    let pm = p.matrix();

    // closed formula on a random input
    let x = random_ginibre(8, &mut rng);
    let out = poor_decoder(p, &x).unwrap();
    let leaked = trace(&x) - trace(&(pm * &x * pm));
    let expected = pm * &x * pm + pm * (leaked / c(2.0, 0.0));
    assert!(max_abs(&(&out - &expected)) <= 1e-12);
    assert!((trace(&out) - trace(&x)).norm() <= 1e-12, "trace not preserved");

    // inputs inside the code pass through untouched
    let inside = pm * &x * pm;
    let kept = poor_decoder(p, &inside).unwrap();
    assert!(max_abs(&(&kept - &inside)) <= 1e-12);

    // a state fully outside becomes the maximally mixed code state
    let mut outside = CMat::zeros(8, 8);
    outside[(1, 1)] = c(1.0, 0.0);
    let mixed = poor_decoder(p, &outside).unwrap();
    assert!(max_abs(&(&mixed - &(pm / c(2.0, 0.0)))) <= 1e-12);
}

#[test]
fn poor_decoder_channel_matches_the_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inst = repetition_instance();
    let ch = poor_decoder_channel(&inst.projection).unwrap();
    assert!(ch.tp_defect() <= 1e-12);
    assert_eq!(ch.kraus().len(), 1 + 2 * 6);
    let rho = random_density(8, &mut rng);
    let via_channel = apply_channel(&ch, &rho).unwrap();
    let via_formula = poor_decoder(&inst.projection, &rho).unwrap();
    assert!(max_abs(&(&via_channel - &via_formula)) <= 1e-12);
}

#[test]
fn conditional_expectation_on_tensor_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = random_ginibre(2, &mut rng);
    let b = random_ginibre(3, &mut rng);

    let lifted = kron(&a, &identity(3));
    let back = conditional_expectation(&lifted, 2, 3).unwrap();
    assert!(max_abs(&(&back - &a)) <= 1e-13);

    let lifted = kron(&identity(2), &b);
    let back = conditional_expectation(&lifted, 2, 3).unwrap();
    let expected = identity(2) * (trace(&b) / c(3.0, 0.0));
    assert!(max_abs(&(&back - &expected)) <= 1e-13);

    // unital and idempotent through the lift
    let x = random_ginibre(6, &mut rng);
    let once = conditional_expectation(&x, 2, 3).unwrap();
    let again = conditional_expectation(&kron(&once, &identity(3)), 2, 3).unwrap();
    assert!(max_abs(&(&again - &once)) <= 1e-13);

    assert!(conditional_expectation(&random_ginibre(7, &mut rng), 2, 3).is_err());
}

#[test]
fn conditional_expectation_channel_is_the_lifted_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ch = conditional_expectation_channel(2, 3).unwrap();
    assert!(ch.tp_defect() <= 1e-12);
    let rho = random_density(6, &mut rng);
    let out = apply_channel(&ch, &rho).unwrap();
    let expected = kron(&conditional_expectation(&rho, 2, 3).unwrap(), &identity(3));
    assert!(max_abs(&(&out - &expected)) <= 1e-12);

    let mixed = identity(6) * c(1.0 / 6.0, 0.0);
    let fixed = apply_channel(&ch, &mixed).unwrap();
    assert!(max_abs(&(&fixed - &mixed)) <= 1e-13);
}

#[test]
fn entanglement_fidelity_closed_forms() {
    let sigma = identity(2) * c(0.5, 0.0);
    let theta: f64 = 0.3;
    let flip = KrausChannel::new(
        "partial-flip",
        vec![
            identity(2) * c((1.0 - theta).sqrt(), 0.0),
            pauli_string_matrix("X").unwrap() * c(theta.sqrt(), 0.0),
        ],
    )
    .unwrap();
    let fe = entanglement_fidelity(&sigma, &flip).unwrap();
    assert!((fe - (1.0 - theta)).abs() <= 1e-12);

    let inst = repetition_instance();
    let sigma3 = code_state(&inst.projection);
    let pure = KrausChannel::new("x1", vec![pauli_string_matrix("XII").unwrap()]).unwrap();
    assert!(entanglement_fidelity(&sigma3, &pure).unwrap() <= 1e-12);
}

#[test]
fn entanglement_fidelity_is_remix_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let inst = repetition_instance();
    let sigma = code_state(&inst.projection);
    let family = noise_family(vec![
        pauli_string_matrix("XII").unwrap(),
        pauli_string_matrix("IXI").unwrap(),
        pauli_string_matrix("IIX").unwrap(),
    ])
    .unwrap();
    let ch = family.channel(0.1).unwrap();
    let base = entanglement_fidelity(&sigma, &ch).unwrap();
    for _ in 0..20 {
        let u = random_unitary(4, &mut rng);
        let remixed: Vec<CMat> = (0..4)
            .map(|i| {
                let mut k = CMat::zeros(8, 8);
                for (j, op) in ch.kraus().iter().enumerate() {
                    k += op * u[(i, j)];
                }
                k
            })
            .collect();
        let ch2 = KrausChannel::new("remixed", remixed).unwrap();
        let fe = entanglement_fidelity(&sigma, &ch2).unwrap();
        assert!((fe - base).abs() <= 1e-10, "remix moved Fe by {}", fe - base);
    }
}

#[test]
fn petz_recovers_correctable_noise_exactly() {
    let inst = repetition_instance();
    let sigma = code_state(&inst.projection);
    let family = noise_family(vec![
        pauli_string_matrix("XII").unwrap(),
        pauli_string_matrix("IXI").unwrap(),
        pauli_string_matrix("IIX").unwrap(),
    ])
    .unwrap();
    assert!((family.max_theta() - 1.0 / 3.0).abs() <= 1e-15);
    for theta in [0.01, 0.05, 0.1] {
        let ch = family.channel(theta).unwrap();
        let rec = petz_recovery(&sigma, &ch).unwrap();
        assert_eq!(rec.support_rank(), Some(8));
        assert!(rec.tp_defect() <= 1e-10);
        let fe = entanglement_fidelity(&sigma, &rec.compose(&ch).unwrap()).unwrap();
        assert!((fe - 1.0).abs() <= 1e-8, "theta {theta}: Fe {fe}");
    }
}

#[test]
fn petz_of_the_identity_compresses_to_the_code() {
    let inst = repetition_instance();
    let p = &inst.projection;
    let sigma = code_state(p);
    let ch = KrausChannel::new("id", vec![identity(8)]).unwrap();
    let rec = petz_recovery(&sigma, &ch).unwrap();
    assert_eq!(rec.support_rank(), Some(2));
    // sigma factors cancel: the single Kraus operator is the code projection
    assert!(max_abs(&(&rec.kraus()[0] - p.matrix())) <= 1e-10);

    let b = p.basis();
    let rho_code = b.column(0) * b.column(0).adjoint();
    let out = apply_channel(&rec, &rho_code).unwrap();
    assert!(max_abs(&(&out - &rho_code)) <= 1e-10);
}

#[test]
fn petz_of_a_support_preserving_unitary_is_its_compressed_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let inst = repetition_instance();
    let p = &inst.projection;
    let sigma = code_state(p);
    let b = p.basis().clone_owned();
    let comp = p.complement_basis();
    let v1 = random_unitary(2, &mut rng);
    let v2 = random_unitary(6, &mut rng);
    let u = &b * v1 * b.adjoint() + &comp * v2 * comp.adjoint();
    let ch = KrausChannel::new("block-unitary", vec![u.clone()]).unwrap();

    let rec = petz_recovery(&sigma, &ch).unwrap();
    assert_eq!(rec.support_rank(), Some(2));
    let expected = p.matrix() * dagger(&u) * p.matrix();
    assert!(max_abs(&(&rec.kraus()[0] - &expected)) <= 1e-10);
}

#[test]
fn noise_family_scalar_completion() {
    let family = noise_family(vec![
        pauli_string_matrix("XII").unwrap(),
        pauli_string_matrix("IXI").unwrap(),
        pauli_string_matrix("IIX").unwrap(),
    ])
    .unwrap();
    let ch = family.channel(0.1).unwrap();
    assert!(ch.tp_defect() <= 1e-10);
    let expected = identity(8) * c(0.7f64.sqrt(), 0.0);
    assert!(max_abs(&(&ch.kraus()[0] - &expected)) <= 1e-15);
    assert!(family.channel(0.4).is_err());
    assert!(family.channel(-0.1).is_err());
}

#[test]
fn noise_family_general_completion() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let errors: Vec<CMat> = (0..2)
        .map(|_| {
            let g = random_ginibre(4, &mut rng);
            let n = operator_norm(&g);
            g / c(n, 0.0)
        })
        .collect();
    let mut overlap = CMat::zeros(4, 4);
    for f in &errors {
        overlap += dagger(f) * f;
    }
    let family = noise_family(errors).unwrap();
    let theta = 0.01;
    let ch = family.channel(theta).unwrap();
    assert!(ch.tp_defect() <= 1e-10);
    // the completing operator squares to I - theta sum F^dag F
    let e0 = &ch.kraus()[0];
    let defect = max_abs(&(dagger(e0) * e0 + &overlap * c(theta, 0.0) - identity(4)));
    assert!(defect <= 1e-12);

    let top = HermitianOperator::new(overlap).unwrap().eigh().values.last().copied().unwrap();
    assert!((family.max_theta() - 1.0 / top).abs() <= 1e-12);
    assert!(family.channel(family.max_theta() * 1.001).is_err());
}

#[test]
fn residual_error_vanishes_at_zero_noise() {
    let inst = repetition_instance();
    let sigma = code_state(&inst.projection);
    let family = noise_family(vec![pauli_string_matrix("XII").unwrap()]).unwrap();
    for decoder in [Decoder::Petz, Decoder::Poor] {
        let t = residual_error_t(&sigma, &inst.projection, &family, 0.0, &decoder).unwrap();
        assert!(t.abs() <= 1e-10, "{decoder:?}: T(0) = {t}");
    }
}

#[test]
fn petz_then_expectation_needs_a_matching_factorization() {
    let inst = repetition_instance();
    let sigma = code_state(&inst.projection);
    let family = noise_family(vec![pauli_string_matrix("XII").unwrap()]).unwrap();
    let t = residual_error_t(
        &sigma,
        &inst.projection,
        &family,
        0.05,
        &Decoder::PetzThenExpectation {
            low_dim: 2,
            high_dim: 4,
        },
    )
    .unwrap();
    assert!((0.0..=1.0).contains(&t));

    let err = residual_error_t(
        &sigma,
        &inst.projection,
        &family,
        0.05,
        &Decoder::PetzThenExpectation {
            low_dim: 3,
            high_dim: 3,
        },
    )
    .unwrap_err();
    assert!(err.to_string().contains("factorization"), "{err}");
}

#[test]
fn bit_flip_expansion_sits_at_the_floating_floor() {
    let inst = repetition_instance();
    let family = noise_family(vec![pauli_string_matrix("XII").unwrap()]).unwrap();
    let thetas = geomspace(1e-4, 1e-2, 7);
    let fit = verify_poor_decoder_expansion(&inst.projection, &family, &thetas).unwrap();
    assert!(fit.at_floor, "remainders {:?}", fit.remainder);
    assert!(fit.slope.is_infinite());
    for (i, &t) in thetas.iter().enumerate() {
        assert!(fit.remainder[i] <= 1e-13);
        // Var term vanishes and the leak is exactly theta, so T~ = (3/4) theta
        assert!((fit.residual[i] - 0.75 * t).abs() <= 1e-12);
        assert!((fit.expansion[i] - 0.75 * t).abs() <= 1e-12);
    }
}

#[test]
fn random_code_expansion_remainder_is_second_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let thetas = geomspace(1e-4, 1e-2, 7);
    for trial in 0..3 {
        let u = random_unitary(8, &mut rng);
        let p = CodeProjection::from_basis(u.columns(0, 2).into_owned()).unwrap();
        let errors: Vec<CMat> = (0..3)
            .map(|_| {
                let g = random_ginibre(8, &mut rng);
                let n = operator_norm(&g);
                g / c(n, 0.0)
            })
            .collect();
        let family = noise_family(errors).unwrap();
        let fit = verify_poor_decoder_expansion(&p, &family, &thetas).unwrap();
        assert!(!fit.at_floor, "trial {trial} unexpectedly at floor");
        assert!(fit.slope >= 1.9, "trial {trial}: slope {}", fit.slope);
    }
}

#[test]
fn expansion_grid_is_validated() {
    let inst = repetition_instance();
    let family = noise_family(vec![pauli_string_matrix("XII").unwrap()]).unwrap();
    assert!(verify_poor_decoder_expansion(&inst.projection, &family, &[1e-3]).is_err());
    assert!(verify_poor_decoder_expansion(&inst.projection, &family, &[1e-3, 2e-2]).is_err());
    assert!(verify_poor_decoder_expansion(&inst.projection, &family, &[0.0, 1e-3]).is_err());
}

#[test]
fn threshold_fit_recovers_an_exact_quadratic() {
    let thetas = linspace(0.005, 0.1, 20);
    let samples: Vec<f64> = thetas.iter().map(|t| 0.5 * t + 2.0 * t * t).collect();
    let report = threshold_estimate(&thetas, &samples, 0.2, 30).unwrap();
    assert!((report.k - 0.5).abs() <= 1e-9, "k = {}", report.k);
    assert!((report.gamma - 2.0).abs() <= 1e-9, "gamma = {}", report.gamma);
    assert!((report.theta_th - 0.25).abs() <= 1e-9);
    assert!(report.max_residual <= 1e-12);
    assert!(!report.clipped);

    assert_eq!(report.iteration.len(), 31);
    assert!((report.iteration[1] - 0.18).abs() <= 1e-12);
    assert!((report.iteration[5] - 0.06473884400808635).abs() <= 1e-9);
    assert!(report.monotone_decreasing);
    let last = *report.iteration.last().unwrap();
    assert!(last > 0.0 && last <= 1e-8, "iteration ended at {last}");
}

#[test]
fn threshold_fit_of_the_identity_map_stalls() {
    let thetas = linspace(0.005, 0.1, 20);
    let report = threshold_estimate(&thetas, &thetas.clone(), 0.05, 10).unwrap();
    assert!((report.k - 1.0).abs() <= 1e-12);
    assert!(report.gamma.abs() <= 1e-12);
    assert_eq!(report.theta_th, 0.0);
    assert!(!report.monotone_decreasing);
    assert!((report.iteration.last().unwrap() - 0.05).abs() <= 1e-12);
}

#[test]
fn threshold_fit_clips_negative_coefficients() {
    let thetas = linspace(0.005, 0.1, 20);
    // a slightly negative linear part, as produced by fitting noise around
    // a quadratic law; the constrained fit clips k to 0 and refits gamma
    let samples: Vec<f64> = thetas.iter().map(|t| -1e-5 * t + 2.0 * t * t).collect();
    let report = threshold_estimate(&thetas, &samples, 0.05, 10).unwrap();
    assert!(report.clipped);
    assert_eq!(report.k, 0.0);
    assert!(report.gamma > 1.9 && report.gamma < 2.1, "gamma = {}", report.gamma);
    assert!((report.theta_th - 1.0 / report.gamma).abs() <= 1e-12);
}

#[test]
fn threshold_fit_validates_its_inputs() {
    assert!(threshold_estimate(&[0.01, 0.02, 0.03], &[0.0; 3], 0.1, 5).is_err());
    assert!(threshold_estimate(&[0.01, 0.02, 0.03, 0.2], &[0.0; 4], 0.1, 5).is_err());
    assert!(threshold_estimate(&[0.01, 0.02, 0.03, 0.04], &[0.0; 3], 0.1, 5).is_err());
    assert!(threshold_estimate(&[0.01; 4], &[0.0; 4], 0.1, 5).is_err());
    assert!(threshold_estimate(&[0.01, 0.02, 0.03, 0.04], &[0.0; 4], -1.0, 5).is_err());
}

#[test]
fn petz_pipeline_has_vanishing_linear_term() {
    let inst = repetition_instance();
    let sigma = code_state(&inst.projection);
    let family = noise_family(vec![
        pauli_string_matrix("XII").unwrap(),
        pauli_string_matrix("IXI").unwrap(),
        pauli_string_matrix("IIX").unwrap(),
    ])
    .unwrap();
    let thetas = linspace(0.002, 0.02, 10);
    let samples: Vec<f64> = thetas
        .iter()
        .map(|&t| residual_error_t(&sigma, &inst.projection, &family, t, &Decoder::Petz).unwrap())
        .collect();
    // exact recovery: every sample is at machine precision
    assert!(samples.iter().all(|s| s.abs() <= 1e-10), "{samples:?}");
    let report = threshold_estimate(&thetas, &samples, 0.05, 10).unwrap();
    assert!(report.k.abs() <= 1e-3, "k = {}", report.k);
    assert!(report.theta_th > 0.1);
}

#[test]
fn gap_commutator_bounds_on_the_repetition_code() {
    let inst = repetition_instance();
    let errors = vec![
        pauli_string_matrix("XII").unwrap(),
        pauli_string_matrix("ZII").unwrap(),
    ];
    let report = gap_commutator_bounds(&inst.projection, &inst.dirac, &errors).unwrap();
    assert!((report.gap - 2.0).abs() <= 1e-9);

    let x1 = &report.bounds[0];
    assert!((x1.leakage_norm - 1.0).abs() <= 1e-9);
    assert!((x1.projector_commutator_norm - 1.0).abs() <= 1e-9);
    assert!((x1.dirac_commutator_norm - 2.0).abs() <= 1e-9);
    assert!((x1.c_emp - 1.0).abs() <= 1e-9);
    assert!(x1.chain_holds);

    let z1 = &report.bounds[1];
    assert!(z1.leakage_norm <= 1e-12);
    assert!(z1.projector_commutator_norm <= 1e-12);
    assert!(z1.dirac_commutator_norm <= 1e-12);
    assert_eq!(z1.c_emp, 0.0);
    assert!(z1.chain_holds);
}

#[test]
fn gap_commutator_bounds_random_trials() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let v = random_unitary(6, &mut rng);
        let mut diag = CMat::zeros(6, 6);
        for i in 2..6 {
            diag[(i, i)] = c(0.5 + rand::Rng::random::<f64>(&mut rng), 0.0);
        }
        let d = HermitianOperator::new(&v * diag * v.adjoint()).unwrap();
        let p = CodeProjection::from_basis(v.columns(0, 2).into_owned()).unwrap();
        let e = random_ginibre(6, &mut rng);
        let report = gap_commutator_bounds(&p, &d, &[e]).unwrap();
        let b = &report.bounds[0];
        assert!(b.chain_holds, "chain violated: {b:?}");
        assert!(b.c_emp.is_finite() && b.c_emp >= 0.0);
        assert!(report.gap > 0.0);
    }
}

#[test]
fn gap_commutator_bounds_rejections() {
    let flat = HermitianOperator::from_real_diagonal(&[0.0, 0.0]);
    let p = CodeProjection::identity(2);
    let err = gap_commutator_bounds(&p, &flat, &[identity(2)]).unwrap_err();
    assert!(err.to_string().contains("gap"), "{err}");

    let inst = repetition_instance();
    let wrong = CodeProjection::identity(8);
    let err = gap_commutator_bounds(&wrong, &inst.dirac, &[identity(8)]).unwrap_err();
    assert!(err.to_string().contains("kernel projection"), "{err}");
}

#[test]
fn sweep_rows_and_csv_are_consistent() {
    let inst = repetition_instance();
    let sigma = code_state(&inst.projection);
    let family = noise_family(vec![pauli_string_matrix("XII").unwrap()]).unwrap();
    let thetas = [0.001, 0.002, 0.004];
    let rows =
        threshold_sweep(&sigma, &inst.projection, &family, &thetas, &Decoder::Poor).unwrap();
    assert_eq!(rows.len(), 3);
    for (row, &theta) in rows.iter().zip(&thetas) {
        assert_eq!(row.theta, theta);
        let direct =
            residual_error_t(&sigma, &inst.projection, &family, theta, &Decoder::Poor).unwrap();
        assert!((row.t - direct).abs() <= 1e-13);
        assert!((row.p_leak - theta).abs() <= 1e-12);
        assert!((row.fe - (1.0 - row.t)).abs() <= 1e-15);
        assert!((row.t_expansion - 0.75 * theta).abs() <= 1e-12);
    }

    let csv = sweep_csv(&rows);
    let again = sweep_csv(
        &threshold_sweep(&sigma, &inst.projection, &family, &thetas, &Decoder::Poor).unwrap(),
    );
    assert_eq!(csv, again, "identical sweeps must serialize identically");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("theta,T,T_expansion,P_leak,Fe"));
    for (line, row) in lines.zip(&rows) {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[0], row.theta, "formatting must round-trip exactly");
        assert_eq!(fields[1], row.t);
    }
}
