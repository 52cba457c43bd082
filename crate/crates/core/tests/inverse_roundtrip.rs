mod common;

use common::{c, ml_oracle, rng};
use fracorder::forward::{observe, BandLimitedData, DataPreset, DerivativeKind, ObservationRecord, VectorOrder};
use fracorder::inverse::{
    build_k_matrix, recover_order, recover_vector_order, reduce_targets, suggest_observation_time, verify_monotonicity,
    Tolerances,
};
use fracorder::symbol::{diagonalize, FrequencyBox, MatrixSymbol, Polynomial, SymbolKind};
use fracorder::Error;
use num_complex::Complex64;
use rand::Rng;

const BETA0: f64 = 0.1;

fn grid() -> FrequencyBox {
    FrequencyBox::cube(1, -4.0, 4.0, 81).unwrap()
}

fn pair_data(center: f64, a1: f64, a2: f64) -> (MatrixSymbol, BandLimitedData) {
    let sym = MatrixSymbol::coupled_pair(grid()).unwrap();
    // unit width so the value at the center is exactly the amplitude
    let preset = DataPreset::Gaussian { center: vec![center], width: 1.0, amplitudes: vec![c(a1, 0.0), c(a2, 0.0)] };
    (sym, BandLimitedData::from_preset(grid(), preset).unwrap())
}

fn lambdas_at(sym: &MatrixSymbol, xi: f64) -> Vec<Complex64> {
    diagonalize(sym, &[xi]).unwrap().eigenvalues
}

fn round_trip(kind: DerivativeKind, betas: [f64; 2], xi0: f64, extra: f64) -> (f64, [f64; 2]) {
    let (sym, data) = pair_data(2.0, 1.0, 2.0);
    let t0 = suggest_observation_time(kind, BETA0, &lambdas_at(&sym, xi0)).unwrap().t0 + extra;
    let order = VectorOrder::new(betas.to_vec(), BETA0).unwrap();
    let rec = observe(&sym, &data, &order, t0, &[xi0], kind).unwrap();
    let out = recover_vector_order(&rec, &sym, &data, BETA0, Tolerances::default()).unwrap();
    for comp in &out.components {
        assert!(comp.complex_residual <= 1e-7, "{comp:?}");
    }
    (t0, [out.order.betas()[0], out.order.betas()[1]])
}

fn scalar_symbol(lambda: f64) -> (MatrixSymbol, BandLimitedData) {
    let dom = FrequencyBox::cube(1, -1.0, 1.0, 3).unwrap();
    let sym = MatrixSymbol::new(1, dom.clone(), SymbolKind::Polynomial { entries: vec![vec![Polynomial::constant(1, lambda)]] })
        .unwrap();
    (sym, BandLimitedData::tabulated(dom, 1, vec![c(1.0, 0.0); 3]).unwrap())
}

fn scalar_record(t0: f64, kind: DerivativeKind, b: Complex64) -> ObservationRecord {
    ObservationRecord { t0, xi0: vec![0.0], kind, d: vec![b], note: String::new() }
}

#[test]
fn manufactured_caputo_target() {
    let b = ml_oracle(0.7, 1.0, c(-2.0 * 4f64.powf(0.7), 0.0));
    let (sym, data) = scalar_symbol(-2.0);
    let out = recover_vector_order(&scalar_record(4.0, DerivativeKind::Caputo, b), &sym, &data, 0.3, Tolerances::default())
        .unwrap();
    assert!((out.order.betas()[0] - 0.7).abs() <= 1e-8);
}

#[test]
fn manufactured_rl_target() {
    let b = ml_oracle(0.55, 0.55, c(-3.0 * 8f64.powf(0.55), 0.0)) * 8f64.powf(-0.45);
    let (sym, data) = scalar_symbol(-3.0);
    let kind = DerivativeKind::RiemannLiouville;
    // t₀ = 8 is below the guaranteed time; the certificate holds on [0.5, 1]
    let out = recover_vector_order(&scalar_record(8.0, kind, b), &sym, &data, 0.5, Tolerances::default()).unwrap();
    assert!((out.order.betas()[0] - 0.55).abs() <= 1e-8);
}

#[test]
fn unit_order_is_recovered_at_the_endpoint() {
    let b = c((-2.0f64 * 4.0).exp(), 0.0);
    let (sym, data) = scalar_symbol(-2.0);
    let out = recover_vector_order(&scalar_record(4.0, DerivativeKind::Caputo, b), &sym, &data, 0.3, Tolerances::default())
        .unwrap();
    assert_eq!(out.order.betas()[0], 1.0);
    assert!(out.components[0].at_right_endpoint);
}

#[test]
fn caputo_round_trip() {
    let (_, got) = round_trip(DerivativeKind::Caputo, [0.4, 0.85], 2.0, 0.0);
    assert!((got[0] - 0.4).abs() <= 1e-6 && (got[1] - 0.85).abs() <= 1e-6, "{got:?}");
}

#[test]
fn rl_round_trip() {
    let (_, got) = round_trip(DerivativeKind::RiemannLiouville, [0.4, 0.85], 2.0, 0.0);
    assert!((got[0] - 0.4).abs() <= 1e-6 && (got[1] - 0.85).abs() <= 1e-6, "{got:?}");
}

#[test]
fn noisy_observation_still_recovers() {
    let (sym, data) = pair_data(2.0, 1.0, 2.0);
    let kind = DerivativeKind::Caputo;
    let t0 = suggest_observation_time(kind, BETA0, &lambdas_at(&sym, 2.0)).unwrap().t0;
    let order = VectorOrder::new(vec![0.4, 0.85], BETA0).unwrap();
    let mut rec = observe(&sym, &data, &order, t0, &[2.0], kind).unwrap();
    let mut r = rng(21);
    for v in rec.d.iter_mut() {
        *v *= 1.0 + 1e-10 * r.gen_range(-1.0..1.0);
    }
    let out = recover_vector_order(&rec, &sym, &data, BETA0, Tolerances::default()).unwrap();
    assert!((out.order.betas()[0] - 0.4).abs() <= 1e-6);
    assert!((out.order.betas()[1] - 0.85).abs() <= 1e-6);
}

#[test]
fn two_observations_agree() {
    let mut r = rng(8);
    for _ in 0..2 {
        let betas = [r.gen_range(0.2..1.0), r.gen_range(0.2..1.0)];
        let kind = DerivativeKind::Caputo;
        let (sym, data) = pair_data(2.0, 1.0, 2.0);
        let t0 = suggest_observation_time(kind, BETA0, &lambdas_at(&sym, 2.0)).unwrap().t0;
        let order = VectorOrder::new(betas.to_vec(), BETA0).unwrap();
        let first = observe(&sym, &data, &order, t0, &[2.0], kind).unwrap();
        let second = observe(&sym, &data, &order, t0 + 3.0, &[3.0], kind).unwrap();
        let a = recover_vector_order(&first, &sym, &data, BETA0, Tolerances::default()).unwrap();
        let b = recover_vector_order(&second, &sym, &data, BETA0, Tolerances::default()).unwrap();
        for l in 0..2 {
            assert!((a.order.betas()[l] - b.order.betas()[l]).abs() <= 2e-6, "{betas:?}");
        }
    }
}

#[test]
fn determinant_of_the_coefficient_matrix() {
    let sym = MatrixSymbol::coupled_pair(grid()).unwrap();
    let diag = diagonalize(&sym, &[2.0]).unwrap();
    for (p1, p2) in [(1.0, 2.0), (3.0, -0.5), (0.2, 0.0)] {
        let k = build_k_matrix(&diag, &[c(p1, 0.0), c(p2, 0.0)]).unwrap();
        assert!((k.det - c(0.5 * (p1 * p1 - p2 * p2), 0.0)).norm() < 1e-14);
        assert!(k.well_posed);
    }
}

#[test]
fn equal_moduli_make_the_coefficients_singular() {
    let (sym, data) = pair_data(2.0, 1.0, 1.0);
    let order = VectorOrder::new(vec![0.5, 0.5], BETA0).unwrap();
    let rec = observe(&sym, &data, &order, 3.0, &[2.0], DerivativeKind::Caputo).unwrap();
    let err = recover_vector_order(&rec, &sym, &data, BETA0, Tolerances::default()).unwrap_err();
    assert!(matches!(err, Error::SingularK { .. }), "{err:?}");
    let diag = diagonalize(&sym, &[2.0]).unwrap();
    assert!(matches!(build_k_matrix(&diag, &[c(1.0, 0.0), c(-1.0, 0.0)]), Err(Error::SingularK { .. })));
}

#[test]
fn unstable_mode_is_rejected() {
    // at ξ = 0.5 the first eigenvalue is 1/4 > 0
    let (sym, data) = pair_data(0.5, 1.0, 2.0);
    let order = VectorOrder::new(vec![0.5, 0.5], BETA0).unwrap();
    let rec = observe(&sym, &data, &order, 3.0, &[0.5], DerivativeKind::Caputo).unwrap();
    let err = recover_vector_order(&rec, &sym, &data, BETA0, Tolerances::default()).unwrap_err();
    assert!(matches!(err, Error::SpectralConditionViolation { index: 0, .. }), "{err:?}");
}

#[test]
fn targets_reproduce_the_forward_values() {
    let (sym, data) = pair_data(2.0, 1.0, 2.0);
    let kind = DerivativeKind::Caputo;
    let order = VectorOrder::new(vec![0.3, 0.6], BETA0).unwrap();
    let t0 = 5.0;
    let rec = observe(&sym, &data, &order, t0, &[2.0], kind).unwrap();
    let diag = diagonalize(&sym, &[2.0]).unwrap();
    let k = build_k_matrix(&diag, &data.at(&[2.0]).unwrap()).unwrap();
    let targets = reduce_targets(&k, &rec.d, &diag, t0, kind, BETA0).unwrap();
    for (l, t) in targets.iter().enumerate() {
        let beta = order.betas()[l];
        let want = ml_oracle(beta, 1.0, t.lambda * t0.powf(beta));
        assert!((t.b - want).norm() <= 1e-12 * (1.0 + want.norm()), "{} vs {want}", t.b);
        let rec = recover_order(t, t0, BETA0).unwrap();
        assert!((rec.beta - beta).abs() <= 1e-8);
    }
}

#[test]
fn out_of_range_target_is_reported() {
    let (sym, data) = pair_data(2.0, 1.0, 2.0);
    let kind = DerivativeKind::Caputo;
    let order = VectorOrder::new(vec![0.3, 0.6], BETA0).unwrap();
    let mut rec = observe(&sym, &data, &order, 5.0, &[2.0], kind).unwrap();
    // a value above R(β₀) in both components: d = K b with b = (0.99, 0.99)
    let diag = diagonalize(&sym, &[2.0]).unwrap();
    let k = build_k_matrix(&diag, &data.at(&[2.0]).unwrap()).unwrap();
    for j in 0..2 {
        rec.d[j] = (k.entries[(j, 0)] + k.entries[(j, 1)]) * 0.99;
    }
    let err = recover_vector_order(&rec, &sym, &data, BETA0, Tolerances::default()).unwrap_err();
    assert!(matches!(err, Error::RangeViolation { index: 0, .. }), "{err:?}");
}

#[test]
fn certificates_pass_at_suggested_times() {
    let rl = DerivativeKind::RiemannLiouville;
    let s = suggest_observation_time(rl, 0.3, &[c(-5.0, 1.0)]).unwrap();
    let cert = verify_monotonicity(rl, c(-5.0, 1.0), s.t0, 0.3, 1000).unwrap();
    assert!(cert.passed, "{cert:?}");

    let s = suggest_observation_time(DerivativeKind::Caputo, 0.3, &[c(-1.0, 0.0)]).unwrap();
    assert!(verify_monotonicity(DerivativeKind::Caputo, c(-1.0, 0.0), s.t0, 0.3, 1000).unwrap().passed);
    assert!(verify_monotonicity(DerivativeKind::Caputo, c(-1.0, 0.0), std::f64::consts::E, 0.3, 1000).unwrap().passed);

    // below the guaranteed time the certificate is only a report
    let early = verify_monotonicity(DerivativeKind::Caputo, c(-1.0, 0.0), 1.01, 0.05, 1000).unwrap();
    assert_eq!(early.passed, early.first_violation.is_none());
}

#[test]
fn degenerate_sign_is_rejected() {
    let err = suggest_observation_time(DerivativeKind::RiemannLiouville, 0.3, &[c(-1.0, 1.0)]).unwrap_err();
    assert!(matches!(err, Error::DegenerateSignCondition { .. }), "{err:?}");
}
