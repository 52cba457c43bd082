use std::fmt::Write as _;
use std::path::Path;

use fracorder::forward::{observe_with, solution_field, spatial_from_field};
use fracorder::inverse::Certificate;
use fracorder::symbol::{check_conditions_with, diagonalize, ConditionReport};
use fracorder::{DerivativeKind, Error, Inverse, MittagLeffler, ObservationRecord};
use num_complex::Complex64;
use serde::Serialize;

use crate::output::{csv_bytes, emit, fmt_complex, fmt_f64, json_bytes};
use crate::scenario::{coupled_pair_example, Scenario};
use crate::{CliError, ExampleArgs, ExampleName, ForwardArgs, InvertArgs, MlEvalArgs, ScenarioArgs};

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also with `j`).
pub fn parse_complex(text: &str) -> Result<Complex64, CliError> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || CliError::Usage(format!("cannot parse `{text}` as a complex number"));
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let unit = |t: &str| match t {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => num(t),
    };
    let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) else {
        return Ok(Complex64::new(num(&s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(Complex64::new(num(&body[..k])?, unit(&body[k..])?)),
        None => Ok(Complex64::new(0.0, unit(body)?)),
    }
}

pub fn ml_eval(a: &MlEvalArgs) -> Result<(), CliError> {
    let ml = MittagLeffler::default();
    let header = ["alpha", "beta", "z_re", "z_im", "value_re", "value_im", "regime", "error_estimate"].map(String::from);
    let mut rows = Vec::with_capacity(a.z.len());
    for text in &a.z {
        let z = parse_complex(text)?;
        let e = ml.evaluate(a.alpha, a.beta, z)?;
        let [zr, zi] = fmt_complex(z);
        let [vr, vi] = fmt_complex(e.value);
        rows.push(vec![fmt_f64(a.alpha), fmt_f64(a.beta), zr, zi, vr, vi, e.regime.label().into(), fmt_f64(e.error_estimate)]);
    }
    emit(a.out.as_deref(), &csv_bytes(&header, &rows)?)
}

fn load(args: &ScenarioArgs) -> Result<(Scenario, std::path::PathBuf, DerivativeKind), CliError> {
    let (sc, base) = Scenario::load(&args.scenario)?;
    let kind = args.kind.unwrap_or(sc.kind);
    Ok((sc, base, kind))
}

pub fn forward(a: &ForwardArgs) -> Result<(), CliError> {
    let (sc, base, kind) = load(&a.common)?;
    let model = sc.model(&base)?;
    let order = sc.order()?;
    let ml = MittagLeffler::new(sc.policy)?;
    let times = a.times.clone().unwrap_or_else(|| sc.times.clone());
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(CliError::Usage("times must be finite and non-negative".into()));
    }
    let (dom, m) = (&sc.domain, model.symbol.m);
    let coord = |p: &'static str, n: usize| (1..=n).map(move |a| format!("{p}{a}"));
    let comps = || (1..=m).flat_map(|j| [format!("u{j}_re"), format!("u{j}_im")]);

    let header: Vec<String> = std::iter::once("t".to_string()).chain(coord("xi", dom.dim())).chain(comps()).collect();
    let spatial_header: Vec<String> = std::iter::once("t".to_string())
        .chain(coord("x", dom.dim()))
        .chain(comps())
        .chain(std::iter::once("error_estimate".to_string()))
        .collect();
    let mut rows = Vec::new();
    let mut spatial_rows = Vec::new();
    for &t in &times {
        log::info!("forward solve at t = {t}");
        let field = solution_field(&ml, &model.symbol, &model.data, order, t, kind)?;
        for k in 0..dom.node_count() {
            let mut row = vec![fmt_f64(t)];
            row.extend(dom.node(k).into_iter().map(fmt_f64));
            row.extend(field[k * m..(k + 1) * m].iter().flat_map(|&v| fmt_complex(v)));
            rows.push(row);
        }
        if a.spatial_out.is_some() {
            for x in &sc.x {
                let u = spatial_from_field(dom, m, &field, x)?;
                let mut row = vec![fmt_f64(t)];
                row.extend(x.iter().copied().map(fmt_f64));
                row.extend(u.values.iter().flat_map(|&v| fmt_complex(v)));
                row.push(fmt_f64(u.error_estimate));
                spatial_rows.push(row);
            }
        }
    }
    if let Some(p) = &a.spatial_out {
        emit(Some(p), &csv_bytes(&spatial_header, &spatial_rows)?)?;
    }
    emit(a.common.out.as_deref(), &csv_bytes(&header, &rows)?)
}

pub fn observe(a: &ScenarioArgs) -> Result<(), CliError> {
    let (sc, base, kind) = load(a)?;
    let model = sc.model(&base)?;
    let ml = MittagLeffler::new(sc.policy)?;
    let rec = observe_with(&ml, &model.symbol, &model.data, sc.order()?, sc.t0()?, sc.xi0()?, kind)?;
    emit(a.out.as_deref(), &json_bytes(&rec)?)
}

fn read_record(path: &Path) -> Result<ObservationRecord, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let rec: ObservationRecord =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    rec.validate()?;
    Ok(rec)
}

pub fn invert(a: &InvertArgs) -> Result<(), CliError> {
    let (sc, base, kind) = load(&a.common)?;
    let model = sc.model(&base)?;
    let inv = Inverse::new(MittagLeffler::new(sc.policy)?, sc.tolerances)?;
    let beta0 = sc.beta0()?;
    let record = a.observation.as_deref().map(read_record).transpose()?;
    if let (Some(rec), Some(k)) = (&record, a.common.kind) {
        if rec.kind != k {
            return Err(CliError::Usage(format!("--kind {k} contradicts the observation record ({})", rec.kind)));
        }
    }
    if a.suggest_t0 {
        let (xi0, kind) = match &record {
            Some(r) => (r.xi0.as_slice(), r.kind),
            None => (sc.xi0()?, kind),
        };
        let diag = diagonalize(&model.symbol, xi0)?;
        if let Some(e) = check_conditions_with(&diag, kind, sc.tolerances.margin_tol).first_failure() {
            return Err(e.into());
        }
        let s = inv.suggest_observation_time(kind, beta0, &diag.eigenvalues)?;
        println!("t0 {}", fmt_f64(s.t0));
        if let Some(p) = &a.common.out {
            emit(Some(p), &json_bytes(&s)?)?;
        }
        return Ok(());
    }
    let record = record.ok_or_else(|| CliError::Usage("--observation is required".into()))?;
    let result = inv.recover_vector_order(&record, &model.symbol, &model.data, beta0)?;
    emit(a.common.out.as_deref(), &json_bytes(&result)?)
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub conditions: ConditionReport,
    pub beta0: f64,
    pub t0: Option<f64>,
    pub certificates: Vec<Option<Certificate>>,
}

fn describe(r: &CheckReport) -> String {
    let c = &r.conditions;
    let mut s = String::new();
    let _ = writeln!(s, "xi0 {:?}  kind {}  beta0 {}", c.xi, c.kind, r.beta0);
    for (mode, cert) in c.modes.iter().zip(&r.certificates) {
        let verdict = |ok: bool| if ok { "ok" } else { "FAIL" };
        let _ = write!(
            s,
            "mode {}: lambda ({}, {})  arg {}  spectral {}",
            mode.index + 1,
            fmt_f64(mode.lambda.re),
            fmt_f64(mode.lambda.im),
            fmt_f64(mode.arg),
            verdict(mode.spectral_ok)
        );
        if let (Some(gap), Some(ok)) = (mode.sign_gap, mode.sign_ok) {
            let _ = write!(s, "  sign gap {}  {}", fmt_f64(gap), verdict(ok));
        }
        match cert {
            Some(cert) => {
                let _ = writeln!(
                    s,
                    "  certificate t0 {} samples {} {}",
                    fmt_f64(cert.t0),
                    cert.samples,
                    if cert.passed { "passed" } else { "FAILED" }
                );
            }
            None => s.push_str("  certificate skipped\n"),
        }
    }
    for (a, b) in &c.degenerate {
        let _ = writeln!(s, "modes {} and {} are degenerate", a + 1, b + 1);
    }
    s
}

pub fn check(a: &ScenarioArgs) -> Result<(), CliError> {
    let (sc, base, kind) = load(a)?;
    let model = sc.model(&base)?;
    let inv = Inverse::new(MittagLeffler::new(sc.policy)?, sc.tolerances)?;
    let beta0 = sc.beta0()?;
    let diag = diagonalize(&model.symbol, sc.xi0()?)?;
    let conditions = check_conditions_with(&diag, kind, sc.tolerances.margin_tol);
    let failure = conditions.first_failure();
    let t0 = match (sc.t0, &failure) {
        (Some(t), _) => Some(t),
        (None, None) => Some(inv.suggest_observation_time(kind, beta0, &diag.eigenvalues)?.t0),
        (None, Some(_)) => None,
    };
    let mut certificates = Vec::with_capacity(conditions.modes.len());
    for mode in &conditions.modes {
        let usable = mode.spectral_ok && mode.sign_ok != Some(false);
        certificates.push(match t0 {
            Some(t) if usable => Some(inv.verify_monotonicity(kind, mode.lambda, t, beta0)?),
            _ => None,
        });
    }
    let report = CheckReport { conditions, beta0, t0, certificates };
    print!("{}", describe(&report));
    if let Some(p) = &a.out {
        emit(Some(p), &json_bytes(&report)?)?;
    }
    if let Some(e) = failure {
        return Err(e.into());
    }
    if let Some((l, cert)) = report.certificates.iter().enumerate().find_map(|(l, c)| c.as_ref().filter(|c| !c.passed).map(|c| (l, c))) {
        return Err(Error::MonotonicityNotCertified { index: l, t0: cert.t0, reason: cert.reason.clone().unwrap_or_default() }.into());
    }
    Ok(())
}

pub fn example(a: &ExampleArgs) -> Result<(), CliError> {
    let kind = a.kind.unwrap_or(DerivativeKind::Caputo);
    let scenario = match a.name {
        ExampleName::CoupledPair => {
            let draft = coupled_pair_example(kind, 1.0);
            let model = draft.model(Path::new("."))?;
            let diag = diagonalize(&model.symbol, draft.xi0()?)?;
            let t0 = Inverse::default().suggest_observation_time(kind, draft.beta0()?, &diag.eigenvalues)?.t0;
            coupled_pair_example(kind, t0)
        }
    };
    emit(a.out.as_deref(), &json_bytes(&scenario)?)
}
