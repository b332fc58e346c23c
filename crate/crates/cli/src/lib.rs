//! Library half of the `ctpower` command: state construction from flags,
//! report formatting, sweeps and verification campaigns. `main.rs` only
//! parses arguments and maps errors to exit codes.

pub mod verify;

use std::io::Write;
use std::path::Path;

use ctpower_core::ctpower::{
    ghz_closed_form, minimal_control_power, w_ntype_closed_form, w_ntype_plus_form, wclass_closed_form, ControlReport,
};
use ctpower_core::qlinalg::{c, re, C64};
use ctpower_core::simkit::{oracle_control_report, ProtocolConfig};
use ctpower_core::states::{load_state, make_ghz, make_w_class, make_w_ntype, PureState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) => 2,
            CliError::Unsupported(_) => 3,
        }
    }
}

impl From<ctpower_core::Error> for CliError {
    fn from(e: ctpower_core::Error) -> Self {
        match e {
            ctpower_core::Error::Unsupported(_) | ctpower_core::Error::Budget(_) => CliError::Unsupported(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Rounds to 12 significant digits; `-0` becomes `0`.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Applies [`round_sig`] to every non-integer number in `v`.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            *v = serde_json::Number::from_f64(round_sig(n.as_f64().unwrap())).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Number as written to CSV.
pub fn csv_number(x: f64) -> String {
    format!("{}", round_sig(x))
}

pub fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Input(format!("not a number: {t:?}"))))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    Ghz,
    Wclass,
    Wntype,
}

impl std::str::FromStr for FamilyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ghz" => Ok(Self::Ghz),
            "wclass" => Ok(Self::Wclass),
            "wntype" => Ok(Self::Wntype),
            _ => Err(format!("unknown family {s:?}; expected ghz, wclass or wntype")),
        }
    }
}

/// Where the state for `analyze` comes from.
#[derive(Clone, Debug)]
pub enum StateSource {
    File(std::path::PathBuf),
    /// `a|0..0> + b|1..1>` with `|a|^2 = a2`, real non-negative amplitudes.
    Ghz { n: usize, a2: f64 },
    Wclass { lambdas: [f64; 4] },
    /// Explicit amplitudes, or uniform `1/sqrt(n)` when `alphas` is empty.
    Wntype { n: usize, alphas: Vec<f64> },
}

fn ghz_amplitudes(a2: f64) -> CliResult<(C64, C64)> {
    if !(0.0..=1.0).contains(&a2) {
        return Err(CliError::Input(format!("|a|^2 must lie in [0, 1], got {a2}")));
    }
    Ok((re(a2.sqrt()), re((1.0 - a2).sqrt())))
}

fn wntype_alphas(n: usize, alphas: &[f64]) -> CliResult<Vec<C64>> {
    if alphas.is_empty() {
        if n < 3 {
            return Err(CliError::Input(format!("W-type family needs n >= 3, got {n}")));
        }
        return Ok(vec![re(1.0 / (n as f64).sqrt()); n]);
    }
    if n != 0 && n != alphas.len() {
        return Err(CliError::Input(format!("--n {n} disagrees with {} amplitudes", alphas.len())));
    }
    Ok(alphas.iter().map(|&a| re(a)).collect())
}

/// Analysis result: the report plus which evaluator produced it.
pub struct Analysis {
    pub report: ControlReport,
    pub method: &'static str,
}

impl Analysis {
    pub fn to_json(&self) -> Value {
        let mut v = self.report.to_json();
        v.as_object_mut().expect("object").insert("method".into(), Value::from(self.method));
        round_json(&mut v);
        v
    }
}

/// Runs the closed-form evaluator matching `source`. States loaded from a
/// file go through the generic dispatch; `oracle` lets states outside the
/// families fall back to simulation.
pub fn analyze(source: &StateSource, oracle: Option<&ProtocolConfig>) -> CliResult<Analysis> {
    match source {
        StateSource::Ghz { n, a2 } => {
            let (a, b) = ghz_amplitudes(*a2)?;
            Ok(Analysis { report: ghz_closed_form(*n, a, b)?, method: "ghz closed form" })
        }
        StateSource::Wclass { lambdas } => Ok(Analysis { report: wclass_closed_form(*lambdas)?, method: "w-class closed form" }),
        StateSource::Wntype { n, alphas } => {
            let alphas = wntype_alphas(*n, alphas)?;
            Ok(Analysis { report: w_ntype_closed_form(&alphas)?, method: "w-type closed form" })
        }
        StateSource::File(path) => analyze_state(&load_state(path)?, oracle),
    }
}

pub fn analyze_state(psi: &PureState, oracle: Option<&ProtocolConfig>) -> CliResult<Analysis> {
    match minimal_control_power(psi) {
        Ok(report) => {
            let method = if psi.n_qubits() == 3 { "three-qubit tangles" } else { "family closed form" };
            Ok(Analysis { report, method })
        }
        Err(ctpower_core::Error::Unsupported(msg)) => match oracle {
            Some(cfg) => Ok(Analysis { report: oracle_control_report(psi, cfg)?, method: "simulation oracle" }),
            None => Err(CliError::Unsupported(format!("{msg}; rerun with --oracle"))),
        },
        Err(e) => Err(e.into()),
    }
}

/// Builds the explicit state for a family source, e.g. to write a state file.
pub fn build_state(source: &StateSource) -> CliResult<PureState> {
    Ok(match source {
        StateSource::File(path) => load_state(path)?,
        StateSource::Ghz { n, a2 } => {
            let (a, b) = ghz_amplitudes(*a2)?;
            make_ghz(*n, a, b)?
        }
        StateSource::Wclass { lambdas: [l0, l1, l2, l3] } => make_w_class(*l0, *l1, *l2, *l3)?,
        StateSource::Wntype { n, alphas } => make_w_ntype(&wntype_alphas(*n, alphas)?)?,
    })
}

pub fn write_json(value: &Value, out: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("json serializes") + "\n";
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub enum SweepSpec {
    /// `|a|^2` from `min` to `max` inclusive in `steps` equal intervals.
    Ghz { n: usize, min: f64, max: f64, steps: usize },
    /// Random points of the non-negative orthant of the unit 3-sphere.
    Wclass { samples: usize, seed: u64 },
    /// Uniform W-type states for each `n` in `n_min..=n_max`.
    Wntype { n_min: usize, n_max: usize },
}

pub const GHZ_HEADER: [&str; 4] = ["n", "a2", "minimal_P", "meaningful"];
pub const WCLASS_HEADER: [&str; 7] = ["index", "l0", "l1", "l2", "l3", "minimal_P", "meaningful"];
pub const WNTYPE_HEADER: [&str; 4] = ["n", "minimal_P", "plus_form", "meaningful"];

/// Uniform sample of the non-negative orthant of the unit sphere in 4 dimensions.
pub fn orthant_point<R: Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    loop {
        let g: [f64; 4] = std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal).abs());
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return g.map(|x| x / norm);
        }
    }
}

/// Independent RNG for sample `index` of a seeded campaign.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// CSV rows for a sweep, header first.
pub fn sweep_rows(spec: &SweepSpec) -> CliResult<Vec<Vec<String>>> {
    use rayon::prelude::*;
    let b = |x: bool| x.to_string();
    let mut rows = Vec::new();
    match *spec {
        SweepSpec::Ghz { n, min, max, steps } => {
            if steps == 0 || min.is_nan() || max.is_nan() || min > max || min < 0.0 || max > 1.0 {
                return Err(CliError::Input(format!("empty or invalid |a|^2 range {min}..{max} with {steps} steps")));
            }
            rows.push(GHZ_HEADER.map(String::from).to_vec());
            for i in 0..=steps {
                let a2 = min + (max - min) * i as f64 / steps as f64;
                let (a, bb) = ghz_amplitudes(a2)?;
                let r = ghz_closed_form(n, a, bb)?;
                rows.push(vec![n.to_string(), csv_number(a2), csv_number(r.minimal_power), b(r.meaningful)]);
            }
        }
        SweepSpec::Wclass { samples, seed } => {
            if samples == 0 {
                return Err(CliError::Input("sweep needs at least one sample".into()));
            }
            rows.push(WCLASS_HEADER.map(String::from).to_vec());
            let body: Vec<CliResult<Vec<String>>> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let l = orthant_point(&mut sample_rng(seed, i));
                    let r = wclass_closed_form(l)?;
                    let mut row = vec![i.to_string()];
                    row.extend(l.iter().map(|&x| csv_number(x)));
                    row.push(csv_number(r.minimal_power));
                    row.push(b(r.meaningful));
                    Ok(row)
                })
                .collect();
            for row in body {
                rows.push(row?);
            }
        }
        SweepSpec::Wntype { n_min, n_max } => {
            if n_min < 3 || n_min > n_max || n_max > 20 {
                return Err(CliError::Input(format!("invalid n range {n_min}..{n_max}; need 3 <= n_min <= n_max <= 20")));
            }
            rows.push(WNTYPE_HEADER.map(String::from).to_vec());
            for n in n_min..=n_max {
                let alphas = vec![re(1.0 / (n as f64).sqrt()); n];
                let r = w_ntype_closed_form(&alphas)?;
                rows.push(vec![
                    n.to_string(),
                    csv_number(r.minimal_power),
                    csv_number(w_ntype_plus_form(&alphas)),
                    b(r.meaningful),
                ]);
            }
        }
    }
    Ok(rows)
}

pub fn write_csv(rows: &[Vec<String>], out: Option<&Path>) -> CliResult<()> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Haar-distributed GHZ coefficients: `|a|^2` uniform, independent phases.
pub fn random_ghz_coefficients<R: Rng + ?Sized>(rng: &mut R) -> (C64, C64) {
    let a2: f64 = rng.random();
    let (pa, pb): (f64, f64) = (rng.random::<f64>() * std::f64::consts::TAU, rng.random::<f64>() * std::f64::consts::TAU);
    (c(a2.sqrt() * pa.cos(), a2.sqrt() * pa.sin()), c((1.0 - a2).sqrt() * pb.cos(), (1.0 - a2).sqrt() * pb.sin()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_to_twelve_digits() {
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(2.0 / 9.0), 0.222222222222);
        assert_eq!(round_sig(-0.0), 0.0);
        assert_eq!(round_sig(-1e-20), -1e-20);
        assert_eq!(round_sig(123456.7890123456), 123456.789012);
        let mut v = serde_json::json!({"x": [1.0 / 3.0, 3], "y": {"z": 2.0 / 3.0}});
        round_json(&mut v);
        assert_eq!(v.to_string(), r#"{"x":[0.333333333333,3],"y":{"z":0.666666666667}}"#);
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("0, 0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_list("0,x").is_err());
    }

    #[test]
    fn orthant_points_are_unit_and_nonnegative() {
        let mut rng = sample_rng(1, 0);
        for _ in 0..100 {
            let p = orthant_point(&mut rng);
            assert!((p.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn sweep_rejects_empty_ranges() {
        assert!(sweep_rows(&SweepSpec::Ghz { n: 3, min: 0.6, max: 0.4, steps: 10 }).is_err());
        assert!(sweep_rows(&SweepSpec::Ghz { n: 3, min: 0.0, max: 1.0, steps: 0 }).is_err());
        assert!(sweep_rows(&SweepSpec::Wntype { n_min: 5, n_max: 4 }).is_err());
        assert!(sweep_rows(&SweepSpec::Wclass { samples: 0, seed: 0 }).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(ctpower_core::Error::Unsupported("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(ctpower_core::Error::Malformed("x".into())).exit_code(), 2);
        assert_eq!(CliError::Verification("x".into()).exit_code(), 1);
    }
}
