//! Verification campaigns: closed forms against the simulation oracle and
//! against independent numerics. Every sample draws from its own seeded
//! stream, so results do not depend on thread count.

use ctpower_core::ctpower::wclass_closed_form;
use ctpower_core::measures::{
    correlation_matrix, fef_numeric, fidelity_from_f, fidelity_from_t, fully_entangled_fraction, TangleProfile,
};
use ctpower_core::optim::NelderMeadOptions;
use ctpower_core::qlinalg::{haar_mixed, haar_state};
use ctpower_core::simkit::{ct_fidelity_oracle, ct_fidelity_oracle_n, mc_teleportation_fidelity, ProtocolConfig};
use ctpower_core::states::{make_ghz, Partition, PureState};
use rayon::prelude::*;

use crate::{orthant_point, random_ghz_coefficients, sample_rng, CliError, CliResult};

/// Outcome of one checked property over a batch of cases.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn line(&self) -> String {
        let mut s = format!(
            "{} {}: cases={} failures={} max_dev={:.3e} tol={:.1e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.failures,
            self.max_deviation,
            self.tolerance
        );
        if !self.detail.is_empty() {
            s.push_str("; ");
            s.push_str(&self.detail);
        }
        s
    }
}

fn tally(name: &str, deviations: &[f64], tolerance: f64, detail: String) -> Check {
    Check {
        name: name.into(),
        cases: deviations.len(),
        failures: deviations.iter().filter(|&&d| d.is_nan() || d > tolerance).count(),
        max_deviation: deviations.iter().cloned().fold(0.0, f64::max),
        tolerance,
        detail,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    ThreeQubit,
    Nqubit,
    Prop1,
    Fef,
    Protocol,
    Monogamy,
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "three-qubit" => Self::ThreeQubit,
            "nqubit" => Self::Nqubit,
            "prop1" => Self::Prop1,
            "fef" => Self::Fef,
            "protocol" => Self::Protocol,
            "monogamy" => Self::Monogamy,
            _ => return Err(format!("unknown suite {s:?}")),
        })
    }
}

impl Suite {
    pub fn default_samples(self) -> usize {
        match self {
            Self::ThreeQubit => 200,
            Self::Nqubit => 10,
            Self::Prop1 => 10_000,
            Self::Fef => 1000,
            Self::Protocol => 50,
            Self::Monogamy => 10_000,
        }
    }
}

pub fn run_suite(suite: Suite, samples: usize, seed: u64, cfg: &ProtocolConfig) -> CliResult<Vec<Check>> {
    if samples == 0 {
        return Err(CliError::Input("need at least one sample".into()));
    }
    cfg.validate()?;
    Ok(match suite {
        Suite::ThreeQubit => three_qubit(samples, seed, cfg)?,
        Suite::Nqubit => nqubit(&[4, 5], samples, seed, cfg)?,
        Suite::Prop1 => vec![prop1(samples, seed)?],
        Suite::Fef => fef(samples, seed)?,
        Suite::Protocol => protocol(samples, seed, cfg)?,
        Suite::Monogamy => monogamy(samples, seed)?,
    })
}

fn random_pure(n: usize, seed: u64, i: usize) -> PureState {
    PureState::new(haar_state(n, &mut sample_rng(seed, i)).into_entries()).expect("haar state is normalized")
}

/// Oracle `F_ct` against `(2 + tau_kl)/3` on Haar-random three-qubit states,
/// and the oracle against the uncontrolled fidelity.
pub fn three_qubit(samples: usize, seed: u64, cfg: &ProtocolConfig) -> CliResult<Vec<Check>> {
    let rows: Vec<CliResult<[(f64, f64); 3]>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let psi = random_pure(3, seed, i);
            let profile = TangleProfile::new(&psi)?;
            let mut out = [(0.0, 0.0); 3];
            for (j, slot) in out.iter_mut().enumerate() {
                let p = Partition::controller(j)?;
                let (k, l) = p.workers();
                let oracle = ct_fidelity_oracle(&psi, j, cfg)?;
                let closed = (2.0 + profile.partial_tangle(k, l)) / 3.0;
                let uncontrolled = fidelity_from_t(&psi.reduced(&[k, l])?)?;
                *slot = ((oracle - closed).abs(), (uncontrolled - oracle).max(0.0));
            }
            Ok(out)
        })
        .collect();
    let mut agree = Vec::new();
    let mut dominance = Vec::new();
    for r in rows {
        for (a, d) in r? {
            agree.push(a);
            dominance.push(d);
        }
    }
    Ok(vec![
        tally("oracle F_ct vs (2+tau_kl)/3", &agree, 1e-5, String::new()),
        tally("oracle F_ct >= F(rho_kl)", &dominance, 1e-6, String::new()),
    ])
}

/// Multi-controller oracle on GHZ states against `2(|a||b| + 1)/3`.
pub fn nqubit(sizes: &[usize], points: usize, seed: u64, cfg: &ProtocolConfig) -> CliResult<Vec<Check>> {
    let mut checks = Vec::new();
    for &n in sizes {
        let jobs: Vec<(usize, Partition)> = (0..points)
            .flat_map(|i| Partition::all(n).expect("n >= 3").into_iter().map(move |p| (i, p)))
            .collect();
        let devs: Vec<CliResult<f64>> = jobs
            .par_iter()
            .map(|(i, p)| {
                let (a, b) = random_ghz_coefficients(&mut sample_rng(seed.wrapping_add(n as u64), *i));
                let psi = make_ghz(n, a, b)?;
                let expected = 2.0 * (a.norm() * b.norm() + 1.0) / 3.0;
                Ok((ct_fidelity_oracle_n(&psi, p, cfg)? - expected).abs())
            })
            .collect();
        let devs = devs.into_iter().collect::<CliResult<Vec<_>>>()?;
        checks.push(tally(&format!("GHZ n={n} oracle F_ct^J vs 2(|a||b|+1)/3"), &devs, 1e-5, format!("{points} points")));
    }
    Ok(checks)
}

pub const PROP1_BOUND: f64 = 2.0 / 9.0;

/// Minimal control power over W-class samples stays below 2/9.
pub fn prop1(samples: usize, seed: u64) -> CliResult<Check> {
    let powers: Vec<CliResult<(f64, [f64; 4])>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let l = orthant_point(&mut sample_rng(seed, i));
            Ok((wclass_closed_form(l)?.minimal_power, l))
        })
        .collect();
    let powers = powers.into_iter().collect::<CliResult<Vec<_>>>()?;
    let (max_p, at) = powers.iter().cloned().fold((f64::NEG_INFINITY, [0.0; 4]), |a, b| if b.0 > a.0 { b } else { a });
    let excess: Vec<f64> = powers.iter().map(|(p, _)| (p - PROP1_BOUND).max(0.0)).collect();
    Ok(tally(
        "W-class minimal P <= 2/9",
        &excess,
        1e-9,
        format!("max P = {max_p:.9} at l = [{:.4}, {:.4}, {:.4}, {:.4}]", at[0], at[1], at[2], at[3]),
    ))
}

/// `(3 + ||T||_1)/6` against `(2f + 1)/3`, and the magic-basis fully
/// entangled fraction against direct maximization.
pub fn fef(samples: usize, seed: u64) -> CliResult<Vec<Check>> {
    let nm = NelderMeadOptions::default();
    let rows: Vec<CliResult<(f64, f64, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let rho = haar_mixed(2, &mut sample_rng(seed, i));
            let f = fully_entangled_fraction(&rho)?;
            let det_t = correlation_matrix(&rho)?.det();
            let gap = (fidelity_from_t(&rho)? - fidelity_from_f(f)).abs();
            let numeric = fef_numeric(&rho, 16, &nm)?;
            Ok((gap, (f - numeric).abs(), det_t))
        })
        .collect();
    let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let bad = rows.iter().filter(|r| r.0 > 1e-6);
    let bad_positive = bad.clone().filter(|r| r.2 > 0.0).count();
    let det_positive = rows.iter().filter(|r| r.2 > 0.0).count();
    let worst_nonpositive = rows.iter().filter(|r| r.2 <= 0.0).map(|r| r.0).fold(0.0, f64::max);
    Ok(vec![
        tally(
            "(3+||T||)/6 vs (2f+1)/3",
            &gaps,
            1e-6,
            format!(
                "{det_positive} samples have det T > 0, {bad_positive} of the failures among them; max gap with det T <= 0: {worst_nonpositive:.3e}"
            ),
        ),
        tally("magic-basis FEF vs numeric FEF", &rows.iter().map(|r| r.1).collect::<Vec<_>>(), 1e-6, String::new()),
    ])
}

/// Monte-Carlo teleportation with optimized local unitaries against
/// `(3 + ||T||_1)/6`.
pub fn protocol(samples: usize, seed: u64, cfg: &ProtocolConfig) -> CliResult<Vec<Check>> {
    let rows: Vec<CliResult<(f64, f64, f64, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let rho = haar_mixed(2, &mut sample_rng(seed, i));
            let run_cfg = ProtocolConfig { seed: seed.wrapping_mul(1_000_003).wrapping_add(i as u64), ..cfg.clone() };
            let mc = mc_teleportation_fidelity(&rho, &run_cfg)?;
            let target = fidelity_from_t(&rho)?;
            Ok((mc.estimate, mc.stderr, target, correlation_matrix(&rho)?.det()))
        })
        .collect();
    let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
    // Deviation scaled so that 1 is the allowed band max(2e-3, 3 stderr).
    let scaled: Vec<f64> = rows.iter().map(|(m, s, t, _)| (m - t).abs() / (2e-3f64).max(3.0 * s)).collect();
    let above: Vec<f64> = rows.iter().map(|(m, s, t, _)| ((m - t) / (3.0 * s).max(1e-12)).max(0.0)).collect();
    let failing_positive = rows
        .iter()
        .zip(&scaled)
        .filter(|(r, &d)| d > 1.0 && r.3 > 0.0)
        .count();
    let failing = scaled.iter().filter(|&&d| d > 1.0).count();
    let max_abs = rows.iter().map(|(m, _, t, _)| (m - t).abs()).fold(0.0, f64::max);
    Ok(vec![
        tally(
            "MC fidelity vs (3+||T||)/6 (deviation / band)",
            &scaled,
            1.0,
            format!(
                "max |MC - formula| = {max_abs:.3e}; {failing_positive} of {failing} failures have det T > 0; {} samples have det T > 0",
                rows.iter().filter(|r| r.3 > 0.0).count()
            ),
        ),
        tally("MC fidelity <= (3+||T||)/6 + 3 stderr (excess / stderr)", &above, 3.0, String::new()),
    ])
}

/// Residual tangle non-negativity, independence of the reference qubit and
/// agreement of the two partial-tangle expressions.
pub fn monogamy(samples: usize, seed: u64) -> CliResult<Vec<Check>> {
    let rows: Vec<CliResult<(f64, f64, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let t = TangleProfile::new(&random_pure(3, seed, i))?;
            let tau = t.residual_by_j.iter().sum::<f64>() / 3.0;
            let mut form_gap: f64 = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    if j == k {
                        continue;
                    }
                    let l = 3 - j - k;
                    let first = (t.one_side[j] - t.pair_concurrence[j][l].powi(2)).max(0.0).sqrt();
                    let second = (tau + t.pair_concurrence[j][k].powi(2)).max(0.0).sqrt();
                    form_gap = form_gap.max((first - second).abs());
                }
            }
            let min_tau = t.residual_by_j.iter().cloned().fold(f64::INFINITY, f64::min);
            Ok(((-min_tau).max(0.0), t.residual_spread(), form_gap))
        })
        .collect();
    let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
    Ok(vec![
        tally("tau >= 0 (negative part)", &rows.iter().map(|r| r.0).collect::<Vec<_>>(), 1e-8, String::new()),
        tally("tau independent of j", &rows.iter().map(|r| r.1).collect::<Vec<_>>(), 1e-8, String::new()),
        tally("partial tangle forms agree", &rows.iter().map(|r| r.2).collect::<Vec<_>>(), 1e-8, String::new()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ProtocolConfig {
        ProtocolConfig { mc_samples: 5000, ..Default::default() }
    }

    #[test]
    fn suites_parse() {
        assert_eq!("three-qubit".parse::<Suite>().unwrap(), Suite::ThreeQubit);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn small_campaigns_pass() {
        for c in three_qubit(2, 7, &cfg()).unwrap() {
            assert!(c.passed(), "{}", c.line());
        }
        assert!(prop1(500, 7).unwrap().passed());
        for c in monogamy(200, 7).unwrap() {
            assert!(c.passed(), "{}", c.line());
        }
        assert!(nqubit(&[4], 1, 7, &cfg()).unwrap()[0].passed());
    }

    #[test]
    fn campaigns_are_seed_reproducible() {
        assert_eq!(prop1(300, 11).unwrap(), prop1(300, 11).unwrap());
        assert_eq!(fef(5, 11).unwrap(), fef(5, 11).unwrap());
    }

    #[test]
    fn check_line_format() {
        let c = tally("demo", &[0.1, 0.3], 0.2, "note".into());
        assert_eq!(c.failures, 1);
        assert!(c.line().starts_with("FAIL demo: cases=2 failures=1"));
        assert!(c.line().ends_with("; note"));
    }
}
