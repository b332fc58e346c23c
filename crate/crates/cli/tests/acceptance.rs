//! Acceptance criteria. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits nonzero if any failed. Pass criterion ids (e.g. `AC5`) as
//! arguments to run a subset.

use std::f64::consts::FRAC_1_SQRT_2 as S2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ctpower_cli::verify::{fef, monogamy, nqubit, prop1, protocol, three_qubit, Check};
use ctpower_core::ctpower::{
    ghz_closed_form, three_qubit_report, w_ntype_closed_form, wclass_closed_form, ControlReport,
};
use ctpower_core::qlinalg::re;
use ctpower_core::simkit::ProtocolConfig;
use ctpower_core::states::make_w_class;

const SEED: u64 = 7;
const S3: f64 = 0.577_350_269_189_625_8;

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_checks(checks: &[Check]) -> Outcome {
    Outcome {
        passed: checks.iter().all(Check::passed),
        detail: checks.iter().map(Check::line).collect::<Vec<_>>().join(" | "),
    }
}

/// Minimal P over the GHZ sweep against `2|a||b|/3` computed directly.
fn ac1() -> Outcome {
    let mut max_dev: f64 = 0.0;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=100 {
        let a2 = i as f64 / 100.0;
        let (a, b) = (a2.sqrt(), (1.0 - a2).sqrt());
        let p = ghz_closed_form(3, re(a), re(b)).unwrap().minimal_power;
        max_dev = max_dev.max((p - 2.0 * a * b / 3.0).abs());
        if p > best.0 {
            best = (p, a2);
        }
    }
    let peak_ok = (best.1 - 0.5).abs() < 1e-12 && (best.0 - 1.0 / 3.0).abs() < 1e-12;
    Outcome {
        passed: max_dev <= 1e-12 && peak_ok,
        detail: format!("101 points, max |P - 2|a||b|/3| = {max_dev:.3e}; max P = {:.15} at |a|^2 = {}", best.0, best.1),
    }
}

fn ac2() -> Outcome {
    let closed = wclass_closed_form([0.0, S3, S3, S3]).unwrap().minimal_power;
    let generic = three_qubit_report(&make_w_class(0.0, S3, S3, S3).unwrap()).unwrap().minimal_power;
    let target = 2.0 / 9.0;
    Outcome {
        passed: (closed - target).abs() <= 1e-12 && (generic - target).abs() <= 1e-12,
        detail: format!("closed form {closed:.15}, generic {generic:.15}, expected {target:.15}"),
    }
}

fn ac3() -> Outcome {
    from_checks(&[prop1(10_000, SEED).unwrap()])
}

fn ac4() -> Outcome {
    let mut failures = Vec::new();
    let mut values = Vec::new();
    for n in 3..=8usize {
        let p = w_ntype_closed_form(&vec![re(1.0 / (n as f64).sqrt()); n]).unwrap().minimal_power;
        let expected = if n == 3 { 2.0 / 9.0 } else { 1.0 / 3.0 - 2.0 / (3.0 * n as f64) };
        values.push(format!("n={n}: {p:.12} (expected {expected:.12})"));
        if (p - expected).abs() > 1e-12 {
            failures.push(n);
        }
    }
    Outcome { passed: failures.is_empty(), detail: format!("mismatched n = {failures:?}; {}", values.join(", ")) }
}

fn ac5() -> Outcome {
    let checks = three_qubit(200, SEED, &ProtocolConfig::default()).unwrap();
    from_checks(&checks[..1])
}

fn ac6() -> Outcome {
    let checks = protocol(50, SEED, &ProtocolConfig::default()).unwrap();
    from_checks(&checks[..1])
}

fn ac7() -> Outcome {
    from_checks(&fef(1000, SEED).unwrap())
}

fn ac8() -> Outcome {
    let fixtures: [(&str, ControlReport, bool); 6] = [
        ("GHZ |a|^2=1/2", ghz_closed_form(3, re(S2), re(S2)).unwrap(), true),
        ("GHZ b=0", ghz_closed_form(3, re(1.0), re(0.0)).unwrap(), false),
        ("W-class standard W", wclass_closed_form([0.0, S3, S3, S3]).unwrap(), true),
        ("W-class all 1/2", wclass_closed_form([0.5, 0.5, 0.5, 0.5]).unwrap(), true),
        ("W-class l1=0", wclass_closed_form([0.0, 0.0, S2, S2]).unwrap(), false),
        ("W-class l3=0", wclass_closed_form([0.6, 0.6, (1.0f64 - 0.72).sqrt(), 0.0]).unwrap(), false),
    ];
    let mut parts = Vec::new();
    let mut passed = true;
    for (name, report, expected) in &fixtures {
        let ok = report.meaningful == *expected;
        passed &= ok;
        let worst_nc = report.records.iter().map(|r| r.f_no_control).fold(f64::NEG_INFINITY, f64::max);
        parts.push(format!(
            "{name}: {} (meaningful={}, expected {expected}, max F_no_control={worst_nc:.6})",
            if ok { "ok" } else { "MISMATCH" },
            report.meaningful
        ));
    }
    Outcome { passed, detail: parts.join("; ") }
}

fn ac9() -> Outcome {
    from_checks(&monogamy(10_000, SEED).unwrap())
}

fn ac10() -> Outcome {
    from_checks(&nqubit(&[4, 5], 10, SEED, &ProtocolConfig::default()).unwrap())
}

type Criterion = (&'static str, &'static str, u64, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    ("AC1", "GHZ minimal P equals 2|a||b|/3", 1, ac1),
    ("AC2", "standard W minimal P equals 2/9", 1, ac2),
    ("AC3", "W-class minimal P <= 2/9", 10, ac3),
    ("AC4", "W^(n) minimal P table", 1, ac4),
    ("AC5", "three-qubit oracle equals (2+tau_kl)/3", 300, ac5),
    ("AC6", "Monte-Carlo teleportation equals (3+||T||)/6", 300, ac6),
    ("AC7", "(3+||T||)/6 equals (2f+1)/3; FEF methods agree", 60, ac7),
    ("AC8", "meaningfulness fixtures", 1, ac8),
    ("AC9", "tangle monogamy and consistency", 30, ac9),
    ("AC10", "n-qubit GHZ oracle equals 2(|a||b|+1)/3", 600, ac10),
];

fn main() {
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (id, title, budget_s, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| Outcome { passed: false, detail: format!("panicked: {e:?}") });
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget_s);
        let passed = outcome.passed && in_time;
        println!(
            "{id} {} {title} [{:.2}s / {budget_s}s{}]: {}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { "" } else { " over budget" },
            outcome.detail
        );
        if !passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failed: {}", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
}
