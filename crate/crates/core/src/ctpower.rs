//! Control power of controlled teleportation.
//!
//! For a partition of the qubits into controllers `J` and a worker pair
//! `(k, l)`, the controlled fidelity `F_ct` is the best average
//! teleportation fidelity the workers reach after the controllers measure,
//! and `F(rho_kl)` is what the workers reach on their own. The control power
//! is `P^J = F_ct - F(rho_kl)` and the minimal control power is the minimum
//! over all partitions.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::measures::{fidelity_from_t, TangleProfile};
use crate::qlinalg::C64;
use crate::states::{detect_family, make_w_class, Family, Partition, PureState, NORM_TOL};

/// Best fidelity reachable without entanglement.
pub const CLASSICAL_FIDELITY: f64 = 2.0 / 3.0;

/// Margin above 2/3 a controlled fidelity must clear to count as useful.
pub const CONTROLLED_MARGIN: f64 = 1e-12;
/// Slack allowed on `F(rho_kl) <= 2/3`.
pub const UNCONTROLLED_SLACK: f64 = 1e-9;
/// Amplitudes below this are treated as zero when recognising families.
pub const FAMILY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionRecord {
    pub partition: Partition,
    pub f_ct: f64,
    pub f_no_control: f64,
    /// Fully entangled fraction implied by `f_no_control`, `(3F - 1) / 2`.
    pub f_frac_no_control: f64,
    pub power: f64,
}

impl PartitionRecord {
    pub fn new(partition: Partition, f_ct: f64, f_no_control: f64) -> Self {
        Self {
            partition,
            f_ct,
            f_no_control,
            f_frac_no_control: (3.0 * f_no_control - 1.0) / 2.0,
            power: f_ct - f_no_control,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlReport {
    pub n_qubits: usize,
    /// One record per partition, controller sets in lexicographic order.
    pub records: Vec<PartitionRecord>,
    pub minimal_power: f64,
    /// Index into `records` of the first partition attaining the minimum.
    pub argmin: usize,
    pub meaningful: bool,
}

impl ControlReport {
    /// Assembles a report; records may arrive in any order.
    pub fn from_records(n_qubits: usize, mut records: Vec<PartitionRecord>) -> Self {
        assert!(!records.is_empty(), "report needs at least one partition");
        records.sort_by(|a, b| a.partition.cmp(&b.partition));
        let mut argmin = 0;
        for (i, r) in records.iter().enumerate() {
            if r.power < records[argmin].power {
                argmin = i;
            }
        }
        let meaningful = records.iter().all(|r| {
            r.f_ct > CLASSICAL_FIDELITY + CONTROLLED_MARGIN && r.f_no_control <= CLASSICAL_FIDELITY + UNCONTROLLED_SLACK
        });
        Self { n_qubits, minimal_power: records[argmin].power, argmin, meaningful, records }
    }

    pub fn argmin_partition(&self) -> &Partition {
        &self.records[self.argmin].partition
    }

    pub fn record(&self, partition: &Partition) -> Option<&PartitionRecord> {
        self.records.iter().find(|r| &r.partition == partition)
    }

    /// JSON view with 1-based qubit labels.
    pub fn to_json(&self) -> Value {
        let label = |p: &Partition| {
            let (k, l) = p.workers();
            json!({
                "J": p.controllers().iter().map(|q| q + 1).collect::<Vec<_>>(),
                "k": k + 1,
                "l": l + 1,
            })
        };
        let records: Vec<Value> = self
            .records
            .iter()
            .map(|r| {
                let mut v = label(&r.partition);
                let obj = v.as_object_mut().expect("object");
                obj.insert("F_ct".into(), json!(r.f_ct));
                obj.insert("F_no_control".into(), json!(r.f_no_control));
                obj.insert("f_no_control".into(), json!(r.f_frac_no_control));
                obj.insert("P".into(), json!(r.power));
                v
            })
            .collect();
        json!({
            "n": self.n_qubits,
            "partitions": records,
            "minimal_P": self.minimal_power,
            "argmin": label(self.argmin_partition()),
            "meaningful": self.meaningful,
        })
    }
}

fn three_qubit_record(psi: &PureState, profile: &TangleProfile, j: usize) -> Result<PartitionRecord> {
    let partition = Partition::controller(j)?;
    let (k, l) = partition.workers();
    let f_ct = (2.0 + profile.partial_tangle(k, l)) / 3.0;
    let f_no_control = fidelity_from_t(&psi.reduced(&[k, l])?)?;
    Ok(PartitionRecord::new(partition, f_ct, f_no_control))
}

fn require_three(psi: &PureState, j: usize) -> Result<()> {
    if psi.n_qubits() != 3 {
        return Err(Error::Dimension(format!("expected a 3-qubit state, got {} qubits", psi.n_qubits())));
    }
    if j >= 3 {
        return Err(Error::InvalidArgument(format!("controller {j} out of range for 3 qubits")));
    }
    Ok(())
}

/// `F_ct^j = (2 + tau_kl) / 3` for controller `j` of a three-qubit state.
pub fn fct_three_qubit(psi: &PureState, j: usize) -> Result<f64> {
    require_three(psi, j)?;
    let profile = TangleProfile::new(psi)?;
    let (k, l) = crate::measures::others(j);
    Ok((2.0 + profile.partial_tangle(k, l)) / 3.0)
}

/// `P^j = F_ct^j - (3 + ||T^j||_1) / 6` for controller `j`.
pub fn control_power(psi: &PureState, j: usize) -> Result<f64> {
    require_three(psi, j)?;
    let profile = TangleProfile::new(psi)?;
    Ok(three_qubit_record(psi, &profile, j)?.power)
}

/// Generic three-qubit path: tangles for `F_ct`, correlation matrices for
/// `F(rho_kl)`.
pub fn three_qubit_report(psi: &PureState) -> Result<ControlReport> {
    if psi.n_qubits() != 3 {
        return Err(Error::Dimension(format!("expected a 3-qubit state, got {} qubits", psi.n_qubits())));
    }
    let profile = TangleProfile::new(psi)?;
    let records = (0..3).map(|j| three_qubit_record(psi, &profile, j)).collect::<Result<Vec<_>>>()?;
    Ok(ControlReport::from_records(3, records))
}

/// Minimal control power over all partitions.
///
/// Three-qubit states go through [`three_qubit_report`]. Larger states must
/// belong to the GHZ or W-type family; anything else needs the numeric
/// oracle in [`crate::simkit`].
pub fn minimal_control_power(psi: &PureState) -> Result<ControlReport> {
    match psi.n_qubits() {
        n if n < 3 => Err(Error::Dimension(format!("control power needs at least 3 qubits, got {n}"))),
        3 => three_qubit_report(psi),
        n => match detect_family(psi, FAMILY_TOL) {
            Some(Family::Ghz { a, b }) => ghz_closed_form(n, a, b),
            Some(Family::WType { alphas }) => w_ntype_closed_form(&alphas),
            None => Err(Error::Unsupported(format!(
                "{n}-qubit state outside the GHZ and W-type families has no closed form; use the numeric oracle"
            ))),
        },
    }
}

/// GHZ family `a|0..0> + b|1..1>`: every partition has
/// `F_ct = 2(|a||b| + 1)/3`, `F(rho_kl) = 2/3`, `P = 2|a||b|/3`.
pub fn ghz_closed_form(n: usize, a: C64, b: C64) -> Result<ControlReport> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("GHZ family needs n >= 3, got {n}")));
    }
    let norm_sq = a.norm_sqr() + b.norm_sqr();
    if (norm_sq - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm_sq });
    }
    let ab = a.norm() * b.norm();
    let records = Partition::all(n)?
        .into_iter()
        .map(|p| PartitionRecord::new(p, 2.0 * (ab + 1.0) / 3.0, CLASSICAL_FIDELITY))
        .collect();
    Ok(ControlReport::from_records(n, records))
}

/// Coefficient of the W-class representative attached to qubit `q`
/// (`l1`, `l2`, `l3` for qubits 0, 1, 2).
fn w_class_coefficient(lambdas: &[f64; 4], q: usize) -> f64 {
    lambdas[q + 1]
}

/// Larger of the two coupled-sign products
/// `(l0^2 + (-lj + lk + ll)^2)(l0^2 + (lj + lk + ll)^2)` and
/// `(l0^2 + (lj - lk + ll)^2)(l0^2 + (lj + lk - ll)^2)`.
pub fn w_class_a(l0: f64, lj: f64, lk: f64, ll: f64) -> f64 {
    let l0s = l0 * l0;
    let upper = (l0s + (-lj + lk + ll).powi(2)) * (l0s + (lj + lk + ll).powi(2));
    let lower = (l0s + (lj - lk + ll).powi(2)) * (l0s + (lj + lk - ll).powi(2));
    upper.max(lower)
}

/// Agreement required between the closed-form `F(rho_kl)` and the
/// correlation-matrix value on the constructed state.
pub const W_CLASS_CHECK_TOL: f64 = 1e-9;

/// W-class closed form for `l0|100> + l1|000> + l2|110> + l3|101>`:
/// `||T^j||_1 = 2 lk ll + sqrt(A_j)`, `F_ct^j = (2 lk ll + 2)/3`.
///
/// Each closed-form `F(rho_kl)` is checked against the trace norm of the
/// correlation matrix of the explicitly built state; a mismatch panics.
pub fn wclass_closed_form(lambdas: [f64; 4]) -> Result<ControlReport> {
    let [l0, l1, l2, l3] = lambdas;
    let psi = make_w_class(l0, l1, l2, l3)?;
    let mut records = Vec::with_capacity(3);
    for j in 0..3 {
        let partition = Partition::controller(j)?;
        let (k, l) = partition.workers();
        let (lj, lk, ll) = (
            w_class_coefficient(&lambdas, j),
            w_class_coefficient(&lambdas, k),
            w_class_coefficient(&lambdas, l),
        );
        let norm_t = 2.0 * lk * ll + w_class_a(l0, lj, lk, ll).sqrt();
        let f_no_control = (3.0 + norm_t) / 6.0;
        let direct = fidelity_from_t(&psi.reduced(&[k, l])?)?;
        assert!(
            (f_no_control - direct).abs() <= W_CLASS_CHECK_TOL,
            "closed-form F(rho_kl) {f_no_control} disagrees with correlation matrix value {direct} for {lambdas:?}, j = {j}"
        );
        records.push(PartitionRecord::new(partition, (2.0 * lk * ll + 2.0) / 3.0, f_no_control));
    }
    Ok(ControlReport::from_records(3, records))
}

/// W-type closed form for `sum_i alpha_i |0..1_i..0>`:
/// `F_ct^J = (2|a_k||a_l| + 2)/3` and
/// `||T^J||_1 = 4|a_k||a_l| + | |a_J|^2 - |a_k|^2 - |a_l|^2 |`, where `|a_J|^2`
/// is the weight on the controllers. The power is their difference,
/// `(1 - |1 - 2(|a_k|^2 + |a_l|^2)|) / 6`.
pub fn w_ntype_closed_form(alphas: &[C64]) -> Result<ControlReport> {
    let n = alphas.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("W-type family needs n >= 3, got {n}")));
    }
    let weights: Vec<f64> = alphas.iter().map(|a| a.norm_sqr()).collect();
    let norm_sq: f64 = weights.iter().sum();
    if (norm_sq - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm_sq });
    }
    let records = Partition::all(n)?
        .into_iter()
        .map(|p| {
            let (k, l) = p.workers();
            let ak_al = alphas[k].norm() * alphas[l].norm();
            let controller_weight: f64 = p.controllers().iter().map(|&q| weights[q]).sum();
            let norm_t = 4.0 * ak_al + (controller_weight - weights[k] - weights[l]).abs();
            PartitionRecord::new(p, (2.0 * ak_al + 2.0) / 3.0, (3.0 + norm_t) / 6.0)
        })
        .collect();
    Ok(ControlReport::from_records(n, records))
}

/// `min over pairs of (1 + |1 - 2(|a_k|^2 + |a_l|^2)|) / 6`.
///
/// This "plus" form is not `F_ct - F(rho_kl)` (that is the "minus" form used
/// by [`w_ntype_closed_form`]); the two only meet when some pair carries
/// exactly half the weight. Kept so comparison tables can show both.
pub fn w_ntype_plus_form(alphas: &[C64]) -> f64 {
    let w: Vec<f64> = alphas.iter().map(|a| a.norm_sqr()).collect();
    let mut best = f64::INFINITY;
    for k in 0..w.len() {
        for l in k + 1..w.len() {
            best = best.min((1.0 + (1.0 - 2.0 * (w[k] + w[l])).abs()) / 6.0);
        }
    }
    best
}
