//! Brute-force protocol simulation.
//!
//! Standard teleportation is simulated outcome by outcome (Bell measurement,
//! Pauli correction) and averaged over Haar inputs. Controlled teleportation
//! is simulated by letting the controllers measure in rotated bases and
//! scoring the conditional worker states with the magic-basis fully
//! entangled fraction. Nothing here goes through tangles or correlation
//! matrices.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ctpower::{ControlReport, PartitionRecord};
use crate::error::{Error, Result};
use crate::measures::{fidelity_from_f, fully_entangled_fraction, validate_density};
use crate::optim::{grid_points, nelder_mead_max, NelderMeadOptions};
use crate::qlinalg::{haar_vector, kron, paulis, re, su2, CMatrix, CVector, C64, I, ONE, ZERO};
use crate::states::{Partition, PureState};

/// Outcomes rarer than this are dropped from controlled-teleportation sums.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-12;
/// Largest controller set the oracle will enumerate.
pub const MAX_ORACLE_CONTROLLERS: usize = 3;

const MC_CHUNK: usize = 4096;
const MAX_ASCENT_ROUNDS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Points per angle axis in the seeding grid.
    pub grid_resolution: usize,
    /// Nelder-Mead iteration cap.
    pub refinement_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub mc_samples: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    /// Coordinate-ascent stopping threshold on the objective.
    pub tolerance: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            mc_samples: 100_000,
            optimizer: OptimizerConfig { grid_resolution: 16, refinement_iterations: 500 },
            seed: 0,
            tolerance: 1e-10,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mc_samples == 0 {
            return Err(Error::InvalidArgument("mc_samples must be positive".into()));
        }
        if self.optimizer.grid_resolution < 8 {
            return Err(Error::InvalidArgument(format!(
                "grid_resolution must be at least 8, got {}",
                self.optimizer.grid_resolution
            )));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::InvalidArgument("tolerance must be non-negative".into()));
        }
        Ok(())
    }

    fn nelder_mead(&self) -> NelderMeadOptions {
        NelderMeadOptions { max_iterations: self.optimizer.refinement_iterations, ..Default::default() }
    }

    fn angle_grid(&self) -> Vec<Vec<f64>> {
        grid_points(ANGLE_RANGES, self.optimizer.grid_resolution)
    }
}

const ANGLE_RANGES: &[(f64, f64, bool)] = &[(0.0, PI / 2.0, true), (0.0, 2.0 * PI, false), (0.0, 2.0 * PI, false)];

fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Best point of a grid, evaluated in parallel; ties go to the earliest point.
fn par_grid_max(f: impl Fn(&[f64]) -> f64 + Sync + Send, points: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let values = map_indexed(points.len(), |i| f(&points[i]));
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    (points[best].clone(), values[best])
}

/// `(I (x) sigma_t)|Phi+>` for `t = 0..4`, with `sigma_0 = I`.
pub fn bell_basis() -> [CVector; 4] {
    let s = FRAC_1_SQRT_2;
    let phi = CVector::new(vec![re(s), ZERO, ZERO, re(s)]);
    let sigmas = pauli_corrections();
    std::array::from_fn(|t| kron(&CMatrix::identity(2), &sigmas[t]).mul_vec(&phi))
}

fn pauli_corrections() -> [CMatrix; 4] {
    let [x, y, z] = paulis();
    [CMatrix::identity(2), x, y, z]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Branch {
    pub probability: f64,
    /// Fidelity of the corrected output; 0 when the branch has probability 0.
    pub fidelity: f64,
}

/// All four Bell-measurement branches of teleporting `input` through
/// `channel` (sender half first).
pub fn teleport_branches(channel: &CMatrix, input: &CVector) -> Result<[Branch; 4]> {
    validate_density(channel, 4)?;
    if input.dim() != 2 || !input.is_normalized(1e-9) {
        return Err(Error::InvalidArgument("input must be a normalized qubit state".into()));
    }
    Ok(branches_unchecked(channel, input, &bell_basis(), &pauli_corrections()))
}

fn branches_unchecked(channel: &CMatrix, input: &CVector, bell: &[CVector; 4], sigmas: &[CMatrix; 4]) -> [Branch; 4] {
    std::array::from_fn(|t| {
        // Receiver state <beta_t|_{XA} (|xi><xi| (x) rho_AB) |beta_t>_{XA}:
        // u[a] = sum_x conj(beta_t[x a]) xi[x].
        let u: [C64; 2] = std::array::from_fn(|a| (0..2).map(|x| bell[t][2 * x + a].conj() * input[x]).sum());
        let mut m = CMatrix::zeros(2, 2);
        for b in 0..2 {
            for bp in 0..2 {
                let mut acc = ZERO;
                for a in 0..2 {
                    for ap in 0..2 {
                        acc += u[a] * u[ap].conj() * channel[(2 * a + b, 2 * ap + bp)];
                    }
                }
                m[(b, bp)] = acc;
            }
        }
        let probability = m.trace().re;
        if probability < MIN_OUTCOME_PROBABILITY {
            return Branch { probability: probability.max(0.0), fidelity: 0.0 };
        }
        let corrected = sigmas[t].conjugate(&m);
        let fidelity = (input.inner(&corrected.mul_vec(input)).re / probability).clamp(0.0, 1.0);
        Branch { probability, fidelity }
    })
}

/// One run of standard teleportation: the Bell outcome is drawn from `rng`.
pub fn teleport_once<R: Rng + ?Sized>(channel: &CMatrix, input: &CVector, rng: &mut R) -> Result<f64> {
    let branches = teleport_branches(channel, input)?;
    let mut u: f64 = rng.random();
    for b in &branches {
        if u < b.probability {
            return Ok(b.fidelity);
        }
        u -= b.probability;
    }
    Ok(branches.iter().rev().find(|b| b.probability > 0.0).map_or(0.0, |b| b.fidelity))
}

/// Outcome-averaged fidelity `sum_t p_t F_t` for one input.
pub fn teleport_average(channel: &CMatrix, input: &CVector) -> Result<f64> {
    Ok(teleport_branches(channel, input)?.iter().map(|b| b.probability * b.fidelity).sum())
}

/// The six Pauli eigenstates. Averaging a fidelity over them equals the
/// Haar average, since the fidelity is quadratic in `|xi><xi|`.
pub fn pauli_eigenstates() -> [CVector; 6] {
    let s = FRAC_1_SQRT_2;
    [
        CVector::new(vec![ONE, ZERO]),
        CVector::new(vec![ZERO, ONE]),
        CVector::new(vec![re(s), re(s)]),
        CVector::new(vec![re(s), re(-s)]),
        CVector::new(vec![re(s), I * s]),
        CVector::new(vec![re(s), -I * s]),
    ]
}

fn local_unitary(x: &[f64]) -> CMatrix {
    kron(&su2(x[0], x[1], x[2]), &su2(x[3], x[4], x[5]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct McFidelity {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Exact input average at the chosen unitaries (six-state design).
    pub design_value: f64,
    /// Angles of `U_A` then `U_B`.
    pub angles: [f64; 6],
}

/// Monte-Carlo teleportation fidelity of `channel` after optimizing local
/// pre-processing `U_A (x) U_B`.
///
/// The unitaries maximize the exact six-state input average: a grid over
/// `U_B` with `U_A = I`, then Nelder-Mead over all six angles. The reported
/// estimate is an independent Haar average over `cfg.mc_samples` inputs.
pub fn mc_teleportation_fidelity(channel: &CMatrix, cfg: &ProtocolConfig) -> Result<McFidelity> {
    cfg.validate()?;
    validate_density(channel, 4)?;
    let bell = bell_basis();
    let sigmas = pauli_corrections();
    let design = pauli_eigenstates();
    let design_average = |x: &[f64]| {
        let rotated = local_unitary(x).conjugate(channel);
        design
            .iter()
            .map(|xi| branches_unchecked(&rotated, xi, &bell, &sigmas).iter().map(|b| b.probability * b.fidelity).sum::<f64>())
            .sum::<f64>()
            / design.len() as f64
    };

    let grid: Vec<Vec<f64>> =
        cfg.angle_grid().into_iter().map(|b| vec![0.0, 0.0, 0.0, b[0], b[1], b[2]]).collect();
    let (mut x, mut best) = par_grid_max(design_average, &grid);
    let nm = cfg.nelder_mead();
    for _ in 0..3 {
        let r = nelder_mead_max(design_average, &x, &nm);
        let gain = r.value - best;
        if r.value > best {
            best = r.value;
            x = r.x;
        }
        if gain < 1e-13 {
            break;
        }
    }

    let rotated = local_unitary(&x).conjugate(channel);
    let chunks = cfg.mc_samples.div_ceil(MC_CHUNK);
    let partial = map_indexed(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(c as u64);
        let count = MC_CHUNK.min(cfg.mc_samples - c * MC_CHUNK);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..count {
            let xi = haar_vector(2, &mut rng);
            let f: f64 = branches_unchecked(&rotated, &xi, &bell, &sigmas).iter().map(|b| b.probability * b.fidelity).sum();
            sum += f;
            sum_sq += f * f;
        }
        (sum, sum_sq)
    });
    let (sum, sum_sq) = partial.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let n = cfg.mc_samples as f64;
    let mean = sum / n;
    let stderr = if cfg.mc_samples > 1 {
        ((sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(McFidelity {
        estimate: mean,
        stderr,
        samples: cfg.mc_samples,
        design_value: best,
        angles: std::array::from_fn(|i| x[i]),
    })
}

/// How controller outcomes are weighted in the controlled fidelity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    /// `prod_i <t_i|U_i rho_{j_i} U_i^dagger|t_i>`: product of single-qubit
    /// marginals, exactly as the controlled-fidelity definition is written.
    ProductMarginals,
    /// True joint probability of the outcome string.
    Joint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerOutcome {
    /// Outcome bit of each controller, in controller order.
    pub bits: Vec<u8>,
    pub product_weight: f64,
    pub joint_probability: f64,
    /// Normalized worker state; `None` below [`MIN_OUTCOME_PROBABILITY`].
    pub conditional: Option<CMatrix>,
}

/// Precomputed projection data for one state and partition.
struct Projector {
    amplitudes: Vec<C64>,
    m: usize,
    /// `index[c][w]`: basis index with controller bits `c` and worker bits `w`.
    index: Vec<[usize; 4]>,
    marginals: Vec<CMatrix>,
}

impl Projector {
    fn new(psi: &PureState, partition: &Partition) -> Result<Self> {
        let n = psi.n_qubits();
        if partition.n_qubits() != n {
            return Err(Error::InvalidPartition(format!(
                "partition is for {} qubits, state has {n}",
                partition.n_qubits()
            )));
        }
        let controllers = partition.controllers();
        let m = controllers.len();
        if m > MAX_ORACLE_CONTROLLERS {
            return Err(Error::Budget(format!(
                "oracle enumerates at most {MAX_ORACLE_CONTROLLERS} controllers, partition has {m}"
            )));
        }
        let (k, l) = partition.workers();
        let bit = |q: usize| 1usize << (n - 1 - q);
        let index = (0..1usize << m)
            .map(|c| {
                let base: usize = (0..m).filter(|i| c >> (m - 1 - i) & 1 == 1).map(|i| bit(controllers[i])).sum();
                std::array::from_fn(|w| base + if w & 2 != 0 { bit(k) } else { 0 } + if w & 1 != 0 { bit(l) } else { 0 })
            })
            .collect();
        let marginals = controllers.iter().map(|&q| psi.reduced(&[q])).collect::<Result<Vec<_>>>()?;
        Ok(Self { amplitudes: psi.amplitudes().entries().to_vec(), m, index, marginals })
    }

    /// Unnormalized worker vector for outcome string `t`, each controller
    /// projected onto `<t_i| U_i`.
    fn project(&self, unitaries: &[CMatrix], t: usize) -> [C64; 4] {
        let m = self.m;
        let mut out = [ZERO; 4];
        for (c, idx) in self.index.iter().enumerate() {
            let mut coef = ONE;
            for (i, u) in unitaries.iter().enumerate() {
                let ti = t >> (m - 1 - i) & 1;
                let ci = c >> (m - 1 - i) & 1;
                coef *= u[(ti, ci)];
            }
            for w in 0..4 {
                out[w] += coef * self.amplitudes[idx[w]];
            }
        }
        out
    }

    fn product_weight(&self, unitaries: &[CMatrix], t: usize) -> f64 {
        let m = self.m;
        (0..m)
            .map(|i| {
                let ti = t >> (m - 1 - i) & 1;
                unitaries[i].conjugate(&self.marginals[i])[(ti, ti)].re
            })
            .product()
    }

    fn outcomes(&self, unitaries: &[CMatrix]) -> Vec<ControllerOutcome> {
        let m = self.m;
        (0..1usize << m)
            .map(|t| {
                let phi = self.project(unitaries, t);
                let joint: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
                let conditional = (joint >= MIN_OUTCOME_PROBABILITY)
                    .then(|| CVector::new(phi.to_vec()).projector().scale(re(1.0 / joint)));
                ControllerOutcome {
                    bits: (0..m).map(|i| (t >> (m - 1 - i) & 1) as u8).collect(),
                    product_weight: self.product_weight(unitaries, t),
                    joint_probability: joint,
                    conditional,
                }
            })
            .collect()
    }

    fn objective(&self, unitaries: &[CMatrix], weighting: Weighting) -> f64 {
        self.outcomes(unitaries)
            .iter()
            .map(|o| match &o.conditional {
                None => 0.0,
                Some(rho) => {
                    let w = match weighting {
                        Weighting::ProductMarginals => o.product_weight,
                        Weighting::Joint => o.joint_probability,
                    };
                    let f = fully_entangled_fraction(rho).expect("conditional state is a density matrix");
                    w * fidelity_from_f(f)
                }
            })
            .sum()
    }
}

fn unitaries_from(angles: &[f64]) -> Vec<CMatrix> {
    angles.chunks(3).map(|a| su2(a[0], a[1], a[2])).collect()
}

/// Measurement outcomes of the controllers of `partition`, controller `i`
/// measuring in the basis `{U_i^dagger |0>, U_i^dagger |1>}`.
pub fn controller_outcomes(psi: &PureState, partition: &Partition, unitaries: &[CMatrix]) -> Result<Vec<ControllerOutcome>> {
    let p = Projector::new(psi, partition)?;
    if unitaries.len() != p.m || unitaries.iter().any(|u| u.rows() != 2 || !u.is_unitary(1e-9)) {
        return Err(Error::InvalidArgument(format!("need {} single-qubit unitaries", p.m)));
    }
    Ok(p.outcomes(unitaries))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    /// Maximized controlled fidelity under the requested weighting.
    pub value: f64,
    /// The other weighting evaluated at the same unitaries.
    pub alternate_value: f64,
    pub weighting: Weighting,
    /// Three angles per controller.
    pub angles: Vec<f64>,
    /// Coordinate-ascent rounds (1 for a single controller).
    pub rounds: usize,
    pub converged: bool,
    pub evaluations: usize,
}

/// Controlled fidelity of a three-qubit state with controller `j`.
pub fn ct_fidelity_oracle(psi: &PureState, j: usize, cfg: &ProtocolConfig) -> Result<f64> {
    if psi.n_qubits() != 3 {
        return Err(Error::Dimension(format!("expected a 3-qubit state, got {} qubits", psi.n_qubits())));
    }
    if j >= 3 {
        return Err(Error::InvalidArgument(format!("controller {j} out of range for 3 qubits")));
    }
    Ok(ct_fidelity_oracle_detailed(psi, &Partition::controller(j)?, cfg, Weighting::ProductMarginals)?.value)
}

/// Controlled fidelity for an arbitrary partition with at most three
/// controllers, outcomes weighted by products of single-qubit marginals.
///
/// With more than one controller this is coordinate ascent and so a lower
/// bound on the true maximum.
pub fn ct_fidelity_oracle_n(psi: &PureState, partition: &Partition, cfg: &ProtocolConfig) -> Result<f64> {
    Ok(ct_fidelity_oracle_detailed(psi, partition, cfg, Weighting::ProductMarginals)?.value)
}

/// Full oracle run. All controllers start from the best shared unitary on
/// the angle grid; each is then refined by Nelder-Mead with the others held
/// fixed, cycling until a round gains less than `cfg.tolerance`.
pub fn ct_fidelity_oracle_detailed(
    psi: &PureState,
    partition: &Partition,
    cfg: &ProtocolConfig,
    weighting: Weighting,
) -> Result<OracleResult> {
    cfg.validate()?;
    let proj = Projector::new(psi, partition)?;
    let m = proj.m;
    let alternate = match weighting {
        Weighting::ProductMarginals => Weighting::Joint,
        Weighting::Joint => Weighting::ProductMarginals,
    };
    if m == 0 {
        let value = proj.objective(&[], weighting);
        let alternate_value = proj.objective(&[], alternate);
        return Ok(OracleResult { value, alternate_value, weighting, angles: vec![], rounds: 0, converged: true, evaluations: 1 });
    }

    let grid = cfg.angle_grid();
    let shared = |a: &[f64]| {
        let u = su2(a[0], a[1], a[2]);
        proj.objective(&vec![u; m], weighting)
    };
    let (seed, mut best) = par_grid_max(shared, &grid);
    let mut evaluations = grid.len();
    let mut angles: Vec<f64> = seed.iter().copied().cycle().take(3 * m).collect();
    let nm = cfg.nelder_mead();

    let mut rounds = 0;
    let mut converged = false;
    while rounds < MAX_ASCENT_ROUNDS {
        rounds += 1;
        let start = best;
        for i in 0..m {
            let f = |a: &[f64]| {
                let mut trial = angles.clone();
                trial[3 * i..3 * i + 3].copy_from_slice(a);
                proj.objective(&unitaries_from(&trial), weighting)
            };
            let r = nelder_mead_max(f, &angles[3 * i..3 * i + 3], &nm);
            evaluations += r.evaluations;
            if r.value > best {
                best = r.value;
                angles[3 * i..3 * i + 3].copy_from_slice(&r.x);
            }
        }
        if best - start < cfg.tolerance.max(1e-13) {
            converged = true;
            break;
        }
    }
    let alternate_value = proj.objective(&unitaries_from(&angles), alternate);
    Ok(OracleResult { value: best, alternate_value, weighting, angles, rounds, converged, evaluations })
}

/// Control report computed entirely by simulation: oracle `F_ct` and
/// `F(rho_kl)` from the magic-basis fully entangled fraction. Needs every
/// partition to have at most three controllers, i.e. `n <= 5`.
pub fn oracle_control_report(psi: &PureState, cfg: &ProtocolConfig) -> Result<ControlReport> {
    let n = psi.n_qubits();
    let records = Partition::all(n)?
        .into_iter()
        .map(|p| {
            let f_ct = ct_fidelity_oracle_n(psi, &p, cfg)?;
            let (k, l) = p.workers();
            let f_no_control = fidelity_from_f(fully_entangled_fraction(&psi.reduced(&[k, l])?)?);
            Ok(PartitionRecord::new(p, f_ct, f_no_control))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ControlReport::from_records(n, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{fidelity_from_t, partial_tangle};
    use crate::qlinalg::{c, haar_mixed, haar_state};
    use crate::states::{make_ghz, make_w_class, make_w_ntype};

    const S2: f64 = FRAC_1_SQRT_2;
    const S3: f64 = 0.577_350_269_189_625_8;

    fn quick() -> ProtocolConfig {
        ProtocolConfig { mc_samples: 20_000, ..Default::default() }
    }

    fn phi_plus() -> CMatrix {
        CVector::new(vec![re(S2), ZERO, ZERO, re(S2)]).projector()
    }

    #[test]
    fn config_validation() {
        assert!(ProtocolConfig::default().validate().is_ok());
        assert!(ProtocolConfig { mc_samples: 0, ..Default::default() }.validate().is_err());
        let mut cfg = ProtocolConfig::default();
        cfg.optimizer.grid_resolution = 7;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn perfect_channel_teleports_every_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let xi = haar_vector(2, &mut rng);
            for b in teleport_branches(&phi_plus(), &xi).unwrap() {
                assert!((b.probability - 0.25).abs() < 1e-12);
                assert!((b.fidelity - 1.0).abs() < 1e-12);
            }
            assert!((teleport_once(&phi_plus(), &xi, &mut rng).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn maximally_mixed_channel_gives_one_half() {
        let rho = CMatrix::identity(4).scale(re(0.25));
        for xi in pauli_eigenstates() {
            assert!((teleport_average(&rho, &xi).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn branch_probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let rho = haar_mixed(2, &mut rng);
            let xi = haar_vector(2, &mut rng);
            let total: f64 = teleport_branches(&rho, &xi).unwrap().iter().map(|b| b.probability).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert!(teleport_branches(&CMatrix::identity(4), &CVector::basis(2, 0)).is_err());
        assert!(teleport_branches(&phi_plus(), &CVector::new(vec![ONE, ONE])).is_err());
    }

    #[test]
    fn teleport_once_samples_branches() {
        // Channel |00>: outcomes split between fidelity |<xi|0>|^2-type values;
        // the sampled mean must approach the branch average.
        let rho = CVector::basis(4, 0).projector();
        let xi = CVector::new(vec![re(0.6), c(0.0, 0.8)]);
        let exact = teleport_average(&rho, &xi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40_000;
        let mean: f64 = (0..n).map(|_| teleport_once(&rho, &xi, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - exact).abs() < 5e-3, "{mean} vs {exact}");
    }

    #[test]
    fn design_average_matches_haar_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = haar_mixed(2, &mut rng);
        let design: f64 =
            pauli_eigenstates().iter().map(|xi| teleport_average(&rho, xi).unwrap()).sum::<f64>() / 6.0;
        let n = 100_000;
        let haar: f64 = (0..n).map(|_| teleport_average(&rho, &haar_vector(2, &mut rng)).unwrap()).sum::<f64>() / n as f64;
        assert!((design - haar).abs() < 3e-3, "{design} vs {haar}");
    }

    #[test]
    fn mc_fidelity_examples() {
        let r = mc_teleportation_fidelity(&phi_plus(), &quick()).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-9 && r.stderr < 1e-9);

        let w = make_w_class(0.0, S3, S3, S3).unwrap();
        let r = mc_teleportation_fidelity(&w.reduced(&[1, 2]).unwrap(), &quick()).unwrap();
        // Closed form (2/3 + sqrt(A) + 3)/6 with A = 1.
        let target = (2.0 / 3.0 + 1.0 + 3.0) / 6.0;
        assert!((r.estimate - target).abs() <= 3.0 * r.stderr + 1e-12, "{} +- {} vs {target}", r.estimate, r.stderr);
        assert!((r.design_value - target).abs() < 1e-9);

        let g = make_ghz(3, re(S2), re(S2)).unwrap();
        let r = mc_teleportation_fidelity(&g.reduced(&[0, 1]).unwrap(), &quick()).unwrap();
        assert!((r.design_value - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn mc_fidelity_is_seed_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = haar_mixed(2, &mut rng);
        let cfg = ProtocolConfig { mc_samples: 10_000, seed: 9, ..Default::default() };
        let a = mc_teleportation_fidelity(&rho, &cfg).unwrap();
        let b = mc_teleportation_fidelity(&rho, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mc_fidelity_never_exceeds_correlation_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let rho = haar_mixed(2, &mut rng);
            let r = mc_teleportation_fidelity(&rho, &quick()).unwrap();
            let bound = fidelity_from_t(&rho).unwrap();
            assert!(r.estimate <= bound + 3.0 * r.stderr, "{} +- {} > {bound}", r.estimate, r.stderr);
            // The optimized protocol reaches exactly (2f + 1)/3.
            let f = fidelity_from_f(fully_entangled_fraction(&rho).unwrap());
            assert!((r.design_value - f).abs() < 1e-7, "{} vs {f}", r.design_value);
        }
    }

    #[test]
    fn ct_oracle_examples() {
        let cfg = quick();
        let ghz = make_ghz(3, re(S2), re(S2)).unwrap();
        let zero = PureState::zeros(3);
        for j in 0..3 {
            assert!((ct_fidelity_oracle(&ghz, j, &cfg).unwrap() - 1.0).abs() < 1e-6);
            assert!((ct_fidelity_oracle(&zero, j, &cfg).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        }
        assert!(ct_fidelity_oracle(&PureState::zeros(4), 0, &cfg).is_err());
    }

    #[test]
    fn ct_oracle_matches_partial_tangle_on_random_states() {
        let cfg = quick();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..4 {
            let psi = PureState::new(haar_state(3, &mut rng).into_entries()).unwrap();
            for j in 0..3 {
                let (k, l) = crate::measures::others(j);
                let expected = (2.0 + partial_tangle(&psi, k, l).unwrap()) / 3.0;
                let got = ct_fidelity_oracle(&psi, j, &cfg).unwrap();
                assert!((got - expected).abs() < 1e-5, "{got} vs {expected}");
                assert!(got >= fidelity_from_t(&psi.reduced(&[k, l]).unwrap()).unwrap() - 1e-6);
            }
        }
    }

    #[test]
    fn outcome_bookkeeping() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = PureState::new(haar_state(5, &mut rng).into_entries()).unwrap();
        for p in Partition::all(5).unwrap() {
            let us: Vec<CMatrix> = (0..3).map(|_| crate::qlinalg::haar_unitary(2, &mut rng)).collect();
            let outs = controller_outcomes(&psi, &p, &us).unwrap();
            assert_eq!(outs.len(), 8);
            let joint: f64 = outs.iter().map(|o| o.joint_probability).sum();
            let product: f64 = outs.iter().map(|o| o.product_weight).sum();
            assert!((joint - 1.0).abs() < 1e-12 && (product - 1.0).abs() < 1e-12);
            for o in &outs {
                let rho = o.conditional.as_ref().unwrap();
                assert!((rho.trace().re - 1.0).abs() < 1e-10);
                assert!(crate::qlinalg::hermitian_eigs(rho).unwrap().values[3] > -1e-10);
            }
        }
        let p6 = Partition::from_workers(6, 0, 1).unwrap();
        let psi6 = PureState::zeros(6);
        assert!(matches!(ct_fidelity_oracle_n(&psi6, &p6, &quick()), Err(Error::Budget(_))));
    }

    #[test]
    fn ct_oracle_n_ghz_family() {
        let cfg = quick();
        let (a, b) = (re(0.6), c(0.0, 0.8));
        let g = make_ghz(4, a, b).unwrap();
        let expected = 2.0 * (0.48 + 1.0) / 3.0;
        for p in Partition::all(4).unwrap() {
            let r = ct_fidelity_oracle_detailed(&g, &p, &cfg, Weighting::ProductMarginals).unwrap();
            assert!((r.value - expected).abs() < 1e-5, "{p}: {}", r.value);
            assert!((r.alternate_value - r.value).abs() < 1e-9);
        }
    }

    #[test]
    fn ct_oracle_n_w_family_under_joint_weighting() {
        let cfg = quick();
        let w4 = make_w_ntype(&[re(0.5); 4]).unwrap();
        for p in Partition::all(4).unwrap() {
            let r = ct_fidelity_oracle_detailed(&w4, &p, &cfg, Weighting::Joint).unwrap();
            assert!((r.value - 2.5 / 3.0).abs() < 1e-5, "{p}: {}", r.value);
        }
        // Product-marginal weights over-count the Bell-pair outcomes.
        let p = Partition::from_workers(4, 2, 3).unwrap();
        let literal = ct_fidelity_oracle_n(&w4, &p, &cfg).unwrap();
        assert!(literal > 2.5 / 3.0 + 1e-3, "{literal}");
    }

    #[test]
    fn ct_oracle_n_product_state() {
        let cfg = quick();
        for p in Partition::all(4).unwrap() {
            assert!((ct_fidelity_oracle_n(&PureState::zeros(4), &p, &cfg).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn oracle_report_matches_closed_form_for_ghz() {
        let g = make_ghz(4, re(S2), re(S2)).unwrap();
        let r = oracle_control_report(&g, &quick()).unwrap();
        assert!((r.minimal_power - 1.0 / 3.0).abs() < 1e-5);
        assert!(r.meaningful);
    }
}
