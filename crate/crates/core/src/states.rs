//! Pure states, the GHZ / W families, controller-worker partitions and the
//! JSON state file format.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlinalg::{qubit_count, scatter_offsets, sorted_qubits, CMatrix, CVector, C64, ZERO};

/// Tolerance on the squared norm accepted by every constructor.
pub const NORM_TOL: f64 = 1e-9;

/// Normalized state vector over `n_qubits` qubits, qubit 0 most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let n_qubits = qubit_count(amplitudes.len())
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::Dimension(format!("{} amplitudes is not a power of two >= 2", amplitudes.len())))?;
        let amplitudes = CVector::new(amplitudes);
        let norm_sq = amplitudes.norm_sqr();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Computational basis state; `bits` is the basis index.
    pub fn basis(n_qubits: usize, bits: usize) -> Self {
        Self { n_qubits, amplitudes: CVector::basis(1 << n_qubits, bits) }
    }

    pub fn zeros(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.dim()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amp(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn density(&self) -> CMatrix {
        self.amplitudes.projector()
    }

    /// Reduced density matrix on `keep`, computed straight from the
    /// amplitudes. Qubit order in the result is ascending.
    pub fn reduced(&self, keep: &[usize]) -> Result<CMatrix> {
        let keep = sorted_qubits(self.n_qubits, keep)?;
        let traced: Vec<usize> = (0..self.n_qubits).filter(|q| !keep.contains(q)).collect();
        let kept_off = scatter_offsets(self.n_qubits, &keep);
        let traced_off = if traced.is_empty() { vec![0] } else { scatter_offsets(self.n_qubits, &traced) };
        let psi = self.amplitudes.entries();
        let d = kept_off.len();
        let mut out = CMatrix::zeros(d, d);
        for &t in &traced_off {
            for i in 0..d {
                let a = psi[kept_off[i] | t];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out[(i, j)] += a * psi[kept_off[j] | t].conj();
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &PureState) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .entries()
            .iter()
            .zip(other.amplitudes.entries())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn check_norm(norm_sq: f64) -> Result<()> {
    if (norm_sq - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm_sq });
    }
    Ok(())
}

/// `a|0...0> + b|1...1>` on `n >= 3` qubits.
pub fn make_ghz(n: usize, a: C64, b: C64) -> Result<PureState> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("GHZ family needs n >= 3, got {n}")));
    }
    check_norm(a.norm_sqr() + b.norm_sqr())?;
    let mut amps = vec![ZERO; 1 << n];
    amps[0] = a;
    amps[(1 << n) - 1] = b;
    PureState::new(amps)
}

/// Three-qubit W-class representative
/// `l0|100> + l1|000> + l2|110> + l3|101>` with nonnegative coefficients.
pub fn make_w_class(l0: f64, l1: f64, l2: f64, l3: f64) -> Result<PureState> {
    let l = [l0, l1, l2, l3];
    if let Some(bad) = l.iter().find(|&&x| x.is_nan() || x < 0.0) {
        return Err(Error::InvalidArgument(format!("W-class coefficients must be >= 0, got {bad}")));
    }
    check_norm(l.iter().map(|x| x * x).sum())?;
    let mut amps = vec![ZERO; 8];
    amps[0b100] = C64::new(l0, 0.0);
    amps[0b000] = C64::new(l1, 0.0);
    amps[0b110] = C64::new(l2, 0.0);
    amps[0b101] = C64::new(l3, 0.0);
    PureState::new(amps)
}

/// Basis index of the single-excitation state with the 1 on `qubit`.
pub fn excitation_index(n: usize, qubit: usize) -> usize {
    1 << (n - 1 - qubit)
}

/// Single-excitation state `sum_i alpha_i |0..1_i..0>`, `n >= 3`.
pub fn make_w_ntype(alphas: &[C64]) -> Result<PureState> {
    let n = alphas.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("W-type family needs n >= 3, got {n}")));
    }
    if n > 20 {
        return Err(Error::InvalidArgument(format!("{n} qubits is beyond the dense representation")));
    }
    check_norm(alphas.iter().map(|a| a.norm_sqr()).sum())?;
    let mut amps = vec![ZERO; 1 << n];
    for (q, &a) in alphas.iter().enumerate() {
        amps[excitation_index(n, q)] = a;
    }
    PureState::new(amps)
}

/// Closed-form families recognised by [`detect_family`].
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Ghz { a: C64, b: C64 },
    WType { alphas: Vec<C64> },
}

/// Recognises GHZ-family (support on `|0..0>`, `|1..1>`) and W-type
/// (support on single excitations) states. Amplitudes below `tol` count as
/// zero.
pub fn detect_family(state: &PureState, tol: f64) -> Option<Family> {
    let n = state.n_qubits();
    if n < 3 {
        return None;
    }
    let amps = state.amplitudes().entries();
    let last = amps.len() - 1;
    let support = |allowed: &dyn Fn(usize) -> bool| amps.iter().enumerate().all(|(i, a)| allowed(i) || a.norm() <= tol);

    if support(&|i| i == 0 || i == last) {
        return Some(Family::Ghz { a: amps[0], b: amps[last] });
    }
    if support(&|i: usize| i.count_ones() == 1) {
        let alphas = (0..n).map(|q| amps[excitation_index(n, q)]).collect();
        return Some(Family::WType { alphas });
    }
    None
}

/// Controllers `J` and worker pair `(k, l)`, `k < l`, 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    n_qubits: usize,
    controllers: Vec<usize>,
    workers: (usize, usize),
}

impl Partition {
    pub fn new(n_qubits: usize, controllers: &[usize]) -> Result<Self> {
        if n_qubits < 3 {
            return Err(Error::InvalidPartition(format!("need at least 3 qubits, got {n_qubits}")));
        }
        if controllers.len() != n_qubits - 2 {
            return Err(Error::InvalidPartition(format!(
                "{} controllers for {n_qubits} qubits (need {})",
                controllers.len(),
                n_qubits - 2
            )));
        }
        let controllers =
            sorted_qubits(n_qubits, controllers).map_err(|e| Error::InvalidPartition(e.to_string()))?;
        let rest: Vec<usize> = (0..n_qubits).filter(|q| !controllers.contains(q)).collect();
        Ok(Self { n_qubits, controllers, workers: (rest[0], rest[1]) })
    }

    pub fn from_workers(n_qubits: usize, k: usize, l: usize) -> Result<Self> {
        if k == l || k >= n_qubits || l >= n_qubits {
            return Err(Error::InvalidPartition(format!("bad worker pair ({k}, {l}) for {n_qubits} qubits")));
        }
        let controllers: Vec<usize> = (0..n_qubits).filter(|&q| q != k && q != l).collect();
        Self::new(n_qubits, &controllers)
    }

    /// Three-qubit partition with single controller `j`.
    pub fn controller(j: usize) -> Result<Self> {
        Self::new(3, &[j])
    }

    /// Every partition of `n_qubits`, controller sets in lexicographic order.
    pub fn all(n_qubits: usize) -> Result<Vec<Self>> {
        if n_qubits < 3 {
            return Err(Error::InvalidPartition(format!("need at least 3 qubits, got {n_qubits}")));
        }
        let mut out = Vec::new();
        // Enumerate worker pairs in reverse lexicographic order, which gives the
        // controller sets in lexicographic order.
        let mut pairs: Vec<(usize, usize)> =
            (0..n_qubits).flat_map(|k| (k + 1..n_qubits).map(move |l| (k, l))).collect();
        pairs.reverse();
        for (k, l) in pairs {
            out.push(Self::from_workers(n_qubits, k, l)?);
        }
        Ok(out)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn controllers(&self) -> &[usize] {
        &self.controllers
    }

    pub fn workers(&self) -> (usize, usize) {
        self.workers
    }
}

impl fmt::Display for Partition {
    /// Paper-style 1-based labels, e.g. `J={1} kl=23`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let j: Vec<String> = self.controllers.iter().map(|q| (q + 1).to_string()).collect();
        write!(f, "J={{{}}} kl={}{}", j.join(","), self.workers.0 + 1, self.workers.1 + 1)
    }
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    n: usize,
    amplitudes: Vec<[f64; 2]>,
}

pub fn state_to_json(state: &PureState) -> String {
    let file = StateFile {
        n: state.n_qubits(),
        amplitudes: state.amplitudes().entries().iter().map(|z| [z.re, z.im]).collect(),
    };
    serde_json::to_string_pretty(&file).expect("state serializes")
}

pub fn state_from_json(text: &str) -> Result<PureState> {
    let file: StateFile = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    let len = file.amplitudes.len();
    if qubit_count(len).is_none() || len < 2 {
        return Err(Error::Dimension(format!("{len} amplitudes is not a power of two >= 2")));
    }
    if file.n >= usize::BITS as usize || 1usize << file.n != len {
        return Err(Error::Dimension(format!("n = {} but {len} amplitudes", file.n)));
    }
    PureState::new(file.amplitudes.iter().map(|&[r, i]| C64::new(r, i)).collect())
}

pub fn save_state(state: &PureState, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, state_to_json(state) + "\n")?;
    Ok(())
}

pub fn load_state(path: impl AsRef<Path>) -> Result<PureState> {
    state_from_json(&fs::read_to_string(path)?)
}
