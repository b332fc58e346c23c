//! Dense complex linear algebra for the small matrices that show up here:
//! density matrices of up to ten qubits, 2x2 unitaries and 3x3 correlation
//! matrices.
//!
//! Qubit 0 is the most significant bit of a computational-basis index, so
//! `|q0 q1 q2>` maps to index `4*q0 + 2*q1 + q2`.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default tolerance for structural checks (hermiticity, normalization).
pub const DEFAULT_TOL: f64 = 1e-9;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("matrix must have positive dimensions".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows. Panics on ragged input; meant for
    /// literals in code and tests.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let cols = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            assert_eq!(row.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(row.as_ref());
        }
        Self { rows: r, cols, data }
    }

    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let converted: Vec<Vec<C64>> =
            rows.iter().map(|r| r.as_ref().iter().map(|&x| re(x)).collect()).collect();
        Self::from_rows(&converted)
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn real_diag(entries: &[f64]) -> Self {
        let e: Vec<C64> = entries.iter().map(|&x| re(x)).collect();
        Self::diag(&e)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, k: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * k).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self[(i, j)] - self[(j, i)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square() && (&self.adjoint() * self).max_abs_diff(&Self::identity(self.rows)) <= tol
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        assert_eq!(self.cols, v.dim(), "matrix-vector dimension mismatch");
        let mut out = vec![ZERO; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(v.entries()).map(|(a, b)| a * b).sum();
        }
        CVector::new(out)
    }

    /// `self * rho * self^dagger`.
    pub fn conjugate(&self, rho: &CMatrix) -> CMatrix {
        &(self * rho) * &self.adjoint()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CVector {
    data: Vec<C64>,
}

impl CVector {
    pub fn new(data: Vec<C64>) -> Self {
        Self { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { data: vec![ZERO; dim] }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.data
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// Returns `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n == 0.0 {
            return None;
        }
        Some(Self { data: self.data.iter().map(|z| z / n).collect() })
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &CVector) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|self><self|`.
    pub fn projector(&self) -> CMatrix {
        CMatrix::from_fn(self.dim(), self.dim(), |i, j| self.data[i] * self.data[j].conj())
    }

    pub fn kron(&self, other: &CVector) -> CVector {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.data {
            for b in &other.data {
                out.push(a * b);
            }
        }
        CVector::new(out)
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    CMatrix::from_fn(rows, cols, |i, j| a[(i / b.rows, j / b.cols)] * b[(i % b.rows, j % b.cols)])
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_rows(&[[ZERO, ONE], [ONE, ZERO]])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_rows(&[[ZERO, -I], [I, ZERO]])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_rows(&[[ONE, ZERO], [ZERO, -ONE]])
}

/// `[sigma_x, sigma_y, sigma_z]`.
pub fn paulis() -> [CMatrix; 3] {
    [sigma_x(), sigma_y(), sigma_z()]
}

/// Single-qubit unitary
/// `[[cos t, e^{i p} sin t], [-e^{-i x} sin t, e^{i(p-x)} cos t]]`,
/// which reaches every element of U(2) up to a global phase.
pub fn su2(theta: f64, phi: f64, chi: f64) -> CMatrix {
    let (s, co) = theta.sin_cos();
    CMatrix::from_rows(&[
        [re(co), C64::from_polar(s, phi)],
        [-C64::from_polar(s, -chi), C64::from_polar(co, phi - chi)],
    ])
}

pub(crate) fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

pub(crate) fn qubit_count(dim: usize) -> Option<usize> {
    is_power_of_two(dim).then(|| dim.trailing_zeros() as usize)
}

/// Normalizes a qubit index set: sorted, deduplicated, in range, nonempty.
pub(crate) fn sorted_qubits(n_qubits: usize, keep: &[usize]) -> Result<Vec<usize>> {
    let mut k = keep.to_vec();
    k.sort_unstable();
    k.dedup();
    if k.is_empty() {
        return Err(Error::InvalidArgument("qubit subset must be nonempty".into()));
    }
    if k.len() != keep.len() {
        return Err(Error::InvalidArgument(format!("repeated qubit in {keep:?}")));
    }
    if let Some(&q) = k.iter().find(|&&q| q >= n_qubits) {
        return Err(Error::InvalidArgument(format!("qubit {q} out of range for {n_qubits} qubits")));
    }
    Ok(k)
}

/// Scatter table: for every value of the `bits.len()`-bit local index, the
/// corresponding contribution to the global basis index.
pub(crate) fn scatter_offsets(n_qubits: usize, bits: &[usize]) -> Vec<usize> {
    let m = bits.len();
    (0..1usize << m)
        .map(|local| {
            bits.iter().enumerate().fold(0, |acc, (pos, &q)| {
                let bit = (local >> (m - 1 - pos)) & 1;
                acc | (bit << (n_qubits - 1 - q))
            })
        })
        .collect()
}

/// Reduced density matrix on the qubits in `keep` (0-based, any order; the
/// result keeps ascending qubit order).
pub fn partial_trace(rho: &CMatrix, n_qubits: usize, keep: &[usize]) -> Result<CMatrix> {
    let dim = 1usize << n_qubits;
    if rho.rows() != dim || rho.cols() != dim {
        return Err(Error::Dimension(format!(
            "{}x{} matrix is not a {n_qubits}-qubit operator",
            rho.rows(),
            rho.cols()
        )));
    }
    let keep = sorted_qubits(n_qubits, keep)?;
    let traced: Vec<usize> = (0..n_qubits).filter(|q| !keep.contains(q)).collect();
    let kept_off = scatter_offsets(n_qubits, &keep);
    let traced_off = if traced.is_empty() { vec![0] } else { scatter_offsets(n_qubits, &traced) };
    let d = kept_off.len();
    Ok(CMatrix::from_fn(d, d, |i, j| traced_off.iter().map(|&t| rho[(kept_off[i] | t, kept_off[j] | t)]).sum()))
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, idx: usize) -> CVector {
        CVector::new((0..self.vectors.rows()).map(|i| self.vectors[(i, idx)]).collect())
    }

    pub fn reconstruct(&self) -> CMatrix {
        let lambda: Vec<C64> = self.values.iter().map(|&x| re(x)).collect();
        &(&self.vectors * &CMatrix::diag(&lambda)) * &self.vectors.adjoint()
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

pub fn hermitian_eigs(m: &CMatrix) -> Result<HermitianEigen> {
    hermitian_eigs_tol(m, DEFAULT_TOL)
}

/// Cyclic complex Jacobi. `tol` is only the hermiticity check relative to the
/// matrix scale; the sweep itself runs until the off-diagonal mass is below
/// 1e-12 of the Frobenius norm (or hits the floating point floor).
pub fn hermitian_eigs_tol(m: &CMatrix, tol: f64) -> Result<HermitianEigen> {
    let scale = m.frobenius_norm().max(1.0);
    if !m.is_hermitian(tol * scale) {
        return Err(Error::NotHermitian { tol });
    }
    let n = m.rows();
    let mut a = m.clone();
    // Symmetrize exactly so the rotations see a Hermitian matrix.
    for i in 0..n {
        a[(i, i)] = re(a[(i, i)].re);
        for j in i + 1..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n);
    let threshold = 1e-12 * a.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= threshold || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / r;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // Rotation G acting on columns p, q: G = diag(1, conj(phase)) * [[c, s], [-s, c]].
                let g_pp = re(cs);
                let g_pq = re(sn);
                let g_qp = -phase.conj() * sn;
                let g_qq = phase.conj() * cs;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].re.total_cmp(&a[(x, x)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// Singular values, descending (`min(rows, cols)` of them).
///
/// One-sided Jacobi: columns are orthogonalized pairwise and the singular
/// values read off as column norms. Small singular values come out with
/// absolute accuracy near machine epsilon times the norm, which the
/// `sqrt(eig(M^dagger M))` route does not give (it loses half the digits).
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let a = if m.cols() > m.rows() { m.adjoint() } else { m.clone() };
    let (rows, cols) = (a.rows(), a.cols());
    let mut columns: Vec<Vec<C64>> = (0..cols).map(|j| (0..rows).map(|i| a[(i, j)]).collect()).collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = columns[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = columns[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = columns[p].iter().zip(&columns[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g <= f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                // Rephase column q so the overlap is real, then rotate.
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let (left, right) = columns.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (a, b) = (*x, *y * phase);
                    *x = a * cs - b * sn;
                    *y = a * sn + b * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut values: Vec<f64> =
        columns.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    values.sort_by(|x, y| y.total_cmp(x));
    values.truncate(rows.min(cols));
    values
}

/// `tr sqrt(m^dagger m)`.
pub fn trace_norm(m: &CMatrix) -> f64 {
    singular_values(m).iter().sum()
}

/// Haar-random pure state on `n_qubits` qubits.
pub fn haar_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> CVector {
    assert!(n_qubits >= 1, "need at least one qubit");
    haar_vector(1 << n_qubits, rng)
}

pub fn haar_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    loop {
        let v = CVector::new((0..dim).map(|_| gaussian_c64(rng)).collect());
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

/// Random mixed state on `n_qubits` qubits: the marginal of a Haar-random
/// pure state on twice as many qubits (Hilbert-Schmidt measure).
pub fn haar_mixed<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> CMatrix {
    let keep: Vec<usize> = (0..n_qubits).collect();
    partial_trace(&haar_state(2 * n_qubits, rng).projector(), 2 * n_qubits, &keep).expect("valid marginal")
}

/// Haar-random unitary via Gram-Schmidt on a complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
        for u in &cols {
            let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= proj * y;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    CMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}
