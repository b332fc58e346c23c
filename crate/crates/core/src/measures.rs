//! Entanglement and fidelity functionals on two- and three-qubit states.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::optim::{grid_max, grid_points, nelder_mead_max, NelderMeadOptions};
use crate::qlinalg::{
    hermitian_eigs, kron, paulis, re, sigma_y, su2, CMatrix, CVector, DEFAULT_TOL, I,
    ZERO,
};
use crate::states::PureState;

/// Lowest eigenvalue still accepted as "nonnegative" for a density matrix.
pub const PSD_TOL: f64 = 1e-9;

/// Checks that `rho` is a `dim x dim` density matrix.
pub fn validate_density(rho: &CMatrix, dim: usize) -> Result<()> {
    if rho.rows() != dim || rho.cols() != dim {
        return Err(Error::Dimension(format!("expected {dim}x{dim}, got {}x{}", rho.rows(), rho.cols())));
    }
    if !rho.is_hermitian(DEFAULT_TOL) {
        return Err(Error::InvalidDensity("not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr - re(1.0)).norm() > DEFAULT_TOL {
        return Err(Error::InvalidDensity(format!("trace {tr}")));
    }
    let min = *hermitian_eigs(rho)?.values.last().expect("nonempty spectrum");
    if min < -PSD_TOL {
        return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// With `rho = sum_i |v_i><v_i|` (subnormalized eigenvectors), the values
/// `lambda_i` are the singular values of the symmetric matrix
/// `v_i^T (Y (x) Y) v_j`; their squares are the eigenvalues of
/// `rho (Y (x) Y) rho* (Y (x) Y)`.
pub fn concurrence(rho: &CMatrix) -> Result<f64> {
    validate_density(rho, 4)?;
    let eig = hermitian_eigs(rho)?;
    let yy = kron(&sigma_y(), &sigma_y());
    let vs: Vec<CVector> = (0..4)
        .map(|i| {
            let w = eig.values[i].max(0.0).sqrt();
            CVector::new(eig.vector(i).entries().iter().map(|z| z * w).collect())
        })
        .collect();
    let flipped: Vec<CVector> = vs.iter().map(|v| yy.mul_vec(v)).collect();
    let tau = CMatrix::from_fn(4, 4, |i, j| {
        vs[i].entries().iter().zip(flipped[j].entries()).map(|(a, b)| a * b).sum()
    });
    let lambdas = crate::qlinalg::singular_values(&tau);
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0))
}

fn require_three_qubits(psi: &PureState) -> Result<()> {
    if psi.n_qubits() != 3 {
        return Err(Error::Dimension(format!("expected a 3-qubit state, got {} qubits", psi.n_qubits())));
    }
    Ok(())
}

fn require_qubit(q: usize) -> Result<()> {
    if q >= 3 {
        return Err(Error::InvalidArgument(format!("qubit {q} out of range for 3 qubits")));
    }
    Ok(())
}

/// Squared one-versus-rest concurrence `C^2_{j(kl)} = 4 det rho_j` of a pure
/// state.
pub fn one_side_tangle(psi: &PureState, j: usize) -> Result<f64> {
    require_qubit(j)?;
    if j >= psi.n_qubits() {
        return Err(Error::InvalidArgument(format!("qubit {j} out of range")));
    }
    let r = psi.reduced(&[j])?;
    let det = (r[(0, 0)] * r[(1, 1)] - r[(0, 1)] * r[(1, 0)]).re;
    Ok((4.0 * det).clamp(0.0, 1.0))
}

/// Concurrences and one-side tangles of a three-qubit pure state.
#[derive(Clone, Debug)]
pub struct TangleProfile {
    /// `C^2_{j(kl)}` for j = 0, 1, 2.
    pub one_side: [f64; 3],
    /// `C_{jk}` (symmetric, zero diagonal).
    pub pair_concurrence: [[f64; 3]; 3],
    /// `C^2_{j(kl)} - C^2_{jk} - C^2_{jl}` evaluated for each j.
    pub residual_by_j: [f64; 3],
}

/// Largest spread of the residual tangle over the choice of j that is still
/// accepted.
pub const TANGLE_AGREEMENT_TOL: f64 = 1e-8;

impl TangleProfile {
    pub fn new(psi: &PureState) -> Result<Self> {
        require_three_qubits(psi)?;
        let mut one_side = [0.0; 3];
        for (j, o) in one_side.iter_mut().enumerate() {
            *o = one_side_tangle(psi, j)?;
        }
        let mut pair = [[0.0; 3]; 3];
        for (j, k) in [(0, 1), (0, 2), (1, 2)] {
            let c = concurrence(&psi.reduced(&[j, k])?)?;
            pair[j][k] = c;
            pair[k][j] = c;
        }
        let mut residual_by_j = [0.0; 3];
        for j in 0..3 {
            let (k, l) = others(j);
            residual_by_j[j] = one_side[j] - pair[j][k].powi(2) - pair[j][l].powi(2);
        }
        Ok(Self { one_side, pair_concurrence: pair, residual_by_j })
    }

    pub fn residual_spread(&self) -> f64 {
        let max = self.residual_by_j.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.residual_by_j.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Three-tangle, averaged over j after asserting the three values agree.
    pub fn three_tangle(&self) -> f64 {
        let spread = self.residual_spread();
        assert!(
            spread <= TANGLE_AGREEMENT_TOL,
            "three-tangle depends on the reference qubit: {:?}",
            self.residual_by_j
        );
        self.residual_by_j.iter().sum::<f64>() / 3.0
    }

    /// Both forms of the partial tangle `tau_jk`: `sqrt(C^2_{j(kl)} - C^2_{jl})`
    /// and `sqrt(tau + C^2_{jk})`.
    pub fn partial_tangle_forms(&self, j: usize, k: usize) -> (f64, f64) {
        assert!(j < 3 && k < 3 && j != k, "need distinct qubits, got ({j}, {k})");
        let l = 3 - j - k;
        let first = (self.one_side[j] - self.pair_concurrence[j][l].powi(2)).max(0.0).sqrt();
        let second = (self.three_tangle() + self.pair_concurrence[j][k].powi(2)).max(0.0).sqrt();
        (first, second)
    }

    pub fn partial_tangle(&self, j: usize, k: usize) -> f64 {
        let (first, second) = self.partial_tangle_forms(j, k);
        assert!(
            (first - second).abs() <= TANGLE_AGREEMENT_TOL,
            "partial tangle forms disagree: {first} vs {second}"
        );
        first
    }
}

pub(crate) fn others(j: usize) -> (usize, usize) {
    match j {
        0 => (1, 2),
        1 => (0, 2),
        2 => (0, 1),
        _ => panic!("qubit {j} out of range"),
    }
}

pub fn three_tangle(psi: &PureState) -> Result<f64> {
    Ok(TangleProfile::new(psi)?.three_tangle())
}

/// Partial tangle `tau_jk` of a three-qubit pure state.
pub fn partial_tangle(psi: &PureState, j: usize, k: usize) -> Result<f64> {
    require_qubit(j)?;
    require_qubit(k)?;
    if j == k {
        return Err(Error::InvalidArgument(format!("partial tangle needs distinct qubits, got ({j}, {k})")));
    }
    Ok(TangleProfile::new(psi)?.partial_tangle(j, k))
}

/// `T[m][n] = tr(rho (sigma_m (x) sigma_n))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationMatrix(pub [[f64; 3]; 3]);

impl CorrelationMatrix {
    pub fn to_cmatrix(&self) -> CMatrix {
        CMatrix::from_fn(3, 3, |i, j| re(self.0[i][j]))
    }

    pub fn singular_values(&self) -> Vec<f64> {
        crate::qlinalg::singular_values(&self.to_cmatrix())
    }

    pub fn trace_norm(&self) -> f64 {
        self.singular_values().iter().sum()
    }

    pub fn det(&self) -> f64 {
        let t = &self.0;
        t[0][0] * (t[1][1] * t[2][2] - t[1][2] * t[2][1]) - t[0][1] * (t[1][0] * t[2][2] - t[1][2] * t[2][0])
            + t[0][2] * (t[1][0] * t[2][1] - t[1][1] * t[2][0])
    }

    pub fn max_abs_diff(&self, other: &CorrelationMatrix) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        d
    }
}

pub fn correlation_matrix(rho: &CMatrix) -> Result<CorrelationMatrix> {
    validate_density(rho, 4)?;
    let p = paulis();
    let mut t = [[0.0; 3]; 3];
    for m in 0..3 {
        for n in 0..3 {
            let v = (rho * &kron(&p[m], &p[n])).trace();
            assert!(v.im.abs() < 1e-10, "Pauli expectation with imaginary part {}", v.im);
            t[m][n] = v.re;
        }
    }
    Ok(CorrelationMatrix(t))
}

/// `(3 + ||T||_1) / 6`.
pub fn fidelity_from_t(rho: &CMatrix) -> Result<f64> {
    Ok((3.0 + correlation_matrix(rho)?.trace_norm()) / 6.0)
}

/// `(2f + 1) / 3`.
pub fn fidelity_from_f(f: f64) -> f64 {
    debug_assert!((-1e-9..=1.0 + 1e-9).contains(&f), "fully entangled fraction {f} out of range");
    (2.0 * f + 1.0) / 3.0
}

/// Columns of the magic basis:
/// `(|00>+|11>)/sqrt2, i(|00>-|11>)/sqrt2, i(|01>+|10>)/sqrt2, (|01>-|10>)/sqrt2`.
pub fn magic_basis() -> CMatrix {
    let s = re(FRAC_1_SQRT_2);
    let is = I * FRAC_1_SQRT_2;
    CMatrix::from_rows(&[
        [s, is, ZERO, ZERO],
        [ZERO, ZERO, is, s],
        [ZERO, ZERO, is, -s],
        [s, -is, ZERO, ZERO],
    ])
}

/// Fully entangled fraction, as the largest eigenvalue of the real part of
/// `rho` written in the magic basis. Maximally entangled states are exactly
/// the real unit vectors of that basis (up to phase).
pub fn fully_entangled_fraction(rho: &CMatrix) -> Result<f64> {
    validate_density(rho, 4)?;
    let mb = magic_basis();
    let in_magic = &(&mb.adjoint() * rho) * &mb;
    let real_part = CMatrix::from_fn(4, 4, |i, j| re(in_magic[(i, j)].re));
    Ok(hermitian_eigs(&real_part)?.values[0])
}

/// `(I (x) W)|Phi+>`.
pub fn maximally_entangled(w: &CMatrix) -> CVector {
    let s = FRAC_1_SQRT_2;
    let phi = CVector::new(vec![re(s), ZERO, ZERO, re(s)]);
    kron(&CMatrix::identity(2), w).mul_vec(&phi)
}

/// Fully entangled fraction by direct maximization of `<e|rho|e>` over
/// `|e> = (I (x) W(t, p, x))|Phi+>`: angle grid, then Nelder-Mead.
pub fn fef_numeric(rho: &CMatrix, grid_resolution: usize, nm: &NelderMeadOptions) -> Result<f64> {
    validate_density(rho, 4)?;
    let overlap = |x: &[f64]| {
        let e = maximally_entangled(&su2(x[0], x[1], x[2]));
        e.inner(&rho.mul_vec(&e)).re
    };
    let grid = grid_points(&[(0.0, PI / 2.0, true), (0.0, 2.0 * PI, false), (0.0, 2.0 * PI, false)], grid_resolution);
    let (mut x, mut best) = grid_max(overlap, &grid);
    for _ in 0..3 {
        let r = nelder_mead_max(overlap, &x, nm);
        let improved = r.value - best;
        if r.value > best {
            best = r.value;
            x = r.x;
        }
        if improved < 1e-13 {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::{haar_state, haar_unitary, partial_trace};
    use crate::states::{make_ghz, make_w_class};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const S3: f64 = 0.577_350_269_189_625_8;
    const S2: f64 = FRAC_1_SQRT_2;

    fn phi_plus() -> CMatrix {
        CVector::new(vec![re(S2), ZERO, ZERO, re(S2)]).projector()
    }

    fn mixed() -> CMatrix {
        CMatrix::identity(4).scale(re(0.25))
    }

    fn standard_w() -> PureState {
        make_w_class(0.0, S3, S3, S3).unwrap()
    }

    fn random_mixed(rng: &mut ChaCha8Rng) -> CMatrix {
        partial_trace(&haar_state(4, rng).projector(), 4, &[0, 1]).unwrap()
    }

    #[test]
    fn density_validation() {
        assert!(validate_density(&phi_plus(), 4).is_ok());
        assert!(matches!(validate_density(&CMatrix::identity(4), 4), Err(Error::InvalidDensity(_))));
        assert!(matches!(validate_density(&CMatrix::real_diag(&[1.5, -0.5, 0.0, 0.0]), 4), Err(Error::InvalidDensity(_))));
        assert!(matches!(validate_density(&mixed(), 2), Err(Error::Dimension(_))));
        assert!(concurrence(&CMatrix::identity(4)).is_err());
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence(&phi_plus()).unwrap() - 1.0).abs() < 1e-12);
        let w = standard_w();
        for (k, l) in [(0, 1), (0, 2), (1, 2)] {
            assert!((concurrence(&w.reduced(&[k, l]).unwrap()).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        }
        let g = make_ghz(3, re(S2), re(S2)).unwrap();
        assert!(concurrence(&g.reduced(&[1, 2]).unwrap()).unwrap() < 1e-12);
        assert_eq!(concurrence(&mixed()).unwrap(), 0.0);
    }

    #[test]
    fn concurrence_of_pure_state_matches_determinant_formula() {
        // For pure two-qubit states C = 2|ad - bc|.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let v = haar_state(2, &mut rng);
            let exact = 2.0 * (v[0] * v[3] - v[1] * v[2]).norm();
            assert!((concurrence(&v.projector()).unwrap() - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn one_side_tangle_examples() {
        let g = make_ghz(3, re(S2), re(S2)).unwrap();
        let w = standard_w();
        for j in 0..3 {
            assert!((one_side_tangle(&g, j).unwrap() - 1.0).abs() < 1e-14);
            assert_eq!(one_side_tangle(&PureState::zeros(3), j).unwrap(), 0.0);
            assert!((one_side_tangle(&w, j).unwrap() - 8.0 / 9.0).abs() < 1e-14);
        }
    }

    #[test]
    fn three_tangle_examples() {
        for &(a, b) in &[(S2, S2), (0.6, 0.8), (0.9f64.sqrt(), 0.1f64.sqrt())] {
            let g = make_ghz(3, re(a), re(b)).unwrap();
            assert!((three_tangle(&g).unwrap() - 4.0 * a * a * b * b).abs() < 1e-10);
        }
        assert!(three_tangle(&make_w_class(0.5, 0.5, 0.5, 0.5).unwrap()).unwrap().abs() < 1e-9);
        assert!(three_tangle(&standard_w()).unwrap().abs() < 1e-9);
        assert_eq!(three_tangle(&PureState::zeros(3)).unwrap(), 0.0);
        assert!(three_tangle(&PureState::zeros(4)).is_err());
    }

    #[test]
    fn partial_tangle_examples() {
        let (a, b) = (0.6, 0.8);
        let g = make_ghz(3, re(a), re(b)).unwrap();
        let w = standard_w();
        for (j, k) in [(0, 1), (1, 2), (2, 0)] {
            assert!((partial_tangle(&g, j, k).unwrap() - 2.0 * a * b).abs() < 1e-9);
            assert!((partial_tangle(&w, j, k).unwrap() - 2.0 / 3.0).abs() < 1e-9);
            assert_eq!(partial_tangle(&PureState::zeros(3), j, k).unwrap(), 0.0);
        }
        assert!(partial_tangle(&w, 1, 1).is_err());
        assert!(partial_tangle(&w, 0, 3).is_err());
    }

    #[test]
    fn correlation_matrix_examples() {
        let g = make_ghz(3, re(0.6), re(0.8)).unwrap();
        let t = correlation_matrix(&g.reduced(&[1, 2]).unwrap()).unwrap();
        assert!(t.max_abs_diff(&CorrelationMatrix([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])) < 1e-15);
        let t = correlation_matrix(&mixed()).unwrap();
        assert_eq!(t, CorrelationMatrix([[0.0; 3]; 3]));
        let t = correlation_matrix(&phi_plus()).unwrap();
        assert!((t.trace_norm() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn w_class_correlation_matrix_transcribes() {
        let (l0, l1, l2) = (0.3, 0.4, 0.5);
        let l3 = (1.0f64 - l0 * l0 - l1 * l1 - l2 * l2).sqrt();
        let psi = make_w_class(l0, l1, l2, l3).unwrap();
        let t1 = correlation_matrix(&psi.reduced(&[1, 2]).unwrap()).unwrap();
        let expected = CorrelationMatrix([
            [2.0 * l2 * l3, 0.0, 2.0 * l0 * l2],
            [0.0, 2.0 * l2 * l3, 0.0],
            [2.0 * l0 * l3, 0.0, 1.0 - 2.0 * (l2 * l2 + l3 * l3)],
        ]);
        assert!(t1.max_abs_diff(&expected) < 1e-14, "{t1:?}");
    }

    #[test]
    fn fidelity_from_t_examples() {
        let g = make_ghz(3, re(S2), re(S2)).unwrap();
        assert!((fidelity_from_t(&g.reduced(&[0, 1]).unwrap()).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        assert!((fidelity_from_t(&phi_plus()).unwrap() - 1.0).abs() < 1e-12);
        assert!((fidelity_from_t(&mixed()).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fef_examples() {
        assert!((fully_entangled_fraction(&phi_plus()).unwrap() - 1.0).abs() < 1e-14);
        assert!((fully_entangled_fraction(&mixed()).unwrap() - 0.25).abs() < 1e-15);
        let g = make_ghz(3, re(S2), re(S2)).unwrap();
        assert!((fully_entangled_fraction(&g.reduced(&[1, 2]).unwrap()).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fidelity_from_f_examples() {
        assert!((fidelity_from_f(0.5) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(fidelity_from_f(1.0), 1.0);
        assert_eq!(fidelity_from_f(0.25), 0.5);
    }

    #[test]
    fn magic_basis_is_unitary_and_maximally_entangled() {
        let mb = magic_basis();
        assert!(mb.is_unitary(1e-15));
        for col in 0..4 {
            let v = CVector::new((0..4).map(|i| mb[(i, col)]).collect());
            assert!((concurrence(&v.projector()).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fef_numeric_agrees_with_magic_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let rho = random_mixed(&mut rng);
            let exact = fully_entangled_fraction(&rho).unwrap();
            let numeric = fef_numeric(&rho, 8, &NelderMeadOptions::default()).unwrap();
            assert!((exact - numeric).abs() < 1e-6, "{exact} vs {numeric}");
        }
    }

    #[test]
    fn fef_local_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..50 {
            let rho = random_mixed(&mut rng);
            let uv = kron(&haar_unitary(2, &mut rng), &haar_unitary(2, &mut rng));
            let rotated = uv.conjugate(&rho);
            let d = fully_entangled_fraction(&rho).unwrap() - fully_entangled_fraction(&rotated).unwrap();
            assert!(d.abs() < 1e-8);
        }
    }

    #[test]
    fn fidelity_from_t_matches_fef_when_det_t_nonpositive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 200 {
            let rho = random_mixed(&mut rng);
            let t = correlation_matrix(&rho).unwrap();
            let via_f = fidelity_from_f(fully_entangled_fraction(&rho).unwrap());
            let via_t = fidelity_from_t(&rho).unwrap();
            if t.det() <= 0.0 {
                assert!((via_t - via_f).abs() < 1e-9);
                checked += 1;
            } else {
                // ||T||_1 <= 1 whenever det T > 0, and the trace-norm formula
                // then overshoots by the smallest singular value / 3.
                let sv = t.singular_values();
                assert!(t.trace_norm() <= 1.0 + 1e-9);
                assert!((via_t - via_f - sv[2] / 3.0).abs() < 1e-9);
            }
        }
    }
}
