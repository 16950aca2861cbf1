use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::circuit::Unitary2;

use super::SimError;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Exact `2^n × 2^n` density matrix, stored row-major.
///
/// Register position `k` maps to bit `n − 1 − k` of the basis index, so a
/// basis index printed in binary reads qubits in register order.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// `|0…0⟩⟨0…0|`.
    pub fn zero_state(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut data = vec![ZERO; dim * dim];
        data[0] = Complex64::new(1.0, 0.0);
        Self {
            n_qubits,
            dim,
            data,
        }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut data = vec![ZERO; dim * dim];
        for x in 0..dim {
            data[x * dim + x] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Self {
            n_qubits,
            dim,
            data,
        }
    }

    /// `|ψ⟩⟨ψ|` for a normalised state vector of length `2^n`.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self, SimError> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() {
            return Err(SimError::Dimension(dim));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        let mut data = vec![ZERO; dim * dim];
        for (x, ax) in amplitudes.iter().enumerate() {
            for (y, ay) in amplitudes.iter().enumerate() {
                data[x * dim + y] = ax * ay.conj();
            }
        }
        Ok(Self {
            n_qubits,
            dim,
            data,
        })
    }

    /// Row-major entries; `data.len()` must be `4^n`.
    pub fn from_entries(n_qubits: usize, data: Vec<Complex64>) -> Result<Self, SimError> {
        let dim = 1usize << n_qubits;
        if data.len() != dim * dim {
            return Err(SimError::Dimension(data.len()));
        }
        Ok(Self {
            n_qubits,
            dim,
            data,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    fn mask(&self, position: usize) -> usize {
        1 << (self.n_qubits - 1 - position)
    }

    fn check_position(&self, position: usize) -> Result<(), SimError> {
        if position >= self.n_qubits {
            Err(SimError::PositionOutOfRange {
                position,
                n_qubits: self.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// `ρ → U ρ U†` on one qubit.
    pub fn apply_unitary(&mut self, u: &Unitary2, position: usize) -> Result<(), SimError> {
        self.check_position(position)?;
        self.conjugate_in_place(u, position);
        Ok(())
    }

    fn conjugate_in_place(&mut self, u: &Unitary2, position: usize) {
        let m = self.mask(position);
        let dim = self.dim;
        let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
        // Left multiplication: mixes rows x and x|m.
        for x in (0..dim).filter(|x| x & m == 0) {
            let (r0, r1) = (x * dim, (x | m) * dim);
            for y in 0..dim {
                let a = self.data[r0 + y];
                let b = self.data[r1 + y];
                self.data[r0 + y] = u00 * a + u01 * b;
                self.data[r1 + y] = u10 * a + u11 * b;
            }
        }
        // Right multiplication by U†: mixes columns y and y|m.
        let (c00, c01, c10, c11) = (u00.conj(), u01.conj(), u10.conj(), u11.conj());
        for x in 0..dim {
            let row = x * dim;
            for y in (0..dim).filter(|y| y & m == 0) {
                let a = self.data[row + y];
                let b = self.data[row + (y | m)];
                self.data[row + y] = a * c00 + b * c01;
                self.data[row + (y | m)] = a * c10 + b * c11;
            }
        }
    }

    /// CNOT as a basis permutation.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), SimError> {
        self.check_position(control)?;
        self.check_position(target)?;
        if control == target {
            return Err(SimError::SameOperands(control));
        }
        let (mc, mt) = (self.mask(control), self.mask(target));
        let perm = |x: usize| if x & mc != 0 { x ^ mt } else { x };
        let dim = self.dim;
        let old = self.data.clone();
        for x in 0..dim {
            let px = perm(x) * dim;
            for y in 0..dim {
                self.data[x * dim + y] = old[px + perm(y)];
            }
        }
        Ok(())
    }

    /// `ρ → Σ K ρ K†` with single-qubit Kraus operators.
    pub fn apply_kraus(&mut self, ops: &[Unitary2], position: usize) -> Result<(), SimError> {
        self.check_position(position)?;
        match ops {
            [] => return Err(SimError::EmptyChannel),
            [single] => {
                self.conjugate_in_place(single, position);
                return Ok(());
            }
            _ => {}
        }
        let original = self.data.clone();
        let mut acc = vec![ZERO; original.len()];
        for k in ops {
            self.data.copy_from_slice(&original);
            self.conjugate_in_place(k, position);
            for (a, v) in acc.iter_mut().zip(&self.data) {
                *a += v;
            }
        }
        self.data = acc;
        Ok(())
    }

    /// `ρ → (1 − p) ρ + p · Tr_q(ρ) ⊗ I/2`.
    pub fn depolarize(&mut self, p: f64, position: usize) -> Result<(), SimError> {
        self.check_position(position)?;
        if p == 0.0 {
            return Ok(());
        }
        let m = self.mask(position);
        self.depolarize_mask(p, m, &[0, m]);
        Ok(())
    }

    /// `ρ → (1 − p) ρ + p · Tr_ab(ρ) ⊗ I/4`.
    pub fn depolarize_pair(&mut self, p: f64, a: usize, b: usize) -> Result<(), SimError> {
        self.check_position(a)?;
        self.check_position(b)?;
        if a == b {
            return Err(SimError::SameOperands(a));
        }
        if p == 0.0 {
            return Ok(());
        }
        let (ma, mb) = (self.mask(a), self.mask(b));
        self.depolarize_mask(p, ma | mb, &[0, ma, mb, ma | mb]);
        Ok(())
    }

    fn depolarize_mask(&mut self, p: f64, mask: usize, patterns: &[usize]) {
        let dim = self.dim;
        let share = p / patterns.len() as f64;
        let old = self.data.clone();
        for x in 0..dim {
            for y in 0..dim {
                let mut v = old[x * dim + y] * (1.0 - p);
                if x & mask == y & mask {
                    let (xr, yr) = (x & !mask, y & !mask);
                    let traced: Complex64 = patterns
                        .iter()
                        .map(|&s| old[(xr | s) * dim + (yr | s)])
                        .sum();
                    v += traced * share;
                }
                self.data[x * dim + y] = v;
            }
        }
    }

    /// Multiplies every entry by `f(x, y)`.
    pub(crate) fn scale_entries(&mut self, f: impl Fn(usize, usize) -> f64) {
        let dim = self.dim;
        for x in 0..dim {
            for y in 0..dim {
                self.data[x * dim + y] *= f(x, y);
            }
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|x| self.get(x, x)).sum()
    }

    /// Diagonal of ρ (real parts).
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim).map(|x| self.get(x, x).re).collect()
    }

    /// `|ρ_{1…1,0…0}| + |ρ_{0…0,1…1}|`.
    pub fn coherence(&self) -> f64 {
        let last = self.dim - 1;
        self.get(last, 0).norm() + self.get(0, last).norm()
    }

    /// `P_even − P_odd` of the ideal computational-basis measurement.
    pub fn parity(&self) -> f64 {
        (0..self.dim)
            .map(|x| {
                let p = self.get(x, x).re;
                if x.count_ones() % 2 == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum()
    }

    /// Largest `|ρ_xy − conj(ρ_yx)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.dim {
            for y in x..self.dim {
                worst = worst.max((self.get(x, y) - self.get(y, x).conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = DMatrix::from_fn(self.dim, self.dim, |x, y| {
            (self.get(x, y) + self.get(y, x).conj()) * 0.5
        });
        m.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks Hermiticity and unit trace to `tol`, and eigenvalues ≥ `−eig_tol`.
    pub fn check_physical(&self, tol: f64, eig_tol: f64) -> Result<(), SimError> {
        let herm = self.hermiticity_error();
        let trace = self.trace();
        if herm > tol || (trace - 1.0).norm() > tol {
            return Err(SimError::Unphysical(format!(
                "hermiticity error {herm:e}, trace {trace}"
            )));
        }
        let min = self.min_eigenvalue();
        if min < -eig_tol {
            return Err(SimError::Unphysical(format!("minimum eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Reduced 2×2 state of one qubit.
    pub fn reduced(&self, position: usize) -> Result<Matrix2<Complex64>, SimError> {
        self.check_position(position)?;
        let m = self.mask(position);
        let mut out = Matrix2::zeros();
        for x in 0..self.dim {
            for y in 0..self.dim {
                if x & !m == y & !m {
                    let (i, j) = (usize::from(x & m != 0), usize::from(y & m != 0));
                    out[(i, j)] += self.get(x, y);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::analysis_rotation;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hadamard() -> Unitary2 {
        let h = c(FRAC_1_SQRT_2, 0.0);
        Unitary2::new(h, h, h, -h)
    }

    fn plus_state() -> DensityMatrix {
        DensityMatrix::from_pure(&[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap()
    }

    #[test]
    fn hadamard_twice_is_identity() {
        let mut rho = DensityMatrix::zero_state(1);
        rho.apply_unitary(&hadamard(), 0).unwrap();
        rho.apply_unitary(&hadamard(), 0).unwrap();
        let expected = DensityMatrix::zero_state(1);
        for (a, b) in rho.entries().iter().zip(expected.entries()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn cnot_truth_table() {
        // |10⟩: first register position set.
        let mut amps = vec![c(0.0, 0.0); 4];
        amps[0b10] = c(1.0, 0.0);
        let mut rho = DensityMatrix::from_pure(&amps).unwrap();
        rho.apply_cnot(0, 1).unwrap();
        assert!((rho.get(0b11, 0b11).re - 1.0).abs() < 1e-15);
        // Control clear: no flip.
        let mut amps = vec![c(0.0, 0.0); 4];
        amps[0b01] = c(1.0, 0.0);
        let mut rho = DensityMatrix::from_pure(&amps).unwrap();
        rho.apply_cnot(0, 1).unwrap();
        assert!((rho.get(0b01, 0b01).re - 1.0).abs() < 1e-15);
        assert!(rho.apply_cnot(0, 0).is_err());
        assert!(rho.apply_cnot(0, 2).is_err());
    }

    #[test]
    fn depolarizing_scales_plus_state_coherence() {
        let p = 0.23;
        let mut rho = plus_state();
        rho.depolarize(p, 0).unwrap();
        assert!((rho.get(0, 1).re - 0.5 * (1.0 - p)).abs() < 1e-15);
        assert!((rho.get(0, 0).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn depolarizing_matches_pauli_kraus_form() {
        let p = 0.3;
        let mut a = DensityMatrix::zero_state(2);
        a.apply_unitary(&analysis_rotation(0.4).matrix, 0).unwrap();
        a.apply_unitary(&hadamard(), 1).unwrap();
        a.apply_cnot(0, 1).unwrap();
        let mut b = a.clone();
        a.depolarize(p, 1).unwrap();
        let i = Unitary2::identity();
        let x = Unitary2::new(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.));
        let y = Unitary2::new(c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.));
        let z = Unitary2::new(c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.));
        let (s0, s1) = ((1.0 - 0.75 * p).sqrt(), (p / 4.0).sqrt());
        let ops = [i * c(s0, 0.), x * c(s1, 0.), y * c(s1, 0.), z * c(s1, 0.)];
        b.apply_kraus(&ops, 1).unwrap();
        for (u, v) in a.entries().iter().zip(b.entries()) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn pair_depolarizing_of_one_replaces_pair_with_identity() {
        let mut rho = DensityMatrix::zero_state(3);
        rho.apply_unitary(&hadamard(), 0).unwrap();
        rho.depolarize_pair(1.0, 1, 2).unwrap();
        let red = rho.reduced(1).unwrap();
        assert!((red[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(red[(0, 1)].norm() < 1e-15);
        assert!((rho.reduced(0).unwrap()[(0, 1)].re - 0.5).abs() < 1e-15);
        rho.check_physical(1e-12, 1e-12).unwrap();
    }

    #[test]
    fn coherence_and_parity_of_reference_states() {
        assert_eq!(DensityMatrix::maximally_mixed(3).coherence(), 0.0);
        let s = FRAC_1_SQRT_2;
        let mut amps = vec![c(0.0, 0.0); 8];
        amps[0] = c(s, 0.0);
        amps[7] = c(s, 0.0);
        let ghz = DensityMatrix::from_pure(&amps).unwrap();
        assert!((ghz.coherence() - 1.0).abs() < 1e-15);
        assert!((ghz.parity() - 0.0).abs() < 1e-15);
        assert!((DensityMatrix::zero_state(4).parity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(DensityMatrix::from_pure(&[c(1.0, 0.0); 3]).is_err());
        assert!(DensityMatrix::from_entries(1, vec![c(1.0, 0.0); 3]).is_err());
        let mut rho = DensityMatrix::zero_state(2);
        assert!(rho.apply_unitary(&hadamard(), 2).is_err());
        assert!(rho.apply_kraus(&[], 0).is_err());
    }

    #[test]
    fn unphysical_state_detected() {
        let rho = DensityMatrix::from_entries(
            1,
            vec![c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)],
        )
        .unwrap();
        assert!(rho.check_physical(1e-10, 1e-9).is_err());
        assert!(DensityMatrix::maximally_mixed(2)
            .check_physical(1e-12, 1e-12)
            .is_ok());
    }
}
