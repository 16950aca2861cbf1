//! Checks against a dense state-vector oracle that builds every gate as a
//! full Kronecker product.

use std::f64::consts::{FRAC_PI_2, PI};

use ghz_core::circuit::{analysis_rotation, build_ghz, Circuit, GateDurations, GateKind};
use ghz_core::simulator::run_circuit;
use ghz_core::topology::{ibmqx5_reference_chain, minimal_chains, CouplingGraph, QubitChain};
use ghz_core::NoiseModel;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type CMat = DMatrix<Complex64>;

fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

fn embed(u: &CMat, pos: usize, n: usize) -> CMat {
    let id = CMat::identity(2, 2);
    let mut m = CMat::identity(1, 1);
    for k in 0..n {
        m = kron(&m, if k == pos { u } else { &id });
    }
    m
}

fn cnot_full(c: usize, t: usize, n: usize) -> CMat {
    let d = 1 << n;
    let mut m = CMat::zeros(d, d);
    for x in 0..d {
        let cbit = (x >> (n - 1 - c)) & 1;
        let y = if cbit == 1 { x ^ (1 << (n - 1 - t)) } else { x };
        m[(y, x)] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Final state vector of a noiseless circuit.
fn state_vector(circuit: &Circuit) -> Vec<Complex64> {
    let n = circuit.register().len();
    let mut psi = CMat::zeros(1 << n, 1);
    psi[(0, 0)] = Complex64::new(1.0, 0.0);
    for g in circuit.gates() {
        let pos: Vec<usize> = g
            .qubits
            .iter()
            .map(|&q| circuit.position(q).unwrap())
            .collect();
        let op = match g.kind {
            GateKind::Cnot => cnot_full(pos[0], pos[1], n),
            GateKind::H | GateKind::U3 => {
                let u = g.unitary().unwrap();
                embed(&CMat::from_fn(2, 2, |i, j| u[(i, j)]), pos[0], n)
            }
            GateKind::Id | GateKind::Measure => continue,
        };
        psi = op * psi;
    }
    psi.iter().copied().collect()
}

fn ghz(n: usize) -> Circuit {
    let g = CouplingGraph::ibmqx5();
    let chain = QubitChain::new(&g, ibmqx5_reference_chain(n).unwrap()).unwrap();
    build_ghz(&g, &chain, GateDurations::default()).unwrap()
}

#[test]
fn prepared_state_is_ghz_for_reference_chains() {
    for n in 1..=8 {
        let psi = state_vector(&ghz(n));
        let d = psi.len();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (x, a) in psi.iter().enumerate() {
            let want = if x == 0 || x == d - 1 { s } else { 0.0 };
            assert!(
                (a - Complex64::new(want, 0.0)).norm() < 1e-12,
                "n={n} x={x}"
            );
        }
    }
}

#[test]
fn density_simulation_matches_state_vector_oracle() {
    for n in 1..=6 {
        let mut c = ghz(n);
        c.append_delay(2);
        c.append_analysis_and_measure(0.37 * n as f64);
        let psi = state_vector(&c);
        let rho = run_circuit(&c, &NoiseModel::noiseless()).unwrap();
        for i in 0..psi.len() {
            for j in 0..psi.len() {
                let want = psi[i] * psi[j].conj();
                assert!((rho.get(i, j) - want).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn every_minimal_chain_prepares_full_coherence() {
    let g = CouplingGraph::ibmqx5();
    for n in 1..=6 {
        for chain in minimal_chains(&g, n, None).unwrap() {
            let c = build_ghz(&g, &chain, GateDurations::default()).unwrap();
            c.check_native(&g).unwrap();
            let rho = run_circuit(&c, &NoiseModel::noiseless()).unwrap();
            assert!(
                (rho.coherence() - 1.0).abs() < 1e-12,
                "{:?}",
                chain.qubits()
            );
        }
    }
}

/// `P(φ) = Re(i^N e^{−iNφ}) = cos(N(φ − π/2))`, the parity of a GHZ state
/// rotated by `U(φ)` on every qubit.
fn parity_closed_form(n: usize, phi: f64) -> f64 {
    (n as f64 * (phi - FRAC_PI_2)).cos()
}

#[test]
fn rotated_ghz_parity_matches_closed_form() {
    for n in 1..=8 {
        for k in 0..=(4 * n) {
            let phi = PI * k as f64 / (4 * n) as f64;
            let mut c = ghz(n);
            c.append_analysis_and_measure(phi);
            let psi = state_vector(&c);
            let oracle: f64 = psi
                .iter()
                .enumerate()
                .map(|(x, a)| {
                    let sign = if x.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    sign * a.norm_sqr()
                })
                .sum();
            assert!((oracle - parity_closed_form(n, phi)).abs() < 1e-12);
            if n <= 6 {
                let rho = run_circuit(&c, &NoiseModel::noiseless()).unwrap();
                assert!((rho.parity() - oracle).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn closed_form_coincides_with_sine_only_for_n_one_mod_four() {
    for n in 1..=8usize {
        let agree = (0..50).all(|k| {
            let phi = 0.06 * k as f64;
            (parity_closed_form(n, phi) - (n as f64 * phi).sin()).abs() < 1e-12
        });
        assert_eq!(agree, n % 4 == 1, "n = {n}");
    }
}

#[test]
fn u3_parameters_reproduce_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let phi = rng.random_range(-4.0 * PI..4.0 * PI);
        let rot = analysis_rotation(phi);
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let i = Complex64::new(0.0, 1.0);
        let want = [
            [
                Complex64::new(c, 0.0),
                i * c * Complex64::from_polar(1.0, -phi),
            ],
            [
                i * c * Complex64::from_polar(1.0, phi),
                Complex64::new(c, 0.0),
            ],
        ];
        let m = rot.params.matrix();
        for r in 0..2 {
            for s in 0..2 {
                assert!((m[(r, s)] - want[r][s]).norm() < 1e-12);
                assert!((rot.matrix[(r, s)] - want[r][s]).norm() < 1e-12);
            }
        }
    }
}
