use std::f64::consts::FRAC_1_SQRT_2;

use ghz_core::circuit::{build_ghz, GateDurations};
use ghz_core::simulator::{
    apply_collective_dephasing, apply_delay, apply_idle_noise, run_circuit, DensityMatrix, Layout,
    QubitNoise,
};
use ghz_core::topology::{find_chain, CouplingGraph};
use ghz_core::NoiseModel;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn ghz_state(n: usize) -> DensityMatrix {
    let mut amp = vec![Complex64::new(0.0, 0.0); 1 << n];
    amp[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amp[(1 << n) - 1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    DensityMatrix::from_pure(&amp).unwrap()
}

fn max_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    a.entries()
        .iter()
        .zip(b.entries())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn idle_channels_commute_across_qubits_and_with_collective_dephasing() {
    let q = QubitNoise {
        t1_us: 30.0,
        t2_us: 20.0,
        readout_error: 0.0,
    };
    let mut a = ghz_state(3);
    let mut b = ghz_state(3);
    for pos in 0..3 {
        apply_idle_noise(&mut a, pos, 700.0, &q).unwrap();
    }
    apply_collective_dephasing(&mut a, 700.0, 25.0).unwrap();
    apply_collective_dephasing(&mut b, 700.0, 25.0).unwrap();
    for pos in (0..3).rev() {
        apply_idle_noise(&mut b, pos, 700.0, &q).unwrap();
    }
    assert!(max_diff(&a, &b) < 1e-14);
}

#[test]
fn idle_noise_composes_over_time() {
    let q = QubitNoise {
        t1_us: 12.0,
        t2_us: 9.0,
        readout_error: 0.0,
    };
    let mut once = ghz_state(2);
    apply_idle_noise(&mut once, 1, 1000.0, &q).unwrap();
    let mut split = ghz_state(2);
    for _ in 0..4 {
        apply_idle_noise(&mut split, 1, 250.0, &q).unwrap();
    }
    assert!(max_diff(&once, &split) < 1e-14);
}

#[test]
fn uncorrelated_dephasing_multiplies_coherence_decay() {
    for n in 1..=5 {
        let mut rho = ghz_state(n);
        let noise = NoiseModel::uniform(QubitNoise::dephasing(48.34)).unwrap();
        let layout = Layout::new(&(0..n as u32).collect::<Vec<_>>());
        apply_delay(&mut rho, &layout, 5000.0, &noise).unwrap();
        let want = (-(n as f64) * 5.0 / 48.34).exp();
        assert!((rho.coherence() - want).abs() < 1e-12);
        rho.check_physical(1e-12, 1e-12).unwrap();
    }
}

#[test]
fn amplitude_damping_relaxes_population() {
    let mut rho = ghz_state(1);
    let noise = NoiseModel::uniform(QubitNoise {
        t1_us: 10.0,
        t2_us: 20.0,
        readout_error: 0.0,
    })
    .unwrap();
    apply_delay(&mut rho, &Layout::new(&[0]), 10_000.0, &noise).unwrap();
    let p1 = rho.get(1, 1).re;
    assert!((p1 - 0.5 * (-1.0f64).exp()).abs() < 1e-12);
    // T2 = 2 T1: coherence decays by exp(−t/T2) with no pure dephasing.
    assert!((rho.coherence() - (-0.5f64).exp()).abs() < 1e-12);
}

/// Monte Carlo over a global Gaussian phase: average the pure states
/// `exp(−iθ Σ Z/2)|GHZ⟩` and compare with the closed-form channel.
#[test]
fn collective_dephasing_matches_gaussian_phase_average() {
    let (t_us, t2c): (f64, f64) = (3.0, 48.34);
    let draws = 100_000;
    let normal = Normal::new(0.0, (2.0 * t_us / t2c).sqrt()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [2usize, 4] {
        // Relative phase between |1…1⟩ and |0…0⟩ under the global rotation is Nθ.
        let mut acc = Complex64::new(0.0, 0.0);
        for _ in 0..draws {
            let theta: f64 = normal.sample(&mut rng);
            acc += Complex64::from_polar(1.0, n as f64 * theta);
        }
        let mc = acc.norm() / draws as f64;
        let mut rho = ghz_state(n);
        apply_collective_dephasing(&mut rho, t_us * 1000.0, t2c).unwrap();
        let closed = (-((n * n) as f64) * t_us / t2c).exp();
        assert!((rho.coherence() - closed).abs() < 1e-12);
        let se = (0.5 / draws as f64).sqrt();
        assert!(
            (mc - closed).abs() < 5.0 * se,
            "n={n} mc={mc} closed={closed}"
        );
    }
}

#[test]
fn depolarizing_cost_per_gate() {
    let g = CouplingGraph::ibmqx5();
    let p = 0.005;
    let noise = NoiseModel::noiseless().with_gate_errors(p, p).unwrap();
    for n in 1..=6 {
        let chain = find_chain(&g, n, Some(1)).unwrap();
        let c = build_ghz(&g, &chain, GateDurations::default()).unwrap();
        let rho = run_circuit(&c, &noise).unwrap();
        rho.check_physical(1e-12, 1e-12).unwrap();
        let gates = c.gates().len() as f64;
        let coherence = rho.coherence();
        if chain.reversal_count() == 0 {
            // Each gate scales the far off-diagonal elements by exactly 1 − p.
            assert!((coherence - (1.0 - p).powf(gates)).abs() < 1e-12, "n={n}");
        } else {
            // Errors inside a reversal are partly undone by the closing
            // Hadamards, so the per-gate count bounds the loss from above.
            assert!(
                coherence > (1.0 - p).powf(gates) && coherence < 1.0,
                "n={n}"
            );
        }
        assert!(coherence >= 1.0 - gates * p, "n={n}");
    }
}
