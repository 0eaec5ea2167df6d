//! Test-state factories.
//!
//! All random factories draw from `ChaCha8Rng::seed_from_u64(seed)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QsvdError, Result};
use crate::statevec::PureState;

const AME_6_2: &str = include_str!("../fixtures/ame_6_2.json");

fn check_dims(n_a: usize, n_b: usize) -> Result<()> {
    if n_a == 0 || n_b == 0 {
        return Err(QsvdError::InvalidBipartition { n_qubits: n_a + n_b, n_a });
    }
    Ok(())
}

fn uniform_amplitude(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-0.5..=0.5), rng.gen_range(-0.5..=0.5))
}

/// Coefficients `c_ab = x + i y` with `x, y` uniform on `[-0.5, 0.5]`, drawn
/// in basis-index order and normalized.
pub fn random_state(n_a: usize, n_b: usize, seed: u64) -> Result<PureState> {
    check_dims(n_a, n_b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1usize << (n_a + n_b)).map(|_| uniform_amplitude(&mut rng)).collect();
    PureState::from_amplitudes(amps, n_a, true)
}

/// Tensor product of random single-qubit states.
pub fn product_state(n_a: usize, n_b: usize, seed: u64) -> Result<PureState> {
    check_dims(n_a, n_b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..n_a + n_b {
        let (z0, z1) = loop {
            let z0 = uniform_amplitude(&mut rng);
            let z1 = uniform_amplitude(&mut rng);
            if z0.norm_sqr() + z1.norm_sqr() > 1e-6 {
                break (z0, z1);
            }
        };
        // new qubit is the most significant so far
        let mut next = Vec::with_capacity(amps.len() * 2);
        next.extend(amps.iter().map(|x| x * z0));
        next.extend(amps.iter().map(|x| x * z1));
        amps = next;
    }
    PureState::from_amplitudes(amps, n_a, true)
}

/// `(|0...0> + |1...1>) / sqrt(2)` split as `n / 2 | n - n / 2`.
pub fn ghz_state(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(QsvdError::InvalidBipartition { n_qubits: n, n_a: n / 2 });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[(1 << n) - 1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    PureState::from_amplitudes(amps, n / 2, true)
}

pub fn bell_state() -> PureState {
    ghz_state(2).expect("two qubits")
}

/// Bundled absolutely maximally entangled 6-qubit state (a graph state),
/// split 3|3.
pub fn ame_6_2() -> PureState {
    PureState::from_json(AME_6_2).expect("bundled fixture is valid")
}

/// Reads a state in the JSON state-file format.
pub fn load_state(path: impl AsRef<Path>) -> Result<PureState> {
    PureState::read(path)
}
