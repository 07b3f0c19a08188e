//! SWITCH and SWAP test circuits. Each returns the exact probability of
//! reading the ancilla as 0, computed by simulating the full circuit.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::simulator::circuit::{Circuit, CircuitOp, RegisterUnitary};
use crate::state::StateVector;

/// Interference circuit on `n + 1` qubits, ancilla on top: prepares `first`
/// when the ancilla is 0 and `second` when it is 1, with a relative phase
/// `phi`. Reading 0 has probability `(1 + Re e^{i phi} <first|second>) / 2`.
pub fn switch_test_circuit(
    first: RegisterUnitary,
    second: RegisterUnitary,
    n: u32,
    phi: f64,
) -> Result<(Circuit, u32)> {
    let anc = n;
    let register: Vec<u32> = (0..n).collect();
    let mut c = Circuit::new(n + 1)?;
    c.push(CircuitOp::Hadamard { qubit: anc })?
        .push(CircuitOp::PhaseZ {
            qubit: anc,
            angle: phi,
        })?
        .push(CircuitOp::PauliX { qubit: anc })?
        .push(CircuitOp::Controlled {
            controls: vec![anc],
            register: register.clone(),
            unitary: Arc::new(first),
        })?
        .push(CircuitOp::PauliX { qubit: anc })?
        .push(CircuitOp::Controlled {
            controls: vec![anc],
            register,
            unitary: Arc::new(second),
        })?
        .push(CircuitOp::Hadamard { qubit: anc })?;
    Ok((c, anc))
}

pub fn switch_test(first: &StateVector, second: &StateVector, phi: f64) -> Result<f64> {
    let n = first.num_qubits();
    if second.num_qubits() != n {
        return Err(Error::QubitMismatch {
            left: n,
            right: second.num_qubits(),
        });
    }
    let (c, anc) = switch_test_circuit(
        RegisterUnitary::prepare(first),
        RegisterUnitary::prepare(second),
        n,
        phi,
    )?;
    c.prepare()?.prob_zero(anc)
}

/// Hadamard, controlled swaps between paired qubits, Hadamard.
pub fn push_swap_test(
    circuit: &mut Circuit,
    ancilla: u32,
    first: &[u32],
    second: &[u32],
) -> Result<()> {
    if first.len() != second.len() {
        return Err(Error::InvalidOp("swap registers differ in width".into()));
    }
    circuit.push(CircuitOp::Hadamard { qubit: ancilla })?;
    for (&a, &b) in first.iter().zip(second) {
        circuit.push(CircuitOp::Swap {
            first: a,
            second: b,
            control: Some(ancilla),
        })?;
    }
    circuit.push(CircuitOp::Hadamard { qubit: ancilla })?;
    Ok(())
}

/// The `width` most significant qubits of the register starting at `offset`
/// with `len` qubits.
pub(crate) fn top_qubits(offset: u32, len: u32, width: u32) -> Vec<u32> {
    (offset + len - width..offset + len).collect()
}

/// SWAP test between two pure states of equal width.
pub fn swap_test_states(first: &StateVector, second: &StateVector) -> Result<f64> {
    let n = first.num_qubits();
    if second.num_qubits() != n {
        return Err(Error::QubitMismatch {
            left: n,
            right: second.num_qubits(),
        });
    }
    let joint = first
        .tensor(second)?
        .tensor(&StateVector::zero(1)?)?;
    let mut c = Circuit::new(2 * n + 1)?;
    let a: Vec<u32> = (0..n).collect();
    let b: Vec<u32> = (n..2 * n).collect();
    push_swap_test(&mut c, 2 * n, &a, &b)?;
    c.run(&joint)?.prob_zero(2 * n)
}

/// SWAP test between an LF register and the copy half of a doubled target.
///
/// When the widths differ, only the most significant `min(n_lf, n_t)` qubits
/// are exchanged, which averages the wider register over its low qubits.
pub fn swap_test(lf: &StateVector, doubled_target: &StateVector) -> Result<f64> {
    let n_lf = lf.num_qubits();
    let n2 = doubled_target.num_qubits();
    if n2 % 2 != 0 {
        return Err(Error::InvalidOp(format!(
            "doubled target must have an even qubit count, got {n2}"
        )));
    }
    let n_t = n2 / 2;
    let width = n_lf.min(n_t);
    let joint = lf.tensor(doubled_target)?.tensor(&StateVector::zero(1)?)?;
    let anc = n_lf + n2;
    let mut c = Circuit::new(anc + 1)?;
    push_swap_test(
        &mut c,
        anc,
        &top_qubits(0, n_lf, width),
        &top_qubits(n_lf + n_t, n_t, width),
    )?;
    c.run(&joint)?.prob_zero(anc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{lf_sq_vector, lf_state_vector, LfParam};
    use crate::simulator::prep::build_doubled_target;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_PI_2;

    fn random_state(n: u32, seed: u64) -> StateVector {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, &[17]);
        StateVector::normalized(
            (0..1 << n)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn switch_identical_and_orthogonal() {
        let s = random_state(3, 1);
        assert_abs_diff_eq!(switch_test(&s, &s, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        let e0 = StateVector::basis(3, 2).unwrap();
        let e1 = StateVector::basis(3, 5).unwrap();
        for phi in [0.0, 0.4, FRAC_PI_2] {
            assert_abs_diff_eq!(switch_test(&e0, &e1, phi).unwrap(), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn switch_recovers_real_and_imaginary_parts() {
        let (u, v) = (random_state(4, 2), random_state(4, 3));
        let ip = u.inner(&v).unwrap();
        let p_re = switch_test(&u, &v, 0.0).unwrap();
        let p_im = switch_test(&u, &v, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(2.0 * p_re - 1.0, ip.re, epsilon = 1e-12);
        assert_abs_diff_eq!(1.0 - 2.0 * p_im, ip.im, epsilon = 1e-12);
    }

    #[test]
    fn swap_against_basis_target() {
        let p = LfParam::new(4, 0.5, 3).unwrap();
        let lf = lf_state_vector(&p).unwrap();
        let k0 = 6;
        let doubled = build_doubled_target(&StateVector::basis(4, k0).unwrap()).unwrap();
        let expected = (1.0 + lf_sq_vector(&p)[k0]) / 2.0;
        assert_abs_diff_eq!(swap_test(&lf, &doubled).unwrap(), expected, epsilon = 1e-12);
        let same = StateVector::basis(4, k0).unwrap();
        assert_abs_diff_eq!(swap_test(&same, &doubled).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn swap_of_pure_states() {
        let (u, v) = (random_state(3, 5), random_state(3, 6));
        let expected = (1.0 + u.fidelity(&v).unwrap()) / 2.0;
        assert_abs_diff_eq!(swap_test_states(&u, &v).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn swap_rejects_odd_doubled_register() {
        let u = random_state(2, 1);
        assert!(swap_test(&u, &random_state(3, 2)).is_err());
    }
}
