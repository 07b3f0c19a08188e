//! State-preparation circuits for Slater and shifted LF states.

use std::f64::consts::PI;

use crate::basis::{slater_norm, LfParam};
use crate::error::Result;
use crate::simulator::circuit::{Circuit, CircuitOp};
use crate::state::StateVector;

fn ry_layer(circuit: &mut Circuit, n: u32, a: f64, top_uses_a: bool) -> Result<()> {
    for m in 0..n {
        let rate = if top_uses_a && m == n - 1 {
            a
        } else {
            a * (1u64 << m) as f64
        };
        circuit.push(CircuitOp::Ry {
            qubit: m,
            angle: 2.0 * (-rate).exp().atan(),
        })?;
    }
    Ok(())
}

/// RY product followed by a fanout from the top qubit: prepares the two-sided
/// Slater vector.
pub fn slater_circuit(n: u32, a: f64) -> Result<Circuit> {
    slater_norm(n, a)?;
    let mut c = Circuit::new(n)?;
    ry_layer(&mut c, n, a, true)?;
    if n > 1 {
        c.push(CircuitOp::Fanout {
            control: n - 1,
            targets: (0..n - 1).collect(),
        })?;
    }
    Ok(c)
}

/// RY product only: prepares `sum_t exp(-a t) |t>` normalized.
pub fn one_sided_slater_circuit(n: u32, a: f64) -> Result<Circuit> {
    slater_norm(n, a)?;
    let mut c = Circuit::new(n)?;
    ry_layer(&mut c, n, a, false)?;
    Ok(c)
}

/// Slater preparation, phase ramp, inverse QFT.
pub fn shifted_lf_circuit(param: &LfParam) -> Result<Circuit> {
    let n = param.n();
    let mut c = slater_circuit(n, param.decay_rate())?;
    let dim = param.dim() as f64;
    for m in 0..n {
        let turns = (param.center() as f64 * (1u64 << m) as f64 / dim).fract();
        if turns != 0.0 {
            c.push(CircuitOp::PhaseZ {
                qubit: m,
                angle: 2.0 * PI * turns,
            })?;
        }
    }
    c.push(CircuitOp::InverseQft {
        register: (0..n).collect(),
    })?;
    Ok(c)
}

pub fn prepare_slater(n: u32, a: f64) -> Result<StateVector> {
    slater_circuit(n, a)?.prepare()
}

pub fn prepare_shifted_lf(param: &LfParam) -> Result<StateVector> {
    shifted_lf_circuit(param)?.prepare()
}

/// `sum_k c_k |k>|k>` built by transversal CNOTs onto a fresh copy register.
/// The original register is the low half.
pub fn build_doubled_target(target: &StateVector) -> Result<StateVector> {
    let n = target.num_qubits();
    let joint = target.tensor(&StateVector::zero(n)?)?;
    let mut c = Circuit::new(2 * n)?;
    for m in 0..n {
        c.push(CircuitOp::Cnot {
            control: m,
            target: n + m,
        })?;
    }
    c.run(&joint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{lf_state_vector, slater_vector};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    #[test]
    fn single_qubit_slater() {
        let a = 0.7;
        let s = prepare_slater(1, a).unwrap();
        let c = slater_norm(1, a).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, c, epsilon = 1e-14);
        assert_abs_diff_eq!(s.amplitudes()[1].re, c * (-a).exp(), epsilon = 1e-14);
    }

    #[test]
    fn slater_circuit_matches_closed_form() {
        let s = prepare_slater(5, 0.5).unwrap();
        for (x, y) in s.amplitudes().iter().zip(slater_vector(5, 0.5).unwrap()) {
            assert_abs_diff_eq!((x - Complex64::new(y, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }
        let sharp = prepare_slater(4, 60.0).unwrap();
        assert_abs_diff_eq!(sharp.amplitudes()[0].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn shifted_lf_circuit_matches_closed_form() {
        let p = LfParam::new(5, 0.49, 16).unwrap();
        let f = prepare_shifted_lf(&p)
            .unwrap()
            .fidelity(&lf_state_vector(&p).unwrap())
            .unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unshifted_lf_is_inverse_qft_of_slater() {
        let s = prepare_slater(4, 0.3).unwrap();
        let l = crate::simulator::circuit::apply(
            &s,
            &CircuitOp::InverseQft {
                register: vec![0, 1, 2, 3],
            },
        )
        .unwrap();
        let direct = prepare_shifted_lf(&LfParam::new(4, 0.3, 0).unwrap()).unwrap();
        assert_abs_diff_eq!(l.fidelity(&direct).unwrap(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn phase_gates_commute() {
        let p = LfParam::new(4, 0.6, 5).unwrap();
        let c = shifted_lf_circuit(&p).unwrap();
        let ops = c.ops();
        let mut reordered = Circuit::new(4).unwrap();
        let phases: Vec<_> = ops
            .iter()
            .filter(|o| matches!(o, CircuitOp::PhaseZ { .. }))
            .cloned()
            .collect();
        for op in ops.iter().filter(|o| !matches!(o, CircuitOp::PhaseZ { .. } | CircuitOp::InverseQft { .. })) {
            reordered.push(op.clone()).unwrap();
        }
        for op in phases.into_iter().rev() {
            reordered.push(op).unwrap();
        }
        reordered
            .push(CircuitOp::InverseQft {
                register: vec![0, 1, 2, 3],
            })
            .unwrap();
        let a = c.prepare().unwrap();
        let b = reordered.prepare().unwrap();
        assert_abs_diff_eq!(a.fidelity(&b).unwrap(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn doubled_uniform_state_is_diagonal() {
        let n = 3;
        let uniform = StateVector::normalized(vec![Complex64::new(1.0, 0.0); 8]).unwrap();
        let d = build_doubled_target(&uniform).unwrap();
        for (i, a) in d.amplitudes().iter().enumerate() {
            let expected = if i & 7 == i >> n { 1.0 / 8f64.sqrt() } else { 0.0 };
            assert_abs_diff_eq!(a.re, expected, epsilon = 1e-14);
        }
        let zero = build_doubled_target(&StateVector::zero(3).unwrap()).unwrap();
        assert_eq!(zero.amplitudes()[0].re, 1.0);
    }
}
