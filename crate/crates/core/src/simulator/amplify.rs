//! Amplitude amplification on readout circuits.
//!
//! A preparation `U` leaves the ancilla in `|0>` with probability `p`. The
//! iterate `Q = -U S0 U^† S_chi`, with `S0 = 2|0><0| - I` on all qubits and
//! `S_chi = Z` on the ancilla, rotates the plane spanned by the good
//! (ancilla 0) and bad (ancilla 1) components of `U|0>` by `2 theta`, where
//! `sin^2 theta = p`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::basis::LfParam;
use crate::error::{Error, Result};
use crate::simulator::circuit::{Circuit, CircuitOp, RegisterUnitary};
use crate::simulator::prep::shifted_lf_circuit;
use crate::simulator::readout::{push_swap_test, switch_test_circuit, top_qubits};
use crate::state::StateVector;

/// A circuit that prepares a state from `|0...0>` and the ancilla whose
/// 0 outcome marks the good subspace.
#[derive(Debug, Clone)]
pub struct Preparation {
    pub circuit: Circuit,
    pub ancilla: u32,
}

/// Full SWAP-test preparation: LF circuit, target preparation, CNOT copy of
/// the target's readout register, and the controlled-swap test.
///
/// Only the lowest `readout` qubits of `target` are copied and compared; the
/// rest (for example a phase-estimation system register) come along as
/// spectators.
pub fn swap_test_preparation(
    lf: &LfParam,
    target: &StateVector,
    readout: u32,
) -> Result<Preparation> {
    let n_lf = lf.n();
    let n_t = target.num_qubits();
    if readout == 0 || readout > n_t {
        return Err(Error::InvalidOp(format!(
            "readout width {readout} invalid for a {n_t}-qubit target"
        )));
    }
    let t0 = n_lf;
    let copy0 = t0 + n_t;
    let anc = copy0 + readout;
    let mut c = Circuit::new(anc + 1)?;
    c.append_shifted(&shifted_lf_circuit(lf)?, 0)?;
    c.push(CircuitOp::unitary(
        (t0..t0 + n_t).collect(),
        RegisterUnitary::prepare(target),
    ))?;
    for m in 0..readout {
        c.push(CircuitOp::Cnot {
            control: t0 + m,
            target: copy0 + m,
        })?;
    }
    let width = n_lf.min(readout);
    push_swap_test(
        &mut c,
        anc,
        &top_qubits(0, n_lf, width),
        &top_qubits(copy0, readout, width),
    )?;
    Ok(Preparation {
        circuit: c,
        ancilla: anc,
    })
}

/// SWITCH-test preparation comparing `target` against the LF circuit.
/// The ancilla-0 probability is `(1 + Re e^{i phi} <target|L>) / 2`.
pub fn switch_test_preparation(lf: &LfParam, target: &StateVector, phi: f64) -> Result<Preparation> {
    if target.num_qubits() != lf.n() {
        return Err(Error::QubitMismatch {
            left: target.num_qubits(),
            right: lf.n(),
        });
    }
    let (circuit, ancilla) = switch_test_circuit(
        RegisterUnitary::prepare(target),
        RegisterUnitary::Circuit(shifted_lf_circuit(lf)?),
        lf.n(),
        phi,
    )?;
    Ok(Preparation { circuit, ancilla })
}

/// The amplitude-amplification iterate built from a preparation.
#[derive(Debug, Clone)]
pub struct GroverIterate {
    circuit: Circuit,
    prep: Circuit,
    ancilla: u32,
}

impl GroverIterate {
    pub fn new(prep: &Preparation) -> Result<Self> {
        let n = prep.circuit.num_qubits();
        let mut c = Circuit::new(n)?;
        c.push(CircuitOp::PhaseZ {
            qubit: prep.ancilla,
            angle: std::f64::consts::PI,
        })?;
        c.append_shifted(&prep.circuit.adjoint(), 0)?;
        c.push(CircuitOp::ReflectZero {
            register: (0..n).collect(),
        })?;
        c.append_shifted(&prep.circuit, 0)?;
        c.push(CircuitOp::GlobalPhase {
            angle: std::f64::consts::PI,
        })?;
        Ok(Self {
            circuit: c,
            prep: prep.circuit.clone(),
            ancilla: prep.ancilla,
        })
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.circuit.run(state)
    }

    /// Splits `U|0>` into normalized good and bad parts and returns the
    /// action of the iterate on that plane.
    pub fn spectrum(&self) -> Result<AaSpectrum> {
        let psi = self.prep.prepare()?;
        let bit = 1usize << self.ancilla;
        let split = |want_zero: bool| -> Vec<Complex64> {
            psi.amplitudes()
                .iter()
                .enumerate()
                .map(|(i, a)| if (i & bit == 0) == want_zero { *a } else { Complex64::new(0.0, 0.0) })
                .collect()
        };
        let good = split(true);
        let bad = split(false);
        let p_good: f64 = good.iter().map(|a| a.norm_sqr()).sum();
        if p_good < 1e-12 || p_good > 1.0 - 1e-12 {
            return Ok(AaSpectrum {
                theta: if p_good < 0.5 { 0.0 } else { FRAC_PI_2 },
                p_good,
                restricted: None,
                leakage: 0.0,
            });
        }
        let g = StateVector::normalized(good)?;
        let b = StateVector::normalized(bad)?;
        let qg = self.apply(&g)?;
        let qb = self.apply(&b)?;
        let m = Matrix2::new(
            g.inner(&qg)?,
            g.inner(&qb)?,
            b.inner(&qg)?,
            b.inner(&qb)?,
        );
        let mut leakage: f64 = 0.0;
        for (col, q) in [&qg, &qb].into_iter().enumerate() {
            let resid: f64 = q
                .amplitudes()
                .iter()
                .zip(g.amplitudes().iter().zip(b.amplitudes()))
                .map(|(x, (gi, bi))| (x - m[(0, col)] * gi - m[(1, col)] * bi).norm_sqr())
                .sum();
            leakage = leakage.max(resid.sqrt());
        }
        // Eigenphases are +-2 theta; recover theta from the trace so the
        // result does not depend on eigenvector phases.
        let tr = m.trace();
        let rotation = (tr.re / 2.0).clamp(-1.0, 1.0).acos();
        Ok(AaSpectrum {
            theta: rotation / 2.0,
            p_good,
            restricted: Some(m),
            leakage,
        })
    }
}

/// Rotation angle of the iterate together with its 2x2 restriction.
#[derive(Debug, Clone)]
pub struct AaSpectrum {
    /// `theta` with `sin^2 theta` the good-state probability, from the iterate.
    pub theta: f64,
    /// Good-state probability measured directly from `U|0>`.
    pub p_good: f64,
    /// Iterate in the (good, bad) basis; `None` when `p_good` is 0 or 1.
    pub restricted: Option<Matrix2<Complex64>>,
    /// Largest component of `Q|g>`, `Q|b>` outside the plane.
    pub leakage: f64,
}

impl AaSpectrum {
    /// Eigenvalues of the restricted iterate.
    pub fn eigenvalues(&self) -> Option<[Complex64; 2]> {
        self.restricted.map(|m| {
            let tr = m.trace();
            let det = m.determinant();
            let disc = (tr * tr - 4.0 * det).sqrt();
            [(tr + disc) / 2.0, (tr - disc) / 2.0]
        })
    }

    /// Components of `U|0>` on the (good, bad) basis.
    pub fn initial(&self) -> [f64; 2] {
        [self.p_good.sqrt(), (1.0 - self.p_good).max(0.0).sqrt()]
    }
}

/// Rotation angle of the SWAP-test iterate for an LF against a target.
pub fn aa_operator_spectrum(lf: &LfParam, target: &StateVector) -> Result<AaSpectrum> {
    let prep = swap_test_preparation(lf, target, target.num_qubits())?;
    GroverIterate::new(&prep)?.spectrum()
}
