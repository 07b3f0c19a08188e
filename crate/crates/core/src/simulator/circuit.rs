use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{check_capacity, StateVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Unitary acting on a register of `r` qubits, used inside
/// [`CircuitOp::Controlled`].
#[derive(Debug, Clone)]
pub enum RegisterUnitary {
    /// `phase * (I - 2 w w^†)`, chosen so that `|0>` maps onto a given state.
    Prepare {
        reflector: Vec<Complex64>,
        phase: Complex64,
    },
    Diagonal(Vec<Complex64>),
    Dense(DMatrix<Complex64>),
    /// Sub-circuit with local qubit indices `0..r`.
    Circuit(Circuit),
}

impl RegisterUnitary {
    /// Unitary whose first column is `state`.
    pub fn prepare(state: &StateVector) -> Self {
        let amps = state.amplitudes();
        let phase = if amps[0].norm() > 0.0 {
            amps[0] / amps[0].norm()
        } else {
            ONE
        };
        // v = conj(phase) * psi has a real non-negative leading entry, so the
        // Householder reflection sending e_0 to v is well defined.
        let mut w: Vec<Complex64> = amps.iter().map(|a| -phase.conj() * a).collect();
        w[0] += ONE;
        let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-14 {
            w.iter_mut().for_each(|x| *x = ZERO);
        } else {
            w.iter_mut().for_each(|x| *x /= norm);
        }
        Self::Prepare {
            reflector: w,
            phase,
        }
    }

    fn width(&self) -> Option<u32> {
        let len = match self {
            Self::Prepare { reflector, .. } => reflector.len(),
            Self::Diagonal(d) => d.len(),
            Self::Dense(m) => {
                if m.nrows() != m.ncols() {
                    return None;
                }
                m.nrows()
            }
            Self::Circuit(c) => return Some(c.num_qubits()),
        };
        len.is_power_of_two().then(|| len.trailing_zeros())
    }

    pub fn adjoint(&self) -> Self {
        match self {
            Self::Prepare { reflector, phase } => Self::Prepare {
                reflector: reflector.clone(),
                phase: phase.conj(),
            },
            Self::Diagonal(d) => Self::Diagonal(d.iter().map(|x| x.conj()).collect()),
            Self::Dense(m) => Self::Dense(m.adjoint()),
            Self::Circuit(c) => Self::Circuit(c.adjoint()),
        }
    }

    fn apply_local(&self, buf: &mut [Complex64]) -> Result<()> {
        match self {
            Self::Prepare { reflector, phase } => {
                let proj: Complex64 = reflector.iter().zip(buf.iter()).map(|(w, x)| w.conj() * x).sum();
                for (x, w) in buf.iter_mut().zip(reflector) {
                    *x = phase * (*x - 2.0 * proj * w);
                }
            }
            Self::Diagonal(d) => buf.iter_mut().zip(d).for_each(|(x, p)| *x *= p),
            Self::Dense(m) => {
                let out: Vec<Complex64> = (0..buf.len())
                    .map(|i| (0..buf.len()).map(|j| m[(i, j)] * buf[j]).sum())
                    .collect();
                buf.copy_from_slice(&out);
            }
            Self::Circuit(c) => {
                let mut local = StateVector::from_amplitudes(buf.to_vec())?;
                c.run_in_place(&mut local)?;
                buf.copy_from_slice(local.amplitudes());
            }
        }
        Ok(())
    }
}

/// One gate. Registers list qubits from least to most significant.
#[derive(Debug, Clone)]
pub enum CircuitOp {
    Ry { qubit: u32, angle: f64 },
    PauliX { qubit: u32 },
    /// `diag(1, exp(i angle))`.
    PhaseZ { qubit: u32, angle: f64 },
    Hadamard { qubit: u32 },
    Cnot { control: u32, target: u32 },
    /// CNOT from `control` onto every qubit in `targets`.
    Fanout { control: u32, targets: Vec<u32> },
    /// Exchange two qubits, optionally conditioned on a control.
    Swap {
        first: u32,
        second: u32,
        control: Option<u32>,
    },
    /// `|j> -> N^{-1/2} sum_k exp(+2 pi i j k / N) |k>` on the register.
    Qft { register: Vec<u32> },
    InverseQft { register: Vec<u32> },
    /// `unitary` on `register` when every control reads 1.
    Controlled {
        controls: Vec<u32>,
        register: Vec<u32>,
        unitary: Arc<RegisterUnitary>,
    },
    /// `2|0><0| - I` on the register.
    ReflectZero { register: Vec<u32> },
    GlobalPhase { angle: f64 },
}

impl CircuitOp {
    pub fn unitary(register: Vec<u32>, unitary: RegisterUnitary) -> Self {
        Self::Controlled {
            controls: Vec::new(),
            register,
            unitary: Arc::new(unitary),
        }
    }

    fn qubits(&self) -> (Vec<u32>, Vec<u32>) {
        match self {
            Self::Ry { qubit, .. }
            | Self::PauliX { qubit }
            | Self::PhaseZ { qubit, .. }
            | Self::Hadamard { qubit } => (vec![], vec![*qubit]),
            Self::Cnot { control, target } => (vec![*control], vec![*target]),
            Self::Fanout { control, targets } => (vec![*control], targets.clone()),
            Self::Swap {
                first,
                second,
                control,
            } => (control.iter().copied().collect(), vec![*first, *second]),
            Self::Qft { register } | Self::InverseQft { register } | Self::ReflectZero { register } => {
                (vec![], register.clone())
            }
            Self::Controlled {
                controls, register, ..
            } => (controls.clone(), register.clone()),
            Self::GlobalPhase { .. } => (vec![], vec![]),
        }
    }

    fn validate(&self, n: u32) -> Result<()> {
        let (controls, targets) = self.qubits();
        let mut seen = 0u64;
        for &q in controls.iter().chain(&targets) {
            if q >= n {
                return Err(Error::OutOfRange {
                    what: "qubit index",
                    value: q as u64,
                    limit: n as u64,
                });
            }
            if seen & (1 << q) != 0 {
                return Err(Error::InvalidOp(format!("qubit {q} used twice in one gate")));
            }
            seen |= 1 << q;
        }
        if let Self::Controlled {
            register, unitary, ..
        } = self
        {
            if unitary.width() != Some(register.len() as u32) {
                return Err(Error::InvalidOp(format!(
                    "register of {} qubits does not match unitary",
                    register.len()
                )));
            }
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        match self {
            Self::Ry { qubit, angle } => Self::Ry {
                qubit: *qubit,
                angle: -angle,
            },
            Self::PhaseZ { qubit, angle } => Self::PhaseZ {
                qubit: *qubit,
                angle: -angle,
            },
            Self::Qft { register } => Self::InverseQft {
                register: register.clone(),
            },
            Self::InverseQft { register } => Self::Qft {
                register: register.clone(),
            },
            Self::Controlled {
                controls,
                register,
                unitary,
            } => Self::Controlled {
                controls: controls.clone(),
                register: register.clone(),
                unitary: Arc::new(unitary.adjoint()),
            },
            Self::GlobalPhase { angle } => Self::GlobalPhase { angle: -angle },
            other => other.clone(),
        }
    }
}

fn apply_single(amps: &mut [Complex64], q: u32, m: [[Complex64; 2]; 2]) {
    let bit = 1usize << q;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a0, a1) = (amps[i], amps[i | bit]);
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

fn mask_of(qubits: &[u32]) -> usize {
    qubits.iter().fold(0, |m, &q| m | (1usize << q))
}

fn register_offsets(register: &[u32]) -> Vec<usize> {
    (0..1usize << register.len())
        .map(|local| {
            register
                .iter()
                .enumerate()
                .filter(|(m, _)| local >> m & 1 == 1)
                .fold(0, |acc, (_, &q)| acc | (1usize << q))
        })
        .collect()
}

/// Runs `f` on every gathered register block whose controls are all set.
fn for_each_block(
    amps: &mut [Complex64],
    controls: &[u32],
    register: &[u32],
    mut f: impl FnMut(&mut [Complex64]) -> Result<()>,
) -> Result<()> {
    let reg_mask = mask_of(register);
    let ctrl_mask = mask_of(controls);
    let offsets = register_offsets(register);
    let mut buf = vec![ZERO; offsets.len()];
    for base in 0..amps.len() {
        if base & reg_mask != 0 || base & ctrl_mask != ctrl_mask {
            continue;
        }
        for (b, &o) in buf.iter_mut().zip(&offsets) {
            *b = amps[base | o];
        }
        f(&mut buf)?;
        for (b, &o) in buf.iter().zip(&offsets) {
            amps[base | o] = *b;
        }
    }
    Ok(())
}

/// Unitary DFT in place; `sign = +1` is the forward QFT.
pub(crate) fn dft_in_place(buf: &mut [Complex64], sign: f64) {
    let len = buf.len();
    let bits = len.trailing_zeros();
    if len <= 1 {
        return;
    }
    for i in 0..len {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut size = 2;
    while size <= len {
        let step = Complex64::from_polar(1.0, sign * 2.0 * PI / size as f64);
        for start in (0..len).step_by(size) {
            let mut w = ONE;
            for k in 0..size / 2 {
                let u = buf[start + k];
                let v = buf[start + k + size / 2] * w;
                buf[start + k] = u + v;
                buf[start + k + size / 2] = u - v;
                w *= step;
            }
        }
        size *= 2;
    }
    let scale = 1.0 / (len as f64).sqrt();
    buf.iter_mut().for_each(|x| *x *= scale);
}

fn apply_op(amps: &mut [Complex64], op: &CircuitOp) -> Result<()> {
    match op {
        CircuitOp::Ry { qubit, angle } => {
            let (s, c) = (angle / 2.0).sin_cos();
            let (c, s) = (Complex64::new(c, 0.0), Complex64::new(s, 0.0));
            apply_single(amps, *qubit, [[c, -s], [s, c]]);
        }
        CircuitOp::PauliX { qubit } => apply_single(amps, *qubit, [[ZERO, ONE], [ONE, ZERO]]),
        CircuitOp::PhaseZ { qubit, angle } => {
            apply_single(amps, *qubit, [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, *angle)]])
        }
        CircuitOp::Hadamard { qubit } => {
            let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            apply_single(amps, *qubit, [[h, h], [h, -h]]);
        }
        CircuitOp::Cnot { control, target } => {
            let (c, t) = (1usize << control, 1usize << target);
            for i in 0..amps.len() {
                if i & c != 0 && i & t == 0 {
                    amps.swap(i, i | t);
                }
            }
        }
        CircuitOp::Fanout { control, targets } => {
            let c = 1usize << control;
            let flip = mask_of(targets);
            for i in 0..amps.len() {
                if i & c != 0 && i < i ^ flip {
                    amps.swap(i, i ^ flip);
                }
            }
        }
        CircuitOp::Swap {
            first,
            second,
            control,
        } => {
            let (a, b) = (1usize << first, 1usize << second);
            let c = control.map_or(0, |q| 1usize << q);
            for i in 0..amps.len() {
                if i & c == c && i & a != 0 && i & b == 0 {
                    amps.swap(i, i ^ a ^ b);
                }
            }
        }
        CircuitOp::Qft { register } => for_each_block(amps, &[], register, |b| {
            dft_in_place(b, 1.0);
            Ok(())
        })?,
        CircuitOp::InverseQft { register } => for_each_block(amps, &[], register, |b| {
            dft_in_place(b, -1.0);
            Ok(())
        })?,
        CircuitOp::Controlled {
            controls,
            register,
            unitary,
        } => for_each_block(amps, controls, register, |b| unitary.apply_local(b))?,
        CircuitOp::ReflectZero { register } => {
            let mask = mask_of(register);
            for (i, a) in amps.iter_mut().enumerate() {
                if i & mask != 0 {
                    *a = -*a;
                }
            }
        }
        CircuitOp::GlobalPhase { angle } => {
            let p = Complex64::from_polar(1.0, *angle);
            amps.iter_mut().for_each(|a| *a *= p);
        }
    }
    Ok(())
}

/// Applies one gate, returning the new state.
pub fn apply(state: &StateVector, op: &CircuitOp) -> Result<StateVector> {
    op.validate(state.num_qubits())?;
    let mut out = state.clone();
    apply_op(out.amps_mut(), op)?;
    Ok(out)
}

/// Ordered gate list on a fixed number of qubits.
#[derive(Debug, Clone)]
pub struct Circuit {
    n: u32,
    ops: Vec<CircuitOp>,
}

impl Circuit {
    pub fn new(n: u32) -> Result<Self> {
        check_capacity(n)?;
        Ok(Self { n, ops: Vec::new() })
    }

    pub fn num_qubits(&self) -> u32 {
        self.n
    }

    pub fn ops(&self) -> &[CircuitOp] {
        &self.ops
    }

    pub fn push(&mut self, op: CircuitOp) -> Result<&mut Self> {
        op.validate(self.n)?;
        self.ops.push(op);
        Ok(self)
    }

    /// Appends `other`, relabelling its qubit `m` as `offset + m`.
    pub fn append_shifted(&mut self, other: &Circuit, offset: u32) -> Result<&mut Self> {
        if offset + other.n > self.n {
            return Err(Error::OutOfRange {
                what: "qubit index",
                value: (offset + other.n) as u64,
                limit: self.n as u64,
            });
        }
        let register: Vec<u32> = (offset..offset + other.n).collect();
        if offset == 0 {
            for op in &other.ops {
                self.push(op.clone())?;
            }
            return Ok(self);
        }
        self.push(CircuitOp::unitary(register, RegisterUnitary::Circuit(other.clone())))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n: self.n,
            ops: self.ops.iter().rev().map(CircuitOp::adjoint).collect(),
        }
    }

    pub fn run(&self, state: &StateVector) -> Result<StateVector> {
        let mut out = state.clone();
        self.run_in_place(&mut out)?;
        Ok(out)
    }

    /// Runs on `|0...0>`.
    pub fn prepare(&self) -> Result<StateVector> {
        self.run(&StateVector::zero(self.n)?)
    }

    pub(crate) fn run_in_place(&self, state: &mut StateVector) -> Result<()> {
        if state.num_qubits() != self.n {
            return Err(Error::QubitMismatch {
                left: state.num_qubits(),
                right: self.n,
            });
        }
        for op in &self.ops {
            apply_op(state.amps_mut(), op)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_state(n: u32, seed: u64) -> StateVector {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, &[]);
        StateVector::normalized(
            (0..1 << n)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
        )
        .unwrap()
    }

    fn dense_dft(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| x[j] * Complex64::from_polar(1.0, sign * 2.0 * PI * (j * k) as f64 / n as f64))
                    .sum::<Complex64>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn fft_matches_dense_dft() {
        let s = random_state(6, 3);
        let mut buf = s.amplitudes().to_vec();
        dft_in_place(&mut buf, 1.0);
        for (a, b) in buf.iter().zip(dense_dft(s.amplitudes(), 1.0)) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn hadamard_twice_is_identity() {
        let s = random_state(3, 1);
        let h = CircuitOp::Hadamard { qubit: 1 };
        let back = apply(&apply(&s, &h).unwrap(), &h).unwrap();
        for (a, b) in back.amplitudes().iter().zip(s.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn fanout_flips_lower_qubits() {
        let s = StateVector::basis(4, 0b1000).unwrap();
        let op = CircuitOp::Fanout {
            control: 3,
            targets: vec![0, 1, 2],
        };
        assert_eq!(apply(&s, &op).unwrap().amplitudes()[0b1111], ONE);
    }

    #[test]
    fn qft_round_trip_on_sub_register() {
        let s = random_state(5, 9);
        let reg = vec![4, 1, 2];
        let out = apply(
            &apply(&s, &CircuitOp::Qft { register: reg.clone() }).unwrap(),
            &CircuitOp::InverseQft { register: reg },
        )
        .unwrap();
        assert_abs_diff_eq!(out.fidelity(&s).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn prepare_maps_zero_to_state() {
        for seed in 0..5 {
            let target = random_state(3, seed);
            let u = RegisterUnitary::prepare(&target);
            let op = CircuitOp::unitary(vec![0, 1, 2], u);
            let out = apply(&StateVector::zero(3).unwrap(), &op).unwrap();
            for (a, b) in out.amplitudes().iter().zip(target.amplitudes()) {
                assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
            }
            let back = apply(&out, &op.adjoint()).unwrap();
            assert_abs_diff_eq!(back.amplitudes()[0].re, 1.0, epsilon = 1e-12);
        }
        // |0> itself needs no reflection.
        let zero = StateVector::zero(2).unwrap();
        let op = CircuitOp::unitary(vec![0, 1], RegisterUnitary::prepare(&zero));
        assert_abs_diff_eq!(apply(&zero, &op).unwrap().amplitudes()[0].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_invalid_ops() {
        let s = StateVector::zero(2).unwrap();
        assert!(apply(&s, &CircuitOp::Hadamard { qubit: 2 }).is_err());
        assert!(apply(&s, &CircuitOp::Cnot { control: 1, target: 1 }).is_err());
        let bad = CircuitOp::unitary(vec![0], RegisterUnitary::Diagonal(vec![ONE; 4]));
        assert!(apply(&s, &bad).is_err());
    }

    #[test]
    fn controlled_unitary_respects_controls() {
        let op = CircuitOp::Controlled {
            controls: vec![2],
            register: vec![0],
            unitary: Arc::new(RegisterUnitary::Dense(DMatrix::from_row_slice(
                2,
                2,
                &[ZERO, ONE, ONE, ZERO],
            ))),
        };
        let off = apply(&StateVector::basis(3, 0).unwrap(), &op).unwrap();
        assert_eq!(off.amplitudes()[0], ONE);
        let on = apply(&StateVector::basis(3, 4).unwrap(), &op).unwrap();
        assert_eq!(on.amplitudes()[5], ONE);
    }
}
