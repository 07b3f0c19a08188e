//! Text input formats.
//!
//! Amplitude files hold one `re im` pair per line. Spectral problem files
//! hold `key = value` header lines (`n`, `n_s`, `t0`, and one of `a` or
//! `eta`) followed by `E weight` pairs. Blank lines and `#` comments are
//! ignored in both.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qpe::{default_scale, SpectralProblem};
use crate::state::StateVector;

/// Allowed deviation of the squared norm from one before a warning.
pub const NORM_TOLERANCE: f64 = 1e-6;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn number(line: usize, token: &str) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| parse_error(line, format!("not a number: {token:?}")))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("non-finite value {token:?}")));
    }
    Ok(v)
}

fn pair(line: usize, text: &str) -> Result<(f64, f64)> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    match tokens.as_slice() {
        [x, y] => Ok((number(line, x)?, number(line, y)?)),
        _ => Err(parse_error(line, format!("expected two numbers, found {}", tokens.len()))),
    }
}

/// Reads a state, normalizing it. A squared norm off by more than
/// [`NORM_TOLERANCE`] is logged.
pub fn parse_amplitude_file(text: &str) -> Result<StateVector> {
    let mut amps = Vec::new();
    let mut last = 0;
    for (line, body) in content_lines(text) {
        let (re, im) = pair(line, body)?;
        amps.push(Complex64::new(re, im));
        last = line;
    }
    if amps.is_empty() {
        return Err(parse_error(1, "no amplitudes"));
    }
    if !amps.len().is_power_of_two() {
        return Err(parse_error(
            last,
            format!("{} amplitudes is not a power of two", amps.len()),
        ));
    }
    if amps.len() > 1usize << crate::MAX_QUBITS {
        return Err(Error::Capacity {
            qubits: amps.len().trailing_zeros(),
            max: crate::MAX_QUBITS,
        });
    }
    let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
        log::warn!("amplitude file has squared norm {norm_sq}; normalizing");
    }
    StateVector::normalized(amps)
}

pub fn write_amplitude_file(state: &StateVector) -> String {
    state
        .amplitudes()
        .iter()
        .map(|a| format!("{:e} {:e}\n", a.re, a.im))
        .collect()
}

#[derive(Default)]
struct Header {
    n: Option<u32>,
    n_system: Option<u32>,
    scale: Option<f64>,
    decay_rate: Option<f64>,
    eta: Option<f64>,
}

fn set_once<T>(slot: &mut Option<T>, value: T, line: usize, key: &str) -> Result<()> {
    if slot.replace(value).is_some() {
        return Err(parse_error(line, format!("duplicate key {key}")));
    }
    Ok(())
}

fn small_int(line: usize, token: &str) -> Result<u32> {
    token
        .parse::<u32>()
        .ok()
        .filter(|&v| v <= 62)
        .ok_or_else(|| parse_error(line, format!("expected a qubit count, found {token:?}")))
}

/// Reads a spectral problem. `t0 = auto` picks [`default_scale`].
pub fn parse_spectral_problem(text: &str) -> Result<SpectralProblem> {
    let mut header = Header::default();
    let mut auto_scale = false;
    let mut eigenvalues = Vec::new();
    let mut weights = Vec::new();
    let mut last = 1;
    for (line, body) in content_lines(text) {
        last = line;
        if let Some((key, value)) = body.split_once('=') {
            if !eigenvalues.is_empty() {
                return Err(parse_error(line, "header keys must precede eigenvalue pairs"));
            }
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n" => set_once(&mut header.n, small_int(line, value)?, line, key)?,
                "n_s" => set_once(&mut header.n_system, small_int(line, value)?, line, key)?,
                "t0" if value == "auto" => {
                    auto_scale = true;
                    set_once(&mut header.scale, f64::NAN, line, key)?
                }
                "t0" => set_once(&mut header.scale, number(line, value)?, line, key)?,
                "a" => set_once(&mut header.decay_rate, number(line, value)?, line, key)?,
                "eta" => set_once(&mut header.eta, number(line, value)?, line, key)?,
                _ => return Err(parse_error(line, format!("unknown key {key:?}"))),
            }
        } else {
            let (e, w) = pair(line, body)?;
            eigenvalues.push(e);
            weights.push(w);
        }
    }
    let missing = |key: &str| parse_error(last, format!("missing key {key}"));
    let n = header.n.ok_or_else(|| missing("n"))?;
    let n_system = header.n_system.ok_or_else(|| missing("n_s"))?;
    if n + n_system > crate::MAX_QUBITS {
        return Err(Error::Capacity {
            qubits: n + n_system,
            max: crate::MAX_QUBITS,
        });
    }
    let mut scale = header.scale.ok_or_else(|| missing("t0"))?;
    if eigenvalues.is_empty() {
        return Err(parse_error(last, "no eigenvalue pairs"));
    }
    if auto_scale {
        scale = default_scale(&eigenvalues, n)?;
    }
    match (header.decay_rate, header.eta) {
        (Some(a), None) => SpectralProblem::new(eigenvalues, weights, scale, n, n_system, a),
        (None, Some(eta)) => SpectralProblem::with_eta(eigenvalues, weights, scale, n, n_system, eta),
        (Some(_), Some(_)) => Err(parse_error(last, "give only one of a and eta")),
        (None, None) => Err(missing("a or eta")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitudes_round_trip() {
        let s = StateVector::from_real(&[0.6, 0.0, 0.0, 0.8]).unwrap();
        let back = parse_amplitude_file(&write_amplitude_file(&s)).unwrap();
        assert!((back.fidelity(&s).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unnormalized_amplitudes_are_rescaled() {
        let s = parse_amplitude_file("# two qubits\n1 0\n1 0\n\n1 0\n1 0 # last\n").unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn amplitude_errors_carry_lines() {
        assert_eq!(
            parse_amplitude_file("1 0\n1 x\n"),
            Err(Error::Parse {
                line: 2,
                message: "not a number: \"x\"".into()
            })
        );
        assert!(matches!(parse_amplitude_file("1 0\n1 0\n1 0\n"), Err(Error::Parse { line: 3, .. })));
        assert!(parse_amplitude_file("0 0\n0 0\n").is_err());
        assert!(parse_amplitude_file("").is_err());
        assert!(parse_amplitude_file("1 0 0\n").is_err());
    }

    #[test]
    fn spectral_problem_with_eta() {
        let p = parse_spectral_problem("n = 6\nn_s = 1\nt0 = 4\neta = 2\n1.5 0.25\n3.0 0.75\n").unwrap();
        assert_eq!(p.n(), 6);
        assert!((p.eta() - 2.0).abs() < 1e-12);
        assert_eq!(p.weights(), &[0.25, 0.75]);
    }

    #[test]
    fn spectral_problem_errors() {
        assert!(matches!(
            parse_spectral_problem("n = 6\nt0 = 1\na = 0.1\n1 1\n"),
            Err(Error::Parse { .. })
        ));
        assert!(parse_spectral_problem("n = 6\nn_s = 0\nt0 = 1\na = 0.1\neta = 1\n1 1\n").is_err());
        assert!(parse_spectral_problem("n = 6\nn_s = 0\nt0 = 1\na = 0.1\n1 1\nn = 3\n").is_err());
        assert!(parse_spectral_problem("n = 6\nn = 6\n").is_err());
        assert!(parse_spectral_problem("n = 20\nn_s = 10\nt0 = 1\na = 0.1\n1 1\n").is_err());
    }

    #[test]
    fn automatic_scale() {
        let p = parse_spectral_problem("n = 5\nn_s = 1\nt0 = auto\na = 0.2\n1 0.5\n2 0.5\n").unwrap();
        assert!((p.scale() - 0.9 * 32.0 / 2.0).abs() < 1e-12);
    }
}
