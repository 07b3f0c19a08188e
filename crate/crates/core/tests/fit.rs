use lfreadout::basis::LfParam;
use lfreadout::estimator::{MeasurementBudget, OverlapOracle, ReadoutTarget, TargetOracle};
use lfreadout::fit::*;
use lfreadout::{rng, targets, StateVector};
use num_complex::Complex64;
use rand::Rng;

fn reference_params(centers: [i64; 3]) -> Vec<LfParam> {
    [0.360, 1.672, 0.490]
        .iter()
        .zip(centers)
        .map(|(&a, c)| LfParam::new(5, a, c).unwrap())
        .collect()
}

fn exact_oracle(state: StateVector) -> TargetOracle {
    TargetOracle::new(ReadoutTarget::new(state), MeasurementBudget::exact()).unwrap()
}

#[test]
fn reference_instance_coefficients() {
    let oracle = exact_oracle(targets::psi_ideal(5).unwrap());
    let (_, sol) = fidelity_solution(&reference_params([8, 14, 16]), &oracle).unwrap();
    let expected = [0.380, -0.517, 1.272];
    for (d, e) in sol.coeffs.iter().zip(expected) {
        assert!((d.re - e).abs() < 0.02 && d.im.abs() < 1e-9, "{d} {e}");
    }
    assert!((1.0 - sol.kappa_max - 7.1e-3).abs() < 1e-3);
}

#[test]
fn kappa_matches_rank_one_formula() {
    let oracle = exact_oracle(targets::psi_ideal(5).unwrap());
    let params = reference_params([7, 13, 17]);
    let (b, sol) = fidelity_solution(&params, &oracle).unwrap();
    let s = lfreadout::basis::overlap_matrix(&params).unwrap();
    assert!((rank_one_kappa(&b, &s).unwrap() - sol.kappa_max).abs() < 1e-9);
    assert!((fidelity_of(&sol.coeffs, &b, &s) - sol.kappa_max).abs() < 1e-9);
    let omega: Complex64 = sol.coeffs.iter().zip(&b).map(|(d, x)| d * x).sum();
    assert!(omega.im.abs() < 1e-12 && omega.re > 0.0);
}

fn random_instance(seed: u64) -> (StateVector, Vec<LfParam>) {
    let mut r = rng::stream(seed, &[0x6772]);
    let n = r.random_range(3..=6u32);
    let dim = 1i64 << n;
    let t = StateVector::normalized(
        (0..dim)
            .map(|_| Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
            .collect(),
    )
    .unwrap();
    let m = r.random_range(1..=3usize);
    let mut centers: Vec<i64> = Vec::new();
    while centers.len() < m {
        let c = r.random_range(0..dim);
        if !centers.contains(&c) {
            centers.push(c);
        }
    }
    let params = centers
        .into_iter()
        .map(|c| LfParam::new(n, r.random_range(0.2..2.0), c).unwrap())
        .collect();
    (t, params)
}

#[test]
fn gradients_match_objective_differences() {
    for seed in 0..20 {
        let (t, params) = random_instance(seed);
        let oracle = exact_oracle(t);
        let fid = fidelity_gradient_a(&params, &oracle, 1e-5).unwrap().gradient;
        let res = residual_gradient_a(&params, &oracle, 1e-5).unwrap().gradient;
        let norm_f = fid.iter().map(|g| g * g).sum::<f64>().sqrt();
        let norm_r = res.iter().map(|g| g * g).sum::<f64>().sqrt();
        for l in 0..params.len() {
            let h = 1e-5;
            let mut up = params.clone();
            let mut down = params.clone();
            up[l] = up[l].with_decay_rate(params[l].decay_rate() + h).unwrap();
            down[l] = down[l].with_decay_rate(params[l].decay_rate() - h).unwrap();
            let fd_f = (fidelity_objective(&up, &oracle).unwrap() - fidelity_objective(&down, &oracle).unwrap()) / (2.0 * h);
            let fd_r = (residual_objective(&up, &oracle).unwrap() - residual_objective(&down, &oracle).unwrap()) / (2.0 * h);
            assert!((fid[l] - fd_f).abs() < f64::max(1e-6, 1e-3 * norm_f), "seed {seed} l {l}: {} {fd_f}", fid[l]);
            assert!((res[l] - fd_r).abs() < f64::max(1e-6, 1e-3 * norm_r), "seed {seed} l {l}: {} {fd_r}", res[l]);
        }
    }
}

#[test]
fn coincident_parameters_are_rejected() {
    let oracle = exact_oracle(targets::psi_ideal(5).unwrap());
    let p = LfParam::new(5, 0.4, 3).unwrap();
    assert!(matches!(
        fidelity_solution(&[p, p], &oracle),
        Err(lfreadout::Error::SingularOverlap { first: 0, second: 1 })
    ));
}

#[test]
fn state_fit_converges_and_is_deterministic() {
    let problem = FidelityFitProblem {
        initial: reference_params([7, 13, 17]),
        settings: FitSettings {
            update_widths: false,
            seed: 3,
            ..Default::default()
        },
    };
    let run = || fit_state(&problem, &exact_oracle(targets::psi_ideal(5).unwrap())).unwrap();
    let a = run();
    let b = run();
    assert!(a.converged && a.loss < 0.01);
    assert_eq!(a.records, b.records);
    assert_eq!(a.n_iter, a.records.len() as u64);
    assert!(a.m_iter >= 3 && a.m_iter <= a.records.len() + 2);
}

#[test]
fn width_updates_do_not_increase_loss() {
    let problem = FidelityFitProblem {
        initial: reference_params([8, 14, 16]),
        settings: FitSettings {
            threshold: 1e-3,
            max_iterations: 30,
            seed: 1,
            ..Default::default()
        },
    };
    let oracle = exact_oracle(targets::psi_ideal(5).unwrap());
    let trace = fit_state(&problem, &oracle).unwrap();
    let first = trace.records[0].loss;
    assert!(trace.loss <= first, "{} {first}", trace.loss);
    assert!(trace.model.decay_rates().iter().all(|&a| a >= WIDTH_FLOOR));
}

#[test]
fn amplitude_fit_recovers_squared_lf_target() {
    let truth: Vec<LfParam> = [8, 16, 24].iter().map(|&c| LfParam::new(5, 0.3, c).unwrap()).collect();
    let target = targets::squared_lf_target(&truth, &[0.6, 1.0, 0.8]).unwrap();
    let problem = AmplitudeFitProblem {
        initial: [5, 14, 27].iter().map(|&c| LfParam::new(5, 0.3, c).unwrap()).collect(),
        settings: FitSettings {
            update_widths: false,
            seed: 2,
            ..Default::default()
        },
    };
    let oracle = exact_oracle(target);
    let trace = fit_amplitude(&problem, &oracle).unwrap();
    assert!(trace.converged, "{}", trace.relative_loss);
    assert!(trace.relative_loss < 0.01);
    assert!((trace.relative_loss - trace.loss / oracle.self_norm().unwrap()).abs() < 1e-15);
}

#[test]
fn settings_validation() {
    let bad = FitSettings {
        threshold: 0.0,
        ..Default::default()
    };
    assert!(bad.validate().is_err());
    let bad = FitSettings {
        schedule: AnnealingSchedule {
            beta0: -1.0,
            ..Default::default()
        },
        ..Default::default()
    };
    assert!(bad.validate().is_err());
}
