use lfreadout::basis::*;
use num_complex::Complex64;
use proptest::prelude::*;

/// LF amplitudes by an explicit DFT of a numerically normalized cusp.
fn brute_lf(n: u32, a: f64, center: u64) -> Vec<f64> {
    let dim = 1usize << n;
    let cusp: Vec<f64> = (0..dim).map(|j| (-a * j.min(dim - j) as f64).exp()).collect();
    let norm = cusp.iter().map(|x| x * x).sum::<f64>().sqrt();
    (0..dim)
        .map(|k| {
            let z: Complex64 = (0..dim)
                .map(|j| {
                    let phase = 2.0 * std::f64::consts::PI * (j * (center as usize + dim - k)) as f64 / dim as f64;
                    Complex64::from_polar(cusp[j] / norm, phase)
                })
                .sum();
            assert!(z.im.abs() < 1e-9);
            z.re / (dim as f64).sqrt()
        })
        .collect()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[test]
fn closed_form_matches_dft() {
    for (n, a, c) in [(3, 0.2, 0), (5, 1.3, 7), (6, 0.05, 63), (4, 4.0, 9)] {
        let p = LfParam::new(n, a, c).unwrap();
        let brute = brute_lf(n, a, c as u64);
        for (x, y) in lf_vector(&p).iter().zip(&brute) {
            assert!((x - y).abs() < 1e-12, "n={n} a={a}");
        }
    }
}

#[test]
fn decay_rate_below_floor_is_rejected() {
    assert!(LfParam::new(5, 0.0, 1).is_err());
    assert!(LfParam::new(5, f64::NAN, 1).is_err());
    assert!(LfParam::new(40, 0.3, 1).is_err());
    assert_eq!(LfParam::new(5, 0.3, -1).unwrap().center(), 31);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lf_is_normalized(n in 1u32..10, a in 1e-3f64..6.0, c in 0i64..1024) {
        let v = lf_vector(&LfParam::new(n, a, c).unwrap());
        prop_assert!((dot(&v, &v) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lf_peaks_at_center(n in 2u32..9, a in 1e-2f64..4.0, c in 0i64..512) {
        let p = LfParam::new(n, a, c).unwrap();
        let v = lf_vector(&p);
        let top = (0..v.len()).max_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap();
        prop_assert_eq!(top as u64, p.center());
    }

    #[test]
    fn overlap_kernels_match_brute_force(
        n in 2u32..8, a in 0.01f64..3.0, a2 in 0.01f64..3.0, c1 in 0u64..128, c2 in 0u64..128
    ) {
        let dim = 1u64 << n;
        let (c1, c2) = (c1 % dim, c2 % dim);
        let u = brute_lf(n, a, c1);
        let v = brute_lf(n, a2, c2);
        let shift = c2 as i64 - c1 as i64;
        let s = lf_overlap(n, a, a2, shift).unwrap();
        prop_assert!((s - dot(&u, &v)).abs() < 1e-9, "{} {}", s, dot(&u, &v));
        let u2: Vec<f64> = u.iter().map(|x| x * x).collect();
        let v2: Vec<f64> = v.iter().map(|x| x * x).collect();
        let q = lf_sq_overlap(n, a, a2, shift).unwrap();
        prop_assert!((q - dot(&u2, &v2)).abs() < 1e-9);
    }

    #[test]
    fn overlap_matrix_is_symmetric_with_unit_diagonal(
        n in 3u32..8, rates in proptest::collection::vec(0.05f64..2.0, 1..5), seed in 0u64..1000
    ) {
        let dim = 1i64 << n;
        let params: Vec<_> = rates
            .iter()
            .enumerate()
            .map(|(i, &a)| LfParam::new(n, a, (seed as i64 * 7 + i as i64 * 5) % dim).unwrap())
            .collect();
        let s = overlap_matrix(&params).unwrap();
        let q = sq_overlap_matrix(&params).unwrap();
        for i in 0..params.len() {
            prop_assert!((s[(i, i)] - 1.0).abs() < 1e-12);
            for j in 0..params.len() {
                prop_assert!((s[(i, j)] - s[(j, i)]).abs() < 1e-14);
                prop_assert!((q[(i, j)] - q[(j, i)]).abs() < 1e-14);
                prop_assert!(s[(i, j)].abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn derivative_matches_difference(n in 2u32..8, a in 0.05f64..3.0, k in -200i64..200) {
        let h = 1e-6;
        let fd = (lf_amplitude(n, a + h, k).unwrap() - lf_amplitude(n, a - h, k).unwrap()) / (2.0 * h);
        let an = lf_amplitude_da(n, a, k).unwrap();
        prop_assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()));
    }

    #[test]
    fn slater_norms(n in 1u32..12, a in 1e-4f64..8.0) {
        let s = slater_vector(n, a).unwrap();
        prop_assert!((dot(&s, &s) - 1.0).abs() < 1e-10);
        let c = one_sided_norm(n, a).unwrap();
        let one_sided: f64 = (0..1u64 << n).map(|t| (c * (-a * t as f64).exp()).powi(2)).sum();
        prop_assert!((one_sided - 1.0).abs() < 1e-10);
    }
}

#[test]
fn model_profile_matches_amplitudes() {
    let params = vec![LfParam::new(5, 0.4, 3).unwrap(), LfParam::new(5, 0.9, 12).unwrap()];
    let m = LcLfModel::from_real(&[0.7, -0.3], params).unwrap();
    let amps = m.amplitudes();
    let direct: Vec<f64> = (0..32)
        .map(|k| 0.7 * lf_vector(&m.params()[0])[k] - 0.3 * lf_vector(&m.params()[1])[k])
        .collect();
    for (x, y) in amps.iter().zip(&direct) {
        assert!((x.re - y).abs() < 1e-14 && x.im == 0.0);
    }
}
