//! Property tests over randomly generated univalent maps.

use std::f64::consts::PI;

use num_complex::Complex64;
use npgrunsky::decay::{order_eigenvalues, tail_vs_eigenvalue_study};
use npgrunsky::{ExteriorMap, GrunskyTable, Spectrum, SymmetrizedGrunsky, TruncatedNpMatrix, Verdict};
use proptest::prelude::*;

/// Maps with `Σ k|a_k| γ^{−(k+1)} ≤ 0.8`, so univalence is certified.
fn univalent_map() -> impl Strategy<Value = ExteriorMap> {
    (
        0.5f64..2.0,
        (-1.0f64..1.0, -1.0f64..1.0),
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..12),
        0.5f64..3.0,
    )
        .prop_map(|(gamma, a0, raw, decay)| {
            let mut coeffs: Vec<Complex64> = raw
                .iter()
                .enumerate()
                .map(|(i, &(re, im))| Complex64::new(re, im) * ((i + 1) as f64).powf(-decay))
                .collect();
            let sum: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(i, a)| (i + 1) as f64 * a.norm() * gamma.powi(-(i as i32 + 2)))
                .sum();
            if sum > 0.8 {
                coeffs.iter_mut().for_each(|a| *a *= 0.8 / sum);
            }
            ExteriorMap::new(gamma, Complex64::new(a0.0, a0.1), coeffs).unwrap()
        })
}

fn singular_values(map: &ExteriorMap, n: usize) -> Vec<f64> {
    let s = TruncatedNpMatrix::for_map(map, n).unwrap().spectrum().unwrap();
    s.eigenvalues.iter().step_by(2).copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_maps_are_certified(map in univalent_map()) {
        prop_assert_eq!(map.univalence().verdict, Verdict::Pass);
    }

    #[test]
    fn grunsky_identity_holds(map in univalent_map()) {
        let r = GrunskyTable::recursive(&map, 32).unwrap().identity_residual();
        prop_assert!(r.relative() <= 1e-10, "relative residual {}", r.relative());
    }

    #[test]
    fn scale_factor_matches_finite_differences(map in univalent_map(), drho in 0.01f64..1.0, theta in 0.0f64..(2.0 * PI)) {
        let rho = map.rho0() + drho;
        let h = map.scale_factor(rho, theta).unwrap();
        let at = |r: f64, t: f64| map.eval(Complex64::from_polar(r.exp(), t)).unwrap();
        let step = 1e-6;
        let d_rho = (at(rho + step, theta) - at(rho - step, theta)).norm() / (2.0 * step);
        let d_theta = (at(rho, theta + step) - at(rho, theta - step)).norm() / (2.0 * step);
        prop_assert!((d_rho - h).abs() <= 1e-8 * h, "∂ρ {d_rho} vs h {h}");
        prop_assert!((d_theta - h).abs() <= 1e-8 * h, "∂θ {d_theta} vs h {h}");
    }

    #[test]
    fn ellipse_curvature_closed_forms(a in 0.0f64..0.8) {
        let map = ExteriorMap::ellipse(Complex64::new(a, 0.0), 1.0).unwrap();
        let (big, small) = (1.0 + a, 1.0 - a);
        let k0 = map.sample_at(0.0).unwrap().curvature;
        let k1 = map.sample_at(PI / 2.0).unwrap().curvature;
        prop_assert!((k0 - big / (small * small)).abs() <= 1e-10);
        prop_assert!((k1 - small / (big * big)).abs() <= 1e-10);
    }

    #[test]
    fn spectrum_is_symmetric(map in univalent_map()) {
        let mat = TruncatedNpMatrix::for_map(&map, 24).unwrap();
        let spec = mat.spectrum().unwrap();
        for pair in spec.eigenvalues.chunks(2) {
            prop_assert_eq!(pair[0], -pair[1]);
        }
        let herm = mat.hermitian_eigenvalues();
        let mut svd = spec.eigenvalues.clone();
        svd.sort_by(|a, b| b.total_cmp(a));
        for (x, y) in herm.iter().zip(&svd) {
            prop_assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
        }
        prop_assert!(spec.magnitudes().iter().all(|x| *x < 0.5));
    }

    #[test]
    fn truncation_is_monotone(map in univalent_map()) {
        let (n, wide) = (12, 24);
        let small = singular_values(&map, n);
        let large = singular_values(&map, wide);
        let tail = TruncatedNpMatrix::for_map(&map, wide).unwrap().tail_norm(n).unwrap();
        for i in 0..n {
            prop_assert!(large[i] >= small[i] - 1e-14);
            prop_assert!(large[i] - small[i] <= tail + 1e-14, "σ_{} moved {} > tail {}", i + 1, large[i] - small[i], tail);
        }
    }

    #[test]
    fn weyl_courant_holds(map in univalent_map()) {
        let cuts: Vec<usize> = (0..24).collect();
        for row in tail_vs_eigenvalue_study(&map, &cuts, 24).unwrap() {
            prop_assert!(row.holds, "N = {}: {} > {}", row.n_cut, row.eigenvalue, row.tail_norm);
        }
    }

    #[test]
    fn scaling_leaves_normalized_grunsky_invariant(map in univalent_map()) {
        let scaled = map.scaled(2.0).unwrap();
        let a = SymmetrizedGrunsky::new(&GrunskyTable::recursive(&map, 16).unwrap()).unwrap();
        let b = SymmetrizedGrunsky::new(&GrunskyTable::recursive(&scaled, 16).unwrap()).unwrap();
        for m in 1..=16 {
            for k in 1..=16 {
                prop_assert!((a.normalized(m, k) - b.normalized(m, k)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn ordering_is_a_permutation(vals in prop::collection::vec(0.0f64..0.5, 0..20), signs in prop::collection::vec(any::<bool>(), 20)) {
        let mut raw = Vec::new();
        for (i, v) in vals.iter().enumerate() {
            raw.push(*v);
            raw.push(if signs[i] { -*v } else { *v });
        }
        let spec = Spectrum::from_eigenvalues(raw.clone(), 0.5);
        let ordered = order_eigenvalues(&spec, 1e-12).unwrap().spectrum.eigenvalues;
        let mut a = raw;
        let mut b = ordered.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
        for w in ordered.windows(2) {
            prop_assert!(w[0].abs() >= w[1].abs());
        }
    }
}

/// Slack on an empirically estimated convergence order; finite-n corrections
/// of relative size O(n⁻²) can push the estimate just below its asymptote.
const ORDER_SLACK: f64 = 0.01;

/// The trapezoid rule for `∮ h dθ` converges spectrally, so the inscribed
/// polygon perimeter approaches it at its own second-order rate.
#[test]
fn boundary_length_converges_at_second_order() {
    for map in [
        ExteriorMap::ellipse(Complex64::new(0.5, 0.0), 1.0).unwrap(),
        ExteriorMap::new(
            1.5,
            Complex64::default(),
            (1..=16).map(|k| Complex64::new(0.3 / (k * k * k) as f64, 0.1 / (k * k) as f64)).collect(),
        )
        .unwrap(),
    ] {
        let trapezoid = |n: usize| {
            map.boundary_sample(n).unwrap().iter().map(|s| s.h).sum::<f64>() * 2.0 * PI / n as f64
        };
        let length = trapezoid(4096);
        assert!((trapezoid(2048) - length).abs() <= 1e-12 * length);
        let perimeter = |n: usize| {
            let p = map.boundary_sample(n).unwrap();
            (0..n).map(|i| (p[(i + 1) % n].point - p[i].point).norm()).sum::<f64>()
        };
        let errors: Vec<f64> = [64, 128, 256].iter().map(|&n| length - perimeter(n)).collect();
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 2.0 - ORDER_SLACK, "order {order}");
        }
    }
}
