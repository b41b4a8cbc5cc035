use convexhodge::exterior::{binomial, conjugate, wedge, PQForm};
use convexhodge::mixed::default_resolution;
use convexhodge::random::{probe_bodies, random_smooth_body, rng};
use convexhodge::spectral::spectral_consistency;
use convexhodge::sphere::build_grid;
use convexhodge::valuation::{convolve, FormalValuation, C64};
use convexhodge::{Body, MixedVolumes, SphereGrid};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn grid(n: usize) -> &'static SphereGrid {
    static GRIDS: OnceLock<Vec<SphereGrid>> = OnceLock::new();
    &GRIDS.get_or_init(|| (2..=4).map(|n| build_grid(n, default_resolution(n)).unwrap()).collect())[n - 2]
}

fn bodies(n: usize, seed: u64, count: usize) -> Vec<Body> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| random_smooth_body(n, &mut r, grid(n)).unwrap())
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn tol(n: usize) -> f64 {
    if n <= 3 {
        1e-9
    } else {
        1e-7
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mixed_volume_is_symmetric(seed in any::<u64>(), n in 2usize..=4, shift in 1usize..4) {
        let mv = MixedVolumes::new(grid(n));
        let b = bodies(n, seed, n);
        let mut rotated = b.clone();
        rotated.rotate_left(shift % n);
        let v1 = mv.mixed_volume_ordered(&b).unwrap();
        let v2 = mv.mixed_volume_ordered(&rotated).unwrap();
        prop_assert!(rel(v1, v2) <= tol(n), "{} vs {}", v1, v2);
    }

    #[test]
    fn mixed_volume_is_minkowski_linear(seed in any::<u64>(), n in 2usize..=3, lambda in 0.1f64..3.0) {
        let mv = MixedVolumes::new(grid(n));
        let b = bodies(n, seed, n + 1);
        let sum = Body::minkowski_sum(&[b[0].clone(), b[n].dilate(lambda).unwrap()]).unwrap();
        let mut args = b[..n].to_vec();
        let lhs = { args[0] = sum; mv.mixed_volume(&args).unwrap() };
        args[0] = b[0].clone();
        let v0 = mv.mixed_volume(&args).unwrap();
        args[0] = b[n].clone();
        let v1 = mv.mixed_volume(&args).unwrap();
        prop_assert!(rel(lhs, v0 + lambda * v1) <= tol(n));
    }

    #[test]
    fn mixed_volume_is_translation_invariant(seed in any::<u64>(), n in 2usize..=4) {
        let mv = MixedVolumes::new(grid(n));
        let b = bodies(n, seed, n);
        let mut r = rng(seed ^ 0xabc);
        let offset: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        let mut moved = b.clone();
        moved[0] = b[0].translate(&offset).unwrap();
        let v1 = mv.mixed_volume(&b).unwrap();
        let v2 = mv.mixed_volume(&moved).unwrap();
        prop_assert!(rel(v1, v2) <= tol(n));
    }

    #[test]
    fn mixed_volume_is_positive_and_monotone(seed in any::<u64>(), n in 2usize..=4) {
        let mv = MixedVolumes::new(grid(n));
        let b = bodies(n, seed, n);
        let v = mv.mixed_volume(&b).unwrap();
        let mut bigger = b.clone();
        bigger[0] = Body::minkowski_sum(&[b[0].clone(), Body::ball(n, 0.1).unwrap()]).unwrap();
        prop_assert!(v > 0.0);
        prop_assert!(mv.mixed_volume(&bigger).unwrap() > v);
    }

    #[test]
    fn steiner_polynomial(seed in any::<u64>(), n in 2usize..=3) {
        let mv = MixedVolumes::new(grid(n));
        let b = bodies(n, seed, 1);
        prop_assert!(mv.steiner_check(&b[0], &[0.0, 0.3, 1.7]).unwrap() <= tol(n));
    }

    #[test]
    fn oracle_agrees(seed in any::<u64>(), n in 2usize..=3) {
        let mv = MixedVolumes::new(grid(n));
        let b = bodies(n, seed, n);
        let v = mv.mixed_volume(&b).unwrap();
        let o = mv.polarization_oracle(&b).unwrap();
        prop_assert!(rel(v, o) <= 1e-7);
    }

    #[test]
    fn convolution_of_translated_volumes(seed in any::<u64>(), n in 2usize..=3) {
        let mv = MixedVolumes::new(grid(n));
        let b = bodies(n, seed, 2);
        let lhs = convolve(
            &FormalValuation::translated_volume(&b[0]).unwrap(),
            &FormalValuation::translated_volume(&b[1]).unwrap(),
        ).unwrap();
        let rhs = FormalValuation::translated_volume(&Body::minkowski_sum(&b).unwrap()).unwrap();
        for probe in probe_bodies(n, seed, grid(n)).unwrap() {
            let l = lhs.evaluate(&mv, &probe).unwrap().re;
            let r = rhs.evaluate(&mv, &probe).unwrap().re;
            prop_assert!(rel(l, r) <= 1e-8, "{} vs {}", l, r);
        }
    }

    #[test]
    fn convolution_is_commutative_and_associative(seed in any::<u64>(), n in 2usize..=4) {
        let b = bodies(n, seed, 3);
        let mut r = rng(seed);
        let val = |r: &mut ChaCha8Rng| {
            let mut phi = FormalValuation::volume(n).scale(C64::new(r.random_range(-1.0..1.0), 0.0));
            for body in &b {
                let m = r.random_range(1..=n);
                let g = FormalValuation::mixed(n, vec![body.clone(); m], r.random_range(-1.0..1.0)).unwrap();
                phi = phi.add(&g).unwrap();
            }
            phi
        };
        let (x, y, z) = (val(&mut r), val(&mut r), val(&mut r));
        let same = |a: &FormalValuation, b: &FormalValuation| {
            a.len() == b.len()
                && a.terms().zip(b.terms()).all(|((g, c), (h, d))| {
                    g.bodies().iter().map(Body::key).eq(h.bodies().iter().map(Body::key))
                        && (c - d).norm() <= 1e-14 * c.norm().max(1.0)
                })
        };
        prop_assert!(same(&convolve(&x, &y).unwrap(), &convolve(&y, &x).unwrap()));
        let left = convolve(&convolve(&x, &y).unwrap(), &z).unwrap();
        let right = convolve(&x, &convolve(&y, &z).unwrap()).unwrap();
        prop_assert!(same(&left, &right));
    }

    #[test]
    fn wedge_is_graded_commutative(seed in any::<u64>(), p1 in 0usize..=2, q1 in 0usize..=2, p2 in 0usize..=1, q2 in 0usize..=1) {
        let m = 3;
        let mut r = rng(seed);
        let mut form = |p, q| {
            let len = binomial(m, p) * binomial(m, q);
            PQForm::from_coeffs(m, p, q, (0..len).map(|_| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect()).unwrap()
        };
        let a = form(p1, q1);
        let b = form(p2, q2);
        let ab = wedge(&a, &b).unwrap();
        let ba = wedge(&b, &a).unwrap();
        let sign = if ((p1 + q1) * (p2 + q2)) % 2 == 0 { 1.0 } else { -1.0 };
        let diff = ab.add(&ba.scale(C64::new(-sign, 0.0))).unwrap();
        prop_assert!(diff.norm() <= 1e-13);
        prop_assert_eq!(conjugate(&conjugate(&a)), a.clone());
        // conjugation is multiplicative
        let lhs = conjugate(&ab);
        let rhs = wedge(&conjugate(&a), &conjugate(&b)).unwrap();
        prop_assert!(lhs.add(&rhs.scale(C64::new(-1.0, 0.0))).unwrap().norm() <= 1e-13);
    }

    #[test]
    fn spectral_identity(n in 2usize..=10, r_frac in 0.0f64..1.0, m in 2usize..=30) {
        let r = 1 + ((n / 2 - 1) as f64 * r_frac).round() as usize;
        prop_assert!(spectral_consistency(n, r, m).unwrap() <= 1e-11);
    }
}
