//! Property suites on random inputs: metric axioms, Gram positivity,
//! matrix functions and subspace distances.

use fsdr_core::kernels::{gram, is_universal, KernelSpec, PSD_TOL};
use fsdr_core::linalg::{orthonormalize, projection_distance};
use fsdr_core::metrics::{
    matrix_exp, matrix_log, pairwise_distances, sphere_geodesic, spd_frobenius, spd_log_euclidean, wasserstein2,
    EmpiricalDistribution, MetricKind, ResponseSet, SpdMatrix, UnitVector,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn samples(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, m)
}

fn dist(v: Vec<f64>) -> EmpiricalDistribution {
    EmpiricalDistribution::new(v).unwrap()
}

fn spd(r: usize) -> impl Strategy<Value = SpdMatrix> {
    prop::collection::vec(-1.0..1.0f64, r * r).prop_map(move |v| {
        let a = DMatrix::from_vec(r, r, v);
        let m = &a * a.transpose() + DMatrix::identity(r, r) * 0.1;
        SpdMatrix::new((&m + m.transpose()) * 0.5).unwrap()
    })
}

fn unit(dim: usize) -> impl Strategy<Value = UnitVector> {
    prop::collection::vec(-1.0..1.0f64, dim)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let v = DVector::from_vec(v);
            UnitVector::new(v.normalize()).unwrap()
        })
}

/// Checks zero self-distance, symmetry and the triangle inequality.
fn check_axioms(d: impl Fn(usize, usize) -> f64, k: usize) -> std::result::Result<(), TestCaseError> {
    for i in 0..k {
        prop_assert!(d(i, i).abs() < 1e-6, "d(x,x) = {}", d(i, i));
        for j in 0..k {
            let dij = d(i, j);
            prop_assert!(dij >= 0.0);
            prop_assert!((dij - d(j, i)).abs() < 1e-9);
            for l in 0..k {
                prop_assert!(d(i, l) <= dij + d(j, l) + 1e-9);
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wasserstein_is_a_metric(a in samples(7), b in samples(7), c in samples(7)) {
        let ds = [dist(a), dist(b), dist(c)];
        check_axioms(|i, j| wasserstein2(&ds[i], &ds[j]).unwrap(), 3)?;
    }

    #[test]
    fn spd_distances_are_metrics(a in spd(3), b in spd(3), c in spd(3)) {
        let ms = [a, b, c];
        check_axioms(|i, j| spd_frobenius(&ms[i], &ms[j]).unwrap(), 3)?;
        check_axioms(|i, j| spd_log_euclidean(&ms[i], &ms[j]).unwrap(), 3)?;
    }

    #[test]
    fn geodesic_is_a_metric(a in unit(3), b in unit(3), c in unit(3)) {
        let vs = [a, b, c];
        check_axioms(|i, j| sphere_geodesic(&vs[i], &vs[j]).unwrap(), 3)?;
        prop_assert!(sphere_geodesic(&vs[0], &vs[1]).unwrap() <= std::f64::consts::PI + 1e-12);
    }

    #[test]
    fn log_exp_round_trip(a in spd(4)) {
        let back = matrix_exp(&matrix_log(&a).unwrap()).unwrap();
        prop_assert!((back - a.matrix()).amax() < 1e-9 * a.matrix().amax().max(1.0));
    }

    #[test]
    fn log_euclidean_of_commuting_scalings(s in 0.1..10.0f64, t in 0.1..10.0f64) {
        let a = SpdMatrix::new(DMatrix::identity(3, 3) * s).unwrap();
        let b = SpdMatrix::new(DMatrix::identity(3, 3) * t).unwrap();
        let expected = 3f64.sqrt() * (s.ln() - t.ln()).abs();
        prop_assert!((spd_log_euclidean(&a, &b).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn projection_distance_ignores_basis_choice(
        v in prop::collection::vec(-1.0..1.0f64, 12),
        r in prop::collection::vec(-1.0..1.0f64, 4),
    ) {
        let b = DMatrix::from_vec(6, 2, v);
        let mix = DMatrix::from_vec(2, 2, r) + DMatrix::identity(2, 2) * 2.5;
        prop_assume!(orthonormalize(&b).is_ok());
        let d = projection_distance(&b, &(&b * mix)).unwrap();
        prop_assert!(d < 1e-8, "distance {d}");
    }

    #[test]
    fn projection_distance_is_bounded(
        u in prop::collection::vec(-1.0..1.0f64, 10),
        v in prop::collection::vec(-1.0..1.0f64, 10),
    ) {
        let (a, b) = (DMatrix::from_vec(5, 2, u), DMatrix::from_vec(5, 2, v));
        prop_assume!(orthonormalize(&a).is_ok() && orthonormalize(&b).is_ok());
        let d = projection_distance(&a, &b).unwrap();
        prop_assert!((0.0..=2.0 + 1e-12).contains(&d));
    }
}

fn assert_psd(ys: &ResponseSet, metric: MetricKind) {
    let d = pairwise_distances(ys, metric).unwrap();
    for spec in [KernelSpec::gaussian(), KernelSpec::laplacian(), KernelSpec::laplacian().with_gamma(3.0)] {
        if !is_universal(metric, spec.family) {
            continue;
        }
        let g = gram(&d, &spec).unwrap();
        assert!(
            g.min_eigenvalue() >= PSD_TOL,
            "{metric} {}: smallest eigenvalue {}",
            spec.family,
            g.min_eigenvalue()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gram_is_psd_for_distributions(v in prop::collection::vec(samples(10), 15)) {
        let ys = ResponseSet::Distributions(v.into_iter().map(dist).collect());
        assert_psd(&ys, MetricKind::Wasserstein2);
    }

    #[test]
    fn gram_is_psd_for_spd(v in prop::collection::vec(spd(3), 15)) {
        let ys = ResponseSet::Spd(v);
        assert_psd(&ys, MetricKind::SpdFrobenius);
        assert_psd(&ys, MetricKind::SpdLogEuclidean);
    }

    #[test]
    fn gram_is_psd_for_sphere_laplacian(v in prop::collection::vec(unit(3), 15)) {
        let ys = ResponseSet::Sphere(v);
        assert!(!is_universal(MetricKind::SphereGeodesic, fsdr_core::KernelFamily::Gaussian));
        assert_psd(&ys, MetricKind::SphereGeodesic);
    }
}
