use nalgebra::DMatrix;
use proptest::prelude::*;

use panel_sphericity::kernels::{sample_traces_with, TracePath};
use panel_sphericity::mc::{read_records, records_to_string, RepRecord};
use panel_sphericity::panel_csv::{read_panel, write_panel};
use panel_sphericity::power::{h1star_moments, power_weak_lpa, power_weak_ulpa};
use panel_sphericity::sim::PanelData;
use panel_sphericity::{
    grj_test, john_u, sample_traces, sigma_traces, within_ols, CovarianceSpec, DisturbanceMatrix,
    LoadingPolicy,
};

fn matrix(max_n: usize, max_t: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (2..max_n, 2..max_t).prop_flat_map(|(n, t)| {
        prop::collection::vec(-10.0f64..10.0, n * t)
            .prop_filter("not all zero", |v| v.iter().any(|x| x.abs() > 1e-3))
            .prop_map(move |v| DMatrix::from_vec(n, t, v))
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_and_dense_paths_agree(m in matrix(40, 40)) {
        let v = DisturbanceMatrix::new(m).unwrap();
        let a = sample_traces_with(&v, TracePath::Dense);
        let b = sample_traces_with(&v, TracePath::Gram);
        prop_assert!(rel(a.tr_s, b.tr_s) < 1e-12);
        prop_assert!(rel(a.tr_s2, b.tr_s2) < 1e-12);
        prop_assert!(a.tr_s2 >= a.tr_s * a.tr_s / v.n() as f64 * (1.0 - 1e-12));
    }

    #[test]
    fn john_u_is_scale_invariant(m in matrix(30, 30), c in 1e-3f64..1e3) {
        let v = DisturbanceMatrix::new(m).unwrap();
        let u = john_u(&sample_traces(&v)).unwrap();
        let uc = john_u(&sample_traces(&v.scaled(c).unwrap())).unwrap();
        prop_assert!(u >= 0.0);
        prop_assert!((u - uc).abs() <= 1e-10 * (1.0 + u));
    }

    #[test]
    fn diagonal_hadamard_equalities(ev in prop::collection::vec(0.01f64..50.0, 2..60)) {
        let n = ev.len();
        let st = sigma_traces(&CovarianceSpec::diagonal(ev), n).unwrap();
        prop_assert!(rel(st.had11, st.tr2) < 1e-13);
        prop_assert!(rel(st.had12, st.tr3) < 1e-13);
        prop_assert!(rel(st.had22, st.tr4) < 1e-13);
        prop_assert!(st.tr2 / n as f64 >= (st.tr1 / n as f64).powi(2) * (1.0 - 1e-12));
    }

    #[test]
    fn spiked_closed_form_matches_dense(
        n in 12usize..80,
        spikes in prop::collection::vec(0.0f64..30.0, 1..10),
        base in 0.1f64..5.0,
        seed in any::<u64>(),
    ) {
        let spec = CovarianceSpec::SpikedFactor {
            base,
            spikes,
            loadings: LoadingPolicy::RandomOrthonormal { seed },
        };
        let a = sigma_traces(&spec, n).unwrap();
        let b = sigma_traces(&CovarianceSpec::dense(spec.materialize(n).unwrap()), n).unwrap();
        for (x, y) in [(a.tr1, b.tr1), (a.tr2, b.tr2), (a.tr3, b.tr3), (a.tr4, b.tr4),
                       (a.had11, b.had11), (a.had12, b.had12), (a.had22, b.had22)] {
            prop_assert!(rel(x, y) < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn alternative_moments_are_scale_free(
        spikes in prop::collection::vec(0.0f64..20.0, 1..5),
        c in 0.01f64..100.0,
        g4 in 1.0f64..9.0,
    ) {
        let st = sigma_traces(&CovarianceSpec::spiked(1.0, spikes), 50).unwrap();
        let a = h1star_moments(&st, g4, 50, 40).unwrap();
        let b = h1star_moments(&st.scaled(c), g4, 50, 40).unwrap();
        prop_assert!(rel(a.mu, b.mu) < 1e-12);
        prop_assert!(rel(a.sigma2, b.sigma2) < 1e-12);
    }

    #[test]
    fn power_values_are_probabilities(
        h in prop::collection::vec(0.0f64..10.0, 1..4),
        c in 0.05f64..20.0,
        alpha in 0.001f64..0.5,
        e1 in 0.5f64..3.0,
        spread in 0.0f64..3.0,
        t in 2usize..1000,
    ) {
        let p = power_weak_lpa(&h, c, alpha).unwrap().power;
        prop_assert!((0.0..=1.0).contains(&p) && p >= alpha - 1e-12);
        let e2 = e1 * e1 + spread;
        let q = power_weak_ulpa((e1, e2, e2), 3.0, t, alpha).unwrap().power;
        prop_assert!((0.0..=1.0).contains(&q));
    }

    #[test]
    fn fixed_effects_do_not_change_grj(m in matrix(20, 12), shift in prop::collection::vec(-100.0f64..100.0, 20)) {
        let (n, t) = m.shape();
        prop_assume!(t >= 3);
        let x = DMatrix::from_fn(n, t, |i, s| ((i * 7 + s * 3) % 11) as f64 - 5.0 + 0.1 * s as f64);
        let p = PanelData::new(m.clone() + &x * 0.7, vec![x.clone()]).unwrap();
        let shifted = DMatrix::from_fn(n, t, |i, s| p.y[(i, s)] + shift[i]);
        let q = PanelData::new(shifted, vec![x]).unwrap();
        if let (Ok(fa), Ok(fb)) = (within_ols(&p), within_ols(&q)) {
            if let (Ok(a), Ok(b)) = (grj_test(&fa), grj_test(&fb)) {
                prop_assert!((a.u - b.u).abs() <= 1e-6 * (1.0 + a.u));
            }
        }
    }

    #[test]
    fn rep_csv_round_trip(values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 6)) {
        let rec = RepRecord {
            rep: 3,
            u: values[0],
            u_hat: values[1],
            gamma4_hat: values[2],
            j: values[3],
            p_value: values[4],
            gap: values[5],
            failure: None,
        };
        let back = read_records(records_to_string(&[rec.clone()]).unwrap().as_bytes()).unwrap();
        prop_assert_eq!(back, vec![rec]);
    }

    #[test]
    fn panel_csv_round_trip((m, x) in (2usize..8, 2usize..8).prop_flat_map(|(n, t)| {
        let cell = || prop::collection::vec(-1e6f64..1e6, n * t).prop_map(move |v| DMatrix::from_vec(n, t, v));
        (cell(), cell())
    })) {
        let p = PanelData::new(m, vec![x]).unwrap();
        let mut buf = Vec::new();
        write_panel(&mut buf, &p, None).unwrap();
        let q = read_panel(buf.as_slice()).unwrap().panel;
        prop_assert_eq!(q, p);
    }
}
