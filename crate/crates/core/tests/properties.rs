use jm_core::closed_form::{boundary_point, povm_bound_eta, EvalMode};
use jm_core::export::{read_curve_csv, read_curve_json, write_curve_csv, write_curve_json};
use jm_core::region::{eta_max, export_curve, is_jointly_measurable, mixture};
use jm_core::{Dimension, NoiseParams, Threshold};
use proptest::prelude::*;

fn dim(d: usize) -> Dimension {
    Dimension::new(d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn boundary_points_are_members(d in 2usize..12, t in 0.0f64..0.999) {
        let s = boundary_point(dim(d), Threshold::new(t).unwrap(), EvalMode::Float64).unwrap();
        prop_assert!((0.0..=1.0).contains(&s.eta));
        prop_assert!((0.0..=1.0).contains(&s.p));
        let v = is_jointly_measurable(dim(d), s.params().unwrap()).unwrap();
        prop_assert!(v.inside);
        prop_assert!(v.margin.abs() < 1e-9, "margin {}", v.margin);
    }

    #[test]
    fn region_is_down_closed(d in 2usize..12, p in 0.0f64..=1.0, scale in 0.0f64..=1.0) {
        let top = eta_max(dim(d), p).unwrap();
        let v = is_jointly_measurable(dim(d), NoiseParams::new(top * scale, p).unwrap()).unwrap();
        prop_assert!(v.inside);
    }

    #[test]
    fn physical_mixtures_stay_inside(
        d in 2usize..8,
        p1 in 0.0f64..=1.0, s1 in 0.0f64..=1.0,
        p2 in 0.0f64..=1.0, s2 in 0.0f64..=1.0,
        q in 0.0f64..=1.0,
    ) {
        let a = NoiseParams::new(eta_max(dim(d), p1).unwrap() * s1, p1).unwrap();
        let b = NoiseParams::new(eta_max(dim(d), p2).unwrap() * s2, p2).unwrap();
        let m = mixture(a, b, q).unwrap();
        prop_assert!(is_jointly_measurable(dim(d), m.params).unwrap().inside);
    }

    #[test]
    fn povm_bound_is_weaker(d in 2usize..20, p in 0.0f64..=1.0) {
        prop_assert!(povm_bound_eta(dim(d), p).unwrap() <= eta_max(dim(d), p).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn curves_round_trip(d in 2usize..15, n in 2usize..60) {
        let curve = export_curve(dim(d), n).unwrap();
        let mut csv = Vec::new();
        write_curve_csv(&curve, &mut csv).unwrap();
        let back = read_curve_csv(dim(d), csv.as_slice()).unwrap();
        prop_assert_eq!(&back, &curve);
        back.validate().unwrap();
        let mut json = Vec::new();
        write_curve_json(&curve, &mut json).unwrap();
        prop_assert_eq!(read_curve_json(json.as_slice()).unwrap(), curve);
    }
}
