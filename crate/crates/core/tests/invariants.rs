//! Property tests for module invariants across random inputs.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;
use stkg_core::completeness::equivalence::equivalence_constants;
use stkg_core::completeness::{integrate_geodesic, GeodesicTolerances, Termination};
use stkg_core::expr::Expression;
use stkg_core::kerr::{sigma_ratio, ErgoClass};
use stkg_core::kgop::assemble_w2;
use stkg_core::metric::block_cross_check;
use stkg_core::testfields::random_stationary_metric;
use stkg_core::{ChartBox, KerrParams, KerrSpacetime, SampleGrid, Scalar, ScalarField, StationaryMetric, VectorField};

fn unit_cube() -> ChartBox {
    ChartBox::new([-1.0; 3], [1.0; 3]).unwrap()
}

/// Expressions that are smooth and bounded on the unit cube.
fn smooth_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("z".to_string()),
        (0.1f64..2.0).prop_map(|c| format!("{c}")),
    ];
    leaf.prop_recursive(4, 24, 2, |e| {
        prop_oneof![
            e.clone().prop_map(|a| format!("sin({a})")),
            e.clone().prop_map(|a| format!("cos({a})")),
            e.clone().prop_map(|a| format!("exp(sin({a}))")),
            e.clone().prop_map(|a| format!("sqrt(2 + sin({a}))")),
            e.clone().prop_map(|a| format!("log(2 + cos({a}))")),
            e.clone().prop_map(|a| format!("-({a})")),
            e.clone().prop_map(|a| format!("({a})^2")),
            (e.clone(), e.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (e.clone(), e.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (e.clone(), e.clone()).prop_map(|(a, b)| format!("({a}) * ({b})")),
            (e.clone(), e).prop_map(|(a, b)| format!("({a}) / (2 + sin({b}))")),
        ]
    })
}

const H: f64 = 1e-2;
const STENCIL: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

fn shifted(p: [f64; 3], k: usize, s: f64) -> [f64; 3] {
    let mut q = p;
    q[k] += s;
    q
}

/// Fourth-order central first derivative along `k`.
fn d1(f: &dyn Fn([f64; 3]) -> f64, p: [f64; 3], k: usize) -> f64 {
    STENCIL.iter().map(|&(s, w)| w * f(shifted(p, k, s * H))).sum::<f64>() / (12.0 * H)
}

/// Fourth-order central second derivative along `k`.
fn d2(f: &dyn Fn([f64; 3]) -> f64, p: [f64; 3], k: usize) -> f64 {
    let w = [(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)];
    w.iter().map(|&(s, c)| c * f(shifted(p, k, s * H))).sum::<f64>() / (12.0 * H * H)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expression_jets_match_finite_differences(src in smooth_expr(), p in proptest::array::uniform3(-0.9f64..0.9)) {
        let e = Expression::parse(&src, &["x", "y", "z"], &[]).unwrap();
        let none = BTreeMap::new();
        let f = |q: [f64; 3]| e.eval(q, &none).unwrap();
        let j = e.eval_jet2(p, &none).unwrap();
        let scale = |v: f64| v.abs().max(1.0);
        for k in 0..3 {
            let g = d1(&f, p, k);
            prop_assert!((j.grad[k] - g).abs() <= 1e-6 * scale(g), "{src}: grad {k} {} vs {g}", j.grad[k]);
            let hkk = d2(&f, p, k);
            prop_assert!((j.hessian(k, k) - hkk).abs() <= 1e-6 * scale(hkk), "{src}: hess {k}{k} {} vs {hkk}", j.hessian(k, k));
            for l in k + 1..3 {
                let fk = |q: [f64; 3]| d1(&f, q, k);
                let hkl = d1(&fk, p, l);
                prop_assert!((j.hessian(k, l) - hkl).abs() <= 1e-6 * scale(hkl), "{src}: hess {k}{l} {} vs {hkl}", j.hessian(k, l));
            }
        }
    }

    #[test]
    fn printed_expressions_reparse_to_the_same_function(src in smooth_expr(), p in proptest::array::uniform3(-0.9f64..0.9)) {
        let e = Expression::parse(&src, &["x", "y", "z"], &[]).unwrap();
        let printed = e.to_string();
        let again = Expression::parse(&printed, &["x", "y", "z"], &[]).unwrap();
        prop_assert_eq!(again.to_string(), printed);
        let none = BTreeMap::new();
        prop_assert_eq!(e.eval_jet2(p, &none).unwrap(), again.eval_jet2(p, &none).unwrap());
    }

    #[test]
    fn metric_blocks_are_consistent(seed in 0u64..200, p in proptest::array::uniform3(-1.0f64..1.0)) {
        let b = random_stationary_metric(seed).point_blocks(p).unwrap();
        let rel = (b.rho * b.rho * b.det_h3 - b.det_g4.abs()).abs() / b.det_g4.abs();
        prop_assert!(rel <= 1e-10, "rho^2 |h| vs |g|: {rel:e}");
        prop_assert!(b.rho > 0.0 && b.rho.is_finite());
        for r in block_cross_check(&b).unwrap() {
            prop_assert!(r <= 1e-10, "{r:e}");
        }
    }

    #[test]
    fn timelike_margin_and_g00_agree(seed in 0u64..100, s in 0.0f64..6.0, p in proptest::array::uniform3(-1.0f64..1.0)) {
        let m = random_stationary_metric(seed);
        let c = ScalarField::constant(s);
        let shift = VectorField(m.shift.0.clone().map(|f| f.mul(&c)));
        let m = StationaryMetric::new(m.lapse.clone(), shift, m.spatial.clone());
        let margin = m.margin(p).unwrap();
        prop_assume!(margin.abs() > 1e-12);
        let b = m.point_blocks(p).unwrap();
        prop_assert_eq!(margin > 0.0, b.g00 < 0.0);
        prop_assert!((b.g00 + margin).abs() <= 1e-12 * margin.abs().max(1.0));
    }

    #[test]
    fn potential_is_nonnegative_for_nonnegative_mass(seed in 0u64..50, c in 0.0f64..3.0, p in proptest::array::uniform3(-1.0f64..1.0)) {
        let m = random_stationary_metric(seed);
        let m2 = ScalarField::from_jet_fn(move |[x, y, _]| (x * c + y).sin() * (x * c + y).sin() * c);
        let op = assemble_w2(&m, &m2, &SampleGrid::new(unit_cube(), [3; 3]).unwrap()).unwrap();
        prop_assert!(op.potential.value(p).unwrap() >= 0.0);
    }

    #[test]
    fn kerr_blocks_reproduce_the_line_element(
        a in 0.0f64..0.99,
        r in 1.2f64..40.0,
        th in 0.05f64..(PI - 0.05),
        ph in 0.0f64..6.28,
    ) {
        let params = KerrParams::new(1.0, a).unwrap();
        let r = r.max(params.r_plus() + 1e-2);
        let k = KerrSpacetime::new(params, ChartBox::new([params.r_plus() + 1e-3, 0.01, 0.0], [50.0, PI - 0.01, 6.3]).unwrap()).unwrap();
        let tt = params.components(r, th).tt;
        let b = k.metric.point_blocks([r, th, ph]).unwrap();
        let scale = b.lapse * b.lapse + b.shift_lower[2] * b.shift[2];
        prop_assert!((b.margin + tt).abs() <= 1e-12 * scale, "{} vs {}", b.margin, -tt);
        let class = params.ergoregion_test([r, th, ph]);
        if tt.abs() > 1e-9 {
            prop_assert_eq!(class == ErgoClass::Outside, tt < 0.0);
        }
    }

    #[test]
    fn sigma_ratio_is_at_least_one(a in 0.0f64..0.999, dr in 1e-4f64..50.0, th in 0.01f64..(PI - 0.01)) {
        let params = KerrParams::new(1.0, a).unwrap();
        let (ratio, expanded) = sigma_ratio(params, params.r_plus() + dr, th);
        prop_assert!(ratio >= 1.0 - 1e-12 && expanded >= 1.0 - 1e-12);
        prop_assert!(ratio.is_finite());
    }

    #[test]
    fn scaled_metric_has_equal_constants(seed in 0u64..50, c in 0.05f64..20.0) {
        let g = random_stationary_metric(seed).spatial;
        let grid = SampleGrid::new(unit_cube(), [4; 3]).unwrap();
        let r = equivalence_constants(&g.conformal(&ScalarField::constant(c)), &g, &grid).unwrap();
        prop_assert!((r.lower - c).abs() <= 1e-12 * c && (r.upper - c).abs() <= 1e-12 * c, "{r:?} vs {c}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn geodesic_speed_is_conserved(seed in 0u64..50, x in proptest::array::uniform3(-1.0f64..1.0), v in proptest::array::uniform3(-1.0f64..1.0)) {
        prop_assume!(v.iter().map(|c| c * c).sum::<f64>() > 1e-2);
        let g = random_stationary_metric(seed).rescaled_spatial();
        let chart = ChartBox::new([-1e3; 3], [1e3; 3]).unwrap();
        let tol = GeodesicTolerances::default();
        let run = integrate_geodesic(&g, &chart, x, v, 10.0, &tol).unwrap();
        prop_assert_eq!(run.termination, Termination::CompletedSpan);
        prop_assert!(run.speed_drift <= 10.0 * tol.rtol, "{:e}", run.speed_drift);
    }
}
