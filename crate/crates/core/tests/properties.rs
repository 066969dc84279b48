use std::sync::Arc;

use leibniz::bracket::ops::{bracket_eval, leibniz_form, leibniz_vector_field};
use leibniz::expr::parse;
use leibniz::sampling::{rng_from_seed, SampleBox};
use leibniz::systems::{make_system, make_system_with};
use leibniz::{CoordinateChart, LeibnizTensorField, ScalarField, Side, Symmetry};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Smooth expressions in `x, y, z` without domain restrictions.
fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("z".to_string()),
        (-3i32..=3).prop_map(|k| k.to_string()),
        (1u32..=9).prop_map(|k| format!("0.{k}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            (inner, 0i32..=3).prop_map(|(a, k)| format!("({a})^{k}")),
        ]
    })
}

fn point3() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.3f64..1.5, 3)
}

fn xyz() -> Vec<String> {
    ["x", "y", "z"].iter().map(|s| s.to_string()).collect()
}

fn chart3() -> Arc<CoordinateChart> {
    CoordinateChart::new(["x", "y", "z"]).unwrap()
}

/// A position-dependent tensor with no symmetry at all.
fn general_tensor(chart: &Arc<CoordinateChart>) -> LeibnizTensorField {
    let rows: [[&str; 3]; 3] = [["x", "z^2", "1"], ["-y", "x*y", "sin(z)"], ["2", "-x", "y + z"]];
    let rows: Vec<Vec<&str>> = rows.iter().map(|r| r.to_vec()).collect();
    LeibnizTensorField::parse(chart, &rows, Symmetry::General).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printing_round_trips_through_the_parser(src in expr_source(), m in point3()) {
        let e = parse(&src, &xyz()).unwrap();
        let printed = e.to_string();
        let again = parse(&printed, &xyz()).unwrap();
        prop_assert_eq!(again.to_string(), printed.clone());
        let (a, b) = (e.eval(&m).unwrap(), again.eval(&m).unwrap());
        prop_assert!(close(a, b, 1e-12), "{} vs {} for {}", a, b, printed);
    }

    #[test]
    fn derivative_obeys_the_product_rule(f in expr_source(), g in expr_source(), m in point3(), i in 0usize..3) {
        let f = parse(&f, &xyz()).unwrap();
        let g = parse(&g, &xyz()).unwrap();
        let fg = leibniz::expr::Expr::mul(f.clone(), g.clone());
        let lhs = fg.derivative(i).eval(&m).unwrap();
        let rhs = f.eval(&m).unwrap() * g.derivative(i).eval(&m).unwrap()
            + g.eval(&m).unwrap() * f.derivative(i).eval(&m).unwrap();
        prop_assert!(close(lhs, rhs, 1e-9), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn bracket_is_a_derivation_in_both_slots(f in expr_source(), g in expr_source(), h in expr_source(), m in point3()) {
        let ch = chart3();
        let b = general_tensor(&ch);
        let sf = |s: &str| ScalarField::parse(&ch, s).unwrap();
        let (f, g, h, fg) = (sf(&f), sf(&g), sf(&h), sf(&format!("({f})*({g})")));
        let (fv, gv) = (f.value(&m).unwrap(), g.value(&m).unwrap());
        let first = bracket_eval(&b, &fg, &h, &m).unwrap();
        let expected = fv * bracket_eval(&b, &g, &h, &m).unwrap() + gv * bracket_eval(&b, &f, &h, &m).unwrap();
        prop_assert!(close(first, expected, TOL), "{} vs {}", first, expected);
        let second = bracket_eval(&b, &h, &fg, &m).unwrap();
        let expected = fv * bracket_eval(&b, &h, &g, &m).unwrap() + gv * bracket_eval(&b, &h, &f, &m).unwrap();
        prop_assert!(close(second, expected, TOL), "{} vs {}", second, expected);
    }

    #[test]
    fn left_and_right_fields_reproduce_the_bracket(f in expr_source(), h in expr_source(), m in point3()) {
        let ch = chart3();
        let b = general_tensor(&ch);
        let f = ScalarField::parse(&ch, &f).unwrap();
        let h = ScalarField::parse(&ch, &h).unwrap();
        let df = f.gradient(&m).unwrap();
        let right = df.dot(&leibniz_vector_field(&b, &h, &m, Side::Right).unwrap());
        let left = df.dot(&leibniz_vector_field(&b, &h, &m, Side::Left).unwrap());
        let fh = bracket_eval(&b, &f, &h, &m).unwrap();
        let hf = bracket_eval(&b, &h, &f, &m).unwrap();
        prop_assert!(close(right, fh, TOL));
        prop_assert!(close(left, -hf, TOL));
    }

    #[test]
    fn skew_tensors_have_equal_left_and_right_fields(h in expr_source(), m in point3()) {
        let entry = make_system_with("rigid-body-dissipative", &[("alpha", 0.0)]).unwrap();
        let rename = h.replace('x', "M1").replace('y', "M2").replace('z', "M3");
        let h = ScalarField::parse(entry.chart(), &rename).unwrap();
        let b = entry.system.tensor();
        let l = leibniz_vector_field(b, &h, &m, Side::Left).unwrap();
        let r = leibniz_vector_field(b, &h, &m, Side::Right).unwrap();
        prop_assert!((l - r).amax() <= 1e-12);
    }

    #[test]
    fn leibniz_form_pairs_fields_into_the_bracket(f in expr_source(), g in expr_source(), m in point3()) {
        let ch = chart3();
        // diagonally dominant on the sampled box, hence invertible
        let rows: Vec<Vec<&str>> = vec![vec!["4 + x", "y", "-1"], vec!["z", "5", "x*y"], vec!["1", "-z", "4 + y^2"]];
        let b = LeibnizTensorField::parse(&ch, &rows, Symmetry::General).unwrap();
        let f = ScalarField::parse(&ch, &f).unwrap();
        let g = ScalarField::parse(&ch, &g).unwrap();
        let w = leibniz_form(&b, &m).unwrap();
        let xf = leibniz_vector_field(&b, &f, &m, Side::Right).unwrap();
        let xg = leibniz_vector_field(&b, &g, &m, Side::Right).unwrap();
        let paired = xf.dot(&(&w * xg));
        let direct = bracket_eval(&b, &f, &g, &m).unwrap();
        prop_assert!(close(paired, direct, TOL), "{} vs {}", paired, direct);
    }

    #[test]
    fn constraint_projector_is_an_oblique_projection(m in proptest::collection::vec(-2.0f64..2.0, 6), a in -2.0f64..2.0) {
        let entry = make_system_with("constrained-particle", &[("a", a)]).unwrap();
        let spec = entry.constraint.as_ref().unwrap();
        let pi = spec.projector_at(&m).unwrap();
        prop_assert!((&pi * &pi - &pi).amax() <= 1e-12);
        let w = DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0, 0.0, m[1]]);
        prop_assert!((&pi * w).amax() <= 1e-12);
        let dphi = DMatrix::from_row_slice(1, 6, &[0.0, m[5], 0.0, 1.0, 0.0, m[1]]);
        prop_assert!((dphi * &pi).amax() <= 1e-12);
    }

    #[test]
    fn seeded_samples_are_reproducible(seed in any::<u64>()) {
        let bx = SampleBox::cube(4, -1.0, 1.0);
        let a = bx.sample(&mut rng_from_seed(seed), 8, |_| true).unwrap();
        let b = bx.sample(&mut rng_from_seed(seed), 8, |_| true).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn constraint_is_a_left_casimir_of_the_constrained_tensor() {
    let entry = make_system("constrained-particle", &[]).unwrap();
    let phi = &entry.casimirs.iter().find(|c| c.label == "phi").unwrap().field;
    for m in entry.samples(3, 50).unwrap() {
        let b = entry.system.tensor().matrix_at(&m).unwrap();
        let dphi = phi.gradient(&m).unwrap();
        assert!((b.transpose() * dphi).amax() <= 1e-12);
    }
}
