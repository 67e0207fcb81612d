//! Randomized invariants: parser robustness and round trips, the `P_γ`
//! bound, linearity of the linear solver and the `SLB1` container.

use std::f64::consts::PI;

use proptest::prelude::*;
use slabwave::cli::{read_slb1, write_slb1, Record};
use slabwave::dsl::FieldExpr;
use slabwave::linear::{solve_linear, LinearData};
use slabwave::pgamma::pgamma_symbol;
use slabwave::{make_grid, BulkField, Params, SurfaceField};

fn expr_strategy() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x1".to_string()),
        Just("x2".to_string()),
        Just("x3".to_string()),
        (-5.0f64..5.0).prop_map(|c| format!("{c:?}")),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "^"]))
                .prop_map(|(a, b, op)| format!("({a}){op}({b})")),
            (inner.clone(), prop::sample::select(vec!["sin", "cos", "exp", "tanh", "sqrt"]))
                .prop_map(|(a, f)| format!("{f}({a})")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parser_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
        let s = String::from_utf8_lossy(&bytes);
        let _ = FieldExpr::parse(&s);
    }

    #[test]
    fn printed_expressions_reparse_to_the_same_function(src in expr_strategy(), pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0.0f64..1.0), 8)) {
        let e = FieldExpr::parse(&src).unwrap();
        let back = FieldExpr::parse(&e.to_string()).unwrap();
        for (x1, x2, x3) in pts {
            match (e.eval([x1, x2, x3]), back.eval([x1, x2, x3])) {
                (Ok(a), Ok(b)) => prop_assert!(a == b || (a - b).abs() <= 1e-15 * a.abs().max(1.0) || (a.is_nan() && b.is_nan()), "{a} vs {b}"),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn pgamma_symbol_is_bounded_by_one(r in -3.0f64..3.0, t in 0.0f64..(2.0 * PI), g in -2.0f64..2.0) {
        let rad = 10f64.powf(r);
        let gamma = 10f64.powf(g);
        let v = pgamma_symbol([rad * t.cos(), rad * t.sin()], gamma).norm();
        prop_assert!(v <= 1.0 + 1e-12, "{v}");
    }

    #[test]
    fn slb1_reader_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..128)) {
        let mut framed = b"SLB1\n".to_vec();
        framed.extend_from_slice(&bytes);
        let _ = read_slb1(&framed);
        let _ = read_slb1(&bytes);
    }

    #[test]
    fn slb1_round_trip(values in prop::collection::vec(any::<f64>(), 0..40), name in "[a-z_]{1,12}") {
        let rec = Record::f64(&name, &[values.len()], values.clone());
        let mut buf = Vec::new();
        write_slb1(&mut buf, std::slice::from_ref(&rec)).unwrap();
        let back = read_slb1(&buf).unwrap();
        prop_assert_eq!(back.len(), 1);
        match &back[0].data {
            slabwave::cli::Array::F64(v) => prop_assert!(v.iter().zip(&values).all(|(a, b)| a.to_bits() == b.to_bits())),
            _ => prop_assert!(false),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linear_solver_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, gamma in 0.0f64..1.0, phase in 0.0f64..(2.0 * PI)) {
        let g = make_grid(4.0, 8, 10, 1.0).unwrap();
        let params = Params { gamma, ..Params::default() };
        let t = 2.0 * PI / 4.0;
        let mut d1 = LinearData::zeros(&g);
        d1.f = BulkField::from_fn(&g, 3, |c, x1, x2, y| (c as f64 + 1.0) * (t * x1 + phase).cos() * y + (t * x2).sin());
        d1.h = SurfaceField::from_fn(&g, 1, |_, x1, _| (t * x1).sin());
        let mut d2 = LinearData::zeros(&g);
        d2.f = BulkField::from_fn(&g, 3, |c, _, x2, y| (t * x2 + c as f64).cos() * (1.0 - y));
        d2.k = SurfaceField::from_fn(&g, 3, |c, x1, x2| (t * (x1 - x2) + c as f64).sin());
        let mut combo = LinearData::zeros(&g);
        combo.f = d1.f.scale(a).add(&d2.f.scale(b));
        combo.k = d1.k.scale(a).add(&d2.k.scale(b));
        combo.h = d1.h.scale(a).add(&d2.h.scale(b));
        let s1 = solve_linear(&d1, &params).unwrap();
        let s2 = solve_linear(&d2, &params).unwrap();
        let s = solve_linear(&combo, &params).unwrap();
        let expect = s1.scale(a).axpy(b, &s2);
        let err = s.sub(&expect).max_abs();
        prop_assert!(err <= 1e-12 * (1.0 + expect.max_abs()), "{err}");
    }
}
