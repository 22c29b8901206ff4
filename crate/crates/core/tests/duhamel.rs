//! Duhamel assembly and the scalar flux identity.

mod common;

use common::{max_diff, trig};
use fraclab_core::duhamel::{assemble_rhs, assemble_rhs_split, duhamel_mode_check, RhsForm};
use fraclab_core::manifold::{GridField, Manifold};
use fraclab_core::zquad::{build_rule, WeightClass, ZRuleParams, ZRules};
use fraclab_core::FracParams;
use proptest::prelude::*;

fn params(s: f64) -> FracParams {
    FracParams::new(s).unwrap()
}

#[test]
fn constant_forcing_at_half_order() {
    let m = Manifold::circle(8).unwrap();
    let p = params(0.5);
    let rule = build_rule(&p, 1.0, 1e-12).unwrap();
    let n = m.num_nodes();
    let out = assemble_rhs(&m, &p, &rule, RhsForm::Theorem, |z| Ok(GridField::constant(n, (-2.0 * z).exp()))).unwrap();
    assert!(out.values().iter().all(|v| (v - 0.5).abs() < 1e-12));
    let zero = assemble_rhs(&m, &p, &rule, RhsForm::Theorem, |_| Ok(GridField::constant(n, 0.0))).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
}

#[test]
fn single_mode_forcing_at_half_order() {
    let m = Manifold::circle(8).unwrap();
    let p = params(0.5);
    let rule = build_rule(&p, 1.0, 1e-12).unwrap();
    let cosx = m.synthesize(&trig(&m, &[(1.0, 1.0)], &[])).unwrap();
    let out = assemble_rhs(&m, &p, &rule, RhsForm::Theorem, |z| Ok(cosx.scaled((-2.0 * z).exp()))).unwrap();
    assert!(max_diff(&out, &cosx.scaled(1.0 / 3.0)) < 1e-12);
}

#[test]
fn plain_form_drops_weight_and_constant() {
    let m = Manifold::circle(6).unwrap();
    for s in [0.3, 0.7] {
        let p = params(s);
        let rule = build_rule(&p, 1.0, 1e-12).unwrap();
        let n = m.num_nodes();
        // F = β z^{1-2s} e^{-2z} reproduces the theorem form with G = e^{-2z}
        let plain = assemble_rhs(&m, &p, &rule, RhsForm::Plain, |z| {
            Ok(GridField::constant(n, p.beta() * z.powf(1.0 - 2.0 * s) * (-2.0 * z).exp()))
        })
        .unwrap();
        let theorem =
            assemble_rhs(&m, &p, &rule, RhsForm::Theorem, |z| Ok(GridField::constant(n, (-2.0 * z).exp()))).unwrap();
        assert!(max_diff(&plain, &theorem) < 1e-12);
    }
}

#[test]
fn x_independent_forcing_is_a_scalar_integral() {
    let m = Manifold::sphere(6).unwrap();
    let p = params(0.35);
    let rule = build_rule(&p, 2.0, 1e-12).unwrap();
    let n = m.num_nodes();
    let g = |z: f64| (-1.5 * z).exp() * (1.0 + z);
    let out = assemble_rhs(&m, &p, &rule, RhsForm::Theorem, |z| Ok(GridField::constant(n, g(z)))).unwrap();
    let scalar = p.beta() * rule.integrate_fn(g);
    assert!(out.values().iter().all(|v| (v - scalar).abs() < 1e-13 * scalar));
}

#[test]
fn split_assembly_is_linear() {
    let m = Manifold::circle(8).unwrap();
    let p = params(0.4);
    let rules = ZRules::build(&p, ZRuleParams::new(1.0, 64.0, 1e-10)).unwrap();
    let a = trig(&m, &[(1.0, 1.0)], &[(3.0, 0.2)]);
    let b = trig(&m, &[(2.0, -0.7)], &[]);
    let fa = |z: f64, c: WeightClass| {
        Ok(match c {
            WeightClass::Horizontal => Some(a.scaled((-z).exp())),
            WeightClass::Vertical => Some(b.scaled((-2.0 * z).exp() * z.powf(0.8 - 2.0))),
        })
    };
    let fb = |z: f64, c: WeightClass| Ok((c == WeightClass::Horizontal).then(|| b.scaled((-3.0 * z).exp())));
    let ra = assemble_rhs_split(&m, &p, &rules, RhsForm::Theorem, fa).unwrap();
    let rb = assemble_rhs_split(&m, &p, &rules, RhsForm::Theorem, fb).unwrap();
    let both = assemble_rhs_split(&m, &p, &rules, RhsForm::Theorem, |z, c| {
        let x = fa(z, c)?;
        let y = fb(z, c)?;
        Ok(match (x, y) {
            (Some(x), Some(y)) => Some(x.axpy(-2.0, &y)?),
            (Some(x), None) => Some(x),
            (None, Some(y)) => Some(y.scaled(-2.0)),
            (None, None) => None,
        })
    })
    .unwrap();
    let lin = ra.axpy(-2.0, &rb).unwrap();
    assert!(both.sub(&lin).unwrap().max_abs_coeff() < 1e-14);
}

#[test]
fn mode_check_hand_example() {
    let p = params(0.5);
    let r = duhamel_mode_check(|z| z * (-z).exp(), |z| (1.0 - z) * (-z).exp(), |z| (z - 2.0) * (-z).exp(), 1.0, &p)
        .unwrap();
    assert!((r.lhs + 1.0).abs() < 1e-15);
    assert!((r.rhs + 1.0).abs() < 1e-9);
    assert!(r.residual <= 1e-9);
}

#[test]
fn mode_check_zero_profile() {
    let r = duhamel_mode_check(|_| 0.0, |_| 0.0, |_| 0.0, 4.0, &params(0.3)).unwrap();
    assert_eq!(r.residual, 0.0);
}

#[test]
fn mode_check_quadratic_profile() {
    let r = duhamel_mode_check(
        |z| z * z * (-z).exp(),
        |z| (2.0 * z - z * z) * (-z).exp(),
        |z| (2.0 - 4.0 * z + z * z) * (-z).exp(),
        4.0,
        &params(0.3),
    )
    .unwrap();
    assert!(r.residual <= 1e-7, "{r:?}");
}

#[test]
fn mode_check_rejects_bad_profiles() {
    let p = params(0.7);
    // g'(0) ≠ 0 makes the flux at 0 infinite for s > 1/2
    assert!(duhamel_mode_check(|z| z * (-z).exp(), |z| (1.0 - z) * (-z).exp(), |z| (z - 2.0) * (-z).exp(), 1.0, &p)
        .is_err());
    assert!(duhamel_mode_check(|z| z, |_| 1.0, |_| 0.0, 1.0, &params(0.3)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// `g = (c₁z + c₂z² + c₃z³) e^{-az}`, with `c₁ = 0` when `s > 1/2`.
    #[test]
    fn mode_check_random_profiles(
        c in prop::array::uniform3(-1.0f64..1.0),
        a in 0.5f64..3.0,
        li in 0usize..4,
        s in 0.05f64..0.95,
    ) {
        let lambda = [0.0, 1.0, 4.0, 9.0][li];
        let c1 = if s > 0.5 { 0.0 } else { c[0] };
        let (c2, c3) = (c[1], c[2]);
        let poly = move |z: f64| c1 * z + c2 * z * z + c3 * z * z * z;
        let dpoly = move |z: f64| c1 + 2.0 * c2 * z + 3.0 * c3 * z * z;
        let d2poly = move |z: f64| 2.0 * c2 + 6.0 * c3 * z;
        let e = move |z: f64| (-a * z).exp();
        let r = duhamel_mode_check(
            move |z| poly(z) * e(z),
            move |z| (dpoly(z) - a * poly(z)) * e(z),
            move |z| (d2poly(z) - 2.0 * a * dpoly(z) + a * a * poly(z)) * e(z),
            lambda,
            &params(s),
        ).unwrap();
        prop_assert!(r.residual <= 1e-7, "{:?}", r);
    }
}
