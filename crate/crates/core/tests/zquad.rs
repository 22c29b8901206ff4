//! Weighted z-quadrature against closed forms and the per-mode energy identity.

#![allow(clippy::excessive_precision)]

use fraclab_core::special::gamma;
use fraclab_core::zquad::{build_rule, integrate, WeightClass, ZRule, ZRuleParams, ZRules};
use fraclab_core::FracParams;

const ORDERS: [f64; 7] = [0.1, 0.25, 0.3, 0.5, 0.6, 0.75, 0.9];

#[test]
fn weighted_exponential_closed_form() {
    for s in ORDERS {
        let p = FracParams::new(s).unwrap();
        let rule = build_rule(&p, 1.0, 1e-12).unwrap();
        let samples: Vec<f64> = rule.nodes().iter().map(|z| (-2.0 * z).exp()).collect();
        let got = integrate(&rule, &samples).unwrap();
        let want = gamma(2.0 - 2.0 * s).unwrap() / 2f64.powf(2.0 - 2.0 * s);
        assert!((got - want).abs() < 1e-10, "s={s} {got} {want}");
    }
}

#[test]
fn half_order_value_is_one_half() {
    let p = FracParams::new(0.5).unwrap();
    let rule = build_rule(&p, 1.0, 1e-12).unwrap();
    assert!((rule.integrate_fn(|z| (-2.0 * z).exp()) - 0.5).abs() < 1e-12);
}

#[test]
fn gamma_integrals_at_quarter_orders() {
    // Γ(3/2) = √π/2, Γ(1/2) = √π
    for (s, want) in [(0.25, 0.886226925452758013649), (0.75, 1.772453850905516027298)] {
        let p = FracParams::new(s).unwrap();
        let rule = build_rule(&p, 1.0, 1e-13).unwrap();
        let got = rule.integrate_fn(|z| (-z).exp());
        assert!((got - want).abs() < 1e-10, "s={s} {got}");
    }
}

#[test]
fn zero_integrand_gives_zero() {
    let p = FracParams::new(0.3).unwrap();
    let rule = build_rule(&p, 1.0, 1e-10).unwrap();
    assert_eq!(integrate(&rule, &vec![0.0; rule.len()]).unwrap(), 0.0);
    assert!(integrate(&rule, &[1.0]).is_err());
}

#[test]
fn rule_shape_invariants() {
    for s in ORDERS {
        let p = FracParams::new(s).unwrap();
        let rules = ZRules::build(&p, ZRuleParams::new(1.0, 400.0, 1e-12)).unwrap();
        for class in [WeightClass::Horizontal, WeightClass::Vertical] {
            let r = rules.get(class);
            assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
            assert!(r.nodes()[0] > 0.0 && *r.nodes().last().unwrap() < r.z_max());
            assert!(r.weights().iter().all(|&w| w > 0.0));
            assert!(r.est_tail_error() <= 1e-12, "s={s} {class:?} {}", r.est_tail_error());
        }
    }
}

#[test]
fn doubling_the_nodes_changes_little() {
    for s in ORDERS {
        let p = FracParams::new(s).unwrap();
        let base = ZRuleParams::new(1.0, 1.0, 1e-12);
        let a = ZRule::build(&p, WeightClass::Horizontal, base).unwrap();
        let b = ZRule::build(&p, WeightClass::Horizontal, base.with_order(20)).unwrap();
        assert!(b.len() > 3 * a.len() / 2);
        let f = |z: f64| (-2.0 * z).exp();
        assert!((a.integrate_fn(f) - b.integrate_fn(f)).abs() <= 1e-11, "s={s}");
    }
}

#[test]
fn linear_in_samples() {
    let p = FracParams::new(0.4).unwrap();
    let rule = build_rule(&p, 1.0, 1e-10).unwrap();
    let f: Vec<f64> = rule.nodes().iter().map(|z| (-z).exp() * z.sin()).collect();
    let g: Vec<f64> = rule.nodes().iter().map(|z| (-2.0 * z).exp()).collect();
    let (a, b) = (0.7, -2.5);
    let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
    let lhs = integrate(&rule, &mix).unwrap();
    let rhs = a * integrate(&rule, &f).unwrap() + b * integrate(&rule, &g).unwrap();
    assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * (lhs.abs() + 1.0));
}

#[test]
fn classes_agree_on_smooth_integrands() {
    for s in ORDERS {
        let p = FracParams::new(s).unwrap();
        let rules = ZRules::build(&p, ZRuleParams::new(1.0, 100.0, 1e-12)).unwrap();
        for f in [|z: f64| (-2.0 * z).exp(), |z: f64| (-z).exp() * (1.0 + z * z).recip()] {
            let h = rules.horizontal.integrate_fn(f);
            let v = rules.vertical.integrate_fn(f);
            assert!((h - v).abs() < 1e-9, "s={s} {h} {v}");
        }
    }
}

/// `β ∫ λ(θ(z√λ)² + θ'(z√λ)²) z^{1-2s} dz = λ^s`, with the `θ'²` part on the
/// vertical rule.
#[test]
fn mode_energy_identity() {
    for s in ORDERS {
        let p = FracParams::new(s).unwrap();
        for lambda in [1.0f64, 9.0, 100.0] {
            let rules = ZRules::build(&p, ZRuleParams::new(1.0, 100.0, 1e-12)).unwrap();
            let r = lambda.sqrt();
            let h = rules.horizontal.integrate_fn(|z| lambda * p.theta(z * r).powi(2));
            let v = rules.vertical.integrate_fn(|z| lambda * p.theta_deriv(z * r).powi(2));
            let got = p.beta() * (h + v);
            let want = lambda.powf(s);
            assert!((got - want).abs() < 1e-10 * want, "s={s} λ={lambda} {got} {want}");
        }
    }
}
