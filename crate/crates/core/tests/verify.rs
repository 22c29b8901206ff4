//! Carré du champ, Bochner, Córdoba-Córdoba and Stroock-Varopoulos checks.

mod common;

use common::{max_diff, trig};
use fraclab_core::manifold::{GridField, Manifold, SpectralField, Sphere};
use fraclab_core::operators::hs_inner;
use fraclab_core::verify::*;
use fraclab_core::FracParams;

fn params(s: f64) -> FracParams {
    FracParams::new(s).unwrap()
}

fn circle() -> Manifold {
    Manifold::circle(16).unwrap()
}

fn cosx(m: &Manifold) -> SpectralField {
    trig(m, &[(1.0, 1.0)], &[])
}

fn mixed(m: &Manifold) -> SpectralField {
    trig(m, &[(1.0, 1.0), (3.0, 0.4)], &[])
}

fn sin2x(m: &Manifold) -> SpectralField {
    trig(m, &[], &[(2.0, 1.0)])
}

fn near(g: &GridField, f: impl Fn([f64; 2]) -> f64, m: &Manifold) -> f64 {
    g.values().iter().enumerate().map(|(i, v)| (v - f(m.node(i))).abs()).fold(0.0, f64::max)
}

#[test]
fn gamma1_of_cosine() {
    let m = circle();
    let u = cosx(&m);
    for s in [0.25, 0.5, 0.8] {
        let g = gamma1(&m, &u, &u, &params(s)).unwrap();
        let c2 = (2.0 - libm::pow(4.0, s)) / 4.0;
        assert!(near(&g, |x| 0.5 + c2 * (2.0 * x[0]).cos(), &m) < 1e-13, "s = {s}");
    }
}

#[test]
fn gamma1_with_constant_vanishes() {
    let m = circle();
    let one = trig(&m, &[(0.0, 1.0)], &[]);
    let g = gamma1(&m, &mixed(&m), &one, &params(0.4)).unwrap();
    assert!(g.max_abs() < 1e-14);
}

#[test]
fn gamma1_mean_is_dirichlet_energy() {
    let m = circle();
    let u = trig(&m, &[(1.0, 0.3), (2.0, -1.1)], &[(4.0, 0.7)]);
    for s in [0.3, 0.7] {
        let p = params(s);
        let g = gamma1(&m, &u, &u, &p).unwrap();
        let lhs = m.integrate(&g).unwrap();
        let rhs = hs_inner(&m, &u, &u, s).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * rhs);
        assert!(g.min() > -1e-9);
    }
}

#[test]
fn leibniz_at_half_order() {
    let m = circle();
    let p = params(0.5);
    let u = cosx(&m);
    let rules = rules_for(&m, &p, &[&u], 1e-10).unwrap();
    let r = verify_leibniz(&m, &u, &u, &p, &rules, 1e-8).unwrap();
    assert!(near(&r.lhs, |_| 0.5, &m) < 1e-13);
    assert!(near(&r.rhs, |_| 0.5, &m) < 1e-8);
    assert!(r.pass(), "{r:?}");
}

#[test]
fn leibniz_with_constant() {
    let m = circle();
    let p = params(0.3);
    let u = mixed(&m);
    let one = trig(&m, &[(0.0, 2.0)], &[]);
    let rules = rules_for(&m, &p, &[&u], 1e-10).unwrap();
    let r = verify_leibniz(&m, &u, &one, &p, &rules, 1e-8).unwrap();
    assert!(r.lhs.max_abs() < 1e-13 && r.rhs.max_abs() < 1e-12);
}

#[test]
fn leibniz_mixed_pair() {
    let m = circle();
    for s in [0.3, 0.7] {
        let p = params(s);
        let (u, v) = (cosx(&m), sin2x(&m));
        let rules = rules_for(&m, &p, &[&u, &v], 1e-10).unwrap();
        let r = verify_leibniz(&m, &u, &v, &p, &rules, 1e-6).unwrap();
        assert!(r.residual_sup <= 1e-6, "s = {s}: {}", r.residual_sup);
    }
}

#[test]
fn bochner_defects_of_cosine() {
    let m = circle();
    let p = params(0.5);
    let u = cosx(&m);
    assert!(near(&defect_a(&m, &u, &p).unwrap(), |_| 0.5, &m) < 1e-13);
    assert!(near(&defect_b(&m, &u, &p).unwrap(), |_| 0.5, &m) < 1e-13);
    let c = trig(&m, &[(0.0, 3.0)], &[]);
    assert!(defect_a(&m, &c, &p).unwrap().max_abs() < 1e-14);
    assert!(defect_b(&m, &c, &p).unwrap().max_abs() < 1e-14);
}

#[test]
fn bochner_defects_agree() {
    let m = circle();
    let p = params(0.6);
    let u = mixed(&m);
    let a = defect_a(&m, &u, &p).unwrap();
    let b = defect_b(&m, &u, &p).unwrap();
    assert!(max_diff(&a, &b) < 1e-6);
}

#[test]
fn bochner_circle() {
    let m = circle();
    let p = params(0.5);
    let u = cosx(&m);
    let rules = rules_for(&m, &p, &[&u], 1e-10).unwrap();
    let r = verify_bochner(&m, &u, &p, &rules, 1e-7, BochnerOptions::default()).unwrap();
    assert!(near(&r.rhs, |_| 0.5, &m) < 1e-7);
    assert!(r.pass(), "{r:?}");
    let l1 = r.check("weighted_l1_grad_dz").unwrap().value;
    assert!(l1.is_finite() && l1 > 0.0);
}

#[test]
fn bochner_sphere_needs_ricci() {
    let m = Manifold::sphere(8).unwrap();
    let p = params(0.5);
    let mut c = m.zero_spectral();
    c.coeffs_mut()[Sphere::index(1, 0)] = 1.0.into();
    let rules = rules_for(&m, &p, &[&c], 1e-10).unwrap();
    let r = verify_bochner(&m, &c, &p, &rules, 1e-4, BochnerOptions::default()).unwrap();
    assert!(r.pass(), "{r:?}");
    let bare = verify_bochner(&m, &c, &p, &rules, 1e-4, BochnerOptions { include_ricci: false }).unwrap();
    assert!(bare.residual_sup > 10.0 * bare.threshold);
}

#[test]
fn gamma2_cases() {
    let m = circle();
    let p = params(0.5);
    let u = cosx(&m);
    let rules = rules_for(&m, &p, &[&u], 1e-10).unwrap();
    let r = verify_gamma2(&m, &u, &p, &rules, 1e-5).unwrap();
    assert!(r.residual_sup <= 1e-5, "{}", r.residual_sup);
    let p = params(0.4);
    let u = trig(&m, &[(1.0, 1.0), (2.0, 0.3)], &[]);
    let rules = rules_for(&m, &p, &[&u], 1e-10).unwrap();
    let r = verify_gamma2(&m, &u, &p, &rules, 1e-4).unwrap();
    assert!(r.residual_sup <= 1e-4, "{}", r.residual_sup);
    let c = trig(&m, &[(0.0, 1.0)], &[]);
    let r = verify_gamma2(&m, &c, &p, &rules, 1e-4).unwrap();
    assert!(r.lhs.max_abs() < 1e-14 && r.rhs.max_abs() < 1e-14);
}

#[test]
fn cordoba_square_is_twice_leibniz() {
    let m = circle();
    let p = params(0.35);
    let u = mixed(&m);
    let rules = rules_for(&m, &p, &[&u], 1e-10).unwrap();
    let c = verify_cordoba(&m, &u, &Nonlinearity::power(2), &p, &rules, 1e-6).unwrap();
    let l = verify_leibniz(&m, &u, &u, &p, &rules, 1e-6).unwrap();
    assert!(max_diff(&c.lhs, &l.lhs.scaled(2.0)) < 1e-9);
    assert!(max_diff(&c.rhs, &l.rhs.scaled(2.0)) < 1e-9);
}

#[test]
fn cordoba_square_of_cosine() {
    let m = circle();
    let p = params(0.5);
    let u = cosx(&m);
    let rules = rules_for(&m, &p, &[&u], 1e-10).unwrap();
    let r = verify_cordoba(&m, &u, &Nonlinearity::power(2), &p, &rules, 1e-7).unwrap();
    assert!(near(&r.lhs, |_| 1.0, &m) < 1e-12);
    assert!(near(&r.rhs, |_| 1.0, &m) < 1e-7);
}

#[test]
fn cordoba_quartic() {
    let m = circle();
    let p = params(0.6);
    let u = cosx(&m);
    let rules = rules_for(&m, &p, &[&u], 1e-10).unwrap();
    let r = verify_cordoba(&m, &u, &Nonlinearity::power(4), &p, &rules, 1e-5).unwrap();
    assert!(r.residual_sup <= 1e-5);
    assert!(r.lhs.min() >= -1e-10);
    assert!(r.pass());
}

#[test]
fn convex_remainders_are_nonnegative() {
    let m = circle();
    for s in [0.25, 0.75] {
        let p = params(s);
        let u = mixed(&m);
        let rules = rules_for(&m, &p, &[&u], 1e-10).unwrap();
        for phi in [Nonlinearity::power(2), Nonlinearity::power(4), Nonlinearity::cosh()] {
            let r = verify_cordoba(&m, &u, &phi, &p, &rules, 1e-5).unwrap();
            assert!(r.check("remainder_nonnegative").unwrap().pass, "{} s = {s}", phi.name);
        }
    }
}

#[test]
fn sv_quadratic_integral_equality() {
    let m = circle();
    let p = params(0.45);
    let u = trig(&m, &[(0.0, 1.5), (1.0, 1.0), (3.0, 0.4)], &[]);
    let (l, r) = sv_integral_sides(&m, &u, 2.0, &p).unwrap();
    assert!((l - r).abs() < 1e-10 * l);
    // a sign change makes |u| rougher than u, so only the inequality survives
    let (l, r) = sv_integral_sides(&m, &mixed(&m), 2.0, &p).unwrap();
    assert!(l - r > 1e-3 * l);
}

#[test]
fn sv_positive_cubic() {
    let m = circle();
    let p = params(0.5);
    let u = trig(&m, &[(0.0, 2.0), (1.0, 1.0)], &[]);
    let rules = rules_for(&m, &p, &[&u], 1e-10).unwrap();
    let r = verify_sv(&m, &u, 3.0, &p, &rules, 1e-5, SvMode::Auto).unwrap();
    assert!(r.residual_sup <= 1e-5, "{}", r.residual_sup);
    assert!(r.pass(), "{r:?}");
}

#[test]
fn sv_quartic_integral_slack() {
    let m = circle();
    let p = params(0.5);
    let u = cosx(&m);
    let (l, r) = sv_integral_sides(&m, &u, 4.0, &p).unwrap();
    assert!(l - r >= 0.0, "{l} {r}");
}

#[test]
fn sv_direct_mode_refuses_sign_changes() {
    let m = circle();
    let p = params(0.5);
    let u = cosx(&m);
    let rules = rules_for(&m, &p, &[&u], 1e-8).unwrap();
    assert!(verify_sv(&m, &u, 3.0, &p, &rules, 1e-5, SvMode::Direct).is_err());
}

#[test]
fn decay_ratios_are_bounded() {
    let m = circle();
    let zs = log_grid(0.01, 20.0, 25);
    for s in [0.3, 0.7] {
        let d = verify_decay(&m, &cosx(&m), &params(s), &zs).unwrap();
        assert!(d.pass);
        assert!(d.sup_grad <= 1.0 + 1e-12);
        // late-z ratios decrease
        let r = &d.ratio_dz[1];
        assert!(r[r.len() - 1] < r[r.len() - 5]);
    }
    let c = trig(&m, &[(0.0, 1.0)], &[]);
    let d = verify_decay(&m, &c, &params(0.5), &zs).unwrap();
    assert!(d.sup_dz.iter().all(|v| *v == 0.0));
}

#[test]
fn dirichlet_rate_is_two_s() {
    let m = circle();
    let zs = log_grid(1e-5, 1e-3, 9);
    for s in [0.25, 0.5, 0.75] {
        let fit = dirichlet_rate(&m, &mixed(&m), &sin2x(&m), &params(s), &zs, 0.15).unwrap();
        assert!(fit.pass, "s = {s}: slope {}", fit.slope);
    }
}
