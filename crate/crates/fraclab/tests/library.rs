use std::f64::consts::PI;

use fraclab::config::{Config, Identity};
use fraclab::functions::{FunctionSpec, PRESETS};
use fraclab::runner::{jobs, Job, RunRecord};
use fraclab::sweep::{build_series, sweep_jobs, Axis};
use fraclab_core::manifold::{Manifold, ManifoldKind};

#[test]
fn default_config_round_trips() {
    let c = Config::default();
    let text = toml::to_string(&c).unwrap();
    assert_eq!(Config::from_toml(&text).unwrap(), c);
    assert_eq!(Config::from_toml("").unwrap(), c);
}

#[test]
fn config_tables() {
    let c = Config::from_toml(
        r#"
[run]
identities = ["duhamel-mode", "sv"]
s = [0.25, 0.75]
z_nodes = 80
tol = 1e-5
sv_q = [2.0, 6.0]

[functions]
u = "mixed"
phi = 2.5

[sweep]
z_nodes = [40, 80]
"#,
    )
    .unwrap();
    assert_eq!(c.run.identities, vec![Identity::DuhamelMode, Identity::Sv]);
    assert_eq!(c.run.z_nodes, Some(80));
    assert_eq!(c.functions.u, FunctionSpec::preset("mixed"));
    assert_eq!(c.functions.phi, FunctionSpec::Constant(2.5));
    assert_eq!(c.sweep.z_nodes, vec![40, 80]);
    assert_eq!(c.manifold_kind().unwrap(), ManifoldKind::Circle);
}

#[test]
fn config_rejections() {
    for bad in [
        "[run]\nidentities = [\"kato2\"]",
        "[run]\ns = []",
        "[run]\ns = [1.0]",
        "[run]\nmodes = 0",
        "[run]\ncordoba_phi = [\"t3\"]",
        "[run]\nsv_q = [1.0]",
        "[run]\nmanifold = \"disc\"",
        "[functions]\nw = 1",
        "[output]\n",
    ] {
        assert!(Config::from_toml(bad).is_err(), "{bad}");
    }
}

#[test]
fn identity_names_parse_back() {
    for id in Identity::ALL {
        assert_eq!(id.name().parse::<Identity>().unwrap(), id);
    }
    assert!("Leibniz".parse::<Identity>().is_err());
}

#[test]
fn function_specs_parse() {
    assert_eq!(FunctionSpec::parse("1").unwrap(), FunctionSpec::Constant(1.0));
    assert_eq!(FunctionSpec::parse(" cos ").unwrap(), FunctionSpec::preset("cos"));
    let FunctionSpec::Coefficients(c) = FunctionSpec::parse("{cos = [[1, 1.0], [3, 0.4]], constant = 2}").unwrap()
    else {
        panic!("expected coefficients");
    };
    assert_eq!(c.constant, 2.0);
    assert_eq!(c.cos, vec![vec![1.0, 1.0], vec![3.0, 0.4]]);
    assert!(FunctionSpec::parse("tanh").is_err());
    assert!(FunctionSpec::parse("{cos = 1}").is_err());
}

#[test]
fn presets_on_the_circle() {
    let m = Manifold::new(ManifoldKind::Circle, 16).unwrap();
    type Case = (&'static str, fn(f64) -> f64);
    let cases: [Case; 5] = [
        ("cos", |x| x.cos()),
        ("cos2", |x| (2.0 * x).cos()),
        ("sin2", |x| (2.0 * x).sin()),
        ("mixed", |x| x.cos() + 0.4 * (3.0 * x).cos()),
        ("positive-shift", |x| 2.0 + x.cos()),
    ];
    for (name, f) in cases {
        let g = m.synthesize(&FunctionSpec::preset(name).build(&m).unwrap()).unwrap();
        for i in 0..m.num_nodes() {
            let x = m.node(i)[0];
            assert!((g.values()[i] - f(x)).abs() < 1e-13, "{name} at {x}");
        }
    }
}

#[test]
fn every_preset_builds_everywhere() {
    for kind in [ManifoldKind::Circle, ManifoldKind::Torus, ManifoldKind::Sphere] {
        let m = Manifold::new(kind, 8).unwrap();
        for p in PRESETS {
            let f = FunctionSpec::preset(p).build(&m).unwrap();
            assert!(m.synthesize(&f).unwrap().max_abs() > 0.1, "{p} on {kind:?}");
        }
    }
}

#[test]
fn torus_coefficients_and_bump() {
    let m = Manifold::new(ManifoldKind::Torus, 8).unwrap();
    let u = FunctionSpec::parse("{cos = [[1, 2, 0.5]], sin = [[3, 1.0]]}").unwrap().build(&m).unwrap();
    let g = m.synthesize(&u).unwrap();
    for i in (0..m.num_nodes()).step_by(7) {
        let [x, y] = m.node(i);
        assert!((g.values()[i] - (0.5 * (x + 2.0 * y).cos() + (3.0 * x).sin())).abs() < 1e-13);
    }
    // wavenumbers beyond the cutoff are rejected
    assert!(FunctionSpec::parse("{cos = [[9, 1.0]]}").unwrap().build(&m).is_err());
    // ylm terms need the sphere
    assert!(FunctionSpec::parse("{ylm = [[1, 0, 1.0]]}").unwrap().build(&m).is_err());

    let c = Manifold::new(ManifoldKind::Circle, 32).unwrap();
    let bump = FunctionSpec::preset("bump").kato_field(&c).unwrap();
    assert_eq!(bump.value(0.5), 0.0);
    assert!((bump.value(PI) - (-1.0f64).exp()).abs() < 1e-15);
    assert!(FunctionSpec::preset("cos").kato_field(&m).is_err());
}

#[test]
fn sphere_constant_is_normalized() {
    let m = Manifold::new(ManifoldKind::Sphere, 6).unwrap();
    let u = FunctionSpec::Constant(3.0).build(&m).unwrap();
    let g = m.synthesize(&u).unwrap();
    assert!(g.values().iter().all(|v| (v - 3.0).abs() < 1e-12));
    let shift = FunctionSpec::preset("positive-shift").build(&m).unwrap();
    assert!(m.synthesize(&shift).unwrap().min() > 0.0);
}

#[test]
fn job_grid_and_ids() {
    let mut c = Config::default();
    c.run.identities = vec![Identity::Leibniz, Identity::Kato];
    c.run.s = vec![0.25, 0.5];
    c.run.z_nodes = Some(80);
    let j = jobs(&c);
    assert_eq!(j.len(), 4);
    assert_eq!(j[0].id(0, "circle"), "0000-leibniz-circle-s0.25-n32-z80");
    assert_eq!(j[3].id(3, "circle"), "0003-kato-circle-s0.5-n32-z80-l1");

    c.sweep.z_nodes = vec![40, 80, 160];
    c.sweep.mesh_levels = vec![0, 1];
    let sj = sweep_jobs(&c);
    // leibniz: 2 s × 3 z-node counts; kato: 2 s × 2 levels
    assert_eq!(sj.len(), 10);
    assert!(sj.iter().filter(|j| j.identity == Identity::Kato).all(|j| j.z_nodes.is_none()));
}

fn fake(index: usize, job: &Job, residual: f64) -> RunRecord {
    let json = serde_json::json!({
        "run_id": job.id(index, "circle"), "identity": job.identity.name(), "manifold": "circle",
        "s": job.s, "modes": job.modes, "z_nodes": job.z_nodes.unwrap_or(0),
        "residual_sup": residual, "residual_l2": residual, "lhs_mean": 0.5, "rhs_mean": 0.5,
        "lhs_sup": 2.0, "tail_error_estimate": 0.0, "pass": true, "wall_time_ms": 0.0, "threshold": 1e-6,
    });
    serde_json::from_value(json).unwrap()
}

#[test]
fn series_targets() {
    let z = |n, identity| Job { identity, s: 0.5, modes: 32, z_nodes: Some(n), mesh_level: 1 };
    let l = |level| Job { identity: Identity::Kato, s: 0.5, modes: 32, z_nodes: None, mesh_level: level };
    let jobs = vec![
        z(40, Identity::Leibniz),
        z(80, Identity::Leibniz),
        z(160, Identity::Leibniz),
        z(40, Identity::Bochner),
        z(80, Identity::Bochner),
        l(0),
        l(1),
        l(2),
    ];
    // leibniz reaches the floor (2e-9) after one good step; bochner only halves
    let res = [1e-4, 1e-9, 8e-10, 1e-4, 5e-5, 1e-3, 4e-4, 1e-4];
    let runs: Vec<RunRecord> = jobs.iter().enumerate().map(|(i, j)| fake(i, j, res[i])).collect();
    let series = build_series(&jobs, &runs);
    let find = |id: &str, axis| series.iter().find(|s| s.identity == id && s.axis == axis).unwrap();

    let lz = find("leibniz", Axis::ZNodes);
    assert_eq!(lz.values, vec![40.0, 80.0, 160.0]);
    assert_eq!(lz.floor, 2e-9);
    assert_eq!(lz.meets_target, Some(true));
    assert_eq!(find("bochner", Axis::ZNodes).meets_target, Some(false));

    let k = find("kato", Axis::MeshLevel);
    // fitted order of 1e-3, 4e-4, 1e-4 is log2(10)/2
    assert!((k.slope - 10f64.log2() / 2.0).abs() < 1e-12);
    assert_eq!(k.meets_target, Some(true));
    // one point per modes group, so no modes series
    assert!(series.iter().all(|s| s.axis != Axis::Modes));
}
