use std::f64::consts::PI;
use std::sync::Arc;

use roughslip::fem::{
    kernel_average, line_average, line_average_gradient, solve_stationary, AnalyticField,
    BoundaryCondition, FlowProblem, Forcing, Kernel, SolverOptions,
};
use roughslip::mesh::{mesh_macro, BoundaryTag, MacroDomain, MacroResolution, TriangleMesh};
use roughslip::Error;

fn unit_square(n: usize) -> Arc<TriangleMesh> {
    Arc::new(
        mesh_macro(
            &MacroDomain::unit_square_periodic(),
            &MacroResolution::grid(n, n),
        )
        .unwrap(),
    )
}

fn walls() -> Vec<BoundaryCondition> {
    vec![
        BoundaryCondition::periodic(),
        BoundaryCondition::no_slip(BoundaryTag::SlipWall),
        BoundaryCondition::no_slip(BoundaryTag::NoSlipWall),
    ]
}

fn poiseuille(n: usize) -> FlowProblem {
    FlowProblem::new(unit_square(n), 1.0, Forcing::Constant([1.0, 0.0]), walls())
}

#[test]
fn poiseuille_is_reproduced_exactly() {
    let problem = poiseuille(8);
    let sol = solve_stationary(&problem, &SolverOptions::default()).unwrap();
    for &(x, y) in &[
        (0.3, 0.5),
        (0.1, 0.17),
        (0.77, 0.93),
        (0.0, 0.4),
        (1.0, 0.4),
    ] {
        let u = sol.velocity([x, y]).unwrap();
        assert!((u[0] - y * (1.0 - y) / 2.0).abs() < 1e-8, "{x} {y} {u:?}");
        assert!(u[1].abs() < 1e-8);
    }
    let u = sol.velocity([0.3, 0.5]).unwrap();
    assert!((u[0] - 0.125).abs() < 1e-8);
    let g = sol.velocity_gradient([0.37, 0.0]).unwrap();
    assert!((g[0][1] - 0.5).abs() < 1e-8);
    assert!(sol.relative_residual < 1e-10);
    assert!(sol.divergence_residual() <= 1e-8 * sol.velocity_scale());
}

#[test]
fn wall_vertices_have_zero_velocity() {
    let problem = FlowProblem::new(
        unit_square(6),
        0.05,
        Forcing::Field(Arc::new(|x| {
            [(2.0 * PI * x[1]).sin(), 0.3 * (2.0 * PI * x[0]).cos()]
        })),
        walls(),
    );
    let sol = solve_stationary(&problem, &SolverOptions::default()).unwrap();
    for e in problem.mesh.edges_with_tag(BoundaryTag::NoSlipWall) {
        for v in e.vertices {
            let u = sol.velocity(problem.mesh.vertices[v]).unwrap();
            assert!(u[0].abs() < 1e-10 && u[1].abs() < 1e-10);
        }
    }
    // periodic identification is exact
    for &(l, r) in &problem.mesh.periodic_pairs {
        let a = sol.velocity(problem.mesh.vertices[l]).unwrap();
        let b = sol.velocity(problem.mesh.vertices[r]).unwrap();
        assert!((a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12);
    }
    assert!(matches!(
        sol.velocity([0.5, 1.5]),
        Err(Error::PointOutsideMesh(..))
    ));
}

fn slip_channel(n: usize, alpha: f64) -> FlowProblem {
    let domain = MacroDomain::Channel {
        x0: 0.0,
        length: 1.0,
        top: roughslip::mesh::TopShape::Flat { height: 1.0 },
        periodic: true,
        slip_window: Some((0.0, 1.0)),
    };
    let mesh = Arc::new(mesh_macro(&domain, &MacroResolution::grid(n, n)).unwrap());
    FlowProblem::new(
        mesh,
        1.0,
        Forcing::Constant([1.0, 0.0]),
        vec![
            BoundaryCondition::periodic(),
            BoundaryCondition::constant_slip(BoundaryTag::SlipWall, alpha),
            BoundaryCondition::no_slip(BoundaryTag::NoSlipWall),
        ],
    )
}

#[test]
fn navier_slip_poiseuille_matches_closed_form() {
    let alpha = 0.0125;
    let sol = solve_stationary(&slip_channel(6, alpha), &SolverOptions::default()).unwrap();
    let a = 1.0 / (2.0 * (1.0 + alpha));
    let exact = |y: f64| -y * y / 2.0 + a * y + alpha * a;
    for &y in &[0.0, 0.2, 0.5, 0.9] {
        let u = sol.velocity([0.41, y]).unwrap();
        assert!(
            (u[0] - exact(y)).abs() < 1e-8,
            "{y}: {} vs {}",
            u[0],
            exact(y)
        );
    }
    let u0 = sol.velocity([0.2, 0.0]).unwrap()[0];
    assert!((u0 - 0.006_172_839_506_172_84).abs() < 1e-8);
    for i in 0..=40 {
        let x = i as f64 / 40.0;
        let u = sol.velocity([x, 0.0]).unwrap()[0];
        let g = sol.velocity_gradient([x, 0.0]).unwrap()[0][1];
        assert!((u - alpha * g).abs() <= 1e-8);
    }
}

#[test]
fn free_slip_bottom_gives_half_channel_profile() {
    let sol = solve_stationary(&slip_channel(6, f64::INFINITY), &SolverOptions::default()).unwrap();
    // u1 = (1 - y^2) / 2
    for &y in &[0.0, 0.3, 0.8] {
        let u = sol.velocity([0.5, y]).unwrap()[0];
        assert!((u - (1.0 - y * y) / 2.0).abs() < 1e-8);
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    let mesh = Arc::new(
        mesh_macro(
            &MacroDomain::Channel {
                x0: 0.0,
                length: 1.0,
                top: roughslip::mesh::TopShape::Flat { height: 1.0 },
                periodic: false,
                slip_window: None,
            },
            &MacroResolution::grid(4, 4),
        )
        .unwrap(),
    );
    let problem = FlowProblem::new(
        mesh,
        1.0,
        Forcing::zero(),
        vec![
            BoundaryCondition::no_slip(BoundaryTag::Inflow),
            BoundaryCondition::no_slip(BoundaryTag::Outflow),
            BoundaryCondition::no_slip(BoundaryTag::SlipWall),
            BoundaryCondition::no_slip(BoundaryTag::NoSlipWall),
        ],
    );
    let sol = solve_stationary(&problem, &SolverOptions::default()).unwrap();
    assert!(sol.coefficients.iter().all(|&c| c == 0.0));
    assert_eq!(sol.pressure([0.5, 0.5]).unwrap(), 0.0);
}

#[test]
fn missing_condition_is_rejected() {
    let problem = FlowProblem::new(
        unit_square(2),
        1.0,
        Forcing::zero(),
        vec![BoundaryCondition::no_slip(BoundaryTag::NoSlipWall)],
    );
    assert!(matches!(
        solve_stationary(&problem, &SolverOptions::default()),
        Err(Error::BoundaryConditions(_))
    ));
}

fn manufactured(n: usize) -> f64 {
    let domain = MacroDomain::Channel {
        x0: 0.0,
        length: 1.0,
        top: roughslip::mesh::TopShape::Flat { height: 1.0 },
        periodic: false,
        slip_window: None,
    };
    let mesh = Arc::new(mesh_macro(&domain, &MacroResolution::grid(n, n)).unwrap());
    let nu = 0.1;
    // stream function psi = sin(pi x)^2 sin(pi y)^2 / pi, p = cos(pi x) sin(pi y)
    let u = |x: [f64; 2]| {
        let (sx, cx, sy, cy) = (
            (PI * x[0]).sin(),
            (PI * x[0]).cos(),
            (PI * x[1]).sin(),
            (PI * x[1]).cos(),
        );
        [2.0 * sx * sx * sy * cy, -2.0 * sx * cx * sy * sy]
    };
    let forcing = move |x: [f64; 2]| {
        let h = 1e-4;
        let uf = |p: [f64; 2]| u(p);
        let c = uf(x);
        let mut lap = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (a, b) = (uf(xp), uf(xm));
            for i in 0..2 {
                lap[i] += (a[i] - 2.0 * c[i] + b[i]) / (h * h);
                grad[i][k] = (a[i] - b[i]) / (2.0 * h);
            }
        }
        let dp = [
            -PI * (PI * x[0]).sin() * (PI * x[1]).sin(),
            PI * (PI * x[0]).cos() * (PI * x[1]).cos(),
        ];
        let mut f = [0.0; 2];
        for i in 0..2 {
            f[i] = -nu * lap[i] + c[0] * grad[i][0] + c[1] * grad[i][1] + dp[i];
        }
        f
    };
    let problem = FlowProblem::new(
        mesh.clone(),
        nu,
        Forcing::Field(Arc::new(forcing)),
        vec![
            BoundaryCondition::dirichlet(BoundaryTag::Inflow, u),
            BoundaryCondition::dirichlet(BoundaryTag::Outflow, u),
            BoundaryCondition::dirichlet(BoundaryTag::SlipWall, u),
            BoundaryCondition::dirichlet(BoundaryTag::NoSlipWall, u),
        ],
    );
    let sol = solve_stationary(&problem, &SolverOptions::default()).unwrap();
    let mut err = 0.0;
    for t in 0..mesh.cell_count() {
        let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
        let area = mesh.area(t);
        for l in [
            [4.0, 1.0, 1.0],
            [1.0, 4.0, 1.0],
            [1.0, 1.0, 4.0],
            [2.0, 2.0, 2.0],
        ] {
            let l = l.map(|v: f64| v / 6.0);
            let p = [
                l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
                l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
            ];
            let uh = sol.velocity(p).unwrap();
            let ue = u(p);
            err += area / 4.0 * ((uh[0] - ue[0]).powi(2) + (uh[1] - ue[1]).powi(2));
        }
    }
    err.sqrt()
}

#[test]
fn manufactured_solution_converges_at_third_order() {
    let e: Vec<f64> = [6, 12, 24].iter().map(|&n| manufactured(n)).collect();
    let r1 = (e[0] / e[1]).log2();
    let r2 = (e[1] / e[2]).log2();
    assert!(r1 >= 2.7 && r2 >= 2.7, "rates {r1} {r2} errors {e:?}");
}

#[test]
fn stokes_limit_matches_small_forcing() {
    let base = FlowProblem::new(
        unit_square(6),
        0.01,
        Forcing::Field(Arc::new(|x| {
            [(2.0 * PI * x[1]).sin() + 1.0, (2.0 * PI * x[0]).sin()]
        }))
        .scaled(1e-6),
        walls(),
    );
    let ns = solve_stationary(&base, &SolverOptions::default()).unwrap();
    let st = solve_stationary(&base.clone().stokes(), &SolverOptions::default()).unwrap();
    let diff = ns
        .coefficients
        .iter()
        .zip(&st.coefficients)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = st.coefficients.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    assert!(diff <= 1e-4 * scale);
}

#[test]
fn line_averages_of_closed_form_fields() {
    let lin = AnalyticField::new(|x| [x[0], 3.0], |_| [[1.0, 0.0], [0.0, 0.0]]);
    let m = line_average(&lin, 0.4, 0.0, 0.2).unwrap();
    assert!((m[0] - 0.5).abs() < 1e-14 && (m[1] - 3.0).abs() < 1e-14);
    let eps = 0.025;
    let wave = AnalyticField::new(
        move |x| [(2.0 * PI * x[0] / eps).sin(), 0.0],
        |_| [[0.0; 2]; 2],
    );
    assert!(line_average(&wave, 0.013, 0.1, eps).unwrap()[0].abs() < 1e-10);
    let g = line_average_gradient(&lin, 0.0, 0.0, 1.0).unwrap();
    assert!((g[0][0] - 1.0).abs() < 1e-14 && g[0][1] == 0.0 && g[1] == [0.0, 0.0]);

    let k = kernel_average(&lin, 0.4, 0.0, 0.2, &Kernel::PolyBump).unwrap();
    assert!((k[0] - 0.5).abs() < 1e-13 && (k[1] - 3.0).abs() < 1e-13);
    let b = kernel_average(&wave, 0.1, 0.0, 0.3, &Kernel::Box).unwrap();
    let l = line_average(&wave, 0.1, 0.0, 0.3).unwrap();
    assert!((b[0] - l[0]).abs() < 1e-14);
    let bad = Kernel::Custom(Arc::new(|t| 2.0 * t * t));
    assert!(matches!(
        kernel_average(&lin, 0.0, 0.0, 1.0, &bad),
        Err(Error::KernelNotNormalized(_))
    ));
}

#[test]
fn line_average_of_solution_splits_at_elements() {
    let problem = poiseuille(5);
    let sol = solve_stationary(&problem, &SolverOptions::default()).unwrap();
    let m = line_average(&sol, 0.13, 0.3, 0.61).unwrap();
    assert!((m[0] - 0.3 * 0.7 / 2.0).abs() < 1e-10);
    // wraps across the periodic seam
    let w = line_average(&sol, 0.8, 0.3, 0.5).unwrap();
    assert!((w[0] - 0.105).abs() < 1e-10);
    assert!(matches!(
        line_average(&sol, 0.1, 1.4, 0.2),
        Err(Error::SegmentOutsideMesh { .. })
    ));
}
