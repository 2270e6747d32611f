use roughslip::bench::{
    export_profiles, field_error, recirculation_length, CaseId, ExperimentCase, ProfileRow,
    ProfileTable, ProfileTables,
};
use roughslip::fem::{AnalyticField, VelocityField};
use roughslip::micro::MicroBcMode;
use roughslip::Error;

fn table(heights: &[f64], xs: &[f64], f: impl Fn(f64, f64) -> (f64, f64)) -> ProfileTable {
    let mut rows = Vec::new();
    for &h in heights {
        for &x in xs {
            let (u1, du1dx2) = f(x, h);
            rows.push(ProfileRow {
                x1: x,
                height: h,
                u1,
                du1dx2,
            });
        }
    }
    ProfileTable { rows }
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}

#[test]
fn identical_tables_have_zero_error() {
    let t = table(&[0.1, 0.2], &grid(50), |x, h| (x * h + 1.0, x.sin()));
    for e in field_error(&t, &t).unwrap() {
        assert_eq!(e.u1, 0.0);
        assert_eq!(e.shear, 0.0);
    }
}

#[test]
fn scaled_table_has_relative_error_of_the_scale() {
    let f = |x: f64, h: f64| (x * h + 1.0, (3.0 * x).cos() + 2.0);
    let reference = table(&[0.05, 0.4], &grid(400), f);
    let candidate = table(&[0.05, 0.4], &grid(400), |x, h| {
        let (u, s) = f(x, h);
        (1.1 * u, 1.1 * s)
    });
    for e in field_error(&reference, &candidate).unwrap() {
        assert!((e.u1 - 0.1).abs() < 1e-12, "{}", e.u1);
        assert!((e.shear - 0.1).abs() < 1e-12);
    }
}

#[test]
fn mismatched_grids_are_rejected() {
    let a = table(&[0.1], &[0.1, 0.2], |_, _| (1.0, 1.0));
    let b = table(&[0.1], &[0.15, 0.25], |_, _| (1.0, 1.0));
    assert_eq!(field_error(&a, &b).unwrap_err(), Error::GridMismatch);
    let c = table(&[0.2], &[0.1, 0.2], |_, _| (1.0, 1.0));
    assert_eq!(field_error(&a, &c).unwrap_err(), Error::GridMismatch);
}

#[test]
fn error_uses_the_common_abscissae() {
    let xs = grid(20);
    let reference = table(&[0.1], &xs, |x, _| (x + 1.0, 1.0));
    let mut candidate = reference.clone();
    candidate.rows.retain(|r| r.x1 > 0.5);
    let e = field_error(&reference, &candidate).unwrap();
    assert_eq!(e[0].u1, 0.0);
}

#[test]
fn reattachment_of_a_linear_shear_field() {
    let c = 7.25;
    let field = AnalyticField::new(
        move |x| [(x[0] - c) * x[1], 0.0],
        move |x| [[x[1], x[0] - c], [0.0, 0.0]],
    );
    let len = recirculation_length(&field, [5.0, 0.0], 0.05, 23.0).unwrap();
    assert!((len - (c - 5.0)).abs() < 1e-10, "{len}");
}

#[test]
fn poiseuille_flow_never_reattaches() {
    let field = AnalyticField::new(
        |x| [x[1] * (1.0 - x[1]) / 2.0, 0.0],
        |x| [[0.0, 0.5 - x[1]], [0.0, 0.0]],
    );
    assert_eq!(
        recirculation_length(&field, [0.0, 0.0], 0.05, 1.0).unwrap_err(),
        Error::NoReattachment(1.0)
    );
}

/// Shear flow defined only for `x1 < 0.5`.
struct HalfDomain;

impl VelocityField for HalfDomain {
    fn velocity(&self, p: [f64; 2]) -> roughslip::Result<[f64; 2]> {
        if p[0] < 0.5 {
            Ok([p[1], 0.0])
        } else {
            Err(Error::PointOutsideMesh(p[0], p[1]))
        }
    }

    fn velocity_gradient(&self, p: [f64; 2]) -> roughslip::Result<[[f64; 2]; 2]> {
        self.velocity(p).map(|_| [[0.0, 1.0], [0.0, 0.0]])
    }
}

#[test]
fn sampling_skips_points_outside_the_field() {
    let t = ProfileTable::sample(&HalfDomain, &[0.1, 0.2], (0.0, 1.0), 10).unwrap();
    assert_eq!(t.rows.len(), 10);
    assert_eq!(t.heights(), vec![0.1, 0.2]);
    let xs: Vec<f64> = t.group(0.1).map(|r| r.x1).collect();
    assert!(xs.windows(2).all(|w| w[1] > w[0]) && xs.iter().all(|&x| x < 0.5));
    assert_eq!(t.group(0.2).next().unwrap().u1, 0.2);
}

#[test]
fn export_writes_header_and_height_groups() {
    let dir = tempfile::tempdir().unwrap();
    let empty = ProfileTables {
        dns: ProfileTable::default(),
        no_slip: ProfileTable::default(),
        hmm: ProfileTable::default(),
    };
    let paths = export_profiles(&empty, dir.path()).unwrap();
    assert_eq!(paths.len(), 3);
    for p in &paths {
        assert_eq!(std::fs::read_to_string(p).unwrap(), "x1,height,u1,du1dx2\n");
    }

    let case = ExperimentCase::defaults(CaseId::PeriodicChannel);
    let heights = case.heights();
    assert_eq!(heights.len(), 5);
    let t = table(&heights, &grid(4), |x, h| (x + h, 1.0 / 3.0));
    let tables = ProfileTables {
        dns: t.clone(),
        no_slip: t.clone(),
        hmm: t,
    };
    let paths = export_profiles(&tables, dir.path()).unwrap();
    let text = std::fs::read_to_string(&paths[0]).unwrap();
    let parsed = ProfileTable::from_csv(&text).unwrap();
    assert_eq!(parsed.heights().len(), 5);
    let digits = text.lines().nth(1).unwrap().split(',').nth(3).unwrap();
    assert!(digits.starts_with("3.333333333333"), "{digits}");
    let again = export_profiles(&tables, dir.path()).unwrap();
    assert_eq!(std::fs::read(&again[0]).unwrap(), text.as_bytes());
}

#[test]
fn csv_round_trip_preserves_values() {
    let t = table(&[0.025, 0.55], &grid(7), |x, h| (x.exp() * h, -x / 3.0));
    let back = ProfileTable::from_csv(&t.to_csv()).unwrap();
    for (a, b) in t.rows.iter().zip(&back.rows) {
        assert!((a.u1 - b.u1).abs() <= 1e-15 * a.u1.abs());
        assert!((a.du1dx2 - b.du1dx2).abs() <= 1e-15 * a.du1dx2.abs());
    }
    assert!(matches!(
        ProfileTable::from_csv("a,b\n"),
        Err(Error::Config(_))
    ));
}

#[test]
fn case_defaults() {
    let c = ExperimentCase::defaults(CaseId::PeriodicChannel);
    assert_eq!(
        (c.epsilon, c.viscosity, c.forcing),
        (0.025, 1.0, [1.0, 0.0])
    );
    assert_eq!(c.sites, vec![0.0]);
    assert_eq!(c.bc_mode, MicroBcMode::PeriodicFreeStream);
    assert_eq!(c.tolerance(), 0.025 * 0.025);
    let spec = c.hmm_config().micro.spec(&c.profile().unwrap(), 0.0);
    assert!((spec.height - 4.0 * c.epsilon).abs() < 1e-15);

    let s = ExperimentCase::defaults(CaseId::SawtoothWavy);
    assert_eq!(s.sites, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert_eq!(s.forcing, [1.0, 0.0]);

    let m = ExperimentCase::defaults(CaseId::ModulatedChannel);
    assert_eq!(m.sites.len(), 7);

    let q = ExperimentCase::defaults(CaseId::QuasiPeriodicChannel);
    let spec = q.hmm_config().micro.spec(&q.profile().unwrap(), 0.481561);
    assert!((spec.width - 5.0 * q.epsilon).abs() < 1e-15);
    assert_eq!(spec.bc_mode, MicroBcMode::QuadraticDirichlet);

    let b = ExperimentCase::defaults(CaseId::BackwardFacingStep);
    assert_eq!((b.epsilon, b.viscosity), (0.1, 0.1));
    assert_eq!(b.sites, vec![7.5, 13.5]);
    assert_eq!(b.hmm_config().window, Some((6.0, 16.0)));
    assert!((b.profile().unwrap().feature_period() - 0.25).abs() < 1e-15);
    // Mean inflow speed times the step height over nu.
    assert!((b.inflow_mean().unwrap() - 15.0).abs() < 1e-12);
    assert_eq!(b.heights().len(), 6);
    assert_eq!(b.heights()[5], 0.55);
}

#[test]
fn config_round_trip_and_partial_files() {
    for id in CaseId::ALL {
        let c = ExperimentCase::defaults(id);
        assert_eq!(ExperimentCase::from_toml(&c.to_toml()).unwrap(), c);
    }
    let c = ExperimentCase::from_toml(
        "[geometry]\ncase = \"modulated_channel\"\n[roughness]\nepsilon = 0.05\n[hmm]\nsites = [0.0, 0.5]\n",
    )
    .unwrap();
    assert_eq!(c.id, CaseId::ModulatedChannel);
    assert_eq!(c.epsilon, 0.05);
    assert_eq!(c.sites, vec![0.0, 0.5]);
    assert_eq!(c.tolerance(), 0.05 * 0.05);
    assert_eq!(c.viscosity, 1.0);

    for bad in [
        "[roughness]\nepsilon = 0.1\n",
        "[geometry]\ncase = \"pipe\"\n",
        "[geometry]\ncase = \"periodic_channel\"\n[fluid]\nviscocity = 2.0\n",
        "[geometry]\ncase = \"periodic_channel\"\n[roughness]\nepsilon = -1.0\n",
    ] {
        assert!(
            matches!(ExperimentCase::from_toml(bad), Err(Error::Config(_))),
            "{bad}"
        );
    }
}

#[test]
fn experiment_cells_stay_within_budget() {
    for id in CaseId::ALL {
        let c = ExperimentCase::defaults(id);
        let profile = c.profile().unwrap();
        let config = c.hmm_config();
        let micro: usize = c
            .sites
            .iter()
            .map(|&s| {
                config
                    .micro
                    .spec(&profile, s)
                    .mesh(&profile)
                    .unwrap()
                    .cell_count()
            })
            .sum();
        let dns = c.dns_mesh().unwrap();
        assert!(dns.audit().is_ok());
        let ratio = (c.macro_mesh().unwrap().cell_count() + micro) as f64 / dns.cell_count() as f64;
        assert!(ratio <= 0.25, "{id:?}: {ratio}");
    }
}
