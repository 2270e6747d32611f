//! Experiment harness: the five benchmark cases, DNS / no-slip / HMM runs,
//! profile tables along horizontal lines and their comparison.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coupling::{
    run_hmm, HmmConfig, HmmReport, HmmResult, Interpolant, MacroSetup, MicroTemplate,
};
use crate::error::{Error, Result};
use crate::fem::{
    solve_stationary, BoundaryCondition, FlowProblem, FlowSolution, SolverOptions, VelocityField,
};
use crate::geometry::{ProfileKind, ProfileParams, RoughnessProfile};
use crate::mesh::{
    mesh_macro, mesh_rough_dns, BfsGeometry, BoundaryTag, MacroDomain, MacroResolution, RowLayout,
    Spacing, TopShape, TriangleMesh,
};
use crate::micro::{Fluid, MicroBcMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    PeriodicChannel,
    SawtoothWavy,
    ModulatedChannel,
    QuasiPeriodicChannel,
    BackwardFacingStep,
}

impl CaseId {
    pub const ALL: [CaseId; 5] = [
        CaseId::PeriodicChannel,
        CaseId::SawtoothWavy,
        CaseId::ModulatedChannel,
        CaseId::QuasiPeriodicChannel,
        CaseId::BackwardFacingStep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::PeriodicChannel => "periodic_channel",
            CaseId::SawtoothWavy => "sawtooth_wavy",
            CaseId::ModulatedChannel => "modulated_channel",
            CaseId::QuasiPeriodicChannel => "quasi_periodic_channel",
            CaseId::BackwardFacingStep => "backward_facing_step",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown case '{name}'")))
    }
}

/// Mesh densities of the three models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    /// DNS cells per roughness period along the wall.
    pub dns_wall: usize,
    /// DNS rows between the wall and `4 epsilon`.
    pub dns_rows: usize,
    /// DNS rows above `4 epsilon` (BFS: above the step height).
    pub dns_upper_rows: usize,
    /// Macro cells along the wall (BFS: across the slip window).
    pub macro_nx: usize,
    /// Macro rows (BFS: rows below and above the step height).
    pub macro_ny: usize,
    /// Micro cells per roughness period.
    pub micro: usize,
    pub micro_rows: usize,
    pub micro_grading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentCase {
    pub id: CaseId,
    pub epsilon: f64,
    pub viscosity: f64,
    /// Body force (or constant pressure gradient).
    pub forcing: [f64; 2],
    /// Reynolds number of the BFS inflow, based on the mean inflow speed
    /// and the step height.
    pub reynolds: Option<f64>,
    pub sites: Vec<f64>,
    pub bc_mode: MicroBcMode,
    /// Micro-domain width in roughness periods.
    pub micro_periods: usize,
    pub interpolant: Interpolant,
    /// Outer tolerance; `None` means `epsilon^2`.
    pub tolerance: Option<f64>,
    pub max_iterations: usize,
    /// Profile heights; `None` means the case defaults, which scale with
    /// epsilon.
    pub heights: Option<Vec<f64>>,
    /// Samples per height.
    pub samples: usize,
    pub resolution: Resolution,
}

impl ExperimentCase {
    pub fn defaults(id: CaseId) -> Self {
        let channel = Resolution {
            dns_wall: 14,
            dns_rows: 16,
            dns_upper_rows: 20,
            macro_nx: 20,
            macro_ny: 20,
            micro: 30,
            micro_rows: 15,
            micro_grading: 4.0,
        };
        let base = ExperimentCase {
            id,
            epsilon: 0.025,
            viscosity: 1.0,
            forcing: [1.0, 0.0],
            reynolds: None,
            sites: vec![0.0],
            bc_mode: MicroBcMode::PeriodicFreeStream,
            micro_periods: 1,
            interpolant: Interpolant::PiecewiseLinear,
            tolerance: None,
            max_iterations: 10,
            heights: None,
            samples: 400,
            resolution: channel,
        };
        match id {
            CaseId::PeriodicChannel => base,
            CaseId::SawtoothWavy => ExperimentCase {
                sites: vec![0.0, 0.25, 0.5, 0.75, 1.0],
                ..base
            },
            CaseId::ModulatedChannel => ExperimentCase {
                sites: vec![0.0, 0.15, 0.35, 0.525, 0.675, 0.875, 0.975],
                ..base
            },
            CaseId::QuasiPeriodicChannel => ExperimentCase {
                sites: vec![0.481561],
                bc_mode: MicroBcMode::QuadraticDirichlet,
                micro_periods: 5,
                ..base
            },
            CaseId::BackwardFacingStep => ExperimentCase {
                epsilon: 0.1,
                viscosity: 0.1,
                forcing: [0.0, 0.0],
                reynolds: Some(150.0),
                sites: vec![7.5, 13.5],
                bc_mode: MicroBcMode::QuadraticDirichlet,
                resolution: Resolution {
                    dns_wall: 12,
                    dns_rows: 16,
                    dns_upper_rows: 12,
                    macro_nx: 50,
                    macro_ny: 12,
                    micro: 30,
                    micro_rows: 15,
                    micro_grading: 4.0,
                },
                ..base
            },
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(self.epsilon * self.epsilon)
    }

    pub fn heights(&self) -> Vec<f64> {
        if let Some(h) = &self.heights {
            return h.clone();
        }
        let e = self.epsilon;
        let mut h = vec![e / 4.0, e / 2.0, e, 2.0 * e, 4.0 * e];
        if self.id == CaseId::BackwardFacingStep {
            h.push(0.55);
        }
        h
    }

    pub fn profile(&self) -> Result<RoughnessProfile> {
        let kind = match self.id {
            CaseId::PeriodicChannel => ProfileKind::Sinusoidal,
            CaseId::SawtoothWavy => ProfileKind::Sawtooth,
            CaseId::ModulatedChannel => ProfileKind::ModulatedSinusoidal,
            CaseId::QuasiPeriodicChannel => ProfileKind::QuasiPeriodic,
            CaseId::BackwardFacingStep => ProfileKind::BfsPatch,
        };
        RoughnessProfile::new(kind, self.epsilon, ProfileParams::default())
    }

    pub fn domain(&self) -> MacroDomain {
        match self.id {
            CaseId::BackwardFacingStep => MacroDomain::BackwardFacingStep(BfsGeometry::default()),
            CaseId::SawtoothWavy => MacroDomain::Channel {
                x0: 0.0,
                length: 1.0,
                top: TopShape::Wavy {
                    mean: 0.5,
                    amplitude: 0.125,
                    frequency: 1.0,
                },
                periodic: true,
                slip_window: None,
            },
            _ => MacroDomain::unit_square_periodic(),
        }
    }

    /// Horizontal range of the profile tables.
    pub fn sample_range(&self) -> (f64, f64) {
        match self.domain() {
            MacroDomain::Channel { x0, length, .. } => (x0, x0 + length),
            MacroDomain::BackwardFacingStep(g) => (g.step_x, g.length),
        }
    }

    /// Mean BFS inflow speed `Re nu / step height`.
    pub fn inflow_mean(&self) -> Option<f64> {
        match (self.domain(), self.reynolds) {
            (MacroDomain::BackwardFacingStep(g), Some(re)) => {
                Some(re * self.viscosity / g.step_height)
            }
            _ => None,
        }
    }

    fn dns_layout(&self) -> (RowLayout, Spacing) {
        let r = &self.resolution;
        let split = 4.0 * self.epsilon;
        let near = Spacing::graded(r.dns_rows, 3.0);
        match self.id {
            CaseId::BackwardFacingStep => (
                RowLayout::split(split, near, Spacing::graded(r.dns_upper_rows, 2.0)),
                Spacing::uniform(r.dns_upper_rows),
            ),
            _ => (
                RowLayout::split(split, near, Spacing::graded(r.dns_upper_rows, 4.0)),
                Spacing::uniform(0),
            ),
        }
    }

    pub fn dns_mesh(&self) -> Result<TriangleMesh> {
        let (layout, upper) = self.dns_layout();
        mesh_rough_dns(
            &self.profile()?,
            &self.domain(),
            self.resolution.dns_wall,
            layout,
            upper,
        )
    }

    pub fn macro_mesh(&self) -> Result<TriangleMesh> {
        let r = &self.resolution;
        mesh_macro(
            &self.domain(),
            &MacroResolution::grid(r.macro_nx, r.macro_ny),
        )
    }

    pub fn fluid(&self) -> Fluid {
        Fluid::new(self.viscosity, self.forcing)
    }

    /// Conditions on every tag except the rough or slip wall.
    pub fn far_field(&self) -> Vec<BoundaryCondition> {
        match self.domain() {
            MacroDomain::BackwardFacingStep(g) => {
                let mean = self.inflow_mean().unwrap_or(0.0);
                let (lo, hi) = (g.step_height, g.height);
                let w = hi - lo;
                let peak = 6.0 * mean / (w * w);
                vec![
                    BoundaryCondition::dirichlet(BoundaryTag::Inflow, move |x| {
                        [peak * (x[1] - lo) * (hi - x[1]), 0.0]
                    }),
                    BoundaryCondition::ZeroStress {
                        tag: BoundaryTag::Outflow,
                    },
                    BoundaryCondition::no_slip(BoundaryTag::NoSlipWall),
                ]
            }
            _ => vec![
                BoundaryCondition::periodic(),
                BoundaryCondition::no_slip(BoundaryTag::NoSlipWall),
            ],
        }
    }

    pub fn macro_setup(&self, mesh: TriangleMesh) -> MacroSetup {
        MacroSetup {
            mesh: Arc::new(mesh),
            fluid: self.fluid(),
            bcs: self.far_field(),
        }
    }

    pub fn dns_problem(&self, mesh: TriangleMesh) -> FlowProblem {
        FlowProblem::new(
            Arc::new(mesh),
            self.viscosity,
            self.fluid().forcing,
            self.far_field(),
        )
    }

    pub fn hmm_config(&self) -> HmmConfig {
        let r = &self.resolution;
        let micro = MicroTemplate {
            width: (self.micro_periods != 1).then(|| self.micro_periods as f64 * self.epsilon),
            height: None,
            resolution: r.micro * self.micro_periods,
            rows: r.micro_rows,
            grading: r.micro_grading,
            bc_mode: self.bc_mode,
        };
        let mut config = HmmConfig::new(self.sites.clone(), self.epsilon, micro);
        config.tolerance = self.tolerance();
        config.max_iterations = self.max_iterations;
        config.interpolant = self.interpolant;
        if let MacroDomain::BackwardFacingStep(g) = self.domain() {
            config.window = Some(g.slip_window);
        }
        config
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("viscosity", self.viscosity)?;
        positive("tolerance", self.tolerance())?;
        if self.samples < 2 {
            return Err(Error::Config("need at least 2 samples per height".into()));
        }
        if self.micro_periods == 0 {
            return Err(Error::Config(
                "micro domain must span at least one period".into(),
            ));
        }
        if self.heights().iter().any(|h| !(*h > 0.0)) {
            return Err(Error::Config(
                "profile heights must lie above the crest plane".into(),
            ));
        }
        Ok(())
    }
}

/// On-disk layout of a case: `[geometry]`, `[fluid]`, `[roughness]`,
/// `[hmm]` and `[output]`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    geometry: GeometrySection,
    fluid: FluidSection,
    roughness: RoughnessSection,
    hmm: HmmSection,
    output: OutputSection,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometrySection {
    case: CaseId,
    resolution: Resolution,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FluidSection {
    viscosity: f64,
    forcing: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    reynolds: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoughnessSection {
    epsilon: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HmmSection {
    sites: Vec<f64>,
    bc_mode: MicroBcMode,
    micro_periods: usize,
    interpolant: Interpolant,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    max_iterations: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    heights: Option<Vec<f64>>,
    samples: usize,
}

impl ExperimentCase {
    fn to_file(&self) -> CaseFile {
        CaseFile {
            geometry: GeometrySection {
                case: self.id,
                resolution: self.resolution,
            },
            fluid: FluidSection {
                viscosity: self.viscosity,
                forcing: self.forcing,
                reynolds: self.reynolds,
            },
            roughness: RoughnessSection {
                epsilon: self.epsilon,
            },
            hmm: HmmSection {
                sites: self.sites.clone(),
                bc_mode: self.bc_mode,
                micro_periods: self.micro_periods,
                interpolant: self.interpolant,
                tolerance: self.tolerance,
                max_iterations: self.max_iterations,
            },
            output: OutputSection {
                heights: self.heights.clone(),
                samples: self.samples,
            },
        }
    }

    fn from_file(f: CaseFile) -> Self {
        ExperimentCase {
            id: f.geometry.case,
            epsilon: f.roughness.epsilon,
            viscosity: f.fluid.viscosity,
            forcing: f.fluid.forcing,
            reynolds: f.fluid.reynolds,
            sites: f.hmm.sites,
            bc_mode: f.hmm.bc_mode,
            micro_periods: f.hmm.micro_periods,
            interpolant: f.hmm.interpolant,
            tolerance: f.hmm.tolerance,
            max_iterations: f.hmm.max_iterations,
            heights: f.output.heights,
            samples: f.output.samples,
            resolution: f.geometry.resolution,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("case serializes to TOML")
    }

    /// Parses a case file. Only `geometry.case` is required; every other
    /// key falls back to that case's defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let id = user
            .get("geometry")
            .and_then(|g| g.get("case"))
            .and_then(|c| c.as_str())
            .ok_or_else(|| Error::Config("missing geometry.case".into()))?;
        let defaults = ExperimentCase::defaults(CaseId::parse(id)?);
        let mut merged =
            toml::Table::try_from(defaults.to_file()).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, user);
        let file: CaseFile = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let case = ExperimentCase::from_file(file);
        case.validate()?;
        Ok(case)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub x1: f64,
    pub height: f64,
    pub u1: f64,
    pub du1dx2: f64,
}

/// Samples of `u1` and its wall-normal derivative along horizontal lines,
/// grouped by height.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub rows: Vec<ProfileRow>,
}

impl ProfileTable {
    /// Samples at the midpoints of `samples` equal panels of `range`.
    /// Points outside the field's domain are skipped.
    pub fn sample(
        field: &dyn VelocityField,
        heights: &[f64],
        range: (f64, f64),
        samples: usize,
    ) -> Result<Self> {
        let (a, b) = range;
        let mut rows = Vec::with_capacity(heights.len() * samples);
        for &y in heights {
            for i in 0..samples {
                let x = a + (b - a) * (i as f64 + 0.5) / samples as f64;
                match (field.velocity([x, y]), field.velocity_gradient([x, y])) {
                    (Ok(u), Ok(g)) => rows.push(ProfileRow {
                        x1: x,
                        height: y,
                        u1: u[0],
                        du1dx2: g[0][1],
                    }),
                    (Err(Error::PointOutsideMesh(..)), _)
                    | (_, Err(Error::PointOutsideMesh(..))) => {}
                    (Err(e), _) | (_, Err(e)) => return Err(e),
                }
            }
        }
        Ok(ProfileTable { rows })
    }

    /// Heights in order of first appearance.
    pub fn heights(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.height) {
                out.push(r.height);
            }
        }
        out
    }

    pub fn group(&self, height: f64) -> impl Iterator<Item = &ProfileRow> {
        self.rows.iter().filter(move |r| r.height == height)
    }

    /// Parses the format written by [`ProfileTable::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("x1,height,u1,du1dx2") {
            return Err(Error::Config(
                "profile CSV must start with 'x1,height,u1,du1dx2'".into(),
            ));
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let v: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("profile CSV line {}: {e}", k + 2)))?;
            if v.len() != 4 {
                return Err(Error::Config(format!(
                    "profile CSV line {} needs 4 fields",
                    k + 2
                )));
            }
            rows.push(ProfileRow {
                x1: v[0],
                height: v[1],
                u1: v[2],
                du1dx2: v[3],
            });
        }
        Ok(ProfileTable { rows })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,height,u1,du1dx2\n");
        for r in &self.rows {
            writeln!(
                s,
                "{:.15e},{:.15e},{:.15e},{:.15e}",
                r.x1, r.height, r.u1, r.du1dx2
            )
            .unwrap();
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightError {
    pub height: f64,
    /// Relative L2 error of `u1`.
    pub u1: f64,
    /// Relative L2 error of `du1/dx2`.
    pub shear: f64,
}

/// Relative L2 errors of `candidate` against `reference` per height, over
/// the abscissae both tables share.
pub fn field_error(reference: &ProfileTable, candidate: &ProfileTable) -> Result<Vec<HeightError>> {
    let heights = reference.heights();
    if heights.is_empty() || heights != candidate.heights() {
        return Err(Error::GridMismatch);
    }
    let mut out = Vec::with_capacity(heights.len());
    for h in heights {
        let cand: Vec<&ProfileRow> = candidate.group(h).collect();
        let (mut du, mut nu, mut ds, mut ns) = (0.0, 0.0, 0.0, 0.0);
        let mut common = 0;
        for r in reference.group(h) {
            if let Some(c) = cand.iter().find(|c| c.x1 == r.x1) {
                common += 1;
                du += (c.u1 - r.u1).powi(2);
                nu += r.u1 * r.u1;
                ds += (c.du1dx2 - r.du1dx2).powi(2);
                ns += r.du1dx2 * r.du1dx2;
            }
        }
        if common == 0 {
            return Err(Error::GridMismatch);
        }
        let rel = |d: f64, n: f64| if n > 0.0 { (d / n).sqrt() } else { d.sqrt() };
        out.push(HeightError {
            height: h,
            u1: rel(du, nu),
            shear: rel(ds, ns),
        });
    }
    Ok(out)
}

/// Distance from `corner` to the first place where `du1/dx2`, sampled
/// `probe_height` above the corner, turns from negative to positive.
/// The search runs up to `end` and the crossing is refined by bisection.
pub fn recirculation_length(
    field: &dyn VelocityField,
    corner: [f64; 2],
    probe_height: f64,
    end: f64,
) -> Result<f64> {
    const SAMPLES: usize = 2000;
    let y = corner[1] + probe_height;
    let shear = |x: f64| field.velocity_gradient([x, y]).map(|g| g[0][1]);
    let step = (end - corner[0]) / SAMPLES as f64;
    let mut x_prev = corner[0] + 0.5 * step;
    let mut s_prev = shear(x_prev)?;
    for i in 1..SAMPLES {
        let x = corner[0] + (i as f64 + 0.5) * step;
        let s = shear(x)?;
        if s_prev < 0.0 && s >= 0.0 {
            let (mut lo, mut hi) = (x_prev, x);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if shear(mid)? < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi) - corner[0]);
        }
        x_prev = x;
        s_prev = s;
    }
    Err(Error::NoReattachment(end))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTables {
    pub dns: ProfileTable,
    pub no_slip: ProfileTable,
    pub hmm: ProfileTable,
}

/// Writes `dns.csv`, `no_slip.csv` and `hmm.csv` into `dir`.
pub fn export_profiles(tables: &ProfileTables, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, table) in [
        ("dns", &tables.dns),
        ("no_slip", &tables.no_slip),
        ("hmm", &tables.hmm),
    ] {
        let path = dir.join(format!("{name}.csv"));
        fs::write(&path, table.to_csv())?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelErrors {
    pub height: f64,
    pub no_slip_u1: f64,
    pub hmm_u1: f64,
    pub no_slip_shear: f64,
    pub hmm_shear: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlipSummary {
    pub sites: Vec<f64>,
    /// Extracted slip amounts before flooring.
    pub alphas: Vec<f64>,
    /// `(max - min) / max` over the sites.
    pub relative_spread: f64,
    pub iterations: usize,
    pub loop_passes: usize,
    pub history: Vec<Vec<f64>>,
    pub changes: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recirculation {
    pub probe_height: f64,
    pub dns: f64,
    pub no_slip: f64,
    pub hmm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inflow {
    pub reynolds: f64,
    /// The Reynolds length scale.
    pub length_scale: String,
    pub mean_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCounts {
    pub dns: usize,
    pub macro_cells: usize,
    pub micro: Vec<usize>,
    /// `(macro + sum micro) / dns`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub case: CaseId,
    pub epsilon: f64,
    pub viscosity: f64,
    pub errors: Vec<ModelErrors>,
    pub slip: SlipSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recirculation: Option<Recirculation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inflow: Option<Inflow>,
    pub cells: CellCounts,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: ComparisonReport,
    pub tables: ProfileTables,
    pub hmm: HmmReport,
}

/// Probe height of the recirculation search, above the crest plane.
const RECIRCULATION_PROBE: f64 = 0.05;

/// Resolved solve on the rough domain.
pub fn solve_dns(case: &ExperimentCase) -> Result<FlowSolution> {
    let mesh = case.dns_mesh().map_err(|e| e.in_stage("dns mesh"))?;
    solve_stationary(&case.dns_problem(mesh), &SolverOptions::default())
        .map_err(|e| e.in_stage("dns"))
}

/// HMM solve; the result also carries the no-slip model.
pub fn solve_case_hmm(case: &ExperimentCase) -> Result<HmmResult> {
    let profile = case.profile()?;
    let setup = case.macro_setup(case.macro_mesh().map_err(|e| e.in_stage("macro mesh"))?);
    run_hmm(&case.hmm_config(), &setup, &profile).map_err(|e| e.in_stage("hmm"))
}

/// Runs DNS, the no-slip model and the HMM for one case and compares them.
pub fn run_experiment(case: &ExperimentCase) -> Result<Experiment> {
    case.validate()?;
    let config = case.hmm_config();
    let (dns, hmm) = rayon::join(|| solve_dns(case), || solve_case_hmm(case));
    let (dns, hmm) = (dns?, hmm?);
    let dns_cells = dns.cell_count();

    let heights = case.heights();
    let range = case.sample_range();
    let sample = |f: &dyn VelocityField, stage: &str| {
        ProfileTable::sample(f, &heights, range, case.samples).map_err(|e| e.in_stage(stage))
    };
    let tables = ProfileTables {
        dns: sample(&dns, "dns sampling")?,
        no_slip: sample(&hmm.initial, "no-slip sampling")?,
        hmm: sample(&hmm.solution, "hmm sampling")?,
    };
    let e_ns = field_error(&tables.dns, &tables.no_slip)?;
    let e_hmm = field_error(&tables.dns, &tables.hmm)?;
    let errors = e_ns
        .iter()
        .zip(&e_hmm)
        .map(|(a, b)| ModelErrors {
            height: a.height,
            no_slip_u1: a.u1,
            hmm_u1: b.u1,
            no_slip_shear: a.shear,
            hmm_shear: b.shear,
        })
        .collect();

    let (recirculation, inflow) = match case.domain() {
        MacroDomain::BackwardFacingStep(g) => {
            let corner = [g.step_x, 0.0];
            let len = |f: &dyn VelocityField, stage: &str| {
                recirculation_length(f, corner, RECIRCULATION_PROBE, g.length)
                    .map_err(|e| e.in_stage(stage))
            };
            let r = Recirculation {
                probe_height: RECIRCULATION_PROBE,
                dns: len(&dns, "dns recirculation")?,
                no_slip: len(&hmm.initial, "no-slip recirculation")?,
                hmm: len(&hmm.solution, "hmm recirculation")?,
            };
            let inflow = case.reynolds.map(|re| Inflow {
                reynolds: re,
                length_scale: "step height".into(),
                mean_speed: case.inflow_mean().unwrap_or(0.0),
            });
            (Some(r), inflow)
        }
        _ => (None, None),
    };

    let rep = &hmm.report;
    let micro_total: usize = rep.micro_cells.iter().sum();
    let report = ComparisonReport {
        case: case.id,
        epsilon: case.epsilon,
        viscosity: case.viscosity,
        errors,
        slip: SlipSummary {
            sites: rep.final_law.sites.clone(),
            alphas: rep.final_law.raw.clone(),
            relative_spread: rep.final_law.relative_spread(),
            iterations: rep.iterations,
            loop_passes: rep.loop_passes,
            history: rep.site_history.clone(),
            changes: rep.changes.clone(),
            tolerance: config.tolerance,
        },
        recirculation,
        inflow,
        cells: CellCounts {
            dns: dns_cells,
            macro_cells: rep.macro_cells,
            micro: rep.micro_cells.clone(),
            ratio: (rep.macro_cells + micro_total) as f64 / dns_cells as f64,
        },
    };
    Ok(Experiment {
        report,
        tables,
        hmm: hmm.report,
    })
}

/// Writes the profile CSVs and `report.json` into `dir`.
pub fn export_experiment(experiment: &Experiment, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = export_profiles(&experiment.tables, dir)?;
    let path = dir.join("report.json");
    fs::write(&path, experiment.report.to_json())?;
    paths.push(path);
    Ok(paths)
}
