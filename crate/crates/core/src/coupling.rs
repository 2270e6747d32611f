//! Slip laws interpolated from micro samples, the macro solve with the
//! Navier-slip wall law, and the outer fixed-point iteration.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{solve_stationary, BoundaryCondition, FlowProblem, FlowSolution, SolverOptions};
use crate::geometry::RoughnessProfile;
use crate::mesh::{BoundaryTag, TriangleMesh};
use crate::micro::{run_micro_sites, Fluid, MicroBcMode, MicroDomainSpec};

/// Points of the wall sample used for the convergence test.
const CONVERGENCE_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolant {
    PiecewiseLinear,
    /// Value of the nearest site.
    PiecewiseConstant,
    /// Monotone piecewise cubic Hermite.
    CubicMonotone,
}

/// Slip amount `alpha(x1)` along the smooth wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlipLaw {
    pub sites: Vec<f64>,
    /// Site values after flooring.
    pub values: Vec<f64>,
    /// Site values as extracted.
    pub raw: Vec<f64>,
    pub kind: Interpolant,
    /// Outside `[a, b]` the law vanishes; `a` and `b` are zero knots.
    pub window: Option<(f64, f64)>,
    pub floor: f64,
    knots: Vec<(f64, f64)>,
    slopes: Vec<f64>,
}

pub fn build_slip_law(
    samples: &[(f64, f64)],
    kind: Interpolant,
    window: Option<(f64, f64)>,
    floor: f64,
) -> Result<SlipLaw> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::NonMonotoneSites);
    }
    if !(floor >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "slip floor must be nonnegative, got {floor}"
        )));
    }
    let sites: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let raw: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let values: Vec<f64> = raw.iter().map(|&a| a.max(floor)).collect();
    let mut knots: Vec<(f64, f64)> = sites.iter().copied().zip(values.iter().copied()).collect();
    if let Some((a, b)) = window {
        if !(b > a) || sites[0] < a || sites[sites.len() - 1] > b {
            return Err(Error::InvalidParameter(format!(
                "slip window [{a}, {b}] must contain every site"
            )));
        }
        if sites[0] > a {
            knots.insert(0, (a, 0.0));
        }
        if sites[sites.len() - 1] < b {
            knots.push((b, 0.0));
        }
    }
    let slopes = match kind {
        Interpolant::CubicMonotone => monotone_slopes(&knots),
        _ => Vec::new(),
    };
    Ok(SlipLaw {
        sites,
        values,
        raw,
        kind,
        window,
        floor,
        knots,
        slopes,
    })
}

impl SlipLaw {
    pub fn constant(alpha: f64) -> Result<Self> {
        build_slip_law(&[(0.0, alpha)], Interpolant::PiecewiseLinear, None, 0.0)
    }

    pub fn eval(&self, x1: f64) -> f64 {
        if let Some((a, b)) = self.window {
            if x1 < a || x1 > b {
                return 0.0;
            }
        }
        self.interpolate(x1).max(self.floor)
    }

    fn interpolate(&self, x: f64) -> f64 {
        if self.kind == Interpolant::PiecewiseConstant {
            let k = self.sites.partition_point(|&s| s < x);
            return match k {
                0 => self.values[0],
                k if k == self.sites.len() => self.values[k - 1],
                k if x - self.sites[k - 1] <= self.sites[k] - x => self.values[k - 1],
                k => self.values[k],
            };
        }
        let kn = &self.knots;
        if x <= kn[0].0 {
            return kn[0].1;
        }
        if x >= kn[kn.len() - 1].0 {
            return kn[kn.len() - 1].1;
        }
        let k = kn.partition_point(|p| p.0 <= x) - 1;
        let ((x0, y0), (x1, y1)) = (kn[k], kn[k + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        match self.kind {
            Interpolant::CubicMonotone => {
                let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
                let t2 = t * t;
                let t3 = t2 * t;
                (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                    + (t3 - 2.0 * t2 + t) * h * d0
                    + (-2.0 * t3 + 3.0 * t2) * y1
                    + (t3 - t2) * h * d1
            }
            _ => y0 + t * (y1 - y0),
        }
    }

    /// Largest `|self - other|` over an even sample of `[a, b]`.
    pub fn distance(&self, other: &SlipLaw, a: f64, b: f64) -> f64 {
        sample_points(a, b)
            .map(|x| (self.eval(x) - other.eval(x)).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup(&self, a: f64, b: f64) -> f64 {
        sample_points(a, b)
            .map(|x| self.eval(x).abs())
            .fold(0.0, f64::max)
    }

    /// `(max - min) / max` of the site values.
    pub fn relative_spread(&self) -> f64 {
        let max = self
            .values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        (max - min) / max
    }
}

fn sample_points(a: f64, b: f64) -> impl Iterator<Item = f64> {
    let n = CONVERGENCE_SAMPLES;
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

/// Fritsch-Carlson slopes with the usual one-sided end conditions.
fn monotone_slopes(knots: &[(f64, f64)]) -> Vec<f64> {
    let n = knots.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = knots.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let delta: Vec<f64> = knots
        .windows(2)
        .zip(&h)
        .map(|(w, h)| (w[1].1 - w[0].1) / h)
        .collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Macro mesh, fluid and the conditions on every tag except `SlipWall`.
#[derive(Debug, Clone)]
pub struct MacroSetup {
    pub mesh: Arc<TriangleMesh>,
    pub fluid: Fluid,
    pub bcs: Vec<BoundaryCondition>,
}

impl MacroSetup {
    fn problem(&self, wall: BoundaryCondition) -> FlowProblem {
        let mut bcs = self.bcs.clone();
        bcs.push(wall);
        let mut problem = FlowProblem::new(
            self.mesh.clone(),
            self.fluid.viscosity,
            self.fluid.forcing.clone(),
            bcs,
        );
        problem.convection = self.fluid.convection;
        problem
    }

    /// Horizontal extent of the `SlipWall` edges.
    pub fn wall_extent(&self) -> Option<(f64, f64)> {
        let m = &self.mesh;
        m.edges_with_tag(BoundaryTag::SlipWall)
            .flat_map(|e| e.vertices.map(|v| m.vertices[v][0]))
            .fold(None, |acc: Option<(f64, f64)>, x| match acc {
                None => Some((x, x)),
                Some((a, b)) => Some((a.min(x), b.max(x))),
            })
    }
}

/// Macro solve with `u = alpha du1/dx2 e1` on `SlipWall`.
pub fn solve_macro(setup: &MacroSetup, slip: &SlipLaw) -> Result<FlowSolution> {
    let law = slip.clone();
    let wall = BoundaryCondition::SlipRobin {
        tag: BoundaryTag::SlipWall,
        slip: Arc::new(move |x| law.eval(x)),
    };
    solve_stationary(&setup.problem(wall), &SolverOptions::default())
}

/// Macro solve with no slip on `SlipWall`.
pub fn solve_no_slip(setup: &MacroSetup) -> Result<FlowSolution> {
    solve_stationary(
        &setup.problem(BoundaryCondition::no_slip(BoundaryTag::SlipWall)),
        &SolverOptions::default(),
    )
}

/// Micro-domain shape shared by every site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroTemplate {
    /// Defaults to one roughness period.
    pub width: Option<f64>,
    /// Defaults to `4 epsilon`.
    pub height: Option<f64>,
    pub resolution: usize,
    pub rows: usize,
    pub grading: f64,
    pub bc_mode: MicroBcMode,
}

impl MicroTemplate {
    pub fn new(resolution: usize, bc_mode: MicroBcMode) -> Self {
        MicroTemplate {
            width: None,
            height: None,
            resolution,
            rows: resolution.div_ceil(2).max(2),
            grading: 4.0,
            bc_mode,
        }
    }

    pub fn spec(&self, profile: &RoughnessProfile, site: f64) -> MicroDomainSpec {
        let base = MicroDomainSpec::for_profile(profile, site, self.resolution, self.bc_mode);
        MicroDomainSpec {
            width: self.width.unwrap_or(base.width),
            height: self.height.unwrap_or(base.height),
            rows: self.rows,
            grading: self.grading,
            ..base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmConfig {
    pub sites: Vec<f64>,
    /// Tolerance on the sup-norm change of the slip law.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub micro: MicroTemplate,
    pub interpolant: Interpolant,
    pub window: Option<(f64, f64)>,
    pub floor: f64,
}

impl HmmConfig {
    /// `tau = eps^2`, slip floor `1e-4 eps`, piecewise linear law.
    pub fn new(sites: Vec<f64>, epsilon: f64, micro: MicroTemplate) -> Self {
        HmmConfig {
            sites,
            tolerance: epsilon * epsilon,
            max_iterations: 10,
            micro,
            interpolant: Interpolant::PiecewiseLinear,
            window: None,
            floor: 1e-4 * epsilon,
        }
    }

    fn validate(&self, epsilon: f64) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "need at least one outer iteration".into(),
            ));
        }
        if self.sites.is_empty() {
            return Err(Error::EmptySamples);
        }
        for w in self.sites.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::NonMonotoneSites);
            }
            if w[1] - w[0] < epsilon * (1.0 - 1e-9) {
                return Err(Error::InvalidParameter(format!(
                    "sites {} and {} are closer than epsilon",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmReport {
    /// Micro stages needed to reach the fixed point, not counting a pass
    /// that only confirms it.
    pub iterations: usize,
    /// Micro stages actually run.
    pub loop_passes: usize,
    /// Extracted `alpha_j` per pass.
    pub site_history: Vec<Vec<f64>>,
    /// Sup-norm change of the law per pass.
    pub changes: Vec<f64>,
    pub laws: Vec<SlipLaw>,
    pub final_law: SlipLaw,
    pub macro_cells: usize,
    pub micro_cells: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct HmmResult {
    pub solution: FlowSolution,
    pub law: SlipLaw,
    pub report: HmmReport,
    /// The no-slip macro solution the iteration starts from.
    pub initial: FlowSolution,
}

/// Outer iteration: no-slip macro solve, then micro solves at every site,
/// a new slip law and a macro solve, until the law stops changing. One
/// last macro solve with the accepted law follows the loop.
pub fn run_hmm(
    config: &HmmConfig,
    setup: &MacroSetup,
    profile: &RoughnessProfile,
) -> Result<HmmResult> {
    config.validate(profile.epsilon)?;
    let specs: Vec<MicroDomainSpec> = config
        .sites
        .iter()
        .map(|&s| config.micro.spec(profile, s))
        .collect();
    let (a, b) = config
        .window
        .or_else(|| setup.wall_extent())
        .ok_or_else(|| Error::BoundaryConditions("macro mesh has no SlipWall edges".into()))?;

    let initial = solve_no_slip(setup)?;
    let mut current = initial.clone();
    let mut previous: Option<SlipLaw> = None;
    let mut history = Vec::new();
    let mut changes = Vec::new();
    let mut laws: Vec<SlipLaw> = Vec::new();
    for k in 1..=config.max_iterations {
        let results = run_micro_sites(&current, &specs, profile, &setup.fluid)?;
        let micro_cells: Vec<usize> = results.iter().map(|r| r.cells).collect();
        let samples: Vec<(f64, f64)> = results.iter().map(|r| (r.spec.site, r.slip)).collect();
        let law = build_slip_law(&samples, config.interpolant, config.window, config.floor)?;
        let change = match &previous {
            Some(p) => law.distance(p, a, b),
            None => law.sup(a, b),
        };
        history.push(samples.iter().map(|s| s.1).collect());
        changes.push(change);
        laws.push(law.clone());
        if change < config.tolerance {
            let solution = solve_macro(setup, &law)?;
            let report = HmmReport {
                iterations: if k == 1 { 1 } else { k - 1 },
                loop_passes: k,
                site_history: history,
                changes,
                laws,
                final_law: law.clone(),
                macro_cells: setup.mesh.cell_count(),
                micro_cells,
            };
            return Ok(HmmResult {
                solution,
                law,
                report,
                initial,
            });
        }
        current = solve_macro(setup, &law)?;
        previous = Some(law);
    }
    Err(Error::MaxIterationsExceeded(config.max_iterations))
}
