//! Micro-domain problems: boundary data projected from the macro flow,
//! the fine solve over the roughness, and the slip amount it implies.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    gauss_legendre, line_average, line_average_gradient, BoundaryCondition, FlowProblem,
    FlowSolution, Forcing, SolverOptions, VelocityField,
};
use crate::geometry::RoughnessProfile;
use crate::mesh::{mesh_micro, BoundaryTag, MicroMeshOptions, Spacing, TriangleMesh};

/// Panels for the vertical flux integrals along the micro side faces.
const FLUX_PANELS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MicroBcMode {
    /// Mean macro velocity on the top, periodic sides.
    PeriodicFreeStream,
    /// Quadratic velocity profiles on the top and both sides.
    QuadraticDirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroDomainSpec {
    /// Left edge `s_j`.
    pub site: f64,
    pub width: f64,
    /// Height `gamma` above the crest plane.
    pub height: f64,
    /// Cells across the width.
    pub resolution: usize,
    /// Rows between the wall and the top.
    pub rows: usize,
    /// Thickness of the top row over that of the wall row.
    pub grading: f64,
    pub bc_mode: MicroBcMode,
}

impl MicroDomainSpec {
    /// One roughness period wide and `4 epsilon` high.
    pub fn for_profile(
        profile: &RoughnessProfile,
        site: f64,
        resolution: usize,
        bc_mode: MicroBcMode,
    ) -> Self {
        MicroDomainSpec {
            site,
            width: profile.feature_period(),
            height: 4.0 * profile.epsilon,
            resolution,
            rows: resolution.div_ceil(2).max(2),
            grading: 4.0,
            bc_mode,
        }
    }

    /// Same domain with `resolution` cells across and as many rows.
    pub fn refined(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self.rows = resolution;
        self
    }

    pub fn right(&self) -> f64 {
        self.site + self.width
    }

    fn validate(&self) -> Result<()> {
        if !(self.width > 0.0) || !(self.height > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "micro domain needs positive width and height, got {} x {}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn mesh(&self, profile: &RoughnessProfile) -> Result<TriangleMesh> {
        self.validate()?;
        let periodic = self.bc_mode == MicroBcMode::PeriodicFreeStream;
        mesh_micro(
            profile,
            self.site,
            self.width,
            self.height,
            &MicroMeshOptions {
                nx: self.resolution,
                rows: Spacing::graded(self.rows, self.grading),
                periodic,
            },
        )
    }
}

/// Quadratic `c0 + c1 t + c2 t^2` in the scaled face coordinate
/// `t = (x - start) / length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceQuadratic {
    pub start: f64,
    pub length: f64,
    pub coeffs: [f64; 3],
}

impl FaceQuadratic {
    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.start) / self.length;
        self.coeffs[0] + t * (self.coeffs[1] + t * self.coeffs[2])
    }

    /// Integral over the whole face.
    pub fn integral(&self) -> f64 {
        self.length * (self.coeffs[0] + self.coeffs[1] / 2.0 + self.coeffs[2] / 3.0)
    }

    fn fit(start: f64, length: f64, rows: [[f64; 3]; 3], rhs: [f64; 3]) -> Result<Self> {
        Ok(FaceQuadratic {
            start,
            length,
            coeffs: solve3(rows, rhs)?,
        })
    }

    fn point(&self, x: f64) -> [f64; 3] {
        let t = (x - self.start) / self.length;
        [1.0, t, t * t]
    }
}

/// Constraint row for the integral over the face, in face units.
fn mean_row(length: f64) -> [f64; 3] {
    [length, length / 2.0, length / 3.0]
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Result<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    if d.abs() <= 1e-12 * scale.powi(3) {
        return Err(Error::SingularConstraintSystem);
    }
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        *xk = det(m) / d;
    }
    // One step of refinement keeps the constraint residuals at round-off.
    let mut r = b;
    for i in 0..3 {
        for j in 0..3 {
            r[i] -= a[i][j] * x[j];
        }
    }
    let mut dx = [0.0; 3];
    for (k, dk) in dx.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = r[i];
        }
        *dk = det(m) / d;
    }
    Ok([x[0] + dx[0], x[1] + dx[1], x[2] + dx[2]])
}

/// Horizontal `u` and vertical `v` profile on one face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceProfile {
    pub u: FaceQuadratic,
    pub v: FaceQuadratic,
}

/// Quadratic Dirichlet data on the left side, top and right side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticBc {
    pub left: FaceProfile,
    pub top: FaceProfile,
    pub right: FaceProfile,
    /// Macro fluxes `(left, top, right)` after the mismatch correction,
    /// each along `e1` or `e2`.
    pub fluxes: [f64; 3],
    /// Discrete divergence of the macro flow over the micro box.
    pub flux_mismatch: f64,
    pub samples: ProjectionSamples,
}

/// Macro values the quadratic profiles interpolate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSamples {
    /// Wall heights under the left and right faces.
    pub floors: [f64; 2],
    pub height: f64,
    pub top_left: [f64; 2],
    pub top_right: [f64; 2],
    /// `U2(s, gamma / 2)`
    pub mid_left: f64,
    /// `U1(s + L / 2, gamma)`
    pub mid_top: f64,
    /// `U2(s + L, gamma / 2)`
    pub mid_right: f64,
}

impl QuadraticBc {
    /// `oint u . n ds` over the Dirichlet faces (the rough wall carries
    /// no flux).
    pub fn net_flux(&self) -> f64 {
        -self.left.u.integral() + self.top.v.integral() + self.right.u.integral()
    }

    /// Residuals of the 18 defining constraints: four corner no-slip
    /// values, three face fluxes, eight upper-corner matches and three
    /// midpoint samples.
    pub fn constraint_residuals(&self) -> [f64; 18] {
        let d = &self.samples;
        let g = d.height;
        let (s, r) = (self.top.u.start, self.top.u.start + self.top.u.length);
        [
            self.left.u.eval(d.floors[0]),
            self.left.v.eval(d.floors[0]),
            self.right.u.eval(d.floors[1]),
            self.right.v.eval(d.floors[1]),
            self.left.u.integral() - self.fluxes[0],
            self.top.v.integral() - self.fluxes[1],
            self.right.u.integral() - self.fluxes[2],
            self.left.u.eval(g) - d.top_left[0],
            self.top.u.eval(s) - d.top_left[0],
            self.left.v.eval(g) - d.top_left[1],
            self.top.v.eval(s) - d.top_left[1],
            self.top.u.eval(r) - d.top_right[0],
            self.right.u.eval(g) - d.top_right[0],
            self.top.v.eval(r) - d.top_right[1],
            self.right.v.eval(g) - d.top_right[1],
            self.left.v.eval(g / 2.0) - d.mid_left,
            self.top.u.eval(0.5 * (s + r)) - d.mid_top,
            self.right.v.eval(g / 2.0) - d.mid_right,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MicroBc {
    FreeStream { velocity: [f64; 2] },
    Quadratic(QuadraticBc),
}

impl MicroBc {
    pub fn net_flux(&self) -> f64 {
        match self {
            MicroBc::FreeStream { .. } => 0.0,
            MicroBc::Quadratic(q) => q.net_flux(),
        }
    }
}

/// Viscosity, body force and whether to keep the convection term.
#[derive(Debug, Clone)]
pub struct Fluid {
    pub viscosity: f64,
    pub forcing: Forcing,
    pub convection: bool,
}

impl Fluid {
    pub fn new(viscosity: f64, forcing: [f64; 2]) -> Self {
        Fluid {
            viscosity,
            forcing: Forcing::Constant(forcing),
            convection: true,
        }
    }
}

/// Top value `(<U1>(s, gamma), 0)`.
pub fn build_free_stream_bc<F: VelocityField + ?Sized>(
    macro_flow: &F,
    spec: &MicroDomainSpec,
) -> Result<MicroBc> {
    let mean = line_average(macro_flow, spec.site, spec.height, spec.width)?;
    Ok(MicroBc::FreeStream {
        velocity: [mean[0], 0.0],
    })
}

/// The six quadratic face profiles fixed by corner no-slip, face fluxes,
/// continuity at the upper corners and one midpoint sample per face.
///
/// Side faces run from the wall to `gamma`; their fluxes are taken from
/// the macro flow above the crest plane. The small discrete divergence
/// of the macro flow is spread over the three faces in proportion to
/// their fluxes so the data conserve mass exactly.
pub fn build_quadratic_bc<F: VelocityField + ?Sized>(
    macro_flow: &F,
    profile: &RoughnessProfile,
    spec: &MicroDomainSpec,
) -> Result<MicroBc> {
    spec.validate()?;
    let (s, r, g) = (spec.site, spec.right(), spec.height);
    let floor = [profile.wall(s), profile.wall(r)];
    let top_left = macro_flow.velocity([s, g])?;
    let top_right = macro_flow.velocity([r, g])?;
    let mid_left = macro_flow.velocity([s, g / 2.0])?;
    let mid_top = macro_flow.velocity([s + spec.width / 2.0, g])?;
    let mid_right = macro_flow.velocity([r, g / 2.0])?;

    let lower = 0.0f64.max(floor[0]).min(g);
    let flux_left = vertical_integral(macro_flow, s, lower, g, 0)?;
    let lower = 0.0f64.max(floor[1]).min(g);
    let flux_right = vertical_integral(macro_flow, r, lower, g, 0)?;
    let flux_top = line_average(macro_flow, s, g, spec.width)?[1] * spec.width;

    let mismatch = flux_left - flux_top - flux_right;
    let total = flux_left.abs() + flux_top.abs() + flux_right.abs();
    let fluxes = if total > 0.0 {
        [
            flux_left - mismatch * flux_left.abs() / total,
            flux_top + mismatch * flux_top.abs() / total,
            flux_right + mismatch * flux_right.abs() / total,
        ]
    } else {
        [0.0; 3]
    };

    let side =
        |x: f64, base: f64, corner: [f64; 2], mid: [f64; 2], flux: f64| -> Result<FaceProfile> {
            let len = g - base;
            if !(len > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "micro height {g} does not clear the wall {base} at x1 = {x}"
                )));
            }
            let probe = FaceQuadratic {
                start: base,
                length: len,
                coeffs: [0.0; 3],
            };
            let u = FaceQuadratic::fit(
                base,
                len,
                [probe.point(base), probe.point(g), mean_row(len)],
                [0.0, corner[0], flux],
            )?;
            let v = FaceQuadratic::fit(
                base,
                len,
                [probe.point(base), probe.point(g), probe.point(g / 2.0)],
                [0.0, corner[1], mid[1]],
            )?;
            Ok(FaceProfile { u, v })
        };
    let left = side(s, floor[0], top_left, mid_left, fluxes[0])?;
    let right = side(r, floor[1], top_right, mid_right, fluxes[2])?;

    let probe = FaceQuadratic {
        start: s,
        length: spec.width,
        coeffs: [0.0; 3],
    };
    let ends = [probe.point(s), probe.point(r)];
    let top = FaceProfile {
        u: FaceQuadratic::fit(
            s,
            spec.width,
            [ends[0], ends[1], probe.point(s + spec.width / 2.0)],
            [top_left[0], top_right[0], mid_top[0]],
        )?,
        v: FaceQuadratic::fit(
            s,
            spec.width,
            [ends[0], ends[1], mean_row(spec.width)],
            [top_left[1], top_right[1], fluxes[1]],
        )?,
    };
    Ok(MicroBc::Quadratic(QuadraticBc {
        left,
        top,
        right,
        fluxes,
        flux_mismatch: mismatch,
        samples: ProjectionSamples {
            floors: floor,
            height: g,
            top_left,
            top_right,
            mid_left: mid_left[1],
            mid_top: mid_top[0],
            mid_right: mid_right[1],
        },
    }))
}

/// `int_{y0}^{y1} U_c(x, y) dy` by composite Gauss quadrature.
fn vertical_integral<F: VelocityField + ?Sized>(
    field: &F,
    x: f64,
    y0: f64,
    y1: f64,
    c: usize,
) -> Result<f64> {
    let h = (y1 - y0) / FLUX_PANELS as f64;
    let mut sum = 0.0;
    for k in 0..FLUX_PANELS {
        for &(t, w) in gauss_legendre(5) {
            sum += w * h * field.velocity([x, panel_point(y0, h, k, t)])?[c];
        }
    }
    Ok(sum)
}

fn panel_point(y0: f64, h: f64, k: usize, t: f64) -> f64 {
    y0 + h * (k as f64 + t)
}

/// Fine solve in the micro domain: no-slip on the rough wall, the
/// projected data on the rest of the boundary.
pub fn solve_micro(
    spec: &MicroDomainSpec,
    bc: &MicroBc,
    profile: &RoughnessProfile,
    fluid: &Fluid,
) -> Result<FlowSolution> {
    let mesh = Arc::new(spec.mesh(profile)?);
    let mut bcs = vec![BoundaryCondition::no_slip(BoundaryTag::NoSlipWall)];
    match *bc {
        MicroBc::FreeStream { velocity } => {
            if spec.bc_mode != MicroBcMode::PeriodicFreeStream {
                return Err(Error::BoundaryConditions(
                    "free-stream data need a periodic micro domain".into(),
                ));
            }
            bcs.push(BoundaryCondition::Periodic {
                left: BoundaryTag::MicroLeft,
                right: BoundaryTag::MicroRight,
            });
            bcs.push(BoundaryCondition::dirichlet(
                BoundaryTag::FreeStreamTop,
                move |_| velocity,
            ));
        }
        MicroBc::Quadratic(q) => {
            if spec.bc_mode != MicroBcMode::QuadraticDirichlet {
                return Err(Error::BoundaryConditions(
                    "quadratic data need a non-periodic micro domain".into(),
                ));
            }
            bcs.push(BoundaryCondition::dirichlet(
                BoundaryTag::FreeStreamTop,
                move |x| [q.top.u.eval(x[0]), q.top.v.eval(x[0])],
            ));
            bcs.push(BoundaryCondition::dirichlet(
                BoundaryTag::MicroLeft,
                move |x| [q.left.u.eval(x[1]), q.left.v.eval(x[1])],
            ));
            bcs.push(BoundaryCondition::dirichlet(
                BoundaryTag::MicroRight,
                move |x| [q.right.u.eval(x[1]), q.right.v.eval(x[1])],
            ));
        }
    }
    let mut problem = FlowProblem::new(mesh, fluid.viscosity, fluid.forcing.clone(), bcs);
    problem.convection = fluid.convection;
    crate::fem::solve_stationary(&problem, &SolverOptions::default())
}

/// `alpha_j = <u1>(s, 0) / <du1/dx2>(s, 0)` on the crest plane.
pub fn extract_slip<F: VelocityField + ?Sized>(micro: &F, spec: &MicroDomainSpec) -> Result<f64> {
    let u = line_average(micro, spec.site, 0.0, spec.width)?[0];
    let shear = line_average_gradient(micro, spec.site, 0.0, spec.width)?[0][1];
    let scale = line_average(micro, spec.site, spec.height, spec.width)?[0].abs() / spec.height;
    if !(shear.abs() > 1e-12 * scale) || shear == 0.0 {
        return Err(Error::DegenerateShear(shear));
    }
    Ok(u / shear)
}

/// Outcome of one micro problem.
#[derive(Debug, Clone)]
pub struct MicroResult {
    pub spec: MicroDomainSpec,
    pub bc: MicroBc,
    pub slip: f64,
    pub cells: usize,
    pub solution: FlowSolution,
}

/// Projection, fine solve and slip extraction at one site.
pub fn run_micro<F: VelocityField + ?Sized>(
    macro_flow: &F,
    spec: &MicroDomainSpec,
    profile: &RoughnessProfile,
    fluid: &Fluid,
) -> Result<MicroResult> {
    let bc = match spec.bc_mode {
        MicroBcMode::PeriodicFreeStream => build_free_stream_bc(macro_flow, spec)?,
        MicroBcMode::QuadraticDirichlet => build_quadratic_bc(macro_flow, profile, spec)?,
    };
    let solution = solve_micro(spec, &bc, profile, fluid)?;
    let slip = extract_slip(&solution, spec)?;
    Ok(MicroResult {
        spec: *spec,
        bc,
        slip,
        cells: solution.cell_count(),
        solution,
    })
}

/// Runs every site in parallel; results come back in site order.
pub fn run_micro_sites<F: VelocityField + Sync + ?Sized>(
    macro_flow: &F,
    specs: &[MicroDomainSpec],
    profile: &RoughnessProfile,
    fluid: &Fluid,
) -> Result<Vec<MicroResult>> {
    specs
        .par_iter()
        .enumerate()
        .map(|(j, spec)| {
            run_micro(macro_flow, spec, profile, fluid).map_err(|e| Error::MicroSite {
                site: j,
                position: spec.site,
                source: Box::new(e),
            })
        })
        .collect()
}
