//! Taylor-Hood finite elements for 2D stationary incompressible
//! Navier-Stokes.
//!
//! Boundary conditions are attached to mesh tags. Dirichlet data is
//! imposed strongly; the Navier-slip condition `u1 = alpha du1/dx2`,
//! `u2 = 0` on a horizontal wall contributes the boundary term
//! `(nu / alpha) * int u1 v1 ds` and a strong no-penetration constraint.
//! Zero-stress boundaries are the natural condition of the Laplacian
//! form, `nu du/dn - p n = 0`.

mod dofs;
mod element;
mod eval;
mod quadrature;
mod solver;

pub use dofs::DofMap;
pub use element::Affine;
pub use eval::{
    kernel_average, line_average, line_average_gradient, AnalyticField, Kernel, PointLocator,
    VelocityField,
};
pub use quadrature::gauss_legendre;
pub use solver::solve_stationary;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, TriangleMesh};

pub type VectorFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Body force, including any imposed constant pressure gradient.
#[derive(Clone)]
pub enum Forcing {
    Constant([f64; 2]),
    Field(VectorFn),
}

impl Forcing {
    pub fn zero() -> Self {
        Forcing::Constant([0.0, 0.0])
    }

    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            Forcing::Constant(f) => *f,
            Forcing::Field(f) => f(x),
        }
    }

    pub fn scaled(&self, c: f64) -> Forcing {
        match self {
            Forcing::Constant(f) => Forcing::Constant([c * f[0], c * f[1]]),
            Forcing::Field(f) => {
                let f = f.clone();
                Forcing::Field(Arc::new(move |x| {
                    let v = f(x);
                    [c * v[0], c * v[1]]
                }))
            }
        }
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Constant(v) => write!(f, "Constant({v:?})"),
            Forcing::Field(_) => write!(f, "Field(..)"),
        }
    }
}

#[derive(Clone)]
pub enum BoundaryCondition {
    Dirichlet {
        tag: BoundaryTag,
        velocity: VectorFn,
    },
    Periodic {
        left: BoundaryTag,
        right: BoundaryTag,
    },
    /// Navier slip with slip length `alpha(x1)` on a horizontal wall.
    /// An infinite slip length gives a shear-free wall.
    SlipRobin {
        tag: BoundaryTag,
        slip: ScalarFn,
    },
    ZeroStress {
        tag: BoundaryTag,
    },
}

impl BoundaryCondition {
    pub fn no_slip(tag: BoundaryTag) -> Self {
        BoundaryCondition::Dirichlet {
            tag,
            velocity: Arc::new(|_| [0.0, 0.0]),
        }
    }

    pub fn dirichlet(
        tag: BoundaryTag,
        velocity: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        BoundaryCondition::Dirichlet {
            tag,
            velocity: Arc::new(velocity),
        }
    }

    pub fn constant_slip(tag: BoundaryTag, alpha: f64) -> Self {
        BoundaryCondition::SlipRobin {
            tag,
            slip: Arc::new(move |_| alpha),
        }
    }

    /// `u2 = 0`, `du1/dx2 = 0`.
    pub fn free_slip(tag: BoundaryTag) -> Self {
        Self::constant_slip(tag, f64::INFINITY)
    }

    pub fn periodic() -> Self {
        BoundaryCondition::Periodic {
            left: BoundaryTag::PeriodicLeft,
            right: BoundaryTag::PeriodicRight,
        }
    }

    fn tags(&self) -> Vec<BoundaryTag> {
        match self {
            BoundaryCondition::Dirichlet { tag, .. }
            | BoundaryCondition::SlipRobin { tag, .. }
            | BoundaryCondition::ZeroStress { tag } => vec![*tag],
            BoundaryCondition::Periodic { left, right } => vec![*left, *right],
        }
    }
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::Dirichlet { tag, .. } => write!(f, "Dirichlet({tag:?})"),
            BoundaryCondition::Periodic { left, right } => {
                write!(f, "Periodic({left:?}, {right:?})")
            }
            BoundaryCondition::SlipRobin { tag, .. } => write!(f, "SlipRobin({tag:?})"),
            BoundaryCondition::ZeroStress { tag } => write!(f, "ZeroStress({tag:?})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureGauge {
    ZeroMean,
    None,
}

#[derive(Clone)]
pub struct FlowProblem {
    pub mesh: Arc<TriangleMesh>,
    pub viscosity: f64,
    pub forcing: Forcing,
    pub bcs: Vec<BoundaryCondition>,
    pub gauge: PressureGauge,
    /// Include the convective term; `false` solves Stokes.
    pub convection: bool,
}

impl fmt::Debug for FlowProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowProblem")
            .field("cells", &self.mesh.cell_count())
            .field("viscosity", &self.viscosity)
            .field("forcing", &self.forcing)
            .field("bcs", &self.bcs)
            .field("gauge", &self.gauge)
            .field("convection", &self.convection)
            .finish()
    }
}

impl FlowProblem {
    /// Navier-Stokes problem; the gauge is zero-mean pressure unless a
    /// zero-stress boundary fixes the pressure level.
    pub fn new(
        mesh: Arc<TriangleMesh>,
        viscosity: f64,
        forcing: Forcing,
        bcs: Vec<BoundaryCondition>,
    ) -> Self {
        let gauge = if bcs
            .iter()
            .any(|b| matches!(b, BoundaryCondition::ZeroStress { .. }))
        {
            PressureGauge::None
        } else {
            PressureGauge::ZeroMean
        };
        FlowProblem {
            mesh,
            viscosity,
            forcing,
            bcs,
            gauge,
            convection: true,
        }
    }

    pub fn stokes(mut self) -> Self {
        self.convection = false;
        self
    }

    fn has_periodic(&self) -> bool {
        self.bcs
            .iter()
            .any(|b| matches!(b, BoundaryCondition::Periodic { .. }))
    }

    /// Checks coverage of the mesh tags and gauge legality.
    pub fn validate(&self) -> Result<()> {
        if !(self.viscosity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "viscosity must be positive, got {}",
                self.viscosity
            )));
        }
        let mesh_tags = self.mesh.tags();
        let mut covered: Vec<BoundaryTag> = Vec::new();
        for bc in &self.bcs {
            for tag in bc.tags() {
                if covered.contains(&tag) {
                    return Err(Error::BoundaryConditions(format!(
                        "tag {tag:?} has two conditions"
                    )));
                }
                covered.push(tag);
            }
        }
        for tag in &mesh_tags {
            if !covered.contains(tag) {
                return Err(Error::BoundaryConditions(format!(
                    "tag {tag:?} has no condition"
                )));
            }
        }
        if self.has_periodic() && self.mesh.periodic_pairs.is_empty() {
            return Err(Error::BoundaryConditions(
                "periodic condition on a non-periodic mesh".into(),
            ));
        }
        let zero_stress = self
            .bcs
            .iter()
            .any(|b| matches!(b, BoundaryCondition::ZeroStress { .. }));
        match (self.gauge, zero_stress) {
            (PressureGauge::None, false) => return Err(Error::GaugeError),
            (PressureGauge::ZeroMean, true) => {
                return Err(Error::BoundaryConditions(
                    "zero-mean pressure gauge conflicts with a zero-stress boundary".into(),
                ))
            }
            _ => {}
        }
        for bc in &self.bcs {
            if let BoundaryCondition::SlipRobin { tag, slip } = bc {
                for e in self.mesh.edges_with_tag(*tag) {
                    let [a, b] = e.vertices.map(|v| self.mesh.vertices[v]);
                    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                    if (b[1] - a[1]).abs() > 1e-10 * len.max(1e-300) {
                        return Err(Error::BoundaryConditions(format!(
                            "slip boundary {tag:?} must be horizontal"
                        )));
                    }
                    for x in [a[0], 0.5 * (a[0] + b[0]), b[0]] {
                        let alpha = slip(x);
                        if !(alpha > 0.0) {
                            return Err(Error::NonPositiveSlip {
                                x1: x,
                                value: alpha,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual tolerance.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            newton_tol: 1e-10,
            newton_max_iter: 25,
        }
    }
}

/// Converged velocity/pressure field.
#[derive(Clone)]
pub struct FlowSolution {
    pub mesh: Arc<TriangleMesh>,
    pub dofs: Arc<DofMap>,
    pub coefficients: Vec<f64>,
    pub viscosity: f64,
    pub newton_iterations: usize,
    /// Final residual relative to the load.
    pub relative_residual: f64,
    locator: Arc<PointLocator>,
}

impl fmt::Debug for FlowSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowSolution")
            .field("cells", &self.mesh.cell_count())
            .field("dofs", &self.coefficients.len())
            .field("newton_iterations", &self.newton_iterations)
            .field("relative_residual", &self.relative_residual)
            .finish()
    }
}

impl FlowSolution {
    pub(crate) fn new(
        mesh: Arc<TriangleMesh>,
        dofs: Arc<DofMap>,
        coefficients: Vec<f64>,
        viscosity: f64,
        newton_iterations: usize,
        relative_residual: f64,
    ) -> Self {
        let locator = Arc::new(PointLocator::new(&mesh));
        FlowSolution {
            mesh,
            dofs,
            coefficients,
            viscosity,
            newton_iterations,
            relative_residual,
            locator,
        }
    }

    /// Multiplies velocity and pressure by `c`.
    pub fn scaled(&self, c: f64) -> FlowSolution {
        let mut out = self.clone();
        out.coefficients.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn cell_count(&self) -> usize {
        self.mesh.cell_count()
    }

    /// Velocity at quadratic node `node` (global node numbering).
    pub fn nodal_velocity(&self, node: usize) -> [f64; 2] {
        [
            self.coefficients[self.dofs.u(0, node)],
            self.coefficients[self.dofs.u(1, node)],
        ]
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.vertices.len() + self.dofs.edges.len()
    }

    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        self.dofs.node_coords(&self.mesh, node)
    }

    fn locate(&self, p: [f64; 2]) -> Result<(usize, Affine, [f64; 3])> {
        let q = self.locator.wrap(p);
        let t = self
            .locator
            .locate(&self.mesh, q)
            .ok_or(Error::PointOutsideMesh(p[0], p[1]))?;
        let el = Affine::new(self.mesh.triangles[t].map(|v| self.mesh.vertices[v]));
        let l = el.bary(q);
        Ok((t, el, l))
    }

    fn element_velocity(&self, t: usize) -> [[f64; 6]; 2] {
        let nodes = self.dofs.element_nodes(&self.mesh, t);
        let mut out = [[0.0; 6]; 2];
        for (a, &n) in nodes.iter().enumerate() {
            out[0][a] = self.coefficients[self.dofs.u(0, n)];
            out[1][a] = self.coefficients[self.dofs.u(1, n)];
        }
        out
    }

    pub fn velocity(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        let (t, el, l) = self.locate(p)?;
        let phi = el.p2_values(l);
        let u = self.element_velocity(t);
        Ok([
            phi.iter().zip(&u[0]).map(|(a, b)| a * b).sum(),
            phi.iter().zip(&u[1]).map(|(a, b)| a * b).sum(),
        ])
    }

    /// `g[i][j] = du_i / dx_j`.
    pub fn velocity_gradient(&self, p: [f64; 2]) -> Result<[[f64; 2]; 2]> {
        let (t, el, l) = self.locate(p)?;
        let dphi = el.p2_gradients(l);
        let u = self.element_velocity(t);
        let mut g = [[0.0; 2]; 2];
        for i in 0..2 {
            for a in 0..6 {
                g[i][0] += u[i][a] * dphi[a][0];
                g[i][1] += u[i][a] * dphi[a][1];
            }
        }
        Ok(g)
    }

    pub fn pressure(&self, p: [f64; 2]) -> Result<f64> {
        let (t, _, l) = self.locate(p)?;
        let v = self.mesh.triangles[t];
        Ok((0..3)
            .map(|k| l[k] * self.coefficients[self.dofs.p(v[k])])
            .sum())
    }

    /// Largest `|int q div u|` over the pressure basis functions.
    pub fn divergence_residual(&self) -> f64 {
        let mut r = vec![0.0; self.dofs.n_pressure];
        for t in 0..self.mesh.cell_count() {
            let el = Affine::new(self.mesh.triangles[t].map(|v| self.mesh.vertices[v]));
            let u = self.element_velocity(t);
            let verts = self.mesh.triangles[t];
            for qp in quadrature::triangle_rule() {
                let dphi = el.p2_gradients(qp.bary);
                let mut div = 0.0;
                for a in 0..6 {
                    div += u[0][a] * dphi[a][0] + u[1][a] * dphi[a][1];
                }
                for k in 0..3 {
                    r[self.dofs.pressure_node[verts[k]]] += qp.weight * el.area * qp.bary[k] * div;
                }
            }
        }
        r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest nodal velocity magnitude.
    pub fn velocity_scale(&self) -> f64 {
        self.coefficients[..2 * self.dofs.n_velocity_nodes]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl VelocityField for FlowSolution {
    fn velocity(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        FlowSolution::velocity(self, p)
    }

    fn velocity_gradient(&self, p: [f64; 2]) -> Result<[[f64; 2]; 2]> {
        FlowSolution::velocity_gradient(self, p)
    }

    fn breakpoints(&self, y: f64, x0: f64, x1: f64) -> Vec<f64> {
        self.locator.crossings(&self.mesh, y, x0, x1)
    }
}
