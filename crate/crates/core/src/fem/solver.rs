//! Assembly and Newton iteration.

use std::collections::HashMap;
use std::sync::Arc;

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::Mat;

use super::dofs::DofMap;
use super::element::{p2_edge_values, Affine};
use super::quadrature::{gauss_legendre, triangle_rule};
use super::{BoundaryCondition, FlowProblem, FlowSolution, PressureGauge, ScalarFn, SolverOptions};
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

/// Compressed-column pattern with sorted row indices.
struct Pattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl Pattern {
    fn build(mesh: &TriangleMesh, dofs: &DofMap) -> Pattern {
        let n = dofs.n_dofs();
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for t in 0..mesh.cell_count() {
            let local = local_dofs(mesh, dofs, t);
            for &c in &local {
                cols[c].extend_from_slice(&local);
            }
        }
        if let Some(g) = dofs.gauge_dof() {
            let start = 2 * dofs.n_velocity_nodes;
            for p in start..start + dofs.n_pressure {
                cols[g].push(p);
            }
            cols[start].push(g);
        }
        for (i, c) in cols.iter_mut().enumerate() {
            c.push(i);
            c.sort_unstable();
            c.dedup();
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        for c in cols {
            row_idx.extend_from_slice(&c);
            col_ptr.push(row_idx.len());
        }
        Pattern {
            n,
            col_ptr,
            row_idx,
        }
    }

    fn slot(&self, row: usize, col: usize) -> usize {
        let (a, b) = (self.col_ptr[col], self.col_ptr[col + 1]);
        a + self.row_idx[a..b]
            .binary_search(&row)
            .expect("entry outside sparsity pattern")
    }
}

/// Local numbering: `u1` at the six nodes, `u2` at the six nodes, then
/// the three vertex pressures.
fn local_dofs(mesh: &TriangleMesh, dofs: &DofMap, t: usize) -> [usize; 15] {
    let nodes = dofs.element_nodes(mesh, t);
    let verts = mesh.triangles[t];
    let mut out = [0; 15];
    for a in 0..6 {
        out[a] = dofs.u(0, nodes[a]);
        out[6 + a] = dofs.u(1, nodes[a]);
    }
    for k in 0..3 {
        out[12 + k] = dofs.p(verts[k]);
    }
    out
}

struct SlipEdge {
    a: [f64; 2],
    b: [f64; 2],
    /// Global `u1` dofs of start, end, midpoint.
    dofs: [usize; 3],
    slip: ScalarFn,
}

/// Which linearization of the convection term the matrix carries.
#[derive(Clone, Copy, PartialEq)]
enum Matrix {
    None,
    /// Oseen operator `(u . grad) du` only.
    Picard,
    Newton,
}

struct System<'a> {
    problem: &'a FlowProblem,
    dofs: &'a DofMap,
    pattern: Pattern,
    /// Strongly imposed values.
    constraints: Vec<(usize, f64)>,
    constrained: Vec<bool>,
    slip_edges: Vec<SlipEdge>,
}

impl<'a> System<'a> {
    fn new(problem: &'a FlowProblem, dofs: &'a DofMap) -> Result<Self> {
        let mesh = &*problem.mesh;
        let n = dofs.n_dofs();
        let mut values: HashMap<usize, f64> = HashMap::new();
        let mut order: Vec<usize> = Vec::new();
        let mut slip_edges = Vec::new();
        let mut set = |dof: usize, v: f64, values: &mut HashMap<usize, f64>| {
            if !values.contains_key(&dof) {
                values.insert(dof, v);
                order.push(dof);
            }
        };
        for bc in &problem.bcs {
            if let BoundaryCondition::Dirichlet { tag, velocity } = bc {
                for e in mesh.edges_with_tag(*tag) {
                    let [a, b] = e.vertices;
                    let m = dofs
                        .edge_node(mesh, a, b)
                        .ok_or_else(|| Error::Mesh("boundary edge missing".into()))?;
                    for node in [a, b, m] {
                        let g = velocity(dofs.node_coords(mesh, node));
                        if !(g[0].is_finite() && g[1].is_finite()) {
                            return Err(Error::BoundaryConditions(format!(
                                "non-finite Dirichlet data on {tag:?}"
                            )));
                        }
                        set(dofs.u(0, node), g[0], &mut values);
                        set(dofs.u(1, node), g[1], &mut values);
                    }
                }
            }
        }
        for bc in &problem.bcs {
            if let BoundaryCondition::SlipRobin { tag, slip } = bc {
                for e in mesh.edges_with_tag(*tag) {
                    let [a, b] = e.vertices;
                    let m = dofs
                        .edge_node(mesh, a, b)
                        .ok_or_else(|| Error::Mesh("boundary edge missing".into()))?;
                    for node in [a, b, m] {
                        set(dofs.u(1, node), 0.0, &mut values);
                    }
                    slip_edges.push(SlipEdge {
                        a: mesh.vertices[a],
                        b: mesh.vertices[b],
                        dofs: [dofs.u(0, a), dofs.u(0, b), dofs.u(0, m)],
                        slip: slip.clone(),
                    });
                }
            }
        }
        let mut constrained = vec![false; n];
        let constraints: Vec<(usize, f64)> = order
            .into_iter()
            .map(|d| {
                constrained[d] = true;
                (d, values[&d])
            })
            .collect();
        Ok(System {
            problem,
            dofs,
            pattern: Pattern::build(mesh, dofs),
            constraints,
            constrained,
            slip_edges,
        })
    }

    /// Residual and, if requested, Jacobian values at state `x`.
    fn assemble(&self, x: &[f64], convection: bool, matrix: Matrix) -> (Vec<f64>, Vec<f64>) {
        let jacobian = matrix != Matrix::None;
        let reaction = if matrix == Matrix::Newton { 1.0 } else { 0.0 };
        let mesh = &*self.problem.mesh;
        let dofs = self.dofs;
        let nu = self.problem.viscosity;
        let n = self.pattern.n;
        let mut r = vec![0.0; n];
        let mut jv = if jacobian {
            vec![0.0; self.pattern.row_idx.len()]
        } else {
            Vec::new()
        };
        let gauge = dofs.gauge_dof();
        let conv = if convection { 1.0 } else { 0.0 };

        for t in 0..mesh.cell_count() {
            let el = Affine::new(mesh.triangles[t].map(|v| mesh.vertices[v]));
            let ld = local_dofs(mesh, dofs, t);
            let xl: [f64; 15] = std::array::from_fn(|k| x[ld[k]]);
            let lambda = gauge.map_or(0.0, |g| x[g]);
            let mut rl = [0.0; 15];
            let mut jl = [[0.0; 15]; 15];
            let mut gl = [0.0; 3];
            for qp in triangle_rule() {
                let w = qp.weight * el.area;
                let l = qp.bary;
                let phi = el.p2_values(l);
                let dphi = el.p2_gradients(l);
                let f = self.problem.forcing.eval(el.point(l));
                let mut u = [0.0; 2];
                let mut g = [[0.0; 2]; 2];
                for a in 0..6 {
                    for i in 0..2 {
                        let c = xl[6 * i + a];
                        u[i] += c * phi[a];
                        g[i][0] += c * dphi[a][0];
                        g[i][1] += c * dphi[a][1];
                    }
                }
                let p: f64 = (0..3).map(|k| l[k] * xl[12 + k]).sum();
                let div = g[0][0] + g[1][1];
                for i in 0..2 {
                    let adv = u[0] * g[i][0] + u[1] * g[i][1];
                    for a in 0..6 {
                        rl[6 * i + a] += w
                            * (nu * (g[i][0] * dphi[a][0] + g[i][1] * dphi[a][1])
                                + conv * adv * phi[a]
                                - p * dphi[a][i]
                                - f[i] * phi[a]);
                    }
                }
                for k in 0..3 {
                    rl[12 + k] += w * (-l[k] * div + l[k] * lambda);
                    gl[k] += w * l[k];
                }
                if !jacobian {
                    continue;
                }
                for a in 0..6 {
                    for b in 0..6 {
                        let lap = nu * (dphi[a][0] * dphi[b][0] + dphi[a][1] * dphi[b][1]);
                        let adv_b = conv * (u[0] * dphi[b][0] + u[1] * dphi[b][1]) * phi[a];
                        for i in 0..2 {
                            jl[6 * i + a][6 * i + b] += w * (lap + adv_b);
                            for j in 0..2 {
                                jl[6 * i + a][6 * j + b] +=
                                    w * conv * reaction * phi[b] * g[i][j] * phi[a];
                            }
                        }
                    }
                    for k in 0..3 {
                        for i in 0..2 {
                            let v = -w * l[k] * dphi[a][i];
                            jl[6 * i + a][12 + k] += v;
                            jl[12 + k][6 * i + a] += v;
                        }
                    }
                }
            }
            for a in 0..15 {
                r[ld[a]] += rl[a];
            }
            if jacobian {
                for b in 0..15 {
                    for a in 0..15 {
                        if jl[a][b] != 0.0 {
                            jv[self.pattern.slot(ld[a], ld[b])] += jl[a][b];
                        }
                    }
                }
                if let Some(gd) = gauge {
                    for k in 0..3 {
                        jv[self.pattern.slot(ld[12 + k], gd)] += gl[k];
                    }
                }
            }
        }

        for e in &self.slip_edges {
            let len = ((e.b[0] - e.a[0]).powi(2) + (e.b[1] - e.a[1]).powi(2)).sqrt();
            for &(s, ws) in gauss_legendre(5) {
                let px = e.a[0] + s * (e.b[0] - e.a[0]);
                let alpha = (e.slip)(px);
                if alpha.is_infinite() {
                    continue;
                }
                let k = nu / alpha * ws * len;
                let phi = p2_edge_values(s);
                let u1: f64 = (0..3).map(|m| phi[m] * x[e.dofs[m]]).sum();
                for m in 0..3 {
                    r[e.dofs[m]] += k * u1 * phi[m];
                    if jacobian {
                        for q in 0..3 {
                            jv[self.pattern.slot(e.dofs[m], e.dofs[q])] += k * phi[m] * phi[q];
                        }
                    }
                }
            }
        }

        if let Some(gd) = gauge {
            let pin = 2 * dofs.n_velocity_nodes;
            r[gd] = x[pin];
            if jacobian {
                jv[self.pattern.slot(gd, pin)] = 1.0;
            }
        }
        for &(d, v) in &self.constraints {
            r[d] = x[d] - v;
        }
        if jacobian {
            for c in 0..n {
                for s in self.pattern.col_ptr[c]..self.pattern.col_ptr[c + 1] {
                    let row = self.pattern.row_idx[s];
                    if self.constrained[row] {
                        jv[s] = if row == c { 1.0 } else { 0.0 };
                    }
                }
            }
        }
        (r, jv)
    }
}

/// Removes the mean of the pressure. Pressure constants are invisible to
/// the momentum equations whenever a gauge is needed.
fn shift_to_zero_mean(mesh: &TriangleMesh, dofs: &DofMap, x: &mut [f64]) {
    let (mut integral, mut area) = (0.0, 0.0);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = mesh.area(t);
        integral += a * tri.iter().map(|&v| x[dofs.p(v)]).sum::<f64>() / 3.0;
        area += a;
    }
    let mean = integral / area;
    let start = 2 * dofs.n_velocity_nodes;
    x[start..start + dofs.n_pressure]
        .iter_mut()
        .for_each(|p| *p -= mean);
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

struct LinearSolver {
    structure: SymbolicSparseColMat<usize>,
    symbolic: SymbolicLu<usize>,
}

impl LinearSolver {
    fn new(p: &Pattern) -> Result<Self> {
        let structure =
            SymbolicSparseColMat::new_checked(p.n, p.n, p.col_ptr.clone(), None, p.row_idx.clone());
        let symbolic = SymbolicLu::try_new(structure.as_ref())
            .map_err(|e| Error::SingularSystem(format!("symbolic factorization failed: {e:?}")))?;
        Ok(LinearSolver {
            structure,
            symbolic,
        })
    }

    /// Solves `J d = -r`.
    fn solve(&self, values: &[f64], r: &[f64]) -> Result<Vec<f64>> {
        let mat = SparseColMatRef::new(self.structure.as_ref(), values);
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), mat)
            .map_err(|e| Error::SingularSystem(format!("numeric factorization failed: {e:?}")))?;
        let rhs = Mat::from_fn(r.len(), 1, |i, _| -r[i]);
        let sol = lu.solve(&rhs);
        let d: Vec<f64> = (0..r.len()).map(|i| sol[(i, 0)]).collect();
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem(
                "linear solve produced non-finite values".into(),
            ));
        }
        Ok(d)
    }
}

/// Solves the stationary problem: a Stokes solve followed, if the problem
/// is convective, by Newton iterations from the Stokes state.
pub fn solve_stationary(problem: &FlowProblem, options: &SolverOptions) -> Result<FlowSolution> {
    problem.validate()?;
    let periodic = problem
        .bcs
        .iter()
        .any(|b| matches!(b, BoundaryCondition::Periodic { .. }));
    let dofs = Arc::new(DofMap::new(
        &problem.mesh,
        periodic,
        problem.gauge == PressureGauge::ZeroMean,
    )?);
    let system = System::new(problem, &dofs)?;
    let linear = LinearSolver::new(&system.pattern)?;
    let n = dofs.n_dofs();

    let mut x = vec![0.0; n];
    for &(d, v) in &system.constraints {
        x[d] = v;
    }
    let (r0, _) = system.assemble(&x, problem.convection, Matrix::None);
    let scale = norm(&r0);
    let finish = |mut x: Vec<f64>, iterations: usize, rel: f64| {
        if dofs.gauge {
            shift_to_zero_mean(&problem.mesh, &dofs, &mut x);
        }
        FlowSolution::new(
            problem.mesh.clone(),
            dofs.clone(),
            x,
            problem.viscosity,
            iterations,
            rel,
        )
    };
    if scale == 0.0 {
        return Ok(finish(x, 0, 0.0));
    }

    // Stokes step; exact for the linear problem.
    let (r, j) = system.assemble(&x, false, Matrix::Newton);
    let d = linear.solve(&j, &r)?;
    x.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
    let (mut r, _) = system.assemble(&x, problem.convection, Matrix::None);
    let mut res = norm(&r) / scale;
    if !problem.convection {
        return Ok(finish(x, 0, res));
    }

    let tol = options.newton_tol;
    for it in 1..=options.newton_max_iter {
        if res < tol {
            return Ok(finish(x, it - 1, res));
        }
        let trial = |d: &[f64], step: f64| -> (Vec<f64>, Vec<f64>, f64) {
            let xn: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + step * b).collect();
            let (rn, _) = system.assemble(&xn, true, Matrix::None);
            let rel = norm(&rn) / scale;
            (xn, rn, rel)
        };
        let (_, j) = system.assemble(&x, true, Matrix::Newton);
        let d = linear.solve(&j, &r)?;
        // Backtracking on the Newton direction; far from the solution an
        // Oseen step takes over.
        let mut accepted = None;
        let mut step = 1.0;
        while step >= 1.0 / 64.0 {
            let t = trial(&d, step);
            if t.2 < res * (1.0 - 1e-4 * step) {
                accepted = Some((t, step));
                break;
            }
            step *= 0.5;
        }
        let ((xn, rn, rel), dmax) = match accepted {
            Some((t, step)) => (t, step * d.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
            None => {
                let (_, jp) = system.assemble(&x, true, Matrix::Picard);
                let dp = linear.solve(&jp, &r)?;
                let t = trial(&dp, 1.0);
                if !t.2.is_finite() || t.2 > 1e3 * res.max(1.0) {
                    // Newton is stuck at round-off level when even the
                    // unit step does not move the state.
                    let size = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    let dn = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    if dn <= 1e-14 * size {
                        return Ok(finish(x, it, res));
                    }
                    return Err(Error::NewtonDivergence {
                        iterations: it,
                        residual: t.2,
                    });
                }
                (t, dp.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            }
        };
        let size = xn.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x = xn;
        r = rn;
        res = rel;
        // Residual at round-off level: the update no longer moves the state.
        if res >= tol && dmax <= 1e-14 * size {
            return Ok(finish(x, it, res));
        }
    }
    if res < tol {
        return Ok(finish(x, options.newton_max_iter, res));
    }
    Err(Error::NewtonDivergence {
        iterations: options.newton_max_iter,
        residual: res,
    })
}
