//! Degree-of-freedom numbering for the Taylor-Hood pair, including
//! periodic identification.

use std::collections::HashMap;

use super::element::EDGE_VERTICES;
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

/// Global numbering: `[u1 nodes | u2 nodes | pressure vertices | gauge?]`.
#[derive(Debug, Clone)]
pub struct DofMap {
    /// Mesh edges as sorted vertex pairs.
    pub edges: Vec<[usize; 2]>,
    pub edge_index: HashMap<(usize, usize), usize>,
    /// Edge ids of each triangle, matching the local midpoint ordering.
    pub triangle_edges: Vec<[usize; 3]>,
    /// Velocity index of every quadratic node (vertices first, then edges).
    pub velocity_node: Vec<usize>,
    /// Pressure index of every vertex.
    pub pressure_node: Vec<usize>,
    pub n_velocity_nodes: usize,
    pub n_pressure: usize,
    pub gauge: bool,
}

impl DofMap {
    pub fn new(mesh: &TriangleMesh, periodic: bool, gauge: bool) -> Result<Self> {
        let nv = mesh.vertices.len();
        let mut edges = Vec::new();
        let mut edge_index = HashMap::new();
        let mut triangle_edges = Vec::with_capacity(mesh.triangles.len());
        for t in &mesh.triangles {
            let mut ids = [0usize; 3];
            for (k, [a, b]) in EDGE_VERTICES.iter().enumerate() {
                let (va, vb) = (t[*a], t[*b]);
                let key = (va.min(vb), va.max(vb));
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
                ids[k] = id;
            }
            triangle_edges.push(ids);
        }

        let mut vertex_rep: Vec<usize> = (0..nv).collect();
        if periodic {
            if mesh.periodic_pairs.is_empty() {
                return Err(Error::BoundaryConditions(
                    "periodic condition requested on a mesh without periodic pairs".into(),
                ));
            }
            for &(l, r) in &mesh.periodic_pairs {
                vertex_rep[r] = l;
            }
        }
        let n_nodes = nv + edges.len();
        let mut node_rep: Vec<usize> = (0..n_nodes).collect();
        node_rep[..nv].copy_from_slice(&vertex_rep);
        if periodic {
            for (e, &[a, b]) in edges.iter().enumerate() {
                let (ra, rb) = (vertex_rep[a], vertex_rep[b]);
                if (ra, rb) != (a, b) && ra != a && rb != b {
                    let key = (ra.min(rb), ra.max(rb));
                    if let Some(&m) = edge_index.get(&key) {
                        node_rep[nv + e] = nv + m;
                    }
                }
            }
        }
        let mut velocity_node = vec![usize::MAX; n_nodes];
        let mut next = 0;
        for n in 0..n_nodes {
            if node_rep[n] == n {
                velocity_node[n] = next;
                next += 1;
            }
        }
        for n in 0..n_nodes {
            velocity_node[n] = velocity_node[node_rep[n]];
        }
        let mut pressure_node = vec![usize::MAX; nv];
        let mut np = 0;
        for v in 0..nv {
            if vertex_rep[v] == v {
                pressure_node[v] = np;
                np += 1;
            }
        }
        for v in 0..nv {
            pressure_node[v] = pressure_node[vertex_rep[v]];
        }
        Ok(DofMap {
            edges,
            edge_index,
            triangle_edges,
            velocity_node,
            pressure_node,
            n_velocity_nodes: next,
            n_pressure: np,
            gauge,
        })
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.n_velocity_nodes + self.n_pressure + usize::from(self.gauge)
    }

    pub fn u(&self, component: usize, node: usize) -> usize {
        component * self.n_velocity_nodes + self.velocity_node[node]
    }

    pub fn p(&self, vertex: usize) -> usize {
        2 * self.n_velocity_nodes + self.pressure_node[vertex]
    }

    pub fn gauge_dof(&self) -> Option<usize> {
        self.gauge
            .then(|| 2 * self.n_velocity_nodes + self.n_pressure)
    }

    /// Quadratic node ids (global node numbering) of a triangle.
    pub fn element_nodes(&self, mesh: &TriangleMesh, t: usize) -> [usize; 6] {
        let nv = mesh.vertices.len();
        let v = mesh.triangles[t];
        let e = self.triangle_edges[t];
        [v[0], v[1], v[2], nv + e[0], nv + e[1], nv + e[2]]
    }

    /// Node id of the midpoint of edge `(a, b)`.
    pub fn edge_node(&self, mesh: &TriangleMesh, a: usize, b: usize) -> Option<usize> {
        self.edge_index
            .get(&(a.min(b), a.max(b)))
            .map(|&e| mesh.vertices.len() + e)
    }

    /// Coordinates of a quadratic node.
    pub fn node_coords(&self, mesh: &TriangleMesh, node: usize) -> [f64; 2] {
        let nv = mesh.vertices.len();
        if node < nv {
            mesh.vertices[node]
        } else {
            let [a, b] = self.edges[node - nv];
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
        }
    }
}
