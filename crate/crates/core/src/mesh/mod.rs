//! Conforming triangulations with tagged boundaries.

mod domains;
mod structured;

pub use domains::{
    mesh_cell_domain, mesh_macro, mesh_micro, mesh_rough_dns, BfsGeometry, CellMeshOptions,
    MacroDomain, MacroResolution, MicroMeshOptions, TopShape,
};
pub use structured::{
    graded_nodes, join_nodes, uniform_nodes, MeshBuilder, RowLayout, Spacing, StructuredBlock,
};

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    NoSlipWall,
    SlipWall,
    Top,
    Inflow,
    Outflow,
    PeriodicLeft,
    PeriodicRight,
    FreeStreamTop,
    MicroLeft,
    MicroRight,
}

impl BoundaryTag {
    /// Left or right side of a periodic strip or micro domain.
    pub fn is_side(self) -> bool {
        matches!(
            self,
            BoundaryTag::PeriodicLeft
                | BoundaryTag::PeriodicRight
                | BoundaryTag::MicroLeft
                | BoundaryTag::MicroRight
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    #[serde(rename = "edge")]
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEdge>,
    /// `(left, right)` vertex pairs identified by periodicity.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub periodic_pairs: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

const PAIR_TOL: f64 = 1e-12;

impl TriangleMesh {
    pub fn cell_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v[0]), hi.max(v[0]))
            })
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn tags(&self) -> Vec<BoundaryTag> {
        let mut tags: Vec<BoundaryTag> = self.boundary.iter().map(|e| e.tag).collect();
        tags.sort();
        tags.dedup();
        tags
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary.iter().filter(move |e| e.tag == tag)
    }

    /// Left edge of the periodic strip and its period.
    pub fn periodic_strip(&self) -> Option<(f64, f64)> {
        let period = self.period?;
        let (x0, _) = self.x_range();
        Some((x0, period))
    }

    /// Pairs the vertices of the left and right side edges by height.
    /// Wall edges lying on the side lines (cliffs) are not paired.
    pub fn pair_periodic_sides(&mut self) -> Result<()> {
        let (x0, x1) = self.x_range();
        let scale = (x1 - x0).abs().max(1.0);
        let side = |x: f64| -> Vec<usize> {
            let mut v: Vec<usize> = self
                .boundary
                .iter()
                .filter(|e| e.tag.is_side())
                .flat_map(|e| e.vertices)
                .filter(|&i| (self.vertices[i][0] - x).abs() <= PAIR_TOL * scale)
                .collect();
            v.sort_unstable();
            v.dedup();
            v.sort_by(|&a, &b| self.vertices[a][1].total_cmp(&self.vertices[b][1]));
            v
        };
        let left = side(x0);
        let right = side(x1);
        if left.len() != right.len() {
            return Err(Error::Mesh(format!(
                "periodic sides have {} and {} vertices",
                left.len(),
                right.len()
            )));
        }
        let mut pairs = Vec::with_capacity(left.len());
        for (&l, &r) in left.iter().zip(&right) {
            let dy = (self.vertices[l][1] - self.vertices[r][1]).abs();
            if dy > PAIR_TOL {
                return Err(Error::Mesh(format!(
                    "periodic vertices at heights {} and {} do not match",
                    self.vertices[l][1], self.vertices[r][1]
                )));
            }
            pairs.push((l, r));
        }
        self.periodic_pairs = pairs;
        self.period = Some(x1 - x0);
        Ok(())
    }

    /// Checks every structural invariant, returning a description of the
    /// first violation.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let nv = self.vertices.len();
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(format!("triangle {i} references a missing vertex"));
            }
            if !(self.area(i) > 0.0) {
                return Err(format!(
                    "triangle {i} has non-positive signed area {}",
                    self.area(i)
                ));
            }
        }
        let mut uses: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *uses.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        if let Some((e, n)) = uses.iter().find(|(_, &n)| n > 2) {
            return Err(format!("edge {e:?} shared by {n} triangles"));
        }
        let mut tagged: HashMap<(usize, usize), usize> = HashMap::new();
        for be in &self.boundary {
            let [a, b] = be.vertices;
            let k = (a.min(b), a.max(b));
            match uses.get(&k) {
                Some(1) => {}
                Some(n) => return Err(format!("tagged edge {k:?} is shared by {n} triangles")),
                None => return Err(format!("tagged edge {k:?} is not a mesh edge")),
            }
            *tagged.entry(k).or_default() += 1;
        }
        if let Some((k, _)) = tagged.iter().find(|(_, &n)| n > 1) {
            return Err(format!("boundary edge {k:?} carries more than one tag"));
        }
        if let Some((k, _)) = uses
            .iter()
            .find(|(k, &n)| n == 1 && !tagged.contains_key(k))
        {
            return Err(format!("boundary edge {k:?} is untagged"));
        }
        if let Some(period) = self.period {
            let mut seen_left = vec![false; nv];
            let mut seen_right = vec![false; nv];
            for &(l, r) in &self.periodic_pairs {
                let (pl, pr) = (self.vertices[l], self.vertices[r]);
                if (pl[1] - pr[1]).abs() > PAIR_TOL {
                    return Err(format!("periodic pair ({l}, {r}) heights differ"));
                }
                if ((pr[0] - pl[0]) - period).abs() > PAIR_TOL * period.max(1.0) {
                    return Err(format!("periodic pair ({l}, {r}) is not one period apart"));
                }
                if l == r || seen_left[l] || seen_right[r] {
                    return Err(format!("periodic pairing is not a bijection at ({l}, {r})"));
                }
                seen_left[l] = true;
                seen_right[r] = true;
            }
        } else if !self.periodic_pairs.is_empty() {
            return Err("periodic pairs without a period".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mesh serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("mesh file: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
