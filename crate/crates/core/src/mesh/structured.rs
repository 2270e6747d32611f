//! Mapped structured blocks and the builder that glues them into one
//! conforming triangulation.

use std::collections::HashMap;

use super::{BoundaryEdge, BoundaryTag, TriangleMesh};
use crate::error::{Error, Result};

/// `n` cells between `a` and `b` whose widths grow geometrically so that
/// the last cell is `ratio` times the first. Endpoints are exact.
pub fn graded_nodes(a: f64, b: f64, n: usize, ratio: f64) -> Vec<f64> {
    assert!(n >= 1);
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(a);
    if n == 1 || (ratio - 1.0).abs() < 1e-14 {
        for i in 1..n {
            nodes.push(a + (b - a) * i as f64 / n as f64);
        }
    } else {
        let q = ratio.powf(1.0 / (n - 1) as f64);
        let total: f64 = (0..n).map(|j| q.powi(j as i32)).sum();
        let mut acc = 0.0;
        for j in 0..n - 1 {
            acc += q.powi(j as i32);
            nodes.push(a + (b - a) * acc / total);
        }
    }
    nodes.push(b);
    nodes
}

pub fn uniform_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    graded_nodes(a, b, n, 1.0)
}

/// Concatenates node lists that share their joint coordinates.
pub fn join_nodes(parts: &[Vec<f64>]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for part in parts {
        let skip = usize::from(!out.is_empty());
        out.extend(part.iter().skip(skip));
    }
    out
}

/// Geometric row spacing: `rows` layers, last/first thickness `ratio`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spacing {
    pub rows: usize,
    pub ratio: f64,
}

impl Spacing {
    pub fn uniform(rows: usize) -> Self {
        Spacing { rows, ratio: 1.0 }
    }

    pub fn graded(rows: usize, ratio: f64) -> Self {
        Spacing { rows, ratio }
    }
}

/// Vertical distribution of rows in one column, optionally split at an
/// absolute height into two independently graded zones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowLayout {
    pub split: Option<f64>,
    pub lower: Spacing,
    pub upper: Spacing,
}

impl RowLayout {
    pub fn single(spacing: Spacing) -> Self {
        RowLayout {
            split: None,
            lower: spacing,
            upper: Spacing::uniform(0),
        }
    }

    pub fn split(at: f64, lower: Spacing, upper: Spacing) -> Self {
        RowLayout {
            split: Some(at),
            lower,
            upper,
        }
    }

    pub fn rows(&self) -> usize {
        match self.split {
            Some(_) => self.lower.rows + self.upper.rows,
            None => self.lower.rows,
        }
    }

    /// Node heights of a column spanning `[bottom, top]`.
    pub fn column(&self, bottom: f64, top: f64) -> Result<Vec<f64>> {
        if !(top > bottom) {
            return Err(Error::Mesh(format!(
                "column bottom {bottom} is not below its top {top}"
            )));
        }
        match self.split {
            None => Ok(graded_nodes(bottom, top, self.lower.rows, self.lower.ratio)),
            Some(s) => {
                if !(s > bottom && s < top) {
                    return Err(Error::Mesh(format!(
                        "row split {s} outside column [{bottom}, {top}]"
                    )));
                }
                Ok(join_nodes(&[
                    graded_nodes(bottom, s, self.lower.rows, self.lower.ratio),
                    graded_nodes(s, top, self.upper.rows, self.upper.ratio),
                ]))
            }
        }
    }
}

/// Tensor-product block deformed column by column.
#[derive(Debug, Clone)]
pub struct StructuredBlock {
    pub xs: Vec<f64>,
    /// Node heights per column; every column has the same length.
    pub columns: Vec<Vec<f64>>,
}

impl StructuredBlock {
    pub fn new(
        xs: Vec<f64>,
        bottom: impl Fn(usize, f64) -> f64,
        top: impl Fn(usize, f64) -> f64,
        layout: &RowLayout,
    ) -> Result<Self> {
        let columns = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| layout.column(bottom(i, x), top(i, x)))
            .collect::<Result<Vec<_>>>()?;
        Ok(StructuredBlock { xs, columns })
    }

    /// Block under a flat lid. Columns whose floor reaches the lid
    /// collapse to a single point.
    pub fn cavity(
        xs: Vec<f64>,
        floor: impl Fn(usize, f64) -> f64,
        lid: f64,
        spacing: Spacing,
    ) -> Result<Self> {
        let columns = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let b = floor(i, x);
                if b > lid {
                    Err(Error::Mesh(format!("cavity floor {b} above its lid {lid}")))
                } else if b == lid {
                    Ok(vec![lid; spacing.rows + 1])
                } else {
                    Ok(graded_nodes(b, lid, spacing.rows, spacing.ratio))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StructuredBlock { xs, columns })
    }
}

#[derive(Hash, PartialEq, Eq, Clone, Copy)]
struct Key(u64, u64);

fn key(p: [f64; 2]) -> Key {
    // +0.0 normalizes negative zero
    Key((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits())
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Collects blocks, merges coincident vertices and derives the boundary.
#[derive(Default)]
pub struct MeshBuilder {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    index: HashMap<Key, usize>,
}

impl MeshBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn vertex(&mut self, p: [f64; 2]) -> usize {
        let k = key(p);
        if let Some(&i) = self.index.get(&k) {
            return i;
        }
        let i = self.vertices.len();
        self.vertices.push(p);
        self.index.insert(k, i);
        i
    }

    pub fn add_block(&mut self, block: &StructuredBlock) -> Result<()> {
        let nx = block.xs.len();
        let ny = block.columns[0].len();
        if nx < 2 || ny < 2 || block.columns.iter().any(|c| c.len() != ny) {
            return Err(Error::Mesh(
                "structured block needs at least 2x2 nodes".into(),
            ));
        }
        let mut ids = vec![vec![0usize; ny]; nx];
        for i in 0..nx {
            for k in 0..ny {
                ids[i][k] = self.vertex([block.xs[i], block.columns[i][k]]);
            }
        }
        for i in 0..nx - 1 {
            for k in 0..ny - 1 {
                let a = ids[i][k];
                let b = ids[i + 1][k];
                let c = ids[i + 1][k + 1];
                let d = ids[i][k + 1];
                let p = |v: usize| self.vertices[v];
                // collapsed columns leave a triangle or nothing
                let tris: Vec<[usize; 3]> = match (a == d, b == c) {
                    (true, true) => Vec::new(),
                    (true, false) => vec![[a, b, c]],
                    (false, true) => vec![[a, b, d]],
                    // split along the shorter diagonal
                    _ if dist2(p(a), p(c)) <= dist2(p(b), p(d)) => vec![[a, b, c], [a, c, d]],
                    _ => vec![[a, b, d], [b, c, d]],
                };
                for t in tris {
                    let area = signed_area(p(t[0]), p(t[1]), p(t[2]));
                    if !(area > 0.0) {
                        return Err(Error::Mesh(format!(
                            "degenerate or inverted triangle near ({:.6}, {:.6})",
                            p(t[0])[0],
                            p(t[0])[1]
                        )));
                    }
                    self.triangles.push(t);
                }
            }
        }
        Ok(())
    }

    /// Finishes the mesh. `classify` tags each boundary edge from its
    /// endpoints; `periodic` requests left/right pairing.
    pub fn finish(
        self,
        classify: impl Fn([f64; 2], [f64; 2]) -> BoundaryTag,
        periodic: bool,
    ) -> Result<TriangleMesh> {
        let mut count: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let a = t[e];
                let b = t[(e + 1) % 3];
                let entry = count.entry((a.min(b), a.max(b))).or_insert((0, [a, b]));
                entry.0 += 1;
            }
        }
        let mut boundary: Vec<BoundaryEdge> = count
            .into_values()
            .filter(|(n, _)| *n == 1)
            .map(|(_, v)| BoundaryEdge {
                vertices: v,
                tag: classify(self.vertices[v[0]], self.vertices[v[1]]),
            })
            .collect();
        boundary.sort_by_key(|e| {
            (
                e.vertices[0].min(e.vertices[1]),
                e.vertices[0].max(e.vertices[1]),
            )
        });

        let mut mesh = TriangleMesh {
            vertices: self.vertices,
            triangles: self.triangles,
            boundary,
            periodic_pairs: Vec::new(),
            period: None,
        };
        if periodic {
            mesh.pair_periodic_sides()?;
        }
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_nodes_hit_endpoints_and_ratio() {
        let n = graded_nodes(0.0, 1.0, 10, 8.0);
        assert_eq!(n.len(), 11);
        assert_eq!(n[0], 0.0);
        assert_eq!(n[10], 1.0);
        let first = n[1] - n[0];
        let last = n[10] - n[9];
        assert!((last / first - 8.0).abs() < 1e-10);
        assert!(n.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn split_layout_hits_split_exactly() {
        let layout = RowLayout::split(0.1, Spacing::uniform(4), Spacing::graded(6, 3.0));
        let c = layout.column(-0.025, 1.0).unwrap();
        assert_eq!(c.len(), 11);
        assert_eq!(c[4], 0.1);
        assert_eq!(c[10], 1.0);
        assert!(layout.column(0.2, 1.0).is_err());
    }
}
