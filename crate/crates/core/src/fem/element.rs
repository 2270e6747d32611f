//! Affine Taylor-Hood element: quadratic velocity, linear pressure.
//!
//! Local velocity nodes are the three vertices followed by the midpoints
//! of edges (0,1), (1,2), (2,0).

pub const EDGE_VERTICES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

/// Geometry of one affine triangle.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub vertices: [[f64; 2]; 3],
    /// Gradients of the barycentric coordinates.
    pub grad_bary: [[f64; 2]; 3],
    pub area: f64,
}

impl Affine {
    pub fn new(vertices: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let grad_bary = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        Affine {
            vertices,
            grad_bary,
            area: 0.5 * det,
        }
    }

    pub fn point(&self, bary: [f64; 3]) -> [f64; 2] {
        let v = &self.vertices;
        [
            bary[0] * v[0][0] + bary[1] * v[1][0] + bary[2] * v[2][0],
            bary[0] * v[0][1] + bary[1] * v[1][1] + bary[2] * v[2][1],
        ]
    }

    /// Barycentric coordinates of an arbitrary point.
    pub fn bary(&self, p: [f64; 2]) -> [f64; 3] {
        let v0 = self.vertices[0];
        let d = [p[0] - v0[0], p[1] - v0[1]];
        let g = &self.grad_bary;
        let l1 = g[1][0] * d[0] + g[1][1] * d[1];
        let l2 = g[2][0] * d[0] + g[2][1] * d[1];
        [1.0 - l1 - l2, l1, l2]
    }

    /// Quadratic basis values.
    pub fn p2_values(&self, l: [f64; 3]) -> [f64; 6] {
        [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
        ]
    }

    /// Quadratic basis gradients.
    pub fn p2_gradients(&self, l: [f64; 3]) -> [[f64; 2]; 6] {
        let g = &self.grad_bary;
        let mut out = [[0.0; 2]; 6];
        for i in 0..3 {
            let s = 4.0 * l[i] - 1.0;
            out[i] = [s * g[i][0], s * g[i][1]];
        }
        for (k, [a, b]) in EDGE_VERTICES.iter().enumerate() {
            out[3 + k] = [
                4.0 * (l[*a] * g[*b][0] + l[*b] * g[*a][0]),
                4.0 * (l[*a] * g[*b][1] + l[*b] * g[*a][1]),
            ];
        }
        out
    }
}

/// Quadratic basis on an edge parameterized by `t` in `[0, 1]`:
/// start vertex, end vertex, midpoint.
pub fn p2_edge_values(t: f64) -> [f64; 3] {
    [
        (1.0 - t) * (1.0 - 2.0 * t),
        t * (2.0 * t - 1.0),
        4.0 * t * (1.0 - t),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p2_basis_reproduces_quadratics() {
        let el = Affine::new([[0.1, 0.2], [1.3, 0.1], [0.4, 0.9]]);
        let f = |p: [f64; 2]| {
            1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[0] + 3.0 * p[0] * p[1] - p[1] * p[1]
        };
        let df = |p: [f64; 2]| [2.0 + p[0] + 3.0 * p[1], -1.0 + 3.0 * p[0] - 2.0 * p[1]];
        let nodes = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
        ];
        let coeff: Vec<f64> = nodes.iter().map(|&b| f(el.point(b))).collect();
        let l = [0.2, 0.3, 0.5];
        let x = el.point(l);
        let v: f64 = el.p2_values(l).iter().zip(&coeff).map(|(a, b)| a * b).sum();
        let g = el.p2_gradients(l);
        let gx: f64 = g.iter().zip(&coeff).map(|(a, b)| a[0] * b).sum();
        let gy: f64 = g.iter().zip(&coeff).map(|(a, b)| a[1] * b).sum();
        assert!((v - f(x)).abs() < 1e-13);
        assert!((gx - df(x)[0]).abs() < 1e-12);
        assert!((gy - df(x)[1]).abs() < 1e-12);
        let back = el.bary(x);
        for i in 0..3 {
            assert!((back[i] - l[i]).abs() < 1e-14);
        }
    }
}
