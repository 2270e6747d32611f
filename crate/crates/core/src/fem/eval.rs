//! Point location, interpolation and horizontal averages.

use std::fmt;
use std::sync::Arc;

use super::element::Affine;
use super::quadrature::gauss_legendre;
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

const BARY_TOL: f64 = 1e-10;

/// Anything that can be sampled like a velocity field.
pub trait VelocityField {
    fn velocity(&self, p: [f64; 2]) -> Result<[f64; 2]>;
    fn velocity_gradient(&self, p: [f64; 2]) -> Result<[[f64; 2]; 2]>;
    /// Abscissae in `(x0, x1)` splitting the line at height `y` into
    /// pieces on which the field is smooth. Defaults to 32 equal panels.
    fn breakpoints(&self, _y: f64, x0: f64, x1: f64) -> Vec<f64> {
        (1..32).map(|k| x0 + (x1 - x0) * k as f64 / 32.0).collect()
    }
}

type ValueFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;
type GradFn = Arc<dyn Fn([f64; 2]) -> [[f64; 2]; 2] + Send + Sync>;

/// Closed-form field.
#[derive(Clone)]
pub struct AnalyticField {
    value: ValueFn,
    gradient: GradFn,
}

impl AnalyticField {
    pub fn new(
        value: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
        gradient: impl Fn([f64; 2]) -> [[f64; 2]; 2] + Send + Sync + 'static,
    ) -> Self {
        AnalyticField {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }
}

impl fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AnalyticField(..)")
    }
}

impl VelocityField for AnalyticField {
    fn velocity(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        Ok((self.value)(p))
    }

    fn velocity_gradient(&self, p: [f64; 2]) -> Result<[[f64; 2]; 2]> {
        Ok((self.gradient)(p))
    }
}

/// Uniform bucket grid over the mesh bounding box.
#[derive(Debug, Clone)]
pub struct PointLocator {
    lo: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
    period: Option<(f64, f64)>,
}

impl PointLocator {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &mesh.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let n = mesh.cell_count().max(1) as f64;
        let w = (hi[0] - lo[0]).max(1e-300);
        let h = (hi[1] - lo[1]).max(1e-300);
        // About two triangles per bucket.
        let side = (w * h / (n / 2.0)).sqrt();
        let dims = [
            ((w / side).ceil() as usize).clamp(1, 4096),
            ((h / side).ceil() as usize).clamp(1, 4096),
        ];
        let cell = [w / dims[0] as f64, h / dims[1] as f64];
        let mut loc = PointLocator {
            lo,
            cell,
            dims,
            buckets: vec![Vec::new(); dims[0] * dims[1]],
            period: mesh.periodic_strip(),
        };
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let ps = tri.map(|v| mesh.vertices[v]);
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in ps {
                for k in 0..2 {
                    a[k] = a[k].min(p[k]);
                    b[k] = b[k].max(p[k]);
                }
            }
            let (i0, j0) = loc.bucket(a);
            let (i1, j1) = loc.bucket(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[j * dims[0] + i].push(t);
                }
            }
        }
        loc
    }

    fn bucket(&self, p: [f64; 2]) -> (usize, usize) {
        let f = |k: usize| {
            let s = ((p[k] - self.lo[k]) / self.cell[k]).floor();
            (s.max(0.0) as usize).min(self.dims[k] - 1)
        };
        (f(0), f(1))
    }

    /// Maps a point into the periodic strip.
    pub fn wrap(&self, p: [f64; 2]) -> [f64; 2] {
        match self.period {
            Some((x0, period))
                if p[0] < x0 - 1e-12 * period || p[0] > x0 + period * (1.0 + 1e-12) =>
            {
                [x0 + (p[0] - x0).rem_euclid(period), p[1]]
            }
            _ => p,
        }
    }

    /// Lowest-index triangle containing `p` (tolerant to round-off).
    pub fn locate(&self, mesh: &TriangleMesh, p: [f64; 2]) -> Option<usize> {
        let span = self.cell[0].max(self.cell[1]) * self.dims[0].max(self.dims[1]) as f64;
        for k in 0..2 {
            let margin = 1e-12 * span;
            if p[k] < self.lo[k] - margin
                || p[k] > self.lo[k] + self.cell[k] * self.dims[k] as f64 + margin
            {
                return None;
            }
        }
        let (i, j) = self.bucket(p);
        self.buckets[j * self.dims[0] + i]
            .iter()
            .copied()
            .find(|&t| {
                let el = Affine::new(mesh.triangles[t].map(|v| mesh.vertices[v]));
                el.bary(p).iter().all(|&l| l >= -BARY_TOL)
            })
    }

    fn crossings_unwrapped(&self, mesh: &TriangleMesh, y: f64, x0: f64, x1: f64) -> Vec<f64> {
        let (i0, j) = self.bucket([x0, y]);
        let (i1, _) = self.bucket([x1, y]);
        let mut out = Vec::new();
        for i in i0..=i1 {
            for &t in &self.buckets[j * self.dims[0] + i] {
                let tri = mesh.triangles[t];
                for k in 0..3 {
                    let a = mesh.vertices[tri[k]];
                    let b = mesh.vertices[tri[(k + 1) % 3]];
                    if (a[1] - y) * (b[1] - y) > 0.0 || a[1] == b[1] {
                        if a[1] == y {
                            out.push(a[0]);
                        }
                        continue;
                    }
                    let s = (y - a[1]) / (b[1] - a[1]);
                    out.push(a[0] + s * (b[0] - a[0]));
                }
            }
        }
        out.retain(|&x| x > x0 && x < x1);
        out
    }

    /// Abscissae where the line at height `y` crosses mesh edges, sorted.
    pub fn crossings(&self, mesh: &TriangleMesh, y: f64, x0: f64, x1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match self.period {
            Some((s0, period)) => {
                let first = ((x0 - s0) / period).floor() as i64;
                let last = ((x1 - s0) / period).ceil() as i64;
                for k in first..last {
                    let shift = k as f64 * period;
                    let (a, b) = ((x0 - shift).max(s0), (x1 - shift).min(s0 + period));
                    if b <= a {
                        continue;
                    }
                    out.extend(
                        self.crossings_unwrapped(mesh, y, a, b)
                            .into_iter()
                            .map(|x| x + shift),
                    );
                    if k > first {
                        out.push(s0 + shift);
                    }
                }
            }
            None => out = self.crossings_unwrapped(mesh, y, x0, x1),
        }
        out.retain(|&x| x > x0 && x < x1);
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (x1 - x0));
        out
    }
}

/// Composite Gauss quadrature of `f` over `[x0, x1]` split at `breaks`.
fn integrate<T, F>(breaks: &[f64], x0: f64, x1: f64, zero: T, mut f: F) -> Result<T>
where
    F: FnMut(f64, f64, T) -> Result<T>,
{
    let mut knots = Vec::with_capacity(breaks.len() + 2);
    knots.push(x0);
    knots.extend_from_slice(breaks);
    knots.push(x1);
    let mut acc = zero;
    for w in knots.windows(2) {
        let h = w[1] - w[0];
        if h <= 0.0 {
            continue;
        }
        for &(t, wt) in gauss_legendre(5) {
            acc = f(w[0] + t * h, wt * h, acc)?;
        }
    }
    Ok(acc)
}

fn check_segment(x: f64, length: f64) -> Result<()> {
    if !(length > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "averaging segment needs positive length, got {length}"
        )));
    }
    Ok(())
}

fn outside(y: f64, x0: f64, x1: f64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::PointOutsideMesh(..) => Error::SegmentOutsideMesh { y, x0, x1 },
        other => other,
    }
}

/// Mean of the velocity over `[x, x + length] x {y}`.
pub fn line_average<F: VelocityField + ?Sized>(
    field: &F,
    x: f64,
    y: f64,
    length: f64,
) -> Result<[f64; 2]> {
    check_segment(x, length)?;
    let x1 = x + length;
    let breaks = field.breakpoints(y, x, x1);
    let sum = integrate(&breaks, x, x1, [0.0; 2], |s, w, acc| {
        let u = field.velocity([s, y])?;
        Ok([acc[0] + w * u[0], acc[1] + w * u[1]])
    })
    .map_err(outside(y, x, x1))?;
    Ok([sum[0] / length, sum[1] / length])
}

/// Mean of the velocity gradient over `[x, x + length] x {y}`.
pub fn line_average_gradient<F: VelocityField + ?Sized>(
    field: &F,
    x: f64,
    y: f64,
    length: f64,
) -> Result<[[f64; 2]; 2]> {
    check_segment(x, length)?;
    let x1 = x + length;
    let breaks = field.breakpoints(y, x, x1);
    let sum = integrate(&breaks, x, x1, [[0.0; 2]; 2], |s, w, mut acc| {
        let g = field.velocity_gradient([s, y])?;
        for i in 0..2 {
            for j in 0..2 {
                acc[i][j] += w * g[i][j];
            }
        }
        Ok(acc)
    })
    .map_err(outside(y, x, x1))?;
    Ok(sum.map(|r| r.map(|v| v / length)))
}

/// Averaging kernel on the reference interval `[0, 1]`.
#[derive(Clone)]
pub enum Kernel {
    Box,
    /// `30 t^2 (1 - t)^2`: smooth, symmetric, first moment about the
    /// centre vanishes.
    PolyBump,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Box => f.write_str("Box"),
            Kernel::PolyBump => f.write_str("PolyBump"),
            Kernel::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Kernel {
    pub fn eval(&self, t: f64) -> f64 {
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        match self {
            Kernel::Box => 1.0,
            Kernel::PolyBump => 30.0 * t * t * (1.0 - t) * (1.0 - t),
            Kernel::Custom(k) => k(t),
        }
    }

    /// Reference mass, by 64-panel Gauss quadrature.
    pub fn mass(&self) -> f64 {
        let n = 64;
        let h = 1.0 / n as f64;
        (0..n)
            .flat_map(|i| {
                gauss_legendre(5)
                    .iter()
                    .map(move |&(t, w)| ((i as f64 + t) * h, w * h))
            })
            .map(|(t, w)| w * self.eval(t))
            .sum()
    }
}

/// `int K_L(s - x) u(s, y) ds` with `K_L(s) = K(s / L) / L`.
pub fn kernel_average<F: VelocityField + ?Sized>(
    field: &F,
    x: f64,
    y: f64,
    length: f64,
    kernel: &Kernel,
) -> Result<[f64; 2]> {
    check_segment(x, length)?;
    let mass = kernel.mass();
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::KernelNotNormalized(mass));
    }
    let x1 = x + length;
    let breaks = field.breakpoints(y, x, x1);
    let sum = integrate(&breaks, x, x1, [0.0; 2], |s, w, acc| {
        let k = kernel.eval((s - x) / length) / length;
        let u = field.velocity([s, y])?;
        Ok([acc[0] + w * k * u[0], acc[1] + w * k * u[1]])
    })
    .map_err(outside(y, x, x1))?;
    Ok(sum)
}
