//! Mesh generators for every domain family: smooth macro domains, rough
//! DNS domains, micro domains and truncated cells.

use serde::{Deserialize, Serialize};

use super::structured::{
    graded_nodes, join_nodes, uniform_nodes, MeshBuilder, RowLayout, Spacing, StructuredBlock,
};
use super::{BoundaryTag, TriangleMesh};
use crate::error::{Error, Result};
use crate::geometry::{RoughnessProfile, UnitCell};

const SIDE_TOL: f64 = 1e-12;

/// Upper boundary of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TopShape {
    Flat {
        height: f64,
    },
    /// `h(x1) = mean - amplitude * sin(2 pi frequency x1)`
    Wavy {
        mean: f64,
        amplitude: f64,
        frequency: f64,
    },
}

impl TopShape {
    pub fn height(&self, x1: f64) -> f64 {
        match *self {
            TopShape::Flat { height } => height,
            TopShape::Wavy {
                mean,
                amplitude,
                frequency,
            } => mean - amplitude * (2.0 * std::f64::consts::PI * frequency * x1).sin(),
        }
    }

    fn min_height(&self) -> f64 {
        match *self {
            TopShape::Flat { height } => height,
            TopShape::Wavy {
                mean, amplitude, ..
            } => mean - amplitude.abs(),
        }
    }
}

/// Backward-facing step: inlet channel `[0, step_x] x [step_height, height]`
/// opening onto `[step_x, length] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfsGeometry {
    pub step_x: f64,
    pub step_height: f64,
    pub length: f64,
    pub height: f64,
    /// Stretch of the lower wall where slip (or roughness) applies.
    pub slip_window: (f64, f64),
}

impl Default for BfsGeometry {
    fn default() -> Self {
        BfsGeometry {
            step_x: 5.0,
            step_height: 1.0,
            length: 23.0,
            height: 2.0,
            slip_window: (6.0, 16.0),
        }
    }
}

impl BfsGeometry {
    /// Corner points of the outline, counterclockwise from the inlet top.
    pub fn outline(&self) -> [[f64; 2]; 6] {
        [
            [0.0, self.height],
            [0.0, self.step_height],
            [self.step_x, self.step_height],
            [self.step_x, 0.0],
            [self.length, 0.0],
            [self.length, self.height],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MacroDomain {
    Channel {
        x0: f64,
        length: f64,
        top: TopShape,
        periodic: bool,
        /// Bottom stretch tagged `SlipWall`; `None` means the whole bottom.
        slip_window: Option<(f64, f64)>,
    },
    BackwardFacingStep(BfsGeometry),
}

impl MacroDomain {
    pub fn unit_square_periodic() -> Self {
        MacroDomain::Channel {
            x0: 0.0,
            length: 1.0,
            top: TopShape::Flat { height: 1.0 },
            periodic: true,
            slip_window: None,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, MacroDomain::Channel { periodic: true, .. })
    }

    /// Horizontal extent of the wall carrying the wall law.
    pub fn wall_extent(&self) -> (f64, f64) {
        match *self {
            MacroDomain::Channel {
                x0,
                length,
                slip_window,
                ..
            } => slip_window.unwrap_or((x0, x0 + length)),
            MacroDomain::BackwardFacingStep(g) => g.slip_window,
        }
    }
}

/// Grid density for macro and DNS meshes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroResolution {
    /// Channels: cells along the wall. BFS: cells across the slip window.
    pub nx: usize,
    /// Rows of the channel, or of the BFS region below the step height.
    pub layout: RowLayout,
    /// BFS rows above the step height.
    pub upper: Spacing,
}

impl MacroResolution {
    pub fn grid(nx: usize, ny: usize) -> Self {
        MacroResolution {
            nx,
            layout: RowLayout::single(Spacing::uniform(ny)),
            upper: Spacing::uniform(ny),
        }
    }
}

/// Structured macro mesh of a smooth domain.
pub fn mesh_macro(domain: &MacroDomain, resolution: &MacroResolution) -> Result<TriangleMesh> {
    build_domain(domain, resolution, None, true)
}

/// Boundary-fitted mesh of the rough domain. `wall_resolution` is the
/// number of cells per roughness period along the wall.
pub fn mesh_rough_dns(
    profile: &RoughnessProfile,
    domain: &MacroDomain,
    wall_resolution: usize,
    layout: RowLayout,
    upper: Spacing,
) -> Result<TriangleMesh> {
    if wall_resolution < 8 {
        return Err(Error::Mesh(format!(
            "wall resolution {wall_resolution} below 8"
        )));
    }
    let period = profile.feature_period();
    let nx = match *domain {
        MacroDomain::Channel { length, .. } => {
            ((length / period).round() as usize).max(1) * wall_resolution
        }
        MacroDomain::BackwardFacingStep(g) => {
            let (a, b) = g.slip_window;
            (((b - a) / period).round() as usize).max(1) * wall_resolution
        }
    };
    let resolution = MacroResolution { nx, layout, upper };
    build_domain(domain, &resolution, Some(profile), false)
}

fn check_counts(resolution: &MacroResolution) -> Result<()> {
    if resolution.nx < 2 || resolution.layout.rows() < 2 {
        return Err(Error::Mesh(format!(
            "need at least 2 cells per direction, got {} x {}",
            resolution.nx,
            resolution.layout.rows()
        )));
    }
    Ok(())
}

fn build_domain(
    domain: &MacroDomain,
    resolution: &MacroResolution,
    profile: Option<&RoughnessProfile>,
    smooth: bool,
) -> Result<TriangleMesh> {
    check_counts(resolution)?;
    let wall = |x: f64| profile.map_or(0.0, |p| p.wall(x));
    match *domain {
        MacroDomain::Channel {
            x0,
            length,
            top,
            periodic,
            slip_window,
        } => {
            if !(length > 0.0) || !(top.min_height() > 0.0) {
                return Err(Error::Mesh(
                    "channel must have positive length and height".into(),
                ));
            }
            let x1 = x0 + length;
            let xs = uniform_nodes(x0, x1, resolution.nx);
            let last = xs.len() - 1;
            // periodic closure: the last column repeats the first wall height
            let bottom = |i: usize, x: f64| {
                if periodic && i == last {
                    wall(x0)
                } else {
                    wall(x)
                }
            };
            let jump = |_: usize, x: f64| profile.and_then(|p| p.jump_left_limit(x));
            let cavity_rows = (resolution.layout.lower.rows / 3).max(4);
            let blocks = floor_blocks(
                xs,
                bottom,
                jump,
                0.0,
                |_, x| top.height(x),
                &resolution.layout,
                cavity_rows,
            )?;
            let mut builder = MeshBuilder::new();
            for block in &blocks {
                builder.add_block(block)?;
            }
            let window = slip_window.unwrap_or((x0, x1));
            let scale = length.max(1.0);
            let side_floor = [bottom(0, x0), bottom(last, x1)];
            let classify = move |a: [f64; 2], b: [f64; 2]| {
                let on = |x: f64, k: usize| {
                    (a[0] - x).abs() <= SIDE_TOL * scale
                        && (b[0] - x).abs() <= SIDE_TOL * scale
                        && a[1].min(b[1]) >= side_floor[k] - SIDE_TOL * scale
                };
                let xm = 0.5 * (a[0] + b[0]);
                let ym = 0.5 * (a[1] + b[1]);
                if on(x0, 0) {
                    if periodic {
                        BoundaryTag::PeriodicLeft
                    } else {
                        BoundaryTag::Inflow
                    }
                } else if on(x1, 1) {
                    if periodic {
                        BoundaryTag::PeriodicRight
                    } else {
                        BoundaryTag::Outflow
                    }
                } else if ym < 0.5 * top.height(xm) {
                    if smooth && xm > window.0 && xm < window.1 {
                        BoundaryTag::SlipWall
                    } else {
                        BoundaryTag::NoSlipWall
                    }
                } else {
                    BoundaryTag::NoSlipWall
                }
            };
            builder.finish(classify, periodic)
        }
        MacroDomain::BackwardFacingStep(g) => {
            if !(g.height > g.step_height
                && g.step_height > 0.0
                && g.length > g.step_x
                && g.step_x > 0.0)
            {
                return Err(Error::Mesh("invalid backward-facing step outline".into()));
            }
            let (inlet_xs, down_xs) = bfs_x_nodes(&g, resolution.nx);
            let upper = RowLayout::single(resolution.upper);
            let inlet =
                StructuredBlock::new(inlet_xs, |_, _| g.step_height, |_, _| g.height, &upper)?;
            let above = StructuredBlock::new(
                down_xs.clone(),
                |_, _| g.step_height,
                |_, _| g.height,
                &upper,
            )?;
            let below = StructuredBlock::new(
                down_xs,
                |_, x| wall(x),
                |_, _| g.step_height,
                &resolution.layout,
            )?;
            let mut builder = MeshBuilder::new();
            builder.add_block(&inlet)?;
            builder.add_block(&above)?;
            builder.add_block(&below)?;
            let scale = g.length;
            let classify = move |a: [f64; 2], b: [f64; 2]| {
                let on = |x: f64| {
                    (a[0] - x).abs() <= SIDE_TOL * scale && (b[0] - x).abs() <= SIDE_TOL * scale
                };
                let xm = 0.5 * (a[0] + b[0]);
                let ym = 0.5 * (a[1] + b[1]);
                if on(0.0) {
                    BoundaryTag::Inflow
                } else if on(g.length) {
                    BoundaryTag::Outflow
                } else if smooth
                    && ym.abs() <= SIDE_TOL * scale
                    && xm > g.slip_window.0
                    && xm < g.slip_window.1
                {
                    BoundaryTag::SlipWall
                } else {
                    BoundaryTag::NoSlipWall
                }
            };
            builder.finish(classify, false)
        }
    }
}

/// Blocks over a floor that may jump. A continuous floor gives a single
/// block. Otherwise cavities between jump columns fill the space below
/// `crest` and one block spans `[crest, top]`, so every jump becomes a
/// vertical wall edge. `jump` returns the left limit of the floor at a
/// jump column.
#[allow(clippy::too_many_arguments)]
fn floor_blocks(
    xs: Vec<f64>,
    floor: impl Fn(usize, f64) -> f64,
    jump: impl Fn(usize, f64) -> Option<f64>,
    crest: f64,
    top: impl Fn(usize, f64) -> f64,
    layout: &RowLayout,
    cavity_rows: usize,
) -> Result<Vec<StructuredBlock>> {
    let last = xs.len() - 1;
    let jumps: Vec<usize> = (0..=last).filter(|&i| jump(i, xs[i]).is_some()).collect();
    if jumps.is_empty() {
        return Ok(vec![StructuredBlock::new(xs, floor, top, layout)?]);
    }
    let mut cuts = vec![0];
    cuts.extend(jumps.iter().copied().filter(|&i| i > 0 && i < last));
    cuts.push(last);
    let mut blocks = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        let (j0, j1) = (w[0], w[1]);
        let cavity = StructuredBlock::cavity(
            xs[j0..=j1].to_vec(),
            |k, x| {
                let i = j0 + k;
                match jump(i, x) {
                    Some(left) if i == j1 => left,
                    _ => floor(i, x),
                }
            },
            crest,
            Spacing::uniform(cavity_rows.max(2)),
        )?;
        blocks.push(cavity);
    }
    blocks.push(StructuredBlock::new(xs, |_, _| crest, top, layout)?);
    Ok(blocks)
}

/// Inlet and downstream node lines for the step. The slip window is
/// uniform with `nx` cells; spacing coarsens away from it.
fn bfs_x_nodes(g: &BfsGeometry, nx: usize) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = g.slip_window;
    let h = (b - a) / nx as f64;
    let cells = |len: f64, avg: f64| ((len / avg).ceil() as usize).max(2);
    let inlet = graded_nodes(0.0, g.step_x, cells(g.step_x, 4.0 * h), 0.2);
    let lead = uniform_nodes(g.step_x, a, cells(a - g.step_x, h));
    let window = uniform_nodes(a, b, nx);
    let tail = graded_nodes(b, g.length, cells(g.length - b, 3.0 * h), 5.0);
    (inlet, join_nodes(&[lead, window, tail]))
}

/// Options for micro-domain meshes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroMeshOptions {
    /// Cells across the width.
    pub nx: usize,
    pub rows: Spacing,
    /// Pair the side walls for periodic conditions.
    pub periodic: bool,
}

impl MicroMeshOptions {
    pub fn new(nx: usize, periodic: bool) -> Self {
        MicroMeshOptions {
            nx,
            rows: Spacing::graded(nx.div_ceil(2).max(2), 4.0),
            periodic,
        }
    }
}

/// Mesh of `{s <= x1 <= s + width, wall(x1) <= x2 <= height}`.
pub fn mesh_micro(
    profile: &RoughnessProfile,
    site: f64,
    width: f64,
    height: f64,
    options: &MicroMeshOptions,
) -> Result<TriangleMesh> {
    if !(width > 0.0) || !(height > 0.0) {
        return Err(Error::Mesh(
            "micro domain needs positive width and height".into(),
        ));
    }
    if options.nx < 2 || options.rows.rows < 2 {
        return Err(Error::Mesh(
            "micro mesh needs at least 2 cells per direction".into(),
        ));
    }
    let right = site + width;
    let (w_left, w_right) = (profile.wall(site), profile.wall(right));
    if options.periodic && (w_left - w_right).abs() > 1e-9 * profile.epsilon {
        return Err(Error::Mesh(format!(
            "periodic micro domain needs equal side walls, got {w_left} and {w_right}"
        )));
    }
    let xs = uniform_nodes(site, right, options.nx);
    let last = xs.len() - 1;
    let bottom = |i: usize, x: f64| {
        if options.periodic && i == last {
            w_left
        } else {
            profile.wall(x)
        }
    };
    let side_floor = [bottom(0, site), bottom(last, right)];
    let blocks = floor_blocks(
        xs,
        bottom,
        |_, x| profile.jump_left_limit(x),
        0.0,
        |_, _| height,
        &RowLayout::single(options.rows),
        (options.rows.rows / 3).max(4),
    )?;
    let mut builder = MeshBuilder::new();
    for block in &blocks {
        builder.add_block(block)?;
    }
    let scale = right.abs().max(1.0);
    let classify = move |a: [f64; 2], b: [f64; 2]| {
        let on = |x: f64, k: usize| {
            (a[0] - x).abs() <= SIDE_TOL * scale
                && (b[0] - x).abs() <= SIDE_TOL * scale
                && a[1].min(b[1]) >= side_floor[k] - SIDE_TOL * scale
        };
        if on(site, 0) {
            BoundaryTag::MicroLeft
        } else if on(right, 1) {
            BoundaryTag::MicroRight
        } else if a[1] == height && b[1] == height {
            BoundaryTag::FreeStreamTop
        } else {
            BoundaryTag::NoSlipWall
        }
    };
    builder.finish(classify, options.periodic)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMeshOptions {
    /// Cells across the unit period.
    pub n: usize,
}

/// Mesh of the truncated periodic cell `{0 <= y1 <= 1, phi(y1) <= y2 <= top}`.
///
/// Rows up to `H + 2` are graded toward the wall and do not depend on
/// `top`; above, uniform rows of height `4 / n` fill the rest.
pub fn mesh_cell_domain(
    cell: &UnitCell,
    top: f64,
    options: &CellMeshOptions,
) -> Result<TriangleMesh> {
    let n = options.n;
    if n < 8 {
        return Err(Error::Mesh(format!("cell resolution {n} below 8")));
    }
    let crest = cell.crest();
    if !(top > crest) {
        return Err(Error::Mesh(format!(
            "truncation height {top} leaves no fluid above the crest {crest}"
        )));
    }
    let near = crest + 2.0;
    let near_rows = Spacing::graded(n, 4.0);
    let layout = if top > near + 1e-12 {
        let far_rows = (((top - near) * n as f64 / 4.0).round() as usize).max(1);
        RowLayout::split(near, near_rows, Spacing::uniform(far_rows))
    } else {
        RowLayout::single(near_rows)
    };
    let xs = uniform_nodes(0.0, 1.0, n);
    let side_floor = cell.phi(0.0);
    let blocks = floor_blocks(
        xs,
        |i, y| if i == n { side_floor } else { cell.phi(y) },
        |_, y| cell.jump_left_limit(y),
        crest,
        |_, _| top,
        &layout,
        (n / 3).max(4),
    )?;
    let mut builder = MeshBuilder::new();
    for block in &blocks {
        builder.add_block(block)?;
    }
    let classify = move |a: [f64; 2], b: [f64; 2]| {
        let on = |x: f64| {
            (a[0] - x).abs() <= SIDE_TOL
                && (b[0] - x).abs() <= SIDE_TOL
                && a[1].min(b[1]) >= side_floor - SIDE_TOL
        };
        if on(0.0) {
            BoundaryTag::PeriodicLeft
        } else if on(1.0) {
            BoundaryTag::PeriodicRight
        } else if a[1] == top && b[1] == top {
            BoundaryTag::Top
        } else {
            BoundaryTag::NoSlipWall
        }
    };
    builder.finish(classify, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ProfileKind, ProfileParams};

    fn audited(m: &TriangleMesh) {
        if let Err(e) = m.audit() {
            panic!("mesh audit failed: {e}");
        }
    }

    #[test]
    fn unit_square_forty_by_forty() {
        let m = mesh_macro(
            &MacroDomain::unit_square_periodic(),
            &MacroResolution::grid(40, 40),
        )
        .unwrap();
        assert_eq!(m.cell_count(), 3200);
        audited(&m);
        assert_eq!(m.periodic_pairs.len(), 41);
        assert!(m.tags().contains(&BoundaryTag::SlipWall));
    }

    #[test]
    fn zero_height_is_rejected() {
        let d = MacroDomain::Channel {
            x0: 0.0,
            length: 1.0,
            top: TopShape::Flat { height: 0.0 },
            periodic: true,
            slip_window: None,
        };
        assert!(mesh_macro(&d, &MacroResolution::grid(10, 10)).is_err());
        assert!(mesh_macro(
            &MacroDomain::unit_square_periodic(),
            &MacroResolution::grid(1, 10)
        )
        .is_err());
    }

    #[test]
    fn curved_channel_cell_count() {
        let d = MacroDomain::Channel {
            x0: 0.0,
            length: 1.0,
            top: TopShape::Wavy {
                mean: 0.5,
                amplitude: 0.125,
                frequency: 1.0,
            },
            periodic: true,
            slip_window: None,
        };
        let m = mesh_macro(&d, &MacroResolution::grid(31, 30)).unwrap();
        audited(&m);
        let ratio = m.cell_count() as f64 / 1854.0;
        assert!((0.85..=1.15).contains(&ratio), "{}", m.cell_count());
    }

    #[test]
    fn flat_dns_matches_macro_topology() {
        let flat = RoughnessProfile::flat(0.025);
        let d = MacroDomain::unit_square_periodic();
        let layout = RowLayout::single(Spacing::graded(12, 3.0));
        let dns = mesh_rough_dns(&flat, &d, 8, layout, Spacing::uniform(1)).unwrap();
        let mac = mesh_macro(
            &d,
            &MacroResolution {
                nx: 320,
                layout,
                upper: Spacing::uniform(1),
            },
        )
        .unwrap();
        assert_eq!(dns.vertices, mac.vertices);
        assert_eq!(dns.triangles, mac.triangles);
    }

    #[test]
    fn sinusoidal_dns_wall_segments() {
        let p = RoughnessProfile::sinusoidal(0.025).unwrap();
        let layout = RowLayout::split(0.1, Spacing::graded(6, 2.0), Spacing::graded(6, 4.0));
        let m = mesh_rough_dns(
            &p,
            &MacroDomain::unit_square_periodic(),
            16,
            layout,
            Spacing::uniform(1),
        )
        .unwrap();
        audited(&m);
        assert_eq!(
            m.edges_with_tag(BoundaryTag::NoSlipWall)
                .filter(|e| {
                    let [a, b] = e.vertices;
                    m.vertices[a][1] < 0.5 && m.vertices[b][1] < 0.5
                })
                .count(),
            640
        );
        assert!(mesh_rough_dns(
            &p,
            &MacroDomain::unit_square_periodic(),
            4,
            layout,
            Spacing::uniform(1)
        )
        .is_err());
    }

    #[test]
    fn bfs_rough_patch_spans_window() {
        let p =
            RoughnessProfile::new(ProfileKind::BfsPatch, 0.1, ProfileParams::default()).unwrap();
        let g = BfsGeometry::default();
        let layout = RowLayout::split(0.4, Spacing::graded(6, 3.0), Spacing::graded(6, 2.0));
        let m = mesh_rough_dns(
            &p,
            &MacroDomain::BackwardFacingStep(g),
            8,
            layout,
            Spacing::uniform(6),
        )
        .unwrap();
        audited(&m);
        let below: Vec<f64> = m
            .vertices
            .iter()
            .filter(|v| v[1] < -1e-12)
            .map(|v| v[0])
            .collect();
        let lo = below.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = below.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo > 6.0 && lo < 6.0 + 0.25);
        assert!(hi < 16.0 && hi > 16.0 - 0.25);
        assert!(m.vertices.iter().any(|v| v[0] == 6.0 && v[1] == 0.0));
        assert!(m.vertices.iter().any(|v| v[0] == 16.0 && v[1] == 0.0));
        assert!(m.tags().contains(&BoundaryTag::Inflow));
        assert!(m.tags().contains(&BoundaryTag::Outflow));
        assert!(!m.tags().contains(&BoundaryTag::SlipWall));

        let mac = mesh_macro(
            &MacroDomain::BackwardFacingStep(g),
            &MacroResolution {
                nx: 40,
                layout: RowLayout::single(Spacing::graded(8, 3.0)),
                upper: Spacing::uniform(6),
            },
        )
        .unwrap();
        audited(&mac);
        for e in mac.edges_with_tag(BoundaryTag::SlipWall) {
            for v in e.vertices {
                let p = mac.vertices[v];
                assert!(p[1] == 0.0 && (6.0..=16.0).contains(&p[0]));
            }
        }
    }

    #[test]
    fn micro_domains() {
        let eps = 0.025;
        let p = RoughnessProfile::sinusoidal(eps).unwrap();
        let m = mesh_micro(&p, 0.0, eps, 4.0 * eps, &MicroMeshOptions::new(30, true)).unwrap();
        audited(&m);
        assert_eq!(m.cell_count(), 900);
        assert_eq!(m.periodic_pairs.len(), 16);

        let q = RoughnessProfile::new(ProfileKind::QuasiPeriodic, eps, ProfileParams::default())
            .unwrap();
        let s = 0.481561;
        let m = mesh_micro(
            &q,
            s,
            5.0 * eps,
            4.0 * eps,
            &MicroMeshOptions::new(60, false),
        )
        .unwrap();
        audited(&m);
        let (a, b) = m.x_range();
        assert!((a - 0.481561).abs() < 1e-15 && (b - 0.606561).abs() < 1e-12);
        assert!(mesh_micro(
            &q,
            s,
            5.0 * eps,
            4.0 * eps,
            &MicroMeshOptions::new(60, true)
        )
        .is_err());

        let flat = RoughnessProfile::flat(eps);
        let m = mesh_micro(&flat, 0.0, eps, 4.0 * eps, &MicroMeshOptions::new(10, true)).unwrap();
        let area: f64 = (0..m.cell_count()).map(|t| m.area(t)).sum();
        assert!((area - 4.0 * eps * eps).abs() < 1e-15);
    }

    #[test]
    fn cell_domains() {
        let m = mesh_cell_domain(&UnitCell::Flat, 4.0, &CellMeshOptions { n: 8 }).unwrap();
        audited(&m);
        let area: f64 = (0..m.cell_count()).map(|t| m.area(t)).sum();
        assert!((area - 4.0).abs() < 1e-12);

        let cos = UnitCell::Cosine { amplitude: 1.0 };
        let m = mesh_cell_domain(&cos, 8.0, &CellMeshOptions { n: 16 }).unwrap();
        audited(&m);
        let walls: Vec<f64> = m
            .edges_with_tag(BoundaryTag::NoSlipWall)
            .flat_map(|e| e.vertices)
            .map(|v| m.vertices[v][1])
            .collect();
        let lo = walls.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = walls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo.abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);

        assert!(mesh_cell_domain(&cos, 1.0, &CellMeshOptions { n: 16 }).is_err());
        assert!(mesh_cell_domain(&cos, 8.0, &CellMeshOptions { n: 4 }).is_err());
    }

    #[test]
    fn refinement_quadruples_cells() {
        let cos = UnitCell::Cosine { amplitude: 1.0 };
        let a = mesh_cell_domain(&cos, 8.0, &CellMeshOptions { n: 16 }).unwrap();
        let b = mesh_cell_domain(&cos, 8.0, &CellMeshOptions { n: 32 }).unwrap();
        assert!(b.cell_count() >= 4 * a.cell_count());
        assert_eq!(a.tags(), b.tags());
        let p = RoughnessProfile::sinusoidal(0.025).unwrap();
        let c = mesh_micro(&p, 0.0, 0.025, 0.1, &MicroMeshOptions::new(16, true)).unwrap();
        let d = mesh_micro(&p, 0.0, 0.025, 0.1, &MicroMeshOptions::new(32, true)).unwrap();
        assert!(d.cell_count() >= 4 * c.cell_count());
        assert_eq!(c.tags(), d.tags());
    }

    #[test]
    fn json_round_trip() {
        let p = RoughnessProfile::sinusoidal(0.025).unwrap();
        let m = mesh_micro(&p, 0.0, 0.025, 0.1, &MicroMeshOptions::new(8, true)).unwrap();
        let back = TriangleMesh::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
    }
}
