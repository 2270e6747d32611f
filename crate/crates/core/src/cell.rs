//! Homogenization cell problem on a truncated periodic strip.
//!
//! The corrector solves the Stokes system in `{phi(y1) < y2 < top}` with
//! `chi = -phi(y1) e1` on the wall, periodic sides and a shear-free top.
//! Far from the wall `chi` tends to the constant `(chibar, 0)`, and the
//! homogenized slip length of the rough wall is `chibar + H`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{
    line_average, solve_stationary, BoundaryCondition, FlowProblem, FlowSolution, Forcing,
    SolverOptions,
};
use crate::geometry::UnitCell;
use crate::mesh::{mesh_cell_domain, BoundaryTag, CellMeshOptions};

/// Spacing of the decay slices.
const SLICE_STEP: f64 = 0.25;
/// Points per slice for the oscillation estimate.
const SLICE_POINTS: usize = 128;

#[derive(Debug, Clone)]
pub struct CellSolution {
    pub cell: UnitCell,
    /// Corrector velocity and pressure.
    pub field: FlowSolution,
    pub chibar: f64,
    pub truncation_height: f64,
    pub resolution: usize,
    /// `(y2, max |chi1 - mean|)` on slices above the crest, stopped at the
    /// round-off floor.
    pub decay_samples: Vec<(f64, f64)>,
    /// Mean of `chi2` over the top line.
    pub top_vertical_mean: f64,
}

impl CellSolution {
    /// Crest height `H`.
    pub fn crest(&self) -> f64 {
        self.cell.crest()
    }

    /// Slip length `chibar + H` of the unit cell.
    pub fn slip_length(&self) -> f64 {
        self.chibar + self.crest()
    }

    /// Mean of `chi` over the horizontal slice at height `y2`.
    pub fn slice_mean(&self, y2: f64) -> Result<[f64; 2]> {
        line_average(&self.field, 0.0, y2, 1.0)
    }
}

pub fn solve_cell_problem(
    cell: &UnitCell,
    truncation_height: f64,
    resolution: usize,
) -> Result<CellSolution> {
    solve_cell_problem_with_viscosity(cell, truncation_height, resolution, 1.0)
}

/// As [`solve_cell_problem`] with an explicit viscosity; the corrector does
/// not depend on it.
pub fn solve_cell_problem_with_viscosity(
    cell: &UnitCell,
    truncation_height: f64,
    resolution: usize,
    viscosity: f64,
) -> Result<CellSolution> {
    let crest = cell.crest();
    if !(truncation_height > crest + 1.0) {
        return Err(Error::TruncationTooLow {
            height: truncation_height,
            crest,
        });
    }
    let mesh = Arc::new(mesh_cell_domain(
        cell,
        truncation_height,
        &CellMeshOptions { n: resolution },
    )?);
    let problem = FlowProblem::new(
        mesh,
        viscosity,
        Forcing::zero(),
        vec![
            BoundaryCondition::periodic(),
            BoundaryCondition::dirichlet(BoundaryTag::NoSlipWall, |x| [-x[1], 0.0]),
            BoundaryCondition::free_slip(BoundaryTag::Top),
        ],
    )
    .stokes();
    let field = solve_stationary(&problem, &SolverOptions::default())?;
    let top = line_average(&field, 0.0, truncation_height, 1.0)?;

    let mut decay_samples = Vec::new();
    let mut floor = None;
    let mut k = 0;
    loop {
        let y = crest + SLICE_STEP * k as f64;
        if y > truncation_height + 1e-12 {
            break;
        }
        let osc = slice_oscillation(&field, y)?;
        let floor = *floor.get_or_insert(1e-13 * osc.max(1e-300));
        if osc <= floor && k > 0 {
            break;
        }
        if let Some(&(_, prev)) = decay_samples.last() {
            if osc >= prev {
                break;
            }
        }
        decay_samples.push((y, osc));
        k += 1;
    }

    Ok(CellSolution {
        cell: *cell,
        field,
        chibar: top[0],
        truncation_height,
        resolution,
        decay_samples,
        top_vertical_mean: top[1],
    })
}

fn slice_oscillation(field: &FlowSolution, y: f64) -> Result<f64> {
    let mean = line_average(field, 0.0, y, 1.0)?[0];
    let mut osc: f64 = 0.0;
    for i in 0..SLICE_POINTS {
        let x = (i as f64 + 0.5) / SLICE_POINTS as f64;
        osc = osc.max((field.velocity([x, y])?[0] - mean).abs());
    }
    Ok(osc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    /// Fitted `r` in `osc ~ C exp(-r y2)`; infinite when nothing oscillates.
    pub rate: f64,
    /// RMS residual of the log-linear fit.
    pub fit_residual: f64,
    /// Per-slice residuals of the fit.
    pub residuals: Vec<f64>,
    pub no_decay_needed: bool,
}

/// Least-squares fit of `log(oscillation)` against `y2`.
pub fn decay_check(solution: &CellSolution) -> Result<DecayReport> {
    let s = &solution.decay_samples;
    let crest_osc = s.first().map_or(0.0, |v| v.1);
    if crest_osc <= 1e-14 * solution.field.velocity_scale().max(1e-300) || crest_osc == 0.0 {
        return Ok(DecayReport {
            rate: f64::INFINITY,
            fit_residual: 0.0,
            residuals: Vec::new(),
            no_decay_needed: true,
        });
    }
    if s.len() < 4 {
        return Err(Error::InsufficientSamples {
            needed: 4,
            got: s.len(),
        });
    }
    let n = s.len() as f64;
    let (mx, my) = s
        .iter()
        .fold((0.0, 0.0), |(a, b), &(y, o)| (a + y / n, b + o.ln() / n));
    let (sxy, sxx) = s.iter().fold((0.0, 0.0), |(a, b), &(y, o)| {
        (a + (y - mx) * (o.ln() - my), b + (y - mx) * (y - mx))
    });
    let slope = sxy / sxx;
    let residuals: Vec<f64> = s
        .iter()
        .map(|&(y, o)| o.ln() - (my + slope * (y - mx)))
        .collect();
    let fit_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    Ok(DecayReport {
        rate: -slope,
        fit_residual,
        residuals,
        no_decay_needed: false,
    })
}
