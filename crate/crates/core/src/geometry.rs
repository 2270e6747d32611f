//! Rough-wall profiles.
//!
//! Every profile is a graph `x2 = wall(x1)` lying on or below the crest
//! plane `x2 = 0`. Periodic kinds also expose the unit-cell shape used by
//! the homogenization cell problem, related to the wall by
//! `wall(x1) = period * (phi(x1 / period) - H)`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fractional parts closer than this to an integer snap to it, so that
/// sites placed at multiples of the period land exactly on a crest.
const FRACTION_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Flat,
    Sinusoidal,
    Sawtooth,
    ModulatedSinusoidal,
    QuasiPeriodic,
    BfsPatch,
    Tabulated,
}

impl ProfileKind {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "flat" => ProfileKind::Flat,
            "sinusoidal" => ProfileKind::Sinusoidal,
            "sawtooth" => ProfileKind::Sawtooth,
            "modulated_sinusoidal" | "modulated" => ProfileKind::ModulatedSinusoidal,
            "quasi_periodic" => ProfileKind::QuasiPeriodic,
            "bfs_patch" => ProfileKind::BfsPatch,
            "tabulated" => ProfileKind::Tabulated,
            other => return Err(Error::Config(format!("unknown profile kind '{other}'"))),
        })
    }
}

/// Smooth amplitude modulation `beta(x1)` multiplying the periodic shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Modulation {
    Identity,
    /// `beta(x1) = sin^2(frequency * x1) + offset`
    SinSquared {
        frequency: f64,
        offset: f64,
    },
}

impl Modulation {
    /// `sin^2(sqrt(2) 2 pi x1) + 0.5`, ranging over `[0.5, 1.5]`.
    pub fn channel_default() -> Self {
        Modulation::SinSquared {
            frequency: SQRT_2 * 2.0 * PI,
            offset: 0.5,
        }
    }

    pub fn eval(&self, x1: f64) -> f64 {
        match *self {
            Modulation::Identity => 1.0,
            Modulation::SinSquared { frequency, offset } => {
                let s = (frequency * x1).sin();
                s * s + offset
            }
        }
    }

    fn sup(&self) -> f64 {
        match *self {
            Modulation::Identity => 1.0,
            Modulation::SinSquared { offset, .. } => 1.0 + offset,
        }
    }
}

/// Kind-specific construction parameters. Unused fields are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileParams {
    /// Horizontal period; defaults to epsilon (BFS: 2.5 epsilon).
    pub wavelength: Option<f64>,
    pub modulation: Option<Modulation>,
    /// Extent of a roughness patch (BFS default `[6, 16]`).
    pub window: Option<(f64, f64)>,
    /// `(x1, wall)` samples of a tabulated wall.
    pub samples: Vec<(f64, f64)>,
    /// Period of a tabulated wall, if it repeats.
    pub period: Option<f64>,
}

/// Unit-cell roughness shape `phi: [0, 1) -> [0, H]` with `phi(0) = H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum UnitCell {
    Flat,
    Constant {
        value: f64,
    },
    /// `amplitude * (1 + cos 2 pi y) / 2`
    Cosine {
        amplitude: f64,
    },
    /// `amplitude * (1 - frac(y))`
    Sawtooth {
        amplitude: f64,
    },
}

impl UnitCell {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "flat" => UnitCell::Flat,
            "constant" => UnitCell::Constant { value: 1.0 },
            "sinusoidal" | "cosine" => UnitCell::Cosine { amplitude: 1.0 },
            "sawtooth" => UnitCell::Sawtooth { amplitude: 0.75 },
            other => return Err(Error::Config(format!("no unit cell for profile '{other}'"))),
        })
    }

    pub fn phi(&self, y: f64) -> f64 {
        match *self {
            UnitCell::Flat => 0.0,
            UnitCell::Constant { value } => value,
            UnitCell::Cosine { amplitude } => amplitude * 0.5 * (1.0 + (2.0 * PI * y).cos()),
            UnitCell::Sawtooth { amplitude } => amplitude * (1.0 - snapped_fract(y)),
        }
    }

    /// Crest height `H = sup phi`.
    pub fn crest(&self) -> f64 {
        match *self {
            UnitCell::Flat => 0.0,
            UnitCell::Constant { value } => value,
            UnitCell::Cosine { amplitude } | UnitCell::Sawtooth { amplitude } => amplitude,
        }
    }

    /// Left limit of `phi` where it jumps at `y`.
    pub fn jump_left_limit(&self, y: f64) -> Option<f64> {
        match *self {
            UnitCell::Sawtooth { .. } if on_integer(y) => Some(0.0),
            _ => None,
        }
    }

    /// Whether `phi` is continuous across the cell edge.
    pub fn is_continuous(&self) -> bool {
        !matches!(self, UnitCell::Sawtooth { .. })
    }
}

/// Parameterized rough wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoughnessProfile {
    pub kind: ProfileKind,
    pub epsilon: f64,
    pub wavelength: f64,
    /// Peak-to-trough depth in units of epsilon.
    pub depth: f64,
    pub modulation: Modulation,
    pub window: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

impl RoughnessProfile {
    pub fn new(kind: ProfileKind, epsilon: f64, params: ProfileParams) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let default_wavelength = match kind {
            ProfileKind::BfsPatch => 2.5 * epsilon,
            _ => epsilon,
        };
        let wavelength = params.wavelength.unwrap_or(default_wavelength);
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        let modulation = match kind {
            ProfileKind::ModulatedSinusoidal => params
                .modulation
                .unwrap_or_else(Modulation::channel_default),
            _ => Modulation::Identity,
        };
        let window = match kind {
            ProfileKind::BfsPatch => Some(params.window.unwrap_or((6.0, 16.0))),
            _ => None,
        };
        if let Some((a, b)) = window {
            if !(b > a) {
                return Err(Error::InvalidParameter(format!(
                    "roughness window [{a}, {b}] is empty"
                )));
            }
        }
        let mut samples = Vec::new();
        let mut period = None;
        if kind == ProfileKind::Tabulated {
            if params.samples.len() < 2 {
                return Err(Error::InvalidParameter(
                    "tabulated profile needs at least 2 samples".into(),
                ));
            }
            if params.samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                return Err(Error::InvalidParameter(
                    "tabulated abscissae must be strictly increasing".into(),
                ));
            }
            if params.samples.iter().any(|s| s.1 > 0.0) {
                return Err(Error::InvalidParameter(
                    "tabulated wall must lie on or below the crest plane".into(),
                ));
            }
            samples = params.samples.clone();
            if let Some(p) = params.period {
                if !(p > 0.0) {
                    return Err(Error::InvalidParameter("period must be positive".into()));
                }
            }
            period = params.period;
        }
        let depth = match kind {
            ProfileKind::Flat => 0.0,
            ProfileKind::Sinusoidal | ProfileKind::BfsPatch => 1.0,
            ProfileKind::Sawtooth => 0.75,
            ProfileKind::ModulatedSinusoidal => modulation.sup(),
            ProfileKind::QuasiPeriodic => 4.25 / 3.0,
            ProfileKind::Tabulated => {
                let min = samples.iter().map(|s| s.1).fold(0.0, f64::min);
                -min / epsilon
            }
        };
        Ok(RoughnessProfile {
            kind,
            epsilon,
            wavelength,
            depth,
            modulation,
            window,
            samples,
            period,
        })
    }

    pub fn flat(epsilon: f64) -> Self {
        Self::new(ProfileKind::Flat, epsilon, ProfileParams::default()).expect("valid flat profile")
    }

    pub fn sinusoidal(epsilon: f64) -> Result<Self> {
        Self::new(ProfileKind::Sinusoidal, epsilon, ProfileParams::default())
    }

    /// Wall height `w(x1) <= 0`.
    pub fn wall(&self, x1: f64) -> f64 {
        self.modulation.eval(x1) * self.wall_unmodulated(x1)
    }

    /// The wall with `beta = 1`.
    pub fn wall_unmodulated(&self, x1: f64) -> f64 {
        let eps = self.epsilon;
        match self.kind {
            ProfileKind::Flat => 0.0,
            ProfileKind::Sinusoidal | ProfileKind::ModulatedSinusoidal => {
                cosine_wall(eps, self.wavelength, x1)
            }
            ProfileKind::Sawtooth => -0.75 * eps * snapped_fract(x1 / self.wavelength),
            ProfileKind::QuasiPeriodic => {
                let t = 2.0 * PI * x1 / eps;
                eps / 3.0 * ((SQRT_2 * t).sin() + t.sin() - 2.25)
            }
            ProfileKind::BfsPatch => {
                let (a, b) = self.window.expect("bfs window");
                if x1 < a || x1 > b {
                    0.0
                } else {
                    cosine_wall(eps, self.wavelength, x1)
                }
            }
            ProfileKind::Tabulated => self.tabulated(x1),
        }
    }

    fn tabulated(&self, x1: f64) -> f64 {
        let s = &self.samples;
        let mut x = x1;
        if let Some(p) = self.period {
            let x0 = s[0].0;
            x = x0 + (x - x0).rem_euclid(p);
        }
        if x <= s[0].0 {
            return s[0].1;
        }
        if x >= s[s.len() - 1].0 {
            return s[s.len() - 1].1;
        }
        let k = s.partition_point(|p| p.0 <= x) - 1;
        let (xa, ya) = s[k];
        let (xb, yb) = s[k + 1];
        ya + (yb - ya) * (x - xa) / (xb - xa)
    }

    /// Left limit of the wall where it jumps at `x1`, `None` where it is
    /// continuous.
    pub fn jump_left_limit(&self, x1: f64) -> Option<f64> {
        match self.kind {
            ProfileKind::Sawtooth if on_integer(x1 / self.wavelength) => {
                Some(-0.75 * self.epsilon * self.modulation.eval(x1))
            }
            _ => None,
        }
    }

    pub fn has_jumps(&self) -> bool {
        self.kind == ProfileKind::Sawtooth
    }

    /// Modulation factor `beta(x1)`.
    pub fn beta(&self, x1: f64) -> f64 {
        self.modulation.eval(x1)
    }

    pub fn is_periodic(&self) -> bool {
        match self.kind {
            ProfileKind::Flat | ProfileKind::Sinusoidal | ProfileKind::Sawtooth => true,
            ProfileKind::Tabulated => self.period.is_some(),
            _ => false,
        }
    }

    /// Horizontal period of the roughness features.
    pub fn feature_period(&self) -> f64 {
        match self.kind {
            ProfileKind::Tabulated => self.period.unwrap_or(self.epsilon),
            _ => self.wavelength,
        }
    }

    /// Minimum of the wall over `[a, b]`, sampled densely.
    pub fn wall_min(&self, a: f64, b: f64) -> f64 {
        let n = (((b - a) / self.feature_period()).abs() * 256.0)
            .ceil()
            .max(256.0) as usize;
        (0..=n)
            .map(|i| self.wall(a + (b - a) * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// Maximum of the wall over `[a, b]`, sampled densely.
    pub fn wall_max(&self, a: f64, b: f64) -> f64 {
        let n = (((b - a) / self.feature_period()).abs() * 256.0)
            .ceil()
            .max(256.0) as usize;
        (0..=n)
            .map(|i| self.wall(a + (b - a) * i as f64 / n as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Unit-cell shape for periodic kinds, scaled by the roughness period.
    pub fn unit_cell(&self) -> Option<UnitCell> {
        let ratio = self.epsilon / self.wavelength;
        match self.kind {
            ProfileKind::Flat => Some(UnitCell::Flat),
            ProfileKind::Sinusoidal | ProfileKind::BfsPatch => {
                Some(UnitCell::Cosine { amplitude: ratio })
            }
            ProfileKind::Sawtooth => Some(UnitCell::Sawtooth {
                amplitude: 0.75 * ratio,
            }),
            _ => None,
        }
    }

    /// Homogenized slip amount `period * (chibar + H)` for a unit cell
    /// whose slip constant is `chibar`.
    pub fn homogenized_slip(&self, chibar: f64) -> Option<f64> {
        let cell = self.unit_cell()?;
        Some(self.wavelength * (chibar + cell.crest()))
    }
}

fn cosine_wall(eps: f64, wavelength: f64, x1: f64) -> f64 {
    0.5 * eps * ((2.0 * PI * x1 / wavelength).cos() - 1.0)
}

fn on_integer(t: f64) -> bool {
    (t - t.round()).abs() < FRACTION_SNAP
}

fn snapped_fract(t: f64) -> f64 {
    let r = t.round();
    if (t - r).abs() < FRACTION_SNAP {
        0.0
    } else {
        t - t.floor()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dense(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64)
    }

    #[test]
    fn sinusoidal_crest_and_trough() {
        let p = RoughnessProfile::sinusoidal(0.025).unwrap();
        assert_abs_diff_eq!(p.wall(0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.wall(0.0125), -0.025, epsilon = 1e-15);
        for x in dense(0.0, 1.0, 997) {
            let expected = 0.025 / 2.0 * ((2.0 * PI * x / 0.025).cos() - 1.0);
            assert_abs_diff_eq!(p.wall(x), expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn flat_is_zero() {
        let p = RoughnessProfile::flat(0.025);
        assert!(dense(-1.0, 3.0, 101).all(|x| p.wall(x) == 0.0));
    }

    #[test]
    fn quasi_periodic_formula_and_negative_supremum() {
        let eps = 0.025;
        let p = RoughnessProfile::new(ProfileKind::QuasiPeriodic, eps, ProfileParams::default())
            .unwrap();
        for x in dense(0.0, 1.0, 1013) {
            let t = 2.0 * PI * x / eps;
            let expected = eps / 3.0 * ((SQRT_2 * t).sin() + t.sin() - 2.25);
            assert_abs_diff_eq!(p.wall(x), expected, epsilon = 1e-15);
        }
        assert!(p.wall_max(0.0, 1.0) < 0.0);
    }

    #[test]
    fn modulation_scales_linearly() {
        let eps = 0.025;
        let p = RoughnessProfile::new(
            ProfileKind::ModulatedSinusoidal,
            eps,
            ProfileParams::default(),
        )
        .unwrap();
        // sin^2 vanishes at x1 = 0 so beta = 0.5 there; pick x1 = k / (2 sqrt 2) too.
        let x = 1.0 / (2.0 * SQRT_2);
        assert_abs_diff_eq!(p.beta(x), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.wall(x), 0.5 * p.wall_unmodulated(x), epsilon = 1e-15);
        for x in dense(0.0, 1.0, 500) {
            assert_eq!(p.wall(x), p.beta(x) * p.wall_unmodulated(x));
        }
    }

    #[test]
    fn sawtooth_formula() {
        let eps = 0.025;
        let p =
            RoughnessProfile::new(ProfileKind::Sawtooth, eps, ProfileParams::default()).unwrap();
        assert_eq!(p.wall(0.25), 0.0);
        assert_eq!(p.wall(0.275), 0.0);
        assert_abs_diff_eq!(p.wall(0.0125), -0.75 * 0.0125, epsilon = 1e-15);
        assert_abs_diff_eq!(p.depth, 0.75);
    }

    #[test]
    fn bfs_patch_is_flat_outside_window() {
        let p =
            RoughnessProfile::new(ProfileKind::BfsPatch, 0.1, ProfileParams::default()).unwrap();
        assert_abs_diff_eq!(p.wavelength, 0.25, epsilon = 1e-15);
        assert_eq!(p.wall(5.9), 0.0);
        assert_eq!(p.wall(16.1), 0.0);
        assert_abs_diff_eq!(p.wall(6.125), -0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(p.wall(7.5), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RoughnessProfile::sinusoidal(0.0).is_err());
        assert!(RoughnessProfile::sinusoidal(-1.0).is_err());
        let bad_wavelength = ProfileParams {
            wavelength: Some(0.0),
            ..Default::default()
        };
        assert!(RoughnessProfile::new(ProfileKind::Sinusoidal, 0.1, bad_wavelength).is_err());
        let one_sample = ProfileParams {
            samples: vec![(0.0, 0.0)],
            ..Default::default()
        };
        assert!(RoughnessProfile::new(ProfileKind::Tabulated, 0.1, one_sample).is_err());
    }

    #[test]
    fn tabulated_interpolates() {
        let params = ProfileParams {
            samples: vec![(0.0, 0.0), (0.5, -0.1), (1.0, 0.0)],
            period: Some(1.0),
            ..Default::default()
        };
        let p = RoughnessProfile::new(ProfileKind::Tabulated, 0.1, params).unwrap();
        assert_abs_diff_eq!(p.wall(0.25), -0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(p.wall(1.25), -0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(p.depth, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn unit_cell_matches_wall() {
        for kind in [
            ProfileKind::Sinusoidal,
            ProfileKind::Sawtooth,
            ProfileKind::Flat,
        ] {
            let p = RoughnessProfile::new(kind, 0.025, ProfileParams::default()).unwrap();
            let cell = p.unit_cell().unwrap();
            for x in dense(0.0, 0.2, 311) {
                let from_cell = p.wavelength * (cell.phi(x / p.wavelength) - cell.crest());
                assert_abs_diff_eq!(p.wall(x), from_cell, epsilon = 1e-14);
            }
            assert_abs_diff_eq!(cell.phi(0.0), cell.crest());
        }
        let cos = UnitCell::Cosine { amplitude: 1.0 };
        assert_abs_diff_eq!(cos.phi(1.0 - 1e-9), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn depth_bounds_and_periodicity() {
        for kind in [
            ProfileKind::Sinusoidal,
            ProfileKind::Sawtooth,
            ProfileKind::ModulatedSinusoidal,
            ProfileKind::QuasiPeriodic,
            ProfileKind::BfsPatch,
        ] {
            let p = RoughnessProfile::new(kind, 0.025, ProfileParams::default()).unwrap();
            let (a, b) = p.window.unwrap_or((0.0, 1.0));
            for x in dense(a, b, 4001) {
                let w = p.wall(x);
                assert!(w <= 0.0, "{kind:?} wall positive at {x}");
                assert!(
                    w >= -p.epsilon * p.depth - 1e-12,
                    "{kind:?} below depth at {x}"
                );
                if p.is_periodic() {
                    assert!((p.wall(x + p.wavelength) - w).abs() <= 1e-12);
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn periodic_kinds_repeat(eps in 0.01f64..0.2, x in -2.0f64..2.0) {
                for kind in [ProfileKind::Sinusoidal, ProfileKind::Sawtooth] {
                    let p = RoughnessProfile::new(kind, eps, ProfileParams::default()).unwrap();
                    let d = (p.wall(x + p.wavelength) - p.wall(x)).abs();
                    // sawtooth jumps at multiples of the period; skip points within snapping range
                    let t = x / p.wavelength;
                    if kind == ProfileKind::Sawtooth && (t - t.round()).abs() < 1e-6 {
                        continue;
                    }
                    prop_assert!(d <= 1e-12, "{:?}: {}", kind, d);
                }
            }

            #[test]
            fn walls_stay_below_crest_plane(eps in 0.01f64..0.2, x in -2.0f64..2.0) {
                for kind in [ProfileKind::Sinusoidal, ProfileKind::Sawtooth,
                             ProfileKind::ModulatedSinusoidal, ProfileKind::QuasiPeriodic] {
                    let p = RoughnessProfile::new(kind, eps, ProfileParams::default()).unwrap();
                    prop_assert!(p.wall(x) <= 0.0);
                    prop_assert!(p.wall(x) >= -eps * p.depth - 1e-12);
                }
            }
        }
    }
}
