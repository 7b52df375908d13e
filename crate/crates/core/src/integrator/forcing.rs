use crate::grid::{Grid, ScalarField, VectorField};
use serde::{Deserialize, Serialize};

/// Time-dependent body force `f` and heat source `g ≥ 0`.
pub trait Forcing: Send + Sync {
    /// Force sampled at nodes; boundary entries are ignored by the solver.
    fn force(&self, grid: &Grid, t: f64) -> VectorField;
    /// Nonnegative heat source sampled at nodes.
    fn heat(&self, grid: &Grid, t: f64) -> ScalarField;
    /// True when both sources vanish identically, letting callers skip work.
    fn is_zero(&self) -> bool {
        false
    }
}

/// Built-in forcing shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    #[default]
    Zero,
    /// Gaussian-in-space sources switched on by `sin²(πt/duration)` on
    /// `[0, duration]` and identically zero afterwards.
    Pulse {
        force: [f64; 2],
        heat: f64,
        duration: f64,
        center: [f64; 2],
        width: f64,
    },
}

impl ForcingSpec {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            ForcingSpec::Zero => Ok(()),
            ForcingSpec::Pulse { heat, duration, width, .. } => {
                if *heat < 0.0 {
                    Err(format!("pulse heat amplitude must be nonnegative (got {heat})"))
                } else if !(*duration > 0.0 && *width > 0.0) {
                    Err("pulse duration and width must be positive".into())
                } else {
                    Ok(())
                }
            }
        }
    }
}

impl ForcingSpec {
    fn envelope(&self, t: f64) -> f64 {
        match self {
            ForcingSpec::Zero => 0.0,
            ForcingSpec::Pulse { duration, .. } => {
                if (0.0..=*duration).contains(&t) {
                    (std::f64::consts::PI * t / duration).sin().powi(2)
                } else {
                    0.0
                }
            }
        }
    }
}

impl Forcing for ForcingSpec {
    fn force(&self, grid: &Grid, t: f64) -> VectorField {
        match self {
            ForcingSpec::Pulse { force, center, width, .. } if self.envelope(t) > 0.0 => {
                let e = self.envelope(t);
                let shape = grid.sample(|x, y| gaussian(x, y, center, *width) * e);
                VectorField {
                    x: shape.iter().map(|s| s * force[0]).collect(),
                    y: shape.iter().map(|s| s * force[1]).collect(),
                }
            }
            _ => VectorField::zeros(grid.len()),
        }
    }

    fn heat(&self, grid: &Grid, t: f64) -> ScalarField {
        match self {
            ForcingSpec::Pulse { heat, center, width, .. } if self.envelope(t) > 0.0 => {
                let e = self.envelope(t);
                grid.sample(|x, y| heat * gaussian(x, y, center, *width) * e)
            }
            _ => vec![0.0; grid.len()],
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            ForcingSpec::Zero => true,
            ForcingSpec::Pulse { force, heat, .. } => force[0] == 0.0 && force[1] == 0.0 && *heat == 0.0,
        }
    }
}

fn gaussian(x: f64, y: f64, c: &[f64; 2], w: f64) -> f64 {
    let r2 = (x - c[0]).powi(2) + (y - c[1]).powi(2);
    (-r2 / (2.0 * w * w)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_is_compact_in_time_and_nonnegative() {
        let g = Grid::unit_square(6).unwrap();
        let p = ForcingSpec::Pulse { force: [1.0, 0.0], heat: 2.0, duration: 1.0, center: [0.5, 0.5], width: 0.2 };
        assert!(p.validate().is_ok());
        assert!(p.heat(&g, 0.5).iter().all(|&h| h > 0.0));
        assert!(p.heat(&g, 1.5).iter().all(|&h| h == 0.0));
        assert!(p.force(&g, 2.0).x.iter().all(|&f| f == 0.0));
        assert!(ForcingSpec::Zero.is_zero());
    }
}
