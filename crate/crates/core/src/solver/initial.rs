use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Admissible amplitude range of a nucleus.
pub const MU_RANGE: (f64, f64) = (0.9, 1.0);
/// Admissible range of each displacement component.
pub const ETA_RANGE: (f64, f64) = (-0.025, 0.025);
/// Nominal nucleus centers.
pub const CENTERS: [[f64; 2]; 4] = [[0.25, 0.5], [0.75, 0.5], [0.5, 0.25], [0.5, 0.75]];

const SHARPNESS: f64 = 36.0;
const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nucleus {
    pub mu: f64,
    pub eta: [f64; 2],
}

/// Amplitudes and displacements of the four nuclei.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomInputs {
    pub nuclei: [Nucleus; 4],
}

fn in_range(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo - RANGE_SLACK && v <= hi + RANGE_SLACK
}

impl RandomInputs {
    pub fn new(nuclei: [Nucleus; 4]) -> Result<Self> {
        let theta = RandomInputs { nuclei };
        theta.validate()?;
        Ok(theta)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, n) in self.nuclei.iter().enumerate() {
            if !in_range(n.mu, MU_RANGE) {
                return Err(Error::invalid(format!(
                    "nucleus {} amplitude {} outside [{}, {}]",
                    k + 1,
                    n.mu,
                    MU_RANGE.0,
                    MU_RANGE.1
                )));
            }
            for &e in &n.eta {
                if !in_range(e, ETA_RANGE) {
                    return Err(Error::invalid(format!(
                        "nucleus {} displacement {} outside [{}, {}]",
                        k + 1,
                        e,
                        ETA_RANGE.0,
                        ETA_RANGE.1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Layout `[mu1, eta1x, eta1y, mu2, ...]`.
    pub fn from_array(v: [f64; 12]) -> Result<Self> {
        let mut nuclei = [Nucleus {
            mu: 0.0,
            eta: [0.0; 2],
        }; 4];
        for (k, n) in nuclei.iter_mut().enumerate() {
            n.mu = v[3 * k];
            n.eta = [v[3 * k + 1], v[3 * k + 2]];
        }
        RandomInputs::new(nuclei)
    }

    pub fn to_array(&self) -> [f64; 12] {
        let mut v = [0.0; 12];
        for (k, n) in self.nuclei.iter().enumerate() {
            v[3 * k] = n.mu;
            v[3 * k + 1] = n.eta[0];
            v[3 * k + 2] = n.eta[1];
        }
        v
    }

    /// Maps twelve numbers in `[0, 1)` affinely onto the parameter box.
    pub fn from_unit(v: [f64; 12]) -> Self {
        let lerp = |t: f64, (lo, hi): (f64, f64)| lo + (hi - lo) * t;
        let mut out = [0.0; 12];
        for (k, t) in v.iter().enumerate() {
            out[k] = if k % 3 == 0 {
                lerp(*t, MU_RANGE)
            } else {
                lerp(*t, ETA_RANGE)
            };
        }
        RandomInputs::from_array(out).expect("unit cube maps into the parameter box")
    }

    /// Center of the parameter box: equal amplitudes, no displacement.
    pub fn center() -> Self {
        RandomInputs {
            nuclei: [Nucleus {
                mu: 0.95,
                eta: [0.0, 0.0],
            }; 4],
        }
    }

    /// Fixed reference sample for time-history runs.
    pub fn reference_sample() -> Self {
        RandomInputs::from_array([
            0.9815, 0.0072, -0.0039, //
            0.9276, 0.0232, 0.0208, //
            0.9162, -0.0220, 0.0041, //
            0.9417, -0.0099, 0.0118,
        ])
        .expect("reference sample lies in the parameter box")
    }
}

/// Unclamped four-nucleus profile at `(x, y)`. Accepts any amplitudes, so a
/// nucleus can be switched off with `mu = 0`.
pub fn nuclei_profile(x: f64, y: f64, nuclei: &[Nucleus; 4]) -> f64 {
    let mut s = 0.0;
    for (n, c) in nuclei.iter().zip(CENTERS.iter()) {
        let dx = x - c[0] - n.eta[0];
        let dy = y - c[1] - n.eta[1];
        s += n.mu * (-SHARPNESS * (dx * dx + dy * dy)).exp();
    }
    1.0 - 2.0 * s
}

/// Initial order parameter on every node, projected onto `[-1, 1]`.
pub fn initial_condition(theta: &RandomInputs, grid: &Grid) -> Result<Field> {
    theta.validate()?;
    Ok(Field::from_fn(grid, |x, y| {
        nuclei_profile(x, y, &theta.nuclei).clamp(-1.0, 1.0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn single_nucleus_reaches_minus_one() {
        let mut nuclei = [Nucleus {
            mu: 0.0,
            eta: [0.0; 2],
        }; 4];
        nuclei[0] = Nucleus {
            mu: 1.0,
            eta: [0.01, -0.02],
        };
        let v = nuclei_profile(0.25 + 0.01, 0.5 - 0.02, &nuclei);
        assert_eq!(v, -1.0);
    }

    #[test]
    fn far_corner_is_nearly_pure() {
        let theta = RandomInputs {
            nuclei: [Nucleus {
                mu: 0.9,
                eta: [0.0; 2],
            }; 4],
        };
        let v = nuclei_profile(0.0, 0.0, &theta.nuclei);
        // nearest centers sit at squared distance 0.3125
        let bound = 1.0 - 2.0 * 4.0 * 0.9 * (-36.0f64 * 0.3125).exp();
        assert!(v >= bound && v < 1.0);
        assert!((1.0 - v) < 1e-2);
    }

    #[test]
    fn rejects_out_of_box_inputs() {
        let mut a = RandomInputs::center().to_array();
        a[0] = 0.89;
        assert!(RandomInputs::from_array(a).is_err());
        let mut a = RandomInputs::center().to_array();
        a[4] = 0.03;
        assert!(RandomInputs::from_array(a).is_err());
    }

    #[test]
    fn reference_sample_has_four_nuclei() {
        let theta = RandomInputs::reference_sample();
        for cells in [32, 128] {
            let g = build_grid(cells, 0.25).unwrap();
            let u = initial_condition(&theta, &g).unwrap();
            // adjacent nuclei overlap below zero, so the u < 0 set is one ring
            // with four lobes; the lobes separate below -1/2
            assert_eq!(u.negative_components(), 1, "h = 1/{cells}");
            assert_eq!(u.components_below(-0.5), 4, "h = 1/{cells}");
            assert!(u.min() >= -1.0 && u.max() <= 1.0);
        }
    }

    #[test]
    fn unit_map_covers_box_corners() {
        let lo = RandomInputs::from_unit([0.0; 12]);
        assert_eq!(lo.nuclei[2].mu, 0.9);
        assert_eq!(lo.nuclei[2].eta, [-0.025, -0.025]);
        let hi = RandomInputs::from_unit([1.0; 12]);
        assert!((hi.nuclei[1].mu - 1.0).abs() < 1e-15);
    }
}
