//! Named test families used by the benchmarks, the acceptance suite and the CLI.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::hardfn::{hard_oracle, HardBounds, HardFunction, HardParams, IterInstance};
use crate::oracle::{DomainKind, OracleSpec};

/// Identifier of a test family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyId {
    /// `||x||^2 / 2`, L = 1.
    Quadratic,
    /// `sum_i (1 - cos x_i) + (1 - cos(x_1 + x_2)) / 2`, L = 2, infinitely many wells.
    Multiwell,
    /// `2 eps hub(x_1) + x_2^2 / 2` on the plane with `hub` the unit Huber function and
    /// start `(1/(2 eps) + 1/2, 0)`, so `f(x0) = 1` and L = 1 for every eps.
    HuberSlope,
    /// `sin x_1 cos x_2` on the plane, L = 1, bounded by B = 1; starts at the origin.
    Wave,
    /// `sin(3 x_1) cos(2 x_2) / 13` on the unit square, L = 1.
    ConstrainedWave,
    /// Normalized hard function of width n shifted to be nonnegative.
    Hard(u32),
}

impl FamilyId {
    /// All families with a fixed dimension report it here.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            FamilyId::Quadratic | FamilyId::Multiwell => None,
            _ => Some(2),
        }
    }

    /// Whether the family lives on the unit cube.
    pub fn constrained(&self) -> bool {
        matches!(self, FamilyId::ConstrainedWave)
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyId::Quadratic => write!(f, "quadratic"),
            FamilyId::Multiwell => write!(f, "multiwell"),
            FamilyId::HuberSlope => write!(f, "huber-slope"),
            FamilyId::Wave => write!(f, "wave"),
            FamilyId::ConstrainedWave => write!(f, "constrained-wave"),
            FamilyId::Hard(n) => write!(f, "hard-n{n}"),
        }
    }
}

impl FromStr for FamilyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(FamilyId::Quadratic),
            "multiwell" => Ok(FamilyId::Multiwell),
            "huber-slope" => Ok(FamilyId::HuberSlope),
            "wave" => Ok(FamilyId::Wave),
            "constrained-wave" => Ok(FamilyId::ConstrainedWave),
            _ => match s.strip_prefix("hard-n").and_then(|n| n.parse::<u32>().ok()) {
                Some(n @ 1..=3) => Ok(FamilyId::Hard(n)),
                _ => Err(Error::Precondition(format!(
                    "unknown family '{s}' (expected quadratic, multiwell, huber-slope, wave, constrained-wave, hard-n1, hard-n2 or hard-n3)"
                ))),
            },
        }
    }
}

/// A concrete member of a family: oracle plus a default start point.
#[derive(Debug, Clone)]
pub struct Family {
    pub id: FamilyId,
    pub oracle: OracleSpec,
    pub x0: Point,
}

/// Seed ITER instance used by the hard family of width n.
pub fn hard_seed(n: u32) -> Result<IterInstance> {
    match n {
        1 => IterInstance::new(1, vec![2, 2]),
        2 => IterInstance::new(2, vec![2, 3, 3, 4]),
        3 => IterInstance::new(3, vec![3, 6, 4, 4, 8, 5, 4, 3]),
        _ => Err(Error::Precondition(format!("hard families exist for n = 1, 2, 3, got {n}"))),
    }
}

/// Default start for hard families: the bottom of the leftmost dark-blue column, a
/// lattice point far from both PLS boxes.
pub fn hard_start(p: &HardParams) -> Point {
    vec![(p.kappa() - 1) as f64, 0.0]
}

/// A hard function wrapped as a nonnegative oracle, with its certified bounds.
#[derive(Debug, Clone)]
pub struct HardFamily {
    pub function: Arc<HardFunction>,
    pub oracle: OracleSpec,
    pub bounds: HardBounds,
}

/// Normalized hard oracle for the seed instance of width n, built once per process.
pub fn hard_family(n: u32) -> Result<HardFamily> {
    static CACHE: [OnceLock<HardFamily>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let inst = hard_seed(n)?;
    Ok(CACHE[(n - 1) as usize].get_or_init(|| hard_family_for(inst)).clone())
}

/// Normalized hard oracle for an arbitrary instance.
pub fn hard_family_for(inst: IterInstance) -> HardFamily {
    let function = Arc::new(HardFunction::new(inst, true));
    let (oracle, bounds) = hard_oracle(function.clone());
    HardFamily { function, oracle, bounds }
}

fn huber(x: f64) -> (f64, f64) {
    if x.abs() <= 1.0 {
        (0.5 * x * x, x)
    } else {
        (x.abs() - 0.5, x.signum())
    }
}

/// Builds the member of `id` for dimension `d` and accuracy `eps`.
pub fn build_family(id: FamilyId, d: usize, eps: f64) -> Result<Family> {
    if let Some(fixed) = id.fixed_dim() {
        if d != fixed {
            return Err(Error::Precondition(format!("family {id} is {fixed}-dimensional, got d = {d}")));
        }
    }
    if d < 2 {
        return Err(Error::Precondition(format!("need d >= 2, got {d}")));
    }
    let fam = match id {
        FamilyId::Quadratic => Family {
            id,
            oracle: OracleSpec::from_fns(d, 1.0, |x| 0.5 * x.iter().map(|c| c * c).sum::<f64>(), |x| x.to_vec()),
            x0: vec![1.0; d],
        },
        FamilyId::Multiwell => Family {
            id,
            oracle: OracleSpec::from_fns(
                d,
                2.0,
                |x| x.iter().map(|c| 1.0 - c.cos()).sum::<f64>() + 0.5 * (1.0 - (x[0] + x[1]).cos()),
                |x| {
                    let s = 0.5 * (x[0] + x[1]).sin();
                    let mut g: Vec<f64> = x.iter().map(|c| c.sin()).collect();
                    g[0] += s;
                    g[1] += s;
                    g
                },
            ),
            x0: (0..d).map(|i| 2.0 + 0.5 * i as f64).collect(),
        },
        FamilyId::HuberSlope => {
            if !(eps > 0.0 && eps <= 0.25) {
                return Err(Error::Precondition(format!("huber-slope needs 0 < eps <= 1/4, got {eps}")));
            }
            let s = 2.0 * eps;
            Family {
                id,
                oracle: OracleSpec::from_fns(
                    2,
                    1.0,
                    move |x| s * huber(x[0]).0 + 0.5 * x[1] * x[1],
                    move |x| vec![s * huber(x[0]).1, x[1]],
                ),
                x0: vec![1.0 / (2.0 * eps) + 0.5, 0.0],
            }
        }
        FamilyId::Wave => Family {
            id,
            oracle: OracleSpec::from_fns(2, 1.0, |x| x[0].sin() * x[1].cos(), |x| {
                vec![x[0].cos() * x[1].cos(), -x[0].sin() * x[1].sin()]
            })
            .with_bound(1.0),
            x0: vec![0.0, 0.0],
        },
        FamilyId::ConstrainedWave => Family {
            id,
            oracle: OracleSpec::from_fns(
                2,
                1.0,
                |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() / 13.0,
                |x| {
                    vec![
                        3.0 * (3.0 * x[0]).cos() * (2.0 * x[1]).cos() / 13.0,
                        -2.0 * (3.0 * x[0]).sin() * (2.0 * x[1]).sin() / 13.0,
                    ]
                },
            )
            .with_bound(1.0 / 13.0)
            .with_domain(DomainKind::UnitCube),
            x0: vec![0.5, 0.5],
        },
        FamilyId::Hard(n) => {
            let hf = hard_family(n)?;
            let x0 = hard_start(hf.function.params());
            Family { id, oracle: hf.oracle, x0 }
        }
    };
    Ok(fam)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for s in ["quadratic", "multiwell", "huber-slope", "wave", "constrained-wave", "hard-n1", "hard-n3"] {
            assert_eq!(s.parse::<FamilyId>().unwrap().to_string(), s);
        }
        assert!("hard-n4".parse::<FamilyId>().is_err());
        assert!("cubic".parse::<FamilyId>().is_err());
    }

    #[test]
    fn huber_slope_starts_at_one() {
        for eps in [0.1, 0.01, 0.001] {
            let f = build_family(FamilyId::HuberSlope, 2, eps).unwrap();
            assert!((f.oracle.value(&f.x0) - 1.0).abs() < 1e-12);
            let g = f.oracle.gradient(&f.x0).unwrap();
            assert!((g[0] - 2.0 * eps).abs() < 1e-15);
        }
    }

    #[test]
    fn analytic_gradients_match_differences() {
        for (id, d) in [(FamilyId::Quadratic, 3), (FamilyId::Multiwell, 3), (FamilyId::Wave, 2), (FamilyId::ConstrainedWave, 2)] {
            let f = build_family(id, d, 0.1).unwrap();
            let x: Vec<f64> = (0..d).map(|i| 0.3 + 0.17 * i as f64).collect();
            let g = f.oracle.gradient(&x).unwrap();
            for i in 0..d {
                let h = 1e-6;
                let mut p = x.clone();
                p[i] += h;
                let fp = f.oracle.value(&p);
                p[i] -= 2.0 * h;
                let fm = f.oracle.value(&p);
                assert!(((fp - fm) / (2.0 * h) - g[i]).abs() < 1e-7, "{id} axis {i}");
            }
        }
    }

    #[test]
    fn hard_family_is_nonnegative() {
        let h = hard_family(1).unwrap();
        for k in 0..500 {
            let x = [k as f64 * 0.37, k as f64 * 0.91];
            assert!(h.oracle.value(&x) >= 0.0);
        }
        assert!(h.oracle.smoothness > 0.0 && h.oracle.smoothness < (1u64 << 18) as f64);
    }
}
