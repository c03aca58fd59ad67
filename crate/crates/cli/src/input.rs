//! Parsers for command-line values and input files.

use std::path::Path;

use dynfg::elim::parse_ordering_text;
use dynfg::robot::{load_urdf, models};
use dynfg::{OrderingChoice, OrderingTag, RobotModel};
use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

use crate::CliError;

/// Comma-separated floats, e.g. `0.5,-1,2e-3`. Whitespace around entries is ignored.
pub fn parse_vector(s: &str) -> Result<Vec<f64>, CliError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            let t = t.trim();
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(CliError::Input(format!("non-finite value `{t}`"))),
                Err(_) => Err(CliError::Input(format!("`{t}` is not a number"))),
            }
        })
        .collect()
}

pub fn parse_vector_of_len(s: &str, n: usize, what: &str) -> Result<DVector<f64>, CliError> {
    let v = parse_vector(s)?;
    if v.len() != n {
        return Err(CliError::Input(format!(
            "--{what} has {} entries, expected {n}",
            v.len()
        )));
    }
    Ok(DVector::from_vec(v))
}

pub fn parse_gravity(s: &str) -> Result<nalgebra::Vector3<f64>, CliError> {
    let v = parse_vector_of_len(s, 3, "gravity")?;
    Ok(nalgebra::Vector3::new(v[0], v[1], v[2]))
}

/// Parses `--known` tokens such as `qdd:1 tau:2 tau:3` into per-joint
/// "acceleration is given" flags. Every joint must be named exactly once.
pub fn parse_known<S: AsRef<str>>(tokens: &[S], n: usize) -> Result<Vec<bool>, CliError> {
    let mut flags: Vec<Option<bool>> = vec![None; n];
    for tok in tokens {
        for part in tok.as_ref().split([',', ' ']).filter(|p| !p.is_empty()) {
            let (kind, idx) = part
                .split_once(':')
                .ok_or_else(|| CliError::Input(format!("known flag `{part}` is not `kind:joint`")))?;
            let accel = match kind {
                "qdd" => true,
                "tau" => false,
                _ => return Err(CliError::Input(format!("known kind `{kind}` must be qdd or tau"))),
            };
            let j: usize = idx
                .parse()
                .map_err(|_| CliError::Input(format!("joint index `{idx}` is not a positive integer")))?;
            if j == 0 || j > n {
                return Err(CliError::Input(format!("joint {j} out of range 1..={n}")));
            }
            if flags[j - 1].replace(accel).is_some() {
                return Err(CliError::Input(format!("joint {j} listed twice")));
            }
        }
    }
    flags
        .into_iter()
        .enumerate()
        .map(|(i, f)| f.ok_or_else(|| CliError::Input(format!("joint {} has neither qdd nor tau known", i + 1))))
        .collect()
}

/// `rnea`, `md`, ..., or `custom:<file>`.
pub fn parse_ordering(s: &str) -> Result<OrderingChoice, CliError> {
    if let Some(path) = s.strip_prefix("custom:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read ordering file {path}: {e}")))?;
        return parse_ordering_file(&text);
    }
    OrderingTag::from_name(s)
        .and_then(OrderingChoice::from_tag)
        .ok_or_else(|| CliError::Input(format!("unknown ordering `{s}`")))
}

pub fn parse_ordering_file(text: &str) -> Result<OrderingChoice, CliError> {
    let keys = parse_ordering_text(text).map_err(|e| CliError::Input(e.to_string()))?;
    if keys.is_empty() {
        return Err(CliError::Input("ordering file lists no variables".into()));
    }
    Ok(OrderingChoice::Custom(keys))
}

pub fn load_urdf_file(path: &Path) -> Result<RobotModel, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    load_urdf(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Built-in robot names (`pendulum`, `r<N>`, `puma6`, `cartpole`) or a URDF path.
pub fn resolve_robot(name: &str) -> Result<RobotModel, CliError> {
    match name {
        "pendulum" => return Ok(models::pendulum(1.0, 1.0)),
        "puma6" => return Ok(models::puma_like()),
        "cartpole" => return Ok(models::cart_pole(1.0, 0.3, 0.5)),
        _ => {}
    }
    if let Some(n) = name.strip_prefix('r').and_then(|d| d.parse::<usize>().ok()) {
        if (1..=64).contains(&n) {
            return Ok(models::planar_chain(n));
        }
        return Err(CliError::Input(format!("planar chain `{name}` needs 1..=64 links")));
    }
    load_urdf_file(Path::new(name))
}

/// Seeded random state: `q ∈ [−π, π]`, every other quantity in `[−1, 1]`.
pub struct StateSampler {
    rng: StdRng,
}

impl StateSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: StdRng::seed_from_u64(seed),
        }
    }

    pub fn angles(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| {
            self.rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI)
        })
    }

    pub fn unit(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.rng.random_range(-1.0..=1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors() {
        assert_eq!(parse_vector("0, -1.5,2e-3").unwrap(), vec![0.0, -1.5, 2e-3]);
        assert_eq!(parse_vector("").unwrap(), Vec::<f64>::new());
        assert!(parse_vector("1,,2").is_err());
        assert!(parse_vector("nan").is_err());
        assert!(parse_vector("inf").is_err());
        assert!(parse_vector_of_len("1,2", 3, "q").is_err());
    }

    #[test]
    fn known_flags() {
        assert_eq!(
            parse_known(&["qdd:1", "tau:2", "tau:3"], 3).unwrap(),
            vec![true, false, false]
        );
        assert_eq!(parse_known(&["tau:2,qdd:1"], 2).unwrap(), vec![true, false]);
        assert!(parse_known(&["qdd:1"], 2).is_err());
        assert!(parse_known(&["qdd:1", "tau:1"], 1).is_err());
        assert!(parse_known(&["qdd:0"], 1).is_err());
        assert!(parse_known(&["F:1"], 1).is_err());
        assert!(parse_known(&["qdd1"], 1).is_err());
    }

    #[test]
    fn orderings() {
        assert_eq!(parse_ordering("colamd").unwrap(), OrderingChoice::ColamdLike);
        assert!(parse_ordering("custom").is_err());
        assert!(parse_ordering("amd").is_err());
        let c = parse_ordering_file("tau:1\n# done\nwrench:1\n").unwrap();
        assert!(matches!(c, OrderingChoice::Custom(ref k) if k.len() == 2));
        assert!(parse_ordering_file("\n").is_err());
    }

    #[test]
    fn builtin_robots() {
        assert_eq!(resolve_robot("r3").unwrap().dof(), 3);
        assert_eq!(resolve_robot("puma6").unwrap().dof(), 6);
        assert!(resolve_robot("r0").is_err());
    }

    #[test]
    fn sampler_is_seeded() {
        let a = StateSampler::new(7).angles(4);
        let b = StateSampler::new(7).angles(4);
        assert_eq!(a, b);
        assert!(a.iter().all(|x| x.abs() <= std::f64::consts::PI));
    }
}
