//! Flat `key = value` run configuration with dotted sections
//! (`instance.*`, `wed.*`, `opt.*`, `sweep.*`).
//!
//! Model choices use call syntax, e.g. `instance.kernel.name = gaussian(0.1)`
//! or `instance.beta.name = linear_plus_sign(1, 0.5)`. Lines starting with `#`
//! are comments. Unknown keys are rejected with the closest valid name.

use std::collections::BTreeMap;

use crate::error::{Result, WedError};
use crate::experiments::SweepSettings;
use crate::functional::{Quadrature, WedConfig};
use crate::grid::{SpatialGrid, StateVector};
use crate::kernel::Kernel;
use crate::models::{ConvexPotential, JumpSelection, Mobility};
use crate::optimizer::{Method, OptimizeConfig};
use crate::problem::{DissipationModel, ProblemInstance};
use crate::reference::{GEvaluation, StepperConfig};

pub const KNOWN_KEYS: &[&str] = &[
    "instance.N",
    "instance.T",
    "instance.M",
    "instance.alpha",
    "instance.length",
    "instance.g.name",
    "instance.g.table",
    "instance.kernel.name",
    "instance.kernel.samples",
    "instance.beta.name",
    "instance.beta.selection",
    "instance.u0.name",
    "instance.u0.table",
    "wed.epsilon",
    "wed.lambda",
    "wed.quadrature",
    "opt.method",
    "opt.g_tol",
    "opt.max_iters",
    "opt.armijo_c",
    "opt.backtrack",
    "opt.memory",
    "opt.seed",
    "sweep.epsilons",
    "sweep.lambdas",
    "sweep.reference",
    "sweep.newton_tol",
    "sweep.newton_max",
    "sweep.warm_start",
    "sweep.R",
    "sweep.samples",
];

fn check_key(key: &str) -> Result<()> {
    if KNOWN_KEYS.contains(&key) {
        return Ok(());
    }
    let nearest = KNOWN_KEYS
        .iter()
        .min_by_key(|k| strsim::levenshtein(k, key))
        .expect("non-empty key list");
    Err(WedError::config(format!("unknown key '{key}' (did you mean '{nearest}'?)")))
}

/// Validated key-value pairs; later assignments override earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(WedError::config(format!("line {}: expected 'key = value', got '{line}'", lineno + 1)));
            };
            cfg.set(key.trim(), value.trim())
                .map_err(|e| WedError::config(format!("line {}: {}", lineno + 1, strip_prefix(&e))))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        check_key(key)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Canonical text form, one sorted assignment per line.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| WedError::config(format!("{key}: cannot parse '{v}'"))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(|v| parse_list(key, v)).transpose()
    }

    pub fn steps(&self) -> Result<usize> {
        self.parsed("instance.M", 128)
    }

    pub fn instance(&self) -> Result<ProblemInstance> {
        let n: usize = self.parsed("instance.N", 32)?;
        let length: f64 = self.parsed("instance.length", 1.0)?;
        let horizon: f64 = self.parsed("instance.T", 1.0)?;
        let alpha: f64 = self.parsed("instance.alpha", 1.0)?;
        let grid = SpatialGrid::new(n, length)?;

        let mobility = match (self.get("instance.g.name"), self.get("instance.g.table")) {
            (Some(_), Some(_)) => return Err(WedError::config("set only one of instance.g.name and instance.g.table")),
            (_, Some(table)) => Mobility::table(&parse_pairs("instance.g.table", table)?)?,
            (name, None) => {
                let (name, args) = parse_call("instance.g.name", name.unwrap_or("unit"))?;
                expect_args("instance.g.name", &name, &args, 0)?;
                match name.as_str() {
                    "unit" => Mobility::unit(),
                    "quadratic" => Mobility::quadratic(),
                    "bounded" => Mobility::bounded(alpha),
                    other => {
                        return Err(WedError::config(format!(
                            "instance.g.name: unknown model '{other}' (expected unit, quadratic or bounded)"
                        )))
                    }
                }
            }
        };

        let kernel = match (self.get("instance.kernel.name"), self.get("instance.kernel.samples")) {
            (Some(_), Some(_)) => {
                return Err(WedError::config("set only one of instance.kernel.name and instance.kernel.samples"))
            }
            (_, Some(samples)) => Kernel::from_samples(parse_list("instance.kernel.samples", samples)?)?,
            (name, None) => {
                let (name, args) = parse_call("instance.kernel.name", name.unwrap_or("delta"))?;
                match name.as_str() {
                    "delta" => {
                        expect_args("instance.kernel.name", &name, &args, 0)?;
                        Kernel::delta(&grid)
                    }
                    "zero" => {
                        expect_args("instance.kernel.name", &name, &args, 0)?;
                        Kernel::zero(&grid)
                    }
                    "gaussian" => {
                        expect_args("instance.kernel.name", &name, &args, 1)?;
                        Kernel::gaussian(&grid, args[0])?
                    }
                    other => {
                        return Err(WedError::config(format!(
                            "instance.kernel.name: unknown kernel '{other}' (expected delta, zero or gaussian(sigma))"
                        )))
                    }
                }
            }
        };

        let (name, args) = parse_call("instance.beta.name", self.get("instance.beta.name").unwrap_or("zero"))?;
        let mut potential = match name.as_str() {
            "zero" => {
                expect_args("instance.beta.name", &name, &args, 0)?;
                ConvexPotential::zero()
            }
            "linear" => {
                expect_args("instance.beta.name", &name, &args, 1)?;
                ConvexPotential::linear(args[0])?
            }
            "linear_plus_sign" => {
                expect_args("instance.beta.name", &name, &args, 2)?;
                ConvexPotential::linear_plus_sign(args[0], args[1])?
            }
            other => {
                return Err(WedError::config(format!(
                    "instance.beta.name: unknown potential '{other}' (expected zero, linear(a) or linear_plus_sign(a, b))"
                )))
            }
        };
        if let Some(sel) = self.get("instance.beta.selection") {
            let selection = match sel {
                "midpoint" => Some(JumpSelection::Midpoint),
                "lower" => Some(JumpSelection::Lower),
                "upper" => Some(JumpSelection::Upper),
                "none" => None,
                other => {
                    return Err(WedError::config(format!(
                        "instance.beta.selection: unknown selection '{other}' (expected midpoint, lower, upper or none)"
                    )))
                }
            };
            potential = potential.with_selection(selection);
        }

        let u0 = match (self.get("instance.u0.name"), self.get("instance.u0.table")) {
            (Some(name), table) if !name.starts_with("table") => {
                if table.is_some() {
                    return Err(WedError::config("instance.u0.table is only used with instance.u0.name = table"));
                }
                let (name, args) = parse_call("instance.u0.name", name)?;
                match name.as_str() {
                    "sine" => {
                        expect_args("instance.u0.name", &name, &args, 1)?;
                        let k = args[0];
                        if !(k >= 1.0 && k.fract() == 0.0) {
                            return Err(WedError::config(format!("instance.u0.name: sine(k) needs a positive integer, got {k}")));
                        }
                        grid.sine_mode(k as usize)
                    }
                    "bump" => {
                        expect_args("instance.u0.name", &name, &args, 0)?;
                        grid.sample(|x| {
                            let s = x / length;
                            16.0 * s * s * (1.0 - s) * (1.0 - s)
                        })
                    }
                    other => {
                        return Err(WedError::config(format!(
                            "instance.u0.name: unknown initial datum '{other}' (expected sine(k), bump or table)"
                        )))
                    }
                }
            }
            (_, Some(table)) => StateVector::new(parse_list("instance.u0.table", table)?),
            (Some(_), None) => return Err(WedError::config("instance.u0.name = table needs instance.u0.table")),
            (None, None) => grid.sine_mode(1),
        };

        let diss = DissipationModel::new(mobility, alpha, kernel)?;
        ProblemInstance::new(grid, diss, potential, u0, horizon)
    }

    pub fn wed(&self) -> Result<WedConfig> {
        let quadrature = Quadrature::parse(self.get("wed.quadrature").unwrap_or("right-endpoint"))?;
        Ok(WedConfig::new(self.parsed("wed.epsilon", 0.25)?, self.parsed("wed.lambda", 0.0)?, self.steps()?)?
            .with_quadrature(quadrature))
    }

    pub fn optimize(&self) -> Result<OptimizeConfig> {
        let d = OptimizeConfig::default();
        let method = match self.get("opt.method") {
            Some(m) => Method::parse(m)?,
            None => d.method,
        };
        let opt = OptimizeConfig {
            method,
            g_tol: self.parsed("opt.g_tol", d.g_tol)?,
            max_iters: self.parsed("opt.max_iters", d.max_iters)?,
            armijo_c: self.parsed("opt.armijo_c", d.armijo_c)?,
            backtrack: self.parsed("opt.backtrack", d.backtrack)?,
            memory: self.parsed("opt.memory", d.memory)?,
            seed: self.parsed("opt.seed", d.seed)?,
        };
        opt.validate()?;
        Ok(opt)
    }

    pub fn stepper(&self) -> Result<StepperConfig> {
        let d = StepperConfig::new(self.steps()?);
        let g_evaluation = match self.get("sweep.reference") {
            Some(s) => GEvaluation::parse(s)?,
            None => d.g_evaluation,
        };
        let cfg = StepperConfig {
            steps: d.steps,
            newton_tol: self.parsed("sweep.newton_tol", d.newton_tol)?,
            newton_max: self.parsed("sweep.newton_max", d.newton_max)?,
            g_evaluation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sweep(&self) -> Result<SweepSettings> {
        Ok(SweepSettings {
            steps: self.steps()?,
            reference: self.stepper()?,
            warm_start: self.parsed("sweep.warm_start", true)?,
        })
    }

    pub fn epsilons(&self) -> Result<Vec<f64>> {
        Ok(self.list("sweep.epsilons")?.unwrap_or_else(|| vec![0.5, 0.25, 0.125, 0.0625, 0.03125]))
    }

    pub fn lambdas(&self) -> Result<Vec<f64>> {
        Ok(self.list("sweep.lambdas")?.unwrap_or_else(|| vec![0.1, 0.01, 0.0]))
    }

    pub fn radius(&self) -> Result<f64> {
        self.parsed("sweep.R", 1.0)
    }

    pub fn samples(&self) -> Result<usize> {
        self.parsed("sweep.samples", 1000)
    }

    pub fn seed(&self) -> Result<u64> {
        self.parsed("opt.seed", 0)
    }
}

fn strip_prefix(e: &WedError) -> String {
    match e {
        WedError::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

fn parse_number(key: &str, s: &str) -> Result<f64> {
    let s = s.trim();
    let v: f64 = s.parse().map_err(|_| WedError::config(format!("{key}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(WedError::config(format!("{key}: '{s}' is not finite")));
    }
    Ok(v)
}

/// Comma- or whitespace-separated numbers.
pub fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    let items: Vec<&str> = s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
    if items.is_empty() {
        return Err(WedError::config(format!("{key}: empty list")));
    }
    items.into_iter().map(|t| parse_number(key, t)).collect()
}

fn parse_pairs(key: &str, s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (a, b) = t
                .split_once(':')
                .ok_or_else(|| WedError::config(format!("{key}: expected 's:g' pairs, got '{}'", t.trim())))?;
            Ok((parse_number(key, a)?, parse_number(key, b)?))
        })
        .collect()
}

/// `name` or `name(a, b, ...)`.
pub fn parse_call(key: &str, s: &str) -> Result<(String, Vec<f64>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s.to_string(), Vec::new())),
        Some(open) => {
            let inner = s[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| WedError::config(format!("{key}: missing ')' in '{s}'")))?;
            let args = if inner.trim().is_empty() { Vec::new() } else { parse_list(key, inner)? };
            Ok((s[..open].trim().to_string(), args))
        }
    }
}

fn expect_args(key: &str, name: &str, args: &[f64], n: usize) -> Result<()> {
    if args.len() != n {
        return Err(WedError::config(format!("{key}: '{name}' takes {n} argument(s), got {}", args.len())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_suggests_nearest() {
        let err = RunConfig::parse("instance.N = 8\nwed.epsilom = 0.1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("wed.epsilom") && msg.contains("wed.epsilon"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn call_syntax() {
        assert_eq!(parse_call("k", "gaussian(0.1)").unwrap(), ("gaussian".into(), vec![0.1]));
        assert_eq!(parse_call("k", "linear_plus_sign(1, 0.5)").unwrap(), ("linear_plus_sign".into(), vec![1.0, 0.5]));
        assert_eq!(parse_call("k", "bump").unwrap(), ("bump".into(), vec![]));
        assert!(parse_call("k", "sine(1").is_err());
        assert!(parse_call("k", "sine(x)").is_err());
    }

    #[test]
    fn builds_an_instance_with_defaults_and_overrides() {
        let mut cfg = RunConfig::parse(
            "# kirchhoff type\ninstance.N = 8\ninstance.g.name = quadratic\ninstance.kernel.name = gaussian(0.1)\n\
             instance.beta.name = linear(1)\ninstance.u0.name = bump\nwed.epsilon = 0.5\n",
        )
        .unwrap();
        cfg.set("wed.epsilon", "0.125").unwrap();
        let inst = cfg.instance().unwrap();
        assert_eq!(inst.n(), 8);
        assert_eq!(inst.potential.name(), "linear(1)");
        let x = inst.grid.nodes()[3];
        assert!((inst.u0[3] - 16.0 * x * x * (1.0 - x) * (1.0 - x)).abs() < 1e-15);
        let wed = cfg.wed().unwrap();
        assert_eq!(wed.epsilon, 0.125);
        assert_eq!(wed.steps, 128);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "instance.g.name = cubic",
            "instance.kernel.name = gaussian",
            "instance.u0.name = sine(0)",
            "instance.u0.name = table",
            "instance.N = 1",
            "opt.g_tol = -1",
            "instance.beta.selection = maybe",
        ] {
            let cfg = RunConfig::parse(text).unwrap();
            let res = cfg.instance().map(|_| ()).and_then(|_| cfg.optimize().map(|_| ()));
            assert!(matches!(res, Err(WedError::Config(_))), "{text}");
        }
    }
}
