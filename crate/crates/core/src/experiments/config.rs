//! Flat `key = value` sweep configuration.
//!
//! ```text
//! # expansion, F versus N_b
//! task = expansion
//! shape = sinusoidal
//! T = 25
//! N_p = 2
//! axis = N_b
//! axis_values = 0:16
//! ```
//!
//! Lists are comma separated. `a:b` is the inclusive integer range and
//! `a:b:n` the inclusive linear grid of `n` points.

use std::collections::BTreeMap;

use super::{Axis, SweepSpec, TimeStep};
use crate::error::{Error, Result};
use crate::potentials::{Shape, Task, TaskKind};

const KEYS: &[&str] = &[
    "task",
    "shape",
    "T",
    "omega_i",
    "omega_f",
    "x0i",
    "x0f",
    "h_i",
    "h_f",
    "lambda",
    "N_p",
    "N_b",
    "tau",
    "axis",
    "axis_values",
    "threshold",
    "tail_bound",
    "n_points",
    "dt",
    "verify_oracle",
    "workers",
];

fn config_error(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("`{key} = {value}`: {what}"))
}

/// Parses one value list: `1, 2, 5`, `0:16` or `0:2:9`.
pub fn parse_list(key: &str, text: &str) -> Result<Vec<f64>> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                config_error(key, text, &format!("`{}` is not a finite number", s.trim()))
            })
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(number).collect(),
        [lo, hi] => {
            let (lo, hi) = (number(lo)?, number(hi)?);
            if lo.fract() != 0.0 || hi.fract() != 0.0 || hi < lo {
                return Err(config_error(key, text, "`a:b` needs integers a <= b"));
            }
            Ok((lo as i64..=hi as i64).map(|v| v as f64).collect())
        }
        [lo, hi, count] => {
            let (lo, hi) = (number(lo)?, number(hi)?);
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| config_error(key, text, "point count must be an integer"))?;
            match count {
                0 => Err(config_error(key, text, "empty grid")),
                1 => Ok(vec![lo]),
                _ => Ok((0..count)
                    .map(|i| {
                        if i + 1 == count {
                            hi
                        } else {
                            lo + (hi - lo) * i as f64 / (count - 1) as f64
                        }
                    })
                    .collect()),
            }
        }
        _ => Err(config_error(key, text, "expected a list, `a:b` or `a:b:n`")),
    }
}

fn counts(key: &str, text: &str) -> Result<Vec<usize>> {
    parse_list(key, text)?
        .into_iter()
        .map(|v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(config_error(key, text, "expected non-negative integers"))
            }
        })
        .collect()
}

struct Entries {
    map: BTreeMap<String, String>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn real(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| config_error(key, &v, "not a finite number"))
            })
            .transpose()
    }

    fn real_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| config_error(key, &v, "not a non-negative integer"))
            })
            .transpose()
    }

    fn reject(&mut self, keys: &[&str], task: TaskKind) -> Result<()> {
        for key in keys {
            if self.map.contains_key(*key) {
                return Err(Error::Config(format!("`{key}` does not apply to {task}")));
            }
        }
        Ok(())
    }
}

/// Reads a sweep configuration. Unknown or duplicated keys are errors.
pub fn parse_config(text: &str) -> Result<SweepSpec> {
    let mut map = BTreeMap::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", number + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!(
                "line {}: unknown key `{key}`",
                number + 1
            )));
        }
        if map
            .insert(key.to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(Error::Config(format!(
                "line {}: `{key}` given twice",
                number + 1
            )));
        }
    }
    let mut e = Entries { map };

    let kind: TaskKind = e
        .take("task")
        .ok_or_else(|| Error::Config("missing `task`".into()))?
        .parse()?;
    let shape: Shape = match e.take("shape") {
        Some(s) => s.parse()?,
        None => Shape::Sinusoidal,
    };
    let task = match kind {
        TaskKind::Expansion => {
            e.reject(&["x0i", "x0f", "h_i", "h_f"], kind)?;
            Task::Expansion {
                omega_i: e.real_or("omega_i", 1.0)?,
                omega_f: e.real_or("omega_f", 0.01)?,
                anharmonicity: e.real_or("lambda", 1.0)?,
            }
        }
        TaskKind::Transport => {
            e.reject(&["omega_i", "omega_f", "h_i", "h_f"], kind)?;
            Task::Transport {
                x0_i: e.real_or("x0i", 0.0)?,
                x0_f: e.real_or("x0f", 90.0)?,
                omega: 1.0,
                anharmonicity: e.real_or("lambda", 1.0)?,
            }
        }
        TaskKind::Splitting => {
            e.reject(&["omega_i", "omega_f", "x0i", "x0f", "lambda"], kind)?;
            Task::Splitting {
                h_i: e.real_or("h_i", 0.0)?,
                h_f: e.real_or("h_f", 20.0)?,
                omega: 1.0,
            }
        }
    };

    let axis: Axis = e
        .take("axis")
        .ok_or_else(|| Error::Config("missing `axis`".into()))?
        .parse()?;
    let axis_values = {
        let v = e
            .take("axis_values")
            .ok_or_else(|| Error::Config("missing `axis_values`".into()))?;
        parse_list("axis_values", &v)?
    };
    let total_time = match (e.real("T")?, axis) {
        (Some(t), _) => t,
        (None, Axis::ProcessTime | Axis::ParticleNumberGap) => f64::NAN,
        (None, _) => return Err(Error::Config("missing `T`".into())),
    };

    let mut spec = SweepSpec::new(task, shape, total_time, axis, axis_values);
    if let Some(n_p) = e.count("N_p")? {
        spec.n_p = n_p;
    }
    if let Some(v) = e.take("N_b") {
        spec.n_b = counts("N_b", &v)?;
    }
    spec.tau = e.real_or("tau", spec.tau)?;
    spec.threshold = e.real_or("threshold", spec.threshold)?;
    spec.tail_bound = e.real_or("tail_bound", spec.tail_bound)?;
    spec.n_points = e.count("n_points")?;
    if let Some(v) = e.take("dt") {
        spec.dt =
            match v.as_str() {
                "auto" => TimeStep::Auto,
                "default" => TimeStep::Default,
                _ => TimeStep::Fixed(v.parse().map_err(|_| {
                    config_error("dt", &v, "expected a number, `auto` or `default`")
                })?),
            };
    }
    if let Some(v) = e.take("verify_oracle") {
        spec.verify_oracle = match v.as_str() {
            "true" | "yes" | "1" => true,
            "false" | "no" | "0" => false,
            _ => return Err(config_error("verify_oracle", &v, "expected true or false")),
        };
    }
    if let Some(w) = e.count("workers")? {
        spec.workers = w;
    }
    debug_assert!(e.map.is_empty(), "every known key is consumed");
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_forms() {
        assert_eq!(parse_list("k", "1, 2.5,4").unwrap(), vec![1.0, 2.5, 4.0]);
        assert_eq!(parse_list("k", "0:3").unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(
            parse_list("k", "0:2:5").unwrap(),
            vec![0.0, 0.5, 1.0, 1.5, 2.0]
        );
        assert!(parse_list("k", "0.5:2").is_err());
        assert!(parse_list("k", "a,b").is_err());
        assert!(parse_list("k", "1:2:0").is_err());
    }

    #[test]
    fn full_config() {
        let spec = parse_config(
            "# thermal buffer sweep\n\
             task = expand\n\
             shape = linear   # ramp\n\
             T = 25\n\
             lambda = 0.5\n\
             N_p = 2\n\
             N_b = 0:4\n\
             tau = 0.25\n\
             axis = tau\n\
             axis_values = 0:2:5\n\
             dt = 0.004\n\
             verify_oracle = true\n",
        )
        .unwrap();
        assert_eq!(spec.task.anharmonicity(), 0.5);
        assert_eq!(spec.shape, Shape::Linear);
        assert_eq!(spec.n_b, vec![0, 1, 2, 3, 4]);
        assert_eq!(spec.axis, Axis::Temperature);
        assert_eq!(spec.axis_values.len(), 5);
        assert_eq!(spec.dt, TimeStep::Fixed(0.004));
        assert!(spec.verify_oracle);
    }

    #[test]
    fn config_errors() {
        let base = "task = transport\naxis = T\naxis_values = 5, 10\n";
        assert!(parse_config(base).is_ok());
        for bad in [
            "task = transport\naxis = T\n",
            "task = transport\naxis = T\naxis_values = 10, 5\n",
            "task = transport\naxis = T\naxis_values = 5\nomega_f = 0.1\n",
            "task = transport\naxis = T\naxis_values = 5\ncolour = red\n",
            "task = transport\naxis = T\naxis_values = 5\naxis = T\n",
            "task = transport\naxis = N_b\naxis_values = 0:3\n",
            "task = split\naxis = lambda\naxis_values = 1\nT = 2\n",
            "task = expansion\naxis = T\naxis_values = 5\nthreshold = 1.5\n",
            "task = expansion\naxis = T\naxis_values = 5\nno equals sign\n",
        ] {
            let err = parse_config(bad).unwrap_err();
            assert!(
                matches!(err, Error::Config(_) | Error::InvalidInput(_)),
                "{bad:?} gave {err}"
            );
            assert_eq!(err.exit_code(), 2);
        }
    }
}
