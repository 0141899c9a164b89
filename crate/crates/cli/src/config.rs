//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! gamma = 0.9
//! alpha = 1
//! dt = 1
//! dx = 10
//! nx = 20
//! ny = 20
//! steps = 1500
//! strategy = short
//! L = 200
//! init = 10,10,10
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use fracmem_core::memory::arithmetic::validate_base;
use fracmem_core::weights::validate_gamma;
use fracmem_core::{FieldGrid, GridShape, MemoryStrategy, PointSource, SimConfig};

use crate::CliError;

const KEYS: [&str; 16] = [
    "gamma",
    "alpha",
    "beta",
    "dt",
    "dx",
    "nx",
    "ny",
    "steps",
    "strategy",
    "L",
    "a",
    "eta",
    "threshold",
    "snapshot_every",
    "init",
    "out_dir",
];

/// A parsed configuration file: the simulation plus where its output goes.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub out_dir: PathBuf,
}

struct Entries {
    values: BTreeMap<&'static str, (usize, String)>,
}

impl Entries {
    fn line(&self, key: &str) -> Option<usize> {
        self.values.get(key).map(|(l, _)| *l)
    }

    fn err(&self, key: &str, msg: impl Into<String>) -> CliError {
        CliError::Config {
            line: self.line(key),
            key: key.to_string(),
            msg: msg.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(_, v)| v.as_str())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| self.err(key, format!("cannot parse {v:?}"))),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get(key)?
            .ok_or_else(|| self.err(key, "missing required key"))
    }
}

fn tokenize(text: &str) -> Result<Entries, CliError> {
    let mut values = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config {
                line: Some(line_no),
                key: line.to_string(),
                msg: "expected key = value".into(),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        let Some(key) = KEYS.iter().copied().find(|known| *known == k) else {
            return Err(CliError::Config {
                line: Some(line_no),
                key: k.to_string(),
                msg: "unknown key".into(),
            });
        };
        if let Some((first, _)) = values.insert(key, (line_no, v.to_string())) {
            return Err(CliError::Config {
                line: Some(line_no),
                key: key.to_string(),
                msg: format!("duplicate key, first set on line {first}"),
            });
        }
    }
    Ok(Entries { values })
}

fn parse_init(e: &Entries) -> Result<Vec<PointSource>, CliError> {
    let text = e.raw("init").ok_or_else(|| e.err("init", "missing required key"))?;
    let mut out = Vec::new();
    for item in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(',').map(str::trim).collect();
        let bad = || e.err("init", format!("expected j,l,value but found {item:?}"));
        let [j, l, v] = parts[..] else {
            return Err(bad());
        };
        out.push(PointSource::new(
            j.parse().map_err(|_| bad())?,
            l.parse().map_err(|_| bad())?,
            v.parse().map_err(|_| bad())?,
        ));
    }
    Ok(out)
}

fn parse_strategy(e: &Entries) -> Result<MemoryStrategy, CliError> {
    let name: String = e.require("strategy")?;
    let own = match name.as_str() {
        "full" => None,
        "short" => Some("L"),
        "arithmetic" => Some("a"),
        "powerlaw" => Some("eta"),
        "smart" => Some("threshold"),
        other => {
            return Err(e.err(
                "strategy",
                format!("unknown strategy {other:?}; expected full, short, arithmetic, powerlaw or smart"),
            ))
        }
    };
    for key in ["L", "a", "eta", "threshold"] {
        if Some(key) != own && e.raw(key).is_some() {
            return Err(e.err(key, format!("does not apply to strategy {name}")));
        }
    }
    Ok(match name.as_str() {
        "short" => MemoryStrategy::Short {
            length: e.require("L")?,
        },
        "arithmetic" => MemoryStrategy::Arithmetic {
            base: e.require("a")?,
        },
        "powerlaw" => MemoryStrategy::PowerLaw {
            reset_interval: e.require("eta")?,
        },
        "smart" => MemoryStrategy::Smart {
            threshold: e.require("threshold")?,
        },
        _ => MemoryStrategy::Full,
    })
}

/// Checks each field against its own key so diagnostics point at the
/// offending line.
fn validate(e: &Entries, sim: &SimConfig) -> Result<(), CliError> {
    let at = |key: &str| {
        let key = key.to_string();
        move |err: fracmem_core::Error| e.err(&key, err.to_string())
    };
    validate_gamma(sim.gamma).map_err(at("gamma"))?;
    for (key, v, allow_zero) in [
        ("alpha", sim.alpha, true),
        ("beta", sim.beta, true),
        ("dt", sim.dt, false),
        ("dx", sim.dx, false),
    ] {
        let ok = v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0));
        if !ok {
            let need = if allow_zero { "non-negative" } else { "positive" };
            return Err(e.err(key, format!("{key} = {v}: must be {need} and finite")));
        }
    }
    let shape = GridShape::new(sim.nx, sim.ny).map_err(|err| {
        let key = if sim.nx < 3 { "nx" } else { "ny" };
        e.err(key, err.to_string())
    })?;
    let strategy_key = match sim.strategy {
        MemoryStrategy::Full => "strategy",
        MemoryStrategy::Short { .. } => "L",
        MemoryStrategy::Arithmetic { .. } => "a",
        MemoryStrategy::PowerLaw { .. } => "eta",
        MemoryStrategy::Smart { .. } => "threshold",
    };
    if let MemoryStrategy::Arithmetic { base } = sim.strategy {
        validate_base(base).map_err(at("a"))?;
    }
    sim.strategy.validate(sim.dt).map_err(at(strategy_key))?;
    FieldGrid::with_sources(shape, sim.dx, &sim.initial).map_err(at("init"))?;
    sim.validate().map_err(at(strategy_key))
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let e = tokenize(text)?;
    let sim = SimConfig {
        gamma: e.require("gamma")?,
        alpha: e.require("alpha")?,
        beta: e.get("beta")?.unwrap_or(0.0),
        dt: e.require("dt")?,
        dx: e.require("dx")?,
        nx: e.require("nx")?,
        ny: e.get("ny")?.unwrap_or(1),
        steps: e.require("steps")?,
        initial: parse_init(&e)?,
        strategy: parse_strategy(&e)?,
        snapshot_every: e.get("snapshot_every")?.unwrap_or(0),
    };
    validate(&e, &sim)?;
    let out_dir = e.get::<String>("out_dir")?.unwrap_or_else(|| ".".into());
    Ok(RunConfig {
        sim,
        out_dir: PathBuf::from(out_dir),
    })
}

/// Text that [`parse_config`] maps back to an equal configuration. Reals use
/// the shortest representation that round-trips.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let s = &cfg.sim;
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("gamma", s.gamma.to_string());
    put("alpha", s.alpha.to_string());
    put("beta", s.beta.to_string());
    put("dt", s.dt.to_string());
    put("dx", s.dx.to_string());
    put("nx", s.nx.to_string());
    put("ny", s.ny.to_string());
    put("steps", s.steps.to_string());
    put("strategy", s.strategy.tag().to_string());
    match s.strategy {
        MemoryStrategy::Full => {}
        MemoryStrategy::Short { length } => put("L", length.to_string()),
        MemoryStrategy::Arithmetic { base } => put("a", base.to_string()),
        MemoryStrategy::PowerLaw { reset_interval } => put("eta", reset_interval.to_string()),
        MemoryStrategy::Smart { threshold } => put("threshold", threshold.to_string()),
    }
    put("snapshot_every", s.snapshot_every.to_string());
    let init: Vec<String> = s
        .initial
        .iter()
        .map(|p| format!("{},{},{}", p.j, p.l, p.value))
        .collect();
    put("init", init.join(";"));
    put("out_dir", cfg.out_dir.display().to_string());
    out
}

/// Strategies for a sweep, e.g. `full;short:50,100;arithmetic:5,10;powerlaw:3`.
pub fn parse_sweep(spec: &str) -> Result<Vec<MemoryStrategy>, CliError> {
    let bad = |msg: String| CliError::Usage(format!("--sweep: {msg}"));
    let mut out = Vec::new();
    for group in spec.split(';').map(str::trim).filter(|g| !g.is_empty()) {
        let (name, params) = match group.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p)),
            None => (group, None),
        };
        let values: Vec<&str> = params
            .map(|p| p.split(',').map(str::trim).filter(|v| !v.is_empty()).collect())
            .unwrap_or_default();
        if name == "full" {
            if !values.is_empty() {
                return Err(bad("full takes no parameter".into()));
            }
            out.push(MemoryStrategy::Full);
            continue;
        }
        if values.is_empty() {
            return Err(bad(format!("{name} needs at least one parameter")));
        }
        for v in values {
            let num = |_| bad(format!("cannot parse {v:?} for {name}"));
            out.push(match name {
                "short" => MemoryStrategy::Short {
                    length: v.parse().map_err(num)?,
                },
                "arithmetic" => MemoryStrategy::Arithmetic {
                    base: v.parse().map_err(|_| bad(format!("cannot parse {v:?} for {name}")))?,
                },
                "powerlaw" => MemoryStrategy::PowerLaw {
                    reset_interval: v.parse().map_err(|_| bad(format!("cannot parse {v:?} for {name}")))?,
                },
                "smart" => MemoryStrategy::Smart {
                    threshold: v.parse().map_err(num)?,
                },
                other => return Err(bad(format!("unknown strategy {other:?}"))),
            });
        }
    }
    if out.is_empty() {
        return Err(bad("no strategies given".into()));
    }
    Ok(out)
}
