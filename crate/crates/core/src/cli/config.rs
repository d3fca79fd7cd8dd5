//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [grid]
//! dim = 2
//! cells = 64, 64        # a single value is used on every axis
//! extents = 1, 1
//!
//! [physics]
//! kind = scalar         # scalar | rotational | table
//! cs = 0.25
//! alpha = 1
//! theta = 0             # rotational and table only
//! table = 0:1, 2:0.5    # table only: n:factor nodes
//! eps = 0.1
//! kappa = 1
//! buoyancy = vertical   # vertical | none
//! convection = upwind   # upwind | centered
//!
//! [run]
//! t_end = 0.5
//! scenario = bump_n     # a built-in scenario or homogeneous | bump | random | swirl
//! cfl = 0.4
//! dt = cfl              # cfl (adaptive) or a fixed step
//! seed = 20240611
//! csv_every = 1
//! snapshot_every = 0    # 0 writes no snapshots
//! out = out
//!
//! [initial]             # optional overrides of the scenario's recipe
//! amplitude = 2
//! ```
//!
//! `#` starts a comment. Unknown sections and keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fluid::{ConvectionScheme, FluidParams};
use crate::grid::{make_grid, GridRef, ScalarField};
use crate::sensitivity::{RegularizationParams, SensitivityKind, SensitivitySpec};
use crate::stepper::SimParams;
use crate::verify::scenario::recipe;
use crate::verify::{InitialRecipe, DEFAULT_SEED};

/// Buoyancy potential of the fluid forcing `n grad(phi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Buoyancy {
    /// `phi` is the last coordinate.
    Vertical,
    None,
}

/// A fully resolved run configuration; every default is explicit.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub cells: Vec<usize>,
    pub extents: Vec<f64>,
    pub sensitivity: SensitivityKind,
    pub cs: f64,
    pub alpha: f64,
    pub eps: f64,
    pub kappa: f64,
    pub buoyancy: Buoyancy,
    pub convection: ConvectionScheme,
    pub t_end: f64,
    /// Scenario or recipe name the initial data came from.
    pub scenario: String,
    pub initial: InitialRecipe,
    pub cfl: f64,
    /// Fixed step; adaptive when `None`.
    pub dt: Option<f64>,
    pub seed: u64,
    pub csv_every: usize,
    pub snapshot_every: usize,
    pub out: PathBuf,
}

pub const DEFAULT_CFL: f64 = 0.4;
pub const DEFAULT_EPS: f64 = 0.1;
pub const DEFAULT_KAPPA: f64 = 1.0;
pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_CS: f64 = 0.25;

struct Entry {
    value: String,
    line: usize,
}

/// Entries keyed by `(section, key)`, consumed as they are read so that
/// leftovers can be reported as unknown.
struct Table {
    entries: BTreeMap<(String, String), Entry>,
    lines: usize,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

const SECTIONS: [&str; 4] = ["grid", "physics", "run", "initial"];

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        let mut lines = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            lines = line;
            let s = raw.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(err(
                        line,
                        format!(
                            "unknown section [{name}] (expected one of {})",
                            SECTIONS.join(", ")
                        ),
                    ));
                }
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{s}`")))?;
            let sec = section
                .clone()
                .ok_or_else(|| err(line, "key outside of any section"))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(err(line, "empty key"));
            }
            let prev = entries.insert(
                (sec.clone(), key.clone()),
                Entry {
                    value: v.trim().to_string(),
                    line,
                },
            );
            if let Some(p) = prev {
                return Err(err(
                    line,
                    format!("duplicate key {sec}.{key} (first on line {})", p.line),
                ));
            }
        }
        Ok(Self { entries, lines })
    }

    fn take(&mut self, section: &str, key: &str) -> Option<Entry> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn required(&mut self, section: &str, key: &str) -> Result<Entry> {
        self.take(section, key)
            .ok_or_else(|| err(self.lines, format!("missing required key {section}.{key}")))
    }

    fn get<T: FromStr>(&mut self, section: &str, key: &str, default: T) -> Result<T> {
        match self.take(section, key) {
            Some(e) => parse_value(&e, section, key),
            None => Ok(default),
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            Some(((s, k), e)) => Err(err(e.line, format!("unknown key {s}.{k}"))),
            None => Ok(()),
        }
    }
}

fn parse_value<T: FromStr>(e: &Entry, section: &str, key: &str) -> Result<T> {
    e.value.parse().map_err(|_| {
        err(
            e.line,
            format!("cannot parse {section}.{key} = `{}`", e.value),
        )
    })
}

fn parse_list<T: FromStr>(e: &Entry, section: &str, key: &str) -> Result<Vec<T>> {
    e.value
        .split(',')
        .map(|s| {
            s.trim().parse().map_err(|_| {
                err(
                    e.line,
                    format!("cannot parse {section}.{key} entry `{}`", s.trim()),
                )
            })
        })
        .collect()
}

/// Broadcasts a single entry to `dim` axes.
fn per_axis<T: FromStr + Clone>(e: &Entry, key: &str, dim: usize) -> Result<Vec<T>> {
    let v: Vec<T> = parse_list(e, "grid", key)?;
    match v.len() {
        1 => Ok(vec![v[0].clone(); dim]),
        n if n == dim => Ok(v),
        n => Err(err(
            e.line,
            format!("grid.{key} has {n} entries for dim {dim}"),
        )),
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut t = Table::parse(text)?;

    let e = t.required("grid", "dim")?;
    let dim: usize = parse_value(&e, "grid", "dim")?;
    if dim != 2 && dim != 3 {
        return Err(err(e.line, format!("grid.dim must be 2 or 3, got {dim}")));
    }
    let e = t.required("grid", "cells")?;
    let cells = per_axis(&e, "cells", dim)?;
    let cells_line = e.line;
    let e = t.required("grid", "extents")?;
    let extents = per_axis(&e, "extents", dim)?;
    make_grid(dim, &extents, &cells).map_err(|x| err(cells_line, x.to_string()))?;

    let kind_entry = t.take("physics", "kind");
    let kind_line = kind_entry.as_ref().map_or(0, |e| e.line);
    let kind = kind_entry.map_or_else(|| "scalar".to_string(), |e| e.value);
    let theta_entry = t.take("physics", "theta");
    let theta = match &theta_entry {
        Some(e) => parse_value(e, "physics", "theta")?,
        None => 0.0,
    };
    let table_entry = t.take("physics", "table");
    let sensitivity = match kind.as_str() {
        "scalar" => {
            if let Some(e) = theta_entry.as_ref().or(table_entry.as_ref()) {
                return Err(err(
                    e.line,
                    "theta and table need kind = rotational or table",
                ));
            }
            SensitivityKind::ScalarSaturating
        }
        "rotational" => {
            if let Some(e) = &table_entry {
                return Err(err(e.line, "table needs kind = table"));
            }
            SensitivityKind::Rotational { theta }
        }
        "table" => {
            let e =
                table_entry.ok_or_else(|| err(kind_line, "kind = table needs physics.table"))?;
            let table = e
                .value
                .split(',')
                .map(|node| {
                    let (n, f) = node.split_once(':')?;
                    Some((n.trim().parse().ok()?, f.trim().parse().ok()?))
                })
                .collect::<Option<Vec<(f64, f64)>>>()
                .ok_or_else(|| err(e.line, "physics.table must be a list of n:factor nodes"))?;
            SensitivityKind::UserTable { theta, table }
        }
        other => {
            return Err(err(
                kind_line,
                format!("unknown sensitivity kind `{other}` (scalar, rotational, table)"),
            ))
        }
    };
    let cs = t.get("physics", "cs", DEFAULT_CS)?;
    let alpha_entry = t.take("physics", "alpha");
    let alpha = match &alpha_entry {
        Some(e) => parse_value(e, "physics", "alpha")?,
        None => DEFAULT_ALPHA,
    };
    let sens_line = alpha_entry.as_ref().map_or(kind_line, |e| e.line);
    if !(alpha >= 1.0) {
        return Err(err(
            sens_line,
            format!("alpha = {alpha} violates alpha>=1, the saturation the global existence theory needs"),
        ));
    }
    SensitivitySpec::new(sensitivity.clone(), cs, alpha)
        .map_err(|x| err(sens_line, x.to_string()))?;

    let eps = t.get("physics", "eps", DEFAULT_EPS)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(err(
            t.lines,
            format!("physics.eps must lie in (0, 1], got {eps}"),
        ));
    }
    let kappa = t.get("physics", "kappa", DEFAULT_KAPPA)?;
    if !(kappa >= 0.0 && f64::is_finite(kappa)) {
        return Err(err(
            t.lines,
            format!("physics.kappa must be >= 0, got {kappa}"),
        ));
    }
    let buoyancy = match t.take("physics", "buoyancy") {
        None => Buoyancy::Vertical,
        Some(e) => match e.value.as_str() {
            "vertical" => Buoyancy::Vertical,
            "none" => Buoyancy::None,
            v => {
                return Err(err(
                    e.line,
                    format!("physics.buoyancy must be vertical or none, got `{v}`"),
                ))
            }
        },
    };
    let convection = match t.take("physics", "convection") {
        None => ConvectionScheme::Upwind,
        Some(e) => match e.value.as_str() {
            "upwind" => ConvectionScheme::Upwind,
            "centered" => ConvectionScheme::Centered,
            v => {
                return Err(err(
                    e.line,
                    format!("physics.convection must be upwind or centered, got `{v}`"),
                ))
            }
        },
    };

    let e = t.required("run", "t_end")?;
    let t_end: f64 = parse_value(&e, "run", "t_end")?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(err(
            e.line,
            format!("run.t_end must be positive, got {t_end}"),
        ));
    }
    let cfl = t.get("run", "cfl", DEFAULT_CFL)?;
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(err(
            t.lines,
            format!("run.cfl must lie in (0, 1], got {cfl}"),
        ));
    }
    let dt = match t.take("run", "dt") {
        None => None,
        Some(e) if e.value == "cfl" => None,
        Some(e) => {
            let dt: f64 = parse_value(&e, "run", "dt")?;
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(err(e.line, format!("run.dt must be positive, got {dt}")));
            }
            Some(dt)
        }
    };
    let seed = t.get("run", "seed", DEFAULT_SEED)?;
    let csv_every = t.get("run", "csv_every", 1usize)?;
    if csv_every == 0 {
        return Err(err(t.lines, "run.csv_every must be positive"));
    }
    let snapshot_every = t.get("run", "snapshot_every", 0usize)?;
    let out = PathBuf::from(t.get("run", "out", "out".to_string())?);

    let e = t.required("run", "scenario")?;
    let scenario = e.value.clone();
    let base = recipe(&scenario, seed).map_err(|x| err(e.line, x.to_string()))?;
    let initial = override_recipe(&mut t, base, seed)?;

    t.finish()?;
    Ok(RunConfig {
        dim,
        cells,
        extents,
        sensitivity,
        cs,
        alpha,
        eps,
        kappa,
        buoyancy,
        convection,
        t_end,
        scenario,
        initial,
        cfl,
        dt,
        seed,
        csv_every,
        snapshot_every,
        out,
    })
}

fn override_recipe(t: &mut Table, base: InitialRecipe, seed: u64) -> Result<InitialRecipe> {
    let r = match base {
        InitialRecipe::Homogeneous { mean } => InitialRecipe::Homogeneous {
            mean: t.get("initial", "mean", mean)?,
        },
        InitialRecipe::Bump {
            base,
            amplitude,
            width,
        } => InitialRecipe::Bump {
            base: t.get("initial", "base", base)?,
            amplitude: t.get("initial", "amplitude", amplitude)?,
            width: t.get("initial", "width", width)?,
        },
        InitialRecipe::RandomSmooth {
            mean,
            amplitude,
            velocity,
            modes,
            ..
        } => InitialRecipe::RandomSmooth {
            mean: t.get("initial", "mean", mean)?,
            amplitude: t.get("initial", "amplitude", amplitude)?,
            velocity: t.get("initial", "velocity", velocity)?,
            modes: t.get("initial", "modes", modes)?,
            seed,
        },
        InitialRecipe::Swirl { mean, amplitude } => InitialRecipe::Swirl {
            mean: t.get("initial", "mean", mean)?,
            amplitude: t.get("initial", "amplitude", amplitude)?,
        },
    };
    Ok(r)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Serializes every field explicitly; [`parse_config`] reads it back to
    /// an identical value.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[grid]");
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "cells = {}", join(&self.cells));
        let _ = writeln!(s, "extents = {}", join(&self.extents));
        let _ = writeln!(s, "\n[physics]");
        match &self.sensitivity {
            SensitivityKind::ScalarSaturating => {
                let _ = writeln!(s, "kind = scalar");
            }
            SensitivityKind::Rotational { theta } => {
                let _ = writeln!(s, "kind = rotational\ntheta = {theta}");
            }
            SensitivityKind::UserTable { theta, table } => {
                let nodes: Vec<String> = table.iter().map(|(n, f)| format!("{n}:{f}")).collect();
                let _ = writeln!(
                    s,
                    "kind = table\ntheta = {theta}\ntable = {}",
                    nodes.join(", ")
                );
            }
        }
        let _ = writeln!(s, "cs = {}", self.cs);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "eps = {}", self.eps);
        let _ = writeln!(s, "kappa = {}", self.kappa);
        let buoyancy = match self.buoyancy {
            Buoyancy::Vertical => "vertical",
            Buoyancy::None => "none",
        };
        let _ = writeln!(s, "buoyancy = {buoyancy}");
        let convection = match self.convection {
            ConvectionScheme::Upwind => "upwind",
            ConvectionScheme::Centered => "centered",
        };
        let _ = writeln!(s, "convection = {convection}");
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "t_end = {}", self.t_end);
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "cfl = {}", self.cfl);
        match self.dt {
            Some(dt) => {
                let _ = writeln!(s, "dt = {dt}");
            }
            None => {
                let _ = writeln!(s, "dt = cfl");
            }
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "csv_every = {}", self.csv_every);
        let _ = writeln!(s, "snapshot_every = {}", self.snapshot_every);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "\n[initial]");
        match self.initial {
            InitialRecipe::Homogeneous { mean } => {
                let _ = writeln!(s, "mean = {mean}");
            }
            InitialRecipe::Bump {
                base,
                amplitude,
                width,
            } => {
                let _ = writeln!(s, "base = {base}\namplitude = {amplitude}\nwidth = {width}");
            }
            InitialRecipe::RandomSmooth {
                mean,
                amplitude,
                velocity,
                modes,
                ..
            } => {
                let _ = writeln!(
                    s,
                    "mean = {mean}\namplitude = {amplitude}\nvelocity = {velocity}\nmodes = {modes}"
                );
            }
            InitialRecipe::Swirl { mean, amplitude } => {
                let _ = writeln!(s, "mean = {mean}\namplitude = {amplitude}");
            }
        }
        s
    }

    pub fn grid(&self) -> Result<GridRef> {
        make_grid(self.dim, &self.extents, &self.cells)
    }

    /// Replaces the seed, including the one inside a random recipe.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.initial = self.initial.with_seed(seed);
        self
    }

    pub fn sim_params(&self, grid: &GridRef) -> Result<SimParams> {
        let sens = SensitivitySpec::new(self.sensitivity.clone(), self.cs, self.alpha)?;
        let reg = RegularizationParams::new(self.eps, grid)?;
        let phi = match self.buoyancy {
            Buoyancy::Vertical => {
                let up = grid.dim() - 1;
                ScalarField::from_fn(grid, |x| x[up])
            }
            Buoyancy::None => ScalarField::zeros(grid),
        };
        let fluid = FluidParams::new(self.kappa, self.eps, phi)?;
        let mut p = SimParams::new(grid, sens, reg, fluid, self.t_end)?;
        p.cfl = self.cfl;
        p.dt_fixed = self.dt;
        p.diagnostics_every = self.csv_every;
        p.snapshot_every = self.snapshot_every;
        p.convection = self.convection;
        p.validate()?;
        Ok(p)
    }
}
