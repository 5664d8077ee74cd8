//! Run configuration: a flat `key = value` file plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use petviashvili::iteration::{gamma_star, ProblemSpec, StopRule};
use petviashvili::mesh::load_triangulation;
use petviashvili::{InitialGuess, MassKind, Mesh};

use crate::error::CliError;

pub const KEYS: &[&str] = &[
    "domain",
    "xmax",
    "rmax",
    "n_cells",
    "mesh_node",
    "mesh_ele",
    "p",
    "gamma",
    "guess",
    "gauss_center",
    "gauss_coefficient",
    "seed",
    "max_steps",
    "m_tol",
    "diff_tol",
    "out_dir",
    "mass",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Interval,
    Radial,
    Triangle,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Interval => "interval",
            Domain::Radial => "radial",
            Domain::Triangle => "triangle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Star,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GuessChoice {
    Preset(String),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: Domain,
    pub xmax: f64,
    pub rmax: f64,
    pub n_cells: Option<usize>,
    pub mesh_node: Option<PathBuf>,
    pub mesh_ele: Option<PathBuf>,
    pub p: f64,
    pub gamma: Gamma,
    pub guess: Option<GuessChoice>,
    pub gauss_center: [f64; 2],
    pub gauss_coefficient: f64,
    pub seed: u64,
    pub max_steps: usize,
    pub m_tol: Option<f64>,
    pub diff_tol: Option<f64>,
    pub out_dir: PathBuf,
    pub mass: MassKind,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: Domain::Interval,
            xmax: 2.0,
            rmax: 25.0,
            n_cells: None,
            mesh_node: None,
            mesh_ele: None,
            p: 3.0,
            gamma: Gamma::Star,
            guess: None,
            gauss_center: [0.25, 0.25],
            gauss_coefficient: 50.0,
            seed: 1,
            max_steps: 100,
            m_tol: Some(1e-10),
            diff_tol: Some(1e-10),
            out_dir: PathBuf::from("out"),
            mass: MassKind::Lumped,
        }
    }
}

fn invalid(key: &str, value: &str, why: impl fmt::Display) -> CliError {
    CliError::Config(format!("{key} = {value:?}: {why}"))
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| invalid(key, value, e))
}

fn tolerance(key: &str, value: &str) -> Result<Option<f64>, CliError> {
    if value.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    let t: f64 = number(key, value)?;
    if !(t > 0.0) {
        return Err(invalid(key, value, "must be positive or 'none'"));
    }
    Ok(Some(t))
}

impl RunConfig {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Apply one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "domain" => {
                self.domain = match value {
                    "interval" => Domain::Interval,
                    "radial" => Domain::Radial,
                    "triangle" | "triangulation" => Domain::Triangle,
                    _ => return Err(invalid(key, value, "expected interval, radial or triangle")),
                }
            }
            "xmax" => self.xmax = number(key, value)?,
            "rmax" => self.rmax = number(key, value)?,
            "n_cells" => self.n_cells = Some(number(key, value)?),
            "mesh_node" => self.mesh_node = Some(PathBuf::from(value)),
            "mesh_ele" => self.mesh_ele = Some(PathBuf::from(value)),
            "p" => self.p = number(key, value)?,
            "gamma" => {
                self.gamma = if value == "gamma_star" {
                    Gamma::Star
                } else {
                    Gamma::Value(number(key, value)?)
                }
            }
            "guess" => {
                self.guess = Some(match value.strip_prefix("file:") {
                    Some(path) => GuessChoice::File(PathBuf::from(path)),
                    None => GuessChoice::Preset(value.to_string()),
                })
            }
            "gauss_center" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if parts.len() != 2 {
                    return Err(invalid(key, value, "expected x,y"));
                }
                self.gauss_center = [number(key, parts[0])?, number(key, parts[1])?];
            }
            "gauss_coefficient" => self.gauss_coefficient = number(key, value)?,
            "seed" => self.seed = number(key, value)?,
            "max_steps" => self.max_steps = number(key, value)?,
            "m_tol" => self.m_tol = tolerance(key, value)?,
            "diff_tol" => self.diff_tol = tolerance(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "mass" => {
                self.mass = match value {
                    "lumped" => MassKind::Lumped,
                    "consistent" => MassKind::Consistent,
                    _ => return Err(invalid(key, value, "expected lumped or consistent")),
                }
            }
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Apply `key=value` overrides in order.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), CliError> {
        for item in overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override {item:?} is not key=value")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn gamma_value(&self) -> f64 {
        match self.gamma {
            Gamma::Star => gamma_star(self.p),
            Gamma::Value(g) => g,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells.unwrap_or(match self.domain {
            Domain::Radial => 500,
            _ => 400,
        })
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule {
            max_steps: self.max_steps,
            m_tol: self.m_tol,
            diff_tol: self.diff_tol,
        }
    }

    /// Eigensolver start vectors are seeded from the run seed.
    pub fn eigen_seed(&self) -> u64 {
        self.seed
            .wrapping_add(petviashvili::linalg::DEFAULT_EIGEN_SEED)
    }

    /// Checks that do not need the mesh: exponent ranges and geometry.
    pub fn validate(&self) -> Result<(), CliError> {
        let dim = match self.domain {
            Domain::Interval => 1,
            _ => 2,
        };
        let critical = petviashvili::iteration::critical_exponent(dim);
        if !(self.p > 1.0 && self.p < critical) {
            return Err(CliError::Config(format!(
                "p = {} must lie in (1, {critical}) for d = {dim}",
                self.p
            )));
        }
        let upper = (self.p + 1.0) / (self.p - 1.0);
        let g = self.gamma_value();
        if !(g > 1.0 && g < upper) {
            return Err(CliError::Config(format!(
                "gamma = {g} must lie in (1, {upper})"
            )));
        }
        if self.max_steps == 0 {
            return Err(CliError::Config("max_steps must be at least 1".into()));
        }
        match self.domain {
            Domain::Interval if !(self.xmax > 0.0) => Err(CliError::Config(format!(
                "xmax = {} must be positive",
                self.xmax
            ))),
            Domain::Radial if !(self.rmax > 0.0) => Err(CliError::Config(format!(
                "rmax = {} must be positive",
                self.rmax
            ))),
            Domain::Triangle if self.mesh_node.is_none() || self.mesh_ele.is_none() => Err(
                CliError::Config("triangle domain needs mesh_node and mesh_ele".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn build_mesh(&self) -> Result<Mesh, CliError> {
        let mesh = match self.domain {
            Domain::Interval => Mesh::interval(-self.xmax, self.xmax, self.n_cells()),
            Domain::Radial => Mesh::radial(self.rmax, self.n_cells()),
            Domain::Triangle => {
                let (node, ele) = match (&self.mesh_node, &self.mesh_ele) {
                    (Some(n), Some(e)) => (n, e),
                    _ => {
                        return Err(CliError::Config(
                            "triangle domain needs mesh_node and mesh_ele".into(),
                        ))
                    }
                };
                let node_text = std::fs::read_to_string(node).map_err(|e| CliError::io(node, e))?;
                let ele_text = std::fs::read_to_string(ele).map_err(|e| CliError::io(ele, e))?;
                load_triangulation(&node_text, &ele_text)
            }
        };
        mesh.map_err(|e| CliError::Config(format!("mesh: {e}")))
    }

    pub fn build_spec(&self) -> Result<ProblemSpec, CliError> {
        self.validate()?;
        let mesh = self.build_mesh()?;
        ProblemSpec::new(mesh, self.p, self.gamma_value(), self.mass)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// The configured initial guess; a file guess may list all nodes of
    /// `mesh` (as written by `solve`) or only its interior nodes.
    pub fn guess(&self, mesh: &Mesh) -> Result<InitialGuess, CliError> {
        let choice = self.guess.clone().unwrap_or_else(|| {
            GuessChoice::Preset(
                match self.domain {
                    Domain::Interval => "parabola",
                    Domain::Radial => "radial-parabola",
                    Domain::Triangle => "gaussian-2d",
                }
                .to_string(),
            )
        });
        Ok(match choice {
            GuessChoice::Preset(name) => match name.as_str() {
                "parabola" => InitialGuess::Parabola,
                "asymmetric-cubic" => InitialGuess::AsymmetricCubic,
                "rough" => InitialGuess::Rough { seed: self.seed },
                "rough-symmetrized" => InitialGuess::RoughSymmetrized { seed: self.seed },
                "radial-parabola" => InitialGuess::RadialParabola,
                "gaussian-2d" => InitialGuess::Gaussian2d {
                    center: self.gauss_center,
                    coefficient: self.gauss_coefficient,
                },
                other => return Err(CliError::Config(format!("unknown guess {other:?}"))),
            },
            GuessChoice::File(path) => {
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                let values = crate::output::parse_solution_values(&text).map_err(|line| {
                    CliError::Config(format!("{}: bad value on line {line}", path.display()))
                })?;
                if values.len() == mesh.n_nodes() {
                    InitialGuess::Values(mesh.restrict(&values))
                } else {
                    InitialGuess::Values(values)
                }
            }
        })
    }

    /// Canonical `key = value` listing of every setting.
    pub fn render(&self) -> String {
        let opt_tol = |t: Option<f64>| t.map_or("none".to_string(), |t| t.to_string());
        let opt_path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map_or(String::new(), |p| p.display().to_string())
        };
        let guess = match &self.guess {
            None => String::new(),
            Some(GuessChoice::Preset(s)) => s.clone(),
            Some(GuessChoice::File(p)) => format!("file:{}", p.display()),
        };
        let gamma = match self.gamma {
            Gamma::Star => "gamma_star".to_string(),
            Gamma::Value(g) => g.to_string(),
        };
        let lines = [
            ("domain", self.domain.name().to_string()),
            ("xmax", self.xmax.to_string()),
            ("rmax", self.rmax.to_string()),
            ("n_cells", self.n_cells().to_string()),
            ("mesh_node", opt_path(&self.mesh_node)),
            ("mesh_ele", opt_path(&self.mesh_ele)),
            ("p", self.p.to_string()),
            ("gamma", gamma),
            ("guess", guess),
            (
                "gauss_center",
                format!("{},{}", self.gauss_center[0], self.gauss_center[1]),
            ),
            ("gauss_coefficient", self.gauss_coefficient.to_string()),
            ("seed", self.seed.to_string()),
            ("max_steps", self.max_steps.to_string()),
            ("m_tol", opt_tol(self.m_tol)),
            ("diff_tol", opt_tol(self.diff_tol)),
            ("out_dir", self.out_dir.display().to_string()),
            ("mass", self.mass.name().to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let text = "# 1D setup\ndomain = interval\nxmax = 2\nn_cells = 200 # resolution\ngamma = 1.2\nm_tol = none\n";
        let mut cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.n_cells(), 200);
        assert_eq!(cfg.gamma, Gamma::Value(1.2));
        assert_eq!(cfg.m_tol, None);
        cfg.apply_overrides(&["n_cells=50".into(), "gamma=gamma_star".into()])
            .unwrap();
        assert_eq!(cfg.n_cells(), 50);
        assert_eq!(cfg.gamma_value(), 1.5);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(matches!(
            RunConfig::parse("colour = red"),
            Err(CliError::Config(_))
        ));
        assert!(matches!(RunConfig::parse("p 3"), Err(CliError::Config(_))));
        assert!(matches!(
            RunConfig::parse("p = three"),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            RunConfig::parse("m_tol = -1"),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn validates_exponents() {
        let mut cfg = RunConfig {
            gamma: Gamma::Value(2.0),
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.gamma = Gamma::Star;
        cfg.p = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn render_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("guess", "rough").unwrap();
        cfg.set("seed", "17").unwrap();
        cfg.set("domain", "radial").unwrap();
        let text = cfg.render();
        let mut back = RunConfig::parse(
            &text
                .replace("mesh_node = \n", "")
                .replace("mesh_ele = \n", ""),
        )
        .unwrap();
        back.n_cells = cfg.n_cells.or(back.n_cells);
        assert_eq!(back.render(), text);
    }

    #[test]
    fn every_key_is_accepted() {
        let mut cfg = RunConfig::default();
        let values = [
            "interval",
            "2",
            "25",
            "10",
            "a.node",
            "a.ele",
            "3",
            "1.4",
            "parabola",
            "0.3,0.3",
            "40",
            "5",
            "50",
            "1e-9",
            "1e-9",
            "out",
            "consistent",
        ];
        for (k, v) in KEYS.iter().zip(values) {
            cfg.set(k, v).unwrap();
        }
    }
}
