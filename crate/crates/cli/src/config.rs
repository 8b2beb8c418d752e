//! Run configuration shared by all subcommands.
//!
//! The file format is flat `key = value` text; `#` starts a comment and
//! lists are comma-separated. Command-line flags go through the same
//! [`RunConfig::set`] and override values read from a file.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use factest_core::simulate::{GridConfig, Layout};
use factest_core::{HypothesisKind, Method};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Simulate,
    Report,
}

impl Command {
    fn tag(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Simulate => "simulate",
            Command::Report => "report",
        }
    }
}

/// Cell structure of a user-supplied dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutSpec {
    /// Number of groups is read from the data.
    OneWay,
    TwoWay { a: usize, b: usize },
}

impl fmt::Display for LayoutSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayoutSpec::OneWay => f.write_str("oneway"),
            LayoutSpec::TwoWay { a, b } => write!(f, "twoway:{a},{b}"),
        }
    }
}

impl FromStr for LayoutSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "oneway" || s == "one-way" {
            return Ok(LayoutSpec::OneWay);
        }
        let dims = s
            .strip_prefix("twoway:")
            .or_else(|| s.strip_prefix("two-way:"))
            .and_then(|rest| rest.split_once(','))
            .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
        match dims {
            Some((a, b)) if a >= 2 && b >= 2 => Ok(LayoutSpec::TwoWay { a, b }),
            _ => Err(CliError::Config(format!(
                "bad layout '{s}', expected oneway or twoway:a,b with a, b >= 2"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportMode {
    Dots,
    Deviation,
}

impl fmt::Display for ReportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportMode::Dots => "dots",
            ReportMode::Deviation => "deviation",
        })
    }
}

impl FromStr for ReportMode {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim() {
            "dots" => Ok(ReportMode::Dots),
            "deviation" => Ok(ReportMode::Deviation),
            other => Err(CliError::Config(format!("unknown report mode '{other}', expected dots or deviation"))),
        }
    }
}

pub fn parse_contrast(s: &str) -> CliResult<HypothesisKind> {
    match s.trim() {
        "overall" => Ok(HypothesisKind::Overall),
        "A" | "a" => Ok(HypothesisKind::MainA),
        "B" | "b" => Ok(HypothesisKind::MainB),
        "AB" | "ab" => Ok(HypothesisKind::Interaction),
        other => Err(CliError::Config(format!("unknown contrast '{other}', expected overall, A, B or AB"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    /// Result file for `simulate`, output directory for `report`.
    pub output: Option<PathBuf>,
    pub layout: Option<LayoutSpec>,
    pub layouts: Vec<Layout>,
    pub settings: Vec<u8>,
    /// Empty selects every method applicable to the layout.
    pub methods: Vec<Method>,
    /// `None` selects the layout default: overall for one-way, AB for two-way.
    pub contrast: Option<HypothesisKind>,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub n_sim: u64,
    pub n_perm: u64,
    pub m_values: Vec<usize>,
    pub workers: usize,
    pub mode: Option<ReportMode>,
    /// Print analysis results as CSV.
    pub machine: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        let grid = GridConfig::default();
        Self {
            command,
            input: None,
            output: None,
            layout: None,
            layouts: grid.layouts,
            settings: grid.settings,
            methods: Vec::new(),
            contrast: None,
            alphas: grid.alphas,
            seed: grid.seed,
            n_sim: grid.n_sim,
            n_perm: grid.n_perm,
            m_values: grid.m_values,
            workers: grid.workers,
            mode: None,
            machine: false,
        }
    }

    pub const KEYS: [&'static str; 16] = [
        "command", "input", "output", "layout", "layouts", "settings", "methods", "contrast", "alpha", "seed",
        "n_sim", "n_perm", "m", "workers", "mode", "machine",
    ];

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let value = value.trim();
        let bad = |what: &str| CliError::Config(format!("bad value '{value}' for {key}: expected {what}"));
        match key.trim().replace('-', "_").as_str() {
            "command" => {
                self.command = match value {
                    "analyze" => Command::Analyze,
                    "simulate" => Command::Simulate,
                    "report" => Command::Report,
                    _ => return Err(bad("analyze, simulate or report")),
                }
            }
            "input" => self.input = optional_path(value),
            "output" | "out" | "out_dir" => self.output = optional_path(value),
            "layout" => self.layout = if value.is_empty() { None } else { Some(value.parse()?) },
            "layouts" => self.layouts = list(value, |s| s.parse::<Layout>().map_err(CliError::from))?,
            "settings" => self.settings = list(value, |s| s.parse().map_err(|_| bad("settings 1, 2 or 3")))?,
            "methods" | "method" => {
                self.methods = if value == "all" {
                    Vec::new()
                } else {
                    list(value, |s| s.parse::<Method>().map_err(CliError::from))?
                }
            }
            "contrast" => {
                self.contrast = if value == "default" {
                    None
                } else {
                    Some(parse_contrast(value)?)
                }
            }
            "alpha" | "alphas" => {
                self.alphas = list(value, |s| match s.parse::<f64>() {
                    Ok(a) if a > 0.0 && a < 1.0 => Ok(a),
                    _ => Err(bad("levels in (0, 1)")),
                })?
            }
            "seed" => self.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "n_sim" => self.n_sim = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "n_perm" => self.n_perm = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "m" | "m_values" => self.m_values = list(value, |s| s.parse().map_err(|_| bad("unsigned integers")))?,
            "workers" => self.workers = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "mode" => self.mode = if value.is_empty() { None } else { Some(value.parse()?) },
            "machine" => self.machine = value.parse().map_err(|_| bad("true or false"))?,
            other => {
                return Err(CliError::Config(format!(
                    "unknown key '{other}', expected one of {}",
                    Self::KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = Some(k as u64 + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::parse(lineno, format!("expected key = value, got '{line}'")))?;
            self.set(key, value).map_err(|e| match e {
                CliError::Config(msg) | CliError::Core(factest_core::Error::Config(msg)) => CliError::parse(lineno, msg),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_text(command: Command, text: &str) -> CliResult<Self> {
        let mut config = Self::new(command);
        config.apply_text(text)?;
        Ok(config)
    }

    /// Every key in file form; [`RunConfig::from_text`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let join = |v: Vec<String>| v.join(",");
        let lines = [
            ("command", self.command.tag().to_string()),
            ("input", path(&self.input)),
            ("output", path(&self.output)),
            ("layout", self.layout.map(|l| l.to_string()).unwrap_or_default()),
            ("layouts", join(self.layouts.iter().map(|l| l.to_string()).collect())),
            ("settings", join(self.settings.iter().map(|s| s.to_string()).collect())),
            (
                "methods",
                if self.methods.is_empty() {
                    "all".to_string()
                } else {
                    join(self.methods.iter().map(|m| m.to_string()).collect())
                },
            ),
            ("contrast", self.contrast.map_or("default".to_string(), |c| c.to_string())),
            ("alpha", join(self.alphas.iter().map(|a| a.to_string()).collect())),
            ("seed", self.seed.to_string()),
            ("n_sim", self.n_sim.to_string()),
            ("n_perm", self.n_perm.to_string()),
            ("m", join(self.m_values.iter().map(|m| m.to_string()).collect())),
            ("workers", self.workers.to_string()),
            ("mode", self.mode.map(|m| m.to_string()).unwrap_or_default()),
            ("machine", self.machine.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn grid(&self) -> GridConfig {
        GridConfig {
            layouts: self.layouts.clone(),
            settings: self.settings.clone(),
            methods: if self.methods.is_empty() {
                Method::ALL.to_vec()
            } else {
                self.methods.clone()
            },
            m_values: self.m_values.clone(),
            alphas: self.alphas.clone(),
            n_sim: self.n_sim,
            n_perm: self.n_perm,
            seed: self.seed,
            workers: self.workers,
        }
    }
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn list<T>(value: &str, parse: impl Fn(&str) -> CliResult<T>) -> CliResult<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip() {
        for c in [Command::Analyze, Command::Simulate, Command::Report] {
            let config = RunConfig::new(c);
            assert_eq!(RunConfig::from_text(Command::Analyze, &config.to_text()).unwrap(), config);
        }
    }

    #[test]
    fn file_values_and_comments() {
        let text = "# grid\nn_sim = 500 # fewer\nm = 0, 25\nmethods = WTS,rWTPS\nlayout = twoway:2,5\n";
        let c = RunConfig::from_text(Command::Simulate, text).unwrap();
        assert_eq!(c.n_sim, 500);
        assert_eq!(c.m_values, vec![0, 25]);
        assert_eq!(c.methods, vec![Method::Wts, Method::RankWtps]);
        assert_eq!(c.layout, Some(LayoutSpec::TwoWay { a: 2, b: 5 }));
    }

    #[test]
    fn errors_name_the_line() {
        let err = RunConfig::from_text(Command::Simulate, "seed = 1\nn_sim = lots\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: Some(2), .. }), "{err}");
        let err = RunConfig::from_text(Command::Simulate, "seed 1\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: Some(1), .. }), "{err}");
        assert!(RunConfig::from_text(Command::Simulate, "colour = red\n").is_err());
    }

    #[test]
    fn layout_spec_parsing() {
        assert_eq!("oneway".parse::<LayoutSpec>().unwrap(), LayoutSpec::OneWay);
        assert_eq!("twoway:3,4".parse::<LayoutSpec>().unwrap(), LayoutSpec::TwoWay { a: 3, b: 4 });
        assert!("twoway:1,4".parse::<LayoutSpec>().is_err());
        assert!("threeway".parse::<LayoutSpec>().is_err());
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        let command = prop_oneof![Just(Command::Analyze), Just(Command::Simulate), Just(Command::Report)];
        let path = proptest::option::of("[a-z0-9_/.]{1,12}".prop_map(PathBuf::from));
        let layout = proptest::option::of(prop_oneof![
            Just(LayoutSpec::OneWay),
            (2usize..6, 2usize..6).prop_map(|(a, b)| LayoutSpec::TwoWay { a, b })
        ]);
        let contrast = proptest::option::of(prop_oneof![
            Just(HypothesisKind::Overall),
            Just(HypothesisKind::MainA),
            Just(HypothesisKind::MainB),
            Just(HypothesisKind::Interaction)
        ]);
        let mode = proptest::option::of(prop_oneof![Just(ReportMode::Dots), Just(ReportMode::Deviation)]);
        (
            (command, path.clone(), path, layout, contrast, mode),
            (
                proptest::sample::subsequence(Layout::ALL.to_vec(), 1..=2),
                proptest::sample::subsequence(vec![1u8, 2, 3], 1..=3),
                proptest::sample::subsequence(Method::ALL.to_vec(), 0..=11),
                proptest::collection::vec(1e-6f64..0.999, 1..4),
                proptest::collection::vec(0usize..40, 1..6),
            ),
            (any::<u64>(), 1u64..100_000, 0u64..100_000, 0usize..64, any::<bool>()),
        )
            .prop_map(
                |(
                    (command, input, output, layout, contrast, mode),
                    (layouts, settings, methods, alphas, m_values),
                    (seed, n_sim, n_perm, workers, machine),
                )| RunConfig {
                    command,
                    input,
                    output,
                    layout,
                    layouts,
                    settings,
                    methods,
                    contrast,
                    alphas,
                    seed,
                    n_sim,
                    n_perm,
                    m_values,
                    workers,
                    mode,
                    machine,
                },
            )
    }

    proptest! {
        #[test]
        fn config_round_trips(config in arb_config()) {
            let back = RunConfig::from_text(Command::Analyze, &config.to_text()).unwrap();
            prop_assert_eq!(back, config);
        }
    }
}
