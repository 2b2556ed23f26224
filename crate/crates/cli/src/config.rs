//! Run configuration: `key = value` text with `[section]` headers, layered
//! as command line > config file > preset > defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Potential,
    Spectrum,
    Evolve,
    Rate,
    Radiate,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Potential => "potential",
            Scenario::Spectrum => "spectrum",
            Scenario::Evolve => "evolve",
            Scenario::Rate => "rate",
            Scenario::Radiate => "radiate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1b,
    Fig2,
    Fig3,
    Fig4,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1b => "fig1b",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }

    /// Keys the preset sets.
    pub fn values(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Preset::Fig1b => &[
                ("params.gamma", "0.2"),
                ("params.epsilon", "0.1"),
                ("params.ell", "1"),
                ("spectrum.k0_rho", FIG1B_SWEEP),
                ("spectrum.m_last", "15"),
            ],
            Preset::Fig2 => &[
                ("params.gamma", "0.05"),
                ("params.epsilon", "0.1"),
                ("params.k0_rho", "1"),
                ("params.ell", "1"),
                ("evolve.tau_end", "3000"),
                ("evolve.stride", "2"),
                ("evolve.snapshot_peak", "1"),
            ],
            Preset::Fig3 => &[
                ("params.gamma", "1"),
                ("params.epsilon", "0.1"),
                ("params.k0_rho", "5.605"),
                ("params.ell", "2"),
                ("rate.tau_end", "250"),
            ],
            Preset::Fig4 => &[
                ("params.gamma", "0.2"),
                ("params.epsilon", "0.1"),
                ("params.k0_rho", "5"),
                ("params.ell", "2"),
                ("evolve.tau_end", "1000"),
                ("evolve.stride", "2"),
                ("evolve.snapshot_peak", "5"),
            ],
        }
    }

    /// Keys the preset fixes although the figure does not state them.
    pub fn pinned(self) -> &'static [&'static str] {
        match self {
            Preset::Fig1b => &[],
            Preset::Fig2 | Preset::Fig3 | Preset::Fig4 => &["params.epsilon"],
        }
    }
}

const FIG1B_SWEEP: &str =
    "0.5,1,1.5,2,2.5,3,3.5,4,4.5,5,5.5,6,6.5,7,7.5,8,8.5,9,9.5,10";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Default,
    Preset,
    Config,
    CommandLine,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Default => "default",
            Source::Preset => "preset",
            Source::Config => "config",
            Source::CommandLine => "command-line",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    NonNegative,
    Positive,
    Int,
    Count { min: usize },
    Auto { min: usize },
    Bool,
    Choice(&'static [&'static str]),
    FloatList,
    Text,
}

struct KeySpec {
    key: &'static str,
    kind: Kind,
    default: &'static str,
}

const fn spec(key: &'static str, kind: Kind, default: &'static str) -> KeySpec {
    KeySpec { key, kind, default }
}

const SCHEMA: &[KeySpec] = &[
    spec("params.gamma", Kind::NonNegative, "0.2"),
    spec("params.epsilon", Kind::Positive, "0.1"),
    spec("params.k0_rho", Kind::Positive, "1"),
    spec("params.ell", Kind::Int, "1"),
    spec("params.m_max", Kind::Auto { min: 2 }, "auto"),
    spec("params.k_max", Kind::Auto { min: 1 }, "auto"),
    spec("ode.rel_tol", Kind::Positive, "1e-9"),
    spec("ode.abs_tol", Kind::Positive, "1e-12"),
    spec("ode.max_step", Kind::Positive, "1"),
    spec("ode.initial_step", Kind::Positive, "1e-3"),
    spec("potential.samples", Kind::Count { min: 2 }, "256"),
    spec("spectrum.k0_rho", Kind::FloatList, ""),
    spec("spectrum.m_first", Kind::Int, "0"),
    spec("spectrum.m_last", Kind::Int, "12"),
    spec("evolve.tau_end", Kind::Positive, "100"),
    spec("evolve.stride", Kind::Positive, "1"),
    spec("evolve.seed_amplitude", Kind::Positive, "1e-4"),
    spec("evolve.seed_mode", Kind::Choice(&["deterministic", "random"]), "deterministic"),
    spec("evolve.seed", Kind::Count { min: 0 }, "0"),
    spec("evolve.bunching_modes", Kind::Count { min: 0 }, "8"),
    spec("evolve.snapshot_peak", Kind::Count { min: 0 }, "0"),
    spec("rate.tau_end", Kind::Positive, "250"),
    spec("rate.stride", Kind::Positive, "1"),
    spec("rate.seed_population", Kind::Positive, "1e-6"),
    spec("rate.m_max", Kind::Auto { min: 1 }, "auto"),
    spec("rate.channel", Kind::Count { min: 0 }, "0"),
    spec("rate.dispersion", Kind::Bool, "true"),
    spec("radiate.snapshot", Kind::Text, ""),
    spec("radiate.bunching", Kind::Text, ""),
    spec("radiate.theta_count", Kind::Count { min: 2 }, "181"),
    spec("radiate.phi_count", Kind::Count { min: 2 }, "256"),
];

fn lookup(key: &str) -> Option<&'static KeySpec> {
    SCHEMA.iter().find(|s| s.key == key)
}

fn check_value(spec: &KeySpec, value: &str) -> Result<(), CliError> {
    let bad = |constraint: &str| {
        Err(CliError::Config(format!("{} = {value:?}: expected {constraint}", spec.key)))
    };
    let float = |v: &str| v.parse::<f64>().ok().filter(|x| x.is_finite());
    match spec.kind {
        Kind::NonNegative => match float(value) {
            Some(x) if x >= 0.0 => Ok(()),
            _ => bad("a finite number >= 0"),
        },
        Kind::Positive => match float(value) {
            Some(x) if x > 0.0 => Ok(()),
            _ => bad("a finite number > 0"),
        },
        Kind::Int => match value.parse::<i32>() {
            Ok(_) => Ok(()),
            Err(_) => bad("an integer"),
        },
        Kind::Count { min } => match value.parse::<usize>() {
            Ok(n) if n >= min => Ok(()),
            _ => bad(&format!("an integer >= {min}")),
        },
        Kind::Auto { min } => match value.parse::<usize>() {
            Ok(n) if n >= min => Ok(()),
            _ if value == "auto" => Ok(()),
            _ => bad(&format!("\"auto\" or an integer >= {min}")),
        },
        Kind::Bool => match value {
            "true" | "false" => Ok(()),
            _ => bad("true or false"),
        },
        Kind::Choice(options) => {
            if options.contains(&value) {
                Ok(())
            } else {
                bad(&format!("one of {}", options.join(", ")))
            }
        }
        Kind::FloatList => {
            if value.is_empty() || split_list(value).all(|v| float(v).is_some_and(|x| x > 0.0)) {
                Ok(())
            } else {
                bad("a comma-separated list of positive numbers")
            }
        }
        Kind::Text => Ok(()),
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|v| !v.is_empty())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub source: Source,
}

/// A user- or file-supplied value that replaced a preset value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Override {
    pub key: String,
    pub preset_value: String,
    pub value: String,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub preset: Option<Preset>,
    entries: BTreeMap<&'static str, (String, Source)>,
}

/// Parses `key = value` text. Keys inside a `[section]` are namespaced as
/// `section.key`; keys before any section must already be qualified.
/// `#` and `;` start comments.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut section: Option<String> = None;
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: &str| CliError::Config(format!("line {}: {msg}: {raw:?}", number + 1));
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| at("unterminated section header"))?.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(at("invalid section name"));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| at("expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(at("empty key"));
        }
        let full = match &section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        };
        if pairs.iter().any(|(k, _)| *k == full) {
            return Err(at(&format!("duplicate key {full}")));
        }
        pairs.push((full, value.to_string()));
    }
    Ok(pairs)
}

/// Parses one `--set key=value` argument.
pub fn parse_assignment(arg: &str) -> Result<(String, String), CliError> {
    let (key, value) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {arg:?}")))?;
    Ok((key.trim().to_string(), value.trim().to_string()))
}

impl RunConfig {
    /// Layers defaults, preset, config-file pairs and command-line pairs.
    pub fn resolve(
        scenario: Scenario,
        preset: Option<Preset>,
        file: &[(String, String)],
        command_line: &[(String, String)],
    ) -> Result<Self, CliError> {
        let mut entries: BTreeMap<&'static str, (String, Source)> = SCHEMA
            .iter()
            .map(|s| (s.key, (s.default.to_string(), Source::Default)))
            .collect();
        if let Some(p) = preset {
            for (key, value) in p.values() {
                entries.insert(lookup(key).expect("preset keys are in the schema").key, (value.to_string(), Source::Preset));
            }
        }
        for (pairs, source) in [(file, Source::Config), (command_line, Source::CommandLine)] {
            for (key, value) in pairs {
                let spec = lookup(key).ok_or_else(|| CliError::Config(format!("unknown key {key}")))?;
                entries.insert(spec.key, (value.clone(), source));
            }
        }
        let config = Self { scenario, preset, entries };
        config.validate()?;
        Ok(config)
    }

    /// Rebuilds a configuration from recorded entries.
    pub fn from_entries(scenario: Scenario, preset: Option<Preset>, recorded: &[Entry]) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for e in recorded {
            let spec = lookup(&e.key).ok_or_else(|| CliError::Config(format!("unknown key {}", e.key)))?;
            entries.insert(spec.key, (e.value.clone(), e.source));
        }
        if let Some(missing) = SCHEMA.iter().find(|s| !entries.contains_key(s.key)) {
            return Err(CliError::Config(format!("recorded configuration lacks {}", missing.key)));
        }
        let config = Self { scenario, preset, entries };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        for (key, (value, _)) in &self.entries {
            check_value(lookup(key).expect("entries follow the schema"), value)?;
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> &str {
        match self.entries.get(key) {
            Some((value, _)) => value,
            None => panic!("{key} is not a configuration key"),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> T {
        // Values were checked against the schema on construction.
        self.raw(key).parse().unwrap_or_else(|_| panic!("{key} was validated"))
    }

    pub fn text(&self, key: &str) -> &str {
        self.raw(key)
    }

    /// `None` for `auto`.
    pub fn auto(&self, key: &str) -> Option<usize> {
        match self.raw(key) {
            "auto" => None,
            v => Some(v.parse().expect("validated")),
        }
    }

    pub fn list(&self, key: &str) -> Vec<f64> {
        split_list(self.raw(key)).map(|v| v.parse().expect("validated")).collect()
    }

    pub fn entries(&self) -> Vec<Entry> {
        self.entries
            .iter()
            .map(|(k, (v, s))| Entry { key: k.to_string(), value: v.clone(), source: *s })
            .collect()
    }

    pub fn overrides(&self) -> Vec<Override> {
        let Some(preset) = self.preset else { return Vec::new() };
        preset
            .values()
            .iter()
            .filter_map(|(key, preset_value)| {
                let (value, source) = &self.entries[key];
                (*source != Source::Preset).then(|| Override {
                    key: key.to_string(),
                    preset_value: preset_value.to_string(),
                    value: value.clone(),
                    source: *source,
                })
            })
            .collect()
    }

    /// Preset pins still in effect.
    pub fn pinned(&self) -> Vec<String> {
        self.preset
            .map(|p| {
                p.pinned()
                    .iter()
                    .filter(|k| self.entries[**k].1 == Source::Preset)
                    .map(|k| k.to_string())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Canonical text of every resolved value, grouped by section.
    pub fn resolved_text(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for (key, (value, _)) in &self.entries {
            let (section, name) = key.split_once('.').expect("keys are qualified");
            if section != current {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{section}]\n"));
                current = section;
            }
            out.push_str(&format!("{name} = {value}\n"));
        }
        out
    }
}
