//! Run configuration: defaults, the commit-local INI file, and command
//! line overrides, merged in that order (later wins).

use std::path::PathBuf;

use serde::{Serialize, Serializer};

use crate::delta::DeltaMode;
use crate::inference::{EvalErrorPolicy, SpecConfig};
use crate::mutation::RelevanceMode;
use crate::testgen::GenConfig;
use crate::values::format_real;

use super::PipelineError;

/// Everything a run depends on besides the commit sources. Two runs with
/// equal configs and inputs produce byte-identical reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    /// Candidate quota per program point.
    pub candidates: usize,
    pub min_support: u32,
    pub mode: DeltaMode,
    pub relevance: RelevanceMode,
    pub eval_error_policy: EvalErrorPolicy,
    pub mutation_filter: bool,
    pub keep_representatives: bool,
    pub max_tests: usize,
    pub max_calls_per_test: usize,
    pub step_budget: u64,
    pub int_pool: Vec<i64>,
    #[serde(serialize_with = "reals_as_tokens")]
    pub real_pool: Vec<f64>,
    pub array_len_min: usize,
    pub array_len_max: usize,
    /// Simulation knobs.
    pub reps: u32,
    pub sizes: Vec<usize>,
    #[serde(serialize_with = "reals_as_tokens")]
    pub targets: Vec<f64>,
    pub count_untransplantable: bool,
    pub svg: bool,
}

/// JSON has no NaN, so report serializations carry reals as their
/// canonical tokens.
fn reals_as_tokens<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|&r| format_real(r)))
}

impl Default for RunConfig {
    fn default() -> Self {
        let gen = GenConfig::default();
        let spec = SpecConfig::default();
        RunConfig {
            seed: gen.seed,
            candidates: crate::assertlang::fuzz::DEFAULT_QUOTA,
            min_support: spec.min_support,
            mode: DeltaMode::Strict,
            relevance: RelevanceMode::Literal,
            eval_error_policy: spec.eval_error_policy,
            mutation_filter: spec.mutation_filter,
            keep_representatives: spec.keep_representatives,
            max_tests: gen.max_tests,
            max_calls_per_test: gen.max_calls_per_test,
            step_budget: gen.step_budget,
            int_pool: gen.int_pool,
            real_pool: gen.real_pool,
            array_len_min: gen.array_len_min,
            array_len_max: gen.array_len_max,
            reps: 100,
            sizes: (1..=10).collect(),
            targets: vec![0.25, 0.5, 0.75, 1.0],
            count_untransplantable: true,
            svg: false,
        }
    }
}

impl RunConfig {
    pub fn gen_config(&self) -> GenConfig {
        GenConfig {
            seed: self.seed,
            max_tests: self.max_tests,
            max_calls_per_test: self.max_calls_per_test,
            step_budget: self.step_budget,
            int_pool: self.int_pool.clone(),
            real_pool: self.real_pool.clone(),
            array_len_min: self.array_len_min,
            array_len_max: self.array_len_max,
        }
    }

    pub fn spec_config(&self) -> SpecConfig {
        SpecConfig {
            min_support: self.min_support,
            eval_error_policy: self.eval_error_policy,
            mutation_filter: self.mutation_filter,
            keep_representatives: self.keep_representatives,
        }
    }

    pub fn sim_config(&self) -> crate::experiments::SimConfig {
        crate::experiments::SimConfig {
            seed: self.seed,
            sizes: self.sizes.clone(),
            reps: self.reps,
            target_grid: self.targets.clone(),
            count_untransplantable: self.count_untransplantable,
        }
    }
}

/// Command line values; every field beats the INI file when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub candidates: Option<usize>,
    pub min_support: Option<u32>,
    pub mode: Option<DeltaMode>,
    pub relevance: Option<RelevanceMode>,
    pub reps: Option<u32>,
    pub out: Option<PathBuf>,
    pub svg: bool,
}

fn bad(key: &str, value: &str, want: &str) -> PipelineError {
    PipelineError::Input(format!(
        "config key {key}: cannot read {value:?} as {want}"
    ))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, PipelineError> {
    match v {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        _ => Err(bad(key, v, "a boolean")),
    }
}

fn parse_real(key: &str, v: &str) -> Result<f64, PipelineError> {
    if v == "nan" {
        return Ok(f64::NAN);
    }
    let r: f64 = v.parse().map_err(|_| bad(key, v, "a real"))?;
    if !r.is_finite() {
        return Err(bad(key, v, "a finite real or nan"));
    }
    Ok(r)
}

fn parse_list<T>(
    key: &str,
    v: &str,
    one: impl Fn(&str, &str) -> Result<T, PipelineError>,
) -> Result<Vec<T>, PipelineError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| one(key, s))
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str, want: &str) -> Result<T, PipelineError> {
    v.parse().map_err(|_| bad(key, v, want))
}

pub fn parse_mode(v: &str) -> Result<DeltaMode, String> {
    match v {
        "paper" => Ok(DeltaMode::Paper),
        "strict" => Ok(DeltaMode::Strict),
        _ => Err(format!("unknown mode {v:?}: expected paper or strict")),
    }
}

pub fn parse_relevance(v: &str) -> Result<RelevanceMode, String> {
    match v {
        "literal" => Ok(RelevanceMode::Literal),
        "refined" => Ok(RelevanceMode::Refined),
        _ => Err(format!("unknown relevance mode {v:?}: expected literal or refined")),
    }
}

/// Minimal INI reader: `key = value` lines, `#`/`;` full-line comments,
/// `[section]` headers tolerated and ignored. Unknown keys are errors so
/// a typo cannot silently fall back to a default. Returns the optional
/// `out` path alongside the config.
pub fn apply_ini(
    cfg: &mut RunConfig,
    text: &str,
) -> Result<Option<PathBuf>, PipelineError> {
    let mut out = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(PipelineError::Input(format!(
                "config line {}: expected key = value, got {raw:?}",
                lineno + 1
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "seed" => cfg.seed = parse_num(key, value, "an integer")?,
            "candidates" => cfg.candidates = parse_num(key, value, "an integer")?,
            "min_support" => cfg.min_support = parse_num(key, value, "an integer")?,
            "mode" => cfg.mode = parse_mode(value).map_err(PipelineError::Input)?,
            "relevance" => {
                cfg.relevance = parse_relevance(value).map_err(PipelineError::Input)?
            }
            "eval_error_policy" => {
                cfg.eval_error_policy = match value {
                    "falsifies" => EvalErrorPolicy::Falsifies,
                    "skips" => EvalErrorPolicy::Skips,
                    _ => return Err(bad(key, value, "falsifies or skips")),
                }
            }
            "mutation_filter" => cfg.mutation_filter = parse_bool(key, value)?,
            "keep_representatives" => cfg.keep_representatives = parse_bool(key, value)?,
            "max_tests" => cfg.max_tests = parse_num(key, value, "an integer")?,
            "max_calls_per_test" => cfg.max_calls_per_test = parse_num(key, value, "an integer")?,
            "step_budget" => cfg.step_budget = parse_num(key, value, "an integer")?,
            "int_pool" => {
                cfg.int_pool = parse_list(key, value, |k, v| parse_num(k, v, "an integer"))?
            }
            "real_pool" => cfg.real_pool = parse_list(key, value, parse_real)?,
            "array_len_min" => cfg.array_len_min = parse_num(key, value, "an integer")?,
            "array_len_max" => cfg.array_len_max = parse_num(key, value, "an integer")?,
            "reps" => cfg.reps = parse_num(key, value, "an integer")?,
            "sizes" => {
                cfg.sizes = parse_list(key, value, |k, v| parse_num(k, v, "an integer"))?
            }
            "targets" => cfg.targets = parse_list(key, value, parse_real)?,
            "count_untransplantable" => cfg.count_untransplantable = parse_bool(key, value)?,
            "svg" => cfg.svg = parse_bool(key, value)?,
            "out" => out = Some(PathBuf::from(value)),
            _ => {
                return Err(PipelineError::Input(format!(
                    "config line {}: unknown key {key:?}",
                    lineno + 1
                )))
            }
        }
    }
    Ok(out)
}

pub fn apply_overrides(cfg: &mut RunConfig, ov: &Overrides) {
    if let Some(v) = ov.seed {
        cfg.seed = v;
    }
    if let Some(v) = ov.candidates {
        cfg.candidates = v;
    }
    if let Some(v) = ov.min_support {
        cfg.min_support = v;
    }
    if let Some(v) = ov.mode {
        cfg.mode = v;
    }
    if let Some(v) = ov.relevance {
        cfg.relevance = v;
    }
    if let Some(v) = ov.reps {
        cfg.reps = v;
    }
    if ov.svg {
        cfg.svg = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ini_overrides_defaults_and_flags_override_ini() {
        let mut cfg = RunConfig::default();
        let ini = "\
# tighter generation for this case
seed = 7
array_len_min = 1
real_pool = -1.0, 0.0, 2.5
mode = paper
";
        let out = apply_ini(&mut cfg, ini).unwrap();
        assert_eq!(out, None);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.array_len_min, 1);
        assert_eq!(cfg.real_pool, vec![-1.0, 0.0, 2.5]);
        assert_eq!(cfg.mode, DeltaMode::Paper);

        let ov = Overrides { seed: Some(3), mode: Some(DeltaMode::Strict), ..Overrides::default() };
        apply_overrides(&mut cfg, &ov);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.mode, DeltaMode::Strict);
        // untouched by either layer
        assert_eq!(cfg.min_support, RunConfig::default().min_support);
    }

    #[test]
    fn unknown_keys_and_malformed_values_are_input_errors() {
        let mut cfg = RunConfig::default();
        assert!(apply_ini(&mut cfg, "sedd = 1").is_err());
        assert!(apply_ini(&mut cfg, "seed: 1").is_err());
        assert!(apply_ini(&mut cfg, "seed = one").is_err());
        assert!(apply_ini(&mut cfg, "real_pool = 0.0, inf").is_err());
    }

    #[test]
    fn nan_is_a_legal_pool_member_and_serializes_as_a_token() {
        let mut cfg = RunConfig::default();
        apply_ini(&mut cfg, "real_pool = nan, 1.0").unwrap();
        assert!(cfg.real_pool[0].is_nan());
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"nan\""));
    }

    #[test]
    fn sections_and_comments_are_tolerated() {
        let mut cfg = RunConfig::default();
        let ini = "[run]\n; comment\nseed = 9\nout = reports\n";
        let out = apply_ini(&mut cfg, ini).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(out, Some(PathBuf::from("reports")));
    }
}
