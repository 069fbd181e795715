//! Command-line front end. [`run`] is pure: it maps a parsed configuration
//! and an input byte stream to output bytes and an exit code.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::albert::{validate, FactorDescriptor};
use crate::engine::{decide_product, mt_verdict, Catalog, Effect, EngineError, MtStatus, Splits, Verdict};
use crate::lie_model::{build_model_set, ModelSet};
use crate::minuscule::catalog;
use crate::oracle::{builtin_fixtures, parse_fixtures, verify_ribet, RibetOutcome};
use crate::root_systems::{phi0_preimage, short_root_restriction_sum, RootSystemSum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Parser)]
#[command(name = "mtsplit", version, about = "Splitting of l-adic monodromy groups of products of abelian varieties")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: OutputFormat,
    #[arg(long, default_value_t = 12, global = true)]
    pub max_rank: u32,
    /// Override the catalog's characteristic.
    #[arg(long = "char", global = true)]
    pub characteristic: Option<u64>,
    /// Override the catalog's ordinary-reduction flag (sets it to true).
    #[arg(long, global = true)]
    pub ordinary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check every factor descriptor of a JSON catalog.
    Validate { input: Option<PathBuf> },
    /// Candidate monodromy models per factor.
    Classify { input: Option<PathBuf> },
    /// Splitting verdict for the whole catalog.
    Decide { input: Option<PathBuf> },
    /// Mumford-Tate verdict (total dimension at most 5, characteristic 0).
    Mt { input: Option<PathBuf> },
    /// Minuscule weights with dimensions and dualities up to --max-rank.
    Table,
    /// Short-root restriction of a root system sum such as "C4" or "2*A1+B3".
    Phi0 {
        sum: String,
        #[arg(long)]
        preimage: bool,
    },
    /// Evaluate the Ribet-style lemma on fixtures from a file or the built-in corpus.
    Oracle {
        input: Option<PathBuf>,
        #[arg(long)]
        builtin: bool,
    },
}

impl Command {
    /// Whether the subcommand reads an input stream.
    pub fn reads_input(&self) -> bool {
        match self {
            Command::Validate { .. } | Command::Classify { .. } | Command::Decide { .. } | Command::Mt { .. } => true,
            Command::Oracle { builtin, .. } => !builtin,
            Command::Table | Command::Phi0 { .. } => false,
        }
    }

    pub fn input_path(&self) -> Option<&PathBuf> {
        match self {
            Command::Validate { input }
            | Command::Classify { input }
            | Command::Decide { input }
            | Command::Mt { input }
            | Command::Oracle { input, .. } => input.as_ref(),
            Command::Table | Command::Phi0 { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub code: i32,
}

impl Output {
    fn ok(text: String, code: i32) -> Self {
        Output { stdout: text.into_bytes(), stderr: Vec::new(), code }
    }

    fn fail(message: String) -> Self {
        Output { stdout: Vec::new(), stderr: format!("error: {message}\n").into_bytes(), code: EXIT_INVALID }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn parse_catalog(config: &CliConfig, input: &[u8]) -> Result<Catalog, String> {
    let text = std::str::from_utf8(input).map_err(|e| format!("input is not UTF-8 (byte {})", e.valid_up_to()))?;
    let mut cat: Catalog = serde_json::from_str(text)
        .map_err(|e| format!("parse error at line {}, column {}: {e}", e.line(), e.column()))?;
    if let Some(p) = config.characteristic {
        cat.context.characteristic = p;
    }
    if config.ordinary {
        cat.context.ordinary_reduction_dim1 = true;
    }
    Ok(cat)
}

/// Runs one subcommand on `input`.
pub fn run(config: &CliConfig, input: &[u8]) -> Output {
    let json = config.format == OutputFormat::Json;
    match &config.command {
        Command::Validate { .. } => match parse_catalog(config, input) {
            Ok(cat) => run_validate(&cat, json),
            Err(e) => Output::fail(e),
        },
        Command::Classify { .. } => match parse_catalog(config, input) {
            Ok(cat) => run_classify(&cat, json),
            Err(e) => Output::fail(e),
        },
        Command::Decide { .. } => match parse_catalog(config, input) {
            Ok(cat) => verdict_output(decide_product(&cat), json, |v| v.splits == Splits::Yes),
            Err(e) => Output::fail(e),
        },
        Command::Mt { .. } => match parse_catalog(config, input) {
            Ok(cat) => verdict_output(mt_verdict(&cat), json, |v| v.mt == MtStatus::Holds),
            Err(e) => Output::fail(e),
        },
        Command::Table => run_table(config.max_rank, json),
        Command::Phi0 { sum, preimage } => run_phi0(sum, *preimage, config.max_rank, json),
        Command::Oracle { builtin, .. } => run_oracle(*builtin, input, json),
    }
}

fn run_validate(cat: &Catalog, json: bool) -> Output {
    let per: Vec<(&FactorDescriptor, Vec<String>)> = cat
        .factors
        .iter()
        .map(|f| (f, validate(f, &cat.context).iter().map(ToString::to_string).collect()))
        .collect();
    let catalog_level = cat.violations();
    let valid = catalog_level.is_empty();
    let text = if json {
        let factors: Vec<_> = per.iter().map(|(f, v)| json!({"label": f.label, "violations": v})).collect();
        to_json(&json!({"valid": valid, "factors": factors, "catalog_violations": catalog_level}))
    } else {
        let mut s = String::new();
        for (f, v) in &per {
            if v.is_empty() {
                s.push_str(&format!("{}: ok\n", f.label));
            } else {
                s.push_str(&format!("{}: {}\n", f.label, v.join("; ")));
            }
        }
        for v in catalog_level.iter().filter(|v| v.starts_with("duplicate") || v.starts_with("empty")) {
            s.push_str(&format!("catalog: {v}\n"));
        }
        s.push_str(if valid { "valid\n" } else { "invalid\n" });
        s
    };
    Output::ok(text, if valid { EXIT_OK } else { EXIT_INVALID })
}

fn run_classify(cat: &Catalog, json: bool) -> Output {
    let violations = cat.violations();
    if !violations.is_empty() {
        return Output::fail(EngineError::InvalidCatalog(violations).to_string());
    }
    let mut rows = Vec::new();
    let mut all_classified = true;
    for f in &cat.factors {
        let ms = build_model_set(f, &cat.context).expect("validated");
        all_classified &= ms.candidates().is_some();
        rows.push((f.label.clone(), ms));
    }
    let text = if json {
        let v: Vec<_> = rows.iter().map(|(l, ms)| json!({"label": l, "models": ms})).collect();
        to_json(&v)
    } else {
        let mut s = String::new();
        for (l, ms) in &rows {
            match ms {
                ModelSet::Candidates(cs) => {
                    s.push_str(&format!("{l}: {} candidate(s)\n", cs.len()));
                    for c in cs {
                        let factors: Vec<String> = c
                            .factors
                            .iter()
                            .map(|a| {
                                let m: Vec<String> = a.module.iter().map(|(w, k)| format!("{k}x{w}")).collect();
                                format!("{} on {}", a.system, m.join("+"))
                            })
                            .collect();
                        let tensor = if c.tensor { " (tensor product)" } else { "" };
                        s.push_str(&format!(
                            "  center rank {}; {}{}\n",
                            c.center_rank,
                            if factors.is_empty() { "torus".to_string() } else { factors.join(", ") },
                            tensor
                        ));
                    }
                }
                ModelSet::Unclassified { reason } => s.push_str(&format!("{l}: unclassified ({reason})\n")),
            }
        }
        s
    };
    Output::ok(text, if all_classified { EXIT_OK } else { EXIT_INCONCLUSIVE })
}

fn verdict_output(result: Result<Verdict, EngineError>, json: bool, decided: impl Fn(&Verdict) -> bool) -> Output {
    let v = match result {
        Ok(v) => v,
        Err(e) => return Output::fail(e.to_string()),
    };
    let code = if decided(&v) { EXIT_OK } else { EXIT_INCONCLUSIVE };
    let text = if json { to_json(&v) } else { verdict_text(&v) };
    Output::ok(text, code)
}

fn labels(ls: &[String]) -> String {
    format!("{{{}}}", ls.join(", "))
}

/// Human-readable rendering of a verdict and its trace.
pub fn verdict_text(v: &Verdict) -> String {
    let splits = match v.splits {
        Splits::Yes => "yes",
        Splits::NoHomNonzero => "no (nonzero homomorphism)",
        Splits::Inconclusive => "inconclusive",
    };
    let mt = match v.mt {
        MtStatus::Holds => "holds",
        MtStatus::Inconclusive => "inconclusive",
    };
    let blocks: Vec<String> = v.blocks.iter().map(|b| labels(b)).collect();
    let mut s = format!("splits: {splits}\nmt: {mt}\nblocks: {}\ntrace:\n", blocks.join(" x "));
    for (i, f) in v.trace.iter().enumerate() {
        let effect = match &f.effect {
            Effect::Split { parts } => {
                let p: Vec<String> = parts.iter().map(|p| labels(p)).collect();
                format!("split {}", p.join(" x "))
            }
            Effect::MtHolds { labels: ls } => format!("mt holds for {}", labels(ls)),
            Effect::MtOpen { labels: ls } => format!("mt open for {}", labels(ls)),
            Effect::Note => "note".to_string(),
        };
        let rule = serde_json::to_value(f.rule).ok().and_then(|r| r.as_str().map(str::to_string)).unwrap_or_default();
        s.push_str(&format!("  {:>2}. {rule}: {effect}\n      {}\n      {}\n", i + 1, f.anchor, f.details));
    }
    s
}

fn run_table(max_rank: u32, json: bool) -> Output {
    let entries = match catalog(max_rank) {
        Ok(e) => e,
        Err(e) => return Output::fail(e.to_string()),
    };
    let text = if json {
        to_json(&entries)
    } else {
        let mut s = format!("{:<6} {:<6} {:>12}  {}\n", "system", "weight", "dimension", "duality");
        for e in &entries {
            let duality = serde_json::to_value(e.duality).ok().and_then(|d| d.as_str().map(str::to_string));
            s.push_str(&format!(
                "{:<6} {:<6} {:>12}  {}\n",
                e.system.to_string(),
                e.weight.to_string(),
                e.dimension,
                duality.unwrap_or_default()
            ));
        }
        s
    };
    Output::ok(text, EXIT_OK)
}

fn run_phi0(sum: &str, preimage: bool, max_rank: u32, json: bool) -> Output {
    let parsed: RootSystemSum = match sum.parse() {
        Ok(p) => p,
        Err(e) => return Output::fail(format!("`{sum}`: {e}")),
    };
    let restriction = short_root_restriction_sum(&parsed);
    let pre: Option<Vec<RootSystemSum>> = preimage.then(|| phi0_preimage(&parsed, max_rank).into_iter().collect());
    let text = if json {
        let mut v = json!({"input": parsed, "restriction": restriction});
        if let Some(p) = &pre {
            v["preimage"] = json!(p);
        }
        to_json(&v)
    } else {
        let mut s = format!("{restriction}\n");
        if let Some(p) = &pre {
            let list: Vec<String> = p.iter().map(ToString::to_string).collect();
            s.push_str(&format!("preimage (rank <= {max_rank}): {}\n", list.join(", ")));
        }
        s
    };
    Output::ok(text, EXIT_OK)
}

fn run_oracle(builtin: bool, input: &[u8], json: bool) -> Output {
    let fixtures = if builtin {
        builtin_fixtures()
    } else {
        let text = match std::str::from_utf8(input) {
            Ok(t) => t,
            Err(e) => return Output::fail(format!("input is not UTF-8 (byte {})", e.valid_up_to())),
        };
        match parse_fixtures(text) {
            Ok(f) => f,
            Err(e) => return Output::fail(e.to_string()),
        }
    };
    let mut results = Vec::new();
    for f in &fixtures {
        match f.algebra() {
            Ok(g) => results.push((f.name.clone(), verify_ribet(&g))),
            Err(e) => return Output::fail(format!("fixture {}: {e}", f.name)),
        }
    }
    let all_applicable = results.iter().all(|(_, r)| r.report().is_some());
    let text = if json {
        let v: Vec<_> = results.iter().map(|(n, r)| json!({"fixture": n, "outcome": r})).collect();
        to_json(&v)
    } else {
        let mut s = String::new();
        for (n, r) in &results {
            match r {
                RibetOutcome::Applicable(rep) => {
                    let b = |x: bool| if x { "true" } else { "false" };
                    s.push_str(&format!(
                        "{n}: dim {} blocks {:?} commutant {} a={} b1={} b2={} conclusion={} implications={}\n",
                        rep.dimension,
                        rep.block_algebra_dimensions,
                        rep.commutant_dimension,
                        b(rep.condition_a),
                        b(rep.condition_b1),
                        b(rep.condition_b2),
                        b(rep.conclusion),
                        if rep.implications_hold { "ok" } else { "VIOLATED" }
                    ));
                }
                RibetOutcome::Inapplicable { block, reason } => {
                    s.push_str(&format!("{n}: inapplicable (block {block}: {reason})\n"));
                }
            }
        }
        s
    };
    Output::ok(text, if all_applicable { EXIT_OK } else { EXIT_INCONCLUSIVE })
}
