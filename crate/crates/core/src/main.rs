//! Command-line front end.
//!
//! `analyze` exits 0 when the model terminates, 1 when a verified
//! non-termination witness exists, 2 when the result is unknown, and >2 on
//! errors. `oracle` runs bounded exhaustive execution over an integer box.

use clap::{Parser, Subcommand, ValueEnum};
use phaserank::cfr::{dump_chc, ts_to_chc};
use phaserank::driver::{
    analyze, refine_whole, system_value, verify_report, CfrScheme, RankClass, StrategyConfig,
    Verdict,
};
use phaserank::geometry::{parse_constraints, Rel};
use phaserank::model::{parse_document, Model};
use phaserank::oracle::{run_box, run_state, BoxConfig, StateOutcome};
use serde_json::json;
use std::collections::BTreeMap;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "phaserank",
    about = "Termination analysis for numerical transition systems and linear-constraint loops",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a model file and report per-component verdicts.
    Analyze {
        /// Path to a JSON model document.
        file: String,
        #[arg(long, value_enum, default_value_t = Strategy::Auto)]
        strategy: Strategy,
        #[arg(long, value_enum, default_value_t = Cfr::None)]
        cfr: Cfr,
        #[arg(long, default_value_t = 5)]
        max_mlrf_depth: u32,
        #[arg(long, default_value_t = 5)]
        max_lex_stages: u32,
        #[arg(long, default_value_t = 10)]
        max_iter_rounds: u32,
        /// Write the model's Horn-clause form to this path.
        #[arg(long)]
        dump_chc: Option<String>,
        /// Write the control-flow-refined system (JSON) to this path.
        #[arg(long)]
        dump_refined: Option<String>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        report: ReportFormat,
        /// Re-verify every certificate with the independent checker.
        #[arg(long)]
        check: bool,
        /// Experimental: attach inferred properties to every component
        /// location instead of only its entries.
        #[arg(long)]
        props_all_locations: bool,
    },
    /// Bounded exhaustive execution over integer states in [-B, B]^n.
    Oracle {
        /// Path to a JSON model document.
        file: String,
        /// Box radius B.
        #[arg(long = "box", default_value_t = 5)]
        bound: i64,
        #[arg(long, default_value_t = 200)]
        max_steps: usize,
        /// Initial state, e.g. "x=0,y=5"; all box states when omitted.
        #[arg(long)]
        from: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Lrf,
    Lex,
    Mlrf,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cfr {
    None,
    Pre,
    #[value(name = "on-failure")]
    OnFailure,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Analyze {
            file,
            strategy,
            cfr,
            max_mlrf_depth,
            max_lex_stages,
            max_iter_rounds,
            dump_chc: dump_chc_path,
            dump_refined,
            report,
            check,
            props_all_locations,
        } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| format!("cannot read `{file}`: {e}"))?;
            let model = parse_document(&text).map_err(|e| e.to_string())?;
            if props_all_locations {
                eprintln!(
                    "note: --props-all-locations is experimental; the property pool is shared \
                     across predicates, so it currently coincides with the default inference"
                );
            }
            let cfg = StrategyConfig {
                rank_classes: match strategy {
                    Strategy::Lrf => vec![RankClass::Lrf],
                    Strategy::Lex => vec![RankClass::Lex],
                    Strategy::Mlrf => vec![RankClass::MlrfBounded, RankClass::MlrfIterative],
                    Strategy::Auto => vec![
                        RankClass::Lrf,
                        RankClass::Lex,
                        RankClass::MlrfBounded,
                        RankClass::MlrfIterative,
                    ],
                },
                cfr_scheme: match cfr {
                    Cfr::None => CfrScheme::None,
                    Cfr::Pre => CfrScheme::Pre,
                    Cfr::OnFailure => CfrScheme::OnFailureScc,
                },
                max_mlrf_depth,
                max_lex_stages,
                max_iterative_rounds: max_iter_rounds,
            };
            if let Some(path) = dump_chc_path {
                let ts = match &model {
                    Model::Ts(ts) => ts.clone(),
                    Model::Loop(l) => l.as_transition_system(),
                };
                std::fs::write(&path, dump_chc(&ts_to_chc(&ts)))
                    .map_err(|e| format!("cannot write `{path}`: {e}"))?;
            }
            let analysis = analyze(&model, &cfg).map_err(|e| e.to_string())?;
            if let Some(path) = dump_refined {
                let refined = match &analysis.refined_system {
                    Some(r) => r.clone(),
                    None => {
                        let ts = match &model {
                            Model::Ts(ts) => ts.clone(),
                            Model::Loop(l) => l.as_transition_system(),
                        };
                        refine_whole(&ts).map_err(|e| e.to_string())?
                    }
                };
                let doc = serde_json::to_string_pretty(&system_value(&refined))
                    .expect("system serializes");
                std::fs::write(&path, doc).map_err(|e| format!("cannot write `{path}`: {e}"))?;
            }
            if check {
                verify_report(&model, &analysis)
                    .map_err(|e| format!("certificate check failed: {e}"))?;
            }
            match report {
                ReportFormat::Text => print!("{}", analysis.to_text()),
                ReportFormat::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&analysis.to_json()).expect("report serializes")
                ),
            }
            Ok(match analysis.overall {
                Verdict::Terminating => ExitCode::from(0),
                Verdict::Nonterminating => ExitCode::from(1),
                Verdict::Unknown => ExitCode::from(2),
            })
        }
        Command::Oracle {
            file,
            bound,
            max_steps,
            from,
        } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| format!("cannot read `{file}`: {e}"))?;
            let model = parse_document(&text).map_err(|e| e.to_string())?;
            let vars = match &model {
                Model::Ts(ts) => ts.vars().to_vec(),
                Model::Loop(l) => l.vars().to_vec(),
            };
            let cfg = BoxConfig { bound, max_steps };
            let value = match from {
                Some(spec) => {
                    let state = parse_state(&spec, &vars)?;
                    let outcome = run_state(&model, cfg, &state);
                    json!({
                        "format": 1,
                        "box": bound,
                        "max_steps": max_steps,
                        "state": state_value(&vars, &state),
                        "outcome": outcome_value(outcome),
                    })
                }
                None => {
                    let verdict = run_box(&model, cfg);
                    let outcomes: Vec<_> = verdict
                        .outcomes
                        .iter()
                        .map(|(state, outcome)| {
                            json!({
                                "state": state_value(&vars, state),
                                "outcome": outcome_value(*outcome),
                            })
                        })
                        .collect();
                    json!({
                        "format": 1,
                        "box": bound,
                        "max_steps": max_steps,
                        "outcomes": outcomes,
                    })
                }
            };
            println!("{}", serde_json::to_string_pretty(&value).expect("serializes"));
            Ok(ExitCode::from(0))
        }
    }
}

fn parse_state(spec: &str, vars: &[phaserank::geometry::Var]) -> Result<Vec<i64>, String> {
    use num_traits::ToPrimitive;
    let constraints = parse_constraints(spec).map_err(|e| format!("bad --from: {e}"))?;
    let mut values: BTreeMap<String, i64> = BTreeMap::new();
    for c in &constraints {
        if c.rel != Rel::Eq {
            return Err(format!("--from expects equalities, got `{c}`"));
        }
        let mut vars_in: Vec<_> = c.vars().collect();
        if vars_in.len() != 1 {
            return Err(format!("--from expects `var = integer`, got `{c}`"));
        }
        let v = vars_in.pop().expect("one var").clone();
        // lhs = coeff * v + k = 0, so v = -k / coeff.
        let coeff = c.lhs.coeff(&v);
        let val = -c.lhs.constant_part().clone() / coeff;
        if !val.is_integer() {
            return Err(format!("--from value for `{v}` is not an integer"));
        }
        let n = val
            .to_integer()
            .to_i64()
            .ok_or_else(|| format!("--from value for `{v}` is out of range"))?;
        values.insert(v.name().to_string(), n);
    }
    vars.iter()
        .map(|v| {
            values
                .get(v.name())
                .copied()
                .ok_or_else(|| format!("--from misses variable `{v}`"))
        })
        .collect()
}

fn state_value(vars: &[phaserank::geometry::Var], state: &[i64]) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    for (v, s) in vars.iter().zip(state) {
        m.insert(v.name().to_string(), json!(s));
    }
    serde_json::Value::Object(m)
}

fn outcome_value(o: StateOutcome) -> serde_json::Value {
    match o {
        StateOutcome::Terminated { steps } => json!({"kind": "terminated", "steps": steps}),
        StateOutcome::Nonterminated => json!({"kind": "nonterminated"}),
        StateOutcome::Escaped => json!({"kind": "escaped"}),
        StateOutcome::Budget => json!({"kind": "budget"}),
    }
}
