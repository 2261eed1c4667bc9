use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use sfill::catalog::{build_catalog, Catalog, SCHEMA};
use sfill::cfrac::{dual_expand, hj_expand, Rational};
use sfill::curveconfig::{verify_configuration, CurveConfiguration};
use sfill::enumerate::{EnumError, SearchBudget};
use sfill::plumbing::{build_concave_cap, build_star_graph, is_negative_definite, det, SeifertData};

#[derive(Parser)]
#[command(name = "sfill", version, about = "Minimal symplectic fillings of small Seifert 3-manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hirzebruch-Jung expansion of a/b and of its dual.
    Cf { slope: String },
    /// The plumbing graph of the Seifert manifold.
    Graph {
        #[arg(long)]
        seifert: String,
        #[arg(long)]
        dot: bool,
    },
    /// The concave cap.
    Cap {
        #[arg(long)]
        seifert: String,
        #[arg(long)]
        dot: bool,
    },
    /// Enumerate all fillings and their blowdown relations.
    Classify {
        #[arg(long)]
        seifert: String,
        /// Maximum number of search states to expand.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Also write catalog.json (and the DOT files with --format dot) here.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Check a curve configuration file.
    Verify { file: std::path::PathBuf },
    /// Only the blowdown graph of a classification.
    BlowdownGraph {
        #[arg(long)]
        seifert: String,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, value_enum, default_value_t = GraphFormat::Text)]
        format: GraphFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Text,
    Json,
    Dot,
}

/// On-disk form of a single configuration.
#[derive(Serialize, Deserialize)]
struct ConfigFile {
    schema: u32,
    #[serde(flatten)]
    config: CurveConfiguration,
}

const EXIT_INVALID: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_VIOLATIONS: u8 = 3;

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_INVALID)
}

fn parse_cap_input(s: &str) -> Result<SeifertData, ExitCode> {
    let data: SeifertData = s.parse().map_err(fail)?;
    data.require_cap().map_err(fail)?;
    Ok(data)
}

fn classify(seifert: &str, budget: Option<usize>) -> Result<Catalog, ExitCode> {
    let data = parse_cap_input(seifert)?;
    let mut b = SearchBudget::for_input(&data);
    if let Some(n) = budget {
        b.max_branches = n;
    }
    build_catalog(&data, b).map_err(|e| match e {
        EnumError::BudgetExhausted { .. } => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_BUDGET)
        }
        e => fail(e),
    })
}

fn write_outputs(dir: &std::path::Path, c: &Catalog, dot: bool) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("catalog.json"), c.to_json())?;
    if dot {
        let s: SeifertData = c.input.parse().expect("catalog input was validated");
        std::fs::write(dir.join("gamma.dot"), build_star_graph(&s).to_dot("Gamma"))?;
        let cap = build_concave_cap(&s).expect("catalog input was validated");
        std::fs::write(dir.join("cap.dot"), cap.graph().to_dot("K"))?;
        for e in &c.entries {
            std::fs::write(dir.join(format!("w{}.dot", e.id)), e.config.to_dot(&format!("W{}", e.id)))?;
        }
        let labels: Vec<String> = c.entries.iter().map(|e| format!("W{} b2={}", e.id, e.b2)).collect();
        std::fs::write(dir.join("blowdowns.dot"), c.graph().to_dot(&labels))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Cf { slope } => {
            let (a, b) = slope.split_once('/').ok_or_else(|| fail(format!("malformed slope {slope:?}")))?;
            let a: i64 = a.trim().parse().map_err(|_| fail(format!("malformed slope {slope:?}")))?;
            let b: i64 = b.trim().parse().map_err(|_| fail(format!("malformed slope {slope:?}")))?;
            let w = hj_expand(a, b).map_err(fail)?;
            let d = dual_expand(a, b).map_err(fail)?;
            println!("{} = {w}", Rational::new(a, b));
            println!("dual {} = {d}", Rational::new(a, a - b));
        }
        Command::Graph { seifert, dot } => {
            let data: SeifertData = seifert.parse().map_err(fail)?;
            let g = build_star_graph(&data);
            if dot {
                print!("{}", g.to_dot("Gamma"));
            } else {
                let m = g.intersection_matrix();
                println!("{g}");
                println!("vertices {}", g.vertex_count());
                println!("det {}", det(&m));
                println!("negative definite {}", is_negative_definite(&m).expect("symmetric"));
            }
        }
        Command::Cap { seifert, dot } => {
            let data = parse_cap_input(&seifert)?;
            let cap = build_concave_cap(&data).map_err(fail)?;
            if dot {
                print!("{}", cap.graph().to_dot("K"));
            } else {
                println!("{}", cap.graph());
                println!("components {}", cap.component_count());
            }
        }
        Command::Classify { seifert, budget, format, out } => {
            let c = classify(&seifert, budget)?;
            match format {
                Format::Json => print!("{}", c.to_json()),
                Format::Dot => print!("{}", c.to_dot().map_err(fail)?),
            }
            if let Some(dir) = out {
                write_outputs(&dir, &c, matches!(format, Format::Dot))
                    .map_err(|e| fail(format!("{}: {e}", dir.display())))?;
            }
        }
        Command::Verify { file } => {
            let text = std::fs::read_to_string(&file).map_err(|e| fail(format!("{}: {e}", file.display())))?;
            let parsed: ConfigFile =
                serde_json::from_str(&text).map_err(|e| fail(format!("{}: {e}", file.display())))?;
            if parsed.schema != SCHEMA {
                return Err(fail(format!("unsupported schema {}", parsed.schema)));
            }
            let report = verify_configuration(&parsed.config);
            if report.is_clean() {
                println!("ok");
            } else {
                for v in &report.violations {
                    println!("{v}");
                }
                return Err(ExitCode::from(EXIT_VIOLATIONS));
            }
        }
        Command::BlowdownGraph { seifert, budget, format } => {
            let c = classify(&seifert, budget)?;
            let g = c.graph();
            match format {
                GraphFormat::Text => {
                    for e in &c.entries {
                        let mark = if e.minimal_resolution { " (minimal resolution)" } else { "" };
                        let reach = if e.reachable { "" } else { " unreachable" };
                        println!("W{} b2={}{mark}{reach}", e.id, e.b2);
                    }
                    for e in &g.edges {
                        println!("W{} -> W{} {}", e.source, e.target, e.template);
                    }
                }
                GraphFormat::Json => {
                    let v = serde_json::json!({ "schema": SCHEMA, "input": c.input, "graph": g });
                    println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
                }
                GraphFormat::Dot => {
                    let labels: Vec<String> = c.entries.iter().map(|e| format!("W{} b2={}", e.id, e.b2)).collect();
                    print!("{}", g.to_dot(&labels));
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("SFILL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
        }
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
