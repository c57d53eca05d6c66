use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use ontorec::config::RecommenderConfig;
use ontorec::evalharness;
use ontorec::fixtures;
use ontorec::service::wire::RecommendResponse;
use ontorec::service::{http, Algorithm, Engine, InputType, OutputType, RecommendRequest};

#[derive(Parser)]
#[command(
    name = "ontorec",
    version,
    about = "Recommend ontologies for a text or a list of keywords"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputArg {
    Text,
    Keywords,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputArg {
    Ontologies,
    Sets,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    V2,
    V1,
}

#[derive(Subcommand)]
enum Command {
    /// Rank ontologies for one input.
    Recommend {
        /// Corpus file, one JSON class record per line.
        #[arg(long)]
        corpus: PathBuf,
        /// Acceptance file (JSON object keyed by acronym).
        #[arg(long)]
        acceptance: Option<PathBuf>,
        /// TOML file overriding default weights and constants.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(
            long,
            conflicts_with = "input_file",
            required_unless_present = "input_file"
        )]
        input: Option<String>,
        #[arg(long)]
        input_file: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        input_type: InputArg,
        #[arg(long, value_enum, default_value = "ontologies")]
        output_type: OutputArg,
        #[arg(long)]
        wc: Option<f64>,
        #[arg(long)]
        wa: Option<f64>,
        #[arg(long)]
        wd: Option<f64>,
        #[arg(long)]
        ws: Option<f64>,
        #[arg(long)]
        max_set_size: Option<usize>,
        /// Restrict candidates, e.g. `--ontologies NCIT,SNOMEDCT`.
        #[arg(long, value_delimiter = ',')]
        ontologies: Option<Vec<String>>,
        #[arg(long, value_enum, default_value = "v2")]
        algorithm: AlgorithmArg,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Serve POST /recommend and GET /health.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        acceptance: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare v1, v2 and v2 sets over a fixture suite.
    Evaluate {
        /// Directory holding corpus.jsonl and optionally acceptance.json.
        #[arg(long, alias = "suite", required_unless_present = "write_suite")]
        corpus_dir: Option<PathBuf>,
        /// Directory holding text/<dataset>/* and keywords/<dataset>/*;
        /// defaults to the corpus directory.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the bundled fixture suite to this directory and exit.
        #[arg(long)]
        write_suite: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<RecommenderConfig, String> {
    match path {
        Some(p) => RecommenderConfig::load(p).map_err(|e| e.to_string()),
        None => Ok(RecommenderConfig::default()),
    }
}

fn load_engine(
    corpus: &Path,
    acceptance: Option<&Path>,
    config: Option<&Path>,
) -> Result<Engine, String> {
    let config = load_config(config)?;
    Engine::from_files(corpus, acceptance, config).map_err(|e| e.to_string())
}

fn render_table(response: &RecommendResponse) -> String {
    let mut out = format!(
        "{:>3}  {:<30} {:>7} {:>5} {:>5} {:>5} {:>5} {:>6}\n",
        "#", "ontologies", "final", "cov", "acc", "det", "spec", "annots"
    );
    for e in &response.ranking {
        out.push_str(&format!(
            "{:>3}  {:<30} {:>7} {:>5} {:>5} {:>5} {:>5} {:>6}\n",
            e.position,
            e.ontologies.join("+"),
            format!("{:.4}", e.final_score.0),
            e.coverage.display,
            e.acceptance.display,
            e.detail.display,
            e.specialization.display,
            e.annotation_count
        ));
    }
    out
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Recommend {
            corpus,
            acceptance,
            config,
            input,
            input_file,
            input_type,
            output_type,
            wc,
            wa,
            wd,
            ws,
            max_set_size,
            ontologies,
            algorithm,
            format,
        } => {
            let engine = load_engine(&corpus, acceptance.as_deref(), config.as_deref())?;
            let input = match (input, input_file) {
                (Some(text), _) => text,
                (None, Some(path)) => fs::read_to_string(&path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?,
                (None, None) => return Err("one of --input or --input-file is required".into()),
            };
            let request = RecommendRequest {
                input,
                input_type: match input_type {
                    InputArg::Text => InputType::Text,
                    InputArg::Keywords => InputType::Keywords,
                },
                output_type: match output_type {
                    OutputArg::Ontologies => OutputType::Ontologies,
                    OutputArg::Sets => OutputType::Sets,
                },
                wc,
                wa,
                wd,
                ws,
                max_elements_set: max_set_size,
                ontologies,
                algorithm: match algorithm {
                    AlgorithmArg::V2 => Algorithm::V2,
                    AlgorithmArg::V1 => Algorithm::V1,
                },
            };
            let rec = engine
                .recommend(&request)
                .map_err(|e| format!("{}: {e}", e.code()))?;
            let response = RecommendResponse::new(&engine, &rec);
            match format {
                Format::Json => println!("{}", response.to_json()),
                Format::Table => print!("{}", render_table(&response)),
            }
            Ok(())
        }
        Command::Serve {
            port,
            host,
            corpus,
            acceptance,
            config,
        } => {
            let engine = Arc::new(load_engine(
                &corpus,
                acceptance.as_deref(),
                config.as_deref(),
            )?);
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| format!("invalid address {host}:{port}: {e}"))?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            runtime
                .block_on(http::serve(engine, addr, |bound| {
                    println!("listening on http://{bound}");
                }))
                .map_err(|e| e.to_string())
        }
        Command::Evaluate {
            corpus_dir,
            fixtures: fixtures_dir,
            config,
            format,
            out,
            write_suite,
        } => {
            if let Some(dir) = write_suite {
                fixtures::bundled_suite()
                    .write_to(&dir)
                    .map_err(|e| format!("cannot write suite to {}: {e}", dir.display()))?;
                println!("wrote fixture suite to {}", dir.display());
                return Ok(());
            }
            let corpus_dir = corpus_dir.ok_or("--corpus-dir is required")?;
            let fixtures_dir = fixtures_dir.unwrap_or_else(|| corpus_dir.clone());
            let report = evalharness::run_experiment(
                &corpus_dir,
                &fixtures_dir,
                load_config(config.as_deref())?,
            )
            .map_err(|e| e.to_string())?;
            if let Some(path) = out {
                fs::write(&path, report.to_json() + "\n")
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            }
            match format {
                Format::Json => println!("{}", report.to_json()),
                Format::Table => print!("{}", report.to_table()),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
