//! `petfish`: build corpus indexes, fetch and record document counts, and run
//! meaning-bound studies.
//!
//! Exit codes: 0 success, 1 usage error, 2 provider or data error, 3 internal
//! error. Data goes to stdout, diagnostics to stderr.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use petfish_core::analysis::{
    guppy_scan, run_study, study_queries, ConceptTriple, StudyConfig, DEFAULT_N_WWW,
};
use petfish_core::corpus::{load_corpus, CorpusFormat};
use petfish_core::error::AnalysisError;
use petfish_core::model::{Count, DisplayPrecision};
use petfish_core::providers::{
    record_fixture, CountProvider, FixtureProvider, LocalProvider, WebConfig, WebProvider,
};
use petfish_core::query::{Query, TermPattern};
use petfish_core::report::{render_csv, render_json, render_scan, render_table};

#[derive(Debug, Parser)]
#[command(
    name = "petfish",
    version,
    about = "Meaning bounds and conjunction effects from document counts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an index over a corpus and print its statistics.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        corpus_format: Option<CorpusFormatArg>,
    },
    /// Print the document count for one query.
    Count {
        /// Query in canonical syntax, e.g. '"pet fish" -guppy'.
        #[arg(long)]
        query: String,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Run a study and render it.
    Analyze {
        #[command(flatten)]
        triple: TripleArgs,
        /// Comma-separated exemplars.
        #[arg(long, default_value = "")]
        exemplars: String,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Rank candidate exemplars, Guppy-effect ones first.
    Scan {
        #[command(flatten)]
        triple: TripleArgs,
        /// Comma-separated candidates.
        #[arg(long, conflicts_with = "candidates_file")]
        candidates: Option<String>,
        /// One candidate per line.
        #[arg(long)]
        candidates_file: Option<PathBuf>,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Fetch counts and write them as a replayable fixture.
    Fetch {
        /// One canonical query per line; blank and `#` lines are skipped.
        #[arg(long, conflicts_with_all = ["first", "second", "conjunction", "exemplars"])]
        queries_file: Option<PathBuf>,
        #[arg(long)]
        first: Option<String>,
        #[arg(long)]
        second: Option<String>,
        #[arg(long)]
        conjunction: Option<String>,
        /// With --first/--second: record every query a study would issue.
        #[arg(long)]
        exemplars: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        source: SourceArgs,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Local corpus: a JSONL file of {"id","text"} records or a directory.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Recorded counts in fixture format.
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// TOML configuration for a web search-count endpoint.
    #[arg(long)]
    web: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CorpusFormatArg {
    Jsonl,
    Dir,
}

#[derive(Debug, Args)]
struct TripleArgs {
    #[arg(long)]
    first: String,
    #[arg(long)]
    second: String,
    /// Defaults to the exact phrase "FIRST SECOND".
    #[arg(long)]
    conjunction: Option<String>,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// Collection size. Defaults to the corpus size for --corpus and to
    /// 55000000000 otherwise.
    #[arg(long)]
    n_www: Option<u64>,
    /// Half-width of the band around M = 1 classified as neutral.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Skip the count correction (every factor becomes 1).
    #[arg(long)]
    no_correction: bool,
    /// Format of the corpus given with --corpus.
    #[arg(long, value_enum)]
    corpus_format: Option<CorpusFormatArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl fmt::Display) -> Self {
        CliError {
            code: 1,
            message: message.to_string(),
        }
    }

    fn data(message: impl fmt::Display) -> Self {
        CliError {
            code: 2,
            message: message.to_string(),
        }
    }

    fn internal(message: impl fmt::Display) -> Self {
        CliError {
            code: 3,
            message: message.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("petfish: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Index {
            corpus,
            corpus_format,
        } => cmd_index(&corpus, corpus_format),
        Command::Count { query, source } => cmd_count(&query, &source),
        Command::Analyze {
            triple,
            exemplars,
            source,
            study,
            format,
        } => cmd_analyze(&triple, &exemplars, &source, &study, format),
        Command::Scan {
            triple,
            candidates,
            candidates_file,
            source,
            study,
        } => cmd_scan(
            &triple,
            candidates.as_deref(),
            candidates_file.as_deref(),
            &source,
            &study,
        ),
        Command::Fetch {
            queries_file,
            first,
            second,
            conjunction,
            exemplars,
            out,
            source,
        } => {
            let queries = match queries_file {
                Some(path) => read_queries_file(&path)?,
                None => {
                    let (Some(first), Some(second)) = (first, second) else {
                        return Err(CliError::usage(
                            "fetch needs --queries-file or both --first and --second",
                        ));
                    };
                    let triple = parse_triple(&TripleArgs {
                        first,
                        second,
                        conjunction,
                    })?;
                    let exemplars = parse_list(exemplars.as_deref().unwrap_or(""))?;
                    study_queries(&triple, &exemplars)
                }
            };
            cmd_fetch(&queries, &out, &source)
        }
    }
}

fn write_stdout(text: &str) -> CliResult<()> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CliError::internal(format!("writing output: {e}"))),
    }
}

fn corpus_format(path: &Path, arg: Option<CorpusFormatArg>) -> CorpusFormat {
    match arg {
        Some(CorpusFormatArg::Jsonl) => CorpusFormat::Jsonl,
        Some(CorpusFormatArg::Dir) => CorpusFormat::Directory,
        None => CorpusFormat::detect(path),
    }
}

fn open_corpus(path: &Path, format: Option<CorpusFormatArg>) -> CliResult<LocalProvider> {
    if !path.exists() {
        return Err(CliError::data(format!(
            "corpus {} does not exist",
            path.display()
        )));
    }
    let index = load_corpus(path, corpus_format(path, format))
        .map_err(|e| CliError::data(format!("corpus {}: {e}", path.display())))?;
    Ok(LocalProvider::new(index))
}

/// The selected count source, plus the collection size it implies.
struct Source {
    provider: Box<dyn CountProvider>,
    corpus_size: Option<Count>,
}

fn open_source(args: &SourceArgs, format: Option<CorpusFormatArg>) -> CliResult<Source> {
    if let Some(path) = &args.corpus {
        let local = open_corpus(path, format)?;
        let corpus_size = Some(local.index().total_docs());
        return Ok(Source {
            provider: Box::new(local),
            corpus_size,
        });
    }
    if let Some(path) = &args.fixture {
        let fixture = FixtureProvider::load(path)
            .map_err(|e| CliError::data(format!("fixture {}: {e}", path.display())))?;
        return Ok(Source {
            provider: Box::new(fixture),
            corpus_size: None,
        });
    }
    if let Some(path) = &args.web {
        let config = WebConfig::load(path)
            .map_err(|e| CliError::data(format!("web config {}: {e}", path.display())))?;
        let web = WebProvider::from_config(config).map_err(CliError::data)?;
        return Ok(Source {
            provider: Box::new(web),
            corpus_size: None,
        });
    }
    Err(CliError::usage(
        "one of --corpus, --fixture or --web is required",
    ))
}

fn parse_pattern(text: &str, what: &str) -> CliResult<TermPattern> {
    text.parse()
        .map_err(|e| CliError::usage(format!("invalid {what} {text:?}: {e}")))
}

fn parse_triple(args: &TripleArgs) -> CliResult<ConceptTriple> {
    let first = parse_pattern(&args.first, "--first")?;
    let second = parse_pattern(&args.second, "--second")?;
    Ok(match &args.conjunction {
        Some(c) => ConceptTriple::new(first, second, parse_pattern(c, "--conjunction")?),
        None => ConceptTriple::with_phrase_conjunction(first, second),
    })
}

fn parse_list(list: &str) -> CliResult<Vec<TermPattern>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_pattern(s, "exemplar"))
        .collect()
}

fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

fn read_queries_file(path: &Path) -> CliResult<Vec<Query>> {
    read_lines(path)?
        .iter()
        .map(|l| {
            l.parse::<Query>()
                .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn study_config(args: &StudyArgs, source: &Source) -> CliResult<StudyConfig> {
    let n_www = match (args.n_www, source.corpus_size) {
        (Some(n), _) => Count::new(n).map_err(CliError::usage)?,
        (None, Some(size)) => size,
        (None, None) => Count::new(DEFAULT_N_WWW).expect("default fits"),
    };
    let config = StudyConfig {
        n_www,
        neutral_band_eps: args.eps,
        apply_correction: !args.no_correction,
        display_precision: DisplayPrecision::default(),
    };
    config.validate().map_err(|e| {
        if args.n_www.is_none() && n_www.is_zero() {
            CliError::data("the corpus is empty; cannot use it as the collection size")
        } else {
            CliError::usage(e)
        }
    })?;
    Ok(config)
}

fn analysis_error(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::Cells(failures) => {
            let mut msg = format!("{} cell(s) failed", failures.len());
            for f in &failures {
                msg.push_str(&format!("\n  {f}"));
            }
            CliError::data(msg)
        }
        e if e.is_provider_error() => CliError::data(e),
        e => CliError::internal(e),
    }
}

fn cmd_index(path: &Path, format: Option<CorpusFormatArg>) -> CliResult<()> {
    let local = open_corpus(path, format)?;
    let stats = local.index().stats();
    write_stdout(&format!(
        "documents\t{}\ndistinct_tokens\t{}\ntoken_occurrences\t{}\n",
        stats.documents, stats.distinct_tokens, stats.token_occurrences
    ))
}

fn cmd_count(query: &str, args: &SourceArgs) -> CliResult<()> {
    let query: Query = query
        .parse()
        .map_err(|e| CliError::usage(format!("invalid --query: {e}")))?;
    let source = open_source(args, None)?;
    let record = source.provider.get_count(&query).map_err(CliError::data)?;
    write_stdout(&format!("{}\n", record.count))
}

fn cmd_analyze(
    triple: &TripleArgs,
    exemplars: &str,
    args: &SourceArgs,
    study: &StudyArgs,
    format: Format,
) -> CliResult<()> {
    let triple = parse_triple(triple)?;
    let exemplars = parse_list(exemplars)?;
    let source = open_source(args, study.corpus_format)?;
    let config = study_config(study, &source)?;
    let report =
        run_study(&triple, &exemplars, &source.provider, &config).map_err(analysis_error)?;
    let rendered = match format {
        Format::Table => render_table(&report),
        Format::Csv => render_csv(&report),
        Format::Json => render_json(&report),
    };
    write_stdout(&rendered)?;
    if !report.failures.is_empty() {
        return Err(analysis_error(AnalysisError::Cells(report.failures)));
    }
    Ok(())
}

fn cmd_scan(
    triple: &TripleArgs,
    candidates: Option<&str>,
    candidates_file: Option<&Path>,
    args: &SourceArgs,
    study: &StudyArgs,
) -> CliResult<()> {
    let triple = parse_triple(triple)?;
    let candidates = match (candidates, candidates_file) {
        (Some(list), _) => parse_list(list)?,
        (None, Some(path)) => read_lines(path)?
            .iter()
            .map(|l| parse_pattern(l, "candidate"))
            .collect::<CliResult<_>>()?,
        (None, None) => {
            return Err(CliError::usage(
                "scan needs --candidates or --candidates-file",
            ))
        }
    };
    let source = open_source(args, study.corpus_format)?;
    let config = study_config(study, &source)?;
    let entries =
        guppy_scan(&triple, &candidates, &source.provider, &config).map_err(analysis_error)?;
    write_stdout(&render_scan(&entries, config.display_precision.m_dp))
}

fn cmd_fetch(queries: &[Query], out: &Path, args: &SourceArgs) -> CliResult<()> {
    let source = open_source(args, None)?;
    let table = record_fixture(&source.provider, queries, out).map_err(CliError::data)?;
    eprintln!(
        "petfish: wrote {} record(s) to {}",
        table.len(),
        out.display()
    );
    Ok(())
}
