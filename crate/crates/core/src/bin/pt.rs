use std::fs;
use std::io::{self, Read as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Parser as ClapParser, Subcommand, ValueEnum};

use pt_core::grammar::check_against_schema;
use pt_core::parser::{tokenize, Coverage, ParseResult};
use pt_core::report::{compare, load_corpus};
use pt_core::{define_schema, load_lexicon, Kb, KbSchema, Lexicon, Parser, ParserConfig};

#[derive(ClapParser)]
#[command(
    name = "pt",
    version,
    about = "Incremental actor-based dependency parser"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Tree,
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// Parse sentences (one per line) or, with --text, a text.
    Parse {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Treat the input as one text and resolve anaphora across sentences.
        #[arg(long)]
        text: bool,
        /// Print the message schedule after each parse.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "tree")]
        format: Format,
        /// Parser configuration (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Input file; standard input when absent.
        input: Option<PathBuf>,
    },
    /// Run the actor parser and the chart baseline over a corpus and
    /// report check counts.
    Compare {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Emit comma-separated values instead of an aligned table.
        #[arg(long)]
        csv: bool,
        /// Sentences processed in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        corpus: PathBuf,
    },
}

struct Setup {
    lex: Arc<Lexicon>,
    schema: Arc<KbSchema>,
    config: ParserConfig,
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {}", path.display(), e))
}

fn setup(
    lexicon: &Path,
    schema: &Path,
    config: Option<&Path>,
    seed: Option<u64>,
) -> Result<Setup, String> {
    let lex = load_lexicon(&read(lexicon)?).map_err(|e| format!("{}: {}", lexicon.display(), e))?;
    let schema_doc =
        define_schema(&read(schema)?).map_err(|e| format!("{}: {}", schema.display(), e))?;
    check_against_schema(&lex, &schema_doc).map_err(|e| format!("{}: {}", lexicon.display(), e))?;
    let mut config = match config {
        Some(p) => {
            ParserConfig::from_toml(&read(p)?).map_err(|e| format!("{}: {}", p.display(), e))?
        }
        None => ParserConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(Setup {
        lex: Arc::new(lex),
        schema: Arc::new(schema_doc),
        config,
    })
}

fn read_input(input: Option<&Path>) -> Result<String, String> {
    match input {
        Some(p) => read(p),
        None => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| e.to_string())?;
            Ok(s)
        }
    }
}

fn print_result(r: &ParseResult, format: Format, trace: bool) -> Result<(), String> {
    match format {
        Format::Tree => print!("{}", r.render()),
        Format::Machine => {
            let json = serde_json::to_string(&r.to_machine()).map_err(|e| e.to_string())?;
            println!("{}", json);
        }
    }
    if trace {
        print!("{}", r.trace.dump());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_parse(
    lexicon: &Path,
    schema: &Path,
    text: bool,
    trace: bool,
    seed: Option<u64>,
    format: Format,
    config: Option<&Path>,
    input: Option<&Path>,
) -> Result<ExitCode, String> {
    let s = setup(lexicon, schema, config, seed)?;
    let source = read_input(input)?;
    let sentences: Vec<&str> = source
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if sentences.is_empty() {
        return Err("no input sentences".into());
    }
    let parser = Parser::new(s.lex.clone(), s.schema.clone(), s.config.clone());
    let mut all_complete = true;
    if text {
        let out = pt_core::textlevel::parse_text(&parser, &sentences).map_err(|e| e.to_string())?;
        for (i, r) in out.results.iter().enumerate() {
            if i > 0 && matches!(format, Format::Tree) {
                println!();
            }
            print_result(r, format, trace)?;
            all_complete &= r.coverage == Coverage::Complete;
        }
        print!("{}", out.resolution_log());
        print!("{}", out.kb_dump());
    } else {
        let kb = Kb::new(s.schema.clone());
        for (i, line) in sentences.iter().enumerate() {
            if i > 0 && matches!(format, Format::Tree) {
                println!();
            }
            let r = parser
                .parse_in(&kb, &tokenize(line))
                .map_err(|e| e.to_string())?;
            print_result(&r, format, trace)?;
            all_complete &= r.coverage == Coverage::Complete;
        }
    }
    Ok(if all_complete {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    lexicon: &Path,
    schema: &Path,
    csv: bool,
    jobs: usize,
    seed: Option<u64>,
    config: Option<&Path>,
    corpus: &Path,
) -> Result<ExitCode, String> {
    let s = setup(lexicon, schema, config, seed)?;
    let entries =
        load_corpus(&read(corpus)?).map_err(|e| format!("{}: {}", corpus.display(), e))?;
    if entries.is_empty() {
        return Err(format!("{}: empty corpus", corpus.display()));
    }
    let parser = Parser::new(s.lex, s.schema, s.config);
    let started = Instant::now();
    let report = compare(&parser, &entries, jobs).map_err(|e| e.to_string())?;
    if csv {
        print!("{}", report.to_csv());
    } else {
        print!("{}", report.render_table());
    }
    let (pt, cp) = report
        .rows
        .iter()
        .fold((Duration::ZERO, Duration::ZERO), |(p, c), r| {
            (p + r.pt_time, c + r.cp_time)
        });
    eprintln!(
        "wall clock: pt {:.1} ms, cp {:.1} ms, total {:.1} ms",
        pt.as_secs_f64() * 1e3,
        cp.as_secs_f64() * 1e3,
        started.elapsed().as_secs_f64() * 1e3
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Parse {
            lexicon,
            schema,
            text,
            trace,
            seed,
            format,
            config,
            input,
        } => cmd_parse(
            &lexicon,
            &schema,
            text,
            trace,
            seed,
            format,
            config.as_deref(),
            input.as_deref(),
        ),
        Command::Compare {
            lexicon,
            schema,
            csv,
            jobs,
            seed,
            config,
            corpus,
        } => cmd_compare(
            &lexicon,
            &schema,
            csv,
            jobs,
            seed,
            config.as_deref(),
            &corpus,
        ),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("pt: {}", e);
            ExitCode::from(1)
        }
    }
}
