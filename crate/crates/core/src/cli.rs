//! Command-line surface. The `mate` binary only forwards to [`run`].
//!
//! Machine output is JSON on stdout (or `--output`); diagnostics go to stderr.
//! Exit codes: 0 ok, 2 usage or input, 3 incompatible hasher/params, 4
//! internal consistency failure.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{run_matrix, BenchConfig, BenchReport};
use crate::corpus::{Catalog, CsvOptions};
use crate::discovery::{
    brute_force_topk, discover_topk, DiscoveryOptions, Mode, QueryKey, RunRecord, Strategy,
    DEFAULT_ORACLE_BUDGET,
};
use crate::error::{Error, Result};
use crate::hashers::{HasherKind, HasherSpec};
use crate::index::{Edit, EditKind, Index};
use crate::xash::{FrequencyTable, XashParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_COMPAT: i32 = 3;
pub const EXIT_CONSISTENCY: i32 = 4;

/// Fallback for `--index` when the flag is omitted.
pub const INDEX_DIR_ENV: &str = "MATE_INDEX_DIR";

#[derive(Debug, Parser)]
#[command(name = "mate", version, about = "Composite-key joinable table discovery")]
pub struct Cli {
    /// More diagnostics on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or update a persisted index.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Top-k joinable tables for a query CSV.
    Query(QueryArgs),
    /// Exhaustive top-k, no index filtering.
    Oracle(OracleArgs),
    /// Synthetic benchmark matrix.
    Bench(BenchArgs),
}

#[derive(Debug, Subcommand)]
pub enum IndexCommand {
    Build(BuildArgs),
    Update(UpdateArgs),
}

#[derive(Debug, Args)]
pub struct IndexDir {
    #[arg(long = "index", env = INDEX_DIR_ENV)]
    pub dir: PathBuf,
    /// JSON array of the 37 hash characters, most frequent first.
    #[arg(long)]
    pub frequency: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CsvArgs {
    /// First CSV line is data, not a header.
    #[arg(long)]
    pub no_header: bool,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

impl CsvArgs {
    fn options(&self) -> Result<CsvOptions> {
        if !self.delimiter.is_ascii() {
            return Err(Error::Param(format!("delimiter {:?} is not ASCII", self.delimiter)));
        }
        Ok(CsvOptions {
            has_header: !self.no_header,
            delimiter: self.delimiter as u8,
        })
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub index: IndexDir,
    #[arg(long, default_value = "xash")]
    pub hasher: HasherKind,
    #[arg(long, default_value_t = 128)]
    pub bits: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args)]
pub struct UpdateArgs {
    #[command(flatten)]
    pub index: IndexDir,
    /// JSON lines, one edit per line.
    #[arg(long)]
    pub edits: PathBuf,
}

#[derive(Debug, Args)]
pub struct QuerySource {
    #[arg(long)]
    pub query: PathBuf,
    /// Key columns by header name or 0-based index, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub key: Vec<String>,
    #[arg(short, long, default_value_t = 10)]
    pub k: usize,
    #[command(flatten)]
    pub csv: CsvArgs,
}

impl QuerySource {
    fn load(&self) -> Result<QueryKey> {
        let keys: Vec<&str> = self.key.iter().map(String::as_str).collect();
        QueryKey::from_csv(&self.query, self.csv.options()?, &keys, self.k)
    }
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub index: IndexDir,
    #[command(flatten)]
    pub source: QuerySource,
    /// mate, scr, mcr or oracle.
    #[arg(long, default_value = "mate")]
    pub mode: String,
    #[arg(long, default_value = "min_cardinality")]
    pub strategy: Strategy,
    #[arg(long)]
    pub no_pruning: bool,
    /// Score matched row pairs instead of distinct key tuples.
    #[arg(long)]
    pub count_row_pairs: bool,
    #[arg(long, default_value_t = DEFAULT_ORACLE_BUDGET)]
    pub budget: u128,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Directory of CSV tables.
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub source: QuerySource,
    #[arg(long, default_value_t = DEFAULT_ORACLE_BUDGET)]
    pub budget: u128,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Bench configuration JSON; defaults apply to missing fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the seed list.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Also run the XASH component ablation at this width.
    #[arg(long, num_args = 0..=1, default_missing_value = "128")]
    pub ablate: Option<usize>,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Compatibility(_) | Error::WidthMismatch { .. } => EXIT_COMPAT,
        Error::Consistency(_) => EXIT_CONSISTENCY,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Index(IndexCommand::Build(a)) => emit(&index_build(a)?, None),
        Command::Index(IndexCommand::Update(a)) => emit(&index_update(a)?, None),
        Command::Query(a) => emit(&query(a)?, a.output.as_deref()),
        Command::Oracle(a) => emit(&oracle(a)?, a.output.as_deref()),
        Command::Bench(a) => {
            let report = bench(a)?;
            if cli.verbose > 0 {
                eprintln!("wrote {} runs to {}", report.runs.len(), a.out.display());
            }
            emit(&BenchSummary::from(&report), None)
        }
    }
}

fn emit<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match output {
        Some(path) => fs::write(path, text + "\n").map_err(|e| Error::io(path, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn frequency(path: Option<&Path>) -> Result<FrequencyTable> {
    path.map_or(Ok(FrequencyTable::default()), FrequencyTable::load)
}

fn load_index(dir: &IndexDir) -> Result<Index> {
    Index::load_with_frequency(&dir.dir, frequency(dir.frequency.as_deref())?)
}

#[derive(Debug, Serialize)]
pub struct BuildSummary {
    pub tables: usize,
    pub rows: u64,
    pub unique_values: u64,
    pub hasher: String,
    pub bits: usize,
    pub alpha: usize,
    pub beta: usize,
    pub length_bits: usize,
    pub hash_count: usize,
    pub terms: usize,
    pub postings: usize,
}

impl BuildSummary {
    fn of(index: &Index) -> Self {
        let stats = index.catalog().stats();
        let h = index.hasher();
        BuildSummary {
            tables: index.catalog().len(),
            rows: stats.total_rows,
            unique_values: stats.unique_value_count,
            hasher: h.label(),
            bits: h.params.bits,
            alpha: h.params.alpha,
            beta: h.params.beta,
            length_bits: h.params.length_bits,
            hash_count: h.hash_count,
            terms: index.term_count(),
            postings: index.posting_count(),
        }
    }
}

pub fn index_build(a: &BuildArgs) -> Result<BuildSummary> {
    let mut catalog = Catalog::new();
    catalog.ingest_dir(&a.corpus, a.csv.options()?)?;
    if catalog.is_empty() {
        return Err(Error::Param(format!("no tables in {}", a.corpus.display())));
    }
    let stats = catalog.stats();
    let params = XashParams::compute_with(a.bits, stats.unique_value_count.max(1), frequency(a.index.frequency.as_deref())?)?;
    let mut spec = HasherSpec::for_corpus(a.hasher, params, stats.avg_columns);
    if let Some(seed) = a.seed {
        spec = spec.with_seed(seed);
    }
    let index = Index::build(catalog, spec)?;
    index.save(&a.index.dir)?;
    Ok(BuildSummary::of(&index))
}

#[derive(Debug, Serialize)]
pub struct UpdateSummary {
    pub applied: usize,
    pub per_kind: BTreeMap<EditKind, usize>,
    pub tables: usize,
    pub terms: usize,
    pub postings: usize,
}

/// Reads one edit per non-blank line. Errors carry the 1-based line number.
pub fn read_edits(path: &Path) -> Result<Vec<(usize, Edit)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut edits = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let edit = serde_json::from_str(&line)
            .map_err(|e| Error::Param(format!("{} line {}: {e}", path.display(), i + 1)))?;
        edits.push((i + 1, edit));
    }
    Ok(edits)
}

/// Applies the whole edit file or nothing: the new index is written to a
/// sibling directory and swapped in only after every edit succeeded.
pub fn index_update(a: &UpdateArgs) -> Result<UpdateSummary> {
    let edits = read_edits(&a.edits)?;
    let mut index = load_index(&a.index)?;
    let mut per_kind = BTreeMap::new();
    for (line, edit) in &edits {
        index.apply_edit(edit).map_err(|e| match e {
            Error::Compatibility(_) | Error::Consistency(_) => e,
            other => Error::Param(format!("{} line {line}: {other}", a.edits.display())),
        })?;
        *per_kind.entry(edit.kind()).or_insert(0) += 1;
    }
    swap_in(&index, &a.index.dir)?;
    Ok(UpdateSummary {
        applied: edits.len(),
        per_kind,
        tables: index.catalog().len(),
        terms: index.term_count(),
        postings: index.posting_count(),
    })
}

fn sibling(dir: &Path, suffix: &str) -> PathBuf {
    let mut name = dir.file_name().map(|n| n.to_os_string()).unwrap_or_else(|| "index".into());
    name.push(suffix);
    dir.with_file_name(name)
}

fn swap_in(index: &Index, dir: &Path) -> Result<()> {
    let staged = sibling(dir, ".staged");
    let retired = sibling(dir, ".retired");
    for d in [&staged, &retired] {
        if d.exists() {
            fs::remove_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
    }
    index.save(&staged)?;
    fs::rename(dir, &retired).map_err(|e| Error::io(dir, e))?;
    if let Err(e) = fs::rename(&staged, dir) {
        // put the previous index back before reporting
        let _ = fs::rename(&retired, dir);
        return Err(Error::io(dir, e));
    }
    fs::remove_dir_all(&retired).map_err(|e| Error::io(&retired, e))
}

pub fn query(a: &QueryArgs) -> Result<RunRecord> {
    let q = a.source.load()?;
    let index = load_index(&a.index)?;
    if a.mode == "oracle" {
        return brute_force_topk(&q, index.catalog(), a.budget);
    }
    let mode: Mode = a.mode.parse()?;
    let opts = DiscoveryOptions {
        mode,
        strategy: a.strategy,
        pruning: !a.no_pruning,
        count_row_pairs: a.count_row_pairs,
    };
    discover_topk(&q, &index, None, &opts)
}

pub fn oracle(a: &OracleArgs) -> Result<RunRecord> {
    let q = a.source.load()?;
    let mut catalog = Catalog::new();
    catalog.ingest_dir(&a.corpus, a.source.csv.options()?)?;
    if catalog.is_empty() {
        return Err(Error::Param(format!("no tables in {}", a.corpus.display())));
    }
    brute_force_topk(&q, &catalog, a.budget)
}

pub fn bench(a: &BenchArgs) -> Result<BenchReport> {
    let mut config: BenchConfig = match &a.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text)?
        }
        None => BenchConfig::default(),
    };
    if let Some(seeds) = &a.seeds {
        config.seeds = seeds.clone();
    }
    if a.ablate.is_some() {
        config.ablation_bits = a.ablate;
    }
    let report = run_matrix(&config)?;
    report.write(&a.out)?;
    Ok(report)
}

/// Stdout form of a bench run; the full report lives in the output directory.
#[derive(Debug, Serialize)]
pub struct BenchSummary<'a> {
    pub cells: &'a [crate::bench::CellSummary],
    pub ablation: &'a [crate::bench::AblationRow],
    pub key_sweep: &'a [crate::bench::KeySweepRow],
}

impl<'a> From<&'a BenchReport> for BenchSummary<'a> {
    fn from(r: &'a BenchReport) -> Self {
        BenchSummary {
            cells: &r.cells,
            ablation: &r.ablation,
            key_sweep: &r.key_sweep,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Compatibility("x".into())), EXIT_COMPAT);
        assert_eq!(exit_code(&Error::Consistency("x".into())), EXIT_CONSISTENCY);
        assert_eq!(exit_code(&Error::NotFound("x".into())), EXIT_INPUT);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["mate", "frobnicate"]), EXIT_INPUT);
        assert_eq!(run(["mate", "query", "--index", "x"]), EXIT_INPUT);
    }

    #[test]
    fn parses_subcommands() {
        let cli = Cli::try_parse_from([
            "mate", "query", "--index", "idx", "--query", "q.csv", "--key", "a,1", "-k", "3", "--mode", "oracle",
        ])
        .unwrap();
        let Command::Query(q) = cli.command else { panic!() };
        assert_eq!(q.source.key, vec!["a", "1"]);
        assert_eq!(q.source.k, 3);
        let cli = Cli::try_parse_from(["mate", "bench", "--out", "o", "--ablate"]).unwrap();
        let Command::Bench(b) = cli.command else { panic!() };
        assert_eq!(b.ablate, Some(128));
        assert!(Cli::try_parse_from(["mate", "index", "build", "--corpus", "c", "--index", "i", "--bits", "256"]).is_ok());
    }

    #[test]
    fn edit_file_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.jsonl");
        fs::write(&p, "{\"op\":\"delete_table\",\"table_id\":0}\n\nnot json\n").unwrap();
        let err = read_edits(&p).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }
}
