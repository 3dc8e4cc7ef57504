//! Experiment harness over synthetic corpora: filter precision per hasher,
//! XASH component ablation, key-size sweeps and the analytic collision check.
//!
//! Every measured run is first checked against the exact answer; a mode or
//! hasher that changes a result aborts the report.

pub mod analytic;
pub mod synth;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use analytic::{analytic_collision_check, AnalyticCheck, AnalyticRow};
pub use synth::{
    generate, write_corpus, GeneratedQuery, GeneratedTable, QuerySpec, Range, SyntheticCorpus,
    SyntheticSpec, TruthRecord, Vocabulary,
};

use crate::corpus::{Catalog, CorpusStats};
use crate::discovery::{discover_topk, DiscoveryOptions, Mode, QueryKey, RunRecord, Strategy};
use crate::error::{Error, Result};
use crate::hashers::{HasherKind, HasherSpec};
use crate::index::Index;
use crate::xash::{XashComponents, XashParams};

/// A hasher kind at a width, e.g. `xash-128`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HasherConfig {
    pub kind: HasherKind,
    pub bits: usize,
    pub components: XashComponents,
}

impl HasherConfig {
    pub fn new(kind: HasherKind, bits: usize) -> Self {
        HasherConfig {
            kind,
            bits,
            components: XashComponents::FULL,
        }
    }

    pub fn with_components(mut self, components: XashComponents) -> Self {
        self.components = components;
        self
    }

    /// Sizes the hasher for a corpus: XASH's ones budget from the distinct
    /// value count, the Bloom hash count from the mean table width.
    pub fn spec_for(&self, stats: &CorpusStats) -> Result<HasherSpec> {
        let params = XashParams::compute(self.bits, stats.unique_value_count.max(1))?;
        Ok(HasherSpec::for_corpus(self.kind, params, stats.avg_columns).with_components(self.components))
    }
}

impl fmt::Display for HasherConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind == HasherKind::Xash && self.components != XashComponents::FULL {
            write!(f, "xash[{}]-{}", self.components.label(), self.bits)
        } else {
            write!(f, "{}-{}", self.kind, self.bits)
        }
    }
}

impl FromStr for HasherConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, bits) = s
            .rsplit_once('-')
            .ok_or_else(|| Error::Param(format!("hasher {s:?} is not <kind>-<bits>")))?;
        let bits = bits
            .parse()
            .map_err(|_| Error::Param(format!("bad bit width in {s:?}")))?;
        Ok(HasherConfig::new(kind.parse()?, bits))
    }
}

impl Serialize for HasherConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HasherConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KeySweep {
    pub m_min: usize,
    pub m_max: usize,
}

impl Default for KeySweep {
    fn default() -> Self {
        KeySweep { m_min: 2, m_max: 6 }
    }
}

/// Input of a bench run. Every field has a default, so `{}` is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub spec: SyntheticSpec,
    pub seeds: Vec<u64>,
    pub k: usize,
    pub hashers: Vec<HasherConfig>,
    pub modes: Vec<String>,
    pub strategies: Vec<String>,
    /// Bit width of the component ablation; none skips it.
    pub ablation_bits: Option<usize>,
    pub key_sweep: Option<KeySweep>,
    /// Largest K of the analytic check table.
    pub analytic_k_max: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            spec: SyntheticSpec::default(),
            seeds: (1..=10).collect(),
            k: 10,
            hashers: ["xash-128", "bf-128", "lhbf-128", "ht-128", "xash-512"]
                .iter()
                .map(|s| s.parse().expect("valid"))
                .collect(),
            modes: vec!["mate".into(), "scr".into(), "mcr".into()],
            strategies: vec!["min_cardinality".into()],
            ablation_bits: None,
            key_sweep: None,
            analytic_k_max: 6,
        }
    }
}

impl BenchConfig {
    pub fn modes(&self) -> Result<Vec<Mode>> {
        self.modes.iter().map(|m| m.parse()).collect()
    }

    pub fn strategies(&self) -> Result<Vec<Strategy>> {
        self.strategies.iter().map(|m| m.parse()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Param("k must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Param("no seeds".into()));
        }
        self.modes()?;
        self.strategies()?;
        self.spec.validate()
    }
}

/// One seed's corpus, queries and exact answers.
#[derive(Debug, Clone)]
pub struct Workload {
    pub seed: u64,
    pub corpus: SyntheticCorpus,
    pub catalog: Catalog,
    pub stats: CorpusStats,
    pub queries: Vec<QueryKey>,
    pub truth: Vec<TruthRecord>,
}

impl Workload {
    pub fn generate(spec: &SyntheticSpec, k: usize) -> Result<Workload> {
        let corpus = generate(spec)?;
        let catalog = corpus.catalog();
        let stats = catalog.stats();
        let queries = corpus
            .queries
            .iter()
            .map(|q| QueryKey::new(q.to_table(), (0..q.header.len()).collect(), k))
            .collect::<Result<Vec<_>>>()?;
        let truth = ground_truth(&catalog, &queries)?;
        Ok(Workload {
            seed: spec.seed,
            corpus,
            catalog,
            stats,
            queries,
            truth,
        })
    }

    /// Exact top-k scores of query `i`, descending.
    pub fn expected(&self, query_id: usize, k: usize) -> Vec<u64> {
        let mut js: Vec<u64> = self.truth.iter().filter(|t| t.query_id == query_id).map(|t| t.true_j).collect();
        js.sort_unstable_by(|a, b| b.cmp(a));
        js.truncate(k);
        js
    }

    pub fn index(&self, cfg: &HasherConfig) -> Result<Index> {
        Index::build(self.catalog.clone(), cfg.spec_for(&self.stats)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_corpus(&self.corpus, &self.truth, dir)
    }
}

/// Every table with a positive score for each query, by exhaustive verification.
pub fn ground_truth(catalog: &Catalog, queries: &[QueryKey]) -> Result<Vec<TruthRecord>> {
    let stats = catalog.stats();
    let index = Index::build(catalog.clone(), HasherConfig::new(HasherKind::Ht, 128).spec_for(&stats)?)?;
    let opts = DiscoveryOptions {
        mode: Mode::Scr,
        pruning: false,
        ..Default::default()
    };
    let mut out = Vec::new();
    for (query_id, q) in queries.iter().enumerate() {
        let mut all = q.clone();
        all.k = catalog.len().max(1);
        let run = discover_topk(&all, &index, None, &opts)?;
        let mut rows: Vec<TruthRecord> = run
            .results
            .iter()
            .map(|m| TruthRecord {
                query_id,
                table_id: m.table_id,
                true_j: m.j,
            })
            .collect();
        rows.sort_by_key(|r| r.table_id);
        out.extend(rows);
    }
    Ok(out)
}

/// One instrumented run, flattened.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub seed: u64,
    pub query_id: usize,
    pub hasher: String,
    pub bits: usize,
    pub mode: String,
    pub strategy: String,
    pub m: usize,
    pub k: usize,
    pub tables_fetched: u64,
    pub tables_pruned_rule1: u64,
    pub tables_pruned_rule2: u64,
    pub rows_checked: u64,
    pub rows_verified: u64,
    pub tp: u64,
    pub fp: u64,
    pub precision: f64,
    #[serde(skip)]
    pub wall_time_ms: f64,
}

impl RunRow {
    fn from_record(seed: u64, query_id: usize, hasher: &str, strategy: Strategy, m: usize, r: &RunRecord) -> Self {
        RunRow {
            seed,
            query_id,
            hasher: hasher.to_string(),
            bits: r.bits,
            mode: r.mode.clone(),
            strategy: strategy.token().to_string(),
            m,
            k: r.k,
            tables_fetched: r.tables_fetched,
            tables_pruned_rule1: r.tables_pruned_rule1,
            tables_pruned_rule2: r.tables_pruned_rule2,
            rows_checked: r.rows_checked,
            rows_verified: r.rows_verified,
            tp: r.tp,
            fp: r.fp,
            precision: r.precision,
            wall_time_ms: r.wall_time_ms,
        }
    }
}

/// Aggregate of one (hasher, mode, strategy, m) cell over seeds.
///
/// Per seed: mean precision over queries, total FP, mean rows per query.
/// The `*_mean` fields average those per-seed values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub hasher: String,
    pub bits: usize,
    pub mode: String,
    pub strategy: String,
    pub m: usize,
    pub seeds: usize,
    pub runs: usize,
    pub precision_mean: f64,
    pub precision_std: f64,
    pub fp_mean: f64,
    pub rows_checked_mean: f64,
    pub rows_verified_mean: f64,
    pub per_seed_precision: Vec<f64>,
    pub per_seed_fp: Vec<u64>,
    #[serde(skip)]
    pub wall_time_ms_mean: f64,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Groups runs by (hasher, mode, strategy, m), keeping first-seen order.
pub fn summarize(runs: &[RunRow]) -> Vec<CellSummary> {
    let mut keys: Vec<(String, String, String, usize)> = Vec::new();
    for r in runs {
        let key = (r.hasher.clone(), r.mode.clone(), r.strategy.clone(), r.m);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(hasher, mode, strategy, m)| {
            let cell: Vec<&RunRow> = runs
                .iter()
                .filter(|r| r.hasher == hasher && r.mode == mode && r.strategy == strategy && r.m == m)
                .collect();
            let mut seeds: Vec<u64> = cell.iter().map(|r| r.seed).collect();
            seeds.dedup();
            let (mut prec, mut fps, mut checked, mut verified, mut wall) = (vec![], vec![], vec![], vec![], vec![]);
            for s in &seeds {
                let rs: Vec<&&RunRow> = cell.iter().filter(|r| r.seed == *s).collect();
                let f = |g: &dyn Fn(&RunRow) -> f64| mean(&rs.iter().map(|r| g(r)).collect::<Vec<_>>());
                prec.push(f(&|r| r.precision));
                fps.push(rs.iter().map(|r| r.fp).sum::<u64>());
                checked.push(f(&|r| r.rows_checked as f64));
                verified.push(f(&|r| r.rows_verified as f64));
                wall.push(f(&|r| r.wall_time_ms));
            }
            CellSummary {
                bits: cell[0].bits,
                hasher,
                mode,
                strategy,
                m,
                seeds: seeds.len(),
                runs: cell.len(),
                precision_mean: mean(&prec),
                precision_std: std_dev(&prec),
                fp_mean: mean(&fps.iter().map(|&x| x as f64).collect::<Vec<_>>()),
                rows_checked_mean: mean(&checked),
                rows_verified_mean: mean(&verified),
                per_seed_precision: prec,
                per_seed_fp: fps,
                wall_time_ms_mean: mean(&wall),
            }
        })
        .collect()
}

fn check_scores(what: &str, got: &RunRecord, expected: &[u64]) -> Result<()> {
    let js = got.j_values();
    if js != expected {
        return Err(Error::Consistency(format!("{what}: scores {js:?}, exact {expected:?}")));
    }
    Ok(())
}

/// Runs every query of a workload against one index.
pub fn run_workload(
    w: &Workload,
    index: &Index,
    label: &str,
    modes: &[Mode],
    strategies: &[Strategy],
    k: usize,
) -> Result<Vec<RunRow>> {
    let mut rows = Vec::new();
    for (qid, q) in w.queries.iter().enumerate() {
        let mut q = q.clone();
        q.k = k;
        let expected = w.expected(qid, k);
        for &strategy in strategies {
            for &mode in modes {
                let opts = DiscoveryOptions {
                    mode,
                    strategy,
                    ..Default::default()
                };
                let run = discover_topk(&q, index, None, &opts)?;
                check_scores(&format!("seed {} query {qid} {label} {mode} {strategy}", w.seed), &run, &expected)?;
                rows.push(RunRow::from_record(w.seed, qid, label, strategy, q.m(), &run));
            }
        }
    }
    Ok(rows)
}

/// Component ablation row; `config` is a ladder label or `no-filter`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub config: String,
    pub bits: usize,
    pub precision_mean: f64,
    pub precision_std: f64,
    pub fp_mean: f64,
    pub per_seed_precision: Vec<f64>,
}

/// Precision of each rung of the XASH component ladder, plus unfiltered
/// verification as the floor.
pub fn ablate_xash(workloads: &[Workload], bits: usize, k: usize) -> Result<Vec<AblationRow>> {
    let mut out = Vec::new();
    let mut floor_runs = Vec::new();
    for (name, components) in XashComponents::LADDER {
        let cfg = HasherConfig::new(HasherKind::Xash, bits).with_components(components);
        let mut runs = Vec::new();
        for w in workloads {
            let index = w.index(&cfg)?;
            let label = cfg.to_string();
            runs.extend(run_workload(w, &index, &label, &[Mode::Mate], &[Strategy::MinCardinality], k)?);
            if components == XashComponents::FULL {
                floor_runs.extend(run_workload(w, &index, "none", &[Mode::Scr], &[Strategy::MinCardinality], k)?);
            }
        }
        out.push(ablation_row(name, bits, &runs));
    }
    out.insert(0, ablation_row("no-filter", bits, &floor_runs));
    Ok(out)
}

fn ablation_row(name: &str, bits: usize, runs: &[RunRow]) -> AblationRow {
    let s = &summarize(runs)[0];
    AblationRow {
        config: name.to_string(),
        bits,
        precision_mean: s.precision_mean,
        precision_std: s.precision_std,
        fp_mean: s.fp_mean,
        per_seed_precision: s.per_seed_precision.clone(),
    }
}

/// Key-size sweep row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeySweepRow {
    pub m: usize,
    pub hasher: String,
    pub precision_mean: f64,
    pub fp_mean: f64,
    pub rows_checked_mean: f64,
    pub rows_verified_mean: f64,
}

/// Sweeps the key size over one corpus per seed. Queries are generated with
/// `sweep.m_max` columns; the key of size `m` is their first `m` columns.
pub fn key_size_sweep(spec: &SyntheticSpec, seeds: &[u64], sweep: KeySweep, cfg: HasherConfig, k: usize) -> Result<Vec<KeySweepRow>> {
    if sweep.m_min == 0 || sweep.m_min > sweep.m_max {
        return Err(Error::Param(format!("bad key sweep {}..={}", sweep.m_min, sweep.m_max)));
    }
    let mut runs = Vec::new();
    for &seed in seeds {
        let mut s = spec.clone().with_seed(seed);
        s.queries.m = sweep.m_max;
        let corpus = generate(&s)?;
        let catalog = corpus.catalog();
        let stats = catalog.stats();
        let index = Index::build(catalog.clone(), cfg.spec_for(&stats)?)?;
        let label = cfg.to_string();
        for m in sweep.m_min..=sweep.m_max {
            let queries = corpus
                .queries
                .iter()
                .map(|q| QueryKey::new(q.to_table(), (0..m).collect(), k))
                .collect::<Result<Vec<_>>>()?;
            let truth = ground_truth(&catalog, &queries)?;
            let w = Workload {
                seed,
                corpus: corpus.clone(),
                catalog: catalog.clone(),
                stats: stats.clone(),
                queries,
                truth,
            };
            runs.extend(run_workload(&w, &index, &label, &[Mode::Mate], &[Strategy::MinCardinality], k)?);
        }
    }
    Ok(summarize(&runs)
        .into_iter()
        .map(|c| KeySweepRow {
            m: c.m,
            hasher: c.hasher,
            precision_mean: c.precision_mean,
            fp_mean: c.fp_mean,
            rows_checked_mean: c.rows_checked_mean,
            rows_verified_mean: c.rows_verified_mean,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub cells: Vec<CellSummary>,
    pub ablation: Vec<AblationRow>,
    pub key_sweep: Vec<KeySweepRow>,
    pub analytic: Vec<AnalyticRow>,
    pub runs: Vec<RunRow>,
}

impl BenchReport {
    pub fn cell(&self, hasher: &str, mode: Mode) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.hasher == hasher && c.mode == mode.token())
    }

    /// Writes `report.json`, `report.csv` (one line per cell), `runs.csv` and
    /// `timings.csv`. Only the timings vary between identical runs.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join("report.json");
        fs::write(&json, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(&json, e))?;

        let mut cells = String::from(
            "hasher,bits,mode,strategy,m,seeds,runs,precision_mean,precision_std,fp_mean,rows_checked_mean,rows_verified_mean\n",
        );
        for c in &self.cells {
            cells.push_str(&format!(
                "{},{},{},{},{},{},{},{:.6},{:.6},{:.3},{:.3},{:.3}\n",
                c.hasher, c.bits, c.mode, c.strategy, c.m, c.seeds, c.runs, c.precision_mean, c.precision_std,
                c.fp_mean, c.rows_checked_mean, c.rows_verified_mean
            ));
        }
        write_text(&dir.join("report.csv"), &cells)?;

        let mut runs = String::from(
            "seed,query_id,hasher,bits,mode,strategy,m,k,tables_fetched,tables_pruned_rule1,tables_pruned_rule2,rows_checked,rows_verified,tp,fp,precision\n",
        );
        let mut timings = String::from("seed,query_id,hasher,mode,strategy,m,wall_time_ms\n");
        for r in &self.runs {
            runs.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6}\n",
                r.seed, r.query_id, r.hasher, r.bits, r.mode, r.strategy, r.m, r.k, r.tables_fetched,
                r.tables_pruned_rule1, r.tables_pruned_rule2, r.rows_checked, r.rows_verified, r.tp, r.fp, r.precision
            ));
            timings.push_str(&format!(
                "{},{},{},{},{},{},{:.3}\n",
                r.seed, r.query_id, r.hasher, r.mode, r.strategy, r.m, r.wall_time_ms
            ));
        }
        write_text(&dir.join("runs.csv"), &runs)?;
        write_text(&dir.join("timings.csv"), &timings)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Generates one workload per seed and runs the configured matrix.
pub fn run_matrix(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let modes = config.modes()?;
    let strategies = config.strategies()?;
    let workloads = config
        .seeds
        .iter()
        .map(|&s| Workload::generate(&config.spec.clone().with_seed(s), config.k))
        .collect::<Result<Vec<_>>>()?;
    let mut runs = Vec::new();
    for cfg in &config.hashers {
        for w in &workloads {
            let index = w.index(cfg)?;
            runs.extend(run_workload(w, &index, &cfg.to_string(), &modes, &strategies, config.k)?);
        }
    }
    let ablation = match config.ablation_bits {
        Some(bits) => ablate_xash(&workloads, bits, config.k)?,
        None => Vec::new(),
    };
    let key_sweep = match config.key_sweep {
        Some(sweep) => key_size_sweep(
            &config.spec,
            &config.seeds,
            sweep,
            HasherConfig::new(HasherKind::Xash, 128),
            config.k,
        )?,
        None => Vec::new(),
    };
    let analytic = (1..=config.analytic_k_max.min(37))
        .map(|k| analytic_collision_check(128, k).map(|c| AnalyticRow::from(&c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport {
        config: config.clone(),
        cells: summarize(&runs),
        ablation,
        key_sweep,
        analytic,
        runs,
    })
}
