//! Seeded synthetic corpora with planted composite-key joins.
//!
//! Every column draws from one value domain (words, numbers, codes or a small
//! category set). Letters follow a Zipf law over the default frequency order,
//! and values within a domain follow a Zipf popularity law, so initial-column
//! values recur across many tables.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_str, Catalog, Table};
use crate::error::{Error, Result};
use crate::xash::DEFAULT_FREQUENCY_ORDER;

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub min: usize,
    pub max: usize,
}

impl Range {
    pub const fn new(min: usize, max: usize) -> Self {
        Range { min, max }
    }

    fn check(&self, what: &str) -> Result<()> {
        if self.min > self.max {
            return Err(Error::Param(format!("{what}: min {} > max {}", self.min, self.max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Vocabulary {
    pub n_domains: usize,
    /// Distinct values per non-category domain.
    pub domain_size: Range,
    pub word_length: Range,
    /// Zipf exponent over letters ranked by the default frequency order.
    pub char_skew: f64,
    /// Zipf exponent of value popularity inside a domain.
    pub value_skew: f64,
    /// Domain kind weights: words, numbers, codes, categories.
    pub kind_weights: [f64; 4],
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            n_domains: 40,
            domain_size: Range::new(2000, 30000),
            word_length: Range::new(3, 12),
            char_skew: 1.0,
            value_skew: 0.8,
            kind_weights: [0.5, 0.2, 0.2, 0.1],
        }
    }
}

/// How query keys are generated and planted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuerySpec {
    pub count: usize,
    /// Key tuples per query table.
    pub rows: usize,
    pub m: usize,
    /// Tables that receive planted tuples of a query.
    pub targets: usize,
    /// Share of the query tuples planted into the best target; target `i` of
    /// `n` receives `(n - i) / n` of that.
    pub joinable_fraction: f64,
    /// Rows per query holding the initial value and some, not all, other key values.
    pub distractors: usize,
}

impl Default for QuerySpec {
    fn default() -> Self {
        QuerySpec {
            count: 20,
            rows: 30,
            m: 2,
            targets: 5,
            joinable_fraction: 0.5,
            distractors: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_tables: usize,
    pub rows_per_table: Range,
    pub cols_per_table: Range,
    /// Table widths `w` are drawn with weight `1 / (w - min + 1)^width_skew`.
    pub width_skew: f64,
    /// Probability that a cell is empty.
    pub empty_rate: f64,
    pub vocabulary: Vocabulary,
    pub queries: QuerySpec,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_tables: 500,
            rows_per_table: Range::new(10, 1000),
            cols_per_table: Range::new(2, 8),
            width_skew: 1.0,
            empty_rate: 0.02,
            vocabulary: Vocabulary::default(),
            queries: QuerySpec::default(),
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    /// A spec small enough for unit tests and the oracle.
    pub fn tiny(seed: u64) -> Self {
        SyntheticSpec {
            n_tables: 12,
            rows_per_table: Range::new(5, 40),
            cols_per_table: Range::new(2, 5),
            vocabulary: Vocabulary {
                n_domains: 6,
                domain_size: Range::new(20, 60),
                ..Vocabulary::default()
            },
            queries: QuerySpec {
                count: 3,
                rows: 6,
                m: 2,
                targets: 2,
                joinable_fraction: 0.5,
                distractors: 4,
            },
            seed,
            ..SyntheticSpec::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.rows_per_table.check("rows_per_table")?;
        self.cols_per_table.check("cols_per_table")?;
        self.vocabulary.domain_size.check("domain_size")?;
        self.vocabulary.word_length.check("word_length")?;
        let q = &self.queries;
        if self.n_tables == 0 || self.rows_per_table.min == 0 || self.cols_per_table.min == 0 {
            return Err(Error::Param("corpus would be empty".into()));
        }
        if self.vocabulary.n_domains == 0 || self.vocabulary.domain_size.min == 0 {
            return Err(Error::Param("vocabulary is empty".into()));
        }
        if self.vocabulary.word_length.min == 0 {
            return Err(Error::Param("word_length.min must be positive".into()));
        }
        if self.vocabulary.kind_weights.iter().any(|w| *w < 0.0) || self.vocabulary.kind_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Param("kind_weights must be non-negative with a positive sum".into()));
        }
        if !(0.0..=1.0).contains(&q.joinable_fraction) || !(0.0..1.0).contains(&self.empty_rate) {
            return Err(Error::Param("fractions must lie in [0, 1]".into()));
        }
        if q.count > 0 {
            if q.m == 0 || q.m > self.cols_per_table.max {
                return Err(Error::Param(format!(
                    "key size {} not realizable with at most {} columns",
                    q.m, self.cols_per_table.max
                )));
            }
            if q.rows == 0 {
                return Err(Error::Param("queries need at least one row".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Words,
    Numbers,
    Codes,
    Categories,
}

#[derive(Debug, Clone)]
struct Domain {
    values: Vec<String>,
    popularity: WeightedIndex<f64>,
}

impl Domain {
    fn sample(&self, rng: &mut ChaCha8Rng) -> &str {
        &self.values[self.popularity.sample(rng)]
    }
}

fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    (1..=n).map(|r| (r as f64).powf(-s)).collect()
}

struct Letters(WeightedIndex<f64>, Vec<char>);

impl Letters {
    fn new(skew: f64) -> Self {
        let letters: Vec<char> = DEFAULT_FREQUENCY_ORDER.iter().copied().filter(char::is_ascii_lowercase).collect();
        let w = WeightedIndex::new(zipf_weights(letters.len(), skew)).expect("positive weights");
        Letters(w, letters)
    }

    fn word(&self, rng: &mut ChaCha8Rng, len: usize) -> String {
        (0..len).map(|_| self.1[self.0.sample(rng)]).collect()
    }
}

fn make_domain(kind: Kind, vocab: &Vocabulary, letters: &Letters, rng: &mut ChaCha8Rng) -> Domain {
    let size = match kind {
        Kind::Categories => rng.random_range(3..=20),
        _ => rng.random_range(vocab.domain_size.min..=vocab.domain_size.max),
    };
    let mut seen = HashSet::new();
    let mut values = Vec::with_capacity(size);
    let wl = vocab.word_length;
    let num_len = rng.random_range(1..=7usize);
    let code_letters = rng.random_range(1..=3usize);
    let code_digits = rng.random_range(2..=5usize);
    let mut attempts = 0;
    while values.len() < size && attempts < size * 20 {
        attempts += 1;
        let v = match kind {
            Kind::Words | Kind::Categories => {
                let n_words = if kind == Kind::Words && rng.random_bool(0.3) { 2 } else { 1 };
                let parts: Vec<String> = (0..n_words)
                    .map(|_| {
                        let len = rng.random_range(wl.min..=wl.max);
                        letters.word(rng, len)
                    })
                    .collect();
                parts.join(" ")
            }
            Kind::Numbers => {
                let len = rng.random_range(1..=num_len.max(1));
                let mut s = rng.random_range(1..=9u8).to_string();
                for _ in 1..len {
                    s.push(char::from(b'0' + rng.random_range(0..10u8)));
                }
                s
            }
            Kind::Codes => {
                let mut s = letters.word(rng, code_letters).to_uppercase();
                s.push('-');
                for _ in 0..code_digits {
                    s.push(char::from(b'0' + rng.random_range(0..10u8)));
                }
                s
            }
        };
        if seen.insert(normalize_str(&v)) {
            values.push(v);
        }
    }
    let popularity = WeightedIndex::new(zipf_weights(values.len(), vocab.value_skew)).expect("nonempty domain");
    Domain { values, popularity }
}

/// One generated table before ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// A generated query: key column names and key tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedQuery {
    pub id: usize,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl GeneratedQuery {
    pub fn to_table(&self) -> Table {
        Table::from_raw_rows(format!("query{}", self.id), Some(self.header.clone()), &self.rows)
            .expect("queries have rows")
    }
}

/// Ground truth line of the sidecar file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub query_id: usize,
    pub table_id: u32,
    pub true_j: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub spec: SyntheticSpec,
    pub tables: Vec<GeneratedTable>,
    pub queries: Vec<GeneratedQuery>,
}

impl SyntheticCorpus {
    /// Registers the tables in order, so table ids equal positions.
    pub fn catalog(&self) -> Catalog {
        let mut cat = Catalog::new();
        for t in &self.tables {
            let table = Table::from_raw_rows(t.name.clone(), Some(t.header.clone()), &t.rows).expect("generated tables have rows");
            cat.register(table);
        }
        cat
    }
}

/// Generates the corpus and its queries. Deterministic under `spec.seed`.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vocab = &spec.vocabulary;
    let letters = Letters::new(vocab.char_skew);
    let kinds = [Kind::Words, Kind::Numbers, Kind::Codes, Kind::Categories];
    let kind_pick = WeightedIndex::new(vocab.kind_weights).map_err(|e| Error::Param(e.to_string()))?;
    let domains: Vec<Domain> = (0..vocab.n_domains)
        .map(|_| make_domain(kinds[kind_pick.sample(&mut rng)], vocab, &letters, &mut rng))
        .collect();

    let widths: Vec<usize> = (spec.cols_per_table.min..=spec.cols_per_table.max).collect();
    let width_pick = WeightedIndex::new(zipf_weights(widths.len(), spec.width_skew)).expect("nonempty");
    let (lo, hi) = (spec.rows_per_table.min as f64, spec.rows_per_table.max as f64);

    let mut tables = Vec::with_capacity(spec.n_tables);
    let mut table_domains: Vec<Vec<usize>> = Vec::with_capacity(spec.n_tables);
    for t in 0..spec.n_tables {
        let width = widths[width_pick.sample(&mut rng)];
        // log-uniform row counts
        let n_rows = (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp().round() as usize;
        let n_rows = n_rows.clamp(spec.rows_per_table.min, spec.rows_per_table.max);
        let mut cols: Vec<usize> = (0..vocab.n_domains).collect();
        cols.shuffle(&mut rng);
        let cols: Vec<usize> = (0..width).map(|i| cols[i % cols.len()]).collect();
        let rows = (0..n_rows)
            .map(|_| {
                cols.iter()
                    .map(|&d| {
                        if rng.random_bool(spec.empty_rate) {
                            String::new()
                        } else {
                            domains[d].sample(&mut rng).to_string()
                        }
                    })
                    .collect()
            })
            .collect();
        let header = cols.iter().enumerate().map(|(i, d)| format!("d{d}_{i}")).collect();
        tables.push(GeneratedTable {
            name: format!("t{t:04}"),
            header,
            rows,
        });
        table_domains.push(cols);
    }

    let queries = plant_queries(spec, &domains, &mut tables, &table_domains, &mut rng)?;
    Ok(SyntheticCorpus {
        spec: spec.clone(),
        tables,
        queries,
    })
}

/// Which rows of the corpus contain a normalized value.
fn value_rows(tables: &[GeneratedTable]) -> HashMap<Box<str>, BTreeSet<(u32, u32)>> {
    let mut map: HashMap<Box<str>, BTreeSet<(u32, u32)>> = HashMap::new();
    for (t, table) in tables.iter().enumerate() {
        for (r, row) in table.rows.iter().enumerate() {
            for v in row {
                let n = normalize_str(v);
                if !n.is_empty() {
                    map.entry(n).or_default().insert((t as u32, r as u32));
                }
            }
        }
    }
    map
}

fn plant_queries(
    spec: &SyntheticSpec,
    domains: &[Domain],
    tables: &mut [GeneratedTable],
    table_domains: &[Vec<usize>],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<GeneratedQuery>> {
    let q = &spec.queries;
    if q.count == 0 {
        return Ok(Vec::new());
    }
    let wide: Vec<usize> = (0..tables.len()).filter(|&t| table_domains[t].len() >= q.m).collect();
    if wide.is_empty() {
        return Err(Error::Param(format!("no table has {} columns", q.m)));
    }
    let existing = value_rows(tables);
    // rows already used by planting, so plants never overwrite each other
    let mut used: HashSet<(usize, usize)> = HashSet::new();
    let mut out = Vec::with_capacity(q.count);
    for id in 0..q.count {
        // key domains follow the schema of a random wide table; schemas whose
        // value combinations are exhausted (small category domains) are redrawn
        let mut drawn = None;
        for _ in 0..50 {
            let source = *wide.choose(rng).expect("nonempty");
            let mut key_cols: Vec<usize> = (0..table_domains[source].len()).collect();
            key_cols.shuffle(rng);
            key_cols.truncate(q.m);
            let key_domains: Vec<usize> = key_cols.iter().map(|&c| table_domains[source][c]).collect();
            let mut tuples: Vec<Vec<String>> = Vec::with_capacity(q.rows);
            let mut seen = HashSet::new();
            let mut attempts = 0;
            while tuples.len() < q.rows && attempts < q.rows * 50 {
                attempts += 1;
                let tuple: Vec<String> = key_domains.iter().map(|&d| domains[d].sample(rng).to_string()).collect();
                let norm: Vec<Box<str>> = tuple.iter().map(|v| normalize_str(v)).collect();
                if !seen.insert(norm.clone()) || joins_anywhere(&norm, &existing) {
                    continue;
                }
                tuples.push(tuple);
            }
            if tuples.len() == q.rows {
                drawn = Some((source, key_cols, tuples));
                break;
            }
        }
        let (source, key_cols, tuples) = drawn
            .ok_or_else(|| Error::Param(format!("could not draw {} non-joining tuples for query {id}", q.rows)))?;

        let planted = (q.joinable_fraction * tuples.len() as f64).ceil() as usize;
        let mut targets: Vec<usize> = wide.iter().copied().filter(|&t| t != source).collect();
        targets.shuffle(rng);
        targets.truncate(q.targets);
        for (i, &t) in targets.iter().enumerate() {
            let n = planted * (q.targets - i) / q.targets.max(1);
            let mut cols: Vec<usize> = (0..tables[t].header.len()).collect();
            cols.shuffle(rng);
            cols.truncate(q.m);
            let free = free_rows(&tables[t], t, &used, rng);
            for (tuple, &row) in tuples.iter().take(n).zip(&free) {
                for (v, &c) in tuple.iter().zip(&cols) {
                    tables[t].rows[row][c] = v.clone();
                }
                used.insert((t, row));
            }
        }

        // near misses: a strict subset of a key tuple in one row
        if q.m >= 2 {
            for _ in 0..q.distractors {
                let t = *wide.choose(rng).expect("nonempty");
                let tuple = tuples.choose(rng).expect("nonempty");
                let keep = rng.random_range(1..q.m);
                let mut cols: Vec<usize> = (0..tables[t].header.len()).collect();
                cols.shuffle(rng);
                let Some(&row) = free_rows(&tables[t], t, &used, rng).first() else {
                    continue;
                };
                let mut positions: Vec<usize> = (0..q.m).collect();
                positions.shuffle(rng);
                for (&p, &c) in positions.iter().take(keep).zip(&cols) {
                    tables[t].rows[row][c] = tuple[p].clone();
                }
                used.insert((t, row));
            }
        }

        let header = key_cols.iter().map(|&c| tables[source].header[c].clone()).collect();
        out.push(GeneratedQuery {
            id,
            header,
            rows: tuples,
        });
    }
    Ok(out)
}

fn joins_anywhere(tuple: &[Box<str>], existing: &HashMap<Box<str>, BTreeSet<(u32, u32)>>) -> bool {
    let mut sets: Vec<&BTreeSet<(u32, u32)>> = Vec::with_capacity(tuple.len());
    for v in tuple {
        match existing.get(v) {
            Some(s) => sets.push(s),
            None => return false,
        }
    }
    sets.sort_by_key(|s| s.len());
    sets[0].iter().any(|r| sets[1..].iter().all(|s| s.contains(r)))
}

fn free_rows(table: &GeneratedTable, t: usize, used: &HashSet<(usize, usize)>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..table.rows.len()).filter(|r| !used.contains(&(t, *r))).collect();
    rows.shuffle(rng);
    rows
}

/// Writes `tables/*.csv`, `queries/query*.csv` and `truth.jsonl` under `dir`.
pub fn write_corpus(corpus: &SyntheticCorpus, truth: &[TruthRecord], dir: &Path) -> Result<()> {
    let tables_dir = dir.join("tables");
    let queries_dir = dir.join("queries");
    for d in [&tables_dir, &queries_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    for t in &corpus.tables {
        write_csv(&tables_dir.join(format!("{}.csv", t.name)), &t.header, &t.rows)?;
    }
    for q in &corpus.queries {
        write_csv(&queries_dir.join(format!("query{:03}.csv", q.id)), &q.header, &q.rows)?;
    }
    let mut lines = String::new();
    for r in truth {
        lines.push_str(&serde_json::to_string(r)?);
        lines.push('\n');
    }
    let path = dir.join("truth.jsonl");
    fs::write(&path, lines).map_err(|e| Error::io(path, e))
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
