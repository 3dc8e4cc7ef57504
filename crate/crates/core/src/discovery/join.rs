//! Exact joinability: distinct query key tuples matched under injective column
//! mappings, maximized over mappings.

use std::collections::{HashMap, HashSet};

use crate::corpus::{Cell, Table};
use crate::error::{Error, Result};

/// `C(n_cols, m)`: number of column subsets a key of size `m` can map onto.
pub fn mapping_count(n_cols: usize, m: usize) -> u128 {
    crate::xash::binomial(n_cols as u64, m as u64)
}

/// Ordered selections `P(n_cols, m)`, saturating.
pub fn ordered_mapping_count(n_cols: usize, m: usize) -> u128 {
    if m > n_cols {
        return 0;
    }
    (0..m).try_fold(1u128, |acc, i| acc.checked_mul((n_cols - i) as u128)).unwrap_or(u128::MAX)
}

/// Calls `f` with every injective assignment of key positions to candidate
/// columns whose cells equal the key values. `tuple` entries are non-empty.
pub(crate) fn for_each_assignment(tuple: &[Box<str>], row: &[Cell], mut f: impl FnMut(&[u16])) {
    let options: Vec<Vec<u16>> = tuple
        .iter()
        .map(|v| {
            row.iter()
                .enumerate()
                .filter(|(_, c)| c.normalized() == &**v)
                .map(|(i, _)| i as u16)
                .collect()
        })
        .collect();
    if options.iter().any(Vec::is_empty) {
        return;
    }
    let mut chosen = Vec::with_capacity(tuple.len());
    assign(&options, &mut chosen, &mut f);
}

fn assign(options: &[Vec<u16>], chosen: &mut Vec<u16>, f: &mut impl FnMut(&[u16])) {
    let depth = chosen.len();
    if depth == options.len() {
        f(chosen);
        return;
    }
    for &c in &options[depth] {
        if !chosen.contains(&c) {
            chosen.push(c);
            assign(options, chosen, f);
            chosen.pop();
        }
    }
}

/// Outcome of verifying one candidate table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TableScore {
    pub j: u64,
    pub mapping: Vec<u16>,
    /// Candidate pairs that matched under at least one mapping.
    pub true_pairs: u64,
    pub false_pairs: u64,
}

/// Scores a candidate table from `(tuple_id, row_id)` pairs.
///
/// With `count_row_pairs` the score counts matched `(tuple, row)` pairs per
/// mapping instead of distinct tuples.
pub fn joinability(
    tuples: &[Vec<Box<str>>],
    table: &Table,
    pairs: &[(u32, u32)],
    count_row_pairs: bool,
) -> TableScore {
    let mut per_mapping: HashMap<Vec<u16>, HashSet<(u32, u32)>> = HashMap::new();
    let mut score = TableScore::default();
    for &(tuple_id, row_id) in pairs {
        let Some(row) = table.row(row_id) else {
            continue;
        };
        let mut hit = false;
        for_each_assignment(&tuples[tuple_id as usize], row, |m| {
            hit = true;
            let key = if count_row_pairs { (tuple_id, row_id) } else { (tuple_id, 0) };
            match per_mapping.get_mut(m) {
                Some(set) => {
                    set.insert(key);
                }
                None => {
                    per_mapping.insert(m.to_vec(), HashSet::from([key]));
                }
            }
        });
        if hit {
            score.true_pairs += 1;
        } else {
            score.false_pairs += 1;
        }
    }
    for (mapping, set) in per_mapping {
        let j = set.len() as u64;
        if j > score.j || (j == score.j && mapping < score.mapping) {
            score.j = j;
            score.mapping = mapping;
        }
    }
    score
}

/// Default work budget of the exhaustive oracle.
pub const DEFAULT_ORACLE_BUDGET: u128 = 200_000_000;

/// Exhaustive score of one table: every ordered column selection, projected
/// row by row and intersected with the query tuples.
pub fn brute_force_table(tuples: &HashSet<Vec<&str>>, table: &Table, m: usize) -> (u64, Vec<u16>) {
    let n = table.n_cols();
    let mut best = (0u64, Vec::new());
    let mut mapping: Vec<u16> = Vec::with_capacity(m);
    let mut visit = |mapping: &[u16]| {
        let mut seen: HashSet<Vec<&str>> = HashSet::new();
        for (_, row) in table.rows() {
            let proj: Vec<&str> = mapping.iter().map(|&c| row[c as usize].normalized()).collect();
            if proj.iter().any(|v| v.is_empty()) {
                continue;
            }
            if tuples.contains(&proj) {
                seen.insert(proj);
            }
        }
        let j = seen.len() as u64;
        if j > best.0 || (j == best.0 && j > 0 && mapping < best.1.as_slice()) {
            best = (j, mapping.to_vec());
        }
    };
    enumerate_mappings(n as u16, m, &mut mapping, &mut visit);
    best
}

fn enumerate_mappings(n: u16, m: usize, cur: &mut Vec<u16>, f: &mut impl FnMut(&[u16])) {
    if cur.len() == m {
        f(cur);
        return;
    }
    for c in 0..n {
        if !cur.contains(&c) {
            cur.push(c);
            enumerate_mappings(n, m, cur, f);
            cur.pop();
        }
    }
}

pub(crate) fn check_budget(needed: u128, budget: u128) -> Result<()> {
    if needed > budget {
        Err(Error::Budget { needed, budget })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuples(rows: &[&[&str]]) -> Vec<Vec<Box<str>>> {
        rows.iter().map(|r| r.iter().map(|v| Box::from(*v)).collect()).collect()
    }

    #[test]
    fn mapping_counts() {
        assert_eq!(mapping_count(4, 3), 4);
        assert_eq!(mapping_count(3, 3), 1);
        assert_eq!(mapping_count(2, 3), 0);
        assert_eq!(ordered_mapping_count(4, 3), 24);
        assert_eq!(ordered_mapping_count(2, 3), 0);
    }

    #[test]
    fn assignments_are_injective() {
        let row: Vec<Cell> = ["a", "a", "b"].iter().map(|v| Cell::new(v)).collect();
        let mut seen = Vec::new();
        for_each_assignment(&tuples(&[&["a", "a"]])[0], &row, |m| seen.push(m.to_vec()));
        assert_eq!(seen, vec![vec![0, 1], vec![1, 0]]);
        let mut none = 0;
        for_each_assignment(&tuples(&[&["b", "b"]])[0], &row, |_| none += 1);
        assert_eq!(none, 0);
    }

    #[test]
    fn duplicate_tuples_count_once() {
        let t = Table::from_raw_rows("t", None, &[vec!["a", "b"], vec!["a", "b"], vec!["c", "d"]]).unwrap();
        let q = tuples(&[&["a", "b"], &["c", "x"]]);
        let s = joinability(&q, &t, &[(0, 0), (0, 1), (1, 2)], false);
        assert_eq!((s.j, s.mapping.clone()), (1, vec![0, 1]));
        assert_eq!((s.true_pairs, s.false_pairs), (2, 1));
        let pairs = joinability(&q, &t, &[(0, 0), (0, 1), (1, 2)], true);
        assert_eq!(pairs.j, 2);
    }

    #[test]
    fn ties_pick_smallest_mapping() {
        let t = Table::from_raw_rows("t", None, &[vec!["a", "a"]]).unwrap();
        let q = tuples(&[&["a"]]);
        assert_eq!(joinability(&q, &t, &[(0, 0)], false).mapping, vec![0]);
        let set: HashSet<Vec<&str>> = HashSet::from([vec!["a"]]);
        assert_eq!(brute_force_table(&set, &t, 1), (1, vec![0]));
    }

    #[test]
    fn budget_guard() {
        assert!(check_budget(10, 10).is_ok());
        assert!(matches!(check_budget(11, 10), Err(Error::Budget { needed: 11, budget: 10 })));
    }
}
