//! Randomized end-to-end properties over generated corpora.

mod common;

use mate::discovery::{brute_force_topk, discover_topk, mask_covers, DiscoveryOptions, Mode, DEFAULT_ORACLE_BUDGET};
use mate::index::super_key;
use mate::{normalize_value, HasherKind, Index};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KINDS: [HasherKind; 5] = [HasherKind::Xash, HasherKind::Bloom, HasherKind::Lhbf, HasherKind::Ht, HasherKind::Uniform];

fn kind() -> impl Strategy<Value = HasherKind> {
    (0..KINDS.len()).prop_map(|i| KINDS[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joinable_rows_always_pass_the_filter(seed in any::<u64>(), kind in kind(), m in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = common::vocabulary(&mut rng, 30);
        let cat = common::random_catalog(&mut rng, 10, 30, 6, &vocab);
        let q = common::random_query(&mut rng, &cat, &vocab, m, 1);
        let h = common::random_hasher(&mut rng, kind, &cat);
        let index = Index::build(cat.clone(), h).unwrap();
        for tuple in q.key_tuples() {
            let vals: Vec<&str> = tuple.iter().map(|v| &**v).collect();
            if vals.iter().any(|v| v.is_empty()) {
                continue;
            }
            let qsk = super_key(&vals.iter().map(|v| normalize_value(v)).collect::<Vec<_>>(), &h);
            for t in cat.tables() {
                for (r, cells) in t.rows() {
                    let row: Vec<&str> = cells.iter().map(|c| c.normalized()).collect();
                    if common::row_joins(&vals, &row) {
                        prop_assert!(mask_covers(&qsk, index.super_key(t.id(), r).unwrap()).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn every_mode_returns_the_oracle_scores(seed in any::<u64>(), kind in kind(), m in 1usize..=4, k in 1usize..=6, pruning in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = common::vocabulary(&mut rng, 25);
        let cat = common::random_catalog(&mut rng, 15, 40, 6, &vocab);
        let q = common::random_query(&mut rng, &cat, &vocab, m, k);
        let index = Index::build(cat.clone(), common::random_hasher(&mut rng, kind, &cat)).unwrap();
        let want = brute_force_topk(&q, &cat, DEFAULT_ORACLE_BUDGET).unwrap();
        for mode in [Mode::Mate, Mode::Scr, Mode::Mcr] {
            let opts = DiscoveryOptions { mode, pruning, ..Default::default() };
            let got = discover_topk(&q, &index, None, &opts).unwrap();
            prop_assert_eq!(got.j_values(), want.j_values());
            prop_assert!(got.tp + got.fp >= got.results.iter().map(|r| r.j).sum::<u64>());
            prop_assert!((0.0..=1.0).contains(&got.precision));
        }
    }

    #[test]
    fn row_pair_scores_never_undercount(seed in any::<u64>(), m in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = common::vocabulary(&mut rng, 20);
        let cat = common::random_catalog(&mut rng, 8, 30, 5, &vocab);
        let q = common::random_query(&mut rng, &cat, &vocab, m, cat.len());
        let index = Index::build(cat.clone(), common::random_hasher(&mut rng, HasherKind::Xash, &cat)).unwrap();
        let distinct = discover_topk(&q, &index, None, &DiscoveryOptions::default()).unwrap();
        let pairs = discover_topk(&q, &index, None, &DiscoveryOptions { count_row_pairs: true, ..Default::default() }).unwrap();
        prop_assert_eq!(pairs.tables_pruned_rule1 + pairs.tables_pruned_rule2, 0);
        for d in &distinct.results {
            let p = pairs.results.iter().find(|p| p.table_id == d.table_id);
            prop_assert!(p.is_some_and(|p| p.j >= d.j));
        }
    }

    #[test]
    fn edits_match_rebuild_and_survive_persistence(seed in any::<u64>(), kind in kind(), n in 1usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = common::vocabulary(&mut rng, 30);
        let cat = common::random_catalog(&mut rng, 5, 15, 4, &vocab);
        let mut index = Index::build(cat.clone(), common::random_hasher(&mut rng, kind, &cat)).unwrap();
        for _ in 0..n {
            let variant = rng.random_range(0..7);
            if let Some(edit) = common::random_edit(&mut rng, &index, &vocab, variant) {
                index.apply_edit(&edit).unwrap();
            }
        }
        let rebuilt = Index::build(index.catalog().clone(), *index.hasher()).unwrap();
        prop_assert_eq!(index.diff(&rebuilt), None);
        let tmp = tempfile::tempdir().unwrap();
        index.save(tmp.path()).unwrap();
        let loaded = Index::load(tmp.path()).unwrap();
        prop_assert_eq!(index.diff(&loaded), None);
        prop_assert_eq!(loaded.catalog().next_id(), index.catalog().next_id());
    }
}

#[test]
fn invalid_edits_leave_the_index_untouched() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let vocab = common::vocabulary(&mut rng, 20);
    let cat = common::random_catalog(&mut rng, 4, 10, 3, &vocab);
    let mut index = Index::build(cat.clone(), common::random_hasher(&mut rng, HasherKind::Xash, &cat)).unwrap();
    let before = index.clone();
    let bad = [
        mate::Edit::DeleteTable { table_id: 1000 },
        mate::Edit::DeleteRow { table_id: 0, row_id: 10_000 },
        mate::Edit::UpdateCell { table_id: 0, row_id: 0, column_id: 999, value: "x".into() },
        mate::Edit::InsertRow { table_id: 0, values: vec!["x".into(); 50] },
        mate::Edit::AddColumn { table_id: 0, name: None, values: vec![] },
    ];
    for e in &bad {
        assert!(index.apply_edit(e).is_err(), "{e:?}");
        assert_eq!(index.diff(&before), None, "{e:?}");
    }
}
