//! Properties of the random program and database generators, the shrinker,
//! and the engine, checked over many seeds.

use std::collections::BTreeSet;

use tlq::difftest::check::random_trial;
use tlq::difftest::gen::{gen_db, gen_program, schema_for, sequence, well_typed_in};
use tlq::difftest::shrink::shrink;
use tlq::difftest::{run_campaign, CampaignConfig, Check, Trial};
use tlq::engine::{apply_atomic, snapshot_at, Outcome, Store};
use tlq_core::interp::CurrentMode;
use tlq_core::model::{well_formed, Database, Schema, TableKind, Time};
use tlq_core::surface::{parse_term, print_term};
use tlq_core::typecheck::Dialect;

const DIALECTS: [Dialect; 3] = [Dialect::Linq, Dialect::Transaction, Dialect::Valid];

fn tables(schema: &Schema) -> BTreeSet<String> {
    schema.tables.keys().cloned().collect()
}

fn term_size(t: &tlq_core::model::Term) -> usize {
    1 + t.children().into_iter().map(term_size).sum::<usize>()
}

#[test]
fn printed_programs_parse_back() {
    for seed in 0..500u64 {
        let dialect = DIALECTS[seed as usize % 3];
        let schema = schema_for(dialect);
        let (t, _) = gen_program(seed, &schema, dialect, 4);
        let printed = print_term(&t);
        let again = parse_term(&printed, &tables(&schema))
            .unwrap_or_else(|e| panic!("seed {seed}: {e}\n{printed}"));
        assert_eq!(again, t, "seed {seed}:\n{printed}");
    }
}

#[test]
fn few_generated_programs_are_rejected() {
    for dialect in DIALECTS {
        let schema = schema_for(dialect);
        let rejected: usize = (0..500u64)
            .map(|s| gen_program(s, &schema, dialect, 4).1)
            .sum();
        let rate = rejected as f64 / (500 + rejected) as f64;
        assert!(rate < 0.05, "{dialect:?}: {:.1}% rejected", rate * 100.0);
    }
}

#[test]
fn generated_databases_are_well_formed() {
    for seed in 0..1000u64 {
        let dialect = DIALECTS[seed as usize % 3];
        let schema = schema_for(dialect);
        let g = gen_db(seed, &schema, 5);
        assert!(well_formed(&g.db), "seed {seed}");
        for (name, ts) in &schema.tables {
            let rows = g.db.table(name).unwrap();
            assert!(rows.len() <= 5);
            for row in rows.iter() {
                if ts.kind.is_temporal() {
                    let (_, s, e) = row.as_row().expect("temporal tables hold rows");
                    assert!(s < e, "seed {seed}: empty period in {name}");
                    if !s.is_sentinel() {
                        assert!(s <= g.max_time);
                    }
                }
            }
        }
    }
}

#[test]
fn size_zero_gives_empty_tables() {
    for dialect in DIALECTS {
        let schema = schema_for(dialect);
        let g = gen_db(7, &schema, 0);
        assert_eq!(g.db, Database::empty_for(&schema));
    }
}

#[test]
fn generation_is_deterministic() {
    for dialect in DIALECTS {
        let schema = schema_for(dialect);
        for seed in [1u64, 99, 12345] {
            assert_eq!(
                gen_program(seed, &schema, dialect, 4),
                gen_program(seed, &schema, dialect, 4)
            );
            assert_eq!(gen_db(seed, &schema, 5), gen_db(seed, &schema, 5));
        }
    }
}

#[test]
fn campaigns_do_not_depend_on_thread_count() {
    for check in [Check::TheoremV, Check::Soundness] {
        let run = |threads| {
            run_campaign(&CampaignConfig {
                check,
                trials: 120,
                seed: 11,
                threads,
            })
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(
            (
                a.trials,
                a.matched,
                a.aborted,
                a.rejected,
                &a.coverage,
                &a.mismatches
            ),
            (
                b.trials,
                b.matched,
                b.aborted,
                b.rejected,
                &b.coverage,
                &b.mismatches
            )
        );
    }
}

fn mentions_modification(t: &Trial) -> bool {
    let p = print_term(&t.term);
    ["insert", "update", "delete"].iter().any(|k| p.contains(k))
}

#[test]
fn shrinking_keeps_programs_well_typed() {
    let mut shrunk = 0;
    for seed in 1..150u64 {
        let dialect = DIALECTS[seed as usize % 3];
        let (trial, _) = random_trial(seed, dialect);
        if !mentions_modification(&trial) {
            continue;
        }
        let small = shrink(&trial, &mentions_modification);
        assert!(
            well_typed_in(&small.schema, dialect, &small.term),
            "seed {seed}"
        );
        assert!(mentions_modification(&small));
        assert!(term_size(&small.term) <= term_size(&trial.term));
        assert!(well_formed(&small.db));
        shrunk += usize::from(small.term != trial.term);
    }
    assert!(shrunk > 20, "only {shrunk} programs got smaller");
}

#[test]
fn current_strategies_agree() {
    for seed in 1..=500u64 {
        let (t, _) = random_trial(seed, Dialect::Valid);
        let direct = apply_atomic(&t.schema, &t.db, t.clock, &t.term, CurrentMode::Direct).unwrap();
        let desugar =
            apply_atomic(&t.schema, &t.db, t.clock, &t.term, CurrentMode::Desugar).unwrap();
        assert_eq!(direct, desugar, "seed {seed}:\n{}", print_term(&t.term));
    }
}

#[test]
fn transaction_history_is_never_rewritten() {
    for seed in 1..=300u64 {
        let (t, _) = random_trial(seed, Dialect::Transaction);
        let Outcome::Committed { db, .. } =
            apply_atomic(&t.schema, &t.db, t.clock, &t.term, CurrentMode::Direct).unwrap()
        else {
            panic!("seed {seed}: transaction-time programs never abort");
        };
        for (name, ts) in &t.schema.tables {
            if ts.kind != TableKind::Transaction {
                continue;
            }
            for past in (-1..t.clock.raw()).map(Time::new) {
                assert_eq!(
                    snapshot_at(&t.schema, &t.db, name, past).unwrap(),
                    snapshot_at(&t.schema, &db, name, past).unwrap(),
                    "seed {seed}: {name} at {past} changed"
                );
            }
            for row in db.table(name).unwrap().iter() {
                let (_, s, e) = row.as_row().unwrap();
                assert!(s <= t.clock, "seed {seed}: row starts after the clock");
                assert!(
                    e <= t.clock || e.is_forever(),
                    "seed {seed}: row ends after the clock"
                );
            }
        }
    }
}

#[test]
fn aborted_programs_leave_the_store_untouched() {
    let tables = tables(&schema_for(Dialect::Valid));
    let bad = parse_term(
        r#"insert sequenced r values [|row((a = 1, b = "x"), @3, @3)|]"#,
        &tables,
    )
    .unwrap();
    for seed in 1..=500u64 {
        let (t, _) = random_trial(seed, Dialect::Valid);
        let mut store = Store {
            schema: t.schema.clone(),
            db: t.db.clone(),
            clock: None,
        };
        let before = store.clone();
        let program = sequence(vec![t.term.clone(), bad.clone()]);
        let out = store.apply(&program, t.clock, CurrentMode::Direct).unwrap();
        assert!(matches!(out, Outcome::Aborted { .. }), "seed {seed}");
        assert_eq!(store, before, "seed {seed}");
    }
}

#[test]
fn snapshots_survive_a_save_and_load() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..200u64 {
        let dialect = DIALECTS[seed as usize % 3];
        let schema = schema_for(dialect);
        let g = gen_db(seed, &schema, 5);
        let store = Store {
            schema,
            db: g.db,
            clock: (seed % 2 == 0).then(|| Time::new(seed as i64)),
        };
        let path = dir.path().join(format!("{seed}.json"));
        store.save(&path).unwrap();
        assert_eq!(Store::load(&path).unwrap(), store, "seed {seed}");
        assert_eq!(
            Store::from_json_str(&store.to_json().to_string()).unwrap(),
            store
        );
    }
}

#[test]
fn snapshot_json_is_canonical() {
    let schema = schema_for(Dialect::Valid);
    let g = gen_db(3, &schema, 5);
    let store = Store {
        schema,
        db: g.db,
        clock: None,
    };
    let text = store.to_json_string();
    let again = Store::from_json_str(&text).unwrap().to_json_string();
    assert_eq!(text, again);
}
