use std::collections::BTreeMap;

use proptest::prelude::*;
use wordtutor_core::agent::{CostLedger, CostSchedule, TutorEffort};
use wordtutor_core::corpus::{generate_synthetic_corpus, io, segment_turns, SynthParams};
use wordtutor_core::eval::{kld, Distribution};
use wordtutor_core::model::{AttributeLexicon, CharEvent, ConditionVector, Corpus, Role};
use wordtutor_core::sim::{Level, SimModel};

const GAP: u64 = 1100;

fn events(steps: &[(u64, bool, char)]) -> Vec<CharEvent> {
    let mut ts = 0;
    steps
        .iter()
        .enumerate()
        .map(|(i, &(dt, tutor, ch))| {
            ts += dt;
            CharEvent {
                seq: i as u64 + 1,
                server_ts: ts,
                session_id: "p".into(),
                object_index: 0,
                sender: if tutor { Role::Tutor } else { Role::Learner },
                ch,
                client_ts: ts,
            }
        })
        .collect()
}

fn dist(weights: &[(u8, f64)]) -> Distribution {
    let mut m = BTreeMap::new();
    for (k, w) in weights {
        *m.entry(format!("x{k}")).or_insert(0.0) += w;
    }
    let s: f64 = m.values().sum();
    m.values_mut().for_each(|v| *v /= s);
    Distribution::new(m).unwrap()
}

fn corpus() -> &'static Corpus {
    static C: std::sync::OnceLock<Corpus> = std::sync::OnceLock::new();
    C.get_or_init(|| {
        let lex = AttributeLexicon::default();
        generate_synthetic_corpus(
            &lex,
            &SynthParams {
                dialogues: 120,
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap()
        .corpus
    })
}

proptest! {
    #[test]
    fn segmentation_partitions_each_speaker(steps in prop::collection::vec((0u64..2500, any::<bool>(), prop::char::range('a', 'z')), 1..120)) {
        let evs = events(&steps);
        let d = segment_turns(&evs, GAP, &[]).unwrap();
        prop_assert_eq!(d.len(), 1);
        let turns = &d[0].turns;
        prop_assert_eq!(turns.iter().map(|t| t.events.len()).sum::<usize>(), evs.len());
        for role in Role::ALL {
            let typed: String = evs.iter().filter(|e| e.sender == role).map(|e| e.ch).collect();
            let mine: Vec<_> = turns.iter().filter(|t| t.speaker == role).collect();
            let joined: String = mine.iter().map(|t| t.text.as_str()).collect();
            prop_assert_eq!(joined, typed);
            for w in mine.windows(2) {
                prop_assert!(w[1].start_ms - w[0].end_ms > GAP);
            }
            for t in &mine {
                let ts: Vec<u64> = t.events.iter().map(|s| evs[*s as usize - 1].server_ts).collect();
                prop_assert!(ts.windows(2).all(|p| p[1] - p[0] <= GAP));
            }
        }
    }

    #[test]
    fn log_lines_round_trip(steps in prop::collection::vec((0u64..5000, any::<bool>(), any::<char>().prop_filter("printable", |c| !c.is_control())), 0..40)) {
        let evs = events(&steps);
        let back = io::parse_log(&io::log_to_bytes(&evs)[..]).unwrap();
        prop_assert_eq!(back.len(), evs.len());
        for (a, b) in back.iter().zip(&evs) {
            prop_assert_eq!((a.seq, a.server_ts, a.sender, a.ch), (b.seq, b.server_ts, b.sender, b.ch));
        }
    }

    #[test]
    fn kld_non_negative_and_zero_on_self(p in prop::collection::vec((0u8..8, 0.01f64..1.0), 1..8), q in prop::collection::vec((0u8..8, 0.01f64..1.0), 1..8)) {
        let (p, q) = (dist(&p), dist(&q));
        prop_assert!(kld(&p, &q, 1e-9).unwrap() >= 0.0);
        prop_assert!(kld(&p, &p, 1e-9).unwrap().abs() < 1e-12);
    }

    #[test]
    fn every_prediction_is_a_distribution(level in 0usize..3, ctx in prop::collection::vec("[a-z]{1,6}|what|sako|inform\\(color\\)", 0..4), c in 0usize..64) {
        let lex = AttributeLexicon::default();
        let model = SimModel::train(corpus(), Level::ALL[level], 3, &lex).unwrap();
        let conds = ConditionVector::all();
        let p = model.predict(&ctx, &conds[c % conds.len()]);
        prop_assert!(!p.distribution.is_empty());
        prop_assert!((p.distribution.sum() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn cost_is_additive(efforts in prop::collection::vec(0usize..4, 0..50)) {
        let all = [TutorEffort::Inform, TutorEffort::Ack, TutorEffort::Correction, TutorEffort::Rejection];
        let price = [5.0, 0.5, 5.0, 0.5];
        let sched = CostSchedule::default();
        let mut ledger = CostLedger::default();
        for &e in &efforts {
            ledger.charge(all[e], &sched);
        }
        let expected: f64 = efforts.iter().map(|&e| price[e]).sum();
        prop_assert_eq!(ledger.total, expected);
    }
}

#[test]
fn corpus_file_round_trip() {
    let c = corpus();
    let back: Corpus = serde_json::from_slice(&io::corpus_to_bytes(c)).unwrap();
    assert_eq!(&back, c);
}
