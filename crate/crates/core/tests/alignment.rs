mod support;

use detcor::{
    align, apply_edits, derive_labels, edit_distance, extract_edits, oracle_fill, rewrite, Action,
    AlignOp, Sentence, SentencePair,
};
use proptest::prelude::*;

fn short_text(max: usize) -> impl Strategy<Value = Sentence> {
    proptest::collection::vec(prop_oneof![Just('a'), Just('b'), Just('c'), Just('d')], 0..=max)
        .prop_map(|v| Sentence::from_chars(v).unwrap())
}

fn cjk_text(max: usize) -> impl Strategy<Value = Sentence> {
    proptest::collection::vec(prop::char::range('\u{4e00}', '\u{4e0f}'), 0..=max)
        .prop_map(|v| Sentence::from_chars(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn distance_matches_reference(a in short_text(8), b in short_text(8)) {
        prop_assert_eq!(edit_distance(a.chars(), b.chars()), support::distance(a.chars(), b.chars()));
        let ops = align(&a, &b);
        let cost: usize = ops.iter().map(AlignOp::cost).sum();
        prop_assert_eq!(cost, support::distance(a.chars(), b.chars()));
    }

    #[test]
    fn alignment_covers_both_sides_in_order(a in short_text(10), b in short_text(10)) {
        let ops = align(&a, &b);
        let (mut i, mut j) = (0, 0);
        for op in ops {
            match op {
                AlignOp::Match { src, tgt } => {
                    prop_assert_eq!((src, tgt), (i, j));
                    prop_assert_eq!(a.chars()[src], b.chars()[tgt]);
                    i += 1;
                    j += 1;
                }
                AlignOp::Substitute { src, tgt } => {
                    prop_assert_eq!((src, tgt), (i, j));
                    prop_assert_ne!(a.chars()[src], b.chars()[tgt]);
                    i += 1;
                    j += 1;
                }
                AlignOp::Delete { src } => {
                    prop_assert_eq!(src, i);
                    i += 1;
                }
                AlignOp::Insert { before, tgt } => {
                    prop_assert_eq!((before, tgt), (i, j));
                    j += 1;
                }
            }
        }
        prop_assert_eq!((i, j), (a.len(), b.len()));
    }

    #[test]
    fn labels_round_trip_through_rewrite(a in short_text(12), b in short_text(12)) {
        let pair = SentencePair::new(a.clone(), b.clone());
        let derived = derive_labels(&pair);
        prop_assert_eq!(derived.conflicts, 0);
        prop_assert_eq!(derived.labels.slots(), a.len() + 1);
        let masked = rewrite(&a, &derived.labels).unwrap();
        prop_assert_eq!(oracle_fill(&masked, &pair).unwrap(), b);
    }

    #[test]
    fn labels_round_trip_cjk(a in cjk_text(20), b in cjk_text(20)) {
        let pair = SentencePair::new(a, b.clone());
        let derived = derive_labels(&pair);
        prop_assert_eq!(derived.conflicts, 0);
        let masked = rewrite(&pair.source, &derived.labels).unwrap();
        prop_assert_eq!(oracle_fill(&masked, &pair).unwrap(), b);
    }

    #[test]
    fn rewrite_length_law(a in short_text(12), b in short_text(12)) {
        let labels = derive_labels(&SentencePair::new(a.clone(), b)).labels;
        let masked = rewrite(&a, &labels).unwrap();
        let inserts: usize = labels.tokens.iter().map(|t| t.insert_before).sum::<usize>() + labels.end_insert;
        let redundant = labels.tokens.iter().filter(|t| t.action == Action::Redundant).count();
        prop_assert_eq!(masked.len(), a.len() - redundant + inserts);
        let mistaken = labels.tokens.iter().filter(|t| t.action == Action::Mistaken).count();
        prop_assert_eq!(masked.mask_count(), mistaken + inserts);
    }

    #[test]
    fn edits_reconstruct_target(a in short_text(10), b in short_text(10)) {
        for merge in [false, true] {
            let edits = extract_edits(&a, &b, merge);
            prop_assert_eq!(&apply_edits(&a, &edits).unwrap(), &b);
            for e in &edits {
                prop_assert!(e.validate(a.len()).is_ok());
            }
        }
        let split = extract_edits(&a, &b, false);
        prop_assert_eq!(split.len(), support::distance(a.chars(), b.chars()));
        prop_assert!(extract_edits(&a, &b, true).len() <= split.len());
    }
}

#[test]
fn identical_sentences_align_to_matches_only() {
    let s = Sentence::new("今天天气很好").unwrap();
    assert!(align(&s, &s).iter().all(AlignOp::is_match));
    assert!(derive_labels(&SentencePair::new(s.clone(), s)).labels.is_all_keep());
}
