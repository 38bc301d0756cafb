use detcor::corpus::{
    read_labels_jsonl, read_parallel_tsv, read_sentences, write_labels_jsonl, write_parallel_tsv,
    write_sentences,
};
use detcor::corrector::{CharLM, ConfusionSet};
use detcor::{derive_labels, Error, Sentence, SentencePair};
use proptest::prelude::*;

fn any_text(max: usize) -> impl Strategy<Value = Sentence> {
    // printable characters only: tabs and newlines are rejected by Sentence
    proptest::collection::vec(
        prop_oneof![
            prop::char::range('a', 'z'),
            prop::char::range('\u{4e00}', '\u{9fa5}'),
            Just(' '),
            Just('，'),
            Just('"'),
            Just('\\'),
        ],
        0..=max,
    )
    .prop_map(|v| Sentence::from_chars(v).unwrap())
}

fn labeled(a: Sentence, b: Sentence) -> SentencePair {
    let p = SentencePair::new(a, b);
    let l = derive_labels(&p).labels;
    p.with_labels(l).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn corpora_round_trip(items in proptest::collection::vec((any_text(30), any_text(30)), 1000)) {
        let dir = tempfile::tempdir().unwrap();
        let pairs: Vec<SentencePair> = items.into_iter().map(|(a, b)| labeled(a, b)).collect();

        let jsonl = dir.path().join("labels.jsonl");
        write_labels_jsonl(&pairs, &jsonl).unwrap();
        prop_assert_eq!(&read_labels_jsonl(&jsonl).unwrap(), &pairs);

        let tsv = dir.path().join("pairs.tsv");
        write_parallel_tsv(&pairs, &tsv).unwrap();
        let back = read_parallel_tsv(&tsv).unwrap();
        let expect: Vec<(Sentence, Sentence)> = pairs
            .iter()
            .map(|p| (p.source.clone(), p.target.clone()))
            .collect();
        let got: Vec<(Sentence, Sentence)> = back.into_iter().map(|p| (p.source, p.target)).collect();
        prop_assert_eq!(got, expect);

        let plain = dir.path().join("plain.txt");
        let sources: Vec<Sentence> = pairs.iter().map(|p| p.source.clone()).collect();
        write_sentences(&sources, &plain).unwrap();
        prop_assert_eq!(read_sentences(&plain).unwrap(), sources);
    }
}

#[test]
fn malformed_lines_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("bad.tsv");
    std::fs::write(&tsv, "ab\tac\nno tab here\n").unwrap();
    match read_parallel_tsv(&tsv) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected parse error, got {other:?}"),
    }
    std::fs::write(&tsv, b"ab\tac\n\xff\xfe\tx\n").unwrap();
    assert!(matches!(read_parallel_tsv(&tsv), Err(Error::Decode { line: 2 })));

    let jsonl = dir.path().join("bad.jsonl");
    std::fs::write(&jsonl, "{\"source\":\"ab\",\"target\":\"ab\",\"labels\":[],\"end_ins\":0}\n").unwrap();
    assert!(read_labels_jsonl(&jsonl).is_err());
}

#[test]
fn model_files_reject_wrong_kind() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lm.json");
    let lm = CharLM::train(&[Sentence::new("abc").unwrap()], 0.01, 10).unwrap();
    lm.save(&path).unwrap();
    assert_eq!(CharLM::load(&path).unwrap(), lm);
    let text = std::fs::read_to_string(&path).unwrap().replace("charlm.v1", "charlm.v0");
    std::fs::write(&path, text).unwrap();
    assert!(matches!(CharLM::load(&path), Err(Error::SchemaVersion { .. })));
}

#[test]
fn confusion_sets_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("conf.txt");
    let mut conf = ConfusionSet::new();
    conf.insert('在', ['再', '载']);
    conf.insert('的', ['地', '得']);
    conf.save(&path).unwrap();
    assert_eq!(ConfusionSet::load(&path).unwrap(), conf);
}
