mod common;

use std::fs;
use std::path::Path;

use btfsm_core::dsl::{parse, serialize, DslError};
use btfsm_core::harness::{build, fixture_text, Repr, FIXTURE_NAMES};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kind(e: &DslError) -> &'static str {
    match e {
        DslError::Parse(_) => "Parse",
        DslError::Resolution { .. } => "Resolution",
        DslError::DuplicateName { .. } => "DuplicateName",
        DslError::InvalidPolicy { .. } => "InvalidPolicy",
        DslError::Io { .. } => "Io",
    }
}

/// Each file in `fixtures/invalid` starts with `# error: <Kind> <line>:<col>`.
#[test]
fn invalid_fixtures_fail_where_their_header_says() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/invalid");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let header = text.lines().next().unwrap().strip_prefix("# error: ").expect("error header");
        let (want_kind, pos) = header.split_once(' ').unwrap();
        let (line, col) = pos.split_once(':').unwrap();
        let want = (line.parse::<usize>().unwrap(), col.parse::<usize>().unwrap());
        let err = parse(&text).expect_err(&path.display().to_string());
        assert_eq!(kind(&err), want_kind, "{}: {err}", path.display());
        assert_eq!(err.position(), Some(want), "{}: {err}", path.display());
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn shipped_corpus_round_trips() {
    for name in FIXTURE_NAMES {
        let doc = parse(&fixture_text(name).unwrap()).unwrap();
        let text = serialize(&doc);
        assert_eq!(parse(&text).unwrap(), doc, "{name}");
        for repr in [Repr::Bt, Repr::Fsm, Repr::FsmSeq] {
            let with_policy = build(&doc, repr).unwrap().into_document(&doc);
            let text = serialize(&with_policy);
            let back = parse(&text).unwrap();
            assert_eq!(back, with_policy, "{name} {repr}");
            assert_eq!(serialize(&back), text);
        }
    }
}

const ALPHABET: &[u8] = b"abc_()[]{}:;,.=!?-> \n#0123456789\"";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn generated_documents_round_trip(seed in any::<u64>()) {
        let doc = common::random_document(&mut ChaCha8Rng::seed_from_u64(seed));
        let text = serialize(&doc);
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(serialize(&back), text);
    }

    #[test]
    fn mutated_documents_never_panic(
        which in 0..FIXTURE_NAMES.len(),
        edits in proptest::collection::vec((any::<prop::sample::Index>(), 0..3u8, any::<prop::sample::Index>()), 1..6),
    ) {
        let mut bytes = fixture_text(FIXTURE_NAMES[which]).unwrap().into_bytes();
        for (at, op, ch) in edits {
            let i = at.index(bytes.len() + 1);
            match op {
                0 if i < bytes.len() => {
                    bytes.remove(i);
                }
                1 => bytes.insert(i, ALPHABET[ch.index(ALPHABET.len())]),
                _ => bytes.truncate(i),
            }
        }
        let text = String::from_utf8_lossy(&bytes).into_owned();
        if let Err(e) = parse(&text) {
            let (line, col) = e.position().expect("parse errors carry positions");
            prop_assert!(line >= 1 && col >= 1);
            prop_assert!(line <= text.lines().count() + 1, "line {} past the end", line);
        }
    }

    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        let _ = parse(&text);
    }
}
