use pipeforge::features::{extract, EmbeddingTable, FeatureConfig, FeatureError, FeatureVariant};
use pipeforge::{QaTask, Question};
use proptest::prelude::*;

#[test]
fn embedding_files_with_and_without_header() {
    let bare = EmbeddingTable::from_reader("Paris 1 2\nriver 3 4\n".as_bytes()).unwrap();
    assert_eq!(bare.dimension(), 2);
    assert_eq!(bare.get("paris"), Some(&[1.0, 2.0][..]));
    let headed = EmbeddingTable::from_reader("2 3\na 1 2 3\nb 4 5 6\n".as_bytes()).unwrap();
    assert_eq!((headed.len(), headed.dimension()), (2, 3));
}

#[test]
fn malformed_embedding_files_are_rejected() {
    assert!(matches!(
        EmbeddingTable::from_reader("a 1 2\nb 1\n".as_bytes()),
        Err(FeatureError::DimensionMismatch { line: 2, expected: 2, found: 1 })
    ));
    assert!(matches!(
        EmbeddingTable::from_reader("a 1 x\n".as_bytes()),
        Err(FeatureError::EmbeddingFormat { line: 1, .. })
    ));
    assert!(EmbeddingTable::from_reader("".as_bytes()).is_err());
    assert!(EmbeddingTable::from_reader("a 1 NaN\n".as_bytes()).is_err());
}

#[test]
fn embeddings_drive_the_mean_vector() {
    let table = EmbeddingTable::from_reader("founder 1 0\ngoogle 0 1\n".as_bytes()).unwrap();
    let q = Question::new("q", "Who is the founder of Google?");
    let cf3 = extract(&q, &FeatureConfig::new(FeatureVariant::CF3, QaTask::Rl), Some(&table)).unwrap();
    // content words: who, is, the, founder, of, google; two of six are known
    assert!((cf3.values[0] - 1.0 / 6.0).abs() < 1e-12, "{:?}", cf3.values);
    assert!((cf3.values[1] - 1.0 / 6.0).abs() < 1e-12);
    let cf5 = extract(&q, &FeatureConfig::new(FeatureVariant::CF5, QaTask::Rl), Some(&table)).unwrap();
    // without stop words: who, founder, google
    assert!((cf5.values[0] - 1.0 / 3.0).abs() < 1e-12, "{:?}", cf5.values);
    let cf6 = extract(&q, &FeatureConfig::new(FeatureVariant::CF6, QaTask::Rl), Some(&table)).unwrap();
    assert_eq!(cf6.len(), 28 + 2);
    assert_eq!(&cf6.values[28..], &cf3.values[..]);
}

fn table_strategy() -> impl Strategy<Value = (usize, Vec<(String, Vec<f64>)>)> {
    (1usize..5).prop_flat_map(|d| {
        let rows = prop::collection::vec(("[a-z]{1,8}", prop::collection::vec(-10.0f64..10.0, d)), 1..20);
        (Just(d), rows)
    })
}

proptest! {
    #[test]
    fn tables_round_trip_through_text((d, rows) in table_strategy()) {
        let mut t = EmbeddingTable::new(d).unwrap();
        for (w, v) in &rows {
            t.insert(w, v.clone()).unwrap();
        }
        let mut buf = Vec::new();
        t.write_text(&mut buf).unwrap();
        let back = EmbeddingTable::from_reader(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), t.len());
        for (w, _) in &rows {
            let (a, b) = (t.get(w).unwrap(), back.get(w).unwrap());
            prop_assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-6));
        }
    }

    #[test]
    fn every_variant_matches_its_declared_shape(
        words in prop::collection::vec("[A-Za-z]{1,9}", 1..40),
        task in prop::sample::select(vec![QaTask::Ned, QaTask::Rl, QaTask::Cl, QaTask::Qb]),
    ) {
        let table = EmbeddingTable::from_reader("the 0.5 0.5 0.5\ncity 1 2 3\n".as_bytes()).unwrap();
        let q = Question::new("q", words.join(" ") + "?");
        for v in FeatureVariant::ALL {
            let cfg = FeatureConfig::new(v, task);
            let fv = extract(&q, &cfg, Some(&table)).unwrap();
            prop_assert_eq!(fv.len(), cfg.dimension(3));
            prop_assert_eq!(&fv.names, &cfg.feature_names(3));
            prop_assert!(fv.values.iter().all(|x| x.is_finite()));
        }
    }
}
