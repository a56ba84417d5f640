mod common;

#[test]
fn six_point_example() {
    common::harness::six_point_example().unwrap();
}

#[test]
fn fold_sizes_within_one_per_class() {
    common::harness::fold_size_bounds().unwrap();
}

#[test]
fn fold_vocabularies_come_from_training_documents_only() {
    common::harness::no_fold_leakage().unwrap();
}

#[test]
fn feature_oracles() {
    common::features::tfidf_two_documents().unwrap();
    common::features::readability_cases().unwrap();
    common::features::sentiment_cases().unwrap();
}
