mod common;

use common::COSINE_CASES;
use gazette_rag::embedding::{
    cosine_similarity, mock_embed, EmbedError, Embedder, EmbedderConfig, EmbeddingVector,
    MockEmbedder, MOCK_MODEL_ID,
};
use proptest::prelude::*;

// Reference values from an independent XXH64 implementation (seed 0x5EED,
// character trigrams of the NFC text, bucket = hash % dim, L2-normalized).
const GOLDEN: &[(&str, usize, &[f64])] = &[
    ("gazette", 8, &[0.0, 0.0, 0.0, 0.4472135954999579, 0.4472135954999579, 0.4472135954999579, 0.4472135954999579, 0.4472135954999579]),
    ("পুলিশ", 8, &[0.5773502691896258, 0.0, 0.5773502691896258, 0.0, 0.0, 0.5773502691896258, 0.0, 0.0]),
    ("ab", 8, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
    (
        "Tourist Police was formed in 2013.",
        16,
        &[
            0.0, 0.0, 0.3922322702763681, 0.09805806756909202, 0.3922322702763681, 0.19611613513818404,
            0.19611613513818404, 0.0, 0.29417420270727607, 0.4902903378454601, 0.0, 0.09805806756909202,
            0.29417420270727607, 0.29417420270727607, 0.29417420270727607, 0.09805806756909202,
        ],
    ),
    (
        "ট্যুরিস্ট পুলিশ",
        16,
        &[
            0.24253562503633297, 0.24253562503633297, 0.24253562503633297, 0.0, 0.24253562503633297,
            0.24253562503633297, 0.48507125007266594, 0.24253562503633297, 0.0, 0.24253562503633297,
            0.24253562503633297, 0.0, 0.0, 0.48507125007266594, 0.24253562503633297, 0.0,
        ],
    ),
];

fn v(values: &[f64]) -> EmbeddingVector {
    EmbeddingVector::new("m", values.to_vec()).unwrap()
}

#[test]
fn golden_mock_vectors() {
    for &(text, dim, expected) in GOLDEN {
        let got = mock_embed(text, dim).unwrap();
        assert_eq!(got.model_id, MOCK_MODEL_ID);
        assert_eq!(got.values.len(), dim);
        for (i, (g, e)) in got.values.iter().zip(expected).enumerate() {
            assert!((g - e).abs() < 1e-15, "{text:?}[{i}]: {g} vs {e}");
        }
    }
}

#[test]
fn mock_is_nfc_insensitive() {
    // precomposed and decomposed RRA embed identically
    let composed = "\u{09DC}";
    let decomposed = "\u{09A1}\u{09BC}";
    assert_eq!(mock_embed(composed, 32).unwrap(), mock_embed(decomposed, 32).unwrap());
}

#[test]
fn cosine_reference_cases() {
    for &(a, b, expected) in COSINE_CASES {
        let got = cosine_similarity(&v(a), &v(b)).unwrap();
        assert!((got - expected).abs() < 1e-12, "{a:?}·{b:?} = {got}, want {expected}");
    }
}

#[test]
fn cosine_errors() {
    assert_eq!(EmbeddingVector::new("m", vec![0.0, 0.0]), Err(EmbedError::ZeroNorm));
    let zero = EmbeddingVector { model_id: "m".into(), values: vec![0.0, 0.0] };
    assert_eq!(cosine_similarity(&zero, &v(&[1.0, 0.0])), Err(EmbedError::ZeroNorm));
    assert!(matches!(
        cosine_similarity(&v(&[1.0, 0.0]), &v(&[1.0, 0.0, 0.0])),
        Err(EmbedError::DimensionMismatch { .. })
    ));
    let other = EmbeddingVector::new("other", vec![1.0, 0.0]).unwrap();
    assert!(matches!(cosine_similarity(&v(&[1.0, 0.0]), &other), Err(EmbedError::ModelMismatch { .. })));
    assert!(EmbeddingVector::new("m", vec![f64::NAN]).is_err());
}

#[test]
fn embedder_contract() {
    let e = MockEmbedder::new(MOCK_MODEL_ID, 64).unwrap();
    let texts: Vec<String> = ["পুলিশ", "police", "গেজেট ২০১৩"].iter().map(|s| s.to_string()).collect();
    let out = e.embed(&texts).unwrap();
    assert_eq!(out.len(), 3);
    assert!(out.iter().all(|x| x.dim() == 64 && x.model_id == MOCK_MODEL_ID));
    assert_eq!(out[1], e.embed_one("police").unwrap());
    assert!(matches!(
        e.embed(&["ok".to_string(), String::new()]),
        Err(EmbedError::EmptyText { index: 1 })
    ));
    assert!(EmbedderConfig::mock(4).build().is_err());
    assert!(EmbedderConfig::http("", "m", 8).build().is_err());
}

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, dim).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #[test]
    fn scale_invariance((a, b) in (1usize..32).prop_flat_map(|d| (vector(d), vector(d))), c in 1e-3f64..1e3) {
        let (a, b) = (v(&a), v(&b));
        let base = cosine_similarity(&a, &b).unwrap();
        prop_assert!((cosine_similarity(&a.scaled(c), &b).unwrap() - base).abs() < 1e-9);
        prop_assert!((cosine_similarity(&a, &b.scaled(c)).unwrap() - base).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&base));
    }

    #[test]
    fn symmetric((a, b) in (1usize..32).prop_flat_map(|d| (vector(d), vector(d)))) {
        let (a, b) = (v(&a), v(&b));
        prop_assert_eq!(cosine_similarity(&a, &b).unwrap(), cosine_similarity(&b, &a).unwrap());
    }

    #[test]
    fn mock_vectors_are_unit(text in "[a-z\\u{0985}-\\u{09B9} ]{1,40}", dim in 8usize..128) {
        let e = mock_embed(&text, dim).unwrap();
        prop_assert!((e.norm() - 1.0).abs() < 1e-12);
        prop_assert_eq!(e.clone(), mock_embed(&text, dim).unwrap());
    }
}
