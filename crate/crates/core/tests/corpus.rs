mod common;

use std::collections::HashSet;

use guwen_core::corpus::{exact_jaccard, ALLOWED_PUNCTUATION};
use guwen_core::{deduplicate, estimate_similarity, minhash_signature, Cleaner, CorpusRecord, DedupConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cjk_text(rng: &mut ChaCha8Rng, len: usize, alphabet: u32) -> String {
    (0..len).map(|_| char::from_u32(0x4E00 + rng.gen_range(0..alphabet)).unwrap()).collect()
}

/// Independent shingle-set Jaccard.
fn jaccard_oracle(a: &str, b: &str, k: usize) -> f64 {
    let sets = |t: &str| -> HashSet<Vec<char>> {
        let c: Vec<char> = t.chars().collect();
        c.windows(k).map(|w| w.to_vec()).collect()
    };
    let (x, y) = (sets(a), sets(b));
    x.intersection(&y).count() as f64 / x.union(&y).count() as f64
}

#[test]
fn half_shared_texts_estimate_close_to_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..20 {
        let common = cjk_text(&mut rng, 25, 5000);
        let a = format!("{common}{}", cjk_text(&mut rng, 25, 5000));
        let b = format!("{common}{}", cjk_text(&mut rng, 25, 5000));
        let exact = jaccard_oracle(&a, &b, 4);
        assert!((exact - exact_jaccard(&a, &b, 4)).abs() < 1e-15);
        let sa = minhash_signature(&a, 128, 4, seed).unwrap();
        let sb = minhash_signature(&b, 128, 4, seed).unwrap();
        let est = estimate_similarity(&sa, &sb).unwrap();
        assert!((est - exact).abs() <= 0.12, "seed {seed}: {est} vs {exact}");
    }
}

#[test]
fn estimates_within_three_over_root_num_perm() {
    for num_perm in [64, 128, 256] {
        let mut rng = ChaCha8Rng::seed_from_u64(num_perm as u64);
        let bound = 3.0 / (num_perm as f64).sqrt();
        let trials = 200;
        let mut ok = 0;
        for t in 0..trials {
            // Small alphabets give a spread of overlaps.
            let alphabet = rng.gen_range(4..40);
            let (la, lb) = (rng.gen_range(10..60), rng.gen_range(10..60));
            let a = cjk_text(&mut rng, la, alphabet);
            let b = cjk_text(&mut rng, lb, alphabet);
            let exact = jaccard_oracle(&a, &b, 2);
            let sa = minhash_signature(&a, num_perm, 2, t).unwrap();
            let sb = minhash_signature(&b, num_perm, 2, t).unwrap();
            if (estimate_similarity(&sa, &sb).unwrap() - exact).abs() <= bound {
                ok += 1;
            }
        }
        assert!(ok as f64 >= 0.95 * trials as f64, "num_perm {num_perm}: {ok}/{trials}");
    }
}

#[test]
fn disjoint_texts_estimate_near_zero() {
    let a = minhash_signature("甲乙丙丁戊", 256, 2, 0).unwrap();
    let b = minhash_signature("子丑寅卯辰", 256, 2, 0).unwrap();
    assert!(estimate_similarity(&a, &b).unwrap() <= 0.05);
}

#[test]
fn mismatched_signatures_are_rejected() {
    let a = minhash_signature("甲乙丙丁戊", 64, 2, 0).unwrap();
    let b = minhash_signature("甲乙丙丁戊", 128, 2, 0).unwrap();
    assert!(estimate_similarity(&a, &b).is_err());
}

fn records(texts: &[&str]) -> Vec<CorpusRecord> {
    texts.iter().enumerate().map(|(i, t)| CorpusRecord::pair(format!("r{i}"), *t, "译")).collect()
}

#[test]
fn three_record_cluster_keeps_one() {
    let rs = records(&[
        "子曰学而时习之不亦说乎有朋自远方来",
        "子曰学而时习之不亦说乎有朋自远方至",
        "子曰学而时习之不亦乐乎有朋自远方来",
        "天下大势分久必合合久必分周末七国",
    ]);
    let out = deduplicate(&rs, &DedupConfig::default()).unwrap();
    let kept: Vec<&str> = out.kept.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(kept, ["r0", "r3"]);
    assert_eq!(out.dropped.len(), 2);
    assert!(out.dropped.iter().all(|d| d.kept == "r0"));
}

#[test]
fn lsh_banding_agrees_on_clear_duplicates() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut texts = Vec::new();
    for _ in 0..30 {
        let base = cjk_text(&mut rng, 40, 3000);
        let mut v: Vec<char> = base.chars().collect();
        v[10] = '一';
        texts.push(base);
        texts.push(v.into_iter().collect());
    }
    let rs: Vec<CorpusRecord> =
        texts.iter().enumerate().map(|(i, t)| CorpusRecord::pair(format!("x{i:02}"), t.clone(), "译")).collect();
    let all = deduplicate(&rs, &DedupConfig::default()).unwrap();
    let banded = deduplicate(&rs, &DedupConfig { lsh_bands: Some(32), ..DedupConfig::default() }).unwrap();
    assert_eq!(all.kept.len(), 30);
    assert_eq!(all.kept, banded.kept);
}

#[test]
fn toy_raw_cleans_to_the_clean_fixture() {
    let cleaner = Cleaner::bundled();
    let raw = common::toy_raw();
    let clean = common::toy_corpus();
    assert_eq!(raw.len(), clean.len());
    for (r, c) in raw.iter().zip(&clean) {
        assert_eq!(cleaner.clean(&r.source), c.source);
        assert_eq!(cleaner.clean(r.target.as_deref().unwrap()), c.target.clone().unwrap());
        assert!(cleaner.is_clean(&c.source));
    }
}

fn audit(text: &str) -> bool {
    text.chars().all(|c| {
        let u = c as u32;
        (0x4E00..=0x9FFF).contains(&u) || (0x3400..=0x4DBF).contains(&u) || ALLOWED_PUNCTUATION.contains(&c)
    })
}

proptest! {
    #[test]
    fn cleaning_output_passes_the_audit(raw in "[a-zA-Z0-9 ,.!?「」學習國東馬子曰之乎者也]{0,40}") {
        let cleaner = Cleaner::bundled();
        let out = cleaner.clean(&raw);
        prop_assert!(audit(&out), "{out:?}");
        prop_assert_eq!(cleaner.clean(&out), out);
    }

    #[test]
    fn similarity_is_symmetric_and_reflexive(a in "[甲乙丙丁戊己庚辛]{4,30}", b in "[甲乙丙丁戊己庚辛]{4,30}", seed in 0u64..50) {
        let sa = minhash_signature(&a, 64, 3, seed).unwrap();
        let sb = minhash_signature(&b, 64, 3, seed).unwrap();
        prop_assert_eq!(estimate_similarity(&sa, &sb).unwrap(), estimate_similarity(&sb, &sa).unwrap());
        prop_assert_eq!(estimate_similarity(&sa, &sa).unwrap(), 1.0);
    }

    #[test]
    fn kept_records_are_pairwise_below_threshold(texts in prop::collection::vec("[甲乙丙丁戊己]{3,12}", 1..25)) {
        let rs: Vec<CorpusRecord> = texts.iter().enumerate()
            .map(|(i, t)| CorpusRecord::pair(format!("p{i:02}"), t.clone(), "译")).collect();
        let cfg = DedupConfig::default();
        let out = deduplicate(&rs, &cfg).unwrap();
        prop_assert_eq!(out.kept.len() + out.dropped.len(), rs.len());
        for (i, a) in out.kept.iter().enumerate() {
            for b in &out.kept[i + 1..] {
                let (la, lb) = (a.source.chars().count(), b.source.chars().count());
                if la >= 4 && lb >= 4 {
                    let sa = minhash_signature(&a.source, cfg.num_perm, 4, cfg.seed).unwrap();
                    let sb = minhash_signature(&b.source, cfg.num_perm, 4, cfg.seed).unwrap();
                    prop_assert!(estimate_similarity(&sa, &sb).unwrap() < cfg.threshold);
                } else {
                    prop_assert_ne!(&a.source, &b.source);
                }
            }
        }
    }

    #[test]
    fn permuting_input_keeps_the_cluster_count(seed in 0u64..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rs = Vec::new();
        for c in 0..8 {
            let base = cjk_text(&mut rng, 30, 3000);
            for k in 0..rng.gen_range(1..4) {
                let mut v: Vec<char> = base.chars().collect();
                v[k * 7] = '一';
                rs.push(CorpusRecord::pair(format!("c{c}k{k}"), v.into_iter().collect::<String>(), "译"));
            }
        }
        let forward = deduplicate(&rs, &DedupConfig::default()).unwrap();
        rs.reverse();
        let backward = deduplicate(&rs, &DedupConfig::default()).unwrap();
        prop_assert_eq!(forward.kept.len(), backward.kept.len());
        let ids = |o: &guwen_core::corpus::DedupOutcome| {
            let mut v: Vec<String> = o.kept.iter().map(|r| r.id.clone()).collect();
            v.sort();
            v
        };
        prop_assert_eq!(ids(&forward), ids(&backward));
    }
}
