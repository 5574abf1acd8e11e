mod common;

use guwen_core::align::{align_pair, segment_target, Lexicon};
use guwen_core::noising::{make_das, make_dmlm, MaskRange, NoiseConfig, Tokenizer, BOS, EOS, MASK, NUM_SPECIALS};
use guwen_core::CorpusRecord;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn masking_restores_and_spares_specials(len in 1usize..30, tlen in 1usize..30, seed in 0u64..1000) {
        let x: Vec<u32> = (0..len as u32).map(|i| NUM_SPECIALS + i % 20).collect();
        let mut y = vec![BOS];
        y.extend((0..tlen as u32).map(|i| NUM_SPECIALS + (i * 7) % 20));
        y.push(EOS);
        let ex = make_dmlm(&x, &y, 30, &NoiseConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(ex.src.restore(), x);
        prop_assert_eq!(ex.tgt.restore(), y.clone());
        prop_assert!(!ex.tgt.positions.contains(&0));
        prop_assert!(!ex.tgt.positions.contains(&(y.len() - 1)));
        prop_assert!(ex.src.positions.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(!ex.src.positions.is_empty() && !ex.tgt.positions.is_empty());
        prop_assert!((0.1..=0.2).contains(&ex.src.ratio));
        prop_assert!((0.2..=0.5).contains(&ex.tgt.ratio));
        for &p in &ex.src.positions {
            prop_assert!(ex.src.tokens[p] == MASK || ex.src.tokens[p] >= NUM_SPECIALS);
        }
    }

    #[test]
    fn substitution_restores_the_source(seed in 0u64..500, p_da in 0.0f64..=1.0) {
        let lex = Lexicon::new(["大王", "于是", "讨伐", "商纣"]).unwrap();
        let (x, y) = ("王乃伐纣", "大王于是讨伐商纣");
        let set = align_pair(x, y, &segment_target(y, &lex)).unwrap();
        let tok = Tokenizer::build(&[CorpusRecord::pair("p", x, y)]).unwrap();
        let cfg = NoiseConfig { p_da, ..NoiseConfig::default() };
        let ex = make_das(x, y, &set, &tok, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(ex.restore_source(), tok.encode(x));
        prop_assert_eq!(ex.noised_src.len(), 4 + ex.substituted.len());
        prop_assert_eq!(ex.tgt, tok.encode_target(y));
    }

    #[test]
    fn tokenizer_roundtrips_known_text(text in "[子曰学而时习之不亦说乎]{0,20}") {
        let tok = Tokenizer::build(&[CorpusRecord::pair("p", "子曰学而时习之", "不亦说乎")]).unwrap();
        prop_assert_eq!(tok.decode(&tok.encode(&text)), text);
        let back = Tokenizer::from_tsv(&tok.to_tsv()).unwrap();
        prop_assert_eq!(back, tok);
    }
}

#[test]
fn fixed_ratio_masks_exact_counts() {
    let cfg = NoiseConfig::default().with_fixed_mask();
    assert_eq!(cfg.enc_mask_range, MaskRange::fixed(0.15));
    let x: Vec<u32> = (5..25).collect();
    let mut y = vec![BOS];
    y.extend(5..25);
    y.push(EOS);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let n = 4000;
    let (mut se, mut sd) = (0usize, 0usize);
    for _ in 0..n {
        let ex = make_dmlm(&x, &y, 30, &cfg, &mut rng).unwrap();
        assert_eq!(ex.src.ratio, 0.15);
        assert_eq!(ex.tgt.ratio, 0.35);
        // 0.15 * 20 = 3 exactly; 0.35 * 20 = 7 up to rounding of the product.
        assert_eq!(ex.src.positions.len(), 3);
        assert!((7..=8).contains(&ex.tgt.positions.len()));
        se += ex.src.positions.len();
        sd += ex.tgt.positions.len();
    }
    assert!((se as f64 / (20 * n) as f64 - 0.15).abs() < 1e-12);
    assert!((sd as f64 / (20 * n) as f64 - 0.35).abs() < 0.01);
}

#[test]
fn toy_corpus_tokenizer_is_stable() {
    let corpus = common::toy_corpus();
    let a = Tokenizer::build(&corpus).unwrap();
    let mut rev = corpus.clone();
    rev.reverse();
    assert_eq!(a, Tokenizer::build(&rev).unwrap());
}
