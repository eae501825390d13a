use chronus_core::concept::ConceptDictionary;
use chronus_core::corpus::Corpus;
use chronus_core::decoder::{brute_force_decode_lattice, forward_log_marginal, viterbi_decode, viterbi_decode_lattice};
use chronus_core::dialog::{merge_context, DialogState};
use chronus_core::synth;
use chronus_core::template::{Template, TemplateToken};
use chronus_core::{ConceptHmm, SegmentedSentence, Superword, SynonymGroups, Vocabulary};
use proptest::prelude::*;

const WORDS: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

fn dictionary() -> ConceptDictionary {
    ConceptDictionary::flat(&["x", "y", "z"]).unwrap()
}

/// Labeled sentences over `WORDS` and the five concepts of [`dictionary`].
fn corpus() -> impl Strategy<Value = Vec<SegmentedSentence>> {
    let names: Vec<String> = dictionary().concepts().iter().map(|c| c.name.clone()).collect();
    let sentence = prop::collection::vec((0..WORDS.len(), 0..names.len()), 1..8).prop_map(move |pairs| {
        SegmentedSentence::new(
            pairs.iter().map(|&(w, _)| Superword::word(WORDS[w])).collect(),
            pairs.iter().map(|&(_, c)| names[c].clone()).collect(),
        )
        .unwrap()
    });
    prop::collection::vec(sentence, 1..12)
}

fn train(sentences: &[SegmentedSentence], k: f64) -> ConceptHmm {
    let vocab = Vocabulary::new(WORDS).unwrap();
    ConceptHmm::train_mle(sentences, &dictionary(), &vocab, k).unwrap()
}

fn max_row_error(m: &ConceptHmm) -> f64 {
    let n = m.num_concepts();
    let v = m.vocabulary().len();
    let mut worst = ((0..n).map(|c| m.initial_prob(c)).sum::<f64>() - 1.0).abs();
    for c in 0..n {
        let t: f64 = (0..n).map(|to| m.transition_prob(c, to)).sum::<f64>() + m.final_prob(c);
        worst = worst.max((t - 1.0).abs());
        for prev in std::iter::once(None).chain((0..v).map(Some)) {
            let s: f64 = (0..v).map(|w| m.bigram_prob(c, prev, w)).sum();
            worst = worst.max((s - 1.0).abs());
        }
    }
    worst
}

/// Every labeling of `words`, scored independently of the decoder.
fn all_labelings(m: &ConceptHmm, words: &[Superword]) -> Vec<f64> {
    let n = m.num_concepts();
    let d = m.dictionary();
    let mut out = Vec::new();
    let total = n.pow(words.len() as u32);
    for mut code in 0..total {
        let labels: Vec<String> = (0..words.len())
            .map(|_| {
                let c = code % n;
                code /= n;
                d.name(c).to_string()
            })
            .collect();
        let s = SegmentedSentence::new(words.to_vec(), labels).unwrap();
        out.push(m.sequence_log_prob(&s).unwrap());
    }
    out
}

fn template(pairs: &[(&str, &str)]) -> Template {
    Template {
        tokens: pairs.iter().map(|(k, v)| TemplateToken::new(*k, *v)).collect(),
        unmatched: 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trained_rows_sum_to_one(sentences in corpus(), k in 0.0001f64..1.0) {
        prop_assert!(max_row_error(&train(&sentences, k)) <= 1e-9);
    }

    #[test]
    fn synonym_smoothing_is_normalized_and_idempotent(
        sentences in corpus(),
        concept in 0usize..5,
        group in prop::sample::subsequence(WORDS.to_vec(), 2..=4),
    ) {
        let m = train(&sentences, 0.01);
        let name = dictionary().name(concept).to_string();
        let groups = SynonymGroups::parse(&format!("{name}\t{}", group.join("\t"))).unwrap();
        let once = m.apply_synonym_smoothing(&groups).unwrap();
        let twice = once.apply_synonym_smoothing(&groups).unwrap();
        prop_assert!(max_row_error(&once) <= 1e-9);
        prop_assert!(once.tables_identical(&twice));
    }

    #[test]
    fn model_text_round_trips(sentences in corpus(), k in 0.0001f64..1.0) {
        let m = train(&sentences, k);
        let back = ConceptHmm::from_text(&m.to_text()).unwrap();
        prop_assert!(m.tables_identical(&back));
        prop_assert_eq!(back.to_text(), m.to_text());
    }

    #[test]
    fn corpus_text_round_trips(sentences in corpus()) {
        let entries = sentences
            .iter()
            .enumerate()
            .map(|(i, s)| chronus_core::corpus::CorpusEntry {
                id: format!("s{i}"),
                text: s.words.iter().map(|w| w.id.clone()).collect::<Vec<_>>().join(" "),
                gold: Some(s.words.iter().map(|w| w.id.clone()).zip(s.labels.iter().cloned()).collect()),
                ..Default::default()
            })
            .collect();
        let c = Corpus { entries };
        prop_assert_eq!(Corpus::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn viterbi_matches_exhaustive_search(seed in any::<u64>()) {
        let (m, lattice) = synth::random_instance(&mut synth::rng(seed), 5, 8, 6).unwrap();
        let fast = viterbi_decode_lattice(&m, &lattice).unwrap();
        let slow = brute_force_decode_lattice(&m, &lattice).unwrap();
        prop_assert_eq!(&fast.segmentation, &slow.segmentation);
        prop_assert_eq!(&fast.arcs, &slow.arcs);
        prop_assert!(fast.log_prob == slow.log_prob || (fast.log_prob - slow.log_prob).abs() <= 1e-9);
    }

    #[test]
    fn forward_sums_every_labeling(seed in any::<u64>(), len in 1usize..5) {
        let mut rng = synth::rng(seed);
        let (m, _) = synth::random_instance(&mut rng, 5, 8, 1).unwrap();
        let words: Vec<Superword> = (0..len)
            .map(|i| Superword::word(m.vocabulary().word((seed as usize >> (3 * i)) % m.vocabulary().len())))
            .collect();
        let scores = all_labelings(&m, &words);
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let forward = forward_log_marginal(&m, &words).unwrap();
        let viterbi = viterbi_decode(&m, &words).unwrap().log_prob;
        if best == f64::NEG_INFINITY {
            prop_assert_eq!(forward, f64::NEG_INFINITY);
        } else {
            let sum: f64 = scores.iter().map(|s| (s - best).exp()).sum::<f64>().ln() + best;
            prop_assert!((forward - sum).abs() <= 1e-9, "{} vs {}", forward, sum);
            prop_assert!(forward >= viterbi - 1e-12);
            prop_assert!((viterbi - best).abs() <= 1e-9);
        }
    }

    #[test]
    fn merging_into_empty_context_keeps_the_template(
        values in prop::collection::vec(prop::sample::select(vec!["BBOS", "DDFW", "AA", "morning"]), 1..4),
    ) {
        let dict = chronus_core::demo::artifacts().unwrap().dictionary;
        let keys = ["origin", "destin", "airline", "depart-time"];
        let pairs: Vec<(&str, &str)> = keys.iter().zip(&values).map(|(k, v)| (*k, *v)).collect();
        let t = template(&pairs);
        let (state, merged) = merge_context(&DialogState::new(), &t, &dict);
        prop_assert_eq!(&merged.tokens, &t.tokens);
        // The same template again changes nothing.
        let (_, again) = merge_context(&state, &t, &dict);
        prop_assert_eq!(again.tokens, merged.tokens);
    }

    #[test]
    fn changed_endpoint_leaves_only_the_new_tokens(
        old_time in prop::sample::select(vec!["morning", "evening"]),
        old_airline in prop::sample::select(vec!["AA", "DL"]),
    ) {
        let dict = chronus_core::demo::artifacts().unwrap().dictionary;
        let first = template(&[("origin", "BBOS"), ("airline", old_airline), ("depart-time", old_time)]);
        let (state, _) = merge_context(&DialogState::new(), &first, &dict);
        let (_, merged) = merge_context(&state, &template(&[("origin", "DDFW")]), &dict);
        prop_assert_eq!(merged.tokens, template(&[("origin", "DDFW")]).tokens);
    }
}
