//! Input builders shared by the criterion benchmarks.

use chronus_core::lexicon::Lattice;
use chronus_core::pipeline::Pipeline;
use chronus_core::{demo, synth, ConceptHmm, Superword};

/// Demo requests of increasing length.
pub const SENTENCES: [&str; 3] = [
    "SHOW ME THE FLIGHTS TO BOSTON",
    "WHAT ARE THE CHEAPEST FARES FROM BOSTON TO DALLAS IN THE MORNING ON AMERICAN",
    "I WOULD LIKE TO KNOW THE NUMBER OF FLIGHTS LEAVING FROM WASHINGTON D C AND ARRIVING IN PHILADELPHIA IN THE LATE EVENING PLEASE",
];

pub fn demo_pipeline() -> Pipeline {
    demo::pipeline().expect("bundled data loads")
}

pub fn demo_lattices(p: &Pipeline) -> Vec<Lattice> {
    SENTENCES
        .iter()
        .map(|s| p.artifacts.lexicon.lex_parse(s).expect("bundled sentences lex"))
        .collect()
}

/// The synthetic generating model and `n` word sequences drawn from it.
pub fn synthetic(n: usize) -> (ConceptHmm, Vec<Vec<Superword>>) {
    let model = synth::hmm_model(1993).expect("synthetic model");
    let mut rng = synth::rng(7);
    let sentences = (0..n)
        .map(|_| synth::sample_sentence(&model, &mut rng).expect("sample").words)
        .collect();
    (model, sentences)
}
