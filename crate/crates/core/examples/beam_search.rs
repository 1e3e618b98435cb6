//! Beam search against a hand-written next-token table, where greedy
//! decoding commits to a poor first word.

use sentcap::decoding::{beam, greedy, ScoredStep, SearchSpace, StepScorer};

/// Rows: previous token (0 is the start symbol). Columns: next token,
/// 1 is the end symbol.
const TABLE: [[f64; 4]; 4] = [
    [0.0, 0.05, 0.5, 0.45],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.3, 0.35, 0.35],
    [0.0, 0.9, 0.05, 0.05],
];

struct Bigram;

impl StepScorer for Bigram {
    type State = ();

    fn initial_state(&mut self) -> sentcap::Result<()> {
        Ok(())
    }

    fn step(&mut self, _: &(), prev: usize) -> sentcap::Result<ScoredStep<()>> {
        Ok(ScoredStep {
            state: (),
            log_probs: TABLE[prev].iter().map(|p| p.ln()).collect(),
            attention: None,
        })
    }
}

fn main() -> sentcap::Result<()> {
    let space = SearchSpace {
        start: 0,
        end: 1,
        banned: vec![0],
    };
    let g = greedy(&mut Bigram, &space, 3)?;
    println!("greedy   {:?} p = {:.4}", g.tokens, g.log_prob.exp());
    for width in [1, 2, 4] {
        let hyps = beam(&mut Bigram, &space, 3, width, 0.0)?;
        let listed: Vec<String> = hyps
            .iter()
            .map(|h| format!("{:?} p = {:.4}", h.tokens, h.log_prob.exp()))
            .collect();
        println!("beam {width}   {}", listed.join(", "));
    }
    Ok(())
}
