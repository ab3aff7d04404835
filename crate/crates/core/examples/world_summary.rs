//! Prints one line per shipped world: answer, grading, budget and tree size.

use std::collections::BTreeSet;

use ragsearch::eval::grade;
use ragsearch::world::{fixtures_dir, load_worlds};
use ragsearch::{ActionKind, NormalizedMatch, RunConfig};

fn main() {
    let ablate = std::env::args().any(|a| a == "--ablate");
    let rollouts: usize = std::env::args().find_map(|a| a.strip_prefix("--rollouts=").map(|v| v.parse().unwrap())).unwrap_or(4);
    let mut base = RunConfig { rollouts, ..RunConfig::default() };
    if ablate {
        base.disabled_actions = BTreeSet::from([ActionKind::RetrievalReasoning, ActionKind::RetrievalDecompose]);
    }
    for world in load_worlds(fixtures_dir()).expect("worlds load") {
        match world.run(&base) {
            Ok(r) => println!(
                "{:<45} {:<22} correct={:<5} tokens={:<6} lm={:<4} ret={:<3} nodes={}",
                world.name,
                r.answer,
                grade(&r.answer, &world.example, &NormalizedMatch),
                r.budget.tokens_generated,
                r.budget.lm_calls,
                r.budget.retriever_calls,
                r.tree.len()
            ),
            Err(e) => println!("{:<45} error: {e}", world.name),
        }
    }
}
