//! The speaker and listener models on their own, outside any game.
//!
//! First with one known lexicon, then marginalizing over uncertainty about
//! the partner's lexicon, as an adaptive agent does before any evidence.
//!
//! ```bash
//! cargo run --example rsa_reasoning
//! ```

use std::sync::Arc;

use chai::domain::{Context, Lexicon, Taxonomy, Utterance, Vocabulary};
use chai::prior::{enumerate_space, LexiconBelief, PriorSpec, DEFAULT_SPACE_CAP};
use chai::rsa::{literal_listener, marginal_listener, marginal_speaker, pragmatic_speaker, SimParams};

fn main() -> chai::Result<()> {
    let tax = Taxonomy::squares();
    let vocab = Vocabulary::numbered(3);
    let params = SimParams::default();
    let candidates = vocab.candidates(false);
    let name = |r: u8| tax.leaves()[r as usize].name.clone();

    // u1 = "blue", u2 = "light red", u3 = "dark red"
    let meaning = |n: &str| chai::domain::Meaning::Node(tax.find(n).expect("known node"));
    let lex = Lexicon::new(vec![meaning("blue"), meaning("light-red"), meaning("dark-red")]);
    let ctx = Context::new(vec![0, 1, 2])?;

    println!("literal listener hearing u1 in {{light-blue, dark-blue, light-red}}:");
    let l0 = literal_listener(&Utterance::single(0), &lex, &ctx, tax.universe(), params.epsilon, &tax)?;
    for (o, p) in l0.support.iter().zip(&l0.probs) {
        println!("  {:<11} {p:.3}", o.map_or("(null)".to_string(), name));
    }

    println!("speaker describing light-red:");
    let s1 = pragmatic_speaker(2, &lex, &ctx, tax.universe(), &params, &candidates, &tax)?;
    for (u, p) in s1.support.iter().zip(&s1.probs) {
        println!("  {:<3} {p:.3}", vocab.format(u));
    }

    // before any interaction: every partition lexicon, weighted by simplicity;
    // the prior is symmetric in the words, so no word is preferred yet
    let space = Arc::new(enumerate_space(&PriorSpec::TaxonomyPartition, 3, &tax, DEFAULT_SPACE_CAP)?);
    let belief = LexiconBelief::prior(space);
    let s = marginal_speaker(&belief, 2, &ctx, &params, &candidates)?;
    println!("uncertain speaker describing light-red: {:?}", s.probs.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>());
    let l = marginal_listener(&belief, &Utterance::single(0), &ctx, &params, &candidates)?;
    println!("uncertain listener hearing u1: {:?}", l.probs.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>());
    Ok(())
}
