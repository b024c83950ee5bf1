// Text cleaning, input composition per scenario, and fixed-length encoding.

use sciclass::corpus::Document;
use sciclass::preprocess::{clean_text, compose_input, encode, Scenario, Tokenizer};
use sciclass::tokenizer::WordTokenizer;

pub fn run_example() -> sciclass::Result<()> {
    let doc = Document::new(
        "wos-0001",
        "Graph Neural Networks for Protein-Ligand Binding",
        "We predict binding affinity (pKd) from 3D structures; accuracy improves by 12%.",
    )
    .with_keywords(["GNN", "drug discovery", "affinity"]);

    println!("cleaned title: {:?}", clean_text(&doc.title));
    for scenario in Scenario::ALL {
        println!("{scenario:>22}: {}", compose_input(&doc, scenario)?);
    }

    let text = compose_input(&doc, Scenario::AbstractAndKeywords)?;
    let tokenizer = WordTokenizer::from_texts([text.as_str()], 1);
    let short = encode(&text, &tokenizer, 8)?;
    println!(
        "vocab size {}, fingerprint {}",
        tokenizer.vocab_size(),
        tokenizer.fingerprint()
    );
    println!("max_len 8 -> {:?}", tokenizer.decode(&short.input_ids));
    println!("mask       {:?}", short.attention_mask);

    let long = encode("unseen words only", &tokenizer, 8)?;
    println!("unknown words -> {:?}", tokenizer.decode(long.active_ids()));
    Ok(())
}

#[allow(dead_code)]
fn main() -> sciclass::Result<()> {
    run_example()
}
