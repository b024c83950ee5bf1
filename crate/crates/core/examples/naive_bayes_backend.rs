// The lightweight multinomial backend: fit, predict, one fine-tune step,
// and a save/load round trip through an adapter descriptor.

use sciclass::backend::{encode_documents, AdapterDescriptor, ClassifierBackend, LightweightBackend};
use sciclass::corpus::{Document, LabelSpace};
use sciclass::preprocess::{encode, Scenario};
use sciclass::tokenizer::WordTokenizer;

pub fn run_example() -> sciclass::Result<()> {
    let labels = LabelSpace::from_names(&["Biochemistry", "Psychology"])?;
    let docs = vec![
        Document::new("b1", "Enzyme kinetics", "enzyme substrate binding").with_label("Biochemistry"),
        Document::new("b2", "Protein folding", "protein enzyme structure").with_label("Biochemistry"),
        Document::new("p1", "Child anxiety", "anxiety behaviour survey").with_label("Psychology"),
        Document::new("p2", "Memory recall", "memory behaviour experiment").with_label("Psychology"),
    ];
    let tokenizer = WordTokenizer::from_texts(
        docs.iter()
            .map(|d| format!("{} {}", d.title, d.abstract_text).to_lowercase()),
        1,
    );
    let (train, _) = encode_documents(&docs, Scenario::Abstract, &tokenizer, &labels, 32, true)?;

    let mut model = LightweightBackend::untrained("nb-demo", tokenizer, labels.clone(), 1.0)?;
    model.fit(&train, 1.0)?;

    let query = encode("enzyme behaviour enzyme", model.tokenizer(), 32)?;
    let p = model.predict_proba(std::slice::from_ref(&query))?;
    for (label, prob) in labels.labels().iter().zip(&p[0]) {
        println!("P({label} | query) = {prob:.4}");
    }

    let loss = model.fine_tune_step(&train, 1e-6)?;
    println!("loss before one more step at lr 1e-6: {loss:.4}");

    let dir = tempfile::tempdir().map_err(|e| sciclass::Error::io(std::env::temp_dir(), e))?;
    let descriptor = model.save(dir.path())?;
    let reloaded = AdapterDescriptor::load(&dir.path().join(sciclass::backend::DESCRIPTOR_FILE))?;
    assert_eq!(
        reloaded.predict_proba(std::slice::from_ref(&query))?,
        model.predict_proba(&[query])?
    );
    println!(
        "saved and reloaded `{}` ({} labels)",
        descriptor.model_id,
        descriptor.label_order.len()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> sciclass::Result<()> {
    run_example()
}
