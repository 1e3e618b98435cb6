//! Scores a generated caption file against references and prints the
//! metric table, as `sentcap evaluate` does.
//!
//! `cargo run --example evaluate -- generated.tsv references.tsv lexicon.tsv`
//! Without arguments the test fixtures are used.

use std::path::PathBuf;

use sentcap::cli::{evaluate_generated, read_generated};
use sentcap::corpus::{load_lexicon, read_captions};
use sentcap::metrics::format_table;

fn main() -> sentcap::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut args = std::env::args().skip(1).map(PathBuf::from);
    let generated = args.next().unwrap_or_else(|| fixtures.join("candidates.tsv"));
    let references = args.next().unwrap_or_else(|| fixtures.join("references.tsv"));
    let lexicon = args.next().unwrap_or_else(|| fixtures.join("lexicon.tsv"));

    let rows = evaluate_generated(
        &read_generated(&generated)?,
        &read_captions(&references)?,
        &load_lexicon(&lexicon)?,
        None,
    )?;
    print!("{}", format_table(&rows, false));
    for row in &rows {
        println!("{}: {}", row.label, serde_json::to_string(row).expect("row serializes"));
    }
    Ok(())
}
