//! Writes a labeled synthetic corpus to stdout.
//!
//! `cargo run -p repotrend-core --example synthetic_corpus > corpus.jsonl`

use repotrend::schema::encode_corpus;
use repotrend::synthetic::{synthetic_records, word_generators, StreamSpec};

fn main() {
    let records = synthetic_records(
        &word_generators(),
        &StreamSpec::default(),
        &["Telegram", "Slack", "Discord", "Twitter", "Facebook"],
    );
    print!("{}", encode_corpus(&records));
}
