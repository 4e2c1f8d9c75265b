//! Inputs for the criterion benches.

use negare_core::{Corpus, Record};

/// The bundled corpus repeated `copies` times, with record ids made unique.
pub fn scaled_corpus(copies: usize) -> Corpus {
    let base = Corpus::bundled();
    let records: Vec<Record> = (0..copies)
        .flat_map(|c| {
            base.records.iter().map(move |r| Record {
                id: format!("{}#{c}", r.id),
                ..r.clone()
            })
        })
        .collect();
    Corpus::from_records(records)
}
