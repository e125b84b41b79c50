//! Turning triple files, dump lines and live API responses into graph edges
//! and entity text.

mod clean;
mod dump;
mod live;
mod tsv;

use std::io::BufRead;

use rayon::prelude::*;
use serde::Serialize;

pub use clean::{clean_relations, CleanedRelations};
pub use dump::{parse_dump_line, DumpEntity};
pub use live::{offline, LiveClient, LiveConfig, OFFLINE_ENV, WIKIDATA_API};
pub use tsv::{
    parse_texts_tsv, parse_triples_tsv, read_triples_tsv, write_texts_tsv, write_triples_tsv,
    ParseReport, TripleRecord,
};

use crate::error::IngestError;
use crate::text::EntityText;

/// Counts for a dump read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DumpReport {
    pub lines: u64,
    pub entities: u64,
    pub malformed: u64,
    pub edges: u64,
}

#[derive(Debug, Default)]
pub struct DumpContents {
    pub edges: Vec<TripleRecord>,
    pub texts: Vec<EntityText>,
    pub report: DumpReport,
}

const DUMP_CHUNK: usize = 4096;

/// Reads a whole dump, parsing chunks of lines in parallel on the current
/// rayon pool. Output order follows input order.
pub fn read_dump<R: BufRead>(reader: R, language: &str) -> Result<DumpContents, IngestError> {
    let mut out = DumpContents::default();
    let mut chunk: Vec<(u64, String)> = Vec::with_capacity(DUMP_CHUNK);
    let mut line_no = 0u64;
    let mut lines = reader.lines();
    loop {
        chunk.clear();
        for line in lines.by_ref().take(DUMP_CHUNK) {
            line_no += 1;
            chunk.push((line_no, line?));
        }
        if chunk.is_empty() {
            break;
        }
        out.report.lines += chunk.len() as u64;
        let parsed: Vec<Result<DumpEntity, IngestError>> = chunk
            .par_iter()
            .map(|(n, l)| parse_dump_line(l, language, *n))
            .collect();
        for result in parsed {
            match result {
                Ok(entity) => {
                    if let Some(text) = entity.text {
                        out.report.entities += 1;
                        out.texts.push(text);
                    }
                    out.report.edges += entity.edges.len() as u64;
                    out.edges.extend(entity.edges);
                }
                Err(err) => {
                    log::debug!("skipping dump line: {err}");
                    out.report.malformed += 1;
                }
            }
        }
    }
    Ok(out)
}
