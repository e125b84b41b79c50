use std::io::{self, BufRead, Write};

use serde::Serialize;

use crate::error::IngestError;
use crate::graph::{Edge, TaxonomyGraph};
use crate::id::{EdgeKind, EntityId};
use crate::text::EntityText;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TripleRecord {
    pub child: EntityId,
    pub kind: EdgeKind,
    pub parent: EntityId,
    /// 1-based line number in the source.
    pub source_line: u64,
}

impl TripleRecord {
    pub fn edge(&self) -> Edge {
        Edge::new(self.child, self.kind, self.parent)
    }
}

/// Line accounting for a parse. `valid + comments + malformed == total`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub total: u64,
    pub valid: u64,
    /// `#` comments and blank lines.
    pub comments: u64,
    pub malformed: u64,
}

impl ParseReport {
    pub fn merge(&mut self, other: &ParseReport) {
        self.total += other.total;
        self.valid += other.valid;
        self.comments += other.comments;
        self.malformed += other.malformed;
    }
}

enum Line<T> {
    Record(T),
    Comment,
    Malformed,
}

/// Reads `reader` line by line, classifying each line with `classify`.
fn scan_lines<R, T>(
    mut reader: R,
    mut classify: impl FnMut(&str, u64) -> Line<T>,
    mut sink: impl FnMut(T),
) -> Result<ParseReport, IngestError>
where
    R: BufRead,
{
    let mut report = ParseReport::default();
    let mut buf = Vec::with_capacity(256);
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        report.total += 1;
        let line = match std::str::from_utf8(&buf) {
            Ok(s) => s.trim_end_matches(['\n', '\r']),
            Err(_) => {
                report.malformed += 1;
                continue;
            }
        };
        match classify(line, report.total) {
            Line::Record(r) => {
                report.valid += 1;
                sink(r);
            }
            Line::Comment => report.comments += 1,
            Line::Malformed => report.malformed += 1,
        }
    }
    Ok(report)
}

fn classify_triple(line: &str, line_no: u64) -> Line<TripleRecord> {
    if line.trim().is_empty() || line.starts_with('#') {
        return Line::Comment;
    }
    let mut fields = line.split('\t');
    let (Some(c), Some(k), Some(p), None) = (fields.next(), fields.next(), fields.next(), fields.next())
    else {
        return Line::Malformed;
    };
    match (c.parse(), EdgeKind::from_property(k), p.parse()) {
        (Ok(child), Some(kind), Ok(parent)) => Line::Record(TripleRecord {
            child,
            kind,
            parent,
            source_line: line_no,
        }),
        _ => Line::Malformed,
    }
}

/// Streams `child\tP31|P279\tparent` records into `sink`. Malformed lines are
/// counted and skipped.
pub fn read_triples_tsv<R: BufRead>(
    reader: R,
    sink: impl FnMut(TripleRecord),
) -> Result<ParseReport, IngestError> {
    scan_lines(reader, classify_triple, sink)
}

pub fn parse_triples_tsv<R: BufRead>(reader: R) -> Result<(Vec<TripleRecord>, ParseReport), IngestError> {
    let mut out = Vec::new();
    let report = read_triples_tsv(reader, |r| out.push(r))?;
    Ok((out, report))
}

fn classify_text(line: &str, _line_no: u64) -> Line<EntityText> {
    if line.trim().is_empty() || line.starts_with('#') {
        return Line::Comment;
    }
    let mut fields = line.split('\t');
    let (Some(q), Some(lang), Some(label), Some(desc), None) = (
        fields.next(),
        fields.next(),
        fields.next(),
        fields.next(),
        fields.next(),
    ) else {
        return Line::Malformed;
    };
    match q.parse() {
        Ok(id) if !lang.is_empty() => Line::Record(EntityText::new(id, lang, label, desc)),
        _ => Line::Malformed,
    }
}

/// Parses `qid\tlang\tlabel\tdescription` lines.
pub fn parse_texts_tsv<R: BufRead>(reader: R) -> Result<(Vec<EntityText>, ParseReport), IngestError> {
    let mut out = Vec::new();
    let report = scan_lines(reader, classify_text, |t| out.push(t))?;
    Ok((out, report))
}

/// Writes the graph's edges in canonical order.
pub fn write_triples_tsv<W: Write>(graph: &TaxonomyGraph, mut out: W) -> io::Result<()> {
    for e in graph.edges() {
        writeln!(out, "{}\t{}\t{}", e.child, e.kind, e.parent)?;
    }
    out.flush()
}

pub fn write_texts_tsv<'a, W: Write>(
    texts: impl IntoIterator<Item = &'a EntityText>,
    mut out: W,
) -> io::Result<()> {
    for t in texts {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            t.entity, t.language, t.label, t.description
        )?;
    }
    out.flush()
}
