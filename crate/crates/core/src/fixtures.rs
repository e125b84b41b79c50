//! Fixture G1: a nine-node graph that trips every detector once.
//!
//! P279: Q2→Q1, Q3→Q1, Q4→Q2, Q4→Q3, Q6→Q4, Q9→Q2, Q9→Q1, Q7→Q8, Q8→Q7.
//! P31:  Q5→Q4, Q6→Q2.
//!
//! Q6 is dual-role, Q7↔Q8 is a cycle, Q9→Q1 is redundant and Q4 sits on a
//! diamond.

use crate::graph::TaxonomyGraph;
use crate::id::EntityId;
use crate::ingest::parse_triples_tsv;

pub const G1_TRIPLES: &str = "\
# fixture G1
Q2\tP279\tQ1
Q3\tP279\tQ1
Q4\tP279\tQ2
Q4\tP279\tQ3
Q6\tP279\tQ4
Q9\tP279\tQ2
Q9\tP279\tQ1
Q7\tP279\tQ8
Q8\tP279\tQ7
Q5\tP31\tQ4
Q6\tP31\tQ2
";

pub const G1_TEXTS: &str = "\
Q1\ten\tentity\tanything that can be considered, discussed, or observed
Q2\ten\tstation\tplace where vehicles stop to load or unload passengers
Q3\ten\tbuilding\tstructure with a roof and walls
Q4\ten\trailway station\tfacility where trains stop to load or unload passengers
Q5\ten\tNishi-Wakamatsu Station\trailway station in Aizuwakamatsu, Fukushima, Japan
Q6\ten\tover-track railway station\trailway station built above the tracks
Q7\ten\tmining\textraction of valuable minerals from the earth
Q8\ten\textractive industry\tindustry that extracts raw materials from the earth
Q9\ten\tbus station\tstation where buses stop to load or unload passengers
";

pub const fn q(n: u64) -> EntityId {
    EntityId::from_raw(n)
}

pub fn g1() -> TaxonomyGraph {
    let (records, _) = parse_triples_tsv(G1_TRIPLES.as_bytes()).expect("in-memory read");
    TaxonomyGraph::from_edges(records.into_iter().map(|r| r.edge()))
}
