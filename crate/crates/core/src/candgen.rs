//! Candidate generation by modified edge scanning.
//!
//! Pairs already served by existing stations are removed first. Every edge is
//! then scanned for the stretches from which a station covers each remaining
//! pair, either passing through the edge (Type 1) or detouring into it and
//! back (Type 2). The boundaries of those stretches form a finite set of
//! candidate points that dominates every other location on the network.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::netcore::{
    covers, point_vertex_distance, DistanceTable, Edge, EdgeId, Network, NetworkPoint, OdPair, VertexId, ZoneId,
};
use crate::TAU;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CandgenError {
    #[error("pair ({0}, {1}) is in the existing-station domain but not among the O-D pairs")]
    UnknownDomainPair(u32, u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExistingStation {
    pub id: String,
    pub location: NetworkPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TripType {
    /// The trip runs through the edge end to end.
    Type1,
    /// The trip detours into the edge from one end and turns back.
    Type2,
}

/// The edge end through which the vehicle enters the edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entry {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefuelingSegment {
    pub edge: EdgeId,
    /// Offsets from the edge's `a` end; `start <= end`.
    pub start: f64,
    pub end: f64,
    pub pair: (VertexId, VertexId),
    pub trip_type: TripType,
    pub entry: Entry,
}

impl RefuelingSegment {
    pub fn contains(&self, offset: f64) -> bool {
        offset >= self.start - TAU && offset <= self.end + TAU
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Provenance {
    pub pair: (VertexId, VertexId),
    pub trip_type: TripType,
    pub entry: Entry,
}

/// A segment boundary as found by [`scan_edge`], before deduplication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawEndpoint {
    pub edge: EdgeId,
    pub offset: f64,
    pub source: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub id: usize,
    pub location: NetworkPoint,
    pub sources: Vec<Provenance>,
}

impl Endpoint {
    /// `w1`, `w2`, ...
    pub fn label(&self) -> String {
        alloc::format!("w{}", self.id + 1)
    }
}

/// Candidate endpoints with their coverage of the uncovered pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointCatalog {
    /// Column order of the coverage matrix.
    pub pairs: Vec<OdPair>,
    pub endpoints: Vec<Endpoint>,
    /// `S(w)` as sorted indices into `pairs`.
    pub covered_pairs: Vec<Vec<usize>>,
    /// `F(w)`.
    pub covered_flow: Vec<f64>,
}

impl EndpointCatalog {
    pub fn len(&self) -> usize {
        self.endpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.endpoints.is_empty()
    }

    /// Matrix entry `a_{wq}`.
    pub fn covers(&self, w: usize, q: usize) -> bool {
        self.covered_pairs[w].binary_search(&q).is_ok()
    }

    /// Endpoints covering pair `q`.
    pub fn column(&self, q: usize) -> Vec<usize> {
        (0..self.len()).filter(|&w| self.covers(w, q)).collect()
    }

    /// Nonzero `(w, q)` entries in row-major order.
    pub fn matrix_entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.covered_pairs.iter().enumerate().flat_map(|(w, qs)| qs.iter().map(move |&q| (w, q)))
    }

    pub fn zone(&self, network: &Network, w: usize) -> ZoneId {
        network.point_zone(&self.endpoints[w].location)
    }
}

/// Pairs covered by at least one existing station, in `pairs` order.
pub fn existing_domain(
    network: &Network,
    table: &DistanceTable,
    stations: &[ExistingStation],
    pairs: &[OdPair],
    alpha_r: f64,
) -> Vec<OdPair> {
    pairs.iter().filter(|q| stations.iter().any(|s| covers(network, table, &s.location, q, alpha_r))).copied().collect()
}

/// `all_pairs` minus `domain`.
pub fn uncovered_pairs(all_pairs: &[OdPair], domain: &[OdPair]) -> Result<Vec<OdPair>, CandgenError> {
    let all: BTreeSet<_> = all_pairs.iter().map(|q| q.key()).collect();
    let mut dom = BTreeSet::new();
    for q in domain {
        if !all.contains(&q.key()) {
            return Err(CandgenError::UnknownDomainPair(q.origin.0, q.destination.0));
        }
        dom.insert(q.key());
    }
    Ok(all_pairs.iter().filter(|q| !dom.contains(&q.key())).copied().collect())
}

/// Distance a vehicle from `k` can still drive along `edge` after reaching its
/// end `r`, capped at the edge length. Negative when `r` is out of reach.
pub fn gamma(table: &DistanceTable, k: VertexId, r: VertexId, edge: &Edge, alpha_r: f64) -> f64 {
    debug_assert!(edge.has(r));
    (alpha_r - table.get(k, r)).min(edge.length)
}

/// Type-2 reach into `edge` from its end `r` for both ends of `pair`.
pub fn delta(table: &DistanceTable, pair: &OdPair, edge: &Edge, r: VertexId, alpha_r: f64) -> f64 {
    debug_assert!(edge.has(r));
    let far = table.get(pair.origin, r).max(table.get(pair.destination, r));
    (alpha_r - far).min(edge.length)
}

fn segment(
    edge: EdgeId,
    lo: f64,
    hi: f64,
    pair: &OdPair,
    trip_type: TripType,
    entry: Entry,
    length: f64,
) -> Option<RefuelingSegment> {
    if lo > hi + TAU {
        return None;
    }
    let start = lo.clamp(0.0, length);
    let end = hi.clamp(start, length);
    Some(RefuelingSegment { edge, start, end, pair: pair.key(), trip_type, entry })
}

/// Type-1 segments on `edge` for `pair`, one per entry end at most.
pub fn type1_segments(
    network: &Network,
    table: &DistanceTable,
    pair: &OdPair,
    edge: EdgeId,
    alpha_r: f64,
) -> Vec<RefuelingSegment> {
    let e = network.edge(edge);
    let (i, j, a, b, l) = (pair.origin, pair.destination, e.a, e.b, e.length);
    let mut out = Vec::new();
    // entering at a: i reaches a, j is reached from b
    let (ga, gb) = (gamma(table, i, a, e, alpha_r), gamma(table, j, b, e, alpha_r));
    if ga >= -TAU && gb >= -TAU {
        out.extend(segment(edge, l - gb, ga, pair, TripType::Type1, Entry::A, l));
    }
    let (gb, ga) = (gamma(table, i, b, e, alpha_r), gamma(table, j, a, e, alpha_r));
    if gb >= -TAU && ga >= -TAU {
        out.extend(segment(edge, l - gb, ga, pair, TripType::Type1, Entry::B, l));
    }
    out
}

/// Type-2 segments on `edge` for `pair`: `[0, δ_a]` and `[l − δ_b, l]`.
pub fn type2_segments(
    network: &Network,
    table: &DistanceTable,
    pair: &OdPair,
    edge: EdgeId,
    alpha_r: f64,
) -> Vec<RefuelingSegment> {
    let e = network.edge(edge);
    let mut out = Vec::new();
    let da = delta(table, pair, e, e.a, alpha_r);
    if da >= -TAU {
        out.extend(segment(edge, 0.0, da.max(0.0), pair, TripType::Type2, Entry::A, e.length));
    }
    let db = delta(table, pair, e, e.b, alpha_r);
    if db >= -TAU {
        out.extend(segment(edge, e.length - db.max(0.0), e.length, pair, TripType::Type2, Entry::B, e.length));
    }
    out
}

/// All segment boundaries on `edge` for every pair, in pair order.
pub fn scan_edge(
    network: &Network,
    table: &DistanceTable,
    edge: EdgeId,
    pairs: &[OdPair],
    alpha_r: f64,
) -> Vec<RawEndpoint> {
    let mut out = Vec::new();
    for q in pairs {
        let segs = type1_segments(network, table, q, edge, alpha_r)
            .into_iter()
            .chain(type2_segments(network, table, q, edge, alpha_r));
        for s in segs {
            let source = Provenance { pair: s.pair, trip_type: s.trip_type, entry: s.entry };
            out.push(RawEndpoint { edge, offset: s.start, source });
            if s.end - s.start > TAU {
                out.push(RawEndpoint { edge, offset: s.end, source });
            }
        }
    }
    out
}

/// Scans every edge and deduplicates the boundaries into the candidate set.
///
/// Edges are visited in `(a, b)` order and endpoints numbered by first
/// appearance, so a vertex endpoint takes the position of the first edge that
/// produced it.
pub fn build_catalog(network: &Network, table: &DistanceTable, pairs: &[OdPair], alpha_r: f64) -> EndpointCatalog {
    let mut edges: Vec<EdgeId> = (0..network.edges().len() as u32).map(EdgeId).collect();
    edges.sort_by_key(|&e| {
        let x = network.edge(e);
        (x.a, x.b)
    });

    let mut endpoints: Vec<Endpoint> = Vec::new();
    let mut vertex_slot: Vec<Option<usize>> = alloc::vec![None; network.vertex_count()];
    for edge in edges {
        let mut raw = scan_edge(network, table, edge, pairs, alpha_r);
        raw.sort_by(|x, y| x.offset.total_cmp(&y.offset).then(x.source.cmp(&y.source)));
        let mut last_interior: Option<(usize, f64)> = None;
        for r in raw {
            let location = network.point_on_edge(edge, r.offset).expect("segment offsets lie on their edge");
            let slot = match location {
                NetworkPoint::Vertex(v) => match vertex_slot[v.index()] {
                    Some(w) => w,
                    None => {
                        endpoints.push(Endpoint { id: endpoints.len(), location, sources: Vec::new() });
                        vertex_slot[v.index()] = Some(endpoints.len() - 1);
                        endpoints.len() - 1
                    }
                },
                NetworkPoint::OnEdge { offset, .. } => match last_interior {
                    Some((w, o)) if offset - o <= TAU => w,
                    _ => {
                        endpoints.push(Endpoint { id: endpoints.len(), location, sources: Vec::new() });
                        last_interior = Some((endpoints.len() - 1, offset));
                        endpoints.len() - 1
                    }
                },
            };
            if let NetworkPoint::OnEdge { offset, .. } = location {
                last_interior = Some((slot, offset));
            }
            let sources = &mut endpoints[slot].sources;
            if !sources.contains(&r.source) {
                sources.push(r.source);
            }
        }
    }

    let mut covered_pairs = Vec::with_capacity(endpoints.len());
    let mut covered_flow = Vec::with_capacity(endpoints.len());
    for ep in &endpoints {
        let s: Vec<usize> = pairs
            .iter()
            .enumerate()
            .filter(|(_, q)| covers(network, table, &ep.location, q, alpha_r))
            .map(|(k, _)| k)
            .collect();
        covered_flow.push(s.iter().map(|&k| pairs[k].flow).sum());
        covered_pairs.push(s);
    }
    EndpointCatalog { pairs: pairs.to_vec(), endpoints, covered_pairs, covered_flow }
}

/// Distance from a point to the farther end of a pair; a station covers the
/// pair exactly when this is at most `αR`.
pub fn pair_reach(network: &Network, table: &DistanceTable, x: &NetworkPoint, pair: &OdPair) -> f64 {
    point_vertex_distance(network, table, x, pair.origin).max(point_vertex_distance(
        network,
        table,
        x,
        pair.destination,
    ))
}
