//! Road network, continuous points, shortest paths and O-D coverage.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::TAU;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZoneId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ZoneId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("network has no vertices")]
    Empty,
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("self-loop on vertex `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(String, String),
    #[error("edge ({a}, {b}) has invalid length {length}")]
    InvalidLength { a: String, b: String, length: f64 },
    #[error("edge ({a}, {b}) of length {length} exceeds the round-trip limit 2αR = {limit}")]
    EdgeTooLong { a: String, b: String, length: f64, limit: f64 },
    #[error("flow ({0}, {0}) needs two distinct vertices")]
    SelfFlow(String),
    #[error("duplicate flow for pair ({0}, {1})")]
    DuplicateFlow(String, String),
    #[error("flow ({i}, {j}) = {flow} is negative or not finite")]
    InvalidFlow { i: String, j: String, flow: f64 },
    #[error("vertices `{0}` and `{1}` are not connected")]
    Disconnected(String, String),
    #[error("invalid range config: R = {range}, alpha = {alpha}")]
    InvalidRange { range: f64, alpha: f64 },
    #[error("unknown edge index {0}")]
    UnknownEdge(u32),
    #[error("no edge between `{0}` and `{1}`")]
    NoSuchEdge(String, String),
    #[error("offset {offset} lies outside edge ({a}, {b}) of length {length}")]
    OffsetOutOfRange { a: String, b: String, offset: f64, length: f64 },
}

/// Full driving range `R` and guaranteed initial charge fraction `alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeConfig {
    range: f64,
    alpha: f64,
}

impl RangeConfig {
    pub fn new(range: f64, alpha: f64) -> Result<Self, NetworkError> {
        if !(range.is_finite() && range > 0.0 && (0.0..=1.0).contains(&alpha)) {
            return Err(NetworkError::InvalidRange { range, alpha });
        }
        Ok(Self { range, alpha })
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Usable radius `αR`.
    pub fn alpha_r(&self) -> f64 {
        self.alpha * self.range
    }

    /// `2αR`, the longest O-D distance a single station can serve.
    pub fn round_trip_limit(&self) -> f64 {
        2.0 * self.alpha_r()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub name: String,
    pub zone: ZoneId,
    pub coords: Option<(f64, f64)>,
}

/// Undirected edge with `a < b` by vertex index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: VertexId,
    pub b: VertexId,
    pub length: f64,
}

impl Edge {
    /// The endpoint of this edge that is not `r`.
    pub fn other(&self, r: VertexId) -> VertexId {
        if r == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn has(&self, v: VertexId) -> bool {
        v == self.a || v == self.b
    }
}

/// Incremental constructor for [`Network`]; vertices are referenced by name.
#[derive(Default, Debug)]
pub struct NetworkBuilder {
    vertices: Vec<Vertex>,
    zones: Vec<String>,
    by_name: BTreeMap<String, VertexId>,
    edges: Vec<(String, String, f64)>,
    flows: Vec<(String, String, f64)>,
    error: Option<NetworkError>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self, name: &str, zone: &str, coords: Option<(f64, f64)>) -> &mut Self {
        if self.by_name.contains_key(name) {
            self.error.get_or_insert(NetworkError::DuplicateVertex(name.into()));
            return self;
        }
        let zone = match self.zones.iter().position(|z| z == zone) {
            Some(i) => ZoneId(i as u32),
            None => {
                self.zones.push(zone.into());
                ZoneId(self.zones.len() as u32 - 1)
            }
        };
        let id = VertexId(self.vertices.len() as u32);
        self.by_name.insert(name.into(), id);
        self.vertices.push(Vertex { name: name.into(), zone, coords });
        self
    }

    pub fn edge(&mut self, a: &str, b: &str, length: f64) -> &mut Self {
        self.edges.push((a.into(), b.into(), length));
        self
    }

    pub fn flow(&mut self, i: &str, j: &str, flow: f64) -> &mut Self {
        self.flows.push((i.into(), j.into(), flow));
        self
    }

    pub fn build(self) -> Result<Network, NetworkError> {
        if let Some(err) = self.error {
            return Err(err);
        }
        if self.vertices.is_empty() {
            return Err(NetworkError::Empty);
        }
        let lookup =
            |name: &str| self.by_name.get(name).copied().ok_or_else(|| NetworkError::UnknownVertex(name.into()));

        let mut edge_map: BTreeMap<(VertexId, VertexId), f64> = BTreeMap::new();
        for (a, b, length) in &self.edges {
            let (va, vb) = (lookup(a)?, lookup(b)?);
            if va == vb {
                return Err(NetworkError::SelfLoop(a.clone()));
            }
            if !(length.is_finite() && *length > 0.0) {
                return Err(NetworkError::InvalidLength { a: a.clone(), b: b.clone(), length: *length });
            }
            let key = if va < vb { (va, vb) } else { (vb, va) };
            if edge_map.insert(key, *length).is_some() {
                return Err(NetworkError::DuplicateEdge(a.clone(), b.clone()));
            }
        }

        let mut flows = BTreeMap::new();
        for (i, j, flow) in &self.flows {
            let (vi, vj) = (lookup(i)?, lookup(j)?);
            if vi == vj {
                return Err(NetworkError::SelfFlow(i.clone()));
            }
            if !(flow.is_finite() && *flow >= 0.0) {
                return Err(NetworkError::InvalidFlow { i: i.clone(), j: j.clone(), flow: *flow });
            }
            let key = if vi < vj { (vi, vj) } else { (vj, vi) };
            if flows.insert(key, *flow).is_some() {
                return Err(NetworkError::DuplicateFlow(i.clone(), j.clone()));
            }
        }

        let edges: Vec<Edge> = edge_map.into_iter().map(|((a, b), length)| Edge { a, b, length }).collect();
        let mut adjacency = vec![Vec::new(); self.vertices.len()];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.a.index()].push((e.b, EdgeId(k as u32)));
            adjacency[e.b.index()].push((e.a, EdgeId(k as u32)));
        }
        Ok(Network { vertices: self.vertices, zones: self.zones, by_name: self.by_name, edges, flows, adjacency })
    }
}

/// Connected undirected road network with zone-tagged vertices and O-D
/// round-trip flows. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    vertices: Vec<Vertex>,
    zones: Vec<String>,
    by_name: BTreeMap<String, VertexId>,
    edges: Vec<Edge>,
    flows: BTreeMap<(VertexId, VertexId), f64>,
    adjacency: Vec<Vec<(VertexId, EdgeId)>>,
}

impl Network {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = (VertexId, &Vertex)> {
        self.vertices.iter().enumerate().map(|(i, v)| (VertexId(i as u32), v))
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v.index()]
    }

    pub fn vertex_id(&self, name: &str) -> Option<VertexId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.vertices[v.index()].name
    }

    pub fn zone_of(&self, v: VertexId) -> ZoneId {
        self.vertices[v.index()].zone
    }

    pub fn zone_names(&self) -> &[String] {
        &self.zones
    }

    pub fn zone_name(&self, z: ZoneId) -> &str {
        &self.zones[z.index()]
    }

    pub fn zone_id(&self, name: &str) -> Option<ZoneId> {
        self.zones.iter().position(|z| z == name).map(|i| ZoneId(i as u32))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.index()]
    }

    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edges.binary_search_by(|e| (e.a, e.b).cmp(&key)).ok().map(|k| EdgeId(k as u32))
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adjacency[v.index()]
    }

    /// Flow map keyed by `(i, j)` with `i < j`, in lexicographic order.
    pub fn flows(&self) -> &BTreeMap<(VertexId, VertexId), f64> {
        &self.flows
    }

    pub fn flow(&self, i: VertexId, j: VertexId) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.flows.get(&key).copied().unwrap_or(0.0)
    }

    /// Rejects edges longer than `2αR`; a vehicle could not traverse them.
    pub fn check_range(&self, range: &RangeConfig) -> Result<(), NetworkError> {
        let limit = range.round_trip_limit();
        for e in &self.edges {
            if e.length > limit + TAU {
                return Err(NetworkError::EdgeTooLong {
                    a: self.name(e.a).into(),
                    b: self.name(e.b).into(),
                    length: e.length,
                    limit,
                });
            }
        }
        Ok(())
    }

    /// Builds a point on `edge` at `offset` miles from its lower-index vertex,
    /// canonicalising the two ends to vertex points.
    pub fn point_on_edge(&self, edge: EdgeId, offset: f64) -> Result<NetworkPoint, NetworkError> {
        let e = self.edges.get(edge.index()).ok_or(NetworkError::UnknownEdge(edge.0))?;
        if !offset.is_finite() || offset < -TAU || offset > e.length + TAU {
            return Err(NetworkError::OffsetOutOfRange {
                a: self.name(e.a).into(),
                b: self.name(e.b).into(),
                offset,
                length: e.length,
            });
        }
        Ok(if offset <= TAU {
            NetworkPoint::Vertex(e.a)
        } else if offset >= e.length - TAU {
            NetworkPoint::Vertex(e.b)
        } else {
            NetworkPoint::OnEdge { edge, offset }
        })
    }

    /// Like [`Network::point_on_edge`], with the edge named by its vertices in
    /// either order. The offset is measured from `from`.
    pub fn point_between(&self, from: &str, to: &str, offset: f64) -> Result<NetworkPoint, NetworkError> {
        let u = self.vertex_id(from).ok_or_else(|| NetworkError::UnknownVertex(from.into()))?;
        let v = self.vertex_id(to).ok_or_else(|| NetworkError::UnknownVertex(to.into()))?;
        let edge = self.edge_between(u, v).ok_or_else(|| NetworkError::NoSuchEdge(from.into(), to.into()))?;
        let e = self.edge(edge);
        let from_a = if u == e.a { offset } else { e.length - offset };
        self.point_on_edge(edge, from_a)
    }

    pub fn validate_point(&self, x: &NetworkPoint) -> Result<(), NetworkError> {
        match *x {
            NetworkPoint::Vertex(v) if v.index() < self.vertices.len() => Ok(()),
            NetworkPoint::Vertex(v) => Err(NetworkError::UnknownVertex(alloc::format!("#{}", v.0))),
            NetworkPoint::OnEdge { edge, offset } => self.point_on_edge(edge, offset).map(|_| ()),
        }
    }

    /// Zone of a point: its own vertex, or the nearer edge end (ties go to `a`).
    pub fn point_zone(&self, x: &NetworkPoint) -> ZoneId {
        match *x {
            NetworkPoint::Vertex(v) => self.zone_of(v),
            NetworkPoint::OnEdge { edge, offset } => {
                let e = self.edge(edge);
                if offset <= e.length / 2.0 {
                    self.zone_of(e.a)
                } else {
                    self.zone_of(e.b)
                }
            }
        }
    }

    /// Planar coordinates of a point, interpolated along its edge.
    pub fn point_coords(&self, x: &NetworkPoint) -> Option<(f64, f64)> {
        match *x {
            NetworkPoint::Vertex(v) => self.vertex(v).coords,
            NetworkPoint::OnEdge { edge, offset } => {
                let e = self.edge(edge);
                let (ax, ay) = self.vertex(e.a).coords?;
                let (bx, by) = self.vertex(e.b).coords?;
                let s = offset / e.length;
                Some((ax + s * (bx - ax), ay + s * (by - ay)))
            }
        }
    }

    pub fn describe_point(&self, x: &NetworkPoint) -> String {
        match *x {
            NetworkPoint::Vertex(v) => self.name(v).into(),
            NetworkPoint::OnEdge { edge, offset } => {
                let e = self.edge(edge);
                alloc::format!("({}, {})@{:.6}", self.name(e.a), self.name(e.b), offset)
            }
        }
    }
}

/// A location on the network: a vertex, or an interior point of an edge at
/// `offset` miles from the edge's `a` end.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NetworkPoint {
    Vertex(VertexId),
    OnEdge { edge: EdgeId, offset: f64 },
}

/// All-pairs vertex shortest-path distances.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceTable {
    n: usize,
    dist: Vec<f64>,
}

impl DistanceTable {
    pub fn get(&self, u: VertexId, v: VertexId) -> f64 {
        self.dist[u.index() * self.n + v.index()]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry(f64, VertexId);

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // reversed for a min-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Dijkstra from every vertex.
pub fn build_distance_table(network: &Network) -> Result<DistanceTable, NetworkError> {
    let n = network.vertex_count();
    let mut dist = vec![f64::INFINITY; n * n];
    let mut heap = BinaryHeap::new();
    for s in 0..n {
        let row = &mut dist[s * n..(s + 1) * n];
        row[s] = 0.0;
        heap.push(HeapEntry(0.0, VertexId(s as u32)));
        while let Some(HeapEntry(d, u)) = heap.pop() {
            if d > row[u.index()] {
                continue;
            }
            for &(v, e) in network.neighbors(u) {
                let nd = d + network.edge(e).length;
                if nd < row[v.index()] {
                    row[v.index()] = nd;
                    heap.push(HeapEntry(nd, v));
                }
            }
        }
        if let Some(t) = row.iter().position(|d| !d.is_finite()) {
            return Err(NetworkError::Disconnected(
                network.name(VertexId(s as u32)).into(),
                network.name(VertexId(t as u32)).into(),
            ));
        }
    }
    Ok(DistanceTable { n, dist })
}

/// Shortest distance from a network point to a vertex, leaving an edge
/// interior through whichever end is shorter.
pub fn point_vertex_distance(network: &Network, table: &DistanceTable, x: &NetworkPoint, v: VertexId) -> f64 {
    match *x {
        NetworkPoint::Vertex(u) => table.get(u, v),
        NetworkPoint::OnEdge { edge, offset } => {
            let e = network.edge(edge);
            (table.get(e.a, v) + offset).min(table.get(e.b, v) + (e.length - offset))
        }
    }
}

/// Shortest distance between two arbitrary network points: the four-way
/// minimum over the edge ends, plus the direct stretch when both points lie
/// on the same edge.
pub fn point_distance(network: &Network, table: &DistanceTable, x: &NetworkPoint, y: &NetworkPoint) -> f64 {
    match (*x, *y) {
        (NetworkPoint::Vertex(u), _) => point_vertex_distance(network, table, y, u),
        (_, NetworkPoint::Vertex(v)) => point_vertex_distance(network, table, x, v),
        (NetworkPoint::OnEdge { edge: ex, offset: ox }, NetworkPoint::OnEdge { edge: ey, offset: oy }) => {
            let e = network.edge(ex);
            let via_a = ox + point_vertex_distance(network, table, y, e.a);
            let via_b = (e.length - ox) + point_vertex_distance(network, table, y, e.b);
            let mut best = via_a.min(via_b);
            if ex == ey {
                best = best.min((ox - oy).abs());
            }
            best
        }
    }
}

/// Origin-destination pair with its round-trip flow; `origin < destination`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdPair {
    pub origin: VertexId,
    pub destination: VertexId,
    pub flow: f64,
}

impl OdPair {
    pub fn key(&self) -> (VertexId, VertexId) {
        (self.origin, self.destination)
    }
}

/// Pairs with positive flow whose endpoints are at most `2αR` apart, in
/// lexicographic `(i, j)` order.
pub fn build_od_pairs(network: &Network, table: &DistanceTable, range: &RangeConfig) -> Vec<OdPair> {
    let limit = range.round_trip_limit();
    network
        .flows()
        .iter()
        .filter(|(&(i, j), &f)| f > 0.0 && table.get(i, j) <= limit + TAU)
        .map(|(&(origin, destination), &flow)| OdPair { origin, destination, flow })
        .collect()
}

/// Whether a station at `x` is within `αR` of both ends of `pair`.
pub fn covers(network: &Network, table: &DistanceTable, x: &NetworkPoint, pair: &OdPair, alpha_r: f64) -> bool {
    point_vertex_distance(network, table, x, pair.origin) <= alpha_r + TAU
        && point_vertex_distance(network, table, x, pair.destination) <= alpha_r + TAU
}

/// The pairs among `pairs` covered by a station at `x`, in input order.
pub fn coverage_set(
    network: &Network,
    table: &DistanceTable,
    x: &NetworkPoint,
    pairs: &[OdPair],
    range: &RangeConfig,
) -> Vec<OdPair> {
    let alpha_r = range.alpha_r();
    pairs.iter().filter(|q| covers(network, table, x, q, alpha_r)).copied().collect()
}

pub fn covered_flow(coverage: &[OdPair]) -> f64 {
    coverage.iter().map(|q| q.flow).sum()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Triangle v16-v17-v18 with l(16,17)=5, l(16,18)=3, l(17,18)=4 and a
    /// pendant v15 so the worked-example distances are shortest paths.
    pub fn worked() -> (Network, DistanceTable, RangeConfig) {
        let mut b = NetworkBuilder::new();
        b.vertex("v15", "z5", Some((0.0, 0.0)))
            .vertex("v16", "z5", Some((4.0, 0.0)))
            .vertex("v17", "z1", Some((9.0, 0.0)))
            .vertex("v18", "z5", Some((6.0, 2.5)))
            .edge("v15", "v16", 6.0)
            .edge("v16", "v17", 5.0)
            .edge("v16", "v18", 3.0)
            .edge("v17", "v18", 4.0)
            .flow("v16", "v17", 2.0)
            .flow("v16", "v18", 3.0)
            .flow("v17", "v18", 1.5);
        let net = b.build().unwrap();
        let table = build_distance_table(&net).unwrap();
        (net, table, RangeConfig::new(10.0, 0.5).unwrap())
    }

    pub fn path(lengths: &[f64]) -> Network {
        let mut b = NetworkBuilder::new();
        for i in 0..=lengths.len() {
            b.vertex(&alloc::format!("p{i}"), "z", None);
        }
        for (i, l) in lengths.iter().enumerate() {
            b.edge(&alloc::format!("p{i}"), &alloc::format!("p{}", i + 1), *l);
        }
        b.build().unwrap()
    }

    /// Random connected network: a random spanning tree plus extra chords.
    pub fn random_network(seed: u64, n: usize) -> Network {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 33) as f64 / (1u64 << 31) as f64
        };
        let mut b = NetworkBuilder::new();
        for i in 0..n {
            b.vertex(&alloc::format!("v{i}"), "z", None);
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for i in 1..n {
            let j = (next() * i as f64) as usize;
            seen.insert((j, i));
            b.edge(&alloc::format!("v{j}"), &alloc::format!("v{i}"), 0.5 + 4.0 * next());
        }
        for i in 0..n {
            for j in i + 2..n {
                if next() < 0.2 && seen.insert((i, j)) {
                    b.edge(&alloc::format!("v{i}"), &alloc::format!("v{j}"), 0.5 + 4.0 * next());
                }
            }
        }
        b.build().unwrap()
    }

    pub fn sample_point(net: &Network, e: usize, t: f64) -> NetworkPoint {
        let edge = EdgeId((e % net.edges().len()) as u32);
        net.point_on_edge(edge, t * net.edge(edge).length).unwrap()
    }

    /// Rebuilds `net` with zones `z0`/`z1` by vertex parity and flows from `flow`.
    pub fn with_flows(net: &Network, flow: impl Fn(usize, usize) -> f64) -> Network {
        let mut b = NetworkBuilder::new();
        for (v, x) in net.vertices() {
            b.vertex(&x.name, if v.index() % 2 == 0 { "z0" } else { "z1" }, x.coords);
        }
        for e in net.edges() {
            b.edge(net.name(e.a), net.name(e.b), e.length);
        }
        let n = net.vertex_count();
        for i in 0..n {
            for j in i + 1..n {
                let f = flow(i, j);
                if f > 0.0 {
                    b.flow(net.name(VertexId(i as u32)), net.name(VertexId(j as u32)), f);
                }
            }
        }
        b.build().unwrap()
    }
}
