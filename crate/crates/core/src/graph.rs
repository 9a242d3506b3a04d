//! Samples of `G(S, p)` over a finite point table.
//!
//! A pair is eligible iff its points are at distance strictly less than 1,
//! decided exactly. An eligible pair `{a, b}` (ids, `a < b`) is an edge iff the
//! keyed draw `u(seed, a, b)` is below `p`, so the edge set for a fixed seed is
//! monotone in `p`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dense_sets::RadoSet;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numerics::{distance_lt, floor_distance, NormSpec, Rational, Vector};
use crate::rng::{draw_below, unit_draw_53};

pub type PointId = u64;

pub const GRAPH_SCHEMA: &str = "steplab.graph/1";

/// Geometry shared by several graph samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointTable {
    ids: Vec<PointId>,
    points: Vec<Vector>,
    position: BTreeMap<PointId, usize>,
}

impl PointTable {
    pub fn new(ids: Vec<PointId>, points: Vec<Vector>) -> Result<Self> {
        if ids.len() != points.len() {
            return Err(Error::LengthMismatch { left: ids.len(), right: points.len() });
        }
        let position: BTreeMap<PointId, usize> =
            ids.iter().enumerate().map(|(k, id)| (*id, k)).collect();
        if position.len() != ids.len() {
            return Err(Error::InvalidArgument("duplicate point ids".into()));
        }
        Ok(PointTable { ids, points, position })
    }

    /// Ids `0..n` in list order.
    pub fn from_points(points: Vec<Vector>) -> Self {
        let ids = (0..points.len() as PointId).collect();
        PointTable::new(ids, points).expect("sequential ids are distinct")
    }

    /// Ids are the Rado indices `1..=N`.
    pub fn from_rado(rado: &RadoSet) -> Self {
        let ids = rado.points().iter().map(|p| p.index as PointId).collect();
        let points = rado.points().iter().map(|p| p.vector.clone()).collect();
        PointTable::new(ids, points).expect("rado indices are distinct")
    }

    /// The 1-dimensional grid `{0, step, 2·step, …} ∩ [0, max]`, ids in order.
    pub fn grid_1d(step: &Rational, max: &Rational) -> Result<Self> {
        if !step.is_positive() || max.is_negative() {
            return Err(Error::InvalidArgument("grid needs step > 0 and max >= 0".into()));
        }
        let mut points = Vec::new();
        let mut x = Rational::zero();
        while &x <= max {
            points.push(Vector::from_dense(1, std::slice::from_ref(&x)));
            x = &x + step;
        }
        Ok(PointTable::from_points(points))
    }

    pub fn ids(&self) -> &[PointId] {
        &self.ids
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: PointId) -> Result<&Vector> {
        self.position
            .get(&id)
            .map(|&k| &self.points[k])
            .ok_or(Error::UnknownPoint(id))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphSample {
    point_ids: Vec<PointId>,
    p: Rational,
    seed: u64,
    norm: NormSpec,
    adjacency: BTreeMap<PointId, BTreeSet<PointId>>,
}

impl GraphSample {
    pub fn point_ids(&self) -> &[PointId] {
        &self.point_ids
    }

    pub fn p(&self) -> &Rational {
        &self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn has_edge(&self, a: PointId, b: PointId) -> bool {
        self.adjacency.get(&a).is_some_and(|n| n.contains(&b))
    }

    pub fn neighbors(&self, a: PointId) -> impl Iterator<Item = PointId> + '_ {
        self.adjacency.get(&a).into_iter().flatten().copied()
    }

    /// Edges `(a, b)` with `a < b`, lexicographic.
    pub fn edges(&self) -> Vec<(PointId, PointId)> {
        self.adjacency
            .iter()
            .flat_map(|(&a, ns)| ns.range(a + 1..).map(move |&b| (a, b)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    fn from_edges(
        point_ids: Vec<PointId>,
        p: Rational,
        seed: u64,
        norm: NormSpec,
        edges: impl IntoIterator<Item = (PointId, PointId)>,
    ) -> Self {
        let mut adjacency: BTreeMap<PointId, BTreeSet<PointId>> =
            point_ids.iter().map(|&id| (id, BTreeSet::new())).collect();
        for (a, b) in edges {
            adjacency.entry(a).or_default().insert(b);
            adjacency.entry(b).or_default().insert(a);
        }
        GraphSample { point_ids, p, seed, norm, adjacency }
    }
}

pub fn sample_graph(table: &PointTable, norm: &NormSpec, p: &Rational, seed: u64) -> Result<GraphSample> {
    sample_graph_with(table, norm, p, seed, Exec::default())
}

pub fn sample_graph_with(
    table: &PointTable,
    norm: &NormSpec,
    p: &Rational,
    seed: u64,
    exec: Exec,
) -> Result<GraphSample> {
    if p.is_negative() || p > &Rational::one() {
        return Err(Error::InvalidArgument(format!("p = {p} outside [0, 1]")));
    }
    norm.validate()?;
    if !norm.is_exact() {
        return Err(Error::InexactNorm(norm.to_string()));
    }
    let one = Rational::one();
    let ids = table.ids();
    let points = table.points();
    let rows: Vec<Vec<(PointId, PointId)>> = exec.map_range(0..ids.len(), |a| {
        let mut row = Vec::new();
        for b in a + 1..ids.len() {
            let (lo, hi) = if ids[a] < ids[b] { (ids[a], ids[b]) } else { (ids[b], ids[a]) };
            let eligible = distance_lt(&points[a], &points[b], &one, norm)
                .expect("norm checked exact above");
            if eligible && draw_below(unit_draw_53(seed, lo, hi), p) {
                row.push((lo, hi));
            }
        }
        row
    });
    Ok(GraphSample::from_edges(
        ids.to_vec(),
        p.clone(),
        seed,
        norm.clone(),
        rows.into_iter().flatten(),
    ))
}

fn check_id(g: &GraphSample, id: PointId) -> Result<()> {
    if g.adjacency.contains_key(&id) {
        Ok(())
    } else {
        Err(Error::UnknownPoint(id))
    }
}

/// Breadth-first hop counts from `source` to every reachable node.
pub fn bfs_distances(g: &GraphSample, source: PointId) -> Result<BTreeMap<PointId, u32>> {
    check_id(g, source)?;
    let mut dist = BTreeMap::from([(source, 0u32)]);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        for v in g.neighbors(u) {
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                e.insert(du + 1);
                queue.push_back(v);
            }
        }
    }
    Ok(dist)
}

/// Shortest-path edge count, `None` when `a` and `b` are disconnected.
pub fn graph_distance(g: &GraphSample, a: PointId, b: PointId) -> Result<Option<u32>> {
    check_id(g, b)?;
    Ok(bfs_distances(g, a)?.get(&b).copied())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DichotomyRow {
    pub k: u32,
    pub pairs_tested: u64,
    /// `‖x−y‖ < k` but `d_G(x,y) > k`.
    pub norm_close_graph_far: u64,
    /// `d_G(x,y) ≤ k` but `‖x−y‖ ≥ k`.
    pub graph_close_norm_far: u64,
}

impl DichotomyRow {
    pub fn violations(&self) -> u64 {
        self.norm_close_graph_far + self.graph_close_norm_far
    }

    pub fn violation_rate(&self) -> f64 {
        if self.pairs_tested == 0 {
            0.0
        } else {
            self.violations() as f64 / self.pairs_tested as f64
        }
    }
}

/// Compare `d_G ≤ k` with `‖·‖ < k` over all pairs for `k = 2..=k_max`.
pub fn dichotomy_report(g: &GraphSample, table: &PointTable, k_max: u32) -> Result<Vec<DichotomyRow>> {
    dichotomy_report_with(g, table, k_max, Exec::default())
}

pub fn dichotomy_report_with(
    g: &GraphSample,
    table: &PointTable,
    k_max: u32,
    exec: Exec,
) -> Result<Vec<DichotomyRow>> {
    if k_max < 2 {
        return Err(Error::InvalidArgument("k_max must be at least 2".into()));
    }
    if table.ids() != g.point_ids() {
        return Err(Error::InvalidArgument("graph and point table disagree".into()));
    }
    let ids = table.ids();
    let points = table.points();
    let norm = g.norm();
    let ks: Vec<u32> = (2..=k_max).collect();
    let per_source: Vec<Result<Vec<(u64, u64)>>> = exec.map_range(0..ids.len(), |a| {
        let dist = bfs_distances(g, ids[a])?;
        let mut counts = vec![(0u64, 0u64); ks.len()];
        for b in a + 1..ids.len() {
            let floor = floor_distance(&points[a], &points[b], norm)?;
            let hops = dist.get(&ids[b]).copied();
            for (slot, &k) in counts.iter_mut().zip(&ks) {
                let norm_close = floor < k as u64;
                let graph_close = hops.is_some_and(|h| h <= k);
                match (norm_close, graph_close) {
                    (true, false) => slot.0 += 1,
                    (false, true) => slot.1 += 1,
                    _ => {}
                }
            }
        }
        Ok(counts)
    });
    let n = ids.len() as u64;
    let mut rows: Vec<DichotomyRow> = ks
        .iter()
        .map(|&k| DichotomyRow {
            k,
            pairs_tested: n * n.saturating_sub(1) / 2,
            norm_close_graph_far: 0,
            graph_close_norm_far: 0,
        })
        .collect();
    for counts in per_source {
        for (row, (a, b)) in rows.iter_mut().zip(counts?) {
            row.norm_close_graph_far += a;
            row.graph_close_norm_far += b;
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    GraphMl,
    Json,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    schema: String,
    point_ids: Vec<PointId>,
    p: Rational,
    seed: u64,
    norm: NormSpec,
    edges: Vec<(PointId, PointId)>,
}

pub fn export_graph(g: &GraphSample, format: ExportFormat) -> Vec<u8> {
    let mut ids = g.point_ids.clone();
    ids.sort_unstable();
    let edges = g.edges();
    let mut out = String::new();
    match format {
        ExportFormat::Dot => {
            out.push_str("graph G {\n");
            for id in &ids {
                let _ = writeln!(out, "  {id};");
            }
            for (a, b) in &edges {
                let _ = writeln!(out, "  {a} -- {b};");
            }
            out.push_str("}\n");
        }
        ExportFormat::GraphMl => {
            out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
            out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
            out.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
            for id in &ids {
                let _ = writeln!(out, "    <node id=\"n{id}\"/>");
            }
            for (a, b) in &edges {
                let _ = writeln!(out, "    <edge source=\"n{a}\" target=\"n{b}\"/>");
            }
            out.push_str("  </graph>\n</graphml>\n");
        }
        ExportFormat::Json => {
            let doc = GraphJson {
                schema: GRAPH_SCHEMA.to_string(),
                point_ids: g.point_ids.clone(),
                p: g.p.clone(),
                seed: g.seed,
                norm: g.norm.clone(),
                edges,
            };
            out = serde_json::to_string_pretty(&doc).expect("graph json serializes");
            out.push('\n');
        }
    }
    out.into_bytes()
}

pub fn import_graph_json(bytes: &[u8]) -> Result<GraphSample> {
    let doc: GraphJson = serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    if doc.schema != GRAPH_SCHEMA {
        return Err(Error::Parse(format!("unsupported graph schema {:?}", doc.schema)));
    }
    let known: BTreeSet<PointId> = doc.point_ids.iter().copied().collect();
    if let Some(&(a, b)) = doc
        .edges
        .iter()
        .find(|(a, b)| a == b || !known.contains(a) || !known.contains(b))
    {
        return Err(Error::Parse(format!("bad edge ({a}, {b})")));
    }
    Ok(GraphSample::from_edges(doc.point_ids, doc.p, doc.seed, doc.norm, doc.edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn chain() -> PointTable {
        PointTable::from_points(
            [r(0, 1), r(3, 5), r(7, 5)]
                .iter()
                .map(|x| Vector::from_dense(1, std::slice::from_ref(x)))
                .collect(),
        )
    }

    #[test]
    fn chain_with_p_one() {
        let g = sample_graph(&chain(), &NormSpec::l2(), &Rational::one(), 5).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(graph_distance(&g, 0, 2).unwrap(), Some(2));
        assert_eq!(graph_distance(&g, 1, 1).unwrap(), Some(0));
    }

    #[test]
    fn p_zero_is_empty() {
        let g = sample_graph(&chain(), &NormSpec::l2(), &Rational::zero(), 5).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(graph_distance(&g, 0, 1).unwrap(), None);
    }

    #[test]
    fn unit_distance_is_never_an_edge() {
        let t = PointTable::from_points(vec![Vector::zero(), Vector::basis(1)]);
        let g = sample_graph(&t, &NormSpec::LInfinity, &Rational::one(), 0).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn invalid_inputs() {
        let t = chain();
        assert!(sample_graph(&t, &NormSpec::l2(), &r(3, 2), 0).is_err());
        assert!(sample_graph(&t, &NormSpec::l2(), &r(-1, 2), 0).is_err());
        let g = sample_graph(&t, &NormSpec::l2(), &Rational::one(), 0).unwrap();
        assert_eq!(graph_distance(&g, 0, 9), Err(Error::UnknownPoint(9)));
        assert!(dichotomy_report(&g, &t, 1).is_err());
    }

    #[test]
    fn half_sample_is_subset_of_full() {
        let t = PointTable::grid_1d(&r(1, 10), &r(2, 1)).unwrap();
        let full = sample_graph(&t, &NormSpec::l2(), &Rational::one(), 42).unwrap();
        let half = sample_graph(&t, &NormSpec::l2(), &r(1, 2), 42).unwrap();
        let full_edges: BTreeSet<_> = full.edges().into_iter().collect();
        assert!(half.edge_count() > 0);
        assert!(half.edge_count() < full.edge_count());
        assert!(half.edges().iter().all(|e| full_edges.contains(e)));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let t = PointTable::grid_1d(&r(1, 10), &r(3, 1)).unwrap();
        let a = sample_graph_with(&t, &NormSpec::l2(), &r(1, 3), 9, Exec::Sequential).unwrap();
        let b = sample_graph_with(&t, &NormSpec::l2(), &r(1, 3), 9, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dichotomy_rows_skip_k_one() {
        let t = chain();
        let g = sample_graph(&t, &NormSpec::l2(), &Rational::zero(), 1).unwrap();
        let rows = dichotomy_report(&g, &t, 3).unwrap();
        assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), vec![2, 3]);
        // every pair is within distance 2 but disconnected
        assert_eq!(rows[0].norm_close_graph_far, 3);
        assert_eq!(rows[0].pairs_tested, 3);
    }

    #[test]
    fn exports_are_ordered() {
        let g = sample_graph(&chain(), &NormSpec::l2(), &Rational::one(), 5).unwrap();
        let dot = String::from_utf8(export_graph(&g, ExportFormat::Dot)).unwrap();
        assert_eq!(dot, "graph G {\n  0;\n  1;\n  2;\n  0 -- 1;\n  1 -- 2;\n}\n");
        let gml = String::from_utf8(export_graph(&g, ExportFormat::GraphMl)).unwrap();
        assert!(gml.find("source=\"n0\"").unwrap() < gml.find("source=\"n1\"").unwrap());
        let back = import_graph_json(&export_graph(&g, ExportFormat::Json)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn empty_graph_exports_header_only() {
        let t = PointTable::from_points(vec![]);
        let g = sample_graph(&t, &NormSpec::l2(), &Rational::one(), 0).unwrap();
        assert_eq!(export_graph(&g, ExportFormat::Dot), b"graph G {\n}\n".to_vec());
        let gml = String::from_utf8(export_graph(&g, ExportFormat::GraphMl)).unwrap();
        assert!(!gml.contains("<node"));
        let back = import_graph_json(&export_graph(&g, ExportFormat::Json)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn json_import_rejects_foreign_schema() {
        let bad = br#"{"schema":"other/1","point_ids":[],"p":"1/2","seed":0,"norm":{"kind":"l_infinity"},"edges":[]}"#;
        assert!(import_graph_json(bad).is_err());
    }
}
