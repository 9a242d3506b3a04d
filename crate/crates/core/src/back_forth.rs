//! Back-and-forth construction of an isomorphism between two samples of the
//! random graph on a Rado truncation.
//!
//! The engine keeps a partial permutation `σ: I → J` that is support-closed:
//! every `s^(k)` with `k ∈ I` is supported inside `I` (likewise for `J`), so
//! the points indexed by `I` are exactly those supported in `I`. The map
//! `ĥσ` relabels coordinates by `σ`; for a 1-symmetric norm it is an isometry.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dense_sets::RadoSet;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{GraphSample, PointId};
use crate::numerics::{distance_key, floor_distance, NormSpec, Rational, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// How many scanned candidates each filter rejected.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub scanned: u64,
    pub already_used: u64,
    pub breaks_support_closure: u64,
    pub point_mismatch: u64,
    pub adjacency_mismatch: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StallReason {
    /// Every index of the truncation was scanned without a match.
    NoCandidateInTruncation,
    /// The next index to place is beyond the truncation.
    TruncationExhausted { next_index: usize },
}

impl StallReason {
    pub fn label(&self) -> &'static str {
        match self {
            StallReason::NoCandidateInTruncation => "no_candidate_in_truncation",
            StallReason::TruncationExhausted { .. } => "truncation_exhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub direction: Direction,
    /// The index being placed: `i` going forward, `j′` going backward.
    pub index: usize,
    /// The accepted pair `(i, σ(i))`.
    pub accepted: Option<(usize, usize)>,
    pub counts: FilterCounts,
    pub stall: Option<StallReason>,
    /// Result of a full re-verification after an accepted step.
    pub verified: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Extended { i: usize, j: usize },
    Stalled(StallReason),
}

/// Engine state. The Rado set and both graphs are borrowed read-only.
#[derive(Clone, Debug)]
pub struct Session<'a> {
    rado: &'a RadoSet,
    g1: &'a GraphSample,
    g2: &'a GraphSample,
    sigma: BTreeMap<usize, usize>,
    inverse: BTreeMap<usize, usize>,
    direction: Direction,
    records: Vec<StepRecord>,
}

pub fn init_session<'a>(rado: &'a RadoSet, g1: &'a GraphSample, g2: &'a GraphSample) -> Result<Session<'a>> {
    let ids: Vec<PointId> = rado.points().iter().map(|p| p.index as PointId).collect();
    for (name, g) in [("first", g1), ("second", g2)] {
        if g.point_ids() != ids.as_slice() {
            return Err(Error::SessionMismatch(format!(
                "{name} graph is not sampled over the Rado point set"
            )));
        }
    }
    if g1.norm() != g2.norm() {
        return Err(Error::SessionMismatch(format!(
            "graphs use different norms ({} vs {})",
            g1.norm(),
            g2.norm()
        )));
    }
    if !matches!(g1.norm(), NormSpec::Lp { .. } | NormSpec::LInfinity) {
        return Err(Error::SessionMismatch(format!(
            "{} is not a 1-symmetric exact norm",
            g1.norm()
        )));
    }
    Ok(Session {
        rado,
        g1,
        g2,
        sigma: BTreeMap::new(),
        inverse: BTreeMap::new(),
        direction: Direction::Forward,
        records: Vec::new(),
    })
}

impl<'a> Session<'a> {
    pub fn sigma(&self) -> &BTreeMap<usize, usize> {
        &self.sigma
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// Replace `σ` wholesale; used to probe [`verify`] with corrupted maps.
    pub fn set_sigma(&mut self, sigma: BTreeMap<usize, usize>) -> Result<()> {
        let inverse: BTreeMap<usize, usize> = sigma.iter().map(|(&i, &j)| (j, i)).collect();
        if inverse.len() != sigma.len() {
            return Err(Error::InvalidArgument("sigma is not injective".into()));
        }
        self.sigma = sigma;
        self.inverse = inverse;
        Ok(())
    }

    fn point(&self, index: usize) -> &'a Vector {
        self.rado.vector(index).expect("index within truncation")
    }

    /// One extension in the current direction.
    pub fn step(&mut self) -> StepOutcome {
        let (outcome, record) = self.try_extend();
        self.records.push(record);
        if let StepOutcome::Extended { .. } = outcome {
            self.direction = self.direction.flip();
        }
        outcome
    }

    fn try_extend(&mut self) -> (StepOutcome, StepRecord) {
        let forward = self.direction == Direction::Forward;
        // (map, reverse map, source graph, target graph) seen from the side being extended
        let (map, rev, g_src, g_dst) = if forward {
            (&self.sigma, &self.inverse, self.g1, self.g2)
        } else {
            (&self.inverse, &self.sigma, self.g2, self.g1)
        };
        let index = first_gap(map);
        let mut record = StepRecord {
            step: self.records.len() + 1,
            direction: self.direction,
            index,
            accepted: None,
            counts: FilterCounts::default(),
            stall: None,
            verified: None,
        };
        let n = self.rado.len();
        if index > n {
            let reason = StallReason::TruncationExhausted { next_index: index };
            record.stall = Some(reason.clone());
            return (StepOutcome::Stalled(reason), record);
        }
        let s = self.point(index);
        let base = s.restrict(|k| map.contains_key(&k)).relabel(|k| map[&k]);
        let top = s.get(index);
        let used_support: BTreeSet<usize> = rev.keys().flat_map(|&m| self.point(m).support()).collect();

        let mut chosen = None;
        for cand in 1..=n {
            record.counts.scanned += 1;
            if rev.contains_key(&cand) {
                record.counts.already_used += 1;
                continue;
            }
            if used_support.contains(&cand) {
                record.counts.breaks_support_closure += 1;
                continue;
            }
            let mut required = base.clone();
            required.set(cand, top.clone());
            if self.point(cand) != &required {
                record.counts.point_mismatch += 1;
                continue;
            }
            let adjacency_ok = map.iter().all(|(&k, &mk)| {
                g_src.has_edge(index as PointId, k as PointId) == g_dst.has_edge(cand as PointId, mk as PointId)
            });
            if !adjacency_ok {
                record.counts.adjacency_mismatch += 1;
                continue;
            }
            chosen = Some(cand);
            break;
        }
        match chosen {
            None => {
                let reason = StallReason::NoCandidateInTruncation;
                record.stall = Some(reason.clone());
                (StepOutcome::Stalled(reason), record)
            }
            Some(cand) => {
                let (i, j) = if forward { (index, cand) } else { (cand, index) };
                self.sigma.insert(i, j);
                self.inverse.insert(j, i);
                record.accepted = Some((i, j));
                (StepOutcome::Extended { i, j }, record)
            }
        }
    }
}

fn first_gap(map: &BTreeMap<usize, usize>) -> usize {
    let mut expect = 1;
    for &k in map.keys() {
        if k != expect {
            break;
        }
        expect += 1;
    }
    expect
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub records: Vec<StepRecord>,
    pub accepted: Vec<(usize, usize)>,
    pub stall: Option<StallReason>,
    pub all_verified: bool,
}

impl Transcript {
    pub fn steps_achieved(&self) -> usize {
        self.accepted.len()
    }

    /// One JSON object per step.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect()
    }
}

/// Step until `max_steps` attempts or the first stall, verifying after every accepted step.
pub fn run(session: &mut Session<'_>, max_steps: usize) -> Result<Transcript> {
    if max_steps == 0 {
        return Err(Error::InvalidArgument("max_steps must be at least 1".into()));
    }
    let first_record = session.records.len();
    let mut stall = None;
    for _ in 0..max_steps {
        match session.step() {
            StepOutcome::Extended { .. } => {
                let ok = verify(session).all_pass();
                session.records.last_mut().expect("step recorded").verified = Some(ok);
            }
            StepOutcome::Stalled(reason) => {
                stall = Some(reason);
                break;
            }
        }
    }
    let records = session.records[first_record..].to_vec();
    let accepted = records.iter().filter_map(|r| r.accepted).collect();
    let all_verified = records.iter().all(|r| r.verified != Some(false));
    Ok(Transcript { records, accepted, stall, all_verified })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub pass: bool,
    pub witness: Option<String>,
}

impl PropertyResult {
    fn pass() -> Self {
        PropertyResult { pass: true, witness: None }
    }

    fn fail(witness: String) -> Self {
        PropertyResult { pass: false, witness: Some(witness) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// Support closure on both sides, so the indexed points span `ℝ^I`.
    pub property1: PropertyResult,
    /// `ĥσ(s^(k)) = s^(σ(k))` for every `k ∈ I`.
    pub property2: PropertyResult,
    /// `σ` is a graph isomorphism between the induced subgraphs.
    pub property3: PropertyResult,
    /// Exact distance equality (and so floor equality) on all pairs.
    pub isometry: PropertyResult,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.property1.pass && self.property2.pass && self.property3.pass && self.isometry.pass
    }
}

/// Recheck every property from scratch.
pub fn verify(session: &Session<'_>) -> VerifyReport {
    let n = session.rado.len();
    let sigma = &session.sigma;
    let out_of_range = sigma.iter().find(|(&i, &j)| i == 0 || j == 0 || i > n || j > n);
    if let Some((i, j)) = out_of_range {
        let w = format!("pair ({i}, {j}) outside the truncation");
        return VerifyReport {
            property1: PropertyResult::fail(w.clone()),
            property2: PropertyResult::fail(w.clone()),
            property3: PropertyResult::fail(w.clone()),
            isometry: PropertyResult::fail(w),
        };
    }

    let domain: Vec<usize> = sigma.keys().copied().collect();
    let range: BTreeSet<usize> = sigma.values().copied().collect();

    let mut property1 = PropertyResult::pass();
    'p1: for (side, set) in [("domain", domain.iter().copied().collect::<BTreeSet<_>>()), ("range", range.clone())] {
        for &k in &set {
            if let Some(c) = session.point(k).support().find(|c| !set.contains(c)) {
                property1 = PropertyResult::fail(format!("{side}: s^({k}) uses coordinate {c}"));
                break 'p1;
            }
        }
    }

    let mut property2 = PropertyResult::pass();
    for &k in &domain {
        let s = session.point(k);
        if s.support().any(|c| !sigma.contains_key(&c)) {
            property2 = PropertyResult::fail(format!("s^({k}) is not supported in I"));
            break;
        }
        let image = s.relabel(|c| sigma[&c]);
        if &image != session.point(sigma[&k]) {
            property2 = PropertyResult::fail(format!("image of s^({k}) is not s^({})", sigma[&k]));
            break;
        }
    }

    let mut property3 = PropertyResult::pass();
    let mut isometry = PropertyResult::pass();
    let norm = session.g1.norm();
    for (a_pos, &a) in domain.iter().enumerate() {
        for &b in &domain[a_pos + 1..] {
            let (sa, sb) = (sigma[&a], sigma[&b]);
            if property3.pass
                && session.g1.has_edge(a as PointId, b as PointId) != session.g2.has_edge(sa as PointId, sb as PointId)
            {
                property3 = PropertyResult::fail(format!("pair ({a}, {b}) -> ({sa}, {sb})"));
            }
            if isometry.pass {
                let (x, y) = (session.point(a), session.point(b));
                let (fx, fy) = (session.point(sa), session.point(sb));
                let same_key = distance_key(x, y, norm).ok() == distance_key(fx, fy, norm).ok();
                let same_floor = floor_distance(x, y, norm).ok() == floor_distance(fx, fy, norm).ok();
                if !(same_key && same_floor) {
                    isometry = PropertyResult::fail(format!("pair ({a}, {b}) -> ({sa}, {sb})"));
                }
            }
        }
    }
    VerifyReport { property1, property2, property3, isometry }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub truncation_size: usize,
    pub seed1: u64,
    pub seed2: u64,
    pub steps_achieved: usize,
    pub stall_reason: String,
}

/// One independent session per seed pair.
pub fn sweep(
    rado: &RadoSet,
    graphs: &[(GraphSample, GraphSample)],
    max_steps: usize,
    exec: Exec,
) -> Result<Vec<SweepRow>> {
    let rows = exec.map_slice(graphs, |(g1, g2)| -> Result<SweepRow> {
        let mut session = init_session(rado, g1, g2)?;
        let t = run(&mut session, max_steps)?;
        Ok(SweepRow {
            truncation_size: rado.len(),
            seed1: g1.seed(),
            seed2: g2.seed(),
            steps_achieved: t.steps_achieved(),
            stall_reason: t.stall.as_ref().map_or("none", |s| s.label()).to_string(),
        })
    });
    rows.into_iter().collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("truncation_size,seed1,seed2,steps_achieved,stall_reason\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.truncation_size, r.seed1, r.seed2, r.steps_achieved, r.stall_reason
        ));
    }
    out
}

/// Heuristic chance `min(p, 1−p)^placed` that a candidate survives the adjacency filter.
pub fn adjacency_pass_heuristic(p: &Rational, placed: usize) -> f64 {
    let p = p.to_f64();
    p.min(1.0 - p).powi(placed as i32)
}
