//! Deterministic truncations of countable dense sets.
//!
//! [`build_rado`] enumerates the staged Rado construction: stage 1 is `{e₁}`,
//! and stage `n` appends `u + q·e_j` for every `u` with coordinates `1..n−1`
//! drawn from `Q_n` and every nonzero `q ∈ Q_n`, each at a fresh index `j`.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{distance_key, NormSpec, Rational, Vector};
use crate::rng::stream_rng;

/// Default upper bound on the number of generated Rado points.
pub const DEFAULT_POINT_CAP: u64 = 100_000;

/// All rationals `x` with `|x| ≤ n` and denominator at most `n`, ascending.
pub fn gen_q(n: u32) -> Vec<Rational> {
    assert!(n >= 1, "gen_q needs n >= 1");
    let n = n as i64;
    let mut set = BTreeSet::new();
    for b in 1..=n {
        for a in -n * b..=n * b {
            set.insert(Rational::new(a, b));
        }
    }
    set.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedPoint {
    pub index: usize,
    pub stage: u32,
    pub vector: Vector,
}

impl IndexedPoint {
    /// Support within `1..=index` and a nonzero top coordinate.
    pub fn is_well_formed(&self) -> bool {
        self.index >= 1
            && self.vector.max_index() == Some(self.index)
            && self.vector.support().all(|i| i >= 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RadoSet {
    points: Vec<IndexedPoint>,
    stages_completed: u32,
}

impl RadoSet {
    pub fn points(&self) -> &[IndexedPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn stages_completed(&self) -> u32 {
        self.stages_completed
    }

    /// The point `s^(index)`, 1-based.
    pub fn get(&self, index: usize) -> Option<&IndexedPoint> {
        index.checked_sub(1).and_then(|k| self.points.get(k))
    }

    pub fn vector(&self, index: usize) -> Option<&Vector> {
        self.get(index).map(|p| &p.vector)
    }

    /// Number of points per stage, stage 1 first.
    pub fn stage_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.stages_completed as usize];
        for p in &self.points {
            counts[p.stage as usize - 1] += 1;
        }
        counts
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in &self.points {
            serde_json::to_writer(&mut out, p)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Reads a JSONL file written by [`RadoSet::write_jsonl`], checking consecutive indices.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut points = Vec::new();
        for line in input.lines() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let p: IndexedPoint =
                serde_json::from_str(&line).map_err(|e| Error::Parse(e.to_string()))?;
            if p.index != points.len() + 1 || !p.is_well_formed() {
                return Err(Error::Parse(format!("malformed point at index {}", p.index)));
            }
            points.push(p);
        }
        let stages_completed = points.iter().map(|p| p.stage).max().unwrap_or(0);
        Ok(RadoSet { points, stages_completed })
    }
}

/// Number of points `build_rado(stages)` would produce, saturating.
pub fn rado_size(stages: u32) -> u64 {
    let mut total: u64 = 1;
    for n in 2..=stages {
        let q = gen_q(n).len() as u64;
        let stage = q
            .checked_pow(n - 1)
            .and_then(|u| u.checked_mul(q - 1))
            .unwrap_or(u64::MAX);
        total = total.saturating_add(stage);
    }
    total
}

pub fn build_rado(stages: u32) -> Result<RadoSet> {
    build_rado_capped(stages, DEFAULT_POINT_CAP)
}

pub fn build_rado_capped(stages: u32, cap: u64) -> Result<RadoSet> {
    if stages == 0 {
        return Err(Error::InvalidArgument("stages must be at least 1".into()));
    }
    let requested = rado_size(stages);
    if requested > cap {
        return Err(Error::SizeCap { requested, cap });
    }
    let mut points = vec![IndexedPoint {
        index: 1,
        stage: 1,
        vector: Vector::basis(1),
    }];
    for n in 2..=stages {
        let q = gen_q(n);
        let q_nonzero: Vec<&Rational> = q.iter().filter(|x| !x.is_zero()).collect();
        let width = (n - 1) as usize;
        // odometer over Q^width, coordinate 1 most significant
        let mut digits = vec![0usize; width];
        'outer: loop {
            let u = Vector::from_pairs(digits.iter().enumerate().map(|(k, &d)| (k + 1, q[d].clone())));
            for qv in &q_nonzero {
                let index = points.len() + 1;
                let mut vector = u.clone();
                vector.set(index, (*qv).clone());
                points.push(IndexedPoint { index, stage: n, vector });
            }
            for pos in (0..width).rev() {
                digits[pos] += 1;
                if digits[pos] < q.len() {
                    continue 'outer;
                }
                digits[pos] = 0;
            }
            break;
        }
    }
    Ok(RadoSet { points, stages_completed: stages })
}

/// Two distinct unordered pairs at equal distance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepeatedDistance {
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub key: Rational,
}

/// First repeated distance in canonical pair order, or `None`.
///
/// Pairs `(a, b)` with `a < b` are ordered lexicographically; the witness is the
/// earliest pair whose distance already occurred, together with that earlier pair.
pub fn has_repeated_distance(points: &[Vector], norm: &NormSpec) -> Result<Option<RepeatedDistance>> {
    let mut seen: HashMap<Rational, (usize, usize)> = HashMap::new();
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            let key = distance_key(&points[a], &points[b], norm)?;
            if let Some(&first) = seen.get(&key) {
                return Ok(Some(RepeatedDistance { first, second: (a, b), key }));
            }
            seen.insert(key, (a, b));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug)]
pub struct NoRepeatParams {
    pub dim: usize,
    pub count: usize,
    pub norm: NormSpec,
    pub seed: u64,
    pub denom_bound: u32,
    /// Total candidate draws allowed before giving up.
    pub max_attempts: u64,
}

impl NoRepeatParams {
    pub fn new(dim: usize, count: usize, norm: NormSpec, seed: u64, denom_bound: u32) -> Self {
        NoRepeatParams {
            dim,
            count,
            norm,
            seed,
            denom_bound,
            max_attempts: 1000 * count.max(1) as u64,
        }
    }
}

/// `count` points in `[−1, 1]^dim` with pairwise distinct distances.
pub fn gen_no_repeated_distance(params: &NoRepeatParams) -> Result<Vec<Vector>> {
    if params.count == 0 || params.dim == 0 || params.denom_bound == 0 {
        return Err(Error::InvalidArgument(
            "count, dim and denom_bound must be positive".into(),
        ));
    }
    let norm = &params.norm;
    norm.validate()?;
    if !norm.is_exact() {
        return Err(Error::InexactNorm(norm.to_string()));
    }
    let mut rng = stream_rng(params.seed, 0);
    let mut points: Vec<Vector> = Vec::with_capacity(params.count);
    let mut keys: HashMap<Rational, (usize, usize)> = HashMap::new();
    let mut attempts = 0u64;
    let mut last_witness = String::from("no attempt made");
    while points.len() < params.count {
        if attempts >= params.max_attempts {
            return Err(Error::ResampleExhausted { attempts, witness: last_witness });
        }
        attempts += 1;
        let candidate = Vector::from_pairs((1..=params.dim).map(|i| {
            let b = rng.gen_range(1..=params.denom_bound as i64);
            let a = rng.gen_range(-b..=b);
            (i, Rational::new(a, b))
        }));
        let idx = points.len();
        let mut fresh: HashMap<Rational, (usize, usize)> = HashMap::new();
        let mut clash = None;
        for (k, p) in points.iter().enumerate() {
            let key = distance_key(p, &candidate, norm)?;
            if key.is_zero() {
                clash = Some(format!("candidate coincides with point {k}"));
                break;
            }
            if let Some(&pair) = keys.get(&key).or_else(|| fresh.get(&key)) {
                clash = Some(format!(
                    "pairs {pair:?} and {:?} share distance key {key}",
                    (k, idx)
                ));
                break;
            }
            fresh.insert(key, (k, idx));
        }
        match clash {
            Some(w) => last_witness = w,
            None => {
                keys.extend(fresh);
                points.push(candidate);
            }
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn gen_q_small_cases() {
        assert_eq!(gen_q(1), vec![r(-1, 1), r(0, 1), r(1, 1)]);
        let q2 = gen_q(2);
        let expected: Vec<Rational> = [(-2, 1), (-3, 2), (-1, 1), (-1, 2), (0, 1), (1, 2), (1, 1), (3, 2), (2, 1)]
            .iter()
            .map(|&(a, b)| r(a, b))
            .collect();
        assert_eq!(q2, expected);
        for n in 1..=5 {
            assert!(gen_q(n).iter().all(|x| x.abs() <= Rational::integer(n as i64)));
        }
        assert_eq!(gen_q(3).len(), 25);
        assert_eq!(gen_q(4).len(), 49);
    }

    #[test]
    fn rado_stage_one_and_two() {
        let s1 = build_rado(1).unwrap();
        assert_eq!(s1.len(), 1);
        assert_eq!(s1.points()[0].vector, Vector::basis(1));

        let s2 = build_rado(2).unwrap();
        assert_eq!(s2.len(), 73);
        assert_eq!(s2.stage_counts(), vec![1, 72]);
        // first stage-2 point: u = −2·e₁, q = −2
        let p2 = s2.get(2).unwrap();
        assert_eq!(p2.vector, Vector::from_pairs([(1, r(-2, 1)), (2, r(-2, 1))]));
        // u = 0 is the fifth u, q = 1 the sixth nonzero q
        let p = s2.get(1 + 4 * 8 + 6).unwrap();
        assert_eq!(p.vector, Vector::basis(39));
        for p in s2.points() {
            assert!(p.is_well_formed(), "{p:?}");
        }
    }

    #[test]
    fn rado_size_and_cap() {
        assert_eq!(rado_size(2), 73);
        assert_eq!(rado_size(3), 73 + 625 * 24);
        assert!(rado_size(4) > 1_000_000);
        assert!(matches!(build_rado(4), Err(Error::SizeCap { .. })));
        assert!(matches!(build_rado_capped(3, 100), Err(Error::SizeCap { requested: 15073, cap: 100 })));
        assert!(build_rado(0).is_err());
    }

    #[test]
    fn rado_jsonl_round_trip() {
        let s2 = build_rado(2).unwrap();
        let text = s2.to_jsonl();
        assert_eq!(text.lines().count(), 73);
        let back = RadoSet::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, s2);
        assert!(RadoSet::read_jsonl("{\"index\":2,\"stage\":1,\"vector\":{\"2\":\"1/1\"}}\n".as_bytes()).is_err());
    }

    #[test]
    fn repeated_distance_examples() {
        let line = |xs: &[Rational]| xs.iter().map(|x| Vector::from_dense(1, std::slice::from_ref(x))).collect::<Vec<_>>();
        let w = has_repeated_distance(&line(&[r(0, 1), r(1, 1), r(2, 1)]), &NormSpec::l2())
            .unwrap()
            .unwrap();
        assert_eq!((w.first, w.second), ((0, 1), (1, 2)));
        assert!(has_repeated_distance(&line(&[r(0, 1), r(1, 1), r(5, 2)]), &NormSpec::l2())
            .unwrap()
            .is_none());
        let square: Vec<Vector> = [(0, 0), (1, 0), (0, 1), (1, 1)]
            .iter()
            .map(|&(a, b)| Vector::from_dense(1, &[r(a, 1), r(b, 1)]))
            .collect();
        let w = has_repeated_distance(&square, &NormSpec::l2()).unwrap().unwrap();
        assert_eq!(w.key, Rational::one());
    }

    #[test]
    fn no_repeat_generator() {
        let single = gen_no_repeated_distance(&NoRepeatParams::new(2, 1, NormSpec::l2(), 3, 5)).unwrap();
        assert_eq!(single.len(), 1);
        let pts = gen_no_repeated_distance(&NoRepeatParams::new(2, 4, NormSpec::l2(), 7, 10)).unwrap();
        assert_eq!(pts.len(), 4);
        assert!(has_repeated_distance(&pts, &NormSpec::l2()).unwrap().is_none());
        let again = gen_no_repeated_distance(&NoRepeatParams::new(2, 4, NormSpec::l2(), 7, 10)).unwrap();
        assert_eq!(pts, again);
    }

    #[test]
    fn no_repeat_budget_exhaustion() {
        // denominators 1 in dimension 1 leave only {−1, 0, 1}: three points force a repeat
        let mut params = NoRepeatParams::new(1, 3, NormSpec::l2(), 1, 1);
        params.max_attempts = 200;
        match gen_no_repeated_distance(&params) {
            Err(Error::ResampleExhausted { attempts, .. }) => assert_eq!(attempts, 200),
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }
}
