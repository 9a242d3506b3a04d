//! Step-isometries: bijections preserving `⌊‖x−y‖⌋`.
//!
//! Contains the exact checkers, the one-dimensional family
//! `h(x) = ±(⌊x⌋ + g(x − ⌊x⌋)) + offset` with `g` an increasing piecewise-linear
//! bijection of `[0, 1]`, coordinate-wise maps built from it, the discontinuous
//! `c₀₀` map `T(x)_n = h_n(x_n)` and its forced-coordinate witness, a
//! brute-force rigidity oracle and a decomposer for opaque coordinate-wise maps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numerics::{distance_key, floor_distance, floor_of_key, NormSpec, Rational, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn apply(self, x: Rational) -> Rational {
        match self {
            Sign::Plus => x,
            Sign::Minus => -x,
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(format!("sign must be 1 or -1, got {v}")),
        }
    }
}

/// `h(x) = sign·(⌊x⌋ + g(x − ⌊x⌋)) + offset`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "StepIsoMap1DRaw")]
pub struct StepIsoMap1D {
    breakpoints: Vec<(Rational, Rational)>,
    sign: Sign,
    offset: Rational,
}

#[derive(Deserialize)]
struct StepIsoMap1DRaw {
    breakpoints: Vec<(Rational, Rational)>,
    sign: Sign,
    offset: Rational,
}

impl TryFrom<StepIsoMap1DRaw> for StepIsoMap1D {
    type Error = Error;
    fn try_from(raw: StepIsoMap1DRaw) -> Result<Self> {
        StepIsoMap1D::new(raw.breakpoints, raw.sign, raw.offset)
    }
}

impl StepIsoMap1D {
    /// Breakpoints must start at `(0,0)`, end at `(1,1)`, and increase strictly in both coordinates.
    pub fn new(breakpoints: Vec<(Rational, Rational)>, sign: Sign, offset: Rational) -> Result<Self> {
        let ends_ok = breakpoints.first() == Some(&(Rational::zero(), Rational::zero()))
            && breakpoints.last() == Some(&(Rational::one(), Rational::one()))
            && breakpoints.len() >= 2;
        if !ends_ok {
            return Err(Error::InvalidArgument(
                "breakpoints must run from (0,0) to (1,1)".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[0].0 >= w[1].0 || w[0].1 >= w[1].1) {
            return Err(Error::InvalidArgument(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(StepIsoMap1D { breakpoints, sign, offset })
    }

    pub fn identity() -> Self {
        StepIsoMap1D {
            breakpoints: vec![(Rational::zero(), Rational::zero()), (Rational::one(), Rational::one())],
            sign: Sign::Plus,
            offset: Rational::zero(),
        }
    }

    /// `h_n` of the `c₀₀` counterexample: `g_n(1/(n+1)) = 1 − 1/(n+1)`.
    pub fn c0_coordinate(n: u64) -> Self {
        assert!(n >= 1, "c0 coordinates start at 1");
        let t = Rational::new(1, n as i64 + 1);
        let gt = Rational::one() - &t;
        StepIsoMap1D {
            breakpoints: vec![
                (Rational::zero(), Rational::zero()),
                (t, gt),
                (Rational::one(), Rational::one()),
            ],
            sign: Sign::Plus,
            offset: Rational::zero(),
        }
    }

    pub fn breakpoints(&self) -> &[(Rational, Rational)] {
        &self.breakpoints
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn offset(&self) -> &Rational {
        &self.offset
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }

    pub fn with_offset(mut self, offset: Rational) -> Self {
        self.offset = offset;
        self
    }

    /// `g(t)` for `t ∈ [0, 1]`.
    pub fn eval_g(&self, t: &Rational) -> Rational {
        interpolate(&self.breakpoints, t, false)
    }

    /// `g⁻¹(s)` for `s ∈ [0, 1]`.
    pub fn eval_g_inverse(&self, s: &Rational) -> Rational {
        interpolate(&self.breakpoints, s, true)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let fl = x.floor();
        let t = x - &fl;
        self.sign.apply(fl + self.eval_g(&t)) + &self.offset
    }

    pub fn eval_inverse(&self, y: &Rational) -> Rational {
        let z = self.sign.apply(y - &self.offset);
        let fl = z.floor();
        let s = &z - &fl;
        fl + self.eval_g_inverse(&s)
    }

    /// Breakpoints with collinear interior points removed.
    pub fn simplified(&self) -> StepIsoMap1D {
        let mut out = self.clone();
        out.breakpoints = simplify_collinear(&self.breakpoints);
        out
    }
}

/// Piecewise-linear interpolation through `bps`, read as `(x, y)` or, if `inverse`, as `(y, x)`.
fn interpolate(bps: &[(Rational, Rational)], x: &Rational, inverse: bool) -> Rational {
    let key = |bp: &(Rational, Rational)| if inverse { (bp.1.clone(), bp.0.clone()) } else { bp.clone() };
    let k = bps.partition_point(|bp| &key(bp).0 <= x);
    if k == 0 {
        return key(&bps[0]).1;
    }
    if k == bps.len() {
        return key(&bps[k - 1]).1;
    }
    let (x0, y0) = key(&bps[k - 1]);
    let (x1, y1) = key(&bps[k]);
    &y0 + &((x - &x0) * (&y1 - &y0) / (&x1 - &x0))
}

fn simplify_collinear(bps: &[(Rational, Rational)]) -> Vec<(Rational, Rational)> {
    let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(bps.len());
    for bp in bps {
        while out.len() >= 2 {
            let (a, b) = (&out[out.len() - 2], &out[out.len() - 1]);
            let cross = (&b.0 - &a.0) * (&bp.1 - &a.1) - (&b.1 - &a.1) * (&bp.0 - &a.0);
            if cross.is_zero() {
                out.pop();
            } else {
                break;
            }
        }
        out.push(bp.clone());
    }
    out
}

impl fmt::Display for StepIsoMap1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.breakpoints.iter().map(|(t, g)| format!("{t}:{g}")).collect();
        write!(f, "{}", parts.join(","))?;
        if self.sign == Sign::Minus {
            write!(f, ";sign=-1")?;
        }
        if !self.offset.is_zero() {
            write!(f, ";offset={}", self.offset)?;
        }
        Ok(())
    }
}

/// Inline form `t:g,t:g,…[;sign=-1][;offset=a/b]`, e.g. `0:0,1/3:2/3,1:1`.
impl FromStr for StepIsoMap1D {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(';');
        let bps = parts.next().unwrap_or_default();
        let breakpoints = bps
            .split(',')
            .map(|pair| {
                let (t, g) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("bad breakpoint {pair:?}")))?;
                Ok((t.parse()?, g.parse()?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut sign = Sign::Plus;
        let mut offset = Rational::zero();
        for extra in parts {
            match extra.split_once('=') {
                Some(("sign", v)) => {
                    let v: i8 = v.trim().parse().map_err(|_| Error::Parse(format!("bad sign {v:?}")))?;
                    sign = Sign::try_from(v).map_err(Error::Parse)?;
                }
                Some(("offset", v)) => offset = v.parse()?,
                _ => return Err(Error::Parse(format!("unknown map option {extra:?}"))),
            }
        }
        StepIsoMap1D::new(breakpoints, sign, offset)
    }
}

/// `T(v)_i = f_i(v_{σ(i)})`.
///
/// `permutation` lists `i ↦ σ(i)` on its finite support (identity elsewhere);
/// coordinates without an entry in `maps` use `default_map`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinateStepIso {
    permutation: BTreeMap<usize, usize>,
    maps: BTreeMap<usize, StepIsoMap1D>,
    default_map: StepIsoMap1D,
}

impl CoordinateStepIso {
    pub fn new(
        permutation: BTreeMap<usize, usize>,
        maps: BTreeMap<usize, StepIsoMap1D>,
    ) -> Result<Self> {
        Self::with_default(permutation, maps, StepIsoMap1D::identity())
    }

    pub fn with_default(
        mut permutation: BTreeMap<usize, usize>,
        maps: BTreeMap<usize, StepIsoMap1D>,
        default_map: StepIsoMap1D,
    ) -> Result<Self> {
        permutation.retain(|i, j| i != j);
        let keys: BTreeSet<usize> = permutation.keys().copied().collect();
        let values: BTreeSet<usize> = permutation.values().copied().collect();
        if keys != values {
            return Err(Error::InvalidArgument(
                "permutation must be a bijection on its support".into(),
            ));
        }
        Ok(CoordinateStepIso { permutation, maps, default_map })
    }

    pub fn identity() -> Self {
        CoordinateStepIso {
            permutation: BTreeMap::new(),
            maps: BTreeMap::new(),
            default_map: StepIsoMap1D::identity(),
        }
    }

    /// `σ(i)`.
    pub fn source_of(&self, i: usize) -> usize {
        self.permutation.get(&i).copied().unwrap_or(i)
    }

    fn target_of(&self, j: usize) -> usize {
        self.permutation
            .iter()
            .find(|(_, &src)| src == j)
            .map(|(&i, _)| i)
            .unwrap_or(j)
    }

    pub fn map_for(&self, i: usize) -> &StepIsoMap1D {
        self.maps.get(&i).unwrap_or(&self.default_map)
    }

    pub fn permutation(&self) -> &BTreeMap<usize, usize> {
        &self.permutation
    }

    pub fn maps(&self) -> &BTreeMap<usize, StepIsoMap1D> {
        &self.maps
    }
}

pub fn apply_coordinatewise(m: &CoordinateStepIso, v: &Vector) -> Result<Vector> {
    let zero = Rational::zero();
    if !m.default_map.eval(&zero).is_zero() {
        return Err(Error::InvalidArgument(
            "default map moves 0, the image would not be finitely supported".into(),
        ));
    }
    let mut active: BTreeSet<usize> = v.support().map(|j| m.target_of(j)).collect();
    active.extend(m.maps.keys().copied());
    Ok(Vector::from_pairs(active.into_iter().map(|i| {
        let x = v.get(m.source_of(i));
        (i, m.map_for(i).eval(&x))
    })))
}

/// `T(x)_n = h_n(x_n)` on rational `c₀₀`. Coordinate 0, if present, is left unchanged.
pub fn c0_counterexample(v: &Vector) -> Vector {
    Vector::from_pairs(v.iter().map(|(n, x)| {
        if n == 0 {
            (0, x.clone())
        } else {
            (n, StepIsoMap1D::c0_coordinate(n as u64).eval(x))
        }
    }))
}

pub fn c0_counterexample_inverse(v: &Vector) -> Vector {
    Vector::from_pairs(v.iter().map(|(n, x)| {
        if n == 0 {
            (0, x.clone())
        } else {
            (n, StepIsoMap1D::c0_coordinate(n as u64).eval_inverse(x))
        }
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StepCheck {
    Ok,
    Violation {
        pair: (usize, usize),
        domain_floor: u64,
        image_floor: u64,
    },
}

impl StepCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, StepCheck::Ok)
    }
}

fn check_inputs(points: &[Vector], images: &[Vector], norm: &NormSpec) -> Result<()> {
    if points.len() != images.len() {
        return Err(Error::LengthMismatch { left: points.len(), right: images.len() });
    }
    norm.validate()?;
    if !norm.is_exact() {
        return Err(Error::InexactNorm(norm.to_string()));
    }
    let mut seen: BTreeMap<&Vector, usize> = BTreeMap::new();
    for (k, img) in images.iter().enumerate() {
        if let Some(&first) = seen.get(img) {
            return Err(Error::DuplicateImage(first, k));
        }
        seen.insert(img, k);
    }
    Ok(())
}

/// First pair (lexicographic) whose distance floors differ.
pub fn check_step_isometry(points: &[Vector], images: &[Vector], norm: &NormSpec) -> Result<StepCheck> {
    check_inputs(points, images, norm)?;
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            let domain_floor = floor_distance(&points[a], &points[b], norm)?;
            let image_floor = floor_distance(&images[a], &images[b], norm)?;
            if domain_floor != image_floor {
                return Ok(StepCheck::Violation { pair: (a, b), domain_floor, image_floor });
            }
        }
    }
    Ok(StepCheck::Ok)
}

/// `‖x−y‖ < m ⟺ ‖Tx−Ty‖ < m` for every integer `m ≥ m0`.
///
/// With `k = ⌊‖x−y‖⌋`, `‖x−y‖ < m ⟺ k < m`, so the condition over all
/// `m ≥ m0` is `max(k, m0−1) = max(k′, m0−1)`.
pub fn check_step_isometry_large(
    points: &[Vector],
    images: &[Vector],
    norm: &NormSpec,
    m0: u64,
) -> Result<StepCheck> {
    if m0 == 0 {
        return Err(Error::InvalidArgument("m0 must be positive".into()));
    }
    check_inputs(points, images, norm)?;
    let clamp = |k: u64| k.max(m0 - 1);
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            let domain_floor = floor_distance(&points[a], &points[b], norm)?;
            let image_floor = floor_distance(&images[a], &images[b], norm)?;
            if clamp(domain_floor) != clamp(image_floor) {
                return Ok(StepCheck::Violation { pair: (a, b), domain_floor, image_floor });
            }
        }
    }
    Ok(StepCheck::Ok)
}

/// Largest point set accepted by [`enumerate_step_isometric_bijections`].
pub const ENUMERATION_CAP: usize = 8;

/// Every self-bijection `π` of the set (as `point a ↦ point π[a]`) that is a
/// step-isometry, in lexicographic order of `π`.
pub fn enumerate_step_isometric_bijections(points: &[Vector], norm: &NormSpec) -> Result<Vec<Vec<usize>>> {
    enumerate_step_isometric_bijections_with(points, norm, Exec::default())
}

pub fn enumerate_step_isometric_bijections_with(
    points: &[Vector],
    norm: &NormSpec,
    exec: Exec,
) -> Result<Vec<Vec<usize>>> {
    let n = points.len();
    if n > ENUMERATION_CAP {
        return Err(Error::SizeCap { requested: n as u64, cap: ENUMERATION_CAP as u64 });
    }
    check_inputs(points, points, norm)?;
    if n == 0 {
        return Ok(vec![vec![]]);
    }
    let mut floors = vec![vec![0u64; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let f = floor_of_key(&distance_key(&points[a], &points[b], norm)?, norm)?;
            floors[a][b] = f;
            floors[b][a] = f;
        }
    }
    let floors = &floors;
    let blocks = exec.map_range(0..n, |first| {
        let mut found = Vec::new();
        let mut rest: Vec<usize> = (0..n).filter(|&x| x != first).collect();
        loop {
            let mut perm = Vec::with_capacity(n);
            perm.push(first);
            perm.extend_from_slice(&rest);
            let preserves = (0..n).all(|a| (a + 1..n).all(|b| floors[perm[a]][perm[b]] == floors[a][b]));
            if preserves {
                found.push(perm);
            }
            if !next_permutation(&mut rest) {
                break;
            }
        }
        found
    });
    Ok(blocks.into_iter().flatten().collect())
}

/// Advance to the next lexicographic permutation; `false` after the last one.
pub fn next_permutation(xs: &mut [usize]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let Some(i) = (0..xs.len() - 1).rev().find(|&i| xs[i] < xs[i + 1]) else {
        return false;
    };
    let j = (i + 1..xs.len()).rev().find(|&j| xs[j] > xs[i]).expect("pivot has a successor");
    xs.swap(i, j);
    xs[i + 1..].reverse();
    true
}

/// Outcome of the forced-coordinate computation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcedCoordinate {
    /// The limiting intersection is this single point.
    Point { value: Rational },
    /// The grid cannot pin the limit; the exact intersection over the grid.
    Interval { lower: Rational, upper: Rational },
}

/// The `n`th coordinate any step-isometric extension must assign to `(1/(k+1))_k`.
///
/// For each `ε` the image must lie in `B°(T(y_ε),1) ∩ B°(T(z_ε),1)` with
/// `y_ε = (1 + 1/(n+1) − ε)e_n` and `z_ε = (−1 + 1/(n+1) + ε)e_n`; on coordinate
/// `n` this is the open interval `(T(y_ε)_n − 1, T(z_ε)_n + 1)`. Both endpoints
/// are affine in `ε` on `(0, 1/(n+1))`, so two grid values determine them and
/// the limit `ε → 0` is read off exactly.
pub fn forced_coordinate_witness(n: u64, eps_grid: &[Rational]) -> Result<ForcedCoordinate> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if eps_grid.is_empty() {
        return Err(Error::InvalidArgument("empty epsilon grid".into()));
    }
    let t = Rational::new(1, n as i64 + 1);
    let one = Rational::one();
    let mut samples = Vec::with_capacity(eps_grid.len());
    for eps in eps_grid {
        if !eps.is_positive() || eps >= &t {
            return Err(Error::InvalidArgument(format!("epsilon {eps} outside (0, 1/(n+1))")));
        }
        let y = Vector::from_pairs([(n as usize, &one + &t - eps)]);
        let z = Vector::from_pairs([(n as usize, -&one + &t + eps)]);
        let ty = c0_counterexample(&y).get(n as usize);
        let tz = c0_counterexample(&z).get(n as usize);
        samples.push((eps.clone(), &ty - &one, &tz + &one));
    }
    let lower = samples.iter().map(|s| s.1.clone()).max().expect("grid non-empty");
    let upper = samples.iter().map(|s| s.2.clone()).min().expect("grid non-empty");
    if lower >= upper {
        return Err(Error::InvalidArgument(format!(
            "empty intersection ({lower}, {upper}); T is inconsistent"
        )));
    }
    let distinct: BTreeSet<&Rational> = samples.iter().map(|s| &s.0).collect();
    if distinct.len() < 2 {
        return Ok(ForcedCoordinate::Interval { lower, upper });
    }
    let lo_limit = affine_limit(samples.iter().map(|s| (&s.0, &s.1)))?;
    let hi_limit = affine_limit(samples.iter().map(|s| (&s.0, &s.2)))?;
    match (lo_limit, hi_limit) {
        (Some(a), Some(b)) if a == b => Ok(ForcedCoordinate::Point { value: a }),
        _ => Ok(ForcedCoordinate::Interval { lower, upper }),
    }
}

/// Value at 0 of the line through the samples, `None` if they are not collinear.
fn affine_limit<'a>(samples: impl Iterator<Item = (&'a Rational, &'a Rational)>) -> Result<Option<Rational>> {
    let pts: Vec<(&Rational, &Rational)> = samples.collect();
    let (x0, y0) = pts[0];
    let Some(&(x1, y1)) = pts.iter().find(|(x, _)| *x != x0) else {
        return Ok(None);
    };
    let slope = (y1 - y0) / (x1 - x0);
    if pts.iter().any(|(x, y)| &(y0 + &(&slope * &(*x - x0))) != *y) {
        return Ok(None);
    }
    Ok(Some(y0 - &(&slope * x0)))
}

/// Result of probing an opaque map for coordinate-wise structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decomposition {
    Coordinatewise(CoordinateStepIso),
    NotCoordinatewise { witness: Vector, expected: Vector, actual: Vector },
}

/// Recover `σ` and `f_k(λ) = T(λe_{σ(k)})_k` from probes, then validate on mixed vectors.
///
/// `probes` must contain `1`; values in `[0, 1]` become the breakpoints of each
/// recovered `g`, so every true breakpoint has to be among them for the
/// validation to pass.
pub fn decompose_coordinatewise(
    map: &dyn Fn(&Vector) -> Vector,
    d: usize,
    probes: &[Rational],
) -> Result<Decomposition> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let one = Rational::one();
    if !probes.contains(&one) {
        return Err(Error::Ambiguous("probes must include 1 to fix orientation".into()));
    }
    let image_of_zero = map(&Vector::zero());
    if !image_of_zero.is_zero() {
        return Err(Error::InvalidArgument("map must fix 0".into()));
    }
    let single = |k: usize, lambda: &Rational| {
        let v = Vector::from_pairs([(k, lambda.clone())]);
        let img = map(&v);
        (v, img)
    };

    // input coordinate k lands on output coordinate target[k]
    let mut source_of: BTreeMap<usize, usize> = BTreeMap::new();
    for k in 1..=d {
        let (v, img) = single(k, &one);
        let support: Vec<usize> = img.support().collect();
        if support.len() != 1 {
            return Ok(Decomposition::NotCoordinatewise {
                expected: Vector::from_pairs([(k, img.get(k))]),
                witness: v,
                actual: img,
            });
        }
        let i = support[0];
        if i == 0 || i > d {
            return Err(Error::Ambiguous(format!("coordinate {k} leaves the truncation (lands on {i})")));
        }
        if let Some(prev) = source_of.insert(i, k) {
            return Err(Error::Ambiguous(format!(
                "coordinates {prev} and {k} both land on {i}"
            )));
        }
    }

    let mut unit: Vec<Rational> = probes
        .iter()
        .filter(|x| !x.is_negative() && x <= &&one)
        .cloned()
        .chain([Rational::zero(), one.clone()])
        .collect();
    unit.sort();
    unit.dedup();

    let mut maps = BTreeMap::new();
    for (&i, &k) in &source_of {
        let f1 = map(&Vector::from_pairs([(k, one.clone())])).get(i);
        let sign = if f1 == one {
            Sign::Plus
        } else if f1 == -&one {
            Sign::Minus
        } else {
            let (v, img) = single(k, &one);
            return Ok(Decomposition::NotCoordinatewise {
                expected: Vector::from_pairs([(i, one.clone())]),
                witness: v,
                actual: img,
            });
        };
        let mut bps = Vec::with_capacity(unit.len());
        for lambda in &unit {
            let (v, img) = single(k, lambda);
            if img.support().any(|c| c != i) {
                return Ok(Decomposition::NotCoordinatewise {
                    expected: Vector::from_pairs([(i, img.get(i))]),
                    witness: v,
                    actual: img,
                });
            }
            bps.push((lambda.clone(), sign.apply(img.get(i))));
        }
        let g = match StepIsoMap1D::new(bps, sign, Rational::zero()) {
            Ok(g) => g.simplified(),
            Err(_) => {
                let (v, img) = single(k, &unit[1]);
                return Ok(Decomposition::NotCoordinatewise {
                    expected: Vector::from_pairs([(i, unit[1].clone())]),
                    witness: v,
                    actual: img,
                });
            }
        };
        maps.insert(i, g);
    }
    let permutation: BTreeMap<usize, usize> = source_of.clone();
    let candidate = CoordinateStepIso::new(permutation, maps)?;

    for v in validation_grid(d, probes) {
        let expected = apply_coordinatewise(&candidate, &v)?;
        let actual = map(&v);
        if expected != actual {
            return Ok(Decomposition::NotCoordinatewise { witness: v, expected, actual });
        }
    }
    Ok(Decomposition::Coordinatewise(candidate))
}

/// Mixed vectors: probe values with integer shifts spread over all coordinates.
fn validation_grid(d: usize, probes: &[Rational]) -> Vec<Vector> {
    let shifts = [0i64, 1, -1, 2, -3];
    let mut out = Vec::new();
    for (r, _) in probes.iter().enumerate() {
        for (s_idx, _) in shifts.iter().enumerate() {
            out.push(Vector::from_pairs((1..=d).map(|k| {
                let p = &probes[(r * (2 * k + 1) + 3 * k) % probes.len()];
                let s = shifts[(s_idx + k) % shifts.len()];
                (k, p + &Rational::integer(s))
            })));
        }
    }
    for k in 1..=d {
        for p in probes {
            for s in shifts {
                out.push(Vector::from_pairs([(k, p + &Rational::integer(s))]));
            }
        }
    }
    out
}
