//! Ball intersections: strongly extreme points, the two- and four-ball
//! constructions in `L₁(0,1)`, and writing a point of the unit ball as a
//! sum of two unit vectors.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numerics::{distance_cmp, distance_lt, lp_norm_f64, NormSpec, Rational, Vector};
use crate::rng::stream_rng;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Vector,
    pub radius: Rational,
    pub open: bool,
}

impl BallSpec {
    pub fn new(center: Vector, radius: Rational, open: bool) -> Result<Self> {
        if !radius.is_positive() {
            return Err(Error::InvalidArgument(format!("radius {radius} must be positive")));
        }
        Ok(BallSpec { center, radius, open })
    }

    pub fn open(center: Vector, radius: Rational) -> Result<Self> {
        Self::new(center, radius, true)
    }
}

pub fn ball_membership(b: &BallSpec, v: &Vector, norm: &NormSpec) -> Result<bool> {
    if b.open {
        distance_lt(v, &b.center, &b.radius, norm)
    } else {
        Ok(distance_cmp(v, &b.center, &b.radius, norm)? != Ordering::Greater)
    }
}

/// `B°(0,1)` and `B°(2x/(1+δ),1)`: the doubled-radius balls around `0` and `2x`, scaled by `1/(1+δ)`.
pub fn small_intersection_balls(x: &Vector, delta: &Rational) -> Result<(BallSpec, BallSpec)> {
    if !delta.is_positive() {
        return Err(Error::InvalidArgument(format!("delta {delta} must be positive")));
    }
    let scale = Rational::integer(2) / (Rational::one() + delta);
    Ok((
        BallSpec::open(Vector::zero(), Rational::one())?,
        BallSpec::open(x.scale(&scale), Rational::one())?,
    ))
}

/// Sampling summary for the all-ones vector of `ℓ_∞^d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StronglyExtremeReport {
    pub dim: usize,
    pub delta: Rational,
    pub samples: u64,
    /// Samples `y` with `‖1+y‖ < 1+δ` and `‖1−y‖ < 1+δ`.
    pub certificate_hits: u64,
    pub max_certificate_norm: Rational,
    /// Certificate samples with `‖y‖ ≥ δ`.
    pub certificate_violations: u64,
    /// Samples inside both scaled balls.
    pub intersection_hits: u64,
    /// Largest sup-distance from a hit to `1/(1+δ)`; bounded by `δ/(1+δ)`.
    pub max_center_distance: Rational,
    pub center_violations: u64,
    /// Largest sup-distance between two hits (reported only).
    pub max_pair_distance: Rational,
}

impl StronglyExtremeReport {
    pub fn passed(&self) -> bool {
        self.certificate_violations == 0 && self.center_violations == 0
    }
}

fn sup_norm(v: &Vector) -> Rational {
    v.iter().map(|(_, x)| x.abs()).max().unwrap_or_default()
}

/// Exact check, by sampling, that the all-ones vector of `ℓ_∞^d` is strongly
/// extreme with `ε = δ`, and that the two scaled balls meet inside
/// `B(x/(1+δ), δ/(1+δ))`.
pub fn strongly_extreme_probe(dim: usize, delta: &Rational, samples: u64, seed: u64) -> Result<StronglyExtremeReport> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let ones = Vector::from_dense(1, &vec![Rational::one(); dim]);
    let (b0, b1) = small_intersection_balls(&ones, delta)?;
    let norm = NormSpec::LInfinity;
    let one_plus = Rational::one() + delta;
    let center = ones.scale(&one_plus.recip());
    let center_bound = delta / &one_plus;
    let res: i64 = 240;
    // sample coordinates on a grid of mesh (1+δ)/res, slightly past the boundary
    let mesh = &one_plus / &Rational::integer(res);
    let mut rng = stream_rng(seed, 0);
    let mut report = StronglyExtremeReport {
        dim,
        delta: delta.clone(),
        samples,
        certificate_hits: 0,
        max_certificate_norm: Rational::zero(),
        certificate_violations: 0,
        intersection_hits: 0,
        max_center_distance: Rational::zero(),
        center_violations: 0,
        max_pair_distance: Rational::zero(),
    };
    let mut hits: Vec<Vector> = Vec::new();
    for _ in 0..samples {
        let y = Vector::from_pairs((1..=dim).map(|i| (i, &mesh * &Rational::integer(rng.gen_range(-res..=res)))));
        if distance_lt(&(&ones + &y), &Vector::zero(), &one_plus, &norm)?
            && distance_lt(&(&ones - &y), &Vector::zero(), &one_plus, &norm)?
        {
            report.certificate_hits += 1;
            let n = sup_norm(&y);
            if n >= *delta {
                report.certificate_violations += 1;
            }
            report.max_certificate_norm = report.max_certificate_norm.clone().max(n);
        }
        // points of the ball around the centre: c + y·2δ/(1+δ)^2 spreads just past the bound
        let z = &center + &y.scale(&(Rational::integer(2) * delta / (&one_plus * &one_plus)));
        if ball_membership(&b0, &z, &norm)? && ball_membership(&b1, &z, &norm)? {
            report.intersection_hits += 1;
            let d = sup_norm(&(&z - &center));
            if d >= center_bound {
                report.center_violations += 1;
            }
            report.max_center_distance = report.max_center_distance.clone().max(d);
            if hits.len() < 256 {
                hits.push(z);
            }
        }
    }
    for a in 0..hits.len() {
        for b in a + 1..hits.len() {
            let d = sup_norm(&(&hits[a] - &hits[b]));
            report.max_pair_distance = report.max_pair_distance.clone().max(d);
        }
    }
    Ok(report)
}

/// A function on `[0,1)` constant on each cell `[k/m, (k+1)/m)`, `m` even.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "StepFnRaw")]
pub struct StepFn {
    grid_size: usize,
    values: Vec<Rational>,
}

#[derive(Deserialize)]
struct StepFnRaw {
    grid_size: usize,
    values: Vec<Rational>,
}

impl TryFrom<StepFnRaw> for StepFn {
    type Error = Error;
    fn try_from(raw: StepFnRaw) -> Result<Self> {
        if raw.values.len() != raw.grid_size {
            return Err(Error::LengthMismatch { left: raw.grid_size, right: raw.values.len() });
        }
        StepFn::new(raw.values)
    }
}

impl StepFn {
    pub fn new(values: Vec<Rational>) -> Result<Self> {
        let m = values.len();
        if m == 0 || !m.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("grid size {m} must be positive and even")));
        }
        Ok(StepFn { grid_size: m, values })
    }

    pub fn zero(m: usize) -> Result<Self> {
        Self::new(vec![Rational::zero(); m])
    }

    /// `α` on `[0, 1/2]`, `β` on `(1/2, 1]`.
    pub fn chi(alpha: &Rational, beta: &Rational, m: usize) -> Result<Self> {
        Self::new((0..m).map(|k| if k < m / 2 { alpha.clone() } else { beta.clone() }).collect())
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn l1_norm(&self) -> Rational {
        let total: Rational = self.values.iter().map(Rational::abs).sum();
        total / Rational::integer(self.grid_size as i64)
    }

    pub fn scale(&self, c: &Rational) -> StepFn {
        StepFn { grid_size: self.grid_size, values: self.values.iter().map(|v| v * c).collect() }
    }

    fn zip(&self, other: &StepFn, op: impl Fn(&Rational, &Rational) -> Rational) -> Result<StepFn> {
        if self.grid_size != other.grid_size {
            return Err(Error::LengthMismatch { left: self.grid_size, right: other.grid_size });
        }
        Ok(StepFn {
            grid_size: self.grid_size,
            values: self.values.iter().zip(&other.values).map(|(a, b)| op(a, b)).collect(),
        })
    }

    pub fn sub(&self, other: &StepFn) -> Result<StepFn> {
        self.zip(other, |a, b| a - b)
    }

    pub fn add(&self, other: &StepFn) -> Result<StepFn> {
        self.zip(other, |a, b| a + b)
    }

    pub fn l1_distance(&self, other: &StepFn) -> Result<Rational> {
        Ok(self.sub(other)?.l1_norm())
    }

    /// `f·1_[lo/m, hi/m)`.
    pub fn restrict_cells(&self, lo: usize, hi: usize) -> StepFn {
        StepFn {
            grid_size: self.grid_size,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(k, v)| if (lo..hi).contains(&k) { v.clone() } else { Rational::zero() })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoBallWitness {
    pub lambda: Rational,
    pub mu: Rational,
    /// Cell index `k` with `α = k/m`.
    pub split_cell: usize,
    pub g1: StepFn,
    pub g2: StepFn,
}

/// `g₁ = (μ/λ)·f·1_[0,α]`, `g₂ = (μ/λ)·f·1_[α,1]` where `‖f‖ = 2λ` and `α` halves the mass.
///
/// Returns only after checking `‖g₁‖ = ‖g₂‖ = ‖g₁−f‖ = ‖g₂−f‖ = μ` and `‖g₁−g₂‖ = 2μ` exactly.
/// `α` has to fall on a cell boundary.
pub fn l1_two_ball_witness(f: &StepFn, mu: &Rational) -> Result<TwoBallWitness> {
    let lambda = f.l1_norm() / Rational::integer(2);
    if !(lambda.is_positive() && &lambda < mu && mu < &Rational::one()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < lambda < mu < 1, got lambda = {lambda}, mu = {mu}"
        )));
    }
    let m = f.grid_size();
    let target = &lambda * &Rational::integer(m as i64);
    let mut acc = Rational::zero();
    let mut split = None;
    for k in 0..=m {
        if acc == target {
            split = Some(k);
            break;
        }
        if k < m {
            acc = acc + f.values()[k].abs();
        }
    }
    let k = split.ok_or_else(|| {
        Error::InvalidArgument("no cell boundary splits the mass of f evenly".into())
    })?;
    let c = mu / &lambda;
    let g1 = f.restrict_cells(0, k).scale(&c);
    let g2 = f.restrict_cells(k, m).scale(&c);
    let two_mu = mu * &Rational::integer(2);
    let checks = [
        ("|g1|", g1.l1_norm(), mu.clone()),
        ("|g2|", g2.l1_norm(), mu.clone()),
        ("|g1 - f|", g1.l1_distance(f)?, mu.clone()),
        ("|g2 - f|", g2.l1_distance(f)?, mu.clone()),
        ("|g1 - g2|", g1.l1_distance(&g2)?, two_mu),
    ];
    for (name, got, want) in checks {
        if got != want {
            return Err(Error::InvalidArgument(format!("{name} = {got}, expected {want}")));
        }
    }
    Ok(TwoBallWitness { lambda, mu: mu.clone(), split_cell: k, g1, g2 })
}

/// Centres `χ(2−δ,0)`, `χ(−2+δ,0)`, `χ(0,2−δ)`, `χ(0,−2+δ)`.
pub fn four_ball_centers(delta: &Rational, m: usize) -> Result<[StepFn; 4]> {
    check_delta(delta)?;
    let c = Rational::integer(2) - delta;
    let z = Rational::zero();
    Ok([
        StepFn::chi(&c, &z, m)?,
        StepFn::chi(&-&c, &z, m)?,
        StepFn::chi(&z, &c, m)?,
        StepFn::chi(&z, &-&c, m)?,
    ])
}

fn check_delta(delta: &Rational) -> Result<()> {
    if !delta.is_positive() || delta >= &Rational::one() {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 1)")));
    }
    Ok(())
}

/// Exact membership of `f` in all four open unit balls.
pub fn in_four_ball_intersection(f: &StepFn, delta: &Rational) -> Result<bool> {
    let one = Rational::one();
    for c in four_ball_centers(delta, f.grid_size())? {
        if f.l1_distance(&c)? >= one {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourBallReport {
    pub delta: Rational,
    pub grid_size: usize,
    pub samples: u64,
    pub in_intersection: u64,
    pub max_norm: Rational,
    /// Samples in the intersection with `‖f‖ ≥ δ`.
    pub violations: u64,
    pub first_violation: Option<StepFn>,
}

impl FourBallReport {
    pub fn csv_header() -> &'static str {
        "delta,m,samples,in_intersection,max_norm,max_norm_f64,violations"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.12},{}",
            self.delta,
            self.grid_size,
            self.samples,
            self.in_intersection,
            self.max_norm,
            self.max_norm.to_f64(),
            self.violations
        )
    }
}

const PROBE_CHUNK: u64 = 2048;
// sample values are multiples of 1/(den(δ)·PROBE_RESOLUTION)
const PROBE_RESOLUTION: i64 = 4096;

/// Randomly sample step functions, keep those in the four-ball intersection,
/// and record the largest `L₁` norm. Values are integers over a common
/// denominator, so membership is exact integer arithmetic.
pub fn l1_four_ball_probe(delta: &Rational, m: usize, samples: u64, seed: u64) -> Result<FourBallReport> {
    l1_four_ball_probe_with(delta, m, samples, seed, Exec::default())
}

pub fn l1_four_ball_probe_with(
    delta: &Rational,
    m: usize,
    samples: u64,
    seed: u64,
    exec: Exec,
) -> Result<FourBallReport> {
    check_delta(delta)?;
    if m == 0 || !m.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("grid size {m} must be positive and even")));
    }
    let den: i64 = delta
        .denom()
        .try_into()
        .map_err(|_| Error::InvalidArgument("delta denominator too large".into()))?;
    let num: i64 = delta.numer().try_into().expect("delta < 1 has a small numerator");
    let d_units = den * PROBE_RESOLUTION;
    // 2 − δ in units of 1/d_units
    let c = (2 * den - num) * PROBE_RESOLUTION;
    // a half's mass bound δ/2, in units of 1/(m·d_units)
    let half_bound = (num * PROBE_RESOLUTION * m as i64) as f64 / 2.0;
    let mi = m as i64;
    let half = m / 2;

    let chunks = samples.div_ceil(PROBE_CHUNK) as usize;
    let partial = exec.map_range(0..chunks, |chunk| {
        let mut rng = stream_rng(seed, chunk as u64);
        let start = chunk as u64 * PROBE_CHUNK;
        let count = PROBE_CHUNK.min(samples - start);
        let mut hits = 0u64;
        let mut best: i64 = 0;
        let mut violations = 0u64;
        let mut first: Option<Vec<i64>> = None;
        let mut a = vec![0i64; m];
        for _ in 0..count {
            let mode = rng.gen_range(0..3);
            for h in 0..2 {
                let cells = &mut a[h * half..(h + 1) * half];
                let target = rng.gen_range(0.0..1.05) * half_bound;
                fill_half(cells, target, mode, &mut rng);
            }
            let (first_half, second_half) = a.split_at(half);
            let m1: i64 = first_half.iter().map(|x| x.abs()).sum();
            let m2: i64 = second_half.iter().map(|x| x.abs()).sum();
            let inside = |own: &[i64], other_mass: i64, sign: i64| {
                let d: i64 = own.iter().map(|&x| (x - sign * c).abs()).sum();
                d + other_mass < mi * d_units
            };
            let member = inside(first_half, m2, 1)
                && inside(first_half, m2, -1)
                && inside(second_half, m1, 1)
                && inside(second_half, m1, -1);
            if member {
                hits += 1;
                let total = m1 + m2;
                // ‖f‖ = total/(m·d_units) ≥ num/den
                if total * den >= num * mi * d_units {
                    violations += 1;
                    first.get_or_insert_with(|| a.clone());
                }
                best = best.max(total);
            }
        }
        (hits, best, violations, first)
    });

    let mut report = FourBallReport {
        delta: delta.clone(),
        grid_size: m,
        samples,
        in_intersection: 0,
        max_norm: Rational::zero(),
        violations: 0,
        first_violation: None,
    };
    let mut best = 0i64;
    for (hits, b, v, first) in partial {
        report.in_intersection += hits;
        best = best.max(b);
        report.violations += v;
        if report.first_violation.is_none() {
            if let Some(vals) = first {
                let values = vals.iter().map(|&x| Rational::new(x, d_units)).collect();
                report.first_violation = Some(StepFn::new(values)?);
            }
        }
    }
    report.max_norm = Rational::new(best, mi * d_units);
    Ok(report)
}

/// Fill one half with total mass about `target`: signs balanced (mode 0),
/// random (mode 1), or all of one sign (mode 2).
fn fill_half<R: Rng>(cells: &mut [i64], target: f64, mode: u32, rng: &mut R) {
    let weights: Vec<f64> = cells.iter().map(|_| rng.gen_range(0.0..1.0f64).powi(2)).collect();
    let signs: Vec<i64> = match mode {
        0 | 1 => cells.iter().map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect(),
        _ => {
            let s = if rng.gen_bool(0.5) { 1 } else { -1 };
            vec![s; cells.len()]
        }
    };
    let pos: f64 = weights.iter().zip(&signs).filter(|(_, &s)| s > 0).map(|(w, _)| w).sum();
    let neg: f64 = weights.iter().zip(&signs).filter(|(_, &s)| s < 0).map(|(w, _)| w).sum();
    let total = pos + neg;
    for ((cell, w), s) in cells.iter_mut().zip(&weights).zip(&signs) {
        let share = if mode == 0 {
            // equal positive and negative mass
            let side = if *s > 0 { pos } else { neg };
            if side > 0.0 {
                target / 2.0 * w / side
            } else {
                0.0
            }
        } else if total > 0.0 {
            target * w / total
        } else {
            0.0
        };
        *cell = s * share.floor() as i64;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoUnitResult {
    /// `y` with `‖y‖ = 1` and `‖x − y‖ = 1`, within tolerance.
    pub y: Vector,
    pub norm_residual: f64,
    pub distance_residual: f64,
    pub iterations: u32,
}

const TWO_UNIT_MAX_ITERATIONS: u32 = 200;

/// A unit vector `y` at distance 1 from `x` in `ℓ_p^dim`, so `x = y + (x−y)`.
///
/// Walks the unit sphere from `x/‖x‖` to `−x/‖x‖` inside the plane of `x`
/// and the first basis vector not parallel to it, bisecting on the angle.
pub fn two_unit_decomposition(x: &Vector, dim: usize, p: u32, tol: &Rational) -> Result<TwoUnitResult> {
    if dim < 2 {
        return Err(Error::InvalidArgument("dimension must be at least 2".into()));
    }
    if p == 0 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    if !tol.is_positive() {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if x.support().any(|i| i == 0 || i > dim) {
        return Err(Error::InvalidArgument(format!("x must be supported in 1..={dim}")));
    }
    if x.is_zero() {
        return Ok(TwoUnitResult { y: Vector::basis(1), norm_residual: 0.0, distance_residual: 0.0, iterations: 0 });
    }
    let power: Rational = x.iter().map(|(_, v)| v.abs().pow(p)).sum();
    if power >= Rational::one() {
        return Err(Error::InvalidArgument("x must lie in the open unit ball".into()));
    }
    let tol = tol.to_f64();
    let xs = x.to_f64_dense(dim + 1)[1..].to_vec();
    let nx = lp_norm_f64(xs.iter().copied(), p);
    let xhat: Vec<f64> = xs.iter().map(|v| v / nx).collect();
    let j = (1..=dim)
        .find(|&j| x.support().any(|i| i != j))
        .expect("dim >= 2 leaves a direction");
    let y_at = |theta: f64| -> Vec<f64> {
        let (s, c) = theta.sin_cos();
        let w: Vec<f64> = (0..dim)
            .map(|k| c * xhat[k] + if k + 1 == j { s } else { 0.0 })
            .collect();
        let nw = lp_norm_f64(w.iter().copied(), p);
        w.into_iter().map(|v| v / nw).collect()
    };
    let gap = |y: &[f64]| lp_norm_f64(xs.iter().zip(y).map(|(a, b)| a - b), p) - 1.0;

    let (mut lo, mut hi) = (0.0f64, std::f64::consts::PI);
    let mut iterations = 0;
    let mut y = y_at(lo);
    let mut g = gap(&y);
    while g.abs() > tol {
        if iterations >= TWO_UNIT_MAX_ITERATIONS || hi - lo <= f64::EPSILON {
            return Err(Error::NotConverged(format!(
                "bisection stopped at |residual| = {:e} after {iterations} iterations",
                g.abs()
            )));
        }
        let mid = 0.5 * (lo + hi);
        y = y_at(mid);
        g = gap(&y);
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let norm_residual = (lp_norm_f64(y.iter().copied(), p) - 1.0).abs();
    let vec = Vector::from_pairs(
        y.iter()
            .enumerate()
            .map(|(k, v)| (k + 1, Rational::from_f64(*v).expect("finite coordinate"))),
    );
    Ok(TwoUnitResult { y: vec, norm_residual, distance_residual: g.abs(), iterations })
}
