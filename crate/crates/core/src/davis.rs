//! A renorming of `ℓ₂` truncated to coordinates `0..=n`.
//!
//! The unit ball `B′` is the closed convex hull of `F ∪ −F` together with the
//! slab of the sphere `{‖y‖₂ = 1, |y₀| ≤ 1/10}`, where
//! `F = {e₀ + e_k/(2k)} ∪ {e₀ − e_k/(2k+1)}`.
//!
//! The hull of the sphere slab is `C = {‖y‖₂ ≤ 1, |y₀| ≤ 1/10}`: `C` is convex
//! and contains the slab, and any point of `C` lies on a segment between two
//! slab points (move along a direction orthogonal to `e₀` until `‖·‖₂ = 1`).
//! Its gauge is `h(y) = max(‖y‖₂, 10|y₀|)`.
//!
//! For symmetric convex `A`, `C` the gauge of `conv(A ∪ C)` is
//! `inf{s + t : x ∈ sA + tC}`; with `A = conv(F ∪ −F)` this becomes
//!
//! ```text
//! γ(x) = min_α  h(x − Fα) + ‖α‖₁
//! ```
//!
//! which is what [`gauge`] minimises. Every objective value is an upper bound
//! on `γ`. Lower bounds come from the polar: for any `w`,
//! `γ(x) ≥ ⟨w, x⟩ / σ(w)` with `σ(w) = max(σ_C(w), maxᵢ |⟨w, fᵢ⟩|)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numerics::{Rational, Vector};
use crate::rng::stream_rng;

const SLAB: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct DavisModel {
    truncation: usize,
    f_points: Vec<Vector>,
}

/// `[e₀+e₁/2, e₀−e₁/3, e₀+e₂/4, e₀−e₂/5, …]` up to `k = n`.
pub fn build_f(n: usize) -> Result<Vec<Vector>> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(2 * n);
    for k in 1..=n {
        let k64 = k as i64;
        out.push(Vector::from_pairs([(0, Rational::one()), (k, Rational::new(1, 2 * k64))]));
        out.push(Vector::from_pairs([(0, Rational::one()), (k, Rational::new(-1, 2 * k64 + 1))]));
    }
    Ok(out)
}

impl DavisModel {
    pub fn new(truncation: usize) -> Result<Self> {
        Ok(DavisModel { truncation, f_points: build_f(truncation)? })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn f_points(&self) -> &[Vector] {
        &self.f_points
    }

    /// Coordinates `0..=n`.
    pub fn dim(&self) -> usize {
        self.truncation + 1
    }

    pub fn atom_count(&self) -> usize {
        2 * self.truncation
    }

    pub fn f_label(&self, i: usize) -> String {
        let k = i / 2 + 1;
        if i.is_multiple_of(2) {
            format!("e0+e{k}/{}", 2 * k)
        } else {
            format!("e0-e{k}/{}", 2 * k + 1)
        }
    }

    fn dense(&self, x: &Vector) -> Result<Vec<f64>> {
        if let Some(i) = x.support().find(|&i| i > self.truncation) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {i} is outside the truncation 0..={}",
                self.truncation
            )));
        }
        Ok(x.to_f64_dense(self.dim()))
    }

    /// `Fα`.
    fn combine(&self, alpha: &[f64], out: &mut [f64]) {
        out[0] = alpha.iter().sum();
        for k in 1..=self.truncation {
            let kf = k as f64;
            out[k] = alpha[2 * k - 2] / (2.0 * kf) - alpha[2 * k - 1] / (2.0 * kf + 1.0);
        }
    }

    /// `Fᵀw`.
    fn pair(&self, w: &[f64], out: &mut [f64]) {
        for k in 1..=self.truncation {
            let kf = k as f64;
            out[2 * k - 2] = w[0] + w[k] / (2.0 * kf);
            out[2 * k - 1] = w[0] - w[k] / (2.0 * kf + 1.0);
        }
    }

    /// Support function of `B′`.
    pub fn sigma(&self, w: &[f64]) -> f64 {
        let mut fw = vec![0.0; self.atom_count()];
        self.pair(w, &mut fw);
        let atoms = fw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        atoms.max(sigma_slab(w))
    }

    /// `⟨w, x⟩ / σ(w)`, or 0 when `w` is useless.
    pub fn polar_bound(&self, w: &[f64], x: &[f64]) -> f64 {
        let s = self.sigma(w);
        if s <= 0.0 || !s.is_finite() {
            return 0.0;
        }
        (dot(w, x) / s).max(0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Gauge of the slab hull.
pub fn slab_gauge(y: &[f64]) -> f64 {
    norm2(y).max(10.0 * y[0].abs())
}

/// Support function of the slab hull.
fn sigma_slab(w: &[f64]) -> f64 {
    let n = norm2(w);
    if w[0].abs() <= SLAB * n {
        n
    } else {
        let rest = norm2(&w[1..]);
        SLAB * w[0].abs() + (1.0 - SLAB * SLAB).sqrt() * rest
    }
}

/// A subgradient of [`slab_gauge`] at `z`.
fn slab_subgradient(z: &[f64], out: &mut [f64]) {
    let n = norm2(z);
    out.iter_mut().for_each(|v| *v = 0.0);
    if n == 0.0 {
        return;
    }
    if n >= 10.0 * z[0].abs() {
        for (o, v) in out.iter_mut().zip(z) {
            *o = v / n;
        }
    } else {
        out[0] = 10.0 * z[0].signum();
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaugeOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for GaugeOptions {
    fn default() -> Self {
        GaugeOptions { restarts: 20, iterations: 10_000, seed: 0 }
    }
}

/// Certificate for a gauge evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeResult {
    /// Best objective found; an upper bound on `γ(x)`.
    pub value: f64,
    /// Best polar lower bound found.
    pub lower: f64,
    /// `α` attaining `value`.
    pub alpha: Vec<f64>,
    /// `h(x − Fα)`, the slab part of the certificate.
    pub slab_part: f64,
    /// Dual vector attaining `lower`.
    pub dual: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl GaugeResult {
    pub fn gap(&self) -> f64 {
        self.value - self.lower
    }
}

pub fn gauge(x: &Vector, model: &DavisModel, tol: &Rational) -> Result<GaugeResult> {
    gauge_with(x, model, tol, &GaugeOptions::default())
}

pub fn gauge_with(x: &Vector, model: &DavisModel, tol: &Rational, opts: &GaugeOptions) -> Result<GaugeResult> {
    if !tol.is_positive() {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let xd = model.dense(x)?;
    Ok(gauge_dense(&xd, model, tol.to_f64(), opts))
}

struct Solver<'m> {
    model: &'m DavisModel,
    x: Vec<f64>,
    best_value: f64,
    best_alpha: Vec<f64>,
    best_lower: f64,
    best_dual: Vec<f64>,
    z: Vec<f64>,
    w: Vec<f64>,
    fw: Vec<f64>,
}

impl<'m> Solver<'m> {
    fn objective(&mut self, alpha: &[f64]) -> f64 {
        self.model.combine(alpha, &mut self.z);
        for (zi, xi) in self.z.iter_mut().zip(&self.x) {
            *zi = xi - *zi;
        }
        slab_gauge(&self.z) + alpha.iter().map(|a| a.abs()).sum::<f64>()
    }

    fn offer_primal(&mut self, alpha: &[f64]) -> f64 {
        let v = self.objective(alpha);
        if v < self.best_value {
            self.best_value = v;
            self.best_alpha.copy_from_slice(alpha);
        }
        v
    }

    fn offer_dual(&mut self, w: &[f64]) {
        let b = self.model.polar_bound(w, &self.x);
        if b > self.best_lower {
            self.best_lower = b;
            self.best_dual.copy_from_slice(w);
        }
    }

    /// Dual guesses that do not depend on the iterates.
    fn seed_duals(&mut self) {
        let d = self.x.len();
        let mut w = self.x.clone();
        self.offer_dual(&w);
        let rest = norm2(&self.x[1..]);
        let sign0 = if self.x[0] < 0.0 { -1.0 } else { 1.0 };
        for step in 0..=80 {
            let beta = step as f64 * 0.05;
            w[0] = sign0;
            for (wi, xi) in w[1..d].iter_mut().zip(&self.x[1..d]) {
                *wi = if rest > 0.0 { beta * xi / rest } else { 0.0 };
            }
            self.offer_dual(&w);
        }
    }

    fn gap_closed(&self, tol: f64) -> bool {
        self.best_value - self.best_lower <= tol
    }
}

/// Soft thresholding, the proximal map of `η‖·‖₁`.
fn shrink(v: f64, eta: f64) -> f64 {
    if v > eta {
        v - eta
    } else if v < -eta {
        v + eta
    } else {
        0.0
    }
}

pub fn gauge_dense(x: &[f64], model: &DavisModel, tol: f64, opts: &GaugeOptions) -> GaugeResult {
    let m = model.atom_count();
    let d = model.dim();
    if x.iter().all(|v| *v == 0.0) {
        return GaugeResult {
            value: 0.0,
            lower: 0.0,
            alpha: vec![0.0; m],
            slab_part: 0.0,
            dual: vec![0.0; d],
            converged: true,
            iterations: 0,
        };
    }
    let mut s = Solver {
        model,
        x: x.to_vec(),
        best_value: f64::INFINITY,
        best_alpha: vec![0.0; m],
        best_lower: 0.0,
        best_dual: vec![0.0; d],
        z: vec![0.0; d],
        w: vec![0.0; d],
        fw: vec![0.0; m],
    };
    s.seed_duals();

    // starting points: α = 0, the split x₀e₀ = x₀(2/5·f₁ + 3/5·f₂), then the best-aligned atoms
    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; m]];
    let mut split = vec![0.0; m];
    split[0] = 0.4 * x[0];
    split[1] = 0.6 * x[0];
    starts.push(split);
    let mut fx = vec![0.0; m];
    model.pair(x, &mut fx);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| fx[b].abs().total_cmp(&fx[a].abs()).then(a.cmp(&b)));
    for &i in order.iter().take(opts.restarts.saturating_sub(starts.len()) / 2) {
        let fi_sq = model.f_points[i].iter().map(|(_, v)| v.to_f64().powi(2)).sum::<f64>();
        let mut a = vec![0.0; m];
        a[i] = fx[i] / fi_sq;
        starts.push(a);
    }
    let mut rng = stream_rng(opts.seed, 0xDA7);
    let scale = norm2(x);
    while starts.len() < opts.restarts.max(1) {
        starts.push((0..m).map(|_| rng.gen_range(-scale..scale)).collect());
    }
    for a in &starts {
        s.offer_primal(a);
    }

    let check_every = 250usize;
    let mut total_iterations = 0;
    let mut avg_w = vec![0.0; d];
    'restarts: for start in &starts {
        if s.gap_closed(tol) {
            break;
        }
        let mut alpha = start.clone();
        let eta0 = 0.5 * scale.max(1e-12) / (m as f64).sqrt();
        avg_w.iter_mut().for_each(|v| *v = 0.0);
        let mut weight = 0.0;
        for t in 0..opts.iterations {
            total_iterations += 1;
            s.offer_primal(&alpha);
            // s.z now holds x − Fα
            let z = s.z.clone();
            slab_subgradient(&z, &mut s.w);
            let eta = eta0 / ((t + 1) as f64).sqrt();
            for (a, w) in avg_w.iter_mut().zip(&s.w) {
                *a += eta * w;
            }
            weight += eta;
            model.pair(&s.w, &mut s.fw);
            for (a, g) in alpha.iter_mut().zip(&s.fw) {
                *a = shrink(*a + eta * g, eta);
            }
            if t % check_every == 0 {
                let w = s.w.clone();
                s.offer_dual(&w);
                if weight > 0.0 {
                    let avg: Vec<f64> = avg_w.iter().map(|v| v / weight).collect();
                    s.offer_dual(&avg);
                }
                if s.gap_closed(tol) {
                    break 'restarts;
                }
            }
        }
    }
    let value = s.best_value;
    let alpha = s.best_alpha.clone();
    let slab_part = {
        let a = alpha.clone();
        s.objective(&a) - a.iter().map(|v| v.abs()).sum::<f64>()
    };
    GaugeResult {
        value,
        lower: s.best_lower.min(value),
        converged: value - s.best_lower <= tol,
        alpha,
        slab_part,
        dual: s.best_dual,
        iterations: total_iterations,
    }
}

/// Best polar lower bound over a grid of dual vectors in the span of `e₀` and
/// the support of `x`, with at most about `budget` grid points.
pub fn dual_lower_bound(x: &Vector, model: &DavisModel, budget: usize) -> Result<f64> {
    let xd = model.dense(x)?;
    let mut coords: Vec<usize> = vec![0];
    coords.extend(x.support().filter(|&i| i != 0));
    let k = coords.len() as u32;
    let mut r = 1i64;
    while ((2 * (r + 1) + 1) as f64).powi(k as i32) <= budget as f64 {
        r += 1;
    }
    let side = (2 * r + 1) as usize;
    let total = side.pow(k);
    let mut best = 0.0f64;
    let mut w = vec![0.0; model.dim()];
    for code in 0..total {
        let mut c = code;
        for &i in &coords {
            w[i] = (c % side) as f64 - r as f64;
            c /= side;
        }
        best = best.max(model.polar_bound(&w, &xd));
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub norm2: f64,
    pub gamma_upper: f64,
    pub gamma_lower: f64,
    /// `(2/3)‖x‖₂`.
    pub lower_bound: f64,
    /// `2‖x‖₂`.
    pub upper_bound: f64,
    /// `|x₀| + ‖x − x₀e₀‖₂`, from `γ(e₀) ≤ 1` and `γ(y) = ‖y‖₂` when `y₀ = 0`.
    pub decomposition_bound: f64,
    pub passed: bool,
}

/// `(2/3)‖x‖₂ ≤ γ(x) ≤ 2‖x‖₂` within `tol`.
pub fn sandwich_check(x: &Vector, model: &DavisModel, tol: &Rational) -> Result<SandwichReport> {
    sandwich_check_with(x, model, tol, &GaugeOptions::default())
}

pub fn sandwich_check_with(
    x: &Vector,
    model: &DavisModel,
    tol: &Rational,
    opts: &GaugeOptions,
) -> Result<SandwichReport> {
    let g = gauge_with(x, model, tol, opts)?;
    let xd = model.dense(x)?;
    let t = tol.to_f64();
    let n2 = norm2(&xd);
    let decomposition_bound = xd[0].abs() + norm2(&xd[1..]);
    let lower_bound = 2.0 / 3.0 * n2;
    let upper_bound = 2.0 * n2;
    let passed = lower_bound - t <= g.value
        && g.value <= upper_bound + t
        && g.lower <= upper_bound + t
        && decomposition_bound <= upper_bound + t
        && g.value <= decomposition_bound + t;
    Ok(SandwichReport {
        norm2: n2,
        gamma_upper: g.value,
        gamma_lower: g.lower,
        lower_bound,
        upper_bound,
        decomposition_bound,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearestRow {
    pub label: String,
    pub nearest: String,
    /// Upper bound on the smallest gauge distance to another extreme point.
    pub gamma_min: f64,
    /// Certified lower bound for that same pair.
    pub gamma_min_lower: f64,
    /// `γ(f − partner)`, the point of `F ∪ −F` on the same axis.
    pub partner_gamma: f64,
    pub partner_expected: f64,
    /// Smallest Euclidean distance to another extreme point (comparison only).
    pub l2_min: f64,
    pub isolated: bool,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetOptions {
    /// Angles per coordinate plane.
    pub angles: usize,
}

impl Default for NetOptions {
    fn default() -> Self {
        NetOptions { angles: 8 }
    }
}

struct Candidate {
    label: String,
    point: Vec<f64>,
}

fn extreme_candidates(model: &DavisModel, net: &NetOptions) -> Vec<Candidate> {
    let d = model.dim();
    let mut out = Vec::new();
    for sign in [1.0, -1.0] {
        for (i, f) in model.f_points.iter().enumerate() {
            let label = if sign > 0.0 { model.f_label(i) } else { format!("-({})", model.f_label(i)) };
            let point = f.to_f64_dense(d).into_iter().map(|v| sign * v).collect();
            out.push(Candidate { label, point });
        }
    }
    let n = model.truncation;
    for y0 in [0.0, 0.05, -0.05, 0.1, -0.1] {
        let radius = (1.0f64 - y0 * y0).sqrt();
        for i in 1..=n {
            for j in i + 1..=n.max(i + 1) {
                for a in 0..net.angles.max(1) {
                    let theta = std::f64::consts::TAU * a as f64 / net.angles.max(1) as f64;
                    let mut p = vec![0.0; d];
                    p[0] = y0;
                    p[i] = radius * theta.cos();
                    if j <= n {
                        p[j] = radius * theta.sin();
                    } else if theta.sin().abs() > 1e-12 {
                        continue;
                    }
                    out.push(Candidate { label: format!("net[{y0},{i},{j},{a}]"), point: p });
                }
            }
        }
    }
    out
}

/// For each point of `F ∪ −F`, the smallest gauge distance to another
/// extreme point among `F ∪ −F` and a net of the sphere slab.
pub fn nearest_extreme_distances(
    model: &DavisModel,
    tol: &Rational,
    net: &NetOptions,
    opts: &GaugeOptions,
    exec: Exec,
) -> Result<Vec<NearestRow>> {
    if model.truncation < 2 {
        return Err(Error::InvalidArgument("truncation must be at least 2".into()));
    }
    if !tol.is_positive() {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let t = tol.to_f64();
    let cands = extreme_candidates(model, net);
    let rows = 2 * model.atom_count();
    let half = Rational::new(1, 2).to_f64();
    Ok(exec.map_range(0..rows, |r| {
        let me = &cands[r];
        let partner = if r % 2 == 0 { r + 1 } else { r - 1 };
        let k = (r % model.atom_count()) / 2 + 1;
        let partner_expected = 1.0 / (2.0 * k as f64) + 1.0 / (2.0 * k as f64 + 1.0);
        let diff = |c: &Candidate| -> Vec<f64> { me.point.iter().zip(&c.point).map(|(a, b)| a - b).collect() };

        let mut order: Vec<(f64, f64, usize)> = cands
            .iter()
            .enumerate()
            .filter(|(c, _)| *c != r)
            .map(|(c, cand)| {
                let d = diff(cand);
                let n2 = norm2(&d);
                let lb = model.polar_bound(&d, &d).max(2.0 / 3.0 * n2);
                (lb, n2, c)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        let l2_min = order.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);

        let partner_result = gauge_dense(&diff(&cands[partner]), model, t, opts);
        let mut best = (partner_result.value, partner_result.lower, partner);
        let mut evaluations = 1;
        for &(lb, _, c) in &order {
            if lb >= best.0 {
                break;
            }
            if c == partner {
                continue;
            }
            let g = gauge_dense(&diff(&cands[c]), model, t, opts);
            evaluations += 1;
            if g.value < best.0 {
                best = (g.value, g.lower, c);
            }
        }
        NearestRow {
            label: me.label.clone(),
            nearest: cands[best.2].label.clone(),
            gamma_min: best.0,
            gamma_min_lower: best.1,
            partner_gamma: partner_result.value,
            partner_expected,
            l2_min,
            isolated: best.0 > half,
            evaluations,
        }
    }))
}

pub fn nearest_table_csv(rows: &[NearestRow]) -> String {
    let mut out =
        String::from("label,nearest,gamma_min,gamma_min_lower,partner_gamma,partner_expected,l2_min,isolated\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.9},{:.9},{:.9},{:.9},{:.9},{}\n",
            r.label, r.nearest, r.gamma_min, r.gamma_min_lower, r.partner_gamma, r.partner_expected, r.l2_min, r.isolated
        ));
    }
    out
}
