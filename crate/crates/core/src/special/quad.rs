//! Globally adaptive quadrature with singularity grading and power-law tails.
//!
//! Each panel is integrated with the 10-point Gauss / 21-point Kronrod pair;
//! the panel with the largest error estimate is bisected until the total
//! estimate meets the tolerance or the subdivision budget runs out. Listed
//! singular points become panel boundaries. When the local exponent `alpha`
//! of an endpoint singularity `|x - s|^alpha` is known, the half-panel next
//! to it is mapped by `x = s + w t^beta` with `beta = 1/(1 + alpha)`, which
//! turns the leading singular term into a constant. Semi-infinite ranges
//! are cut at `tail_cut`; beyond it a known decay `x^-p` is integrated
//! through `x = T s^(-1/(p-1))`, which is exact for a pure power law.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_649_172_510,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// A point where the integrand is singular or not smooth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPoint {
    pub at: f64,
    /// Local exponent `alpha` of `|x - at|^alpha`, when known.
    pub exponent: Option<f64>,
}

impl SingularPoint {
    pub fn new(at: f64) -> Self {
        Self { at, exponent: None }
    }

    pub fn with_exponent(at: f64, exponent: f64) -> Self {
        Self {
            at,
            exponent: Some(exponent),
        }
    }

    fn grading(&self) -> f64 {
        match self.exponent {
            Some(a) if a > -1.0 => (1.0 / (1.0 + a)).clamp(1.0, 16.0),
            Some(_) => 16.0,
            None => 1.0,
        }
    }
}

impl From<f64> for SingularPoint {
    fn from(at: f64) -> Self {
        SingularPoint::new(at)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailExtrapolation {
    /// Drop everything beyond `tail_cut`.
    None,
    /// Integrand decays like `|x|^-exponent` (`exponent > 1`).
    PowerLaw { exponent: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub singular_points: Vec<SingularPoint>,
    pub tail_cut: f64,
    pub tail_extrapolation: TailExtrapolation,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 20_000,
            singular_points: Vec::new(),
            tail_cut: 1e3,
            tail_extrapolation: TailExtrapolation::None,
        }
    }
}

impl QuadratureConfig {
    pub fn tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn singular(mut self, points: impl IntoIterator<Item = SingularPoint>) -> Self {
        self.singular_points.extend(points);
        self
    }

    pub fn budget(mut self, max_subdivisions: usize) -> Self {
        self.max_subdivisions = max_subdivisions;
        self
    }

    pub fn tail(mut self, tail_cut: f64, tail: TailExtrapolation) -> Self {
        self.tail_cut = tail_cut;
        self.tail_extrapolation = tail;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::param("tolerance", "tolerances must be positive"));
        }
        if self.max_subdivisions < 16 {
            return Err(Error::param("max_subdivisions", "must be at least 16"));
        }
        if !(self.tail_cut > 0.0) {
            return Err(Error::param("tail_cut", "must be positive"));
        }
        if let TailExtrapolation::PowerLaw { exponent } = self.tail_extrapolation {
            if !(exponent > 1.0) {
                return Err(Error::param("tail_extrapolation", "decay exponent must exceed 1"));
            }
        }
        Ok(())
    }

    pub(crate) fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err_estimate: f64,
    pub subdivisions_used: usize,
    pub converged: bool,
}

impl QuadResult {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            abs_err_estimate: 0.0,
            subdivisions_used: 0,
            converged: true,
        }
    }

    /// Combine results of separately computed pieces of one integral.
    pub fn sum(parts: &[QuadResult]) -> Self {
        Self {
            value: parts.iter().map(|p| p.value).sum(),
            abs_err_estimate: parts.iter().map(|p| p.abs_err_estimate).sum(),
            subdivisions_used: parts.iter().map(|p| p.subdivisions_used).sum(),
            converged: parts.iter().all(|p| p.converged),
        }
    }

    /// [`QuadResult::sum`] where the pieces count as converged when the
    /// combined error meets the tolerance of `cfg` for the combined value.
    pub fn sum_within(parts: &[QuadResult], cfg: &QuadratureConfig) -> Self {
        let mut total = Self::sum(parts);
        total.converged |= total.abs_err_estimate <= cfg.target(total.value);
        total
    }

    pub fn scale(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            abs_err_estimate: self.abs_err_estimate * factor.abs(),
            ..self
        }
    }

    /// Error if the result did not converge.
    pub fn require(self, what: &str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Regime(format!(
                "{what}: quadrature did not converge (value {:.6e}, error {:.2e}, {} subdivisions)",
                self.value, self.abs_err_estimate, self.subdivisions_used
            )))
        }
    }
}

/// A sample point as `anchor + offset`, where `anchor` is a panel end and
/// the offset is exact. Integrands that are singular at a listed point
/// read their distance to it through [`Node::from`] and keep full relative
/// precision however close the sample gets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub x: f64,
    pub anchor: f64,
    pub offset: f64,
}

impl Node {
    /// `x - p`, exact when `p` is the anchor.
    #[inline]
    pub fn from(&self, p: f64) -> f64 {
        if self.anchor == p {
            self.offset
        } else {
            (self.anchor - p) + self.offset
        }
    }
}

/// Change of variables from `t in [0, 1]` to `x`.
#[derive(Debug, Clone, Copy)]
enum Map {
    /// `x = from + width t`.
    Affine { from: f64, width: f64 },
    /// `x = s + w t^beta`, graded towards `s`.
    Graded { s: f64, w: f64, beta: f64 },
    /// `x = sign T t^(-1/(p-1))` for the tail beyond `T`.
    Tail { cut: f64, p: f64, sign: f64 },
}

impl Map {
    /// Point and absolute Jacobian at `t`.
    #[inline]
    fn eval(&self, t: f64) -> (Node, f64) {
        let node = |anchor: f64, offset: f64| Node {
            x: anchor + offset,
            anchor,
            offset,
        };
        match *self {
            Map::Affine { from, width } => (node(from, width * t), width.abs()),
            Map::Graded { s, w, beta } => {
                if beta == 1.0 {
                    (node(s, w * t), w.abs())
                } else {
                    let tb1 = t.powf(beta - 1.0);
                    (node(s, w * tb1 * t), (w * beta * tb1).abs())
                }
            }
            Map::Tail { cut, p, sign } => {
                let q = 1.0 / (p - 1.0);
                let xs = cut * t.powf(-q);
                (node(0.0, sign * xs), q * xs / t)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    map_index: usize,
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct Integrator<'a, F> {
    f: F,
    maps: Vec<Map>,
    /// Points where a non-finite sample is read as an integrable blow-up.
    singular: &'a [f64],
}

impl<F: Fn(Node) -> f64> Integrator<'_, F> {
    fn sample(&self, map: &Map, t: f64) -> Result<f64> {
        let (node, jac) = map.eval(t);
        if jac == 0.0 {
            return Ok(0.0);
        }
        let x = node.x;
        let v = (self.f)(node);
        if v.is_finite() {
            let out = v * jac;
            return Ok(if out.is_finite() { out } else { 0.0 });
        }
        let near_listed = self
            .singular
            .iter()
            .any(|&s| node.from(s).abs() <= (8.0 * f64::EPSILON * s.abs()).max(1e-300));
        if near_listed {
            Ok(0.0)
        } else {
            Err(Error::NonFiniteIntegrand { x, value: v })
        }
    }

    fn kronrod(&self, map_index: usize, lo: f64, hi: f64) -> Result<Panel> {
        let map = self.maps[map_index];
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let fc = self.sample(&map, center)?;
        let mut res_k = fc * WGK[10];
        let mut res_g = 0.0;
        let mut res_abs = res_k.abs();
        let mut fv = [0.0f64; 21];
        fv[20] = fc;
        for j in 0..10 {
            let dx = half * XGK[j];
            let f1 = self.sample(&map, center - dx)?;
            let f2 = self.sample(&map, center + dx)?;
            fv[2 * j] = f1;
            fv[2 * j + 1] = f2;
            res_k += WGK[j] * (f1 + f2);
            res_abs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                res_g += WG[j / 2] * (f1 + f2);
            }
        }
        let mean = res_k * 0.5;
        let mut res_asc = WGK[10] * (fc - mean).abs();
        for j in 0..10 {
            res_asc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
        }
        let value = res_k * half;
        let res_abs = res_abs * half.abs();
        let res_asc = res_asc * half.abs();
        let mut error = ((res_k - res_g) * half).abs();
        if res_asc != 0.0 && error != 0.0 {
            error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
        }
        if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            error = error.max(50.0 * f64::EPSILON * res_abs);
        }
        Ok(Panel {
            map_index,
            lo,
            hi,
            value,
            error,
        })
    }
}

/// Ratio of the geometric break points laid out around tight clusters.
const CLUSTER_RATIO: f64 = 8.0;

/// Adds plain break points at distances `d 8^k` beyond a pair of points
/// `d` apart when the next gap is much longer, so that the structure at
/// scale `d` is sampled by the first rule applied to that gap.
fn spread_clusters(points: Vec<SingularPoint>) -> Vec<SingularPoint> {
    let gaps: Vec<f64> = points.windows(2).map(|w| w[1].at - w[0].at).collect();
    let mut out = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        out.push(*p);
        let Some(&gap) = gaps.get(i) else { continue };
        let from_left = if i > 0 { gaps[i - 1] } else { f64::INFINITY };
        let from_right = gaps.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let mut inner = Vec::new();
        let mut step = from_left * CLUSTER_RATIO;
        while step < 0.5 * gap {
            inner.push(SingularPoint::new(p.at + step));
            step *= CLUSTER_RATIO;
        }
        let mut step = from_right * CLUSTER_RATIO;
        let mut outer = Vec::new();
        let right = points[i + 1].at;
        while step < 0.5 * gap {
            outer.push(SingularPoint::new(right - step));
            step *= CLUSTER_RATIO;
        }
        out.extend(inner);
        out.extend(outer.into_iter().rev());
    }
    out
}

fn build_maps(a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Vec<Map>> {
    let mut maps = Vec::new();
    let (mut lo, mut hi) = (a, b);
    let power = match cfg.tail_extrapolation {
        TailExtrapolation::PowerLaw { exponent } => Some(exponent),
        TailExtrapolation::None => None,
    };
    if a == f64::NEG_INFINITY {
        lo = -cfg.tail_cut;
        if let Some(p) = power {
            maps.push(Map::Tail {
                cut: cfg.tail_cut,
                p,
                sign: -1.0,
            });
        }
    }
    if b == f64::INFINITY {
        hi = cfg.tail_cut;
        if let Some(p) = power {
            maps.push(Map::Tail {
                cut: cfg.tail_cut,
                p,
                sign: 1.0,
            });
        }
    }
    if lo == hi && !maps.is_empty() {
        // Only the tail remains.
        return Ok(maps);
    }
    if !(lo < hi) {
        return Err(Error::param("interval", format!("empty finite part [{lo}, {hi}]")));
    }

    let mut points: Vec<SingularPoint> = vec![SingularPoint::new(lo), SingularPoint::new(hi)];
    for sp in &cfg.singular_points {
        if sp.at >= lo && sp.at <= hi {
            points.push(*sp);
        }
    }
    points.sort_by(|x, y| x.at.total_cmp(&y.at));
    // Merge coincident points keeping the strongest grading.
    let mut merged: Vec<SingularPoint> = Vec::with_capacity(points.len());
    for p in points {
        match merged.last_mut() {
            Some(last) if last.at == p.at => {
                if p.grading() > last.grading() {
                    *last = p;
                }
            }
            _ => merged.push(p),
        }
    }

    let merged = spread_clusters(merged);

    for pair in merged.windows(2) {
        let (l, r) = (pair[0], pair[1]);
        let (gl, gr) = (l.grading(), r.grading());
        match (gl > 1.0, gr > 1.0) {
            (false, false) => maps.push(Map::Affine {
                from: l.at,
                width: r.at - l.at,
            }),
            (true, false) => maps.push(Map::Graded {
                s: l.at,
                w: r.at - l.at,
                beta: gl,
            }),
            (false, true) => maps.push(Map::Graded {
                s: r.at,
                w: l.at - r.at,
                beta: gr,
            }),
            (true, true) => {
                let mid = 0.5 * (l.at + r.at);
                maps.push(Map::Graded {
                    s: l.at,
                    w: mid - l.at,
                    beta: gl,
                });
                maps.push(Map::Graded {
                    s: r.at,
                    w: mid - r.at,
                    beta: gr,
                });
            }
        }
    }
    Ok(maps)
}

/// Integrate `f` over `[a, b]`; either end may be infinite.
///
/// A non-finite sample returns [`Error::NonFiniteIntegrand`] unless it
/// falls on a listed singular point. Running out of budget is not an
/// error: the best estimate comes back with `converged = false`.
pub fn adaptive_integrate<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    adaptive_integrate_nodes(|n: Node| f(n.x), a, b, cfg)
}

/// [`adaptive_integrate`] for integrands that take the sample as a
/// [`Node`], to evaluate distances to singular points exactly.
pub fn adaptive_integrate_nodes<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadResult>
where
    F: Fn(Node) -> f64,
{
    cfg.validate()?;
    if a.is_nan() || b.is_nan() || !(a < b) {
        return Err(Error::param("interval", format!("need a < b, got [{a}, {b}]")));
    }
    let maps = build_maps(a, b, cfg)?;
    let singular: Vec<f64> = cfg.singular_points.iter().map(|s| s.at).collect();
    let integ = Integrator {
        f,
        maps,
        singular: &singular,
    };

    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for i in 0..integ.maps.len() {
        let p = integ.kronrod(i, 0.0, 1.0)?;
        total += p.value;
        err += p.error;
        heap.push(p);
    }
    let mut subdivisions = heap.len();

    while err > cfg.target(total) && subdivisions < cfg.max_subdivisions {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) || (worst.hi - worst.lo) < 1e-14 * worst.hi.abs() {
            // Cannot split further; keep it and stop refining.
            heap.push(worst);
            break;
        }
        let left = integ.kronrod(worst.map_index, worst.lo, mid)?;
        let right = integ.kronrod(worst.map_index, mid, worst.hi)?;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }

    // Re-sum to shed the drift of the running updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let abs_err: f64 = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value,
        abs_err_estimate: abs_err,
        subdivisions_used: subdivisions,
        converged: abs_err <= cfg.target(value),
    })
}
