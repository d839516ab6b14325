//! The one-step increment machinery behind the pre-image asymptotics.
//!
//! For k >= 2 the increment of 1/x^{a0} along a backward pass is squeezed by
//!
//!   A_k(a) = r0 b0(k)^{a - a0} - (1+a0)/2 r0 b1(k)^{2a - a0},
//!
//! with r0 = a0 2^{a0} and bases b_i(k) = 2 c_k(a_i) / k^{1/a_i} taken from
//! the constant-path sequences at the interval endpoints (A_1 = 0). Averaged
//! over the law and summed, (log l)^q / l * sum_k E A_k tends to the
//! signature constant c, which in turn pins the sharp decay of x_l along
//! almost every path. This module evaluates those sums, the matched
//! refinement used for lower bounds, the Hoeffding deviation bound for the
//! centered sums, and the two slow-sum asymptotics they lean on.

use crate::error::{LabError, Result};
use crate::map::MapParam;
use crate::noise::{DistKind, NoisePath, ParamDistribution, Signature};
use crate::par;
use crate::preimages;
use crate::rng;

/// Everything fixed about A_k once the law and the index are chosen.
#[derive(Debug, Clone)]
pub struct AkSpec {
    pub dist: ParamDistribution,
    pub k: u64,
    /// Finite-k constant c_k(a0) = x_k(const a0) k^{1/a0}.
    pub ck0: f64,
    /// Finite-k constant c_k(a1).
    pub ck1: f64,
}

impl AkSpec {
    /// Build by running the constant-path recursions up to k (O(k) cost).
    pub fn new(dist: ParamDistribution, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(LabError::Domain("index must be >= 1".into()));
        }
        let ck0 = preimages::deterministic_c(MapParam::new(dist.alpha0)?, k as usize)?;
        let ck1 = preimages::deterministic_c(MapParam::new(dist.alpha1)?, k as usize)?;
        Ok(Self { dist, k, ck0, ck1 })
    }

    /// The bases (2 c_k(a0) / k^{1/a0}, 2 c_k(a1) / k^{1/a1}); both lie in
    /// (0, 1) for k >= 2.
    pub fn bases(&self) -> (f64, f64) {
        let k = self.k as f64;
        (
            2.0 * self.ck0 / k.powf(1.0 / self.dist.alpha0),
            2.0 * self.ck1 / k.powf(1.0 / self.dist.alpha1),
        )
    }
}

#[inline]
fn ak_from_log_bases(dist: &ParamDistribution, l0: f64, l1: f64, alpha: f64) -> f64 {
    let a0 = dist.alpha0;
    let r0 = dist.r0();
    r0 * ((alpha - a0) * l0).exp() - 0.5 * (1.0 + a0) * r0 * ((2.0 * alpha - a0) * l1).exp()
}

/// The positive and negative parts of A_k separately.
pub fn a_k_split(spec: &AkSpec, alpha: MapParam) -> (f64, f64) {
    if spec.k == 1 {
        return (0.0, 0.0);
    }
    let (b0, b1) = spec.bases();
    let a0 = spec.dist.alpha0;
    let r0 = spec.dist.r0();
    let x = r0 * b0.powf(alpha.alpha() - a0);
    let y = 0.5 * (1.0 + a0) * r0 * b1.powf(2.0 * alpha.alpha() - a0);
    (x, y)
}

/// A_k evaluated at one exponent; zero at k = 1, inside [-r0, r0] otherwise.
pub fn a_k(spec: &AkSpec, alpha: MapParam) -> f64 {
    if spec.k == 1 {
        return 0.0;
    }
    let (b0, b1) = spec.bases();
    ak_from_log_bases(&spec.dist, b0.ln(), b1.ln(), alpha.alpha())
}

fn expected_ak_from_logs(dist: &ParamDistribution, l0: f64, l1: f64) -> Result<f64> {
    match dist.kind {
        DistKind::Discrete => {
            let a = ak_from_log_bases(dist, l0, l1, dist.alpha0);
            let b = ak_from_log_bases(dist, l0, l1, dist.alpha1);
            Ok(dist.p1 * a + (1.0 - dist.p1) * b)
        }
        _ => dist.expect(|alpha| ak_from_log_bases(dist, l0, l1, alpha)),
    }
}

/// E_nu A_k: exact for the discrete law, adaptive quadrature otherwise.
pub fn expected_a(dist: &ParamDistribution, k: u64) -> Result<f64> {
    if k == 1 {
        return Ok(0.0);
    }
    let spec = AkSpec::new(*dist, k)?;
    let (b0, b1) = spec.bases();
    expected_ak_from_logs(dist, b0.ln(), b1.ln())
}

/// Streaming source of the log-bases (ln 2x_k(const a0), ln 2x_k(const a1)).
struct BaseStream {
    alpha0: f64,
    alpha1: f64,
    x0: f64,
    x1: f64,
}

impl BaseStream {
    fn new(dist: &ParamDistribution) -> Self {
        Self { alpha0: dist.alpha0, alpha1: dist.alpha1, x0: 0.5, x1: 0.5 }
    }

    /// Append the next `count` entries (consuming indices in order k = 2, 3, ...).
    fn next_chunk(&mut self, buf: &mut Vec<(f64, f64)>, count: usize) {
        buf.clear();
        for _ in 0..count {
            self.x0 = crate::map::invert_left_raw(self.alpha0, self.x0);
            self.x1 = crate::map::invert_left_raw(self.alpha1, self.x1);
            buf.push(((2.0 * self.x0).ln(), (2.0 * self.x1).ln()));
        }
    }
}

/// Normalized partial sums S_l = (log l)^q / l * sum_{k<=l} E A_k recorded
/// on a grid of l values, together with both candidate limit constants.
#[derive(Debug, Clone)]
pub struct PartialSumSeries {
    pub ells: Vec<u64>,
    pub values: Vec<f64>,
    pub q: f64,
    /// Nominal signature constant of the law.
    pub c_nominal: f64,
    /// Constant implied by the exact Laplace expansion (differs from nominal
    /// only for the quadratic law).
    pub c_laplace: f64,
}

const CHUNK: usize = 1 << 17;

fn sorted_ells(ells: &[u64]) -> Result<Vec<u64>> {
    if ells.is_empty() {
        return Err(LabError::Domain("need at least one snapshot length".into()));
    }
    let mut sorted = ells.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted)
}

/// First-kind partial sums over k = 1..=l for each snapshot l (single
/// streamed pass; chunks are parallelized, the fold is in k order).
pub fn a1_series(dist: &ParamDistribution, ells: &[u64]) -> Result<PartialSumSeries> {
    let sorted = sorted_ells(ells)?;
    if sorted[0] < 2 {
        return Err(LabError::Domain("partial sums need l >= 2".into()));
    }
    let sig = dist.signature();
    let max_ell = *sorted.last().unwrap();

    let mut stream = BaseStream::new(dist);
    let mut buf: Vec<(f64, f64)> = Vec::with_capacity(CHUNK);
    let mut prefix = 0.0f64; // sum over k = 1..current of E A_k (A_1 = 0)
    let mut k_done: u64 = 1;
    let mut snapshots = Vec::with_capacity(sorted.len());
    let mut next = sorted.iter().copied().peekable();

    while k_done < max_ell {
        let count = CHUNK.min((max_ell - k_done) as usize);
        stream.next_chunk(&mut buf, count);
        let values = par::map_slice(&buf, |(l0, l1)| expected_ak_from_logs(dist, *l0, *l1));
        for v in values {
            prefix += v?;
            k_done += 1;
            while next.peek() == Some(&k_done) {
                let l = k_done as f64;
                snapshots.push(l.ln().powf(sig.q) / l * prefix);
                next.next();
            }
        }
    }
    Ok(PartialSumSeries {
        ells: sorted,
        values: snapshots,
        q: sig.q,
        c_nominal: sig.c_nu,
        c_laplace: dist.laplace_signature().c_nu,
    })
}

/// Convenience scalar version of [`a1_series`].
pub fn a1_partial_sum(dist: &ParamDistribution, ell: u64) -> Result<f64> {
    Ok(a1_series(dist, &[ell])?.values[0])
}

/// Integral-comparison extrapolation of S_l beyond an exactly computed
/// value: the raw sum is extended by the integral of c_loc / (log x)^q
/// between the computed length and the target, where c_loc is the prefactor
/// measured at the computed length (the finite-k expectations sit visibly
/// above their limit at desk scale). Exploratory only — every shipped check
/// sums exactly.
pub fn a1_extrapolated(
    dist: &ParamDistribution,
    computed_ell: u64,
    computed_value: f64,
    target_ell: u64,
) -> Result<f64> {
    if target_ell < computed_ell || computed_ell < 2 {
        return Err(LabError::Domain("target must lie beyond the computed prefix".into()));
    }
    let q = dist.signature().q;
    let (l0, l1) = (computed_ell as f64, target_ell as f64);
    let c_loc = expected_a(dist, computed_ell)? * l0.ln().powf(q);
    let raw = computed_value * l0 / l0.ln().powf(q);
    let bulk = if q == 0.0 {
        c_loc * (l1 - l0)
    } else {
        crate::quad::integrate(|x| c_loc / x.ln().powf(q), l0, l1, 1e-10 * (l1 - l0))?
    };
    Ok(l1.ln().powf(q) / l1 * (raw + bulk))
}

#[inline]
fn a_prime_log_base(sig: &Signature, alpha0: f64, k: u64) -> f64 {
    let lk = (k as f64).ln();
    // ln of 3 (log k)^{q/a0} / (c^{1/a0} k^{1/a0})
    3f64.ln() + (sig.q / alpha0) * lk.ln() - (sig.c_nu.ln() + lk) / alpha0
}

/// E_nu A'_k for the matched-refinement increments
/// A'_k(a) = r0 [3 (log k)^{q/a0} / (c^{1/a0} k^{1/a0})]^{a - a0}.
pub fn expected_a_prime(dist: &ParamDistribution, k: u64) -> Result<f64> {
    if k < 2 {
        return Err(LabError::Domain("refined increments need k >= 2".into()));
    }
    let sig = dist.signature();
    let a0 = dist.alpha0;
    let r0 = dist.r0();
    let l = a_prime_log_base(&sig, a0, k);
    dist.expect(|alpha| r0 * ((alpha - a0) * l).exp())
}

/// Second-kind partial sums
/// (log(l - floor(sqrt l)))^q / (l - floor(sqrt l)) * sum_{k=floor(sqrt l)+1}^{l} E A'_k.
pub fn a2_series(dist: &ParamDistribution, ells: &[u64]) -> Result<PartialSumSeries> {
    let sorted = sorted_ells(ells)?;
    if sorted[0] < 4 {
        return Err(LabError::Domain("refined partial sums need l >= 4".into()));
    }
    let sig = dist.signature();
    let max_ell = *sorted.last().unwrap();

    // prefix sums of E A'_k needed at floor(sqrt l) and l for each snapshot
    let mut needed: Vec<u64> = sorted
        .iter()
        .flat_map(|&l| [(l as f64).sqrt().floor() as u64, l])
        .collect();
    needed.sort_unstable();
    needed.dedup();

    let mut prefix_at = std::collections::HashMap::new();
    let mut prefix = 0.0f64; // sum over k = 2..=current
    let mut k_done: u64 = 1;
    prefix_at.insert(1u64, 0.0);
    let mut next = needed.iter().copied().filter(|&k| k > 1).peekable();

    let a0 = dist.alpha0;
    let r0 = dist.r0();
    while k_done < max_ell {
        let count = CHUNK.min((max_ell - k_done) as usize);
        let start = k_done + 1;
        let values = par::map_indexed(count, |i| {
            let k = start + i as u64;
            let l = a_prime_log_base(&sig, a0, k);
            dist.expect(|alpha| r0 * ((alpha - a0) * l).exp())
        });
        for v in values {
            prefix += v?;
            k_done += 1;
            while next.peek() == Some(&k_done) {
                prefix_at.insert(k_done, prefix);
                next.next();
            }
        }
    }

    let mut snapshots = Vec::with_capacity(sorted.len());
    for &l in &sorted {
        let root = (l as f64).sqrt().floor() as u64;
        let m = (l - root) as f64;
        let sum = prefix_at[&l] - prefix_at[&root];
        snapshots.push(m.ln().powf(sig.q) / m * sum);
    }
    Ok(PartialSumSeries {
        ells: sorted,
        values: snapshots,
        q: sig.q,
        c_nominal: sig.c_nu,
        c_laplace: dist.laplace_signature().c_nu,
    })
}

/// Convenience scalar version of [`a2_series`].
pub fn a2_partial_sum(dist: &ParamDistribution, ell: u64) -> Result<f64> {
    Ok(a2_series(dist, &[ell])?.values[0])
}

/// x_l along the path divided by the predicted sharp size
/// [(log l)^q / (c l)]^{1/a0}; tends to 1 along almost every path when the
/// signature constant matches the data.
pub fn sharp_ratio(path: &NoisePath, base_index: i64, ell: u64, sig: &Signature) -> Result<f64> {
    if ell < 2 {
        return Err(LabError::Domain("sharp ratio needs l >= 2".into()));
    }
    let x = preimages::x_ell(path, base_index, ell as usize);
    let l = ell as f64;
    let predicted = (l.ln().powf(sig.q) / (sig.c_nu * l)).powf(1.0 / path.dist.alpha0);
    Ok(x / predicted)
}

/// Median of [`sharp_ratio`] over independently seeded paths.
pub fn sharp_ratio_median(
    dist: &ParamDistribution,
    sig: &Signature,
    ell: u64,
    n_paths: usize,
    seed: u64,
) -> Result<f64> {
    if n_paths == 0 {
        return Err(LabError::Undersampled("need at least one path".into()));
    }
    let ratios = par::map_indexed(n_paths, |j| {
        let path = NoisePath::new(rng::child_seed(seed, j as u64), *dist);
        sharp_ratio(&path, 0, ell, sig)
    });
    let mut vals = ratios.into_iter().collect::<Result<Vec<_>>>()?;
    vals.sort_by(f64::total_cmp);
    let n = vals.len();
    Ok(if n % 2 == 1 { vals[n / 2] } else { 0.5 * (vals[n / 2 - 1] + vals[n / 2]) })
}

/// One point of a Hoeffding deviation check.
#[derive(Debug, Clone, Copy)]
pub struct HoeffdingPoint {
    pub t: f64,
    /// Fraction of sample paths with normalized deviation >= t.
    pub empirical: f64,
    /// exp[- l t^2 / (2 r0 (log l)^{2q})].
    pub bound: f64,
    /// Monte Carlo standard error of `empirical`.
    pub mc_se: f64,
}

impl HoeffdingPoint {
    /// The one-sided contract: empirical may not exceed the bound by more
    /// than `k_se` standard errors.
    pub fn holds(&self, k_se: f64) -> bool {
        self.empirical <= self.bound + k_se * self.mc_se
    }
}

/// Empirical tail of the normalized centered sums
/// (log l)^q / l |sum A_k - sum E A_k| against the deviation bound, for a
/// whole grid of thresholds sharing one sample of paths.
pub fn hoeffding_grid(
    dist: &ParamDistribution,
    ell: u64,
    ts: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<HoeffdingPoint>> {
    if ell < 2 {
        return Err(LabError::Domain("deviation check needs l >= 2".into()));
    }
    if n_samples < 1_000 {
        return Err(LabError::Undersampled(format!(
            "deviation check needs >= 1000 sample paths, got {n_samples}"
        )));
    }
    if ts.iter().any(|t| *t <= 0.0) {
        return Err(LabError::Domain("thresholds must be positive".into()));
    }

    // Tables of log-bases for k = 2..=l and the exact centering constant.
    let mut stream = BaseStream::new(dist);
    let mut logs: Vec<(f64, f64)> = Vec::with_capacity(ell as usize);
    logs.push((0.0, 0.0)); // k = 1 placeholder; A_1 = 0
    let mut buf = Vec::with_capacity(CHUNK.min(ell as usize));
    while logs.len() < ell as usize {
        let count = CHUNK.min(ell as usize - logs.len());
        stream.next_chunk(&mut buf, count);
        logs.extend_from_slice(&buf);
    }
    let expectation_sum: f64 = {
        let values = par::map_slice(&logs[1..], |(l0, l1)| expected_ak_from_logs(dist, *l0, *l1));
        let mut acc = 0.0;
        for v in values {
            acc += v?;
        }
        acc
    };

    // For the discrete law A_k takes just two values per k; tabulate them.
    let atom_table: Option<Vec<(f64, f64)>> = match dist.kind {
        DistKind::Discrete => Some(
            logs.iter()
                .map(|(l0, l1)| {
                    (
                        ak_from_log_bases(dist, *l0, *l1, dist.alpha0),
                        ak_from_log_bases(dist, *l0, *l1, dist.alpha1),
                    )
                })
                .collect(),
        ),
        _ => None,
    };

    let sig = dist.signature();
    let scale = (ell as f64).ln().powf(sig.q) / ell as f64;
    let deviations: Vec<f64> = par::map_indexed(n_samples, |j| {
        let path = NoisePath::new(rng::child_seed(seed, j as u64), *dist);
        let mut sum = 0.0;
        match &atom_table {
            Some(table) => {
                for k in 2..=ell {
                    let a = path.alpha_at((ell - k) as i64);
                    let (at0, at1) = table[(k - 1) as usize];
                    sum += if a == dist.alpha0 { at0 } else { at1 };
                }
            }
            None => {
                for k in 2..=ell {
                    let a = path.alpha_at((ell - k) as i64);
                    let (l0, l1) = logs[(k - 1) as usize];
                    sum += ak_from_log_bases(dist, l0, l1, a);
                }
            }
        }
        scale * (sum - expectation_sum).abs()
    });

    let r0 = dist.r0();
    let n = n_samples as f64;
    let log_l = (ell as f64).ln();
    Ok(ts
        .iter()
        .map(|&t| {
            let hits = deviations.iter().filter(|d| **d >= t).count();
            let empirical = hits as f64 / n;
            let bound = (-(ell as f64) * t * t / (2.0 * r0 * log_l.powf(2.0 * sig.q))).exp();
            let mc_se = (empirical * (1.0 - empirical) / n).sqrt();
            HoeffdingPoint { t, empirical, bound, mc_se }
        })
        .collect())
}

/// Single-threshold version of [`hoeffding_grid`]:
/// (empirical probability, bound).
pub fn hoeffding_check(
    dist: &ParamDistribution,
    ell: u64,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let pts = hoeffding_grid(dist, ell, &[t], n_samples, seed)?;
    Ok((pts[0].empirical, pts[0].bound))
}

// ---------------------------------------------------------------------------
// slow-sum asymptotics
// ---------------------------------------------------------------------------

/// f(x) = (log x)^b / x^a and the derivatives needed by the tail expansion.
fn tail_f(a: f64, b: f64, x: f64) -> f64 {
    x.ln().powf(b) * x.powf(-a)
}

fn tail_f1(a: f64, b: f64, x: f64) -> f64 {
    let l = x.ln();
    x.powf(-a - 1.0) * l.powf(b - 1.0) * (b - a * l)
}

fn tail_f3(a: f64, b: f64, x: f64) -> f64 {
    let l = x.ln();
    let poly = b * (b - 1.0) * (b - 2.0) - 3.0 * (a + 1.0) * b * (b - 1.0) * l
        + b * (3.0 * a * a + 6.0 * a + 2.0) * l * l
        - a * (a + 1.0) * (a + 2.0) * l * l * l;
    x.powf(-a - 3.0) * l.powf(b - 3.0) * poly
}

/// Integral of f over [m, infinity): Gamma(b+1, (a-1) log m) / (a-1)^{b+1}.
fn tail_integral(a: f64, b: f64, m: f64) -> f64 {
    use statrs::function::gamma::{gamma, gamma_ur};
    let s = b + 1.0;
    let z = (a - 1.0) * m.ln();
    gamma_ur(s, z) * gamma(s) / (a - 1.0).powf(s)
}

/// Tail sum_{k >= m} f(k) via Euler-Maclaurin off the closed-form integral.
fn tail_from(a: f64, b: f64, m: u64) -> f64 {
    let x = m as f64;
    tail_integral(a, b, x) + 0.5 * tail_f(a, b, x) - tail_f1(a, b, x) / 12.0
        + tail_f3(a, b, x) / 720.0
}

/// Exact and asymptotic values of sum_{k > n} (log k)^b / k^a.
///
/// The exact value sums terms directly and resolves the remainder with an
/// Euler-Maclaurin expansion off the closed-form integral; the switchover is
/// pushed out until two independent evaluations agree to 1e-14 relative.
/// The asymptotic value is (log n)^b n^{1-a} / (a-1).
pub fn tail_sum(a: f64, b: f64, n: u64) -> Result<(f64, f64)> {
    if !(a > 1.0) || !(b >= 0.0) || n < 2 {
        return Err(LabError::Domain(format!(
            "tail sum needs a > 1, b >= 0, n >= 2 (got a={a}, b={b}, n={n})"
        )));
    }
    let mut switch = n.max(1_000) * 4;
    let mut direct = 0.0f64;
    let mut from = n + 1;
    let mut exact;
    loop {
        for k in from..switch {
            direct += tail_f(a, b, k as f64);
        }
        exact = direct + tail_from(a, b, switch);
        // self-check: push the switchover out and compare
        let mut probe = 0.0;
        for k in switch..2 * switch {
            probe += tail_f(a, b, k as f64);
        }
        let alt = direct + probe + tail_from(a, b, 2 * switch);
        if (exact - alt).abs() <= 1e-14 * exact.abs() || switch >= n.max(1_000) * 4096 {
            exact = alt;
            break;
        }
        direct += probe;
        from = 2 * switch;
        switch *= 2;
    }
    let nf = n as f64;
    let asymptotic = nf.ln().powf(b) * nf.powf(1.0 - a) / (a - 1.0);
    Ok((exact, asymptotic))
}

/// Exact and asymptotic values of sum_{k=2}^n 1 / (log k)^a; the asymptotic
/// form is n / (log n)^a.
pub fn log_power_sum(a: f64, n: u64) -> Result<(f64, f64)> {
    if !(a > 0.0) || n < 3 {
        return Err(LabError::Domain(format!(
            "log-power sum needs a > 0, n >= 3 (got a={a}, n={n})"
        )));
    }
    let terms = (n - 1) as usize; // k = 2..=n
    let n_chunks = terms.div_ceil(CHUNK);
    let partials = par::map_indexed(n_chunks, |c| {
        let lo = 2 + (c * CHUNK) as u64;
        let hi = (lo + CHUNK as u64 - 1).min(n);
        let mut acc = 0.0;
        for k in lo..=hi {
            acc += (k as f64).ln().powf(-a);
        }
        acc
    });
    let exact: f64 = partials.iter().sum();
    let nf = n as f64;
    Ok((exact, nf / nf.ln().powf(a)))
}
