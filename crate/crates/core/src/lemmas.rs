//! Numerical checks of the identities and inequalities behind the averaged
//! Goldbach estimate: the character decomposition of `F_q`, the principal
//! character defect, Gallagher's lemma, the `I₁ + I₂` split of the short
//! interval integral, and the three-way split of the main integral.
//!
//! Every check returns the measured quantity next to the budget it is compared
//! with; none of them asserts an implied constant.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{euler_phi, gcd, VonMangoldtTable};
use crate::characters::CharacterGroup;
use crate::circle::{
    fq_series, fq_tail_bound, kernel_l1, psi_series, psi_series_twisted, CirclePoint, NodeGrid, SeriesCutoff,
    QUADRATURE_N_LIMIT,
};
use crate::error::{domain, out_of_range, Error, Result};
use crate::goldbach::{goldbach_average_multiples, Psi2Series};
use crate::moments::TwistedPsiPath;
use crate::step::StepPath;
use crate::sum::{ComplexNeumaier, Neumaier};

/// Number of dyadic blocks kept in the `I₂` comparison series.
pub const I2_SERIES_TERMS: u32 = 64;

/// `I₂` is integrated up to where `e^{−2x/N}` falls below this.
pub const I2_WEIGHT_FLOOR: f64 = 1e-16;

fn prime_powers_upto(table: &VonMangoldtTable, x: usize) -> &[u64] {
    &table.breakpoints()[..table.count_upto(x as f64)]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacterAverageCheck {
    pub q: u64,
    pub n: u64,
    pub alpha: f64,
    /// `|F_q(z) − (1/φ(q)) Σ_χ χ(−1)Ψ(z,χ)Ψ(z,χ̄)|`.
    pub defect: f64,
    /// `(log N · log q)²`.
    pub budget: f64,
    /// Character average against the coprime pair sum.
    pub core_residual: f64,
    /// `|Σ_{m+m' ≤ n_cut, q | m+m', (mm',q) > 1} Λ(m)Λ(m')z^{m+m'}|`.
    pub killed: f64,
    /// `|F_q − average − killed sum|`, bounded by the pair tail beyond `n_cut`.
    pub killed_residual: f64,
    pub tail_bound: f64,
}

/// Character average, pair sums, and the defect for one circle point.
pub fn character_average_defect(
    table: &VonMangoldtTable,
    series: &Psi2Series,
    group: &CharacterGroup,
    point: &CirclePoint,
    cutoff: &SeriesCutoff,
) -> Result<CharacterAverageCheck> {
    let q = group.modulus();
    if q < 2 {
        return Err(out_of_range("q", q as f64, "q >= 2"));
    }
    let phi = euler_phi(q) as f64;
    let mut avg = ComplexNeumaier::new();
    let twisted: Vec<Complex64> = (0..group.len())
        .map(|j| psi_series_twisted(table, group, j, point, cutoff).map(|v| v.value))
        .collect::<Result<_>>()?;
    for j in 0..group.len() {
        let parity = group.character(j)?.parity() as f64;
        avg.add(twisted[j] * twisted[group.conjugate(j)?] * parity);
    }
    let avg = avg.value() / phi;

    let pps = prime_powers_upto(table, cutoff.n_cut());
    let n_cut = cutoff.n_cut() as u64;
    // bucket coprime prime powers by residue mod q
    let mut buckets: Vec<Vec<u64>> = vec![Vec::new(); q as usize];
    for &m in pps {
        if gcd(m, q) == 1 {
            buckets[(m % q) as usize].push(m);
        }
    }
    let mut core = ComplexNeumaier::new();
    for &m in pps {
        if gcd(m, q) != 1 {
            continue;
        }
        let lm = table.lambda(m as usize);
        for &m2 in &buckets[((q - m % q) % q) as usize] {
            core.add(point.power((m + m2) as i64) * (lm * table.lambda(m2 as usize)));
        }
    }
    let mut killed = ComplexNeumaier::new();
    for &m in pps {
        let lm = table.lambda(m as usize);
        for &m2 in pps {
            if m + m2 > n_cut {
                break;
            }
            if (m + m2) % q == 0 && gcd(m * m2 % q, q) > 1 {
                killed.add(point.power((m + m2) as i64) * (lm * table.lambda(m2 as usize)));
            }
        }
    }
    let fq = fq_series(series, q, point, cutoff)?;
    let killed = killed.value();
    let ln_n = (point.n() as f64).ln();
    let ln_q = (q as f64).ln();
    Ok(CharacterAverageCheck {
        q,
        n: point.n(),
        alpha: point.alpha(),
        defect: (fq.value - avg).norm(),
        budget: (ln_n * ln_q).powi(2),
        core_residual: (avg - core.value()).norm(),
        killed: killed.norm(),
        killed_residual: (fq.value - avg - killed).norm(),
        tail_bound: fq_tail_bound(point.n(), cutoff.n_cut()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrincipalDefectCheck {
    pub q: u64,
    pub n: u64,
    pub alpha: f64,
    /// `|Ψ(z,χ₀) − Ψ(z)|` from the two series.
    pub defect: f64,
    /// `|Σ_{(n,q) > 1} Λ(n)zⁿ|` summed directly.
    pub subseries: f64,
    /// `|(Ψ(z) − Ψ(z,χ₀)) − Σ_{(n,q) > 1} Λ(n)zⁿ|`.
    pub subseries_residual: f64,
    /// `log N · log q`.
    pub budget: f64,
}

pub fn principal_character_defect(
    table: &VonMangoldtTable,
    group: &CharacterGroup,
    point: &CirclePoint,
    cutoff: &SeriesCutoff,
) -> Result<PrincipalDefectCheck> {
    let q = group.modulus();
    if q < 2 {
        return Err(out_of_range("q", q as f64, "q >= 2"));
    }
    let full = psi_series(table, point, cutoff)?.value;
    let principal = psi_series_twisted(table, group, 0, point, cutoff)?.value;
    let mut sub = ComplexNeumaier::new();
    for &n in prime_powers_upto(table, cutoff.n_cut()) {
        if gcd(n, q) > 1 {
            sub.add(point.power(n as i64) * table.lambda(n as usize));
        }
    }
    let sub = sub.value();
    Ok(PrincipalDefectCheck {
        q,
        n: point.n(),
        alpha: point.alpha(),
        defect: (principal - full).norm(),
        subseries: sub.norm(),
        subseries_residual: (full - principal - sub).norm(),
        budget: (point.n() as f64).ln() * (q as f64).ln(),
    })
}

/// Sort by position and merge repeated positions.
fn normalize_coeffs(coeffs: &[(i64, Complex64)]) -> Vec<(i64, Complex64)> {
    let mut v = coeffs.to_vec();
    v.sort_by_key(|&(n, _)| n);
    let mut out: Vec<(i64, Complex64)> = Vec::with_capacity(v.len());
    for (n, c) in v {
        match out.last_mut() {
            Some(last) if last.0 == n => last.1 += c,
            _ => out.push((n, c)),
        }
    }
    out
}

/// `∫_a^b |Σ c_n e(nα)|² dα` in closed form over coefficient pairs.
pub fn exponential_sum_l2(coeffs: &[(i64, Complex64)], a: f64, b: f64) -> f64 {
    let v = normalize_coeffs(coeffs);
    let mut acc = Neumaier::new();
    for &(_, cn) in &v {
        acc.add(cn.norm_sqr() * (b - a));
    }
    for (i, &(n, cn)) in v.iter().enumerate() {
        for &(m, cm) in &v[i + 1..] {
            // pair (n,m) and (m,n) together: 2 Re(c_n c̄_m ∫ e((n−m)α))
            let k = (n - m) as f64;
            let w = cn * cm.conj();
            let re = ((TAU * k * b).sin() - (TAU * k * a).sin()) / (TAU * k);
            let im = -((TAU * k * b).cos() - (TAU * k * a).cos()) / (TAU * k);
            acc.add(2.0 * (w * Complex64::new(re, im)).re);
        }
    }
    acc.value()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GallagherRatio {
    pub h: f64,
    pub nodes: usize,
    /// `∫_{−1/2h}^{1/2h} |S(α)|² dα` by composite Simpson.
    pub lhs: f64,
    /// `(1/h²) ∫ |Σ_{x<n≤x+h} c_n|² dx` by exact sweep.
    pub rhs: f64,
    pub ratio: f64,
}

/// Both sides of Gallagher's inequality for a finitely supported sequence.
pub fn gallagher_ratio(coeffs: &[(i64, Complex64)], h: f64, nodes: usize) -> Result<GallagherRatio> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(domain(format!("window length h = {h} must be positive")));
    }
    let v = normalize_coeffs(coeffs);
    if v.is_empty() {
        return Ok(GallagherRatio {
            h,
            nodes,
            lhs: 0.0,
            rhs: 0.0,
            ratio: 0.0,
        });
    }
    let nodes = (nodes.max(2) + 1) & !1;
    let a = 0.5 / h;
    let step = 2.0 * a / nodes as f64;
    let s = |alpha: f64| -> f64 {
        let mut acc = ComplexNeumaier::new();
        for &(n, c) in &v {
            let phase = n as f64 * alpha;
            acc.add(c * Complex64::from_polar(1.0, TAU * (phase - phase.round())));
        }
        acc.value().norm_sqr()
    };
    let mut lhs = Neumaier::new();
    for i in 0..=nodes {
        let w = if i == 0 || i == nodes {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        lhs.add(w * s(-a + i as f64 * step));
    }
    let lhs = lhs.value() * step / 3.0;

    let lo = v[0].0 as f64 - h;
    let hi = v[v.len() - 1].0 as f64;
    let path = StepPath::from_jumps(v.iter().copied());
    let rhs = path.window_square_integral(lo, hi, h)? / (h * h);
    Ok(GallagherRatio {
        h,
        nodes,
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
    })
}

/// A seeded test sequence for the Gallagher check.
#[derive(Clone, Debug, PartialEq)]
pub struct GallagherCase {
    pub coeffs: Vec<(i64, Complex64)>,
    pub h: f64,
}

impl GallagherCase {
    /// Simpson intervals resolving the sequence span at 32 nodes per period.
    pub fn default_nodes(&self) -> usize {
        let span = match (self.coeffs.first(), self.coeffs.last()) {
            (Some(a), Some(b)) => (b.0 - a.0).unsigned_abs() as f64,
            _ => 0.0,
        };
        ((32.0 * (span + 1.0) / self.h).ceil() as usize).max(64)
    }
}

pub fn gallagher_cases(seed: u64, count: usize) -> Vec<GallagherCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let windows = [0.5, 1.0, 2.5, 4.0, 10.0];
    (0..count)
        .map(|_| {
            let len = rng.gen_range(1..=40usize);
            let mut coeffs: Vec<(i64, Complex64)> = (0..len)
                .map(|_| {
                    (
                        rng.gen_range(0..200i64),
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    )
                })
                .collect();
            coeffs = normalize_coeffs(&coeffs);
            GallagherCase {
                coeffs,
                h: windows[rng.gen_range(0..windows.len())],
            }
        })
        .collect()
}

/// `count` points `α ∈ (−1/2, 1/2]` from a seeded stream.
pub fn seeded_alphas(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| 0.5 - rng.gen::<f64>()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct I1I2Report {
    pub q: u64,
    pub char_index: usize,
    pub n: u64,
    pub k: u32,
    pub h: f64,
    pub i1: f64,
    pub i2: f64,
    /// Upper limit used for `I₂`.
    pub x_max: f64,
    /// Bound on the part of `I₂` beyond `x_max`.
    pub discarded_bound: f64,
    pub j1_h: f64,
    /// `I₁ / (3 J₁(h))`, at most 1.
    pub i1_ratio: f64,
    /// `Σ_{j ≤ 64} 2^{−j}((h²/N²) J₁(jN) + J₂(jN, h))`.
    pub i2_series: f64,
    /// `I₂ / i2_series`.
    pub i2_ratio: f64,
}

/// The dyadic index `k` with `h = N/2^{k+2}`, `0 ≤ k < log₂ N`.
pub fn dyadic_index(n: u64, h: f64) -> Result<u32> {
    (0..64u32)
        .take_while(|&k| (1u64 << k) < n)
        .find(|&k| n as f64 / (1u64 << (k + 2)) as f64 == h)
        .ok_or_else(|| domain(format!("h = {h} is not of the form N/2^(k+2) with 2^k < N = {n}")))
}

/// Table size needed by [`i1_i2_decomposition`] at `(N, h)`.
pub fn i1_i2_table_len(n: u64, h: f64) -> usize {
    let x_max = i2_upper_limit(n);
    let reach = (I2_SERIES_TERMS as f64 * n as f64).max(x_max) + h;
    reach.floor() as usize + 1
}

fn i2_upper_limit(n: u64) -> f64 {
    (n as f64 * (1.0 / I2_WEIGHT_FLOOR).ln() / 2.0).ceil()
}

pub fn i1_i2_decomposition(
    table: &VonMangoldtTable,
    group: &CharacterGroup,
    j: usize,
    n: u64,
    h: f64,
) -> Result<I1I2Report> {
    let chi = group.character(j)?;
    if chi.is_principal() {
        return Err(domain("the I1/I2 split is taken for nonprincipal characters"));
    }
    let k = dyadic_index(n, h)?;
    let need = i1_i2_table_len(n, h);
    if need > table.n_max() {
        return Err(Error::Capacity {
            what: "sieve length for I1/I2",
            requested: need as u64,
            limit: table.n_max() as u64,
        });
    }
    let nf = n as f64;
    let x_max = i2_upper_limit(n);
    let weighted = TwistedPsiPath::weighted(table, group, j, need, |m| (-(m as f64) / nf).exp())?;
    let i1 = weighted.path().square_integral(h);
    let i2 = weighted.path().window_square_integral(0.0, x_max, h)?;
    let a = x_max + h + 1.0;
    let discarded_bound =
        (h + 1.0).powi(2) * (-2.0 * x_max / nf).exp() * (nf * a.ln().powi(2) + nf.powi(3) / (2.0 * a * a));

    let plain = TwistedPsiPath::new(table, group, j, need)?;
    let j1_h = plain.j1(h)?;
    let mut series = Neumaier::new();
    for jj in 1..=I2_SERIES_TERMS {
        let x = jj as f64 * nf;
        let term = (h * h / (nf * nf)) * plain.j1(x)? + plain.j2(x, h)?;
        series.add(term * 0.5f64.powi(jj as i32));
    }
    let series = series.value();
    Ok(I1I2Report {
        q: group.modulus(),
        char_index: j,
        n,
        k,
        h,
        i1,
        i2,
        x_max,
        discarded_bound,
        j1_h,
        i1_ratio: if j1_h > 0.0 { i1 / (3.0 * j1_h) } else { 0.0 },
        i2_series: series,
        i2_ratio: if series > 0.0 { i2 / series } else { 0.0 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GallagherChain {
    pub n: u64,
    pub h: f64,
    /// `∫_0^{1/2h} |Ψ(z,χ)|² dα` for the truncated series.
    pub lhs: f64,
    /// `(I₁ + I₂)/h²`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Compares the short arc integral of `|Ψ(z,χ)|²` with `(I₁ + I₂)/h²`.
pub fn gallagher_chain(
    table: &VonMangoldtTable,
    group: &CharacterGroup,
    j: usize,
    n: u64,
    h: f64,
) -> Result<GallagherChain> {
    let report = i1_i2_decomposition(table, group, j, n, h)?;
    let chi = group.character(j)?;
    let cutoff = SeriesCutoff::for_n(n)?;
    let coeffs: Vec<(i64, Complex64)> = prime_powers_upto(table, cutoff.n_cut())
        .iter()
        .filter(|&&m| chi.exponent(m as i64).is_some())
        .map(|&m| {
            let w = table.lambda(m as usize) * (-(m as f64) / n as f64).exp();
            (m as i64, chi.value(m as i64) * w)
        })
        .collect();
    let lhs = exponential_sum_l2(&coeffs, 0.0, 0.5 / h);
    let rhs = (report.i1 + report.i2) / (h * h);
    Ok(GallagherChain {
        n,
        h,
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MajorSplit {
    pub q: u64,
    pub n: u64,
    pub nodes: usize,
    /// Principal character part of the integral.
    pub part1: f64,
    /// Nonprincipal characters part.
    pub part2: f64,
    /// `(log N log q)² ∫|I_N(1/z)|dα`.
    pub part3: f64,
    pub g_q: f64,
    /// Pair mass with `(mm', q) > 1` over `n ≤ N`, `q | n`.
    pub killed: f64,
    /// `|part1 + part2 − (G_q(N) − killed)|`.
    pub residual: f64,
}

/// Splits `∫ F_q(z) I_N(1/z) dα` along the characters by exact node quadrature.
pub fn major_split(
    table: &VonMangoldtTable,
    series: &Psi2Series,
    group: &CharacterGroup,
    n: u64,
) -> Result<MajorSplit> {
    let q = group.modulus();
    if n > QUADRATURE_N_LIMIT {
        return Err(Error::Capacity {
            what: "quadrature N",
            requested: n,
            limit: QUADRATURE_N_LIMIT,
        });
    }
    if n < 4 || q < 2 || q > n {
        return Err(domain(format!("need 2 <= q <= N and N >= 4, got q = {q}, N = {n}")));
    }
    let cutoff = SeriesCutoff::for_n(n)?;
    let n_cut = cutoff.n_cut();
    if n_cut > table.n_max() {
        return Err(Error::Capacity {
            what: "series cutoff",
            requested: n_cut as u64,
            limit: table.n_max() as u64,
        });
    }
    let m = 2 * (2 * n_cut + n as usize) + 1;
    let grid = NodeGrid::new(n, m);
    let kernel = grid.kernel();
    let pps = prime_powers_upto(table, n_cut);
    let values: Vec<Vec<Complex64>> = group
        .characters()
        .iter()
        .map(|chi| {
            let terms: Vec<(i64, Complex64)> = pps
                .iter()
                .filter(|&&p| chi.exponent(p as i64).is_some())
                .map(|&p| (p as i64, chi.value(p as i64) * table.lambda(p as usize)))
                .collect();
            grid.evaluate(&terms)
        })
        .collect();
    let phi = euler_phi(q) as f64;
    let mut part1 = Complex64::new(0.0, 0.0);
    let mut part2 = ComplexNeumaier::new();
    for (j, chi) in group.characters().iter().enumerate() {
        let jb = group.conjugate(j)?;
        let v = grid.mean_product(&[&values[j], &values[jb], &kernel]) * (chi.parity() as f64 / phi);
        if chi.is_principal() {
            part1 = v;
        } else {
            part2.add(v);
        }
    }
    let part2 = part2.value();

    let mut killed = Neumaier::new();
    for &a in pps {
        for &b in pps {
            if a + b > n {
                break;
            }
            if (a + b) % q == 0 && gcd(a * b % q, q) > 1 {
                killed.add(table.lambda(a as usize) * table.lambda(b as usize));
            }
        }
    }
    let killed = killed.value();
    let g_q = goldbach_average_multiples(series, q as usize, n as usize)?;
    let l1 = kernel_l1(n, 4 * n as usize)?;
    let ln = (n as f64).ln() * (q as f64).ln();
    Ok(MajorSplit {
        q,
        n,
        nodes: m,
        part1: part1.re,
        part2: part2.re,
        part3: ln * ln * l1.value,
        g_q,
        killed,
        residual: ((part1 + part2).re - (g_q - killed))
            .abs()
            .max((part1 + part2).im.abs()),
    })
}

/// `Σ_{p | q} Σ_{p^m ≤ x} log p`, the mass the principal character drops.
pub fn shared_factor_mass(table: &VonMangoldtTable, q: u64, x: f64) -> f64 {
    let end = table.count_upto(x);
    let mut acc = Neumaier::new();
    for &n in &table.breakpoints()[..end] {
        if gcd(n, q) > 1 {
            acc.add(table.lambda(n as usize));
        }
    }
    acc.value()
}
