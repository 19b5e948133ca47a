//! ψ₂(n) = Σ_{m+m'=n} Λ(m)Λ(m'), the averages G(N) and G_q(N), and the error
//! term G_q(N) − G(N)/φ(q).
//!
//! Two constructions are provided: a quadratic pair enumeration over prime
//! powers (the oracle, bounded by [`DIRECT_LIMIT`]) and a real-input FFT
//! autoconvolution. The FFT path rewrites every odd entry exactly, since an
//! odd `n` needs one even summand and the only even prime powers are powers
//! of two.

use std::io::{Read, Write};

use realfft::RealFftPlanner;

use crate::arith::{euler_phi, VonMangoldtTable};
use crate::error::{domain, out_of_range, Error, Result};
use crate::sum::Neumaier;

/// Largest `N` accepted by [`psi2_direct`].
pub const DIRECT_LIMIT: usize = 20_000;

/// Largest FFT length accepted by [`psi2_fast`] (about 4.3 GB of buffers at the limit).
pub const TRANSFORM_CAPACITY: usize = 1 << 28;

const CACHE_MAGIC: &[u8; 8] = b"PSI2SER\0";
const CACHE_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct Psi2Series {
    n_max: usize,
    /// Indexed by `n`, entries 0 and 1 are zero placeholders.
    psi2: Vec<f64>,
    /// `prefix[N] = G(N)`.
    prefix: Vec<f64>,
}

impl Psi2Series {
    fn from_values(mut psi2: Vec<f64>) -> Self {
        let n_max = psi2.len() - 1;
        for v in psi2.iter_mut().take(4) {
            *v = 0.0;
        }
        let mut prefix = Vec::with_capacity(psi2.len());
        let mut acc = Neumaier::new();
        for &v in &psi2 {
            acc.add(v);
            prefix.push(acc.value());
        }
        Psi2Series {
            n_max,
            psi2,
            prefix,
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// ψ₂(n) for `n ≤ n_max` (zero for `n < 4`).
    #[inline]
    pub fn psi2(&self, n: usize) -> f64 {
        self.psi2[n]
    }

    /// All ψ₂ values indexed by `n`, starting at `n = 0`.
    pub fn values(&self) -> &[f64] {
        &self.psi2
    }

    /// G(N) for any `N ≤ n_max` without the `N ≥ 4` domain check.
    #[inline]
    pub fn prefix(&self, n: usize) -> f64 {
        self.prefix[n]
    }

    /// Persist as header + little-endian `f64` array of ψ₂(2..=n_max).
    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&(self.n_max as u64).to_le_bytes())?;
        for &v in &self.psi2[2..] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Parse {
                line: 0,
                message: "not a psi2 cache file (bad magic)".into(),
            });
        }
        let mut buf4 = [0u8; 4];
        r.read_exact(&mut buf4)?;
        let version = u32::from_le_bytes(buf4);
        if version != CACHE_VERSION {
            return Err(Error::Parse {
                line: 0,
                message: format!("unsupported psi2 cache version {version}"),
            });
        }
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf8)?;
        let n_max = u64::from_le_bytes(buf8) as usize;
        if n_max < 2 {
            return Err(Error::Parse {
                line: 0,
                message: format!("psi2 cache n_max = {n_max} < 2"),
            });
        }
        let mut psi2 = vec![0.0; n_max + 1];
        for v in psi2.iter_mut().skip(2) {
            r.read_exact(&mut buf8)?;
            *v = f64::from_le_bytes(buf8);
        }
        Ok(Psi2Series::from_values(psi2))
    }
}

fn check_series_bound(table: &VonMangoldtTable, n: usize) -> Result<()> {
    if n < 2 {
        return Err(out_of_range("N", n as f64, "N >= 2"));
    }
    if n > table.n_max() {
        return Err(out_of_range(
            "N",
            n as f64,
            format!("N <= table n_max = {}", table.n_max()),
        ));
    }
    Ok(())
}

/// ψ₂(n) for `2 ≤ n ≤ N` by enumerating ordered pairs of prime powers.
pub fn psi2_direct(table: &VonMangoldtTable, n: usize) -> Result<Psi2Series> {
    check_series_bound(table, n)?;
    if n > DIRECT_LIMIT {
        return Err(domain(format!(
            "psi2_direct is quadratic and limited to N <= {DIRECT_LIMIT} (got {n}); use psi2_fast"
        )));
    }
    let bps: Vec<usize> = table
        .breakpoints()
        .iter()
        .map(|&b| b as usize)
        .take_while(|&b| b <= n)
        .collect();
    let mut psi2 = vec![0.0; n + 1];
    for (i, &m) in bps.iter().enumerate() {
        let lm = table.lambda(m);
        for &mp in &bps[i..] {
            if m + mp > n {
                break;
            }
            let w = lm * table.lambda(mp);
            psi2[m + mp] += if mp == m { w } else { 2.0 * w };
        }
    }
    Ok(Psi2Series::from_values(psi2))
}

/// Single entry ψ₂(n) = 2·Σ_{m<n/2} Λ(m)Λ(n−m) + [n even]·Λ(n/2)².
pub fn psi2_entry(table: &VonMangoldtTable, n: usize) -> Result<f64> {
    check_series_bound(table, n)?;
    let mut acc = Neumaier::new();
    for &m in table.breakpoints() {
        let m = m as usize;
        if 2 * m >= n {
            break;
        }
        acc.add(2.0 * table.lambda(m) * table.lambda(n - m));
    }
    if n % 2 == 0 {
        let l = table.lambda(n / 2);
        acc.add(l * l);
    }
    Ok(acc.value())
}

/// Smallest 5-smooth integer ≥ `n`.
fn smooth_length(n: usize) -> usize {
    let mut best = usize::MAX;
    let mut p2 = 1usize;
    while p2 < 2 * n.max(1) {
        let mut p3 = p2;
        while p3 < 2 * n.max(1) {
            let mut p5 = p3;
            while p5 < n {
                p5 *= 5;
            }
            best = best.min(p5);
            p3 *= 3;
        }
        p2 *= 2;
    }
    best
}

/// ψ₂(n) for `2 ≤ n ≤ N` by real-FFT autoconvolution of Λ(0..=N).
///
/// Transform length is the smallest 5-smooth `L ≥ 2N + 1`, so no circular
/// wrap reaches indices `≤ N`. Even entries carry FFT rounding of order
/// `ε·log L·Σ Λ(n)²`; odd entries are recomputed exactly.
pub fn psi2_fast(table: &VonMangoldtTable, n: usize) -> Result<Psi2Series> {
    check_series_bound(table, n)?;
    let len = smooth_length(2 * n + 1);
    if len > TRANSFORM_CAPACITY {
        return Err(Error::Capacity {
            what: "transform length",
            requested: len as u64,
            limit: TRANSFORM_CAPACITY as u64,
        });
    }

    let mut planner = RealFftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);

    let mut input = forward.make_input_vec();
    input[..=n].copy_from_slice(&table.values()[..=n]);
    let mut spectrum = forward.make_output_vec();
    forward
        .process(&mut input, &mut spectrum)
        .map_err(|e| domain(format!("forward transform failed: {e}")))?;
    drop(input);

    for c in spectrum.iter_mut() {
        *c = *c * *c;
    }
    spectrum[0].im = 0.0;
    if len % 2 == 0 {
        let last = spectrum.len() - 1;
        spectrum[last].im = 0.0;
    }

    let mut output = inverse.make_output_vec();
    inverse
        .process(&mut spectrum, &mut output)
        .map_err(|e| domain(format!("inverse transform failed: {e}")))?;
    drop(spectrum);

    let scale = 1.0 / len as f64;
    output.truncate(n + 1);
    for v in output.iter_mut() {
        *v = (*v * scale).max(0.0);
    }

    // Odd n: the even summand must be a power of two.
    let powers_of_two: Vec<usize> = std::iter::successors(Some(2usize), |&p| p.checked_mul(2))
        .take_while(|&p| p <= n)
        .collect();
    let log2 = table.lambda(2);
    for m in (5..=n).step_by(2) {
        let mut acc = Neumaier::new();
        for &p in &powers_of_two {
            if p >= m {
                break;
            }
            acc.add(2.0 * log2 * table.lambda(m - p));
        }
        output[m] = acc.value();
    }

    Ok(Psi2Series::from_values(output))
}

/// G(N) = Σ_{n ≤ N} ψ₂(n), for `4 ≤ N ≤ n_max`.
pub fn goldbach_average(series: &Psi2Series, n: usize) -> Result<f64> {
    if n < 4 {
        return Err(out_of_range("N", n as f64, "N >= 4 (G(N) > 0 only from N = 4)"));
    }
    if n > series.n_max {
        return Err(out_of_range(
            "N",
            n as f64,
            format!("N <= series n_max = {}", series.n_max),
        ));
    }
    Ok(series.prefix[n])
}

/// G_q(N) = Σ_{n ≤ N, q | n} ψ₂(n); `G_1 = G`.
pub fn goldbach_average_multiples(series: &Psi2Series, q: usize, n: usize) -> Result<f64> {
    if q == 0 {
        return Err(out_of_range("q", 0.0, "q >= 1"));
    }
    if q > n {
        return Err(domain(format!("q = {q} exceeds N = {n}")));
    }
    if n > series.n_max {
        return Err(out_of_range(
            "N",
            n as f64,
            format!("N <= series n_max = {}", series.n_max),
        ));
    }
    if q == 1 {
        return Ok(series.prefix[n]);
    }
    Ok((q..=n)
        .step_by(q)
        .map(|m| series.psi2[m])
        .collect::<Neumaier>()
        .value())
}

/// Σ_{n ≤ N, n ≡ a (mod q)} ψ₂(n) for each residue `a` in `0..q`.
pub fn residue_class_sums(series: &Psi2Series, q: usize, n: usize) -> Result<Vec<f64>> {
    if q == 0 {
        return Err(out_of_range("q", 0.0, "q >= 1"));
    }
    if n > series.n_max {
        return Err(out_of_range(
            "N",
            n as f64,
            format!("N <= series n_max = {}", series.n_max),
        ));
    }
    let mut accs = vec![Neumaier::new(); q];
    for m in 2..=n {
        accs[m % q].add(series.psi2[m]);
    }
    Ok(accs.iter().map(Neumaier::value).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorTerm {
    /// G_q(N) − G(N)/φ(q).
    pub raw: f64,
    /// |raw| / (N·log³N).
    pub normalized: f64,
}

pub fn error_term(series: &Psi2Series, q: usize, n: usize) -> Result<ErrorTerm> {
    if q < 2 {
        return Err(out_of_range("q", q as f64, "2 <= q <= N"));
    }
    let g = goldbach_average(series, n)?;
    let gq = goldbach_average_multiples(series, q, n)?;
    let raw = gq - g / euler_phi(q as u64) as f64;
    Ok(ErrorTerm {
        raw,
        normalized: raw.abs() / log_cube_scale(n as f64),
    })
}

/// N·log³N.
pub fn log_cube_scale(n: f64) -> f64 {
    n * n.ln().powi(3)
}
