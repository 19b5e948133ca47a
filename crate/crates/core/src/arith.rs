//! Sieve-built von Mangoldt table, Chebyshev ψ, totient and trial factorization.
//!
//! The table is built once by a smallest-prime-factor linear sieve and is
//! immutable afterwards. `log p` is computed a single time per prime and the
//! same `f64` is stored at every power `p^k`, so `Λ(p) == Λ(p^k)` bit for bit.

use crate::error::{out_of_range, Error, Result};
use crate::sum::Neumaier;

/// Largest `n_max` accepted by [`sieve_von_mangoldt`].
///
/// At this size the table holds 1.6 GB of `f64` values plus an 0.8 GB
/// transient smallest-prime-factor array. Segmented sieving beyond this is
/// not implemented.
pub const SIEVE_CAPACITY: usize = 200_000_000;

#[derive(Clone, Debug)]
pub struct VonMangoldtTable {
    n_max: usize,
    /// `values[n] = Λ(n)` for `0 ≤ n ≤ n_max`; `values[0]` is unused and zero.
    values: Vec<f64>,
    /// Prime powers `≤ n_max`, ascending.
    breakpoints: Vec<u64>,
    /// `psi_prefix[i] = Σ_{j ≤ i} Λ(breakpoints[j])`, compensated.
    psi_prefix: Vec<f64>,
}

/// Build `Λ(n)` for `1 ≤ n ≤ n_max`.
pub fn sieve_von_mangoldt(n_max: usize) -> Result<VonMangoldtTable> {
    if n_max == 0 {
        return Err(out_of_range("n_max", 0.0, "n_max >= 1"));
    }
    if n_max > SIEVE_CAPACITY {
        return Err(Error::Capacity {
            what: "sieve length",
            requested: n_max as u64,
            limit: SIEVE_CAPACITY as u64,
        });
    }

    let mut spf = vec![0u32; n_max + 1];
    let mut primes: Vec<u32> = Vec::new();
    let mut values = vec![0.0f64; n_max + 1];

    for i in 2..=n_max {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        let si = spf[i];
        for &p in &primes {
            if p > si {
                break;
            }
            let m = i * p as usize;
            if m > n_max {
                break;
            }
            spf[m] = p;
        }

        let p = si as usize;
        let rest = i / p;
        if rest == 1 {
            values[i] = (p as f64).ln();
        } else if spf[rest] as usize == p && values[rest] > 0.0 {
            values[i] = values[rest];
        }
    }
    drop(spf);
    drop(primes);

    let mut breakpoints = Vec::new();
    let mut psi_prefix = Vec::new();
    let mut acc = Neumaier::new();
    for (n, &v) in values.iter().enumerate() {
        if v > 0.0 {
            breakpoints.push(n as u64);
            acc.add(v);
            psi_prefix.push(acc.value());
        }
    }

    Ok(VonMangoldtTable {
        n_max,
        values,
        breakpoints,
        psi_prefix,
    })
}

impl VonMangoldtTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `Λ(n)`; zero for `n = 0` and `n > n_max` is not allowed.
    #[inline]
    pub fn lambda(&self, n: usize) -> f64 {
        self.values[n]
    }

    /// Whole value array, indexed by `n` (entry 0 is zero).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Prime powers up to `n_max`, ascending.
    pub fn breakpoints(&self) -> &[u64] {
        &self.breakpoints
    }

    /// Number of prime powers `≤ x`.
    pub fn count_upto(&self, x: f64) -> usize {
        if x < 2.0 {
            return 0;
        }
        let fx = x.floor() as u64;
        self.breakpoints.partition_point(|&b| b <= fx)
    }

    /// `ψ(x) = Σ_{n ≤ x} Λ(n)`.
    pub fn chebyshev_psi(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(out_of_range("x", x, "x >= 0"));
        }
        if x > self.n_max as f64 {
            return Err(out_of_range("x", x, format!("x <= n_max = {}", self.n_max)));
        }
        Ok(match self.count_upto(x) {
            0 => 0.0,
            k => self.psi_prefix[k - 1],
        })
    }
}

/// Free-function form of [`VonMangoldtTable::chebyshev_psi`].
pub fn chebyshev_psi(table: &VonMangoldtTable, x: f64) -> Result<f64> {
    table.chebyshev_psi(x)
}

/// Canonical ascending factorization `[(p, e), ...]`; empty for `q = 1`.
///
/// # Panics
/// If `q == 0`.
pub fn factorize(mut q: u64) -> Vec<(u64, u32)> {
    assert!(q >= 1, "factorize requires q >= 1");
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= q {
        if q % p == 0 {
            let mut e = 0;
            while q % p == 0 {
                q /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if q > 1 {
        out.push((q, 1));
    }
    out
}

/// Euler's totient.
///
/// # Panics
/// If `q == 0`.
pub fn euler_phi(q: u64) -> u64 {
    factorize(q)
        .into_iter()
        .fold(q, |acc, (p, _)| acc / p * (p - 1))
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Divisors of `q` in ascending order.
pub fn divisors(q: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factorize(q) {
        let len = ds.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                ds.push(ds[i] * pk);
            }
        }
    }
    ds.sort_unstable();
    ds
}
