//! Power series on the circle `|z| = e^{−1/N}` and the kernel `I_N(1/z)`.
//!
//! `Ψ(z) = Σ Λ(n)zⁿ`, `Ψ(z,χ) = Σ χ(n)Λ(n)zⁿ`, `F_q(z) = Σ_{q|n} ψ₂(n)zⁿ`,
//! all truncated at a common `n_cut`, and `I_N(1/z) = Σ_{n ≤ N} z^{−n}`.
//! Integrals over `α ∈ [0,1)` of truncated products are trigonometric
//! polynomials, so equispaced node sums with enough nodes are exact.

use std::f64::consts::{E, TAU};

use num_complex::Complex64;

use crate::arith::VonMangoldtTable;
use crate::characters::CharacterGroup;
use crate::error::{domain, out_of_range, Error, Result};
use crate::goldbach::{goldbach_average_multiples, Psi2Series};
use crate::sum::{ComplexNeumaier, Neumaier};

pub const DEFAULT_TAIL_EPSILON: f64 = 1e-18;

/// Largest `N` for the node-exact quadrature checks.
pub const QUADRATURE_N_LIMIT: u64 = 64;

/// Node budget for [`kernel_l1`].
pub const KERNEL_NODE_BUDGET: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CirclePoint {
    n: u64,
    alpha: f64,
    r: f64,
    z: Complex64,
}

/// `α` reduced into `(−1/2, 1/2]`.
fn normalize_alpha(alpha: f64) -> f64 {
    let a = alpha - alpha.round();
    if a <= -0.5 {
        a + 1.0
    } else {
        a
    }
}

impl CirclePoint {
    pub fn new(n: u64, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(out_of_range("N", 0.0, "N >= 1"));
        }
        if !alpha.is_finite() {
            return Err(domain(format!("alpha = {alpha} is not finite")));
        }
        let alpha = normalize_alpha(alpha);
        let r = (-1.0 / n as f64).exp();
        Ok(CirclePoint {
            n,
            alpha,
            r,
            z: Complex64::from_polar(r, TAU * alpha),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    /// `z^k = e^{−k/N} e(kα)`, with the phase reduced before scaling by 2π.
    pub fn power(&self, k: i64) -> Complex64 {
        let phase = normalize_alpha(k as f64 * self.alpha);
        Complex64::from_polar((-(k as f64) / self.n as f64).exp(), TAU * phase)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesCutoff {
    n_cut: usize,
    epsilon_tail: f64,
}

impl SeriesCutoff {
    /// `n_cut = ⌈N ln(1/ε)⌉`.
    pub fn new(n: u64, epsilon_tail: f64) -> Result<Self> {
        if n == 0 {
            return Err(out_of_range("N", 0.0, "N >= 1"));
        }
        if !(epsilon_tail > 0.0 && epsilon_tail < 1.0) {
            return Err(out_of_range("epsilon_tail", epsilon_tail, "0 < epsilon < 1"));
        }
        let n_cut = (n as f64 * (1.0 / epsilon_tail).ln()).ceil() as usize;
        Ok(SeriesCutoff { n_cut, epsilon_tail })
    }

    pub fn for_n(n: u64) -> Result<Self> {
        Self::new(n, DEFAULT_TAIL_EPSILON)
    }

    /// Explicit cutoff; the tail parameter becomes `e^{−n_cut/N}`.
    pub fn with_n_cut(n: u64, n_cut: usize) -> Result<Self> {
        if n == 0 || n_cut == 0 {
            return Err(domain("N and n_cut must be positive"));
        }
        Ok(SeriesCutoff {
            n_cut,
            epsilon_tail: (-(n_cut as f64) / n as f64).exp(),
        })
    }

    pub fn n_cut(&self) -> usize {
        self.n_cut
    }

    pub fn epsilon_tail(&self) -> f64 {
        self.epsilon_tail
    }
}

/// A truncated series value with a bound on the omitted tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// `Σ_{n > M} log(n) e^{−n/N} ≤ e^{−M/N}(N ln M + N²/M)` for `M ln M > N`.
pub fn psi_tail_bound(n: u64, n_cut: usize) -> f64 {
    let (nf, m) = (n as f64, n_cut as f64);
    if m * m.ln() <= nf {
        return f64::INFINITY;
    }
    (-m / nf).exp() * (nf * m.ln() + nf * nf / m)
}

/// `Σ_{n > M} n ln²(n) e^{−n/N} ≤ 2N·M ln²M·e^{−M/N}` for `M > 2N(1 + 2/ln M)`.
pub fn fq_tail_bound(n: u64, n_cut: usize) -> f64 {
    let (nf, m) = (n as f64, n_cut as f64);
    if m <= 2.0 * nf * (1.0 + 2.0 / m.ln()) {
        return f64::INFINITY;
    }
    2.0 * nf * m * m.ln().powi(2) * (-m / nf).exp()
}

fn check_cutoff(available: usize, cutoff: &SeriesCutoff) -> Result<()> {
    if cutoff.n_cut > available {
        return Err(Error::Capacity {
            what: "series cutoff",
            requested: cutoff.n_cut as u64,
            limit: available as u64,
        });
    }
    Ok(())
}

/// `Ψ(z)` truncated at `n_cut`.
pub fn psi_series(table: &VonMangoldtTable, point: &CirclePoint, cutoff: &SeriesCutoff) -> Result<SeriesValue> {
    check_cutoff(table.n_max(), cutoff)?;
    let end = table.count_upto(cutoff.n_cut as f64);
    let mut acc = ComplexNeumaier::new();
    for &n in &table.breakpoints()[..end] {
        acc.add(point.power(n as i64) * table.lambda(n as usize));
    }
    Ok(SeriesValue {
        value: acc.value(),
        tail_bound: psi_tail_bound(point.n, cutoff.n_cut),
    })
}

/// `Ψ(z,χ_j)` truncated at `n_cut`.
pub fn psi_series_twisted(
    table: &VonMangoldtTable,
    group: &CharacterGroup,
    j: usize,
    point: &CirclePoint,
    cutoff: &SeriesCutoff,
) -> Result<SeriesValue> {
    let chi = group.character(j)?;
    check_cutoff(table.n_max(), cutoff)?;
    let end = table.count_upto(cutoff.n_cut as f64);
    let mut acc = ComplexNeumaier::new();
    for &n in &table.breakpoints()[..end] {
        if chi.exponent(n as i64).is_some() {
            acc.add(chi.value(n as i64) * point.power(n as i64) * table.lambda(n as usize));
        }
    }
    Ok(SeriesValue {
        value: acc.value(),
        tail_bound: psi_tail_bound(point.n, cutoff.n_cut),
    })
}

/// `F_q(z)` truncated at `n_cut`.
pub fn fq_series(series: &Psi2Series, q: u64, point: &CirclePoint, cutoff: &SeriesCutoff) -> Result<SeriesValue> {
    if q == 0 {
        return Err(out_of_range("q", 0.0, "q >= 1"));
    }
    check_cutoff(series.n_max(), cutoff)?;
    let mut acc = ComplexNeumaier::new();
    let mut n = q as usize;
    while n <= cutoff.n_cut {
        acc.add(point.power(n as i64) * series.psi2(n));
        n += q as usize;
    }
    Ok(SeriesValue {
        value: acc.value(),
        tail_bound: fq_tail_bound(point.n, cutoff.n_cut),
    })
}

/// `z − 1` without cancellation near `α = 0`.
fn z_minus_one(point: &CirclePoint) -> Complex64 {
    let theta = TAU * point.alpha;
    let s = (0.5 * theta).sin();
    let re = (-1.0 / point.n as f64).exp_m1() * theta.cos() - 2.0 * s * s;
    Complex64::new(re, point.r * theta.sin())
}

/// `I_N(1/z) = (1 − z^{−N})/(z − 1)`.
pub fn kernel_inverse(point: &CirclePoint) -> Complex64 {
    let z_minus_n = point.power(-(point.n as i64));
    (Complex64::new(1.0, 0.0) - z_minus_n) / z_minus_one(point)
}

/// `Σ_{n ≤ N} z^{−n}` term by term.
pub fn kernel_inverse_direct(point: &CirclePoint) -> Complex64 {
    let mut acc = ComplexNeumaier::new();
    for k in 1..=point.n as i64 {
        acc.add(point.power(-k));
    }
    acc.value()
}

/// `|I_N(1/z)| · max(1/N, |α|) / e`, at most 1 when the pointwise bound holds.
pub fn kernel_bound_ratio(point: &CirclePoint) -> f64 {
    kernel_inverse(point).norm() * (1.0 / point.n as f64).max(point.alpha.abs()) / E
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelL1 {
    pub n: u64,
    pub value: f64,
    pub nodes: usize,
    /// Relative change between the last two refinements.
    pub rel_change: f64,
    pub converged: bool,
}

/// `∫₀¹ |I_N(1/z)| dα` by the periodic trapezoid rule, doubling the node
/// count from `m` until two successive values agree within 1%.
pub fn kernel_l1(n: u64, m: usize) -> Result<KernelL1> {
    if n == 0 {
        return Err(out_of_range("N", 0.0, "N >= 1"));
    }
    if (m as u64) < 4 * n {
        return Err(domain(format!("node count {m} is below 4N = {}", 4 * n)));
    }
    let eval = |m: usize| -> Result<f64> {
        let mut acc = Neumaier::new();
        for j in 0..m {
            let p = CirclePoint::new(n, j as f64 / m as f64)?;
            acc.add(kernel_inverse(&p).norm());
        }
        Ok(acc.value() / m as f64)
    };
    let mut nodes = m;
    let mut prev = eval(nodes)?;
    loop {
        if nodes * 2 > KERNEL_NODE_BUDGET {
            return Ok(KernelL1 {
                n,
                value: prev,
                nodes,
                rel_change: f64::INFINITY,
                converged: false,
            });
        }
        nodes *= 2;
        let cur = eval(nodes)?;
        let rel = (cur - prev).abs() / cur.abs();
        if rel <= 0.01 {
            return Ok(KernelL1 {
                n,
                value: cur,
                nodes,
                rel_change: rel,
                converged: true,
            });
        }
        prev = cur;
    }
}

/// Equispaced nodes `α_j = j/M` with an exact integer phase table.
#[derive(Clone, Debug)]
pub struct NodeGrid {
    n: u64,
    m: usize,
    roots: Vec<Complex64>,
}

impl NodeGrid {
    pub fn new(n: u64, m: usize) -> Self {
        let roots = (0..m)
            .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / m as f64))
            .collect();
        NodeGrid { n, m, roots }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// `Σ_k a_k r^k e(k j/M)` at every node `j`, for `(k, a_k)` with `k ≥ −M`.
    pub fn evaluate(&self, terms: &[(i64, Complex64)]) -> Vec<Complex64> {
        let m = self.m as i64;
        let weighted: Vec<(usize, Complex64)> = terms
            .iter()
            .map(|&(k, a)| (k.rem_euclid(m) as usize, a * (-(k as f64) / self.n as f64).exp()))
            .collect();
        (0..self.m)
            .map(|j| {
                let mut acc = ComplexNeumaier::new();
                for &(k, a) in &weighted {
                    acc.add(a * self.roots[(k * j) % self.m]);
                }
                acc.value()
            })
            .collect()
    }

    /// `I_N(1/z)` at every node, from its closed form.
    pub fn kernel(&self) -> Vec<Complex64> {
        (0..self.m)
            .map(|j| {
                let p = CirclePoint::new(self.n, j as f64 / self.m as f64).expect("valid point");
                kernel_inverse(&p)
            })
            .collect()
    }

    /// Node mean of the pointwise product of the given value vectors.
    pub fn mean_product(&self, factors: &[&[Complex64]]) -> Complex64 {
        let mut acc = ComplexNeumaier::new();
        for j in 0..self.m {
            let mut v = Complex64::new(1.0, 0.0);
            for f in factors {
                v *= f[j];
            }
            acc.add(v);
        }
        acc.value() / self.m as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureCheck {
    pub q: u64,
    pub n: u64,
    pub nodes: usize,
    pub integral: Complex64,
    pub target: f64,
    pub residual: f64,
}

/// `∫₀¹ F_q(z) I_N(1/z) dα` by exact node quadrature against `G_q(N)`.
pub fn quadrature_identity(series: &Psi2Series, q: u64, n: u64) -> Result<QuadratureCheck> {
    if n > QUADRATURE_N_LIMIT {
        return Err(Error::Capacity {
            what: "quadrature N",
            requested: n,
            limit: QUADRATURE_N_LIMIT,
        });
    }
    if n < 4 {
        return Err(out_of_range("N", n as f64, "N >= 4"));
    }
    if q == 0 || q > n {
        return Err(out_of_range("q", q as f64, format!("1 <= q <= N = {n}")));
    }
    let cutoff = SeriesCutoff::for_n(n)?;
    let n_cut = cutoff.n_cut();
    if n_cut > series.n_max() {
        return Err(Error::Capacity {
            what: "series cutoff",
            requested: n_cut as u64,
            limit: series.n_max() as u64,
        });
    }
    let m = 2 * (n_cut + n as usize) + 1;
    let grid = NodeGrid::new(n, m);
    let fq_terms: Vec<(i64, Complex64)> = (1..=n_cut / q as usize)
        .map(|k| {
            let idx = k * q as usize;
            (idx as i64, Complex64::new(series.psi2(idx), 0.0))
        })
        .collect();
    let fq = grid.evaluate(&fq_terms);
    let kernel = grid.kernel();
    let integral = grid.mean_product(&[&fq, &kernel]);
    let target = goldbach_average_multiples(series, q as usize, n as usize)?;
    Ok(QuadratureCheck {
        q,
        n,
        nodes: m,
        integral,
        target,
        residual: (integral.re - target).abs().max(integral.im.abs()),
    })
}
