//! Twisted Chebyshev functions `ψ(x,χ)` and their mean-square moments
//!
//! `J₁(X) = ∫₀^X |ψ(x,χ)|² dx` and `J₂(X,h) = ∫₀^X |ψ(x+h,χ) − ψ(x,χ)|² dx`,
//! both integrated exactly as step functions.

use num_complex::Complex64;

use crate::arith::{gcd, VonMangoldtTable};
use crate::characters::CharacterGroup;
use crate::error::{domain, out_of_range, Result};
use crate::step::StepPath;
use crate::sum::{ComplexNeumaier, Neumaier};

#[derive(Clone, Debug)]
pub struct TwistedPsiPath {
    modulus: u64,
    char_index: usize,
    x_max: usize,
    path: StepPath,
}

fn check_x(table: &VonMangoldtTable, x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(out_of_range("x", x, "x >= 0"));
    }
    if x > table.n_max() as f64 {
        return Err(out_of_range("x", x, format!("x <= n_max = {}", table.n_max())));
    }
    Ok(())
}

impl TwistedPsiPath {
    /// Path of `ψ(x,χ_j)` for `0 ≤ x ≤ x_max`.
    pub fn new(table: &VonMangoldtTable, group: &CharacterGroup, j: usize, x_max: usize) -> Result<Self> {
        Self::weighted(table, group, j, x_max, |_| 1.0)
    }

    /// Path of `Σ_{n ≤ x} χ(n)Λ(n)·w(n)`.
    pub fn weighted<W>(
        table: &VonMangoldtTable,
        group: &CharacterGroup,
        j: usize,
        x_max: usize,
        weight: W,
    ) -> Result<Self>
    where
        W: Fn(u64) -> f64,
    {
        let chi = group.character(j)?;
        if x_max > table.n_max() {
            return Err(out_of_range(
                "x_max",
                x_max as f64,
                format!("x_max <= n_max = {}", table.n_max()),
            ));
        }
        let end = table.breakpoints().partition_point(|&b| b <= x_max as u64);
        let path = StepPath::from_jumps(table.breakpoints()[..end].iter().filter_map(|&n| {
            chi.exponent(n as i64)?;
            Some((n as i64, chi.value(n as i64) * (table.lambda(n as usize) * weight(n))))
        }));
        Ok(TwistedPsiPath {
            modulus: group.modulus(),
            char_index: j,
            x_max,
            path,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn char_index(&self) -> usize {
        self.char_index
    }

    pub fn x_max(&self) -> usize {
        self.x_max
    }

    pub fn path(&self) -> &StepPath {
        &self.path
    }

    /// Jumps sit at integers, so the path is known on `[0, x_max + 1)`.
    fn check(&self, x: f64) -> Result<()> {
        if x.is_nan() || x < 0.0 || x >= (self.x_max + 1) as f64 {
            return Err(out_of_range("x", x, format!("0 <= x < {}", self.x_max + 1)));
        }
        Ok(())
    }

    pub fn value_at(&self, x: f64) -> Result<Complex64> {
        self.check(x)?;
        Ok(self.path.value_at(x))
    }

    /// `J₁(X)`.
    pub fn j1(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.path.square_integral(x))
    }

    /// `J₂(X, h)`; needs `0 ≤ h ≤ X` and `X + h ≤ x_max`.
    pub fn j2(&self, x: f64, h: f64) -> Result<f64> {
        self.check(x)?;
        if h.is_nan() || h < 0.0 {
            return Err(domain(format!("window length h = {h} must be >= 0")));
        }
        if h > x {
            return Err(domain(format!("window length h = {h} exceeds X = {x}")));
        }
        self.check(x + h)?;
        self.path.window_square_integral(0.0, x, h)
    }
}

/// `ψ(x,χ_j) = Σ_{n ≤ x} χ_j(n)Λ(n)`.
pub fn twisted_psi(table: &VonMangoldtTable, group: &CharacterGroup, j: usize, x: f64) -> Result<Complex64> {
    let chi = group.character(j)?;
    check_x(table, x)?;
    let end = table.count_upto(x);
    let mut acc = ComplexNeumaier::new();
    for &n in &table.breakpoints()[..end] {
        acc.add(chi.value(n as i64) * table.lambda(n as usize));
    }
    Ok(acc.value())
}

pub fn j1_moment(table: &VonMangoldtTable, group: &CharacterGroup, j: usize, x: f64) -> Result<f64> {
    check_x(table, x)?;
    TwistedPsiPath::new(table, group, j, x.floor() as usize)?.j1(x)
}

pub fn j2_moment(table: &VonMangoldtTable, group: &CharacterGroup, j: usize, x: f64, h: f64) -> Result<f64> {
    if h > x {
        return Err(domain(format!("window length h = {h} exceeds X = {x}")));
    }
    check_x(table, x)?;
    check_x(table, x + h)?;
    TwistedPsiPath::new(table, group, j, (x + h).floor() as usize)?.j2(x, h)
}

/// `|ψ(x,χ) − ψ(x,χ*)|` together with `Σ_{n ≤ x, (n,q) > 1} Λ(n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImprimitivityDefect {
    pub x: f64,
    pub defect: f64,
    pub bound: f64,
}

impl ImprimitivityDefect {
    /// `defect ≤ bound`, allowing the rounding of unit-modulus character values.
    pub fn holds(&self) -> bool {
        self.defect <= self.bound * (1.0 + 1e-12)
    }
}

/// The difference only involves `n` sharing a factor with `q`, where `χ(n) = 0`,
/// so it is evaluated as `|Σ_{n ≤ x, (n,q) > 1} χ*(n)Λ(n)|`.
pub fn imprimitivity_defect(
    table: &VonMangoldtTable,
    group: &CharacterGroup,
    j: usize,
    x: f64,
) -> Result<ImprimitivityDefect> {
    check_x(table, x)?;
    let end = table.count_upto(x);
    Ok(imprimitivity_profile(table, group, j, &table.breakpoints()[..end])?
        .last()
        .map(|d| ImprimitivityDefect { x, ..*d })
        .unwrap_or(ImprimitivityDefect {
            x,
            defect: 0.0,
            bound: 0.0,
        }))
}

/// Defect and bound at each of `points` (ascending prime powers).
pub fn imprimitivity_profile(
    table: &VonMangoldtTable,
    group: &CharacterGroup,
    j: usize,
    points: &[u64],
) -> Result<Vec<ImprimitivityDefect>> {
    let chi = group.character(j)?;
    let q = group.modulus();
    let mut diff = ComplexNeumaier::new();
    let mut bound = Neumaier::new();
    let mut out = Vec::with_capacity(points.len());
    for &n in points {
        if n as usize > table.n_max() {
            return Err(out_of_range("x", n as f64, format!("x <= n_max = {}", table.n_max())));
        }
        if gcd(n, q) > 1 {
            let lam = table.lambda(n as usize);
            bound.add(lam);
            if !chi.is_primitive() {
                diff.add(chi.primitive_value(n as i64) * lam);
            }
        }
        out.push(ImprimitivityDefect {
            x: n as f64,
            defect: diff.value().norm(),
            bound: bound.value(),
        });
    }
    Ok(out)
}

/// Window length as a function of `X`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WindowLength {
    Fixed(f64),
    /// `h = X · f`.
    Fraction(f64),
    SqrtX,
}

impl WindowLength {
    pub fn at(&self, x: f64) -> f64 {
        match *self {
            WindowLength::Fixed(h) => h,
            WindowLength::Fraction(f) => x * f,
            WindowLength::SqrtX => x.sqrt(),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            WindowLength::Fixed(h) => format!("{h}"),
            WindowLength::Fraction(f) => format!("X*{f}"),
            WindowLength::SqrtX => "sqrt(X)".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GvRow {
    pub q: u64,
    pub char_index: usize,
    pub conductor: u64,
    pub window: WindowLength,
    pub x: f64,
    pub h: f64,
    pub j1: f64,
    pub j2: f64,
    /// `J₁ / (X² log²(2q))`.
    pub ratio1: f64,
    /// `J₂ / ((h+1) X log²(3qX/(h+1)))`.
    pub ratio2: f64,
}

/// Moment ratios over the grid `xs × windows`, rows ordered by window then `X`.
pub fn moment_bound_ratios(
    table: &VonMangoldtTable,
    group: &CharacterGroup,
    j: usize,
    xs: &[f64],
    windows: &[WindowLength],
) -> Result<Vec<GvRow>> {
    let chi = group.character(j)?;
    if chi.is_principal() {
        return Err(domain("moment ratios are defined for nonprincipal characters"));
    }
    let q = group.modulus();
    let mut reach = 0.0f64;
    for &x in xs {
        if !(x >= 1.0) {
            return Err(out_of_range("X", x, "X >= 1"));
        }
        for w in windows {
            reach = reach.max(x + w.at(x));
        }
    }
    check_x(table, reach)?;
    let path = TwistedPsiPath::new(table, group, j, reach.floor() as usize)?;
    let log2q = (2.0 * q as f64).ln();

    let mut rows = Vec::with_capacity(xs.len() * windows.len());
    for w in windows {
        for &x in xs {
            let h = w.at(x);
            let j1 = path.j1(x)?;
            let j2 = path.j2(x, h)?;
            let l = (3.0 * q as f64 * x / (h + 1.0)).ln();
            rows.push(GvRow {
                q,
                char_index: j,
                conductor: chi.conductor(),
                window: *w,
                x,
                h,
                j1,
                j2,
                ratio1: j1 / (x * x * log2q * log2q),
                ratio2: j2 / ((h + 1.0) * x * l * l),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::sieve_von_mangoldt;
    use proptest::prelude::*;

    fn is_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    /// Λ by trial division.
    fn lambda(n: u64) -> f64 {
        (2..=n)
            .find(|&p| n % p == 0)
            .filter(|&p| {
                let mut m = n;
                while m % p == 0 {
                    m /= p;
                }
                m == 1 && is_prime(p)
            })
            .map_or(0.0, |p| (p as f64).ln())
    }

    /// Characters mod 5 from the discrete log base 2: χ_k(2^e) = i^{ke}.
    fn chi_mod5(k: u32, n: i64) -> Complex64 {
        let dlog = [None, Some(0u32), Some(1), Some(3), Some(2)];
        match dlog[n.rem_euclid(5) as usize] {
            None => Complex64::new(0.0, 0.0),
            Some(e) => Complex64::i().powu(k * e),
        }
    }

    fn psi_brute(chi: impl Fn(i64) -> Complex64, x: f64) -> Complex64 {
        (1..=x.floor() as i64).map(|n| chi(n) * lambda(n as u64)).sum()
    }

    fn nontrivial_mod3(g: &CharacterGroup) -> usize {
        g.nonprincipal().next().unwrap()
    }

    #[test]
    fn twisted_psi_mod3_at_five() {
        let t = sieve_von_mangoldt(100).unwrap();
        let g = CharacterGroup::new(3).unwrap();
        let j = nontrivial_mod3(&g);
        let v = twisted_psi(&t, &g, j, 5.0).unwrap();
        assert!((v - Complex64::new(-(5f64.ln()), 0.0)).norm() < 1e-14);
        assert!((v.re + 1.6094).abs() < 1e-4);
        assert!(twisted_psi(&t, &g, j, 100.5).is_err());
        assert!(twisted_psi(&t, &g, 9, 5.0).is_err());
    }

    #[test]
    fn principal_character_misses_only_shared_factors() {
        let t = sieve_von_mangoldt(2000).unwrap();
        for q in [6u64, 10, 12, 30] {
            let g = CharacterGroup::new(q).unwrap();
            for x in [1.0, 7.5, 64.0, 100.0, 1999.0] {
                let omitted: f64 = t
                    .breakpoints()
                    .iter()
                    .filter(|&&n| n as f64 <= x && gcd(n, q) > 1)
                    .map(|&n| t.lambda(n as usize))
                    .sum();
                let lhs = twisted_psi(&t, &g, 0, x).unwrap().re + omitted;
                assert!((lhs - t.chebyshev_psi(x).unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn twisted_psi_matches_independent_mod5_characters() {
        let t = sieve_von_mangoldt(300).unwrap();
        let g = CharacterGroup::new(5).unwrap();
        for j in 0..4 {
            let k = (0..4u32)
                .find(|&k| (1..5).all(|n| (g.evaluate(j, n).unwrap() - chi_mod5(k, n)).norm() < 1e-12))
                .expect("every character mod 5 is a power of the base-2 one");
            for x in [2.0, 10.5, 97.0, 300.0] {
                let a = twisted_psi(&t, &g, j, x).unwrap();
                let b = psi_brute(|n| chi_mod5(k, n), x);
                assert!((a - b).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn j1_hand_value() {
        let t = sieve_von_mangoldt(100).unwrap();
        let g = CharacterGroup::new(3).unwrap();
        let j = nontrivial_mod3(&g);
        let l2 = 2f64.ln();
        assert!((j1_moment(&t, &g, j, 3.0).unwrap() - l2 * l2).abs() < 1e-14);
        assert!((j1_moment(&t, &g, j, 3.0).unwrap() - 0.480453).abs() < 1e-6);
        assert_eq!(j1_moment(&t, &g, j, 1.999).unwrap(), 0.0);
    }

    #[test]
    fn j1_matches_midpoint_oracle_mod5() {
        let t = sieve_von_mangoldt(200).unwrap();
        let g = CharacterGroup::new(5).unwrap();
        // Breakpoints are integers, so a midpoint rule on a grid of 1/64 is exact.
        for j in 0..4 {
            let k = (0..4u32)
                .find(|&k| (1..5).all(|n| (g.evaluate(j, n).unwrap() - chi_mod5(k, n)).norm() < 1e-12))
                .unwrap();
            let oracle: f64 = (0..6400)
                .map(|i| psi_brute(|n| chi_mod5(k, n), (i as f64 + 0.5) / 64.0).norm_sqr() / 64.0)
                .sum();
            let exact = j1_moment(&t, &g, j, 100.0).unwrap();
            assert!((exact - oracle).abs() < 1e-6, "{exact} vs {oracle}");
        }
    }

    #[test]
    fn j2_hand_segments() {
        let t = sieve_von_mangoldt(100).unwrap();
        let g = CharacterGroup::new(3).unwrap();
        let j = nontrivial_mod3(&g);
        // On [0,2): ψ(x) = 0 and ψ(x+2) = −log 2 (χ(3) = 0).
        let l2 = 2f64.ln();
        assert!((j2_moment(&t, &g, j, 2.0, 2.0).unwrap() - 2.0 * l2 * l2).abs() < 1e-14);
        assert_eq!(j2_moment(&t, &g, j, 50.0, 0.0).unwrap(), 0.0);
        assert!(j2_moment(&t, &g, j, 5.0, 6.0).is_err());
        assert!(j2_moment(&t, &g, j, 99.0, 2.0).is_err());
    }

    #[test]
    fn j2_matches_riemann_sum_mod5() {
        let t = sieve_von_mangoldt(200).unwrap();
        let g = CharacterGroup::new(5).unwrap();
        for j in g.nonprincipal() {
            let k = (0..4u32)
                .find(|&k| (1..5).all(|n| (g.evaluate(j, n).unwrap() - chi_mod5(k, n)).norm() < 1e-12))
                .unwrap();
            let prefix: Vec<Complex64> = (0..=60i64)
                .scan(Complex64::new(0.0, 0.0), |acc, n| {
                    if n >= 1 {
                        *acc += chi_mod5(k, n) * lambda(n as u64);
                    }
                    Some(*acc)
                })
                .collect();
            let psi = |x: f64| prefix[x.floor() as usize];
            let step = 1e-3;
            let oracle: f64 = (0..50_000)
                .map(|i| {
                    let x = (i as f64 + 0.5) * step;
                    (psi(x + 5.0) - psi(x)).norm_sqr() * step
                })
                .sum();
            let exact = j2_moment(&t, &g, j, 50.0, 5.0).unwrap();
            assert!((exact - oracle).abs() < 1e-4, "{exact} vs {oracle}");
        }
    }

    #[test]
    fn imprimitivity_principal_mod6() {
        let t = sieve_von_mangoldt(100).unwrap();
        let g = CharacterGroup::new(6).unwrap();
        let d = imprimitivity_defect(&t, &g, 0, 9.0).unwrap();
        let expect = 3.0 * 2f64.ln() + 2.0 * 3f64.ln();
        assert!((d.defect - expect).abs() < 1e-13);
        assert!((d.defect - 4.2767).abs() < 1e-4);
        assert!((d.bound - expect).abs() < 1e-13);
        assert!(d.holds());
    }

    #[test]
    fn imprimitivity_primitive_is_zero() {
        let t = sieve_von_mangoldt(1000).unwrap();
        let g = CharacterGroup::new(5).unwrap();
        for j in g.nonprincipal() {
            assert_eq!(imprimitivity_defect(&t, &g, j, 1000.0).unwrap().defect, 0.0);
        }
    }

    #[test]
    fn imprimitivity_inequality_pointwise() {
        let t = sieve_von_mangoldt(10_000).unwrap();
        for q in 1..=50u64 {
            let g = CharacterGroup::new(q).unwrap();
            for j in 0..g.len() {
                let chi = g.character(j).unwrap();
                if chi.is_primitive() {
                    continue;
                }
                let prof = imprimitivity_profile(&t, &g, j, t.breakpoints()).unwrap();
                assert!(prof.iter().all(|d| d.holds()), "q = {q}, j = {j}");
                // cross-check the subseries against the difference of the two ψ's
                let x = 10_000.0;
                let lower = CharacterGroup::new(chi.conductor()).unwrap();
                let a = twisted_psi(&t, &g, j, x).unwrap();
                let b = twisted_psi(&t, &lower, chi.induced_by(), x).unwrap();
                assert!(((a - b).norm() - prof.last().unwrap().defect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn ratio_rows_are_positive() {
        let t = sieve_von_mangoldt(20_000).unwrap();
        let g = CharacterGroup::new(3).unwrap();
        let j = nontrivial_mod3(&g);
        let xs = [1000.0, 2000.0, 4000.0, 8000.0];
        let ws = [WindowLength::Fraction(0.25), WindowLength::SqrtX, WindowLength::Fixed(1.0)];
        let rows = moment_bound_ratios(&t, &g, j, &xs, &ws).unwrap();
        assert_eq!(rows.len(), 12);
        for r in &rows {
            assert!(r.ratio1.is_finite() && r.ratio1 > 0.0);
            assert!(r.ratio2.is_finite() && r.ratio2 > 0.0);
            assert_eq!(r.conductor, 3);
        }
        assert!(moment_bound_ratios(&t, &g, 0, &xs, &ws).is_err());
        assert!(moment_bound_ratios(&t, &g, j, &[19_000.0], &ws).is_err());
    }

    proptest! {
        #[test]
        fn twisted_psi_bounded_by_psi(q in 1u64..40, x in 0.0f64..3000.0) {
            let t = sieve_von_mangoldt(3000).unwrap();
            let g = CharacterGroup::new(q).unwrap();
            let psi = t.chebyshev_psi(x).unwrap();
            for j in 0..g.len() {
                prop_assert!(twisted_psi(&t, &g, j, x).unwrap().norm() <= psi * (1.0 + 1e-12));
            }
        }

        #[test]
        fn j1_nondecreasing(a in 0.0f64..2000.0, b in 0.0f64..2000.0) {
            let t = sieve_von_mangoldt(2000).unwrap();
            let g = CharacterGroup::new(7).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let p = TwistedPsiPath::new(&t, &g, 1, 2000).unwrap();
            prop_assert!(p.j1(lo).unwrap() <= p.j1(hi).unwrap());
            prop_assert!(p.j1(lo).unwrap() >= 0.0);
        }
    }
}
