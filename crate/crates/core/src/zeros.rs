//! Zeta-zero tables and the explicit-formula oscillation term.
//!
//! A table stores only positive ordinates γ; each stands for the pair
//! ρ = 1/2 ± iγ. The zero sum 2·Σ_ρ N^{ρ+1}/(ρ(ρ+1)) is therefore evaluated as
//! 4·Re Σ_{0<γ≤T} N^{3/2+iγ}/(ρ(ρ+1)), ascending in γ with compensation.

use std::f64::consts::{PI, TAU};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{domain, out_of_range, Error, Result};
use crate::goldbach::{goldbach_average, goldbach_average_multiples, log_cube_scale, Psi2Series};
use crate::arith::euler_phi;
use crate::sum::Neumaier;

/// Environment variable consulted for the default zero-table path.
pub const ZEROS_ENV_VAR: &str = "GOLDBACH_ZEROS";

/// Ordinates closer than this are treated as duplicates.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ZeroTable {
    ordinates: Vec<f64>,
    source_id: String,
}

impl ZeroTable {
    /// Build from already-parsed ordinates, enforcing the table invariants.
    pub fn from_ordinates(ordinates: Vec<f64>, source_id: impl Into<String>) -> Result<Self> {
        if ordinates.is_empty() {
            return Err(domain("zero table is empty"));
        }
        for (i, &g) in ordinates.iter().enumerate() {
            validate_ordinate(g, i.checked_sub(1).map(|j| ordinates[j]), i + 1)?;
        }
        Ok(ZeroTable {
            ordinates,
            source_id: source_id.into(),
        })
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    pub fn len(&self) -> usize {
        self.ordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinates.is_empty()
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    /// Largest ordinate present.
    pub fn height(&self) -> f64 {
        *self.ordinates.last().expect("non-empty by construction")
    }

    /// Number of ordinates `≤ t`.
    pub fn count_upto(&self, t: f64) -> usize {
        self.ordinates.partition_point(|&g| g <= t)
    }
}

fn validate_ordinate(g: f64, prev: Option<f64>, line: usize) -> Result<()> {
    if !g.is_finite() || g <= 14.0 {
        return Err(Error::Parse {
            line,
            message: format!("ordinate {g} is not a nontrivial zero height (must exceed 14)"),
        });
    }
    if let Some(p) = prev {
        if g <= p + DUPLICATE_TOLERANCE {
            return Err(Error::Parse {
                line,
                message: format!("ordinates must be strictly increasing: {g} after {p}"),
            });
        }
    }
    Ok(())
}

/// Parse a text table: one ordinate per line, ascending; blank lines and
/// lines starting with `#` are skipped. Errors carry 1-based line numbers.
pub fn load_zero_table<R: BufRead>(source: R, source_id: impl Into<String>) -> Result<ZeroTable> {
    let mut ordinates = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let g: f64 = text.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("expected a single numeric ordinate, found {text:?}"),
        })?;
        validate_ordinate(g, ordinates.last().copied(), line_no)?;
        ordinates.push(g);
    }
    if ordinates.is_empty() {
        return Err(domain("zero table is empty"));
    }
    Ok(ZeroTable {
        ordinates,
        source_id: source_id.into(),
    })
}

pub fn load_zero_table_path(path: impl AsRef<Path>) -> Result<ZeroTable> {
    let path = path.as_ref();
    let file = File::open(path)?;
    load_zero_table(BufReader::new(file), path.display().to_string())
}

/// 1/(ρ(ρ+1)) with ρ = 1/2 + iγ.
#[inline]
fn inverse_rho_rho1(gamma: f64) -> Complex64 {
    let rho = Complex64::new(0.5, gamma);
    (rho * (rho + 1.0)).inv()
}

fn check_height(zeros: &ZeroTable, t: f64) -> Result<()> {
    if t > zeros.height() {
        return Err(out_of_range(
            "T",
            t,
            format!("T <= table height {} ({})", zeros.height(), zeros.source_id()),
        ));
    }
    Ok(())
}

/// S(N, T) = 2·Σ_{|γ|≤T} N^{ρ+1}/(ρ(ρ+1)), real by conjugate pairing.
pub fn explicit_formula_sum(zeros: &ZeroTable, n: f64, t: f64) -> Result<f64> {
    if !(n >= 4.0) {
        return Err(out_of_range("N", n, "N >= 4"));
    }
    check_height(zeros, t)?;
    let log_n = n.ln();
    let mut acc = Neumaier::new();
    for &g in &zeros.ordinates[..zeros.count_upto(t)] {
        let phase = (g * log_n).rem_euclid(TAU);
        let unit = Complex64::new(phase.cos(), phase.sin());
        acc.add((unit * inverse_rho_rho1(g)).re);
    }
    Ok(4.0 * n.powf(1.5) * acc.value())
}

/// Upper estimate of the zero-sum tail beyond `T`: the in-table remainder
/// Σ_{T<γ≤H} |ρ(ρ+1)|^{-1} plus ∫_H^∞ log(t/2π)/(2π t²) dt, scaled by 4N^{3/2}.
///
/// The out-of-table part uses the leading zero-counting density and is an
/// estimate, not a proven bound.
pub fn truncation_tail_bound(zeros: &ZeroTable, n: f64, t: f64) -> Result<f64> {
    let first = zeros.ordinates[0];
    if t < first {
        return Err(out_of_range("T", t, format!("T >= first ordinate {first}")));
    }
    check_height(zeros, t)?;
    let h = zeros.height();
    let in_table: f64 = zeros.ordinates[zeros.count_upto(t)..]
        .iter()
        .map(|&g| inverse_rho_rho1(g).norm())
        .collect::<Neumaier>()
        .value();
    let beyond = ((h / (2.0 * PI)).ln() + 1.0) / (2.0 * PI * h);
    Ok(4.0 * n.powf(1.5) * (in_table + beyond))
}

/// R(N, T) = G(N) − N²/2 + S(N, T).
pub fn explicit_formula_residual(series: &Psi2Series, zeros: &ZeroTable, n: usize, t: f64) -> Result<f64> {
    let g = goldbach_average(series, n)?;
    let s = explicit_formula_sum(zeros, n as f64, t)?;
    let nf = n as f64;
    Ok(g - 0.5 * nf * nf + s)
}

/// G_q(N) − (N²/2 − S(N, T))/φ(q).
pub fn multiples_residual(
    series: &Psi2Series,
    zeros: &ZeroTable,
    q: usize,
    n: usize,
    t: f64,
) -> Result<f64> {
    if q < 2 {
        return Err(out_of_range("q", q as f64, "2 <= q <= N"));
    }
    goldbach_average(series, n)?;
    let gq = goldbach_average_multiples(series, q, n)?;
    let s = explicit_formula_sum(zeros, n as f64, t)?;
    let nf = n as f64;
    Ok(gq - (0.5 * nf * nf - s) / euler_phi(q as u64) as f64)
}

/// Residual normalizations reported side by side: N log³N and (N log N)^{4/3}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualScales {
    pub log_cube: f64,
    pub four_thirds: f64,
    pub three_halves: f64,
}

pub fn residual_scales(n: f64) -> ResidualScales {
    ResidualScales {
        log_cube: log_cube_scale(n),
        four_thirds: (n * n.ln()).powf(4.0 / 3.0),
        three_halves: n.powf(1.5),
    }
}
