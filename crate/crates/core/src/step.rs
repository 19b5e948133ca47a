//! Right-continuous step functions `P(x) = Σ_{n ≤ x} c_n` with integer jump
//! positions, and exact integration of `|P(x)|²` and `|P(x+h) − P(x)|²`.
//!
//! Every endpoint and the shift `h` are `f64`, hence dyadic rationals. The
//! sweep rescales all event positions (`n` and `n − h`) by a common power of
//! two into `i128`, so event ordering and segment boundaries are decided with
//! integer comparisons and no tolerance.

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::sum::{ComplexNeumaier, Neumaier};

/// Largest number of fractional binary digits accepted in endpoints and shifts.
const MAX_SCALE_BITS: u32 = 64;

#[derive(Clone, Debug, Default)]
pub struct StepPath {
    positions: Vec<i64>,
    /// `prefix[i] = Σ_{k ≤ i} c_{positions[k]}`, compensated.
    prefix: Vec<Complex64>,
}

/// Fractional binary digits of a finite `f64` (0 for integers).
fn fractional_bits(x: f64) -> Option<u32> {
    if x == x.trunc() {
        return Some(0);
    }
    let bits = x.abs().to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let mut mantissa = bits & ((1u64 << 52) - 1);
    let mut e = if exp == 0 {
        -1074
    } else {
        mantissa |= 1u64 << 52;
        exp - 1075
    };
    while mantissa & 1 == 0 {
        mantissa >>= 1;
        e += 1;
    }
    if e >= 0 {
        Some(0)
    } else {
        u32::try_from(-e).ok()
    }
}

/// Exact `x · 2^scale` as an integer; `x` must have at most `scale` fractional bits.
fn scaled(x: f64, scale: u32) -> i128 {
    let v = x * (2f64).powi(scale as i32);
    debug_assert_eq!(v, v.trunc());
    v as i128
}

fn common_scale(values: &[f64]) -> Result<u32> {
    let mut scale = 0;
    for &v in values {
        if !v.is_finite() {
            return Err(domain(format!("non-finite sweep parameter {v}")));
        }
        let b = fractional_bits(v)
            .filter(|&b| b <= MAX_SCALE_BITS)
            .ok_or_else(|| domain(format!("{v} needs more than {MAX_SCALE_BITS} fractional bits")))?;
        scale = scale.max(b);
    }
    Ok(scale)
}

impl StepPath {
    /// Build from `(position, jump)` pairs; positions must be strictly increasing.
    pub fn from_jumps<I>(jumps: I) -> Self
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut positions = Vec::new();
        let mut prefix = Vec::new();
        let mut acc = ComplexNeumaier::new();
        for (pos, c) in jumps {
            if let Some(&last) = positions.last() {
                assert!(pos > last, "jump positions must be strictly increasing");
            }
            acc.add(c);
            positions.push(pos);
            prefix.push(acc.value());
        }
        StepPath { positions, prefix }
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Sum of the first `k` jumps.
    #[inline]
    fn partial(&self, k: usize) -> Complex64 {
        if k == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.prefix[k - 1]
        }
    }

    /// Number of jumps at positions `≤ x`.
    fn count_upto(&self, x: f64) -> usize {
        self.positions.partition_point(|&p| (p as f64) <= x)
    }

    /// `P(x)`.
    pub fn value_at(&self, x: f64) -> Complex64 {
        self.partial(self.count_upto(x))
    }

    /// `∫_0^upper |P(x)|² dx`, assuming no jumps at negative positions matter
    /// (the integral starts at 0).
    pub fn square_integral(&self, upper: f64) -> f64 {
        if !(upper > 0.0) {
            return 0.0;
        }
        let mut acc = Neumaier::new();
        let mut k = self.count_upto(0.0);
        let mut x = 0.0f64;
        while k < self.positions.len() && (self.positions[k] as f64) < upper {
            let next = self.positions[k] as f64;
            acc.add(self.partial(k).norm_sqr() * (next - x));
            x = next;
            k += 1;
        }
        acc.add(self.partial(k).norm_sqr() * (upper - x));
        acc.value()
    }

    /// `∫_lo^hi |P(x+h) − P(x)|² dx` by an exact event sweep.
    pub fn window_square_integral(&self, lo: f64, hi: f64, h: f64) -> Result<f64> {
        if h < 0.0 {
            return Err(domain(format!("window length h = {h} must be >= 0")));
        }
        if !(hi > lo) || h == 0.0 {
            return Ok(0.0);
        }
        let scale = common_scale(&[lo, hi, h])?;
        let unit = (2f64).powi(-(scale as i32));
        let lo_s = scaled(lo, scale);
        let hi_s = scaled(hi, scale);
        let h_s = scaled(h, scale);
        let pos = |k: usize| (self.positions[k] as i128) << scale;
        let n = self.positions.len();

        // i_lo counts jumps ≤ x, i_hi counts jumps ≤ x + h.
        let mut i_lo = self.positions.partition_point(|&p| ((p as i128) << scale) <= lo_s);
        let mut i_hi = self.positions.partition_point(|&p| ((p as i128) << scale) <= lo_s + h_s);
        let mut x = lo_s;
        let mut acc = Neumaier::new();
        loop {
            let next_lo = if i_lo < n { pos(i_lo) } else { i128::MAX };
            let next_hi = if i_hi < n { pos(i_hi) - h_s } else { i128::MAX };
            let next = next_lo.min(next_hi).min(hi_s);
            if next > x {
                let w = self.window(i_lo, i_hi);
                acc.add(w * ((next - x) as f64 * unit));
            }
            if next >= hi_s {
                break;
            }
            x = next;
            while i_lo < n && pos(i_lo) <= x {
                i_lo += 1;
            }
            while i_hi < n && pos(i_hi) - h_s <= x {
                i_hi += 1;
            }
        }
        Ok(acc.value())
    }

    /// `|Σ_{i_lo ≤ k < i_hi} c_k|²`, summing the jumps directly when few.
    #[inline]
    fn window(&self, i_lo: usize, i_hi: usize) -> f64 {
        if i_hi <= i_lo {
            return 0.0;
        }
        if i_hi - i_lo <= 8 {
            let mut s = Complex64::new(0.0, 0.0);
            let mut prev = self.partial(i_lo);
            for k in i_lo..i_hi {
                let cur = self.prefix[k];
                s += cur - prev;
                prev = cur;
            }
            return s.norm_sqr();
        }
        (self.partial(i_hi) - self.partial(i_lo)).norm_sqr()
    }
}
