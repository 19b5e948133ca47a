//! The full group of Dirichlet characters modulo q.
//!
//! Values are stored as exact exponents `k` of `e^{2πik/m}`, where `m` is the
//! exponent of the unit group (lcm of the cyclic component orders), with
//! `None` on residues sharing a factor with q. The unit group is decomposed
//! per prime power: a primitive root for odd `p^k`, `3` for `4`, and the pair
//! `{−1, 5}` for `2^k` with `k ≥ 3`. Character `j` is indexed by the
//! mixed-radix digits of `j` over the component orders, so index 0 is the
//! principal character.

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::arith::{divisors, euler_phi, factorize, gcd};
use crate::error::{domain, out_of_range, Result};

#[derive(Clone, Debug)]
struct Component {
    /// Prime-power modulus this component lives on.
    modulus: u64,
    order: u32,
    /// Discrete log of each residue mod `modulus` (None for non-units).
    dlog: Vec<Option<u32>>,
}

#[derive(Clone, Debug)]
pub struct Character {
    /// Exponent table over residues `0..q`.
    values: Vec<Option<u32>>,
    /// Exponent modulus shared with the group.
    order: u32,
    principal: bool,
    parity: i8,
    conductor: u64,
    /// Index of the inducing primitive character in the group mod `conductor`.
    induced_by: usize,
    /// Exponent table of the inducing primitive character over residues `0..conductor`.
    primitive_values: Vec<Option<u32>>,
}

#[derive(Clone, Debug)]
pub struct CharacterGroup {
    modulus: u64,
    order: u32,
    characters: Vec<Character>,
    conjugates: Vec<usize>,
}

fn render(k: u32, m: u32) -> Complex64 {
    // exact values on the axes
    let four_k = 4 * k as u64;
    if four_k % m as u64 == 0 {
        return match four_k / m as u64 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, TAU * k as f64 / m as f64)
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn primitive_root_mod_prime(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let factors: Vec<u64> = factorize(p - 1).into_iter().map(|(f, _)| f).collect();
    (2..p)
        .find(|&g| factors.iter().all(|&f| pow_mod(g, (p - 1) / f, p) != 1))
        .expect("every prime has a primitive root")
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = ((r as u128 * b as u128) % m as u128) as u64;
        }
        b = ((b as u128 * b as u128) % m as u128) as u64;
        e >>= 1;
    }
    r
}

fn cyclic_component(modulus: u64, generator: u64, order: u32) -> Component {
    let mut dlog = vec![None; modulus as usize];
    let mut x = 1 % modulus;
    for k in 0..order {
        dlog[x as usize] = Some(k);
        x = x * generator % modulus;
    }
    Component {
        modulus,
        order,
        dlog,
    }
}

fn components(q: u64) -> Vec<Component> {
    let mut out = Vec::new();
    for (p, e) in factorize(q) {
        let pk = p.pow(e);
        if p == 2 {
            match e {
                1 => {}
                2 => out.push(cyclic_component(4, 3, 2)),
                _ => {
                    // u ≡ (−1)^a · 5^b (mod 2^e)
                    let half = (pk / 4) as u32;
                    let mut sign = vec![None; pk as usize];
                    let mut five = vec![None; pk as usize];
                    let mut x = 1u64;
                    for b in 0..half {
                        sign[x as usize] = Some(0);
                        five[x as usize] = Some(b);
                        let neg = (pk - x) % pk;
                        sign[neg as usize] = Some(1);
                        five[neg as usize] = Some(b);
                        x = x * 5 % pk;
                    }
                    out.push(Component {
                        modulus: pk,
                        order: 2,
                        dlog: sign,
                    });
                    out.push(Component {
                        modulus: pk,
                        order: half,
                        dlog: five,
                    });
                }
            }
        } else {
            let mut g = primitive_root_mod_prime(p);
            if e >= 2 && pow_mod(g, p - 1, p * p) == 1 {
                g += p;
            }
            out.push(cyclic_component(pk, g, euler_phi(pk) as u32));
        }
    }
    out
}

/// Value tables (exponents mod `m`) for every character mod `q`, plus `m`.
fn unit_character_tables(q: u64) -> (u32, Vec<Vec<Option<u32>>>) {
    let comps = components(q);
    let m = comps.iter().fold(1u64, |acc, c| lcm(acc, c.order as u64)) as u32;
    let count: usize = comps.iter().map(|c| c.order as usize).product();

    // logs[n] = discrete logs of n in each component, None for non-units.
    let logs: Vec<Option<Vec<u32>>> = (0..q)
        .map(|n| {
            if gcd(n, q) != 1 {
                return None;
            }
            comps
                .iter()
                .map(|c| c.dlog[(n % c.modulus) as usize])
                .collect::<Option<Vec<u32>>>()
        })
        .collect();

    let mut tables = Vec::with_capacity(count);
    for j in 0..count {
        let mut digits = Vec::with_capacity(comps.len());
        let mut rest = j;
        for c in &comps {
            digits.push((rest % c.order as usize) as u64);
            rest /= c.order as usize;
        }
        let table = logs
            .iter()
            .map(|l| {
                l.as_ref().map(|l| {
                    let mut k = 0u64;
                    for ((d, &lg), c) in digits.iter().zip(l).zip(&comps) {
                        k += d * lg as u64 * (m / c.order) as u64;
                    }
                    (k % m as u64) as u32
                })
            })
            .collect();
        tables.push(table);
    }
    (m, tables)
}

impl CharacterGroup {
    pub fn new(q: u64) -> Result<Self> {
        if q == 0 {
            return Err(domain("character modulus q must be >= 1"));
        }
        let (m, tables) = unit_character_tables(q);
        let comps = components(q);

        let mut lower: HashMap<u64, (u32, Vec<Vec<Option<u32>>>)> = HashMap::new();
        let divs = divisors(q);
        let mut characters = Vec::with_capacity(tables.len());
        for values in tables {
            let principal = values.iter().all(|v| matches!(v, None | Some(0)));
            let parity = match values[((q - 1) % q) as usize] {
                Some(0) => 1,
                _ => -1,
            };

            let conductor = *divs
                .iter()
                .find(|&&d| {
                    (0..q)
                        .filter(|&n| n % d == 1 % d)
                        .all(|n| matches!(values[n as usize], None | Some(0)))
                })
                .expect("q itself always qualifies");

            let primitive_values: Vec<Option<u32>> = (0..conductor)
                .map(|r| {
                    if gcd(r, conductor) != 1 {
                        return None;
                    }
                    (0..q / conductor)
                        .map(|t| r + t * conductor)
                        .find(|&n| gcd(n, q) == 1)
                        .and_then(|n| values[n as usize])
                })
                .collect();

            let induced_by = if conductor == q {
                characters.len()
            } else {
                let (m_star, lower_tables) = lower
                    .entry(conductor)
                    .or_insert_with(|| unit_character_tables(conductor));
                lower_tables
                    .iter()
                    .position(|t| {
                        t.iter().zip(&primitive_values).all(|(a, b)| match (a, b) {
                            (Some(a), Some(b)) => *a as u64 * m as u64 == *b as u64 * *m_star as u64,
                            (None, None) => true,
                            _ => false,
                        })
                    })
                    .expect("inducing character exists in the group mod the conductor")
            };

            characters.push(Character {
                values,
                order: m,
                principal,
                parity,
                conductor,
                induced_by,
                primitive_values,
            });
        }

        let conjugates = (0..characters.len())
            .map(|j| {
                let mut rest = j;
                let mut idx = 0;
                let mut radix = 1;
                for c in &comps {
                    let d = rest % c.order as usize;
                    rest /= c.order as usize;
                    idx += ((c.order as usize - d) % c.order as usize) * radix;
                    radix *= c.order as usize;
                }
                idx
            })
            .collect();

        Ok(CharacterGroup {
            modulus: q,
            order: m,
            characters,
            conjugates,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Number of characters, φ(q).
    pub fn len(&self) -> usize {
        self.characters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty()
    }

    /// Exponent modulus `m`: values are `e^{2πik/m}`.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn characters(&self) -> &[Character] {
        &self.characters
    }

    pub fn character(&self, j: usize) -> Result<&Character> {
        self.characters.get(j).ok_or_else(|| {
            out_of_range("character index", j as f64, format!("0 <= j < {}", self.len()))
        })
    }

    /// Index of χ̄.
    pub fn conjugate(&self, j: usize) -> Result<usize> {
        self.character(j)?;
        Ok(self.conjugates[j])
    }

    /// χ_j(n) as a complex unit or zero.
    pub fn evaluate(&self, j: usize, n: i64) -> Result<Complex64> {
        Ok(self.character(j)?.value(n))
    }

    /// Indices of all non-principal characters.
    pub fn nonprincipal(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&j| !self.characters[j].principal)
    }
}

/// Free-function form of [`CharacterGroup::new`].
pub fn build_character_group(q: u64) -> Result<CharacterGroup> {
    CharacterGroup::new(q)
}

impl Character {
    pub fn modulus(&self) -> u64 {
        self.values.len() as u64
    }

    /// Exponent `k` with χ(n) = e^{2πik/m}, or `None` when gcd(n, q) > 1.
    pub fn exponent(&self, n: i64) -> Option<u32> {
        let q = self.values.len() as i64;
        self.values[n.rem_euclid(q) as usize]
    }

    pub fn value(&self, n: i64) -> Complex64 {
        match self.exponent(n) {
            Some(k) => render(k, self.order),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// χ*(n) for the inducing primitive character mod the conductor.
    pub fn primitive_value(&self, n: i64) -> Complex64 {
        let q = self.conductor as i64;
        match self.primitive_values[n.rem_euclid(q) as usize] {
            Some(k) => render(k, self.order),
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn is_principal(&self) -> bool {
        self.principal
    }

    /// χ(−1) ∈ {+1, −1}.
    pub fn parity(&self) -> i8 {
        self.parity
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor == self.modulus()
    }

    pub fn induced_by(&self) -> usize {
        self.induced_by
    }

    /// True when every nonzero value is ±1.
    pub fn is_real(&self) -> bool {
        self.values
            .iter()
            .flatten()
            .all(|&k| (2 * k as u64) % self.order as u64 == 0)
    }
}
