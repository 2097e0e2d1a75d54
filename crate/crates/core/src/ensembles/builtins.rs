use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::machines::{
    gamma_code, gamma_literal_length, run_gamma_literal, run_geometric, run_literal, run_sdm4,
    RunOutcome,
};
use super::BitString;
use crate::precision::{DyadicRational, Enclosure};

/// The builtin ensembles, each with a closed-form per-length census.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    Sdm4,
    Literal,
    GammaLiteral,
    Geometric,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::Sdm4,
        Builtin::Literal,
        Builtin::GammaLiteral,
        Builtin::Geometric,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Builtin::Sdm4 => "sdm4",
            Builtin::Literal => "literal",
            Builtin::GammaLiteral => "gamma_literal",
            Builtin::Geometric => "geometric",
        }
    }

    pub fn from_id(id: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.id() == id)
    }

    /// Machine-backed ensembles count interpreter steps; geometric is synthetic.
    pub fn is_machine(&self) -> bool {
        !matches!(self, Builtin::Geometric)
    }

    /// Longest program length listed individually by default. Longer lengths
    /// are carried by the census only.
    pub fn default_list_length(&self) -> usize {
        match self {
            Builtin::Sdm4 => 20,
            Builtin::Literal => 21,
            Builtin::GammaLiteral => 20,
            Builtin::Geometric => usize::MAX,
        }
    }

    pub fn run(&self, program: &BitString, step_budget: u64) -> RunOutcome {
        match self {
            Builtin::Sdm4 => run_sdm4(program, step_budget),
            Builtin::Literal => run_literal(program, step_budget),
            Builtin::GammaLiteral => run_gamma_literal(program, step_budget),
            Builtin::Geometric => run_geometric(program),
        }
    }

    /// `census[l]` = number of domain elements of length `l`, for `l <= max_len`.
    pub fn census_upto(&self, max_len: usize) -> Vec<BigUint> {
        let mut c = vec![BigUint::zero(); max_len + 1];
        match self {
            Builtin::Sdm4 => {
                // token sequences of total length m: n(m) = 2 n(m-2) + 3 n(m-4)
                let mut n: Vec<BigUint> = Vec::with_capacity(max_len + 1);
                for m in 0..=max_len {
                    let v = if m == 0 {
                        BigUint::one()
                    } else if m % 2 == 1 {
                        BigUint::zero()
                    } else {
                        let a = &n[m - 2] * 2u32;
                        if m >= 4 {
                            a + &n[m - 4] * 3u32
                        } else {
                            a
                        }
                    };
                    n.push(v);
                }
                for l in 2..=max_len {
                    c[l] = n[l - 2].clone();
                }
            }
            Builtin::Literal => {
                for l in (1..=max_len).step_by(2) {
                    c[l] = BigUint::one() << ((l - 1) / 2);
                }
            }
            Builtin::GammaLiteral => {
                let mut n = 1u64;
                loop {
                    let l = gamma_literal_length(n) as usize;
                    if l > max_len {
                        break;
                    }
                    c[l] = BigUint::one() << n as usize;
                    n += 1;
                }
            }
            Builtin::Geometric => {
                for v in c.iter_mut().skip(1) {
                    *v = BigUint::one();
                }
            }
        }
        c
    }

    /// Total halting probability `sum 2^-|p|` over the whole domain.
    pub fn omega(&self) -> BigRational {
        match self {
            Builtin::Sdm4 => BigRational::new(4.into(), 5.into()),
            _ => BigRational::one(),
        }
    }

    /// Enclosure of the domain's Kraft mass beyond length `l`.
    ///
    /// Kraft-complete ensembles get the exact remainder. For sdm4 the upper
    /// end is the Kraft slack `1 - sum`, the lower end the exact remainder.
    pub fn tail_mass(&self, l: usize) -> Enclosure {
        let partial = kraft_sum(&self.census_upto(l));
        let slack = &DyadicRational::one() - &partial;
        match self {
            Builtin::Sdm4 => {
                let exact = self.omega() - partial.to_rational();
                let lo = DyadicRational::from_rational_rounded(
                    &exact,
                    64,
                    crate::precision::Round::Down,
                );
                Enclosure::new(lo.max(DyadicRational::zero()), slack)
            }
            _ => Enclosure::point(slack),
        }
    }

    /// Every domain element of length `len`, in lexicographic order.
    pub fn programs_of_length(&self, len: usize) -> Vec<BitString> {
        let mut out = Vec::new();
        match self {
            Builtin::Sdm4 => {
                if len >= 2 && len % 2 == 0 {
                    let mut prefix = BitString::empty();
                    sdm4_bodies(len - 2, &mut prefix, &mut out);
                }
            }
            Builtin::Literal => {
                if len % 2 == 1 {
                    let n = (len - 1) / 2;
                    let head = BitString::repeat(true, n).concat(&BitString::repeat(false, 1));
                    out.extend(BitString::all_of_length(n).map(|x| head.concat(&x)));
                }
            }
            Builtin::GammaLiteral => {
                let mut n = 1u64;
                while (gamma_literal_length(n) as usize) < len {
                    n += 1;
                }
                if gamma_literal_length(n) as usize == len {
                    let head = gamma_code(n);
                    out.extend(BitString::all_of_length(n as usize).map(|x| head.concat(&x)));
                }
            }
            Builtin::Geometric => {
                if len >= 1 {
                    out.push(BitString::repeat(true, len - 1).concat(&BitString::repeat(false, 1)));
                }
            }
        }
        out.sort();
        out
    }
}

/// Appends every token sequence of exactly `remaining` bits followed by `11`.
fn sdm4_bodies(remaining: usize, prefix: &mut BitString, out: &mut Vec<BitString>) {
    if remaining == 0 {
        let mut p = prefix.clone();
        p.push(true);
        p.push(true);
        out.push(p);
        return;
    }
    let tokens: &[&[bool]] = &[
        &[false, false],
        &[false, true],
        &[true, false, false, false],
        &[true, false, false, true],
        &[true, false, true, false],
    ];
    for t in tokens {
        if t.len() <= remaining {
            let mut next = prefix.clone();
            for &b in t.iter() {
                next.push(b);
            }
            sdm4_bodies(remaining - t.len(), &mut next, out);
        }
    }
}

/// `sum_l census[l] 2^-l` as an exact dyadic.
pub fn kraft_sum(census: &[BigUint]) -> DyadicRational {
    let mut s = DyadicRational::zero();
    for (l, c) in census.iter().enumerate() {
        if !c.is_zero() {
            s = &s + &DyadicRational::new(BigInt::from(c.clone()), -(l as i64));
        }
    }
    s
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}
