//! Program-size complexity relative to an enumerated machine, and
//! compression-rate profiles of binary expansions.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::ensembles::{BitString, EnsembleSnapshot};
use crate::error::{Error, Result};
use crate::precision::{bits_prefix_enclosure, Enclosure};

/// Whether a table's minima are the true machine-relative complexities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    /// Every domain element up to the entry's length was enumerated.
    Exact,
    /// Some entry comes from beyond the completely listed lengths, so a
    /// shorter program might exist that the budget or listing missed.
    UpperBound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComplexityEntry {
    pub min_length: usize,
    pub min_program: BitString,
}

/// `H(s) = min{|p| : p outputs s}` over the listed programs of one snapshot.
#[derive(Clone, Debug, Serialize)]
pub struct ComplexityTable {
    pub ensemble_id: String,
    pub exactness: Exactness,
    /// Longest length through which the snapshot lists every domain element.
    pub complete_through: usize,
    #[serde(serialize_with = "ser_entries")]
    pub entries: BTreeMap<BitString, ComplexityEntry>,
}

fn ser_entries<S: Serializer>(
    entries: &BTreeMap<BitString, ComplexityEntry>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Row<'a> {
        output: &'a BitString,
        #[serde(rename = "H")]
        h: usize,
        program: &'a BitString,
    }
    s.collect_seq(entries.iter().map(|(o, e)| Row {
        output: o,
        h: e.min_length,
        program: &e.min_program,
    }))
}

impl ComplexityTable {
    pub fn get(&self, output: &BitString) -> Option<&ComplexityEntry> {
        self.entries.get(output)
    }

    /// `H(s)`, if some listed program outputs `s`.
    pub fn h(&self, output: &BitString) -> Option<usize> {
        self.get(output).map(|e| e.min_length)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV with columns `output,H,program`; `-` stands for the empty string.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("output,H,program\n");
        for (o, e) in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{}",
                o.to_token(),
                e.min_length,
                e.min_program.to_token()
            );
        }
        out
    }
}

/// Shortest listed program per output, ties broken by lexicographic order.
pub fn build_table(snapshot: &EnsembleSnapshot) -> ComplexityTable {
    let better = |a: &ComplexityEntry, b: &ComplexityEntry| a.min_program < b.min_program;
    let merged: HashMap<BitString, ComplexityEntry> = snapshot
        .programs()
        .par_iter()
        .fold(
            HashMap::new,
            |mut acc: HashMap<BitString, ComplexityEntry>, r| {
                let candidate = ComplexityEntry {
                    min_length: r.program.len(),
                    min_program: r.program.clone(),
                };
                match acc.get(&r.output) {
                    Some(cur) if !better(&candidate, cur) => {}
                    _ => {
                        acc.insert(r.output.clone(), candidate);
                    }
                }
                acc
            },
        )
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                match a.get(&k) {
                    Some(cur) if !better(&v, cur) => {}
                    _ => {
                        a.insert(k, v);
                    }
                }
            }
            a
        });
    let complete_through = snapshot.listed_horizon();
    let entries: BTreeMap<BitString, ComplexityEntry> = merged.into_iter().collect();
    let exactness = if entries.values().all(|e| e.min_length <= complete_through) {
        Exactness::Exact
    } else {
        Exactness::UpperBound
    };
    ComplexityTable {
        ensemble_id: snapshot.ensemble_id().to_string(),
        exactness,
        complete_through,
        entries,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProfileRow {
    pub n: usize,
    pub bits: BitString,
    /// `H(alpha_n)`, or `None` when no listed program outputs `alpha_n`.
    #[serde(rename = "H")]
    pub h: Option<usize>,
    /// `H(alpha_n) / n` as an exact fraction.
    #[serde(serialize_with = "ser_ratio")]
    pub ratio: Option<BigRational>,
}

fn ser_ratio<S: Serializer>(r: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

/// Rows `n = 1..` of a compression-rate profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Profile {
    pub rows: Vec<ProfileRow>,
    /// First `n` whose bit the enclosure of `alpha` could not resolve; the
    /// profile stops before it.
    pub unresolved_from: Option<usize>,
}

impl Profile {
    /// CSV with columns `n,bits,H,ratio`; absent values are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,bits,H,ratio\n");
        for r in &self.rows {
            let h = r.h.map(|h| h.to_string()).unwrap_or_default();
            let ratio = r.ratio.as_ref().map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{h},{ratio}", r.n, r.bits.to_token());
        }
        if let Some(n) = self.unresolved_from {
            let _ = writeln!(out, "{n},unresolved,,");
        }
        out
    }
}

/// `(n, alpha_n, H(alpha_n), H(alpha_n)/n)` for `n = 1..=max_n`, where
/// `alpha_n` is the first `n` bits of the fractional part of `alpha`.
///
/// Outputs missing from the table are reported as absent. If `alpha` is too
/// wide to fix bit `n`, the profile stops there and records `n`.
pub fn profile(alpha: &Enclosure, max_n: usize, table: &ComplexityTable) -> Profile {
    let mut rows = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let Ok(bits) = bits_prefix_enclosure(alpha, n) else {
            return Profile {
                rows,
                unresolved_from: Some(n),
            };
        };
        let h = table.h(&bits);
        let ratio = h.map(|h| BigRational::new(h.into(), n.into()));
        rows.push(ProfileRow { n, bits, h, ratio });
    }
    Profile {
        rows,
        unresolved_from: None,
    }
}

/// Largest differences of `H_A - H_B` over the outputs both tables contain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvarianceGap {
    pub shared: usize,
    /// `max |H_A(s) - H_B(s)|`.
    pub gap: usize,
    /// `max (H_A(s) - H_B(s))`.
    pub max_a_minus_b: i64,
    /// `max (H_B(s) - H_A(s))`.
    pub max_b_minus_a: i64,
    /// Least output (shortlex) attaining `gap`.
    pub argmax: BitString,
}

/// Exact maxima of the complexity differences over shared outputs.
pub fn invariance_gap(a: &ComplexityTable, b: &ComplexityTable) -> Result<InvarianceGap> {
    let mut result: Option<InvarianceGap> = None;
    for (s, ea) in &a.entries {
        let Some(eb) = b.get(s) else { continue };
        let d = ea.min_length as i64 - eb.min_length as i64;
        let r = result.get_or_insert_with(|| InvarianceGap {
            shared: 0,
            gap: d.unsigned_abs() as usize,
            max_a_minus_b: d,
            max_b_minus_a: -d,
            argmax: s.clone(),
        });
        r.shared += 1;
        if d.unsigned_abs() as usize > r.gap {
            r.gap = d.unsigned_abs() as usize;
            r.argmax = s.clone();
        }
        r.max_a_minus_b = r.max_a_minus_b.max(d);
        r.max_b_minus_a = r.max_b_minus_a.max(-d);
    }
    result.ok_or(Error::DisjointOutputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{enumerate, Builtin, EnsembleSpec};
    use crate::precision::DyadicRational;

    fn table(b: Builtin, maxlen: usize) -> ComplexityTable {
        build_table(&enumerate(&EnsembleSpec::Builtin(b), 10_000, maxlen).unwrap())
    }

    fn gamma_h(n: usize) -> usize {
        n + 2 * (usize::BITS - 1 - n.leading_zeros()) as usize + 1
    }

    #[test]
    fn literal_closed_form() {
        let t = table(Builtin::Literal, 15);
        assert_eq!(t.exactness, Exactness::Exact);
        for n in 0..=7 {
            for x in BitString::all_of_length(n) {
                assert_eq!(t.h(&x), Some(2 * n + 1), "{x}");
            }
        }
        assert_eq!(t.len(), (1 << 8) - 1);
    }

    #[test]
    fn gamma_literal_closed_form() {
        let t = table(Builtin::GammaLiteral, 14);
        for n in 1..=6 {
            for x in BitString::all_of_length(n) {
                assert_eq!(t.h(&x), Some(gamma_h(n)), "{x}");
            }
        }
    }

    #[test]
    fn sdm4_empty_output() {
        let t = table(Builtin::Sdm4, 8);
        let e = t.get(&BitString::empty()).unwrap();
        assert_eq!(e.min_length, 2);
        assert_eq!(e.min_program.to_string(), "11");
    }

    #[test]
    fn five_eighths_profile() {
        let t = table(Builtin::GammaLiteral, 14);
        let alpha = Enclosure::point("5/8".parse::<DyadicRational>().unwrap());
        let p = profile(&alpha, 6, &t);
        let last = p.rows.last().unwrap();
        assert_eq!(last.bits.to_string(), "101000");
        assert_eq!(last.h, Some(11));
        assert_eq!(last.ratio, Some(BigRational::new(11.into(), 6.into())));
        assert!(p.to_csv().ends_with("6,101000,11,11/6\n"));
        assert!(profile(&alpha, 0, &t).rows.is_empty());
    }

    #[test]
    fn all_zero_profile_on_literal() {
        let t = table(Builtin::Literal, 13);
        let p = profile(&Enclosure::zero(), 6, &t);
        for r in &p.rows {
            assert_eq!(r.h, Some(2 * r.n + 1));
        }
        // beyond the listing the output is absent, not guessed
        let p = profile(&Enclosure::zero(), 8, &t);
        assert_eq!(p.rows[7].h, None);
        assert_eq!(p.rows[7].ratio, None);
    }

    #[test]
    fn unresolved_alpha_stops_the_profile() {
        let t = table(Builtin::Literal, 9);
        let alpha = Enclosure::new("1/4".parse().unwrap(), "5/16".parse().unwrap());
        let p = profile(&alpha, 5, &t);
        assert_eq!(p.rows.len(), 3);
        assert_eq!(p.unresolved_from, Some(4));
    }

    #[test]
    fn gaps() {
        let lit = table(Builtin::Literal, 17);
        let gam = table(Builtin::GammaLiteral, 14);
        let g = invariance_gap(&lit, &gam).unwrap();
        // arithmetic oracle over the shared lengths 1..=7
        let expect = (1..=7).map(|n| (2 * n + 1) as i64 - gamma_h(n) as i64);
        assert_eq!(g.max_a_minus_b, expect.clone().max().unwrap());
        assert_eq!(g.max_b_minus_a, expect.map(|d| -d).max().unwrap());
        assert_eq!(g.gap, 3);
        assert_eq!(g.argmax.len(), 7);
        let same = invariance_gap(&lit, &lit).unwrap();
        assert_eq!(
            (same.gap, same.max_a_minus_b, same.max_b_minus_a),
            (0, 0, 0)
        );
    }

    #[test]
    fn disjoint_tables() {
        let geo = table(Builtin::Geometric, 3);
        let mut lit = table(Builtin::Literal, 1);
        // literal at length 1 outputs only the empty string, which geometric never prints
        assert_eq!(lit.len(), 1);
        assert!(matches!(
            invariance_gap(&geo, &lit),
            Err(Error::DisjointOutputs)
        ));
        let sdm = table(Builtin::Sdm4, 2);
        let g = invariance_gap(&sdm, &lit).unwrap();
        assert_eq!((g.shared, g.gap), (1, 1));
        lit.entries.clear();
        assert!(invariance_gap(&sdm, &lit).is_err());
    }
}
