use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::builtins::Builtin;
use super::census::Census;
use super::machines::RunOutcome;
use super::BitString;
use crate::error::{Error, Result};
use crate::precision::{DyadicRational, Enclosure};

const HEADER: &str = "THERMOAIT-SNAPSHOT v1";

/// Which ensemble to enumerate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnsembleSpec {
    Builtin(Builtin),
    /// A snapshot file produced by [`save_snapshot`] (or written by hand in the same format).
    File(PathBuf),
}

impl EnsembleSpec {
    pub fn id(&self) -> String {
        match self {
            EnsembleSpec::Builtin(b) => b.id().to_string(),
            EnsembleSpec::File(p) => format!("file:{}", p.display()),
        }
    }

    pub fn is_machine_backed(&self) -> bool {
        match self {
            EnsembleSpec::Builtin(b) => b.is_machine(),
            EnsembleSpec::File(_) => false,
        }
    }
}

impl FromStr for EnsembleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(Error::InvalidSpec("file: needs a path".into()));
            }
            return Ok(EnsembleSpec::File(PathBuf::from(path)));
        }
        Builtin::from_id(s).map(EnsembleSpec::Builtin).ok_or_else(|| {
            Error::InvalidSpec(format!(
                "unknown ensemble `{s}` (expected sdm4, literal, gamma_literal, geometric or file:<path>)"
            ))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProgramRecord {
    pub program: BitString,
    pub output: BitString,
    pub steps: u64,
}

/// A canonically ordered finite enumeration of a prefix-free domain.
///
/// `programs` lists domain elements individually, ascending by (length, lex).
/// `census` counts every domain element of each length up to `max_length` and
/// may exceed the listed programs when a listing would be too large.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnsembleSnapshot {
    ensemble_id: String,
    step_budget: u64,
    max_length: usize,
    programs: Vec<ProgramRecord>,
    census: Census,
}

impl EnsembleSnapshot {
    pub fn ensemble_id(&self) -> &str {
        &self.ensemble_id
    }

    pub fn step_budget(&self) -> u64 {
        self.step_budget
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    pub fn programs(&self) -> &[ProgramRecord] {
        &self.programs
    }

    pub fn census(&self) -> &Census {
        &self.census
    }

    pub fn builtin(&self) -> Option<Builtin> {
        self.census.closed_form()
    }

    /// Number of domain elements with length at most `max_length`.
    pub fn domain_size(&self) -> BigUint {
        self.census.total()
    }

    /// Longest length `L` such that every domain element of length `<= L` is listed.
    pub fn listed_horizon(&self) -> usize {
        let mut per_len: BTreeMap<usize, u64> = BTreeMap::new();
        for p in &self.programs {
            *per_len.entry(p.program.len()).or_default() += 1;
        }
        for l in 0..=self.max_length {
            let listed = per_len.get(&l).copied().unwrap_or(0);
            if BigUint::from(listed) != self.census.count(l) {
                return l.saturating_sub(1);
            }
        }
        self.max_length
    }

    /// Kraft sum of the listed programs.
    pub fn program_kraft_sum(&self) -> DyadicRational {
        self.programs.iter().fold(DyadicRational::zero(), |acc, p| {
            &acc + &DyadicRational::pow2(-(p.program.len() as i64))
        })
    }

    /// Re-run every listed program on its machine and compare output and step count.
    pub fn verify_replay(&self) -> Result<()> {
        let Some(b) = self.builtin().filter(|b| b.is_machine()) else {
            return Ok(());
        };
        let bad = self.programs.par_iter().find_first(|rec| {
            b.run(&rec.program, self.step_budget)
                != RunOutcome::Halted {
                    output: rec.output.clone(),
                    steps: rec.steps,
                }
        });
        match bad {
            Some(rec) => Err(Error::Invariant(format!(
                "program {} does not replay to its record",
                rec.program
            ))),
            None => Ok(()),
        }
    }

    /// Keep only lengths `<= max_length`.
    pub fn truncated(&self, max_length: usize) -> EnsembleSnapshot {
        let max_length = max_length.min(self.max_length);
        EnsembleSnapshot {
            ensemble_id: self.ensemble_id.clone(),
            step_budget: self.step_budget,
            max_length,
            programs: self
                .programs
                .iter()
                .filter(|p| p.program.len() <= max_length)
                .cloned()
                .collect(),
            census: self.census.upto(max_length),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{HEADER}").unwrap();
        writeln!(
            s,
            "ensemble={} budget={} maxlen={}",
            self.ensemble_id, self.step_budget, self.max_length
        )
        .unwrap();
        for (l, c) in self.census.nonzero() {
            writeln!(s, "L {l} {c}").unwrap();
        }
        for (i, p) in self.programs.iter().enumerate() {
            writeln!(
                s,
                "P {} {} {} {}",
                i + 1,
                p.program.to_token(),
                p.output.to_token(),
                p.steps
            )
            .unwrap();
        }
        let (num, den) = dyadic_fraction(&self.census.kraft_sum(self.max_length));
        writeln!(s, "KRAFT {num}/{den}").unwrap();
        s
    }

    pub fn from_text(text: &str) -> Result<EnsembleSnapshot> {
        let snap = parse_text(text)?;
        snap.validate()?;
        Ok(snap)
    }

    /// Order, length and replay checks; prefix-freeness and Kraft are checked while parsing.
    fn validate(&self) -> Result<()> {
        for w in self.programs.windows(2) {
            if w[0].program >= w[1].program {
                return Err(Error::Invariant(format!(
                    "programs out of canonical order: {} before {}",
                    w[0].program.to_token(),
                    w[1].program.to_token()
                )));
            }
        }
        let mut per_len: BTreeMap<usize, u64> = BTreeMap::new();
        for p in &self.programs {
            if p.program.len() > self.max_length {
                return Err(Error::Invariant(format!(
                    "program {} longer than maxlen",
                    p.program
                )));
            }
            *per_len.entry(p.program.len()).or_default() += 1;
        }
        for (l, n) in per_len {
            if self.census.count(l) < BigUint::from(n) {
                return Err(Error::Invariant(format!(
                    "census({l}) is below the {n} listed programs"
                )));
            }
        }
        self.verify_replay()
    }
}

fn dyadic_fraction(d: &DyadicRational) -> (BigInt, BigInt) {
    if d.exponent() >= 0 {
        (d.mantissa() << d.exponent() as usize, BigInt::one())
    } else {
        (
            d.mantissa().clone(),
            BigInt::one() << (-d.exponent()) as usize,
        )
    }
}

fn parse_text(text: &str) -> Result<EnsembleSnapshot> {
    let err = |line: usize, message: String| Error::SnapshotParse { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((n, other)) => return Err(err(n, format!("expected `{HEADER}`, found `{other}`"))),
        None => return Err(err(1, "empty file".into())),
    }
    let (n, meta) = lines
        .next()
        .ok_or_else(|| err(2, "missing ensemble line".into()))?;
    let mut id = None;
    let mut budget = None;
    let mut maxlen = None;
    for field in meta.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| err(n, format!("malformed field `{field}`")))?;
        match k {
            "ensemble" => id = Some(v.to_string()),
            "budget" => {
                budget = Some(
                    v.parse::<u64>()
                        .map_err(|_| err(n, format!("bad budget `{v}`")))?,
                )
            }
            "maxlen" => {
                maxlen = Some(
                    v.parse::<usize>()
                        .map_err(|_| err(n, format!("bad maxlen `{v}`")))?,
                )
            }
            _ => return Err(err(n, format!("unknown field `{k}`"))),
        }
    }
    let id = id.ok_or_else(|| err(n, "missing ensemble=".into()))?;
    let budget = budget.ok_or_else(|| err(n, "missing budget=".into()))?;
    let maxlen = maxlen.ok_or_else(|| err(n, "missing maxlen=".into()))?;

    let mut counts = vec![BigUint::zero(); maxlen + 1];
    let mut last_len: Option<usize> = None;
    let mut programs = Vec::new();
    let mut kraft: Option<(BigInt, BigInt)> = None;
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        if kraft.is_some() {
            return Err(err(n, "content after KRAFT line".into()));
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["L", len, count] => {
                if !programs.is_empty() {
                    return Err(err(n, "census line after program lines".into()));
                }
                let len: usize = len
                    .parse()
                    .map_err(|_| err(n, format!("bad length `{len}`")))?;
                let count: BigUint = count
                    .parse()
                    .map_err(|_| err(n, format!("bad count `{count}`")))?;
                if len > maxlen {
                    return Err(err(n, format!("length {len} exceeds maxlen {maxlen}")));
                }
                if last_len.is_some_and(|p| p >= len) {
                    return Err(err(n, "census lengths must ascend".into()));
                }
                if count.is_zero() {
                    return Err(err(n, "census counts must be nonzero".into()));
                }
                last_len = Some(len);
                counts[len] = count;
            }
            ["P", idx, bits, out, steps] => {
                let idx: usize = idx
                    .parse()
                    .map_err(|_| err(n, format!("bad index `{idx}`")))?;
                if idx != programs.len() + 1 {
                    return Err(err(
                        n,
                        format!("expected index {}, found {idx}", programs.len() + 1),
                    ));
                }
                let program = BitString::from_token(bits)
                    .map_err(|_| err(n, format!("bad program `{bits}`")))?;
                let output = BitString::from_token(out)
                    .map_err(|_| err(n, format!("bad output `{out}`")))?;
                let steps: u64 = steps
                    .parse()
                    .map_err(|_| err(n, format!("bad steps `{steps}`")))?;
                programs.push(ProgramRecord {
                    program,
                    output,
                    steps,
                });
            }
            ["KRAFT", frac] => {
                let (p, q) = frac
                    .split_once('/')
                    .ok_or_else(|| err(n, format!("bad fraction `{frac}`")))?;
                let p: BigInt = p
                    .parse()
                    .map_err(|_| err(n, format!("bad numerator `{p}`")))?;
                let q: BigInt = q
                    .parse()
                    .map_err(|_| err(n, format!("bad denominator `{q}`")))?;
                if !q.is_positive() {
                    return Err(err(n, "denominator must be positive".into()));
                }
                kraft = Some((p, q));
            }
            _ => return Err(err(n, format!("unrecognized line `{line}`"))),
        }
    }
    let (p, q) = kraft.ok_or_else(|| err(text.lines().count() + 1, "missing KRAFT line".into()))?;
    let builtin = Builtin::from_id(&id).filter(|b| b.census_upto(maxlen) == counts);
    let census = Census::from_table(counts).with_closed_form(builtin);
    let snap = EnsembleSnapshot {
        ensemble_id: id,
        step_budget: budget,
        max_length: maxlen,
        programs,
        census,
    };

    // structural invariants are reported ahead of the checksum
    snap.validate_structure()?;
    let sum = snap.census.kraft_sum(maxlen);
    let recorded = num_rational::BigRational::new(p.clone(), q.clone());
    if recorded != sum.to_rational() {
        let (sp, sq) = dyadic_fraction(&sum);
        return Err(Error::Checksum {
            recorded: format!("{p}/{q}"),
            computed: format!("{sp}/{sq}"),
        });
    }
    Ok(snap)
}

impl EnsembleSnapshot {
    fn validate_structure(&self) -> Result<()> {
        let mut sorted: Vec<&BitString> = self.programs.iter().map(|p| &p.program).collect();
        sorted.sort_by(|a, b| a.bits().cmp(b.bits()));
        for w in sorted.windows(2) {
            if w[0].is_prefix_of(w[1]) {
                return Err(Error::PrefixFree(w[0].to_token(), w[1].to_token()));
            }
        }
        let one = DyadicRational::one();
        let census_sum = self.census.kraft_sum(self.max_length);
        if census_sum > one {
            return Err(Error::Kraft(format!("census sum {census_sum} exceeds 1")));
        }
        let program_sum = self.program_kraft_sum();
        if program_sum > one {
            return Err(Error::Kraft(format!("program sum {program_sum} exceeds 1")));
        }
        Ok(())
    }
}

/// Enumerate with the default listing length for the ensemble.
pub fn enumerate(
    spec: &EnsembleSpec,
    step_budget: u64,
    max_length: usize,
) -> Result<EnsembleSnapshot> {
    enumerate_with(spec, step_budget, max_length, None)
}

/// Enumerate the domain up to `max_length`, listing programs individually up
/// to `list_length` (the census always covers `max_length`).
pub fn enumerate_with(
    spec: &EnsembleSpec,
    step_budget: u64,
    max_length: usize,
    list_length: Option<usize>,
) -> Result<EnsembleSnapshot> {
    if max_length < 1 {
        return Err(Error::InvalidSpec("max_length must be at least 1".into()));
    }
    match spec {
        EnsembleSpec::File(path) => {
            let snap = load_snapshot(path)?;
            if max_length > snap.max_length {
                return Err(Error::InvalidSpec(format!(
                    "file covers lengths up to {}, requested {max_length}",
                    snap.max_length
                )));
            }
            Ok(snap.truncated(max_length))
        }
        EnsembleSpec::Builtin(b) => {
            if b.is_machine() && step_budget < 1 {
                return Err(Error::InvalidSpec("step budget must be at least 1".into()));
            }
            let list_len = list_length
                .unwrap_or(b.default_list_length())
                .min(max_length);
            let per_len: Vec<Vec<ProgramRecord>> = (1..=list_len)
                .into_par_iter()
                .map(|len| {
                    b.programs_of_length(len)
                        .into_iter()
                        .filter_map(|p| match b.run(&p, step_budget) {
                            RunOutcome::Halted { output, steps } => Some(ProgramRecord {
                                program: p,
                                output,
                                steps,
                            }),
                            _ => None,
                        })
                        .collect()
                })
                .collect();
            Ok(EnsembleSnapshot {
                ensemble_id: b.id().to_string(),
                step_budget,
                max_length,
                programs: per_len.into_iter().flatten().collect(),
                census: Census::from_builtin(*b, max_length),
            })
        }
    }
}

pub fn save_snapshot(snapshot: &EnsembleSnapshot, path: &Path) -> Result<()> {
    fs::write(path, snapshot.to_text()).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_snapshot(path: &Path) -> Result<EnsembleSnapshot> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    EnsembleSnapshot::from_text(&text)
}

/// Certified enclosure of the Kraft mass of domain elements longer than `len`.
pub fn census_tail_mass(snapshot: &EnsembleSnapshot, len: usize) -> Result<Enclosure> {
    if len > snapshot.max_length() {
        return Err(Error::Precondition(format!(
            "L = {len} exceeds max_length {}",
            snapshot.max_length()
        )));
    }
    Ok(snapshot.census().tail_mass(len))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtin(b: Builtin, maxlen: usize) -> EnsembleSnapshot {
        enumerate(&EnsembleSpec::Builtin(b), 1_000, maxlen).unwrap()
    }

    fn tokens(s: &EnsembleSnapshot) -> Vec<String> {
        s.programs().iter().map(|p| p.program.to_string()).collect()
    }

    #[test]
    fn small_enumerations() {
        let s = builtin(Builtin::Sdm4, 2);
        assert_eq!(tokens(&s), ["11"]);
        assert_eq!(s.census().count(2), BigUint::one());

        let l = builtin(Builtin::Literal, 3);
        assert_eq!(tokens(&l), ["0", "100", "101"]);
        let outs: Vec<String> = l.programs().iter().map(|p| p.output.to_token()).collect();
        assert_eq!(outs, ["-", "0", "1"]);

        let g = builtin(Builtin::Geometric, 4);
        let census: Vec<(usize, u32)> = g
            .census()
            .nonzero()
            .map(|(l, c)| (l, c.to_string().parse().unwrap()))
            .collect();
        assert_eq!(census, [(1, 1), (2, 1), (3, 1), (4, 1)]);
        assert_eq!(g.census().kraft_sum(4), "15/16".parse().unwrap());
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            "sdm4".parse::<EnsembleSpec>().unwrap(),
            EnsembleSpec::Builtin(Builtin::Sdm4)
        );
        assert!(matches!(
            "file:x.snap".parse::<EnsembleSpec>().unwrap(),
            EnsembleSpec::File(_)
        ));
        assert!("turing".parse::<EnsembleSpec>().is_err());
        assert!(enumerate(&EnsembleSpec::Builtin(Builtin::Sdm4), 0, 4).is_err());
        assert!(enumerate(&EnsembleSpec::Builtin(Builtin::Sdm4), 10, 0).is_err());
    }

    #[test]
    fn budget_excludes_long_runs() {
        let s = enumerate(&EnsembleSpec::Builtin(Builtin::Sdm4), 2, 8).unwrap();
        assert!(s.programs().iter().all(|p| p.steps <= 2));
        // census still counts the whole domain
        assert_eq!(s.census().count(8), BigUint::from(20u32));
        assert_eq!(
            s.programs().iter().filter(|p| p.program.len() == 4).count(),
            2
        );
        assert_eq!(s.listed_horizon(), 5);
    }

    #[test]
    fn text_round_trip() {
        let s = builtin(Builtin::Sdm4, 10);
        let text = s.to_text();
        assert!(
            text.starts_with("THERMOAIT-SNAPSHOT v1\nensemble=sdm4 budget=1000 maxlen=10\nL 2 1\n")
        );
        assert!(text.contains("P 1 11 - 1\n"));
        let back = EnsembleSnapshot::from_text(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.builtin(), Some(Builtin::Sdm4));
    }

    #[test]
    fn load_errors() {
        let dup = "THERMOAIT-SNAPSHOT v1\nensemble=x budget=1 maxlen=2\nL 1 2\nP 1 0 - 0\nP 2 0 - 0\nKRAFT 1/1\n";
        assert!(matches!(
            EnsembleSnapshot::from_text(dup),
            Err(Error::PrefixFree(..))
        ));
        let kraft = "THERMOAIT-SNAPSHOT v1\nensemble=x budget=1 maxlen=2\nL 1 3\nKRAFT 3/2\n";
        assert!(matches!(
            EnsembleSnapshot::from_text(kraft),
            Err(Error::Kraft(_))
        ));
        let sum = "THERMOAIT-SNAPSHOT v1\nensemble=x budget=1 maxlen=2\nL 1 1\nKRAFT 1/4\n";
        assert!(matches!(
            EnsembleSnapshot::from_text(sum),
            Err(Error::Checksum { .. })
        ));
        let bad = "THERMOAIT-SNAPSHOT v1\nensemble=x budget=1 maxlen=2\nL 1 1\nQ 3\nKRAFT 1/2\n";
        assert!(matches!(
            EnsembleSnapshot::from_text(bad),
            Err(Error::SnapshotParse { line: 4, .. })
        ));
        let order = "THERMOAIT-SNAPSHOT v1\nensemble=x budget=1 maxlen=2\nL 1 1\nL 2 1\nP 1 10 - 0\nP 2 0 - 0\nKRAFT 3/4\n";
        assert!(matches!(
            EnsembleSnapshot::from_text(order),
            Err(Error::Invariant(_))
        ));
        let under = "THERMOAIT-SNAPSHOT v1\nensemble=x budget=1 maxlen=2\nL 2 1\nP 1 10 - 0\nP 2 11 - 0\nKRAFT 1/4\n";
        assert!(matches!(
            EnsembleSnapshot::from_text(under),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn tail_mass_precondition() {
        let g = builtin(Builtin::Geometric, 4);
        assert_eq!(
            census_tail_mass(&g, 4).unwrap(),
            Enclosure::point("1/16".parse().unwrap())
        );
        assert!(census_tail_mass(&g, 5).is_err());
    }
}
