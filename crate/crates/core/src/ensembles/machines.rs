//! Interpreters for the builtin self-delimiting machines.

use crate::ensembles::BitString;

/// Result of running a machine on a candidate program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    Halted {
        output: BitString,
        steps: u64,
    },
    /// Invalid opcode, input exhausted mid-read, or input left unread at halt.
    Diverged,
    BudgetExhausted,
}

impl RunOutcome {
    pub fn output(&self) -> Option<&BitString> {
        match self {
            RunOutcome::Halted { output, .. } => Some(output),
            _ => None,
        }
    }
}

struct Reader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(p: &'a BitString) -> Self {
        Reader {
            bits: p.bits(),
            pos: 0,
        }
    }

    fn next(&mut self) -> Option<bool> {
        let b = self.bits.get(self.pos).copied();
        self.pos += 1;
        b
    }

    fn pair(&mut self) -> Option<(bool, bool)> {
        Some((self.next()?, self.next()?))
    }

    fn finished(&self) -> bool {
        self.pos == self.bits.len()
    }
}

/// Two-bit opcode machine: `00` emit 0, `01` emit 1, `11` halt,
/// `10bb` repeat the last emitted bit `bb + 1` times (`bb = 11` diverges).
/// One step per opcode, the halt opcode included.
pub fn run_sdm4(program: &BitString, step_budget: u64) -> RunOutcome {
    let mut input = Reader::new(program);
    let mut out = BitString::empty();
    let mut last = false;
    let mut steps = 0u64;
    loop {
        if steps == step_budget {
            return RunOutcome::BudgetExhausted;
        }
        let Some(op) = input.pair() else {
            return RunOutcome::Diverged;
        };
        steps += 1;
        match op {
            (false, b) => {
                out.push(b);
                last = b;
            }
            (true, true) => {
                if !input.finished() {
                    return RunOutcome::Diverged;
                }
                return RunOutcome::Halted { output: out, steps };
            }
            (true, false) => {
                let Some(arg) = input.pair() else {
                    return RunOutcome::Diverged;
                };
                let count = match arg {
                    (false, false) => 1,
                    (false, true) => 2,
                    (true, false) => 3,
                    (true, true) => return RunOutcome::Diverged,
                };
                for _ in 0..count {
                    out.push(last);
                }
            }
        }
    }
}

/// `1^n 0 x` with `|x| = n` prints `x`. One step per bit read.
pub fn run_literal(program: &BitString, step_budget: u64) -> RunOutcome {
    let mut input = Reader::new(program);
    let mut n = 0usize;
    loop {
        match input.next() {
            Some(true) => n += 1,
            Some(false) => break,
            None => return RunOutcome::Diverged,
        }
    }
    read_payload(&mut input, n, step_budget)
}

/// Elias gamma code of `n >= 1` followed by an `n`-bit payload.
pub fn run_gamma_literal(program: &BitString, step_budget: u64) -> RunOutcome {
    let mut input = Reader::new(program);
    let mut zeros = 0usize;
    loop {
        match input.next() {
            Some(false) => zeros += 1,
            Some(true) => break,
            None => return RunOutcome::Diverged,
        }
    }
    if zeros >= 32 {
        return RunOutcome::Diverged;
    }
    let mut n = 1usize;
    for _ in 0..zeros {
        let Some(b) = input.next() else {
            return RunOutcome::Diverged;
        };
        n = 2 * n + b as usize;
    }
    read_payload(&mut input, n, step_budget)
}

fn read_payload(input: &mut Reader<'_>, n: usize, step_budget: u64) -> RunOutcome {
    let mut out = BitString::empty();
    for _ in 0..n {
        match input.next() {
            Some(b) => out.push(b),
            None => return RunOutcome::Diverged,
        }
    }
    if !input.finished() {
        return RunOutcome::Diverged;
    }
    let steps = input.pos as u64;
    if steps > step_budget {
        return RunOutcome::BudgetExhausted;
    }
    RunOutcome::Halted { output: out, steps }
}

/// `1^(l-1) 0` prints `l` in binary; synthetic, so zero steps.
pub fn run_geometric(program: &BitString) -> RunOutcome {
    let bits = program.bits();
    match bits.split_last() {
        Some((false, ones)) if ones.iter().all(|&b| b) => RunOutcome::Halted {
            output: BitString::binary_of(bits.len() as u64),
            steps: 0,
        },
        _ => RunOutcome::Diverged,
    }
}

/// Elias gamma code of `n >= 1`.
pub fn gamma_code(n: u64) -> BitString {
    assert!(n >= 1);
    let bin = BitString::binary_of(n);
    BitString::repeat(false, bin.len() - 1).concat(&bin)
}

/// Length of a gamma-literal program carrying an `n`-bit payload.
pub fn gamma_literal_length(n: u64) -> u64 {
    n + 2 * (63 - n.leading_zeros()) as u64 + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn halted(s: &str, steps: u64) -> RunOutcome {
        RunOutcome::Halted {
            output: b(s),
            steps,
        }
    }

    #[test]
    fn sdm4_opcodes() {
        assert_eq!(run_sdm4(&b("11"), 10), halted("", 1));
        assert_eq!(run_sdm4(&b("000111"), 10), halted("01", 3));
        assert_eq!(run_sdm4(&b("1011"), 10), RunOutcome::Diverged);
        // phantom last bit is 0
        assert_eq!(run_sdm4(&b("101011"), 10), halted("000", 2));
        assert_eq!(run_sdm4(&b("01100111"), 10), halted("111", 3));
        assert_eq!(run_sdm4(&b("0"), 10), RunOutcome::Diverged);
        assert_eq!(run_sdm4(&b("1100"), 10), RunOutcome::Diverged);
        assert_eq!(run_sdm4(&b("000011"), 2), RunOutcome::BudgetExhausted);
        assert_eq!(run_sdm4(&b("000011"), 3), halted("00", 3));
    }

    #[test]
    fn literal_programs() {
        assert_eq!(run_literal(&b("0"), 10), halted("", 1));
        assert_eq!(run_literal(&b("101"), 10), halted("1", 3));
        assert_eq!(run_literal(&b("11010"), 10), halted("10", 5));
        assert_eq!(run_literal(&b("1101"), 10), RunOutcome::Diverged);
        assert_eq!(run_literal(&b("1000"), 10), RunOutcome::Diverged);
        assert_eq!(run_literal(&b("11010"), 4), RunOutcome::BudgetExhausted);
    }

    #[test]
    fn gamma_programs() {
        assert_eq!(gamma_code(1).to_string(), "1");
        assert_eq!(gamma_code(5).to_string(), "00101");
        assert_eq!(run_gamma_literal(&b("10"), 10), halted("0", 2));
        assert_eq!(run_gamma_literal(&b("01011"), 10), halted("11", 5));
        assert_eq!(run_gamma_literal(&b("0101"), 10), RunOutcome::Diverged);
        for n in 1..40u64 {
            assert_eq!(
                gamma_literal_length(n) as usize,
                gamma_code(n).len() + n as usize
            );
            assert!(gamma_literal_length(n + 1) > gamma_literal_length(n));
        }
    }

    #[test]
    fn geometric_programs() {
        assert_eq!(run_geometric(&b("1110")), halted("100", 0));
        assert_eq!(run_geometric(&b("0")), halted("1", 0));
        assert_eq!(run_geometric(&b("1101")), RunOutcome::Diverged);
    }
}
