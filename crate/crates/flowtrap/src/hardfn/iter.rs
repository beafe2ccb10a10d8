//! ITER successor instances, brute-force solutions, the text format, and the adaptive
//! adversary that forces any solver to query every node.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest width for which successor tables are stored explicitly.
pub const MAX_WIDTH: u32 = 24;

/// A successor map `C` on `[1..2^n]` with `C(1) > 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterInstance {
    n: u32,
    succ: Vec<u32>,
}

/// Which clause makes a node a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionKind {
    /// `C(v) < v`.
    Decreasing,
    /// `C(v) > v` and `C(C(v)) = C(v)`.
    FixpointSuccessor,
}

/// A node satisfying one of the two solution clauses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterSolution {
    pub v: u32,
    pub kind: SolutionKind,
}

impl IterInstance {
    /// Builds and validates an instance from `succ[v-1] = C(v)`.
    pub fn new(n: u32, succ: Vec<u32>) -> Result<Self> {
        let inst = Self { n, succ };
        validate_iter(&inst)?;
        Ok(inst)
    }

    /// Builds an instance without validation (used to exercise the validator).
    pub fn new_unchecked(n: u32, succ: Vec<u32>) -> Self {
        Self { n, succ }
    }

    /// Width n.
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of nodes `2^n`.
    pub fn size(&self) -> u32 {
        1u32 << self.n
    }

    /// `C(v)` for `v` in `1..=2^n`.
    pub fn succ(&self, v: u32) -> u32 {
        self.succ[(v - 1) as usize]
    }

    /// The successor table, `table[v-1] = C(v)`.
    pub fn table(&self) -> &[u32] {
        &self.succ
    }

    /// Returns the solution clause `v` satisfies, if any.
    pub fn solution_kind(&self, v: u32) -> Option<SolutionKind> {
        let c = self.succ(v);
        if c < v {
            Some(SolutionKind::Decreasing)
        } else if c > v && self.succ(c) == c {
            Some(SolutionKind::FixpointSuccessor)
        } else {
            None
        }
    }

    /// Parses the text format: first line `n`, then `2^n` lines `v succ(v)` in ascending v.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, first) = lines.next().ok_or(Error::Parse { line: 1, message: "empty input".into() })?;
        let n: u32 = first
            .parse()
            .map_err(|_| Error::Parse { line: ln, message: format!("expected width n, got {first:?}") })?;
        if n == 0 || n > MAX_WIDTH {
            return Err(Error::Parse { line: ln, message: format!("width {n} outside 1..={MAX_WIDTH}") });
        }
        let size = 1u32 << n;
        let mut succ = Vec::with_capacity(size as usize);
        for expected in 1..=size {
            let (ln, line) = lines.next().ok_or(Error::Parse {
                line: ln + expected as usize,
                message: format!("missing entry for node {expected}"),
            })?;
            let mut parts = line.split_whitespace();
            let parse_field = |s: Option<&str>| -> Result<u32> {
                s.ok_or(Error::Parse { line: ln, message: "expected two fields".into() })?
                    .parse()
                    .map_err(|_| Error::Parse { line: ln, message: format!("bad integer in {line:?}") })
            };
            let v = parse_field(parts.next())?;
            let c = parse_field(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::Parse { line: ln, message: "expected exactly two fields".into() });
            }
            if v != expected {
                let message = if v < expected {
                    format!("duplicate or out-of-order node {v}")
                } else {
                    format!("missing node {expected}")
                };
                return Err(Error::Parse { line: ln, message });
            }
            succ.push(c);
        }
        if let Some((ln, extra)) = lines.next() {
            return Err(Error::Parse { line: ln, message: format!("unexpected trailing line {extra:?}") });
        }
        IterInstance::new(n, succ)
    }

    /// Renders the text format accepted by [`IterInstance::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for v in 1..=self.size() {
            let _ = writeln!(s, "{} {}", v, self.succ(v));
        }
        s
    }
}

/// Checks `C(1) > 1` and that every successor lies in `[1..2^n]`.
pub fn validate_iter(inst: &IterInstance) -> Result<()> {
    if inst.n == 0 || inst.n > MAX_WIDTH {
        return Err(Error::InvalidIter(format!("width {} outside 1..={MAX_WIDTH}", inst.n)));
    }
    let size = 1u32 << inst.n;
    if inst.succ.len() != size as usize {
        return Err(Error::InvalidIter(format!("table has {} entries, expected {size}", inst.succ.len())));
    }
    if let Some((i, c)) = inst.succ.iter().enumerate().find(|(_, &c)| c < 1 || c > size) {
        return Err(Error::InvalidIter(format!("C({}) = {c} is outside [1, {size}]", i + 1)));
    }
    if inst.succ[0] <= 1 {
        return Err(Error::InvalidIter("C(1) > 1 violated".into()));
    }
    Ok(())
}

/// All solutions in ascending order. Never empty for a valid instance.
pub fn iter_solutions_bruteforce(inst: &IterInstance) -> Vec<IterSolution> {
    let sols: Vec<IterSolution> = (1..=inst.size())
        .filter_map(|v| inst.solution_kind(v).map(|kind| IterSolution { v, kind }))
        .collect();
    debug_assert!(!sols.is_empty(), "ITER is total");
    sols
}

/// Anything that answers successor queries.
pub trait SuccessorOracle {
    /// Width n.
    fn n(&self) -> u32;
    /// Answers `C(v)`.
    fn query(&mut self, v: u32) -> u32;
}

/// Query access to an explicit instance, with a query counter.
#[derive(Debug, Clone)]
pub struct CountingIter<'a> {
    inst: &'a IterInstance,
    pub queries: u64,
}

impl<'a> CountingIter<'a> {
    /// Wraps an instance.
    pub fn new(inst: &'a IterInstance) -> Self {
        Self { inst, queries: 0 }
    }
}

impl SuccessorOracle for CountingIter<'_> {
    fn n(&self) -> u32 {
        self.inst.n()
    }
    fn query(&mut self, v: u32) -> u32 {
        self.queries += 1;
        self.inst.succ(v)
    }
}

/// Adaptive adversary: off-path queries get self-loops, a query at the head of the
/// discovered path from node 1 gets the smallest node never queried before.
#[derive(Debug, Clone)]
pub struct AdversarialIter {
    n: u32,
    answers: Vec<Option<u32>>,
    head: u32,
    next_fresh: u32,
    transcript: Vec<(u32, u32)>,
}

impl AdversarialIter {
    /// Adversary on `[1..2^n]`.
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 || n > MAX_WIDTH {
            return Err(Error::InvalidIter(format!("width {n} outside 1..={MAX_WIDTH}")));
        }
        Ok(Self { n, answers: vec![None; 1usize << n], head: 1, next_fresh: 1, transcript: Vec::new() })
    }

    fn size(&self) -> u32 {
        1u32 << self.n
    }

    /// Current head of the discovered path.
    pub fn head(&self) -> u32 {
        self.head
    }

    /// Distinct nodes queried so far.
    pub fn distinct_queries(&self) -> usize {
        self.answers.iter().filter(|a| a.is_some()).count()
    }

    /// Every query made, in order (repeats included).
    pub fn transcript(&self) -> &[(u32, u32)] {
        &self.transcript
    }

    /// A solution certified by the answers so far, if any.
    pub fn certified_solution(&self) -> Option<IterSolution> {
        for v in 1..=self.size() {
            let Some(c) = self.answers[(v - 1) as usize] else { continue };
            if c < v {
                return Some(IterSolution { v, kind: SolutionKind::Decreasing });
            }
            if c > v && self.answers[(c - 1) as usize] == Some(c) {
                return Some(IterSolution { v, kind: SolutionKind::FixpointSuccessor });
            }
        }
        None
    }

    /// Completes the transcript to a total instance: unqueried nodes become self-loops,
    /// except node 1 which points to node 2 when it was never queried.
    pub fn extend_to_instance(&self) -> Result<IterInstance> {
        let succ = (1..=self.size())
            .map(|v| match self.answers[(v - 1) as usize] {
                Some(c) => c,
                None if v == 1 => 2,
                None => v,
            })
            .collect();
        IterInstance::new(self.n, succ)
    }
}

impl SuccessorOracle for AdversarialIter {
    fn n(&self) -> u32 {
        self.n
    }

    fn query(&mut self, v: u32) -> u32 {
        assert!(v >= 1 && v <= self.size(), "node {v} out of range");
        if let Some(c) = self.answers[(v - 1) as usize] {
            self.transcript.push((v, c));
            return c;
        }
        self.answers[(v - 1) as usize] = Some(v);
        let answer = if v == self.head {
            while self.next_fresh <= self.size() && self.answers[(self.next_fresh - 1) as usize].is_some() {
                self.next_fresh += 1;
            }
            // With every node already answered, node 1 still needs C(1) > 1; node 2 is then a
            // self-loop, so pointing at it keeps earlier answers intact.
            let c = if self.next_fresh <= self.size() {
                self.next_fresh
            } else if v == 1 {
                2
            } else {
                v
            };
            self.head = c;
            c
        } else {
            v
        };
        self.answers[(v - 1) as usize] = Some(answer);
        self.transcript.push((v, answer));
        answer
    }
}

/// Follows the path from node 1 until a solution is certified.
/// Returns the solution and the number of queries made.
pub fn follow_path(oracle: &mut impl SuccessorOracle) -> (IterSolution, u64) {
    let mut queries = 0u64;
    let mut v = 1u32;
    let mut cv = oracle.query(v);
    queries += 1;
    loop {
        if cv < v {
            return (IterSolution { v, kind: SolutionKind::Decreasing }, queries);
        }
        let w = cv;
        let cw = oracle.query(w);
        queries += 1;
        if cw == w {
            return (IterSolution { v, kind: SolutionKind::FixpointSuccessor }, queries);
        }
        v = w;
        cv = cw;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_examples() {
        assert!(IterInstance::new(2, vec![2, 3, 3, 4]).is_ok());
        let e = IterInstance::new(2, vec![1, 3, 3, 4]).unwrap_err();
        assert!(e.to_string().contains("C(1) > 1 violated"));
        assert!(IterInstance::new(2, vec![2, 3, 5, 4]).is_err());
    }

    #[test]
    fn bruteforce_examples() {
        let i = IterInstance::new(2, vec![2, 3, 3, 4]).unwrap();
        assert_eq!(iter_solutions_bruteforce(&i), vec![IterSolution { v: 2, kind: SolutionKind::FixpointSuccessor }]);
        let i = IterInstance::new(2, vec![2, 2, 3, 4]).unwrap();
        assert_eq!(iter_solutions_bruteforce(&i), vec![IterSolution { v: 1, kind: SolutionKind::FixpointSuccessor }]);
    }

    #[test]
    fn text_round_trip_and_errors() {
        let i = IterInstance::new(2, vec![2, 3, 3, 4]).unwrap();
        assert_eq!(IterInstance::parse(&i.to_text()).unwrap(), i);
        assert!(IterInstance::parse("2\n1 2\n1 3\n3 3\n4 4\n").is_err());
        assert!(IterInstance::parse("2\n1 2\n2 3\n4 4\n").is_err());
        assert!(IterInstance::parse("2\n1 2\n2 3\n3 3\n").is_err());
        assert!(IterInstance::parse("2\n1 2\n2 3\n3 3\n4 4\n5 5\n").is_err());
    }

    #[test]
    fn adversary_two_bit_walkthrough() {
        let mut a = AdversarialIter::new(2).unwrap();
        assert_eq!(a.query(1), 2);
        assert_eq!(a.query(3), 3);
        assert_eq!(a.certified_solution(), None);
        assert_eq!(a.query(2), 4);
        assert_eq!(a.certified_solution(), None);
        assert_eq!(a.query(4), 4);
        assert_eq!(a.certified_solution(), Some(IterSolution { v: 2, kind: SolutionKind::FixpointSuccessor }));
        assert_eq!(a.query(3), 3);
        let inst = a.extend_to_instance().unwrap();
        assert_eq!(inst.table(), &[2, 4, 3, 4]);
    }

    #[test]
    fn path_following_costs_all_nodes() {
        for n in [1u32, 2, 5, 10] {
            let mut a = AdversarialIter::new(n).unwrap();
            let (sol, q) = follow_path(&mut a);
            assert_eq!(q, 1u64 << n);
            assert_eq!(sol.v, (1u32 << n) - 1);
        }
    }

    #[test]
    fn node_one_queried_last_still_leaves_the_path() {
        let mut a = AdversarialIter::new(1).unwrap();
        assert_eq!(a.query(2), 2);
        assert_eq!(a.query(1), 2);
        assert_eq!(a.certified_solution(), Some(IterSolution { v: 1, kind: SolutionKind::FixpointSuccessor }));
        assert_eq!(a.extend_to_instance().unwrap().table(), &[2, 2]);
    }
}
