use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::superword::Superword;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeArc {
    pub start: usize,
    pub end: usize,
    pub superword: Superword,
}

impl LatticeArc {
    pub fn new(start: usize, end: usize, superword: Superword) -> Self {
        LatticeArc {
            start,
            end,
            superword,
        }
    }

    fn key(&self) -> (usize, usize, &str) {
        (self.start, self.end, &self.superword.id)
    }
}

/// DAG of superword arcs over token positions `0..=N`.
///
/// Arcs are kept sorted by `(start, end, superword id)`, so an arc's index is
/// also its rank in the decoder's tie-breaking order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    tokens: Vec<String>,
    arcs: Vec<LatticeArc>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl Lattice {
    /// Builds a lattice and checks its invariants. Duplicate arcs (same
    /// start, end and superword id) are collapsed, keeping the first.
    pub fn new(tokens: Vec<String>, mut arcs: Vec<LatticeArc>) -> Result<Self> {
        let n = tokens.len();
        if n == 0 {
            return Err(Error::EmptySentence);
        }
        for arc in &arcs {
            if arc.start >= arc.end || arc.end > n {
                return Err(Error::Invalid(format!(
                    "arc {}..{} outside lattice of {n} positions",
                    arc.start, arc.end
                )));
            }
        }
        arcs.sort_by(|a, b| a.key().cmp(&b.key()));
        arcs.dedup_by(|a, b| a.key() == b.key());

        let mut outgoing = vec![Vec::new(); n + 1];
        let mut incoming = vec![Vec::new(); n + 1];
        for (i, arc) in arcs.iter().enumerate() {
            outgoing[arc.start].push(i);
            incoming[arc.end].push(i);
        }

        let mut reachable = vec![false; n + 1];
        reachable[0] = true;
        for pos in 0..n {
            if reachable[pos] {
                for &a in &outgoing[pos] {
                    reachable[arcs[a].end] = true;
                }
            }
        }
        if !reachable[n] {
            return Err(Error::Invalid("no path from the first to the last position".into()));
        }

        Ok(Lattice {
            tokens,
            arcs,
            outgoing,
            incoming,
        })
    }

    /// The degenerate one-arc-per-token lattice.
    pub fn from_sequence(words: &[Superword]) -> Result<Self> {
        let tokens = words.iter().map(|w| w.to_string()).collect();
        let arcs = words
            .iter()
            .enumerate()
            .map(|(i, w)| LatticeArc::new(i, i + 1, w.clone()))
            .collect();
        Lattice::new(tokens, arcs)
    }

    /// Number of token positions N; arcs live on `0..=N`.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn arcs(&self) -> &[LatticeArc] {
        &self.arcs
    }

    pub fn outgoing(&self, pos: usize) -> &[usize] {
        &self.outgoing[pos]
    }

    pub fn incoming(&self, pos: usize) -> &[usize] {
        &self.incoming[pos]
    }

    /// Every complete path as a list of arc indices, depth-first with arcs
    /// from one position visited in index order. Stops after `limit` paths.
    pub fn arc_paths(&self, limit: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.walk(0, &mut stack, &mut |path| {
            out.push(path.to_vec());
            out.len() < limit
        });
        out
    }

    fn walk(&self, pos: usize, path: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if pos == self.len() {
            return emit(path);
        }
        let mut order: Vec<usize> = self.outgoing[pos].clone();
        order.sort_by(|&a, &b| {
            (&self.arcs[a].superword.id, self.arcs[a].end).cmp(&(&self.arcs[b].superword.id, self.arcs[b].end))
        });
        for a in order {
            path.push(a);
            let go_on = self.walk(self.arcs[a].end, path, emit);
            path.pop();
            if !go_on {
                return false;
            }
        }
        true
    }

    /// Up to `limit` distinct complete paths, ordered by arc start and then
    /// superword id.
    pub fn enumerate_paths(&self, limit: usize) -> Vec<Vec<Superword>> {
        let limit = limit.max(1);
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.walk(0, &mut stack, &mut |path| {
            let words: Vec<Superword> = path.iter().map(|&a| self.arcs[a].superword.clone()).collect();
            if seen.insert(words.clone()) {
                out.push(words);
            }
            out.len() < limit
        });
        out
    }

    /// Line-oriented dump: token line followed by one `start end superword` line per arc.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tokens\t{}", self.tokens.join(" "));
        for arc in &self.arcs {
            let _ = writeln!(s, "{}\t{}\t{}", arc.start, arc.end, arc.superword);
        }
        s
    }
}
