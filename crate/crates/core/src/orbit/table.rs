use std::collections::HashMap;

use serde::Serialize;

use crate::grid::GridState;

/// A later observation of a state whose successor differs from the one
/// fixed at its first occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Conflict {
    pub state: GridState,
    pub time: usize,
    pub observed_next: GridState,
}

/// Next-value map `σ_n ↦ σ_{k(n)}` over the patterns visited by a shadow.
///
/// Patterns are kept in order of first appearance. The successor of a
/// pattern is the shadow value right after its earliest occurrence; the
/// final shadow sample has no successor unless it appeared earlier.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    patterns: Vec<GridState>,
    first_seen: Vec<usize>,
    next: Vec<Option<usize>>,
    index: HashMap<GridState, usize>,
    conflicts: Vec<Conflict>,
}

impl TransitionTable {
    pub fn from_shadow(shadow: &[GridState]) -> Self {
        let mut table = TransitionTable {
            patterns: Vec::new(),
            first_seen: Vec::new(),
            next: Vec::new(),
            index: HashMap::new(),
            conflicts: Vec::new(),
        };
        let ids: Vec<usize> = shadow
            .iter()
            .enumerate()
            .map(|(t, s)| table.intern(s, t))
            .collect();
        for (t, pair) in ids.windows(2).enumerate() {
            let (from, to) = (pair[0], pair[1]);
            match table.next[from] {
                None => table.next[from] = Some(to),
                Some(fixed) if fixed != to => table.conflicts.push(Conflict {
                    state: table.patterns[from].clone(),
                    time: t,
                    observed_next: table.patterns[to].clone(),
                }),
                Some(_) => {}
            }
        }
        table
    }

    fn intern(&mut self, s: &GridState, t: usize) -> usize {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.patterns.len();
        self.patterns.push(s.clone());
        self.first_seen.push(t);
        self.next.push(None);
        self.index.insert(s.clone(), i);
        i
    }

    /// States with an observed successor (the `σ_n` of the table).
    pub fn states(&self) -> impl Iterator<Item = &GridState> {
        self.patterns
            .iter()
            .zip(&self.next)
            .filter(|(_, n)| n.is_some())
            .map(|(s, _)| s)
    }

    pub fn state_count(&self) -> usize {
        self.next.iter().filter(|n| n.is_some()).count()
    }

    /// Every distinct state seen in the shadow, including a final state
    /// without successor.
    pub fn patterns(&self) -> &[GridState] {
        &self.patterns
    }

    pub fn pattern_count(&self) -> usize {
        self.patterns.len()
    }

    /// The final shadow state when it was never seen before, which leaves it
    /// without an outgoing edge.
    pub fn terminal(&self) -> Option<&GridState> {
        self.next
            .iter()
            .position(Option::is_none)
            .map(|i| &self.patterns[i])
    }

    pub fn successor(&self, s: &GridState) -> Option<&GridState> {
        let i = *self.index.get(s)?;
        self.next[i].map(|j| &self.patterns[j])
    }

    pub fn first_seen(&self, s: &GridState) -> Option<usize> {
        self.index.get(s).map(|&i| self.first_seen[i])
    }

    pub fn conflicts(&self) -> &[Conflict] {
        &self.conflicts
    }

    pub fn is_conflict_free(&self) -> bool {
        self.conflicts.is_empty()
    }

    pub(crate) fn pattern_id(&self, s: &GridState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub(crate) fn next_id(&self, id: usize) -> Option<usize> {
        self.next[id]
    }

    pub(crate) fn pattern(&self, id: usize) -> &GridState {
        &self.patterns[id]
    }
}
