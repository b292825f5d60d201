use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::fabric::Fabric;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(count: usize) -> Self {
        if count.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// State after one coloring step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoringState {
    pub colored_count: usize,
    pub parity: Parity,
    /// Uncolored cores adjacent to a colored core.
    pub frontier: BTreeSet<usize>,
}

/// Replays an assignment step by step.
pub fn coloring_trace(fabric: &Fabric, assignment: &[usize]) -> Vec<ColoringState> {
    let g = fabric.graph();
    let mut colored = BTreeSet::new();
    let mut frontier = BTreeSet::new();
    let mut out = Vec::with_capacity(assignment.len());
    for (i, &c) in assignment.iter().enumerate() {
        colored.insert(c);
        frontier.remove(&c);
        frontier.extend(g.neighbors(c).filter(|w| !colored.contains(w)));
        out.push(ColoringState {
            colored_count: i + 1,
            parity: Parity::of(i + 1),
            frontier: frontier.clone(),
        });
    }
    out
}

/// Uncolored neighbours of the last core after coloring the first `len`
/// rail positions.
pub fn rail_prefix_uncolored_neighbors(fabric: &Fabric, len: usize) -> usize {
    let rail = fabric.rail_order();
    if len == 0 || len > rail.len() {
        return 0;
    }
    let colored: BTreeSet<usize> = rail[..len].iter().copied().collect();
    fabric
        .graph()
        .neighbors(rail[len - 1])
        .filter(|w| !colored.contains(w))
        .count()
}

/// Whether `K_{m,n}` can be colored right after the first `len` rail
/// positions, with its `m` sources on the last colored positions: the sinks
/// need `n` distinct uncolored cores adjacent to every source.
pub fn connector_colorable(fabric: &Fabric, len: usize, m: usize, n: usize) -> bool {
    let rail = fabric.rail_order();
    if m == 0 || m > len || len > rail.len() {
        return false;
    }
    let colored: BTreeSet<usize> = rail[..len].iter().copied().collect();
    let sources = &rail[len - m..len];
    let g = fabric.graph();
    let common = g
        .neighbors(sources[0])
        .filter(|w| !colored.contains(w))
        .filter(|&w| sources[1..].iter().all(|&s| g.has_edge(s, w)))
        .count();
    common >= n
}
