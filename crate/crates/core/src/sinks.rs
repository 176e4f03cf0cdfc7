//! Absorbing structure of a medium: PNEs (sink vertices) and traps (sink
//! strongly connected components with at least four vertices).
//!
//! Only oriented edges are traversable; ties never connect anything.

use serde::{Deserialize, Serialize};
use std::collections::{HashSet, VecDeque};

use crate::error::Result;
use crate::hypercube::Vertex;
use crate::medium::Medium;

/// Whether no player can strictly improve at `v`.
pub fn is_pne(medium: &Medium, v: Vertex) -> bool {
    medium.out_mask(v) == 0
}

/// Every PNE in ascending order. Exhaustive media only.
pub fn enumerate_pnes(medium: &Medium) -> Result<Vec<Vertex>> {
    medium.require_exhaustive()?;
    Ok((0..medium.vertex_count()).map(Vertex).filter(|&v| is_pne(medium, v)).collect())
}

/// Number of PNEs without materializing the list.
pub fn count_pnes(medium: &Medium) -> Result<u64> {
    medium.require_exhaustive()?;
    Ok((0..medium.vertex_count()).filter(|&v| is_pne(medium, Vertex(v))).count() as u64)
}

/// Mean number of PNEs, `(1 + alpha)^n`: each vertex is a PNE with
/// probability `((1 + alpha) / 2)^n`.
pub fn expected_pne_count(n: u32, alpha: f64) -> f64 {
    (1.0 + alpha).powi(n as i32)
}

/// `floor(1 / -log2(1 - beta))` with `beta = (1 - alpha) / 2`. Quotients within
/// one ulp of an integer snap to it before flooring.
pub fn m_beta(alpha: f64) -> u64 {
    let beta = (1.0 - alpha) / 2.0;
    let x = 1.0 / -(1.0 - beta).log2();
    let nearest = x.round();
    let ulp = f64::EPSILON * x.abs().max(1.0);
    if (x - nearest).abs() <= ulp {
        nearest as u64
    } else {
        x.floor() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkAnalysis {
    pub n: u32,
    pub pnes: Vec<Vertex>,
    /// Vertex sets of the traps, each sorted, ordered by smallest member.
    pub traps: Vec<Vec<Vertex>>,
    /// Strongly connected component of each vertex.
    #[serde(skip)]
    pub scc_id: Vec<u32>,
    #[serde(skip)]
    trap_of: Vec<u32>,
    pub component_count: u32,
}

const NO_TRAP: u32 = u32::MAX;

impl SinkAnalysis {
    pub fn is_pne(&self, v: Vertex) -> bool {
        self.pnes.binary_search(&v).is_ok()
    }

    /// Index into `traps` of the trap containing `v`.
    pub fn trap_index(&self, v: Vertex) -> Option<usize> {
        match self.trap_of[v.0 as usize] {
            NO_TRAP => None,
            t => Some(t as usize),
        }
    }

    pub fn in_trap(&self, v: Vertex) -> bool {
        self.trap_of[v.0 as usize] != NO_TRAP
    }

    pub fn trap_vertex_count(&self) -> usize {
        self.traps.iter().map(Vec::len).sum()
    }
}

/// Iterative Tarjan over the graph `v -> v ^ (1 << axis)` for axes in `out[v]`.
/// Returns per-vertex component ids and the component count. Components are
/// numbered in reverse topological order (sinks first reached get low ids).
pub(crate) fn tarjan_scc(out: &[u64]) -> (Vec<u32>, u32) {
    const UNSEEN: u32 = u32::MAX;
    let size = out.len();
    let mut index = vec![UNSEEN; size];
    let mut low = vec![0u32; size];
    let mut comp = vec![UNSEEN; size];
    let mut stack: Vec<u32> = Vec::new();
    // call frames: (vertex, remaining axes to explore)
    let mut frames: Vec<(u32, u64)> = Vec::new();
    let mut next_index = 0u32;
    let mut comps = 0u32;

    for root in 0..size as u32 {
        if index[root as usize] != UNSEEN {
            continue;
        }
        index[root as usize] = next_index;
        low[root as usize] = next_index;
        next_index += 1;
        stack.push(root);
        frames.push((root, out[root as usize]));

        while let Some(frame) = frames.last_mut() {
            let v = frame.0;
            if frame.1 != 0 {
                let axis = frame.1.trailing_zeros();
                frame.1 &= frame.1 - 1;
                let w = v ^ (1u32 << axis);
                if index[w as usize] == UNSEEN {
                    index[w as usize] = next_index;
                    low[w as usize] = next_index;
                    next_index += 1;
                    stack.push(w);
                    frames.push((w, out[w as usize]));
                } else if comp[w as usize] == UNSEEN {
                    // w still on the stack
                    low[v as usize] = low[v as usize].min(index[w as usize]);
                }
                continue;
            }
            frames.pop();
            if low[v as usize] == index[v as usize] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    comp[w as usize] = comps;
                    if w == v {
                        break;
                    }
                }
                comps += 1;
            }
            if let Some(parent) = frames.last() {
                let p = parent.0 as usize;
                low[p] = low[p].min(low[v as usize]);
            }
        }
    }
    (comp, comps)
}

/// Full SCC decomposition and sink catalog. Exhaustive media only.
///
/// Panics if a sink component of size 2 or 3 appears, which bipartiteness of
/// the hypercube rules out.
pub fn sink_components(medium: &Medium) -> Result<SinkAnalysis> {
    let out = medium.out_masks()?;
    let n = medium.n();
    let (scc_id, count) = tarjan_scc(&out);
    let mut size = vec![0u32; count as usize];
    let mut sink = vec![true; count as usize];
    for (v, &mask) in out.iter().enumerate() {
        let c = scc_id[v];
        size[c as usize] += 1;
        let mut rest = mask;
        while rest != 0 {
            let w = v ^ (1usize << rest.trailing_zeros());
            rest &= rest - 1;
            if scc_id[w] != c {
                sink[c as usize] = false;
            }
        }
    }

    let mut pnes = Vec::new();
    let mut trap_slot = vec![NO_TRAP; count as usize];
    let mut traps: Vec<Vec<Vertex>> = Vec::new();
    let mut trap_of = vec![NO_TRAP; out.len()];
    for (v, &mask) in out.iter().enumerate() {
        let c = scc_id[v] as usize;
        assert_eq!(
            mask == 0,
            sink[c] && size[c] == 1,
            "PNE must coincide with a singleton sink component"
        );
        if !sink[c] {
            continue;
        }
        match size[c] {
            1 => pnes.push(Vertex(v as u64)),
            s => {
                assert!(s >= 4, "sink component of size {s} is impossible on the hypercube");
                if trap_slot[c] == NO_TRAP {
                    trap_slot[c] = traps.len() as u32;
                    traps.push(Vec::with_capacity(s as usize));
                }
                traps[trap_slot[c] as usize].push(Vertex(v as u64));
                trap_of[v] = trap_slot[c];
            }
        }
    }
    Ok(SinkAnalysis { n, pnes, traps, scc_id, trap_of, component_count: count })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClosureStatus {
    Closed,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureResult {
    pub status: ClosureStatus,
    /// Visited vertices, ascending.
    pub visited: Vec<Vertex>,
    pub contains_pne: bool,
}

impl ClosureResult {
    pub fn contains(&self, v: Vertex) -> bool {
        self.visited.binary_search(&v).is_ok()
    }
}

/// Breadth-first search along oriented edges from `v`, visiting at most
/// `budget` vertices.
pub fn forward_closure(medium: &Medium, v: Vertex, budget: u64) -> ClosureResult {
    let budget = budget.max(1);
    let mut seen: HashSet<u64> = HashSet::new();
    let mut queue = VecDeque::new();
    let mut contains_pne = false;
    let mut status = ClosureStatus::Closed;

    seen.insert(v.0);
    queue.push_back(v);
    'bfs: while let Some(u) = queue.pop_front() {
        let mask = medium.out_mask(u);
        if mask == 0 {
            contains_pne = true;
        }
        let mut rest = mask;
        while rest != 0 {
            let w = u.flip(rest.trailing_zeros());
            rest &= rest - 1;
            if seen.contains(&w.0) {
                continue;
            }
            if seen.len() as u64 >= budget {
                status = ClosureStatus::BudgetExceeded;
                break 'bfs;
            }
            seen.insert(w.0);
            queue.push_back(w);
        }
    }
    if status == ClosureStatus::BudgetExceeded && !contains_pne {
        // unexpanded frontier may still hold a PNE
        contains_pne = queue.iter().any(|&u| is_pne(medium, u));
    }
    let mut visited: Vec<Vertex> = seen.into_iter().map(Vertex).collect();
    visited.sort_unstable();
    ClosureResult { status, visited, contains_pne }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexClass {
    Pne,
    /// Member of a trap.
    InTrap,
    /// Not in a trap, but every forward path ends in one.
    Doomed,
    /// Some forward path reaches a PNE.
    Transient,
    /// Budget exhausted before a verdict.
    Unknown,
}

/// Budget used when none is given: `2^min(n, 16)` vertices.
pub fn default_closure_budget(n: u32) -> u64 {
    1u64 << n.min(16)
}

/// Classifies `v` by its bounded forward closure, returning the closure too.
pub fn classify_with_closure(medium: &Medium, v: Vertex, budget: u64) -> (VertexClass, ClosureResult) {
    let closure = forward_closure(medium, v, budget);
    if closure.visited.len() == 1 && closure.status == ClosureStatus::Closed && closure.contains_pne {
        return (VertexClass::Pne, closure);
    }
    let class = match closure.status {
        ClosureStatus::BudgetExceeded if closure.contains_pne => VertexClass::Transient,
        ClosureStatus::BudgetExceeded => VertexClass::Unknown,
        ClosureStatus::Closed => {
            if closure.visited.len() >= 2 && all_reach(medium, v, &closure) {
                debug_assert!(!closure.contains_pne);
                VertexClass::InTrap
            } else if closure.contains_pne {
                VertexClass::Transient
            } else {
                VertexClass::Doomed
            }
        }
    };
    (class, closure)
}

pub fn classify_vertex(medium: &Medium, v: Vertex, budget: u64) -> VertexClass {
    classify_with_closure(medium, v, budget).0
}

/// Whether every member of a closed set reaches `target`: reverse search
/// inside the set.
fn all_reach(medium: &Medium, target: Vertex, closure: &ClosureResult) -> bool {
    let mut reached: HashSet<u64> = HashSet::from([target.0]);
    let mut queue = VecDeque::from([target]);
    while let Some(u) = queue.pop_front() {
        let mut rest = medium.masks(u).inward;
        while rest != 0 {
            let w = u.flip(rest.trailing_zeros());
            rest &= rest - 1;
            if closure.contains(w) && reached.insert(w.0) {
                queue.push_back(w);
            }
        }
    }
    reached.len() == closure.visited.len()
}
