use petgraph::algo::dominators::{self, Dominators};
use petgraph::graph::{DiGraph, NodeIndex};

use super::{BlockEnd, MethodDef};

/// Block-level control-flow graph of one method.
///
/// Predecessor lists are in block order, which fixes the meaning of the
/// n-th φ argument: it belongs to the n-th jump (in block order) that
/// targets the merge.
#[derive(Debug, Clone)]
pub struct Cfg {
    pub succs: Vec<Vec<usize>>,
    pub preds: Vec<Vec<usize>>,
    /// Reverse postorder of the blocks reachable from the entry.
    pub rpo: Vec<usize>,
    rpo_pos: Vec<Option<usize>>,
    doms: Option<Dominators<NodeIndex>>,
}

impl Cfg {
    /// Unknown jump targets are dropped; validation reports them separately.
    pub fn new(method: &MethodDef) -> Self {
        let n = method.blocks.len();
        let mut succs = vec![Vec::new(); n];
        let mut preds = vec![Vec::new(); n];
        for (i, b) in method.blocks.iter().enumerate() {
            let targets: Vec<&str> = match &b.end {
                BlockEnd::Return(_) => vec![],
                BlockEnd::Jump(l) => vec![l],
                BlockEnd::If {
                    then_label,
                    else_label,
                    ..
                } => vec![then_label, else_label],
            };
            for t in targets {
                if let Some(j) = method.block_index(t) {
                    succs[i].push(j);
                    preds[j].push(i);
                }
            }
        }

        let entry = method.entry();
        let mut rpo = Vec::new();
        if let Some(e) = entry {
            let mut visited = vec![false; n];
            let mut post = Vec::new();
            let mut stack = vec![(e, 0usize)];
            visited[e] = true;
            while let Some(&mut (b, ref mut next)) = stack.last_mut() {
                if let Some(&s) = succs[b].get(*next) {
                    *next += 1;
                    if !visited[s] {
                        visited[s] = true;
                        stack.push((s, 0));
                    }
                } else {
                    post.push(b);
                    stack.pop();
                }
            }
            rpo = post.into_iter().rev().collect();
        }
        let mut rpo_pos = vec![None; n];
        for (i, &b) in rpo.iter().enumerate() {
            rpo_pos[b] = Some(i);
        }

        let doms = entry.map(|e| {
            let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, n * 2);
            for _ in 0..n {
                g.add_node(());
            }
            for (i, ss) in succs.iter().enumerate() {
                for &s in ss {
                    g.add_edge(NodeIndex::new(i), NodeIndex::new(s), ());
                }
            }
            dominators::simple_fast(&g, NodeIndex::new(e))
        });

        Cfg {
            succs,
            preds,
            rpo,
            rpo_pos,
            doms,
        }
    }

    pub fn is_reachable(&self, block: usize) -> bool {
        self.rpo_pos[block].is_some()
    }

    pub fn rpo_position(&self, block: usize) -> Option<usize> {
        self.rpo_pos[block]
    }

    /// Reflexive dominance between reachable blocks.
    pub fn dominates(&self, a: usize, b: usize) -> bool {
        let Some(doms) = &self.doms else {
            return false;
        };
        if !self.is_reachable(a) || !self.is_reachable(b) {
            return false;
        }
        let target = NodeIndex::new(a);
        let mut cur = Some(NodeIndex::new(b));
        while let Some(c) = cur {
            if c == target {
                return true;
            }
            cur = doms.immediate_dominator(c);
        }
        false
    }

    /// Position of `pred` among the jumps into `merge`.
    pub fn jump_index(&self, merge: usize, pred: usize) -> Option<usize> {
        self.preds[merge].iter().position(|&p| p == pred)
    }
}
