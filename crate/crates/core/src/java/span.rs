//! The reviewer-tagged region of a method.
//!
//! Tags are stored as anchors between statements so that they survive
//! rewriting and re-printing. Token indices refer to the tagged stream the
//! span was last mapped onto.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::ast::{MethodAst, NodeId, Stmt};

/// A zero-width position in a method, between two tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Anchor {
    /// Before the first header token.
    MethodStart,
    /// Just after the opening brace of the body.
    BodyOpen,
    Before(NodeId),
    After(NodeId),
    /// After the closing brace of the body.
    MethodEnd,
}

impl Anchor {
    pub fn stmt(&self) -> Option<NodeId> {
        match self {
            Anchor::Before(id) | Anchor::After(id) => Some(*id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSpan {
    /// Index of `<START>` in the tagged token stream.
    pub start_token_index: usize,
    /// One past the index of `<END>` (half-open).
    pub end_token_index: usize,
    /// Statements lying entirely between the tags.
    pub covered_statement_ids: Vec<NodeId>,
    pub start: Anchor,
    pub end: Anchor,
    /// A tag was moved to the nearest statement boundary when parsing.
    pub snapped: bool,
    /// The tags were pushed outward because a rewrite reordered them.
    pub widened: bool,
}

impl TaggedSpan {
    /// Half-open range of the same region in the tag-free stream.
    pub fn untagged_range(&self) -> Range<usize> {
        self.start_token_index..self.end_token_index.saturating_sub(2).max(self.start_token_index)
    }
}

/// Resolve tag positions (counted in code tokens) to anchors, snapping
/// each tag outward to the nearest statement boundary.
pub(crate) fn snap_tags(
    ast: &MethodAst,
    ranges: &HashMap<NodeId, Range<usize>>,
    body_open: usize,
    token_count: usize,
    start_at: usize,
    end_at: usize,
) -> TaggedSpan {
    let order = ast.stmt_ids();
    let empty_body = ast.body.stmts.is_empty();

    let mut start_cands: Vec<(usize, Anchor)> = vec![(0, Anchor::MethodStart)];
    if empty_body {
        start_cands.push((body_open + 1, Anchor::BodyOpen));
    }
    let mut end_cands: Vec<(usize, Anchor)> = vec![
        (body_open + 1, Anchor::BodyOpen),
        (token_count, Anchor::MethodEnd),
    ];
    for id in &order {
        let r = &ranges[id];
        start_cands.push((r.start, Anchor::Before(*id)));
        end_cands.push((r.end, Anchor::After(*id)));
    }

    // Ties go to the earliest candidate in pre-order, which is the outermost.
    let (start_pos, start) = start_cands
        .iter()
        .filter(|(p, _)| *p <= start_at)
        .fold(None::<(usize, Anchor)>, |best, &(p, a)| match best {
            Some((bp, _)) if bp >= p => best,
            _ => Some((p, a)),
        })
        .expect("method start is always a candidate");
    let (end_pos, end) = end_cands
        .iter()
        .filter(|(p, _)| *p >= end_at)
        .fold(None::<(usize, Anchor)>, |best, &(p, a)| match best {
            Some((bp, _)) if bp <= p => best,
            _ => Some((p, a)),
        })
        .expect("method end is always a candidate");

    let covered = order
        .iter()
        .filter(|id| {
            let r = &ranges[*id];
            r.start >= start_pos && r.end <= end_pos && r.start < r.end
        })
        .copied()
        .collect();

    TaggedSpan {
        start_token_index: start_pos,
        end_token_index: end_pos + 2,
        covered_statement_ids: covered,
        start,
        end,
        snapped: start_pos != start_at || end_pos != end_at,
        widened: false,
    }
}

/// Path of statement ids from the body down to `target`, inclusive.
pub(crate) fn ancestry(ast: &MethodAst, target: NodeId) -> Option<Vec<NodeId>> {
    fn go(s: &Stmt, target: NodeId, path: &mut Vec<NodeId>) -> bool {
        path.push(s.id);
        if s.id == target {
            return true;
        }
        for c in s.child_stmts() {
            if go(c, target, path) {
                return true;
            }
        }
        path.pop();
        false
    }
    let mut path = Vec::new();
    for s in &ast.body.stmts {
        if go(s, target, &mut path) {
            return Some(path);
        }
    }
    None
}

/// Anchors wide enough to contain both statements: their closest common
/// enclosing statement, or the range of their outermost ancestors when
/// they share none. `first`/`last` decide order among siblings by printed
/// position.
pub(crate) fn widen_anchors(
    ast: &MethodAst,
    a: NodeId,
    b: NodeId,
    printed: &HashMap<NodeId, Range<usize>>,
) -> Option<(Anchor, Anchor)> {
    let pa = ancestry(ast, a)?;
    let pb = ancestry(ast, b)?;
    let common = pa.iter().zip(pb.iter()).take_while(|(x, y)| x == y).count();
    if common > 0 {
        let id = pa[common - 1];
        return Some((Anchor::Before(id), Anchor::After(id)));
    }
    // Divergent paths: the two top-level ancestors, in printed order.
    let (x, y) = (pa[0], pb[0]);
    let rx = printed.get(&x)?;
    let ry = printed.get(&y)?;
    let first = if rx.start <= ry.start { x } else { y };
    let last = if rx.end >= ry.end { x } else { y };
    Some((Anchor::Before(first), Anchor::After(last)))
}
