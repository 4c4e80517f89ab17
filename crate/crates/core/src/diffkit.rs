//! Token-level edit distance and insert/delete edit scripts.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Insert,
    Delete,
}

/// A maximal run of inserted or deleted tokens. `anchor` is the index in
/// the source stream before which the run sits (inserts) or where it starts
/// (deletes).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditRegion {
    pub kind: EditKind,
    pub anchor: usize,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub regions: Vec<EditRegion>,
    pub insert_count: usize,
    pub delete_count: usize,
}

impl EditScript {
    /// Total edited tokens, inserts plus deletes.
    pub fn edits(&self) -> usize {
        self.insert_count + self.delete_count
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Replay the script on `source`.
    pub fn apply<T: AsRef<str>>(&self, source: &[T]) -> Vec<String> {
        let mut deleted = vec![false; source.len()];
        let mut inserts: Vec<Vec<&EditRegion>> = vec![Vec::new(); source.len() + 1];
        for r in &self.regions {
            match r.kind {
                EditKind::Delete => {
                    for d in &mut deleted[r.anchor..r.anchor + r.tokens.len()] {
                        *d = true;
                    }
                }
                EditKind::Insert => inserts[r.anchor].push(r),
            }
        }
        let mut out = Vec::new();
        for k in 0..=source.len() {
            for r in &inserts[k] {
                out.extend(r.tokens.iter().cloned());
            }
            if k < source.len() && !deleted[k] {
                out.push(source[k].as_ref().to_string());
            }
        }
        out
    }
}

/// Levenshtein distance over tokens with unit substitution cost.
pub fn token_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Op {
    Keep,
    Del,
    Ins,
}

/// Minimal insert/delete script from `source` to `target` (LCS based).
/// Among equally short scripts, earlier source tokens are matched first
/// and deletions are emitted before insertions.
pub fn edit_script<T: AsRef<str>>(source: &[T], target: &[T]) -> EditScript {
    let (n, m) = (source.len(), target.len());
    let a: Vec<&str> = source.iter().map(AsRef::as_ref).collect();
    let b: Vec<&str> = target.iter().map(AsRef::as_ref).collect();

    // A common prefix is always matched under leftmost tie-breaking.
    let mut lo = 0;
    while lo < n && lo < m && a[lo] == b[lo] {
        lo += 1;
    }
    let sa = &a[lo..];
    let sb = &b[lo..];
    let (p, q) = (sa.len(), sb.len());

    // lcs[i][j] = LCS length of sa[i..] and sb[j..]
    let w = q + 1;
    let mut lcs = vec![0u32; (p + 1) * w];
    for i in (0..p).rev() {
        for j in (0..q).rev() {
            lcs[i * w + j] = if sa[i] == sb[j] {
                lcs[(i + 1) * w + j + 1] + 1
            } else {
                lcs[(i + 1) * w + j].max(lcs[i * w + j + 1])
            };
        }
    }

    let mut ops = Vec::with_capacity(p + q);
    let (mut i, mut j) = (0, 0);
    while i < p || j < q {
        if i < p && j < q && sa[i] == sb[j] {
            ops.push(Op::Keep);
            i += 1;
            j += 1;
        } else if j == q || (i < p && lcs[(i + 1) * w + j] >= lcs[i * w + j + 1]) {
            ops.push(Op::Del);
            i += 1;
        } else {
            ops.push(Op::Ins);
            j += 1;
        }
    }

    let mut script = EditScript::default();
    let (mut i, mut j) = (lo, lo);
    let mut k = 0;
    while k < ops.len() {
        if ops[k] == Op::Keep {
            i += 1;
            j += 1;
            k += 1;
            continue;
        }
        let anchor = i;
        let mut del = Vec::new();
        let mut ins = Vec::new();
        while k < ops.len() && ops[k] != Op::Keep {
            match ops[k] {
                Op::Del => {
                    del.push(a[i].to_string());
                    i += 1;
                }
                Op::Ins => {
                    ins.push(b[j].to_string());
                    j += 1;
                }
                Op::Keep => unreachable!(),
            }
            k += 1;
        }
        script.delete_count += del.len();
        script.insert_count += ins.len();
        if !del.is_empty() {
            script.regions.push(EditRegion {
                kind: EditKind::Delete,
                anchor,
                tokens: del,
            });
        }
        if !ins.is_empty() {
            script.regions.push(EditRegion {
                kind: EditKind::Insert,
                anchor,
                tokens: ins,
            });
        }
    }
    script
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let a = ["int", "x", "=", "0", ";"];
        let b = ["int", "y", "=", "0", ";"];
        assert_eq!(token_edit_distance(&a, &a), 0);
        assert_eq!(token_edit_distance(&a, &b), 1);
        assert_eq!(token_edit_distance(&["a", "b", "c"], &[] as &[&str]), 3);
    }

    #[test]
    fn substitution_is_delete_plus_insert() {
        let s = edit_script(&["a", "b"], &["a", "c"]);
        assert_eq!(s.edits(), 2);
        assert_eq!(s.regions.len(), 2);
        assert_eq!(s.regions[0].kind, EditKind::Delete);
        assert_eq!(s.regions[0].tokens, vec!["b"]);
        assert_eq!(s.regions[1].kind, EditKind::Insert);
        assert_eq!(s.regions[1].tokens, vec!["c"]);
        assert_eq!(s.apply(&["a", "b"]), vec!["a", "c"]);
    }

    #[test]
    fn identical_streams_have_empty_script() {
        let s = edit_script(&["x", "y"], &["x", "y"]);
        assert!(s.is_empty());
        assert_eq!(s.edits(), 0);
    }

    #[test]
    fn leftmost_match_wins_ties() {
        // "a" can align with either source token; the first one is kept.
        let s = edit_script(&["a", "a"], &["a"]);
        assert_eq!(s.regions.len(), 1);
        assert_eq!(s.regions[0].anchor, 1);
    }
}
