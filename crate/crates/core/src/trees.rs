//! Rooted trees up to isomorphism.
//!
//! A [`RootedTree`] is always stored in canonical form: children are sorted
//! by their codes, and the code of a tree is `"(" + child codes + ")"`
//! (AHU encoding). Two trees are isomorphic as rooted trees iff their codes
//! are equal, so the code doubles as the key of every tree distribution.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RootedTree {
    children: Vec<RootedTree>,
    code: String,
    vertices: usize,
    height: usize,
}

impl RootedTree {
    /// The one-vertex tree.
    pub fn leaf() -> Self {
        RootedTree { children: Vec::new(), code: "()".to_owned(), vertices: 1, height: 0 }
    }

    /// Root joined to the roots of `children`, in any order.
    pub fn from_children(mut children: Vec<RootedTree>) -> Self {
        children.sort_by(|a, b| a.code.cmp(&b.code));
        let mut code = String::with_capacity(2 + children.iter().map(|c| c.code.len()).sum::<usize>());
        code.push('(');
        for c in &children {
            code.push_str(&c.code);
        }
        code.push(')');
        let vertices = 1 + children.iter().map(|c| c.vertices).sum::<usize>();
        let height = children.iter().map(|c| c.height + 1).max().unwrap_or(0);
        RootedTree { children, code, vertices, height }
    }

    /// Root with `leaves` leaf children.
    pub fn star(leaves: usize) -> Self {
        Self::from_children(vec![Self::leaf(); leaves])
    }

    /// Path on `vertices` vertices rooted at an end.
    pub fn path(vertices: usize) -> Self {
        assert!(vertices >= 1);
        (1..vertices).fold(Self::leaf(), |t, _| t.plant())
    }

    pub fn children(&self) -> &[RootedTree] {
        &self.children
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn root_degree(&self) -> usize {
        self.children.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// `T↑`: a new root attached to the old root.
    pub fn plant(&self) -> Self {
        Self::from_children(vec![self.clone()])
    }

    /// `T1 ⊕ ... ⊕ Tl`: the trees glued at their roots.
    pub fn merge(trees: &[RootedTree]) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidTree { code: String::new(), reason: "empty merge".into() });
        }
        Ok(Self::from_children(trees.iter().flat_map(|t| t.children.iter().cloned()).collect()))
    }

    /// Child subtrees grouped by isomorphism class, in canonical order.
    pub fn profile(&self) -> Vec<(&RootedTree, usize)> {
        let mut out: Vec<(&RootedTree, usize)> = Vec::new();
        for c in &self.children {
            match out.last_mut() {
                Some((t, m)) if t.code == c.code => *m += 1,
                _ => out.push((c, 1)),
            }
        }
        out
    }

    /// `e_T = prod over child classes of 1 / multiplicity!`.
    pub fn e_coefficient(&self) -> Q {
        let denominator = self
            .profile()
            .iter()
            .fold(BigInt::from(1), |acc, &(_, m)| acc * factorial(m));
        Q::new(BigInt::from(1), denominator)
    }

    /// The tree with one copy of the child class `child` removed from the
    /// root, or `None` if the root has no such child.
    pub fn without_child(&self, child: &RootedTree) -> Option<RootedTree> {
        let pos = self.children.iter().position(|c| c.code == child.code)?;
        let mut children = self.children.clone();
        children.remove(pos);
        Some(Self::from_children(children))
    }
}

fn factorial(m: usize) -> BigInt {
    (1..=m).fold(BigInt::from(1), |acc, k| acc * k)
}

impl Ord for RootedTree {
    /// Vertex count first, then code.
    fn cmp(&self, other: &Self) -> Ordering {
        (self.vertices, &self.code).cmp(&(other.vertices, &other.code))
    }
}

impl PartialOrd for RootedTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

impl FromStr for RootedTree {
    type Err = Error;

    /// Parses a nested-parentheses code; children may appear in any order.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidTree { code: s.to_owned(), reason: reason.to_owned() };
        let mut stack: Vec<Vec<RootedTree>> = Vec::new();
        let mut root = None;
        for ch in s.trim().chars() {
            match ch {
                '(' => {
                    if root.is_some() {
                        return Err(bad("text after the root closes"));
                    }
                    stack.push(Vec::new());
                }
                ')' => {
                    let children = stack.pop().ok_or_else(|| bad("unbalanced ')'"))?;
                    let tree = RootedTree::from_children(children);
                    match stack.last_mut() {
                        Some(parent) => parent.push(tree),
                        None => root = Some(tree),
                    }
                }
                c if c.is_whitespace() => {}
                _ => return Err(bad("unexpected character")),
            }
        }
        if !stack.is_empty() {
            return Err(bad("unbalanced '('"));
        }
        root.ok_or_else(|| bad("empty code"))
    }
}

/// Vertex count of a canonical code without parsing it.
pub fn code_vertices(code: &str) -> usize {
    code.len() / 2
}

/// Every rooted tree with height at most `max_height` and at most
/// `max_vertices` vertices, one per isomorphism class, ordered by
/// (vertex count, code).
pub fn enumerate_trees(max_height: usize, max_vertices: usize) -> Vec<RootedTree> {
    if max_vertices == 0 {
        return Vec::new();
    }
    let mut trees = enumerate_rec(max_height, max_vertices);
    trees.sort();
    trees
}

fn enumerate_rec(max_height: usize, max_vertices: usize) -> Vec<RootedTree> {
    if max_height == 0 || max_vertices == 1 {
        return vec![RootedTree::leaf()];
    }
    let mut pool = enumerate_rec(max_height - 1, max_vertices - 1);
    pool.sort();
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    multisets(&pool, 0, max_vertices - 1, &mut chosen, &mut out);
    out
}

/// Appends a tree for every multiset of pool entries with index at least
/// `start` and total size at most `budget`.
fn multisets(
    pool: &[RootedTree],
    start: usize,
    budget: usize,
    chosen: &mut Vec<RootedTree>,
    out: &mut Vec<RootedTree>,
) {
    out.push(RootedTree::from_children(chosen.clone()));
    for idx in start..pool.len() {
        let size = pool[idx].vertices;
        if size > budget {
            // Pool is sorted by size first.
            break;
        }
        chosen.push(pool[idx].clone());
        multisets(pool, idx, budget - size, chosen, out);
        chosen.pop();
    }
}
