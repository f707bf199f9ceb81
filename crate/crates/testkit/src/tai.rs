//! Exhaustive tree edit distance by enumerating every valid node mapping.
//!
//! An edit script between ordered trees corresponds to a mapping that is
//! one-to-one and preserves ancestry and left-to-right order; its cost is
//! the relabeled pairs plus all unmapped nodes on both sides. Exponential,
//! meant for trees of a handful of nodes.

use forge_core::Node;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    pub label: String,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(label: &str) -> Self {
        Self { label: label.into(), children: Vec::new() }
    }

    pub fn node(label: &str, children: Vec<Tree>) -> Self {
        Self { label: label.into(), children }
    }

    pub fn from_ast(node: &Node) -> Self {
        Self { label: node.label(), children: node.children().iter().map(Tree::from_ast).collect() }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }
}

/// Postorder labels plus an ancestor matrix.
struct Flat {
    labels: Vec<String>,
    /// `anc[a][d]`: `a` is a proper ancestor of `d`.
    anc: Vec<Vec<bool>>,
}

impl Flat {
    fn new(t: &Tree) -> Self {
        let mut labels = Vec::new();
        let mut spans = Vec::new();
        fn walk(t: &Tree, labels: &mut Vec<String>, spans: &mut Vec<(usize, usize)>) {
            let first = labels.len();
            for c in &t.children {
                walk(c, labels, spans);
            }
            // Descendants occupy postorder indices first..self.
            spans.push((first, labels.len()));
            labels.push(t.label.clone());
        }
        walk(t, &mut labels, &mut spans);
        let n = labels.len();
        let mut anc = vec![vec![false; n]; n];
        for (a, &(first, me)) in spans.iter().enumerate() {
            for row in anc[a].iter_mut().take(me).skip(first) {
                *row = true;
            }
        }
        Self { labels, anc }
    }

    /// `x` lies entirely to the left of `y`.
    fn left(&self, x: usize, y: usize) -> bool {
        x < y && !self.anc[y][x]
    }
}

pub fn exhaustive_ted(a: &Tree, b: &Tree) -> usize {
    let fa = Flat::new(a);
    let fb = Flat::new(b);
    let mut pairs = Vec::new();
    let mut used = vec![false; fb.labels.len()];
    let mut best = usize::MAX;
    search(&fa, &fb, 0, &mut pairs, &mut used, &mut best);
    best
}

fn consistent(fa: &Flat, fb: &Flat, pairs: &[(usize, usize)], i: usize, j: usize) -> bool {
    pairs.iter().all(|&(p, q)| {
        fa.anc[p][i] == fb.anc[q][j]
            && fa.anc[i][p] == fb.anc[j][q]
            && fa.left(p, i) == fb.left(q, j)
            && fa.left(i, p) == fb.left(j, q)
    })
}

fn search(
    fa: &Flat,
    fb: &Flat,
    i: usize,
    pairs: &mut Vec<(usize, usize)>,
    used: &mut [bool],
    best: &mut usize,
) {
    if i == fa.labels.len() {
        let relabels = pairs.iter().filter(|&&(p, q)| fa.labels[p] != fb.labels[q]).count();
        let cost = relabels + (fa.labels.len() - pairs.len()) + (fb.labels.len() - pairs.len());
        *best = (*best).min(cost);
        return;
    }
    search(fa, fb, i + 1, pairs, used, best);
    for j in 0..fb.labels.len() {
        if !used[j] && consistent(fa, fb, pairs, i, j) {
            used[j] = true;
            pairs.push((i, j));
            search(fa, fb, i + 1, pairs, used, best);
            pairs.pop();
            used[j] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_pair() {
        // f(d(a, c(b)), e) vs f(c(d(a, b)), e): distance 2.
        let t1 = Tree::node(
            "f",
            vec![
                Tree::node("d", vec![Tree::leaf("a"), Tree::node("c", vec![Tree::leaf("b")])]),
                Tree::leaf("e"),
            ],
        );
        let t2 = Tree::node(
            "f",
            vec![
                Tree::node("c", vec![Tree::node("d", vec![Tree::leaf("a"), Tree::leaf("b")])]),
                Tree::leaf("e"),
            ],
        );
        assert_eq!(exhaustive_ted(&t1, &t2), 2);
    }

    #[test]
    fn trivial_pairs() {
        let a = Tree::leaf("a");
        assert_eq!(exhaustive_ted(&a, &a), 0);
        assert_eq!(exhaustive_ted(&a, &Tree::leaf("b")), 1);
        assert_eq!(exhaustive_ted(&a, &Tree::node("x", vec![Tree::leaf("a"), Tree::leaf("b")])), 2);
    }
}
