//! Ordered tree edit distance with unit costs (Zhang and Shasha).

use crate::ast::{Node, RegexAst};

/// A tree flattened in postorder, with each node's leftmost leaf.
struct Postorder {
    labels: Vec<String>,
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
}

impl Postorder {
    fn new(root: &Node) -> Self {
        let mut labels = Vec::new();
        let mut leftmost = Vec::new();
        visit(root, &mut labels, &mut leftmost);
        let n = labels.len();
        // A keyroot is the highest node with a given leftmost leaf.
        let mut keyroots = Vec::new();
        let mut claimed = vec![false; n];
        for i in (0..n).rev() {
            if !claimed[leftmost[i]] {
                claimed[leftmost[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.sort_unstable();
        Self { labels, leftmost, keyroots }
    }
}

fn visit(node: &Node, labels: &mut Vec<String>, leftmost: &mut Vec<usize>) -> usize {
    let mut first = None;
    for child in node.children() {
        let lm = visit(child, labels, leftmost);
        first.get_or_insert(lm);
    }
    let index = labels.len();
    labels.push(node.label());
    leftmost.push(first.unwrap_or(index));
    leftmost[index]
}

/// Minimum number of node insertions, deletions and relabelings turning
/// one tree into the other.
pub fn tree_edit_distance(a: &Node, b: &Node) -> usize {
    let ta = Postorder::new(a);
    let tb = Postorder::new(b);
    let (n, m) = (ta.labels.len(), tb.labels.len());
    let mut tree_dist = vec![vec![0usize; m]; n];
    let mut forest = vec![vec![0usize; m + 1]; n + 1];

    for &i in &ta.keyroots {
        for &j in &tb.keyroots {
            let (li, lj) = (ta.leftmost[i], tb.leftmost[j]);
            // forest[x][y] is the distance between the postorder ranges
            // li..li+x and lj..lj+y.
            forest[0][0] = 0;
            for x in 1..=i - li + 1 {
                forest[x][0] = forest[x - 1][0] + 1;
            }
            for y in 1..=j - lj + 1 {
                forest[0][y] = forest[0][y - 1] + 1;
            }
            for x in 1..=i - li + 1 {
                for y in 1..=j - lj + 1 {
                    let (p, q) = (li + x - 1, lj + y - 1);
                    let delete = forest[x - 1][y] + 1;
                    let insert = forest[x][y - 1] + 1;
                    if ta.leftmost[p] == li && tb.leftmost[q] == lj {
                        let relabel = usize::from(ta.labels[p] != tb.labels[q]);
                        let best = delete.min(insert).min(forest[x - 1][y - 1] + relabel);
                        forest[x][y] = best;
                        tree_dist[p][q] = best;
                    } else {
                        let px = ta.leftmost[p] - li;
                        let qy = tb.leftmost[q] - lj;
                        forest[x][y] = delete.min(insert).min(forest[px][qy] + tree_dist[p][q]);
                    }
                }
            }
        }
    }
    tree_dist[n - 1][m - 1]
}

/// Tree edit distance between the syntax trees of two patterns.
pub fn syntactic_distance(a: &RegexAst, b: &RegexAst) -> usize {
    tree_edit_distance(a.root(), b.root())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;

    fn ted(a: &str, b: &str) -> usize {
        syntactic_distance(&parse(a).unwrap(), &parse(b).unwrap())
    }

    #[test]
    fn identical_trees() {
        assert_eq!(ted("a(b|c)*d", "a(b|c)*d"), 0);
    }

    #[test]
    fn single_relabel() {
        assert_eq!(ted("abc", "abd"), 1);
    }

    #[test]
    fn insertion() {
        // Concat(a, b) to Concat(a, b, c).
        assert_eq!(ted("ab", "abc"), 1);
        // Literal to Concat(a, b): insert the concat root and one leaf.
        assert_eq!(ted("a", "ab"), 2);
    }

    #[test]
    fn capture_index_ignored() {
        assert_eq!(ted("(a)(b)", "(a)(b)"), 0);
        assert_eq!(ted("(a)", "(?:a)"), 1);
    }
}
