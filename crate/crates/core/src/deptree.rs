//! Predicted dependency trees and lexicalized paths between tokens.

use std::fmt;

use crate::conll::Sentence;
use crate::error::{Error, Result};

/// Direction in which an edge is traversed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// From a dependent to its head.
    Up,
    /// From a head to one of its dependents.
    Down,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    pub fn arrow(self) -> char {
        match self {
            Direction::Up => '↑',
            Direction::Down => '↓',
        }
    }
}

/// Tree over the predicted head column. Token ids are 1-based; index 0
/// stands for the artificial root.
#[derive(Clone, Debug)]
pub struct DepTree {
    heads: Vec<usize>,
    labels: Vec<String>,
    children: Vec<Vec<usize>>,
}

impl DepTree {
    /// Build the tree from PHEAD/PDEPREL. The sentence must have passed
    /// validation (no cycles, heads in range).
    pub fn from_sentence(sentence: &Sentence) -> Self {
        let n = sentence.len();
        let mut heads = vec![0; n + 1];
        let mut labels = vec![String::new(); n + 1];
        let mut children = vec![Vec::new(); n + 1];
        for t in &sentence.tokens {
            heads[t.id] = t.phead;
            labels[t.id] = t.pdeprel.clone();
            children[t.phead].push(t.id);
        }
        DepTree {
            heads,
            labels,
            children,
        }
    }

    /// Build directly from (head, label) pairs of tokens 1..=n.
    pub fn from_heads(arcs: &[(usize, &str)]) -> Self {
        let n = arcs.len();
        let mut heads = vec![0; n + 1];
        let mut labels = vec![String::new(); n + 1];
        let mut children = vec![Vec::new(); n + 1];
        for (i, &(h, l)) in arcs.iter().enumerate() {
            heads[i + 1] = h;
            labels[i + 1] = l.to_owned();
            children[h].push(i + 1);
        }
        DepTree {
            heads,
            labels,
            children,
        }
    }

    /// Number of tokens.
    pub fn len(&self) -> usize {
        self.heads.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Head of a token, `None` for roots.
    pub fn head(&self, id: usize) -> Option<usize> {
        match self.heads[id] {
            0 => None,
            h => Some(h),
        }
    }

    /// Relation label between a token and its head.
    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    /// Dependents of a token, sorted by id. `children(0)` lists the roots.
    pub fn children(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    /// Other dependents of this token's head (roots are siblings of each
    /// other).
    pub fn siblings(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.children[self.heads[id]]
            .iter()
            .copied()
            .filter(move |&c| c != id)
    }

    pub fn roots(&self) -> &[usize] {
        &self.children[0]
    }

    /// Chain from a token up to its root, starting with the token itself.
    fn ancestors(&self, id: usize) -> Vec<usize> {
        let mut chain = vec![id];
        let mut cur = id;
        while let Some(h) = self.head(cur) {
            chain.push(h);
            cur = h;
        }
        chain
    }

    /// The unique simple path between two tokens via their lowest common
    /// ancestor.
    pub fn path(&self, from: usize, to: usize) -> Result<TreePath> {
        let up = self.ancestors(from);
        let down = self.ancestors(to);

        // Strip the shared suffix of both chains; the last shared node is
        // the lowest common ancestor.
        let mut i = up.len();
        let mut j = down.len();
        if up[i - 1] != down[j - 1] {
            return Err(Error::NoPath { from, to });
        }
        while i > 1 && j > 1 && up[i - 2] == down[j - 2] {
            i -= 1;
            j -= 1;
        }
        let lca = up[i - 1];

        let mut nodes = Vec::with_capacity(i + j - 1);
        let mut edges = Vec::with_capacity(i + j - 2);
        for &node in &up[..i - 1] {
            nodes.push(node);
            edges.push(Edge {
                label: self.labels[node].clone(),
                direction: Direction::Up,
            });
        }
        nodes.push(lca);
        for &node in down[..j - 1].iter().rev() {
            nodes.push(node);
            edges.push(Edge {
                label: self.labels[node].clone(),
                direction: Direction::Down,
            });
        }

        Ok(TreePath { nodes, edges })
    }

    /// Relation-only path string, e.g. `NMOD↑OBJ↑SBJ↓`. Empty when both
    /// ends coincide.
    pub fn relation_path(&self, from: usize, to: usize) -> Result<String> {
        let path = self.path(from, to)?;
        Ok(path.edges.iter().map(|e| e.to_string()).collect())
    }
}

/// A traversed edge: the dependent's relation label and the direction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub label: String,
    pub direction: Direction,
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.label, self.direction.arrow())
    }
}

/// Nodes from start to end, and the edge between each consecutive pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreePath {
    pub nodes: Vec<usize>,
    pub edges: Vec<Edge>,
}

/// One input step of a lexicalized path.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathItem {
    Pos(String),
    Word(String),
    Rel(String, Direction),
}

impl fmt::Display for PathItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathItem::Pos(p) => write!(f, "{p}"),
            PathItem::Word(w) => write!(f, "{w}"),
            PathItem::Rel(r, d) => write!(f, "{}{}", r, d.arrow()),
        }
    }
}

/// Which token column supplies the word items of a path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WordPolicy {
    /// Predicted lemma.
    #[default]
    Lemma,
    /// Surface form.
    Form,
}

impl WordPolicy {
    pub fn name(self) -> &'static str {
        match self {
            WordPolicy::Lemma => "lemma",
            WordPolicy::Form => "form",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lemma" => Some(WordPolicy::Lemma),
            "form" => Some(WordPolicy::Form),
            _ => None,
        }
    }
}

/// Predicate-first item sequence fed to the path LSTM.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSequence {
    pub items: Vec<PathItem>,
    pub node_count: usize,
}

/// Lexicalized path from `predicate` to `argument`: each node contributes
/// its POS tag and word, consecutive nodes are joined by one
/// direction-tagged relation. The last item is the argument's word.
pub fn extract_path_sequence(
    tree: &DepTree,
    sentence: &Sentence,
    predicate: usize,
    argument: usize,
    policy: WordPolicy,
) -> Result<PathSequence> {
    let path = tree.path(predicate, argument)?;
    let mut items = Vec::with_capacity(3 * path.nodes.len() - 1);
    for (k, &node) in path.nodes.iter().enumerate() {
        let token = sentence.token(node);
        items.push(PathItem::Pos(token.ppos.clone()));
        let word = match policy {
            WordPolicy::Lemma => &token.plemma,
            WordPolicy::Form => &token.form,
        };
        items.push(PathItem::Word(word.clone()));
        if let Some(edge) = path.edges.get(k) {
            items.push(PathItem::Rel(edge.label.clone(), edge.direction));
        }
    }
    Ok(PathSequence {
        items,
        node_count: path.nodes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::Token;

    // he had trouble raising funds
    fn example() -> Sentence {
        Sentence::new(vec![
            Token::new(1, "he", "he", "N", 2, "SBJ"),
            Token::new(2, "had", "have", "V", 0, "ROOT"),
            Token::new(3, "trouble", "trouble", "N", 2, "OBJ"),
            Token::new(4, "raising", "raise", "V", 3, "NMOD"),
            Token::new(5, "funds", "fund", "N", 4, "OBJ"),
        ])
    }

    #[test]
    fn builds_example_tree() {
        let tree = DepTree::from_sentence(&example());
        assert_eq!(tree.roots(), &[2]);
        assert_eq!(tree.children(2), &[1, 3]);
        assert_eq!(tree.children(3), &[4]);
        assert_eq!(tree.children(4), &[5]);
        assert_eq!(tree.head(4), Some(3));
        assert_eq!(tree.siblings(1).collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn single_token_tree() {
        let s = Sentence::new(vec![Token::new(1, "a", "a", "N", 0, "ROOT")]);
        let tree = DepTree::from_sentence(&s);
        assert_eq!(tree.roots(), &[1]);
        assert!(tree.children(1).is_empty());
    }

    #[test]
    fn chain_children() {
        // a -> b -> c, c is the root
        let tree = DepTree::from_heads(&[(2, "X"), (3, "Y"), (0, "ROOT")]);
        assert_eq!(tree.children(2), &[1]);
        assert_eq!(tree.children(3), &[2]);
        assert_eq!(tree.path(1, 3).unwrap().nodes, vec![1, 2, 3]);
    }

    #[test]
    fn example_tree_path() {
        let tree = DepTree::from_sentence(&example());
        let path = tree.path(4, 1).unwrap();
        assert_eq!(path.nodes, vec![4, 3, 2, 1]);
        let edges: Vec<String> = path.edges.iter().map(|e| e.to_string()).collect();
        assert_eq!(edges, vec!["NMOD↑", "OBJ↑", "SBJ↓"]);
        assert_eq!(tree.relation_path(4, 1).unwrap(), "NMOD↑OBJ↑SBJ↓");
    }

    #[test]
    fn identity_path() {
        let tree = DepTree::from_sentence(&example());
        let path = tree.path(3, 3).unwrap();
        assert_eq!(path.nodes, vec![3]);
        assert!(path.edges.is_empty());
    }

    #[test]
    fn forest_components_have_no_path() {
        let tree = DepTree::from_heads(&[(0, "ROOT"), (0, "ROOT"), (2, "X")]);
        assert!(matches!(
            tree.path(1, 3),
            Err(Error::NoPath { from: 1, to: 3 })
        ));
        assert!(tree.path(2, 3).is_ok());
    }

    #[test]
    fn example_sequence() {
        let s = example();
        let tree = DepTree::from_sentence(&s);
        let seq = extract_path_sequence(&tree, &s, 4, 1, WordPolicy::Form).unwrap();
        let rendered: Vec<String> = seq.items.iter().map(|i| i.to_string()).collect();
        assert_eq!(
            rendered,
            vec![
                "V", "raising", "NMOD↑", "N", "trouble", "OBJ↑", "V", "had", "SBJ↓", "N", "he"
            ]
        );
        assert_eq!(seq.node_count, 4);

        let seq = extract_path_sequence(&tree, &s, 4, 1, WordPolicy::Lemma).unwrap();
        assert_eq!(seq.items[1], PathItem::Word("raise".into()));
        assert_eq!(seq.items[7], PathItem::Word("have".into()));
    }

    #[test]
    fn self_path_sequence() {
        let s = example();
        let tree = DepTree::from_sentence(&s);
        let seq = extract_path_sequence(&tree, &s, 4, 4, WordPolicy::Form).unwrap();
        assert_eq!(
            seq.items,
            vec![PathItem::Pos("V".into()), PathItem::Word("raising".into())]
        );
    }
}
