//! Random tree generators shared by unit tests.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Child, Leaf, SplitNode, TreeStructure};
use crate::neural::NeuralTree;
use crate::routing::build_routing_matrix;

pub fn random_structure(rng: &mut ChaCha8Rng, n: usize) -> TreeStructure {
    // Grow by repeatedly splitting a random leaf.
    let mut nodes: Vec<SplitNode> = Vec::new();
    let mut open = vec![Child::Leaf(0)];
    let mut leaf_ids = 1;
    let mut parents: Vec<(usize, bool)> = vec![(usize::MAX, true)];
    for id in 0..n {
        let pick = rng.gen_range(0..open.len());
        let old = open.swap_remove(pick);
        let (parent, left) = parents.swap_remove(pick);
        let Child::Leaf(old_leaf) = old else { unreachable!() };
        nodes.push(SplitNode {
            id,
            feature: 0,
            threshold: 0.0,
            left: Child::Leaf(old_leaf),
            right: Child::Leaf(leaf_ids),
        });
        if parent != usize::MAX {
            if left {
                nodes[parent].left = Child::Node(id);
            } else {
                nodes[parent].right = Child::Node(id);
            }
        }
        open.push(Child::Leaf(old_leaf));
        parents.push((id, true));
        open.push(Child::Leaf(leaf_ids));
        parents.push((id, false));
        leaf_ids += 1;
    }
    TreeStructure {
        nodes,
        leaves: (0..=n).map(|id| Leaf { id, value: vec![0.0] }).collect(),
    }
}

pub fn random_tree(rng: &mut ChaCha8Rng, n: usize, k: usize, c: usize, tau: f64) -> NeuralTree {
    let q = build_routing_matrix(&random_structure(rng, n)).unwrap();
    let w = Array2::from_shape_fn((k, n), |_| rng.gen_range(-2.0..2.0));
    let b = Array1::from_shape_fn(n, |_| rng.gen_range(-1.0..1.0));
    let pi = Array2::from_shape_fn((n + 1, c), |_| rng.gen_range(-3.0..3.0));
    NeuralTree::new(w, b, pi, q, tau).unwrap()
}

