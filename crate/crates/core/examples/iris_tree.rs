//! The four-leaf iris tree as a neural tree: node routing, leaf
//! probabilities and the class scores for x = (1, 1, 1, 1).

use treegrad::convert::to_neural_tree_with_sharpness;
use treegrad::model::{Child, Leaf, SplitNode, TreeStructure};

fn main() -> treegrad::Result<()> {
    let node = |id, feature, threshold, left, right| SplitNode {
        id,
        feature,
        threshold,
        left,
        right,
    };
    // petal width <= 0.8, petal width <= 1.75, petal length <= 4.95
    let tree = TreeStructure {
        nodes: vec![
            node(0, 3, 0.8, Child::Leaf(0), Child::Node(1)),
            node(1, 3, 1.75, Child::Node(2), Child::Leaf(3)),
            node(2, 2, 4.95, Child::Leaf(1), Child::Leaf(2)),
        ],
        leaves: [[50.0, 0.0, 0.0], [0.0, 47.0, 1.0], [0.0, 2.0, 4.0], [0.0, 1.0, 45.0]]
            .iter()
            .enumerate()
            .map(|(id, v)| Leaf { id, value: v.to_vec() })
            .collect(),
    };
    let sharpness = [0.6252075514469599, 0.2866393139477373, 0.09783019839995083];
    let nt = to_neural_tree_with_sharpness(&tree, 4, &sharpness, 0.1)?;

    let x = [1.0; 4];
    let r = nt.route(&x)?;
    let y = nt.predict_soft(&x)?;
    println!("D  = {:.2?}", r.d);
    println!("mu = {:.4?}", r.mu);
    println!("y  = {:.2?}", y);
    let (leaf, _) = nt.predict_hard(&x)?;
    println!("hard routing ends in leaf {}", leaf + 1);
    Ok(())
}
