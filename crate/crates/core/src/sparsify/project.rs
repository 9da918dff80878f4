//! Projection of gated oblique nodes onto a single feature each.

use crate::error::{Error, Result};
use crate::neural::NeuralTree;
use crate::sparsify::gates::{argmax, Selection};

/// Keeps, for every node, the feature with the largest `E[g] |W|` (ties to
/// the lowest index) and drops the gates. The kept weight becomes
/// `sign(w_j) ||w||` and the intercept is scaled by `||w|| / |w_j|`, where
/// `w = W * E[g]`, so the boundary's crossing of the kept axis (`-b / w_j`)
/// is unchanged. Nodes that are already axis-parallel are copied as is.
pub fn project_axis_parallel(tree: &NeuralTree) -> Result<NeuralTree> {
    project(tree, false)
}

/// Like [`project_axis_parallel`], but a node whose scores are all zero
/// falls back to `P(g != 0) |W|` (or `|W|` for stacking gates) instead of
/// failing; only a node with an all-zero weight column still errors.
pub fn project_with_fallback(tree: &NeuralTree) -> Result<NeuralTree> {
    project(tree, true)
}

fn project(tree: &NeuralTree, fallback: bool) -> Result<NeuralTree> {
    let eff = tree.inference_weights();
    let open = tree.gates.as_ref().map(|g| match g.selection {
        Selection::HardConcrete => g.open_probability(),
        Selection::Stacking => ndarray::Array2::ones(g.stacking.dim()),
    });
    let mut out = tree.clone();
    out.gates = None;
    out.weights.fill(0.0);
    for i in 0..tree.node_count() {
        let col = eff.column(i);
        let scores = col.iter().map(|w| w.abs());
        let pick = match argmax(scores).filter(|&j| col[j] != 0.0) {
            Some(j) => j,
            None if fallback => {
                let raw = tree.weights.column(i);
                let scores = (0..raw.len()).map(|j| {
                    raw[j].abs() * open.as_ref().map_or(1.0, |p| p[[j, i]])
                });
                let j = argmax(scores).filter(|&j| raw[j] != 0.0);
                let Some(j) = j else {
                    return Err(Error::NoSelectableFeature { node: i });
                };
                // the gate closed this feature; restore its raw weight
                out.weights[[j, i]] = raw[j];
                continue;
            }
            None => return Err(Error::NoSelectableFeature { node: i }),
        };
        let nonzeros = col.iter().filter(|&&w| w != 0.0).count();
        if nonzeros == 1 {
            out.weights[[pick, i]] = col[pick];
            continue;
        }
        let norm = col.iter().map(|w| w * w).sum::<f64>().sqrt();
        let scale = norm / col[pick].abs();
        out.weights[[pick, i]] = col[pick].signum() * norm;
        out.bias[i] = tree.bias[i] * scale;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::RoutingMatrix;
    use crate::sparsify::gates::GateSet;
    use crate::testutil::random_tree;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_node(w: [f64; 2], b: f64) -> NeuralTree {
        let q = RoutingMatrix::from_entries(array![[1u8, 0], [0, 1]]).unwrap();
        NeuralTree::new(array![[w[0]], [w[1]]], array![b], array![[1.0], [0.0]], q, 0.1).unwrap()
    }

    #[test]
    fn axis_parallel_node_is_unchanged() {
        let nt = one_node([0.0, -1.7], 0.4);
        assert_eq!(project_axis_parallel(&nt).unwrap(), nt);
    }

    #[test]
    fn keeps_dominant_feature_and_axis_crossing() {
        let nt = one_node([5.0, 0.01], -2.0);
        let p = project_axis_parallel(&nt).unwrap();
        assert_eq!(p.node_support(), vec![1]);
        assert!(p.weights[[0, 0]] > 0.0 && p.weights[[1, 0]] == 0.0);
        let crossing = -p.bias[0] / p.weights[[0, 0]];
        assert!((crossing - 0.4).abs() < 1e-15);
        let norm = (25.0f64 + 1e-4).sqrt();
        assert!((p.weights[[0, 0]] - norm).abs() < 1e-12);

        // routes only differ where the dropped term flips the sign of the margin:
        // |5 x0 - 2| < 0.01 |x1|
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut agree = 0;
        let mut predicted = 0;
        let m = 5000;
        for _ in 0..m {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let (a, _) = nt.predict_hard(&x).unwrap();
            let (b, _) = p.predict_hard(&x).unwrap();
            agree += (a == b) as usize;
            predicted += ((5.0 * x[0] - 2.0f64).abs() >= 0.01 * x[1].abs()) as usize;
        }
        assert!(agree >= predicted, "{agree} < {predicted}");
    }

    #[test]
    fn tie_keeps_lowest_index() {
        let p = project_axis_parallel(&one_node([-2.0, 2.0], 1.0)).unwrap();
        assert!(p.weights[[0, 0]] != 0.0 && p.weights[[1, 0]] == 0.0);
    }

    #[test]
    fn all_zero_scores_are_rejected() {
        let mut nt = one_node([1.0, 2.0], 0.0);
        let mut g = GateSet::new(2, 1, Selection::HardConcrete);
        g.log_alpha.fill(-30.0);
        nt.gates = Some(g);
        let err = project_axis_parallel(&nt).unwrap_err();
        assert!(err.to_string().contains("no selectable feature"));
        let p = project_with_fallback(&nt).unwrap();
        assert_eq!(p.weights, array![[0.0], [2.0]]);
        assert!(project_axis_parallel(&one_node([0.0, 0.0], 1.0)).is_err());
    }

    #[test]
    fn projection_always_yields_unit_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(1..8);
            let k = rng.gen_range(1..10);
            let mut nt = random_tree(&mut rng, n, k, 3, 0.1);
            let mut g = GateSet::new(k, n, Selection::HardConcrete);
            g.log_alpha.mapv_inplace(|_| rng.gen_range(-4.0..4.0));
            nt.gates = Some(g);
            let p = project_with_fallback(&nt).unwrap();
            assert!(p.node_support().iter().all(|&s| s == 1));
            assert!(p.is_axis_parallel());
        }
    }
}
