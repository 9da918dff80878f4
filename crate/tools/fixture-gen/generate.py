#!/usr/bin/env python3
"""Regenerate the committed LightGBM fixtures under fixtures/.

Each bundle directory holds:
  model.txt      LightGBM text dump
  model.json     canonical JSON built from Booster.dump_model()
  samples.csv    feature rows (header f0..f{k-1})
  expected.json  per-sample leaf index per tree, raw scores, predicted class,
                 and the split-count feature importance

Deterministic for a fixed LightGBM version and seed (single thread,
deterministic=True).
"""

import argparse
import json
import os

import lightgbm as lgb
import numpy as np
from sklearn.datasets import load_breast_cancer, load_iris

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))


def fmt(v):
    return float("%.17g" % v)


def load_csv(path, label):
    with open(path) as f:
        header = f.readline().strip().split(",")
        rows = [line.strip().split(",") for line in f if line.strip()]
    li = header.index(label)
    X = np.array([[float(v) for i, v in enumerate(r) if i != li] for r in rows])
    raw = [r[li] for r in rows]
    classes = []
    for v in raw:
        if v not in classes:
            classes.append(v)
    y = np.array([classes.index(v) for v in raw])
    return X, y


def canonical_tree(info):
    nodes, leaves = [], []

    def child(c):
        if "leaf_index" in c:
            return {"leaf": c["leaf_index"]}
        if "split_index" in c:
            return {"node": c["split_index"]}
        return {"leaf": 0}

    def walk(t):
        if "split_index" in t:
            if t["decision_type"] != "<=":
                raise ValueError("unsupported decision type")
            nodes.append(
                {
                    "id": t["split_index"],
                    "feature": t["split_feature"],
                    "threshold": fmt(t["threshold"]),
                    "left": child(t["left_child"]),
                    "right": child(t["right_child"]),
                }
            )
            walk(t["left_child"])
            walk(t["right_child"])
        else:
            leaves.append({"id": t.get("leaf_index", 0), "value": [fmt(t["leaf_value"])]})

    walk(info["tree_structure"])
    nodes.sort(key=lambda n: n["id"])
    leaves.sort(key=lambda l: l["id"])
    return {"nodes": nodes, "leaves": leaves}


def bundle(name, X, y, objective, rounds, params, seed=7):
    out = os.path.join(ROOT, "fixtures", name)
    os.makedirs(out, exist_ok=True)
    num_class = int(y.max()) + 1
    p = {
        "objective": objective,
        "num_leaves": 32,
        "learning_rate": 0.1,
        "seed": seed,
        "deterministic": True,
        "num_threads": 1,
        "verbosity": -1,
    }
    if objective == "multiclass":
        p["num_class"] = num_class
    p.update(params)
    booster = lgb.train(p, lgb.Dataset(X, label=y), num_boost_round=rounds)
    booster.save_model(os.path.join(out, "model.txt"))

    dump = booster.dump_model()
    model = {
        "num_class": dump["num_class"],
        "objective": "multiclass" if objective == "multiclass" else "binary",
        "feature_count": dump["max_feature_idx"] + 1,
        "trees": [canonical_tree(t) for t in dump["tree_info"]],
    }
    with open(os.path.join(out, "model.json"), "w") as f:
        json.dump(model, f, indent=1 if len(model["trees"]) == 1 else None)

    k = X.shape[1]
    with open(os.path.join(out, "samples.csv"), "w") as f:
        f.write(",".join("f%d" % j for j in range(k)) + "\n")
        for row in X:
            f.write(",".join("%.17g" % v for v in row) + "\n")

    leaf = booster.predict(X, pred_leaf=True).astype(int)
    raw = booster.predict(X, raw_score=True)
    if raw.ndim == 1:
        raw = raw[:, None]
        cls = (raw[:, 0] > 0).astype(int)
    else:
        cls = raw.argmax(axis=1)
    expected = {
        "leaf_index": leaf.tolist(),
        "raw_score": [[fmt(v) for v in r] for r in raw],
        "class": cls.tolist(),
        "split_importance": booster.feature_importance("split").astype(int).tolist(),
    }
    with open(os.path.join(out, "expected.json"), "w") as f:
        json.dump(expected, f)
    print(name, "trees", len(model["trees"]), "samples", len(X))


def main():
    argparse.ArgumentParser(description=__doc__).parse_args()
    iris_X, iris_y = load_iris(return_X_y=True)
    bc_X, bc_y = load_breast_cancer(return_X_y=True)
    glass_X, glass_y = load_csv(os.path.join(ROOT, "data", "glass.csv"), "type")
    yeast_X, yeast_y = load_csv(os.path.join(ROOT, "data", "yeast.csv"), "class")

    bundle("depth2", iris_X, (iris_y == 2).astype(int), "binary", 1,
           {"num_leaves": 4, "max_depth": 2})
    bundle("binary_1tree", bc_X, bc_y, "binary", 1, {})
    bundle("binary_100tree", bc_X, bc_y, "binary", 100, {})
    bundle("multiclass_1round", iris_X, iris_y, "multiclass", 1, {})
    bundle("multiclass_100tree", iris_X, iris_y, "multiclass", 100, {})
    # Topology sources for the benchmark runs; only structure is reused.
    bundle("glass_lgbm", glass_X, glass_y, "multiclass", 17, {"min_data_in_leaf": 5})
    bundle("yeast_lgbm", yeast_X, yeast_y, "multiclass", 10, {"min_data_in_leaf": 5})


if __name__ == "__main__":
    main()
