"""Random forest: bagged CART trees with per-split feature subsampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import DecisionTreeModel, grow_tree


@dataclass
class RandomForestModel:
    classes: np.ndarray
    trees: list

    kind = "RandomForest"

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def scores(self, X: np.ndarray) -> np.ndarray:
        """Vote fractions: share of trees predicting each class."""
        X = self.trees[0]._check(X)
        n, C = X.shape[0], self.classes.shape[0]
        votes = np.zeros((n, C), dtype=np.float64)
        for tree in self.trees:
            pred = np.argmax(tree.scores(X), axis=1)
            votes[np.arange(n), pred] += 1.0
        return votes / len(self.trees)


def grow_forest(X, y_codes, n_classes, classes, hyper, seed) -> RandomForestModel:
    """Each tree gets its own (seed, index) substream covering both its
    bootstrap draw and its per-node feature sampling, so trees can be
    grown in any order (or in parallel) with identical results."""
    n = X.shape[0]
    trees = []
    for t in range(hyper.n_trees):
        rng = np.random.default_rng((seed, t))
        if hyper.bootstrap:
            sample = rng.integers(0, n, size=n)
            trees.append(grow_tree(X[sample], y_codes[sample], n_classes, classes, hyper, rng))
        else:
            trees.append(grow_tree(X, y_codes, n_classes, classes, hyper, rng))
    return RandomForestModel(classes=classes, trees=trees)
