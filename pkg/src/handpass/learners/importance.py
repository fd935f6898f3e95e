"""Gini-based feature importance and subcarrier selection."""

from __future__ import annotations

import re

import numpy as np

from ..errors import UnsupportedModel
from .forest import RandomForestModel
from .tree import DecisionTreeModel

_FEATURE_RE = re.compile(r"^(amp|phase)_(-?\d+)$")


def _tree_importances(tree: DecisionTreeModel) -> np.ndarray:
    """Impurity decrease per feature, weighted by node sample fraction."""
    imp = np.zeros(tree.n_features)
    n_root = tree.n_node_samples[0]
    internal = np.nonzero(tree.feature >= 0)[0]
    for nid in internal:
        l, r = tree.left[nid], tree.right[nid]
        decrease = (
            tree.n_node_samples[nid] * tree.impurity[nid]
            - tree.n_node_samples[l] * tree.impurity[l]
            - tree.n_node_samples[r] * tree.impurity[r]
        ) / n_root
        imp[tree.feature[nid]] += decrease
    total = imp.sum()
    return imp / total if total > 0 else imp


def feature_importance(model) -> np.ndarray:
    """Mean decrease in Gini, normalized to sum 1.

    Forests average per-tree importances.  A tree with no splits has no
    impurity decrease to attribute and yields all zeros.
    """
    if isinstance(model, DecisionTreeModel):
        return _tree_importances(model)
    if isinstance(model, RandomForestModel):
        acc = np.zeros(model.n_features)
        for tree in model.trees:
            acc += _tree_importances(tree)
        total = acc.sum()
        return acc / total if total > 0 else acc
    raise UnsupportedModel(
        f"feature importance requires a tree model, got {type(model).__name__}"
    )


def select_subcarriers(importances, top_m: int, names=None) -> list:
    """Top subcarriers by summed (amplitude + phase) importance.

    names defaults to the pruned feature layout.  Ties break toward the
    lower subcarrier index.
    """
    if names is None:
        from ..dataset import feature_names

        names = feature_names(prune=True)
    importances = np.asarray(importances, dtype=np.float64)
    if importances.shape[0] != len(names):
        raise ValueError(
            f"{importances.shape[0]} importances for {len(names)} feature names"
        )
    per_k: dict = {}
    for name, w in zip(names, importances):
        m = _FEATURE_RE.match(name)
        if m is None:
            raise ValueError(f"feature name {name!r} does not map to a subcarrier")
        per_k[int(m.group(2))] = per_k.get(int(m.group(2)), 0.0) + float(w)
    ranked = sorted(per_k.items(), key=lambda kv: (-kv[1], kv[0]))
    return [k for k, _ in ranked[:top_m]]
