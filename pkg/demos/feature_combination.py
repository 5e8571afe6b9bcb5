#!/usr/bin/env python3
"""A tour of the feature-combination operators on small vectors."""

import numpy as np

from twistnet.featcomb import (
    CombinationSpec,
    combine_multiplicative,
    combine_pairwise_sum,
    combined_feature_names,
    enumerate_subsets,
    global_interaction,
    transform_dataset,
)

# Every m-subset of the feature indices, in lexicographic order.
subsets = enumerate_subsets(4, 2)
print("2-subsets of 4 features:", subsets)

# The multiplicative operator collapses each subset to the product of its
# members, so [1, 2, 3, 4] with m=2 gives every pairwise product.
x = np.array([1.0, 2.0, 3.0, 4.0])
print("multiplicative m=2:", combine_multiplicative(x, subsets))

# The pairwise-sum operator adds the products of all pairs inside a subset.
# For a 3-subset {A, B, C} that is AB + AC + BC.
triples = enumerate_subsets(4, 3)
print("pairwise_sum m=3:  ", combine_pairwise_sum(x, triples))

# With m=2 a subset holds exactly one pair, so the two operators coincide.
pair_mult = combine_multiplicative(x, subsets)
pair_sum = combine_pairwise_sum(x, subsets)
print("m=2 coincidence, max difference:", np.max(np.abs(pair_mult - pair_sum)))

# Over the full feature set the pairwise sum has a closed form:
# sum_{i<j} x_i x_j = ((sum x)^2 - sum x^2) / 2.
full = combine_pairwise_sum(x, [tuple(range(4))])[0]
closed = (x.sum() ** 2 - (x**2).sum()) / 2.0
print(f"full-set pairwise {full} vs closed form {closed}")

# The global interaction is that same quantity squeezed through an
# activation; a negative pair sum dies under relu.
print("global interaction of [1, -2, 0.5], relu:",
      global_interaction([1.0, -2.0, 0.5], "relu"))

# Batches go through transform_dataset, which also hands back the subsets
# and can append the untouched originals.
X = np.array([[1.0, 2.0, 3.0], [0.5, -1.0, 2.0]])
spec = CombinationSpec(m=2, augment_original=True)
out = transform_dataset(X, spec)
names = combined_feature_names(out.subsets, spec, ["a", "b", "c"])
print("columns:", names)
print(out.values)

# Reordering input features permutes the combined columns but the multiset
# of values is untouched; sorted rows are identical.
perm = [2, 0, 1]
base = np.sort(transform_dataset(X, CombinationSpec(m=2)).values, axis=1)
moved = np.sort(transform_dataset(X[:, perm], CombinationSpec(m=2)).values, axis=1)
print("permutation invariance, max difference:", np.max(np.abs(base - moved)))
