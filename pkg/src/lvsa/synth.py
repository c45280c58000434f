"""Seeded synthetic knowledge graphs with latent cluster structure.

Entities are dealt into clusters.  Each relation maps every cluster to a
target cluster, and a head's tails under that relation are drawn from the
target cluster.  Held-out edges are therefore predictable from the cluster
pattern, which gives toy training runs something to generalize.  With
``clusters=1`` the graph is uniformly random.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .kg import SplitGraphs, split_graphs


def synth_triples(entities: int, relations: int, degree: int, seed: int, clusters: int | None = None) -> list[tuple[str, str, str]]:
    """Forward triples as labels ``e<i>``, ``r<j>``; each head gets ``degree`` distinct out-edges."""
    if entities < 2 or relations < 1 or degree < 1:
        raise ConfigError("need entities >= 2, relations >= 1, degree >= 1")
    if clusters is None:
        clusters = max(1, entities // 10)
    if not 1 <= clusters <= entities:
        raise ConfigError("clusters must be in [1, entities]")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    member = rng.permutation(entities) % clusters
    groups = [np.flatnonzero(member == k) for k in range(clusters)]
    target = rng.integers(0, clusters, size=(relations, clusters))
    capacity = relations * min(len(g) for g in groups)
    if degree > capacity:
        raise ConfigError(f"degree {degree} exceeds the {capacity} distinct edges available per head")
    rows = []
    for h in range(entities):
        edges: set[tuple[int, int]] = set()
        while len(edges) < degree:
            r = int(rng.integers(relations))
            pool = groups[target[r, member[h]]]
            edges.add((r, int(pool[rng.integers(len(pool))])))
        rows.extend((f"e{h}", f"r{r}", f"e{t}") for r, t in sorted(edges))
    return rows


def synth_splits(
    entities: int,
    relations: int,
    degree: int,
    seed: int,
    clusters: int | None = None,
    valid_frac: float = 0.1,
    test_frac: float = 0.1,
) -> SplitGraphs:
    """Random edge split of :func:`synth_triples` (train keeps every entity and relation)."""
    rows = synth_triples(entities, relations, degree, seed, clusters)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5917]))
    order = rng.permutation(len(rows))
    n_valid = int(round(valid_frac * len(rows)))
    n_test = int(round(test_frac * len(rows)))
    held = order[: n_valid + n_test]
    train = [rows[i] for i in sorted(order[n_valid + n_test :])]
    valid = [rows[i] for i in sorted(held[:n_valid])]
    test = [rows[i] for i in sorted(held[n_valid:])]
    ents = [f"e{i}" for i in range(entities)]
    rels = [f"r{j}" for j in range(relations)]
    return split_graphs(train, valid, test, entities=ents, relations=rels)
