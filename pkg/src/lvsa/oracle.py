"""Exact answer sets by grounding: enumerate entity substitutions for every
existential variable in topological order.

Positive literals into a node prune its candidates to adjacency lists;
nodes with no positive incoming literal range over the whole vocabulary.
Negated literals are checked against ``neg_kg`` (defaults to ``kg``).
"""

from __future__ import annotations

import itertools
import time
from statistics import median
from typing import Sequence

import numpy as np

from .errors import SamplingError, StructureError
from .kg import Kg, SplitGraphs
from .query import (
    TEMPLATE_ARITY,
    Anchor,
    Conjunct,
    QueryGraph,
    Var,
    instantiate_template,
    toposort,
    validate_query,
)


def _check_ids(kg: Kg, g: Conjunct) -> None:
    for node in g.nodes:
        if isinstance(node, Anchor):
            kg._check_entity(node.entity)
    for e in g.edges:
        kg._check_rel(e.rel)


def conjunct_answers(kg: Kg, g: Conjunct, neg_kg: Kg | None = None) -> set[int]:
    neg_kg = kg if neg_kg is None else neg_kg
    _check_ids(kg, g)
    adj = kg.out_index
    neg_adj = neg_kg.out_index
    all_entities = range(kg.num_entities)
    free = g.free
    incoming = [[] for _ in g.nodes]
    for e in g.edges:
        incoming[e.dst].append(e)
    assign: list[int | None] = [None] * len(g.nodes)
    for i, node in enumerate(g.nodes):
        if isinstance(node, Anchor):
            assign[i] = node.entity
    # literals between two anchors (left behind by substitute) are ground facts
    for e in g.edges:
        if assign[e.src] is not None and assign[e.dst] is not None:
            table = neg_adj if e.neg else adj
            if (assign[e.dst] in table.get((assign[e.src], e.rel), ())) == e.neg:
                return set()
    # the free node is never a source, so it can always go last
    var_order = [i for i in toposort(g) if isinstance(g.nodes[i], Var)]

    def domain(i: int):
        cand = None
        for e in incoming[i]:
            if not e.neg:
                tails = adj.get((assign[e.src], e.rel), ())
                cand = set(tails) if cand is None else cand.intersection(tails)
                if not cand:
                    return cand
        if cand is None:
            cand = set(all_entities)
        for e in incoming[i]:
            if e.neg:
                cand.difference_update(neg_adj.get((assign[e.src], e.rel), ()))
        return cand

    answers: set[int] = set()

    def search(k: int) -> None:
        if k == len(var_order):
            answers.update(domain(free))
            return
        i = var_order[k]
        for ent in sorted(domain(i)):
            assign[i] = ent
            search(k + 1)
        assign[i] = None

    search(0)
    return answers


def naive_conjunct_answers(kg: Kg, g: Conjunct, neg_kg: Kg | None = None) -> set[int]:
    """Unpruned grounding: try every assignment of every variable."""
    neg_kg = kg if neg_kg is None else neg_kg
    _check_ids(kg, g)
    var_nodes = [i for i, n in enumerate(g.nodes) if isinstance(n, Var)]
    free = g.free
    answers = set()
    for combo in itertools.product(range(kg.num_entities), repeat=len(var_nodes)):
        assign = {i: n.entity for i, n in enumerate(g.nodes) if isinstance(n, Anchor)}
        assign.update(zip(var_nodes, combo))
        for cand in range(kg.num_entities):
            assign[free] = cand
            ok = True
            for e in g.edges:
                triple = (assign[e.src], e.rel, assign[e.dst])
                if e.neg:
                    ok = triple not in neg_kg.triples
                else:
                    ok = triple in kg.triples
                if not ok:
                    break
            if ok:
                answers.add(cand)
    return answers


def answer_set(kg: Kg, q: QueryGraph, neg_kg: Kg | None = None) -> frozenset:
    """A[Q] as the union of the per-disjunct answer sets."""
    out: set[int] = set()
    for c in q.disjuncts:
        out |= conjunct_answers(kg, c, neg_kg)
    return frozenset(out)


def naive_answer_set(kg: Kg, q: QueryGraph, neg_kg: Kg | None = None) -> frozenset:
    out: set[int] = set()
    for c in q.disjuncts:
        out |= naive_conjunct_answers(kg, c, neg_kg)
    return frozenset(out)


def label_answers(splits: SplitGraphs, q: QueryGraph) -> tuple[frozenset, frozenset]:
    """(easy, hard): easy from train+valid edges, hard only reachable with test edges.

    Negated literals are always judged against the full graph.
    """
    easy = answer_set(splits.train_valid, q, neg_kg=splits.full)
    full = answer_set(splits.full, q, neg_kg=splits.full)
    return easy, full - easy


def substitute(g: Conjunct, node: int, entity: int) -> Conjunct:
    """Replace a variable node by an anchor for ``entity``."""
    if not isinstance(g.nodes[node], Var):
        raise StructureError(f"node {node} is not an existential variable")
    nodes = list(g.nodes)
    nodes[node] = Anchor(entity)
    return Conjunct(tuple(nodes), g.edges)


# -- sampling -----------------------------------------------------------------------
MODES = ("full", "partial", "train")


def _tag_stream(seed: int, tag: str) -> np.random.Generator:
    # one independent stream per (seed, tag) so tags can be sampled in parallel
    idx = list(TEMPLATE_ARITY).index(tag)
    return np.random.default_rng(np.random.SeedSequence([seed, idx]))


def _walk_tables(kg: Kg) -> tuple[list[int], dict[int, list[int]]]:
    heads = sorted({h for h, _ in kg.out_index})
    in_rels: dict[int, list[int]] = {}
    for h, r in kg.out_index:
        in_rels.setdefault(h, []).append(kg.inverse(r))  # an r-edge out of h is an inverse(r)-edge into h
    return heads, in_rels


def _walk_instance(kg: Kg, tag: str, rng: np.random.Generator, tables=None) -> QueryGraph | None:
    """Ground the template backwards from a random target entity.

    Every literal, negated or not, is instantiated from a real edge of
    ``kg`` ending at its destination's value, so negation always removes
    at least the walk's own witness.  Returns None on a dead end.
    """
    n_a, n_r = TEMPLATE_ARITY[tag]
    skeleton = instantiate_template(tag, list(range(n_a)), list(range(n_r)))
    if not kg.out_index:
        return None
    heads, in_rels = tables or _walk_tables(kg)
    anchors: dict[int, int] = {}
    rels: dict[int, int] = {}
    target = heads[rng.integers(len(heads))]
    for c in skeleton.disjuncts:
        value = {c.free: target}
        for i in reversed(toposort(c)):
            if i not in value:
                return None
            for j in c.incoming(i):
                e = c.edges[j]
                if e.rel in rels:
                    r = rels[e.rel]
                else:
                    options = in_rels.get(value[i], [])
                    if not options:
                        return None
                    r = options[rng.integers(len(options))]
                    rels[e.rel] = r
                cands = kg.out_index.get((value[i], kg.inverse(r)), ())
                if not cands:
                    return None
                src = cands[rng.integers(len(cands))]
                if e.src in value and value[e.src] != src:
                    return None
                value[e.src] = src
                node = c.nodes[e.src]
                if isinstance(node, Anchor) and anchors.setdefault(node.entity, src) != src:
                    return None
    return instantiate_template(tag, [anchors[i] for i in range(n_a)], [rels[i] for i in range(n_r)])


def sample_queries(
    splits: SplitGraphs, tag: str, n: int, seed: int, mode: str = "full"
) -> list[QueryGraph]:
    """Seeded rejection sampling of ``n`` labelled queries of one template.

    ``full``: walk the full graph, keep queries with hard answers.
    ``partial``: walk train+valid, keep queries with easy answers.
    ``train``: walk and label on the training graph only (everything easy).
    """
    if n < 1:
        raise SamplingError("n must be >= 1")
    if tag not in TEMPLATE_ARITY:
        raise SamplingError(f"unknown template {tag!r}")
    if mode not in MODES:
        raise SamplingError(f"unknown mode {mode!r}")
    rng = _tag_stream(seed, tag)
    walk_kg = {"full": splits.full, "partial": splits.train_valid, "train": splits.train}[mode]
    tables = _walk_tables(walk_kg)
    out: list[QueryGraph] = []
    seen = set()
    attempts = 0
    while len(out) < n:
        if attempts >= 100 * n:
            raise SamplingError(f"could not sample {n} {tag} queries in {100 * n} attempts (got {len(out)})")
        attempts += 1
        q = _walk_instance(walk_kg, tag, rng, tables)
        if q is None or q.disjuncts in seen:
            continue
        if mode == "train":
            easy, hard = answer_set(splits.train, q), frozenset()
        else:
            easy, hard = label_answers(splits, q)
        keep = bool(hard) if mode == "full" else bool(easy)
        if keep:
            seen.add(q.disjuncts)
            out.append(q.with_answers(easy, hard))
    return out


def latency_probe(kg: Kg, tag: str, n: int, seed: int = 0, queries: Sequence[QueryGraph] | None = None) -> float:
    """Mean oracle wall time per query (median over 5 repetitions)."""
    if queries is None:
        queries = sample_queries(SplitGraphs(kg, kg, kg), tag, n, seed, mode="train")
    for q in queries:
        validate_query(q)
    reps = []
    for _ in range(5):
        t0 = time.perf_counter()
        for q in queries:
            answer_set(kg, q)
        reps.append((time.perf_counter() - t0) / max(len(queries), 1))
    return median(reps)


__all__ = [
    "answer_set",
    "conjunct_answers",
    "label_answers",
    "latency_probe",
    "naive_answer_set",
    "naive_conjunct_answers",
    "sample_queries",
    "substitute",
]
