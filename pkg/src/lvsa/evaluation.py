"""Filtered ranking metrics, grounding interpretability, and the latency benchmark."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from statistics import median
from typing import Callable, Sequence

import numpy as np

from . import vsa
from .encoder import ModelParams, Tape, plan_for, run_conjunct, score_queries, score_query
from .errors import DataError, MetricError
from .kg import Kg, SplitGraphs
from .oracle import answer_set, conjunct_answers, latency_probe, sample_queries, substitute
from .query import NEGATION_TAGS, POSITIVE_TAGS, Conjunct, Free, QueryGraph, Var, toposort

HITS = (1, 3, 10)
Scorer = Callable[[list], np.ndarray]


def filtered_rank(scores: np.ndarray, answers, filter_out=()) -> list[tuple[int, int]]:
    """Rank of each answer against entities outside ``filter_out`` and ``answers``.

    Ties are optimistic: only strictly greater competitors push an answer down.
    """
    answers = sorted(set(int(a) for a in answers))
    if not answers:
        raise MetricError("cannot rank an empty answer set")
    scores = np.asarray(scores)
    mask = np.ones(scores.shape[0], dtype=bool)
    mask[answers] = False
    excluded = [int(e) for e in filter_out]
    if excluded:
        mask[excluded] = False
    competitors = np.sort(scores[mask])
    # number of competitors strictly greater than each answer's score
    above = competitors.size - np.searchsorted(competitors, scores[answers], side="right")
    return [(a, int(k) + 1) for a, k in zip(answers, above)]


def query_metrics(ranks: Sequence[tuple[int, int]]) -> dict[str, float]:
    r = np.array([k for _, k in ranks], dtype=np.float64)
    out = {"mrr": float(np.mean(1.0 / r))}
    for k in HITS:
        out[f"h{k}"] = float(np.mean(r <= k))
    return out


@dataclass
class QueryResult:
    index: int
    tag: str | None
    ranks: list  # (answer, filtered rank)
    metrics: dict


@dataclass
class RankingReport:
    queries: list = field(default_factory=list)
    per_tag: dict = field(default_factory=dict)
    a_p: float | None = None
    a_n: float | None = None
    skipped: int = 0

    def to_json(self) -> dict:
        out = {tag: dict(vals) for tag, vals in self.per_tag.items()}
        out["a_p"] = self.a_p
        out["a_n"] = self.a_n
        return out


def _aggregate(results: list[QueryResult], skipped: int = 0) -> RankingReport:
    groups: dict[str, list[QueryResult]] = {}
    for r in results:
        groups.setdefault(r.tag if r.tag is not None else "other", []).append(r)
    per_tag = {}
    for tag in sorted(groups):
        rows = groups[tag]
        per_tag[tag] = {key: float(np.mean([r.metrics[key] for r in rows])) for key in ("mrr", "h1", "h3", "h10")}
        per_tag[tag]["n"] = len(rows)

    def avg(tags):
        vals = [per_tag[t]["mrr"] for t in tags if t in per_tag]
        return float(np.mean(vals)) if vals else None

    return RankingReport(results, per_tag, avg(POSITIVE_TAGS), avg(NEGATION_TAGS), skipped)


def evaluate_scorer(scorer: Scorer, queries: Sequence[QueryGraph], answers: str = "hard", chunk: int = 256) -> RankingReport:
    """Rank answers of every query under ``scorer(list_of_queries) -> (B, |V|)``.

    ``answers="hard"`` ranks hard answers (queries without any are skipped);
    ``answers="all"`` ranks easy and hard answers together.  Known answers
    (easy and hard) are always filtered from the competitors.
    """
    if answers not in ("hard", "all"):
        raise ValueError(f"answers must be 'hard' or 'all', got {answers!r}")
    results, skipped = [], 0
    for q in queries:
        if q.easy is None and q.hard is None:
            raise DataError("query has no answer labels")
    for start in range(0, len(queries), chunk):
        part = list(queries[start : start + chunk])
        scores = scorer(part)
        for offset, q in enumerate(part):
            target = (q.hard or frozenset()) if answers == "hard" else q.answers()
            if not target:
                skipped += 1
                continue
            ranks = filtered_rank(scores[offset], target, q.answers())
            results.append(QueryResult(start + offset, q.tag, ranks, query_metrics(ranks)))
    return _aggregate(results, skipped)


def evaluate(p: ModelParams, splits: SplitGraphs | None, queries: Sequence[QueryGraph], answers: str = "hard") -> RankingReport:
    """Filtered ranking of the encoder's scores.

    ``splits`` is accepted for symmetry with the oracle-backed metrics; the
    labels attached to each query already carry the split information.
    """
    return evaluate_scorer(lambda qs: score_queries(p, qs), queries, answers)


def oracle_scorer(kg: Kg) -> Scorer:
    """Indicator scores of the exact answer set on ``kg``."""

    def scorer(queries):
        out = np.zeros((len(queries), kg.num_entities))
        for i, q in enumerate(queries):
            ans = sorted(answer_set(kg, q))
            out[i, ans] = 1.0
        return out

    return scorer


def random_scorer(num_entities: int, seed: int) -> Scorer:
    rng = np.random.default_rng(seed)
    return lambda queries: rng.random((len(queries), num_entities))


def random_baseline(queries: Sequence[QueryGraph], num_entities: int, seed: int = 0, draws: int = 20, answers: str = "hard") -> float:
    """Mean MRR of uniformly random scores, averaged over ``draws`` seeded draws."""
    ss = np.random.SeedSequence(seed).spawn(draws)
    mrrs = []
    for s in ss:
        rep = evaluate_scorer(random_scorer(num_entities, s), queries, answers)
        mrrs.append(float(np.mean([r.metrics["mrr"] for r in rep.queries])) if rep.queries else 0.0)
    return float(np.mean(mrrs))


# -- interpretability -------------------------------------------------------------
# A grounder maps (conjunct, node, already-fixed {node: entity}) to scores over entities.
Grounder = Callable[[Conjunct, int, dict], np.ndarray]


def encoder_grounder(p: ModelParams) -> Grounder:
    """Scores from each node's encoded embedding (ignores fixed choices)."""
    cache: dict = {}

    def grounder(c: Conjunct, node: int, fixed: dict) -> np.ndarray:
        if c not in cache:
            t = Tape(p)
            run = run_conjunct(t, plan_for(c), [c])
            cache.clear()
            cache[c] = {i: t.value(s)[0] for i, s in run.node_slots.items()}
        return vsa.score_all(cache[c][node], p.entities)

    return grounder


def _valid_groundings(kg: Kg, c: Conjunct, node: int, fixed: dict) -> np.ndarray:
    """Entities ``e`` for which setting ``node := e`` (plus ``fixed``) stays satisfiable."""
    for n, e in fixed.items():
        c = substitute(c, n, e)
    ok = np.zeros(kg.num_entities, dtype=bool)
    if isinstance(c.nodes[node], Free):
        ok[sorted(conjunct_answers(kg, c))] = True
        return ok
    for e in range(kg.num_entities):
        ok[e] = bool(conjunct_answers(kg, substitute(c, node, e)))
    return ok


def oracle_grounder(kg: Kg) -> Grounder:
    """Perfect grounder: indicator of groundings consistent with the fixed ones."""
    return lambda c, node, fixed: _valid_groundings(kg, c, node, fixed).astype(np.float64)


def path_holds(kg: Kg, c: Conjunct, assignment: dict[int, int]) -> bool:
    """Whether every literal of ``c`` holds on ``kg`` under a full node assignment."""
    for e in c.edges:
        present = assignment[e.dst] in kg.neighbors(assignment[e.src], e.rel)
        if present == e.neg:
            return False
    return True


@dataclass
class InterpReport:
    variable: dict  # var id -> {"mrr", "h1", "n"}
    path_precision: float
    n: int

    def to_json(self) -> dict:
        return {"variable": {str(k): v for k, v in self.variable.items()}, "path_precision": self.path_precision, "n": self.n}


def interpret(p: ModelParams | None, splits: SplitGraphs, queries: Sequence[QueryGraph], grounder: Grounder | None = None) -> InterpReport:
    """Variable-level grounding MRR and path-level precision on the full graph.

    A grounding of variable V is correct when the residual query with V
    substituted stays satisfiable.  Its MRR ranks all correct groundings
    against the incorrect ones.  The path check grounds every node to its
    top entity in topological order and verifies every literal.
    """
    if grounder is None:
        if p is None:
            raise ValueError("need params or a grounder")
        grounder = encoder_grounder(p)
    kg = splits.full
    per_var: dict[int, list] = {}
    hits = 0
    for q in queries:
        if not any(isinstance(n, Var) for c in q.disjuncts for n in c.nodes):
            raise DataError("interpretability needs queries with existential variables")
        path_ok = False
        for c in q.disjuncts:
            order = toposort(c)
            for i in order:
                node = c.nodes[i]
                if not isinstance(node, Var):
                    continue
                ok = _valid_groundings(kg, c, i, {})
                if not ok.any():
                    continue
                ranks = filtered_rank(grounder(c, i, {}), np.flatnonzero(ok))
                per_var.setdefault(node.id, []).append(query_metrics(ranks))
            fixed: dict[int, int] = {}
            assignment: dict[int, int] = {}
            for i in order:
                node = c.nodes[i]
                if isinstance(node, (Var, Free)):
                    scores = grounder(c, i, dict(fixed))
                    best = int(np.argsort(-scores, kind="stable")[0])
                    assignment[i] = best
                    if isinstance(node, Var):
                        fixed[i] = best
                else:
                    assignment[i] = node.entity
            path_ok = path_ok or path_holds(kg, c, assignment)
        hits += path_ok
    variable = {
        v: {"mrr": float(np.mean([m["mrr"] for m in ms])), "h1": float(np.mean([m["h1"] for m in ms])), "n": len(ms)}
        for v, ms in sorted(per_var.items())
    }
    n = len(queries)
    return InterpReport(variable, hits / n if n else 0.0, n)


# -- latency -----------------------------------------------------------------------
def encoder_latency(p: ModelParams, queries: Sequence[QueryGraph], reps: int = 5) -> float:
    """Median over ``reps`` of the mean unbatched per-query scoring time."""
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        for q in queries:
            score_query(p, q)
        times.append((time.perf_counter() - t0) / max(len(queries), 1))
    return median(times)


def bench_dichotomy(p: ModelParams, kg: Kg, tags=("1p", "2p", "3p"), n: int = 200, seed: int = 0) -> dict:
    """Per-tag encoder and oracle latency on the same sampled queries.

    Runs with BLAS limited to one thread.  ``n == 0`` returns an empty table.
    """
    from threadpoolctl import threadpool_limits

    table: dict = {"rows": {}, "ratios": {}}
    if n == 0:
        return table
    splits = SplitGraphs(kg, kg, kg)
    with threadpool_limits(1):
        for tag in tags:
            qs = sample_queries(splits, tag, n, seed, mode="train")
            for q in qs:
                score_query(p, q)  # warm the plan cache
            table["rows"][tag] = {
                "encoder": encoder_latency(p, qs),
                "oracle": latency_probe(kg, tag, n, seed, queries=qs),
                "n": len(qs),
            }
    rows = table["rows"]
    if "1p" in rows and "3p" in rows:
        for who in ("encoder", "oracle"):
            table["ratios"][who] = rows["3p"][who] / rows["1p"][who]
    return table
