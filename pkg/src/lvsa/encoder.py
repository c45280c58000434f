"""Query encoder: turns an EFO-1 query into a complex vector and scores entities.

Nodes are visited in topological order.  Anchors are table lookups,
independent variables come from MLP_I, dependent variables from MLP_D fed
with the bundle of their incoming literals and the bundle of their inverted
outgoing literals, and negated literals go through MLP_N.  Disjuncts are
scored separately and merged with an elementwise max.

Queries with the same shape share one execution plan and run as a batch.
Everything is recorded on a small slot tape so training can backpropagate
through exactly the operations used here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import nn, vsa
from .errors import BoundsError, DimensionError, StructureError, UnknownVariableError
from .query import (
    Anchor,
    AnnotatedConjunct,
    Conjunct,
    DependentVar,
    Free,
    IndependentVar,
    QueryGraph,
    Var,
    skolem_classify,
    toposort,
)

MLP_NAMES = ("mlp_i", "mlp_d", "mlp_n")
BLOCKS = ("entities", "relations") + MLP_NAMES


@dataclass
class ModelParams:
    entities: np.ndarray  # (|V|, d) complex
    relations: np.ndarray  # (2R, d) complex
    mlp_i: nn.Mlp
    mlp_d: nn.Mlp
    mlp_n: nn.Mlp
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.entities.shape[1]

    @property
    def num_entities(self) -> int:
        return self.entities.shape[0]

    @property
    def num_relation_ids(self) -> int:
        return self.relations.shape[0]

    @property
    def num_relations(self) -> int:
        return self.relations.shape[0] // 2

    def named_params(self) -> dict[str, np.ndarray]:
        out = {"entities": self.entities, "relations": self.relations}
        for name in MLP_NAMES:
            m = getattr(self, name)
            for k, (w, b) in enumerate(zip(m.weights, m.biases)):
                out[f"{name}.{k}.W"] = w
                out[f"{name}.{k}.b"] = b
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.entities.copy(),
            self.relations.copy(),
            self.mlp_i.copy(),
            self.mlp_d.copy(),
            self.mlp_n.copy(),
            dict(self.meta),
        )


def mlp_dims(d: int, layers: tuple[int, int, int]) -> dict[str, list[int]]:
    """Hidden widths equal each net's input width."""
    li, ld, ln = layers
    return {
        "mlp_i": [2 * d] * (li + 1),
        "mlp_d": [4 * d] * ld + [2 * d],
        "mlp_n": [4 * d] * ln + [2 * d],
    }


def init_params(
    num_entities: int,
    num_relation_ids: int,
    d: int,
    seed: int,
    layers: tuple[int, int, int] = (2, 3, 2),
    slope: float = nn.DEFAULT_SLOPE,
    init_scale: float = 0.1,
    float_width: int = 64,
) -> ModelParams:
    if d < 1:
        raise DimensionError("d must be >= 1")
    if num_relation_ids % 2:
        raise DimensionError("relation table must hold forward and inverse relations (even size)")
    real = np.float64 if float_width == 64 else np.float32
    cplx = np.complex128 if float_width == 64 else np.complex64
    ss = np.random.SeedSequence(seed).spawn(5)

    def table(n, s):
        rng = np.random.default_rng(s)
        return (rng.normal(0.0, init_scale, (n, d)) + 1j * rng.normal(0.0, init_scale, (n, d))).astype(cplx)

    dims = mlp_dims(d, layers)
    mlps = [
        nn.mlp_init(dims[name], int(s.generate_state(1)[0]), slope, real)
        for name, s in zip(MLP_NAMES, ss[2:])
    ]
    return ModelParams(table(num_entities, ss[0]), table(num_relation_ids, ss[1]), *mlps, meta={"stage": 0, "seed": seed})


# -- slot tape ------------------------------------------------------------------------
class Tape:
    """Values plus backward closures, one slot per operation.

    A slot is live when its value depends on a trainable parameter block;
    backward only visits live slots.
    """

    def __init__(self, params: ModelParams, trainable=()):
        self.params = params
        self.trainable = frozenset(trainable)
        self.values: list = []
        self.live: list[bool] = []
        self.parents: list[tuple] = []
        self.vjps: list = []
        self.mlp_calls = 0
        self.grads: dict[str, np.ndarray] = {}

    def value(self, slot: int):
        return self.values[slot]

    def _push(self, value, parents=(), vjp=None, live=None) -> int:
        if live is None:
            live = any(self.live[p] for p in parents)
        self.values.append(value)
        self.live.append(bool(live))
        self.parents.append(tuple(parents))
        self.vjps.append(vjp if live else None)
        return len(self.values) - 1

    def _acc(self, key: str, g) -> None:
        if key in self.grads:
            self.grads[key] += g
        else:
            self.grads[key] = np.array(g, copy=True)

    # leaves
    def constant(self, value) -> int:
        return self._push(value, live=False)

    def lookup(self, block: str, ids: np.ndarray) -> int:
        table = getattr(self.params, block)
        if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
            raise BoundsError(f"{block} id out of range [0, {table.shape[0]})")

        def vjp(g):
            acc = np.zeros_like(table)
            np.add.at(acc, ids, g)
            self._acc(block, acc)
            return ()

        return self._push(table[ids], (), vjp, live=block in self.trainable)

    # algebra
    def bind(self, a: int, b: int) -> int:
        va, vb = self.values[a], self.values[b]
        return self._push(vsa.bind(va, vb), (a, b), lambda g: vsa.bind_vjp(va, vb, g))

    def norm_add(self, slots: list[int]) -> int:
        if len(slots) == 1:
            return slots[0]
        arr = np.stack([self.values[s] for s in slots])
        return self._push(vsa.norm_add(arr), tuple(slots), lambda g: tuple(vsa.norm_add_vjp(arr, g)))

    def neg(self, a: int) -> int:
        return self._push(-self.values[a], (a,), lambda g: (-g,))

    def mlp(self, name: str, slots: list[int]) -> int:
        """MLP over the concatenation of stacked complex inputs; complex output."""
        m = getattr(self.params, name)
        x = np.concatenate([vsa.stack(self.values[s]) for s in slots], axis=-1)
        cache: list = []
        y = vsa.split(nn.forward(m, x, cache))
        self.mlp_calls += 1
        widths = [self.values[s].shape[-1] for s in slots]

        def vjp(g):
            gx, pgrads = nn.backward(m, x, vsa.stack(g), cache)
            if name in self.trainable:
                for k, (gw, gb) in enumerate(pgrads):
                    self._acc(f"{name}.{k}.W", gw)
                    self._acc(f"{name}.{k}.b", gb)
            out, off = [], 0
            for w in widths:
                part = gx[..., off : off + 2 * w]
                out.append(vsa.split(part))
                off += 2 * w
            return tuple(out)

        live = name in self.trainable or any(self.live[s] for s in slots)
        return self._push(y, tuple(slots), vjp, live)

    def scores(self, q: int) -> int:
        """(B, |V|) Hermitian scores against the entity table."""
        table = self.params.entities
        vq = self.values[q]

        def vjp(g):
            gq, gt = vsa.score_matrix_vjp(vq, table, g)
            if "entities" in self.trainable:
                self._acc("entities", gt)
            return (gq,)

        live = "entities" in self.trainable or self.live[q]
        return self._push(vsa.score_matrix(vq, table), (q,), vjp, live)

    def herm(self, a: int, b: int) -> int:
        """Row-wise Hermitian similarity of two (B, d) slots."""
        va, vb = self.values[a], self.values[b]
        return self._push(vsa.herm_score(va, vb), (a, b), lambda g: (g[..., None] * vb, g[..., None] * va))

    def sqdist(self, a: int, b: int) -> int:
        """Row-wise squared Euclidean distance over the stacked components."""
        diff = self.values[a] - self.values[b]
        val = (diff.real**2 + diff.imag**2).sum(axis=-1)
        return self._push(val, (a, b), lambda g: (2 * g[..., None] * diff, -2 * g[..., None] * diff))

    def maximum(self, slots: list[int]) -> int:
        if len(slots) == 1:
            return slots[0]
        arr = np.stack([self.values[s] for s in slots])
        winner = arr.argmax(axis=0)

        def vjp(g):
            return tuple(np.where(winner == k, g, 0.0) for k in range(len(slots)))

        return self._push(arr.max(axis=0), tuple(slots), vjp)

    def assemble(self, parts: list[tuple[int, np.ndarray]], n_rows: int) -> int:
        """Scatter per-group rows back into one (n_rows, ...) array."""
        first = self.values[parts[0][0]]
        out = np.zeros((n_rows,) + first.shape[1:], dtype=first.dtype)
        for s, rows in parts:
            out[rows] = self.values[s]
        if len(parts) == 1 and np.array_equal(parts[0][1], np.arange(n_rows)):
            return parts[0][0]
        return self._push(out, tuple(s for s, _ in parts), lambda g: tuple(g[rows] for _, rows in parts))

    def backward(self, seeds: dict[int, np.ndarray]) -> dict[str, np.ndarray]:
        grads: list = [None] * len(self.values)
        for s, g in seeds.items():
            if self.live[s]:
                grads[s] = g if grads[s] is None else grads[s] + g
        for s in range(len(self.values) - 1, -1, -1):
            g = grads[s]
            if g is None or self.vjps[s] is None:
                continue
            for p, gp in zip(self.parents[s], self.vjps[s](g)):
                if self.live[p]:
                    grads[p] = gp if grads[p] is None else grads[p] + gp
        return self.grads


# -- plans ---------------------------------------------------------------------------------
@dataclass(frozen=True)
class Plan:
    annotated: AnnotatedConjunct
    order: tuple[int, ...]
    variables: dict = field(default_factory=dict, compare=False, hash=False)


@lru_cache(maxsize=4096)
def _plan_for(shape: Conjunct) -> Plan:
    # ``shape`` has every id zeroed, so the plan is shared by all queries of that shape;
    # relation inversion happens on the id arrays, so R is irrelevant here
    annotated = skolem_classify(shape, 1)
    return Plan(annotated, toposort(shape), {v.node: v for v in annotated.variables})


def _shape_of(c: Conjunct) -> Conjunct:
    nodes = tuple(Anchor(0) if isinstance(n, Anchor) else n for n in c.nodes)
    edges = tuple(type(e)(e.src, 0, e.dst, e.neg) for e in c.edges)
    return Conjunct(nodes, edges)


@lru_cache(maxsize=65536)
def plan_for(c: Conjunct) -> Plan:
    return _plan_for(_shape_of(c))


@dataclass
class NegatedLiteral:
    """Slots of one negated literal: output, the literal itself, and its context."""

    edge: int
    node: int
    out: int
    lit: int
    ctx: int


@dataclass
class ConjunctRun:
    node_slots: dict[int, int]
    out: int
    negated: list[NegatedLiteral]
    provenance: dict[int, str]


def _combine(t: Tape, pos: list[int], negs: list[tuple[int, int, int]], batch: int, d: int, dtype, record):
    """Bundle positive literals, then bundle that with each negated literal.

    ``negs`` holds (edge index, node, literal slot); each is negated by MLP_N
    with the positive bundle as context (zeros when there is none).
    """
    if not pos and not negs:
        return t.constant(np.zeros((batch, d), dtype=dtype))
    bundle = t.norm_add(pos) if pos else None
    if not negs:
        return bundle
    ctx = bundle if bundle is not None else t.constant(np.zeros((batch, d), dtype=dtype))
    parts = [bundle] if bundle is not None else []
    for edge, node, lit in negs:
        out = t.mlp("mlp_n", [ctx, lit])
        record.append(NegatedLiteral(edge, node, out, lit, ctx))
        parts.append(out)
    return t.norm_add(parts)


def run_conjunct(t: Tape, plan: Plan, conjuncts: list[Conjunct]) -> ConjunctRun:
    """Encode a batch of conjuncts that all share ``plan``'s shape."""
    g = plan.annotated.graph
    batch = len(conjuncts)
    d = t.params.d
    dtype = t.params.entities.dtype
    n_ids = t.params.num_relation_ids
    if n_ids == 0 and g.edges:
        raise BoundsError("model has an empty relation table")
    rel_ids = np.array([[e.rel for e in c.edges] for c in conjuncts], dtype=np.int64).reshape(batch, len(g.edges))
    info = plan.variables
    node_slots: dict[int, int] = {}
    provenance: dict[int, str] = {}
    negated: list[NegatedLiteral] = []
    rel_slot_cache: dict[int, int] = {}

    def rel(j: int) -> int:
        if j not in rel_slot_cache:
            rel_slot_cache[j] = t.lookup("relations", rel_ids[:, j])
        return rel_slot_cache[j]

    def incoming_literals(node: int, edge_ids):
        pos, negs = [], []
        for j in edge_ids:
            e = g.edges[j]
            lit = t.bind(rel(j), node_slots[e.src])
            if e.neg:
                negs.append((j, node, lit))
            else:
                pos.append(lit)
        return pos, negs

    for i in plan.order:
        node = g.nodes[i]
        if isinstance(node, Anchor):
            ids = np.array([c.nodes[i].entity for c in conjuncts], dtype=np.int64)
            node_slots[i] = t.lookup("entities", ids)
            provenance[i] = "anchor"
        elif isinstance(node, Var):
            v = info[i]
            if isinstance(v, IndependentVar):
                rel_bundle = t.norm_add([rel(j) for j in v.outgoing])
                node_slots[i] = t.mlp("mlp_i", [rel_bundle])
                provenance[i] = "mlp_i"
            else:
                pos, negs = incoming_literals(i, v.forward)
                fwd = _combine(t, pos, negs, batch, d, dtype, negated)
                back_lits = []
                for j, _ in v.backward:
                    inv_ids = (rel_ids[:, j] + n_ids // 2) % n_ids
                    inv = t.lookup("relations", inv_ids)
                    aux = t.mlp("mlp_i", [inv])
                    back_lits.append(t.bind(inv, aux))
                bwd = _combine(t, back_lits, [], batch, d, dtype, negated)
                node_slots[i] = t.mlp("mlp_d", [fwd, bwd])
                provenance[i] = "mlp_d"
        else:
            pos, negs = incoming_literals(i, g.incoming(i))
            node_slots[i] = _combine(t, pos, negs, batch, d, dtype, negated)
            provenance[i] = "bundle"
    return ConjunctRun(node_slots, node_slots[g.free], negated, provenance)


@dataclass
class QueryRun:
    """Result of encoding a list of queries on one tape."""

    scores: int  # slot of (B, |V|) scores
    groups: list  # (rows, [ConjunctRun per disjunct])


def run_queries(t: Tape, queries: list[QueryGraph]) -> QueryRun:
    groups: dict[tuple, list[int]] = {}
    for row, q in enumerate(queries):
        groups.setdefault(q.signature(), []).append(row)
    parts, out_groups = [], []
    for rows in groups.values():
        first = queries[rows[0]]
        runs = []
        for k in range(len(first.disjuncts)):
            batch = [queries[r].disjuncts[k] for r in rows]
            runs.append(run_conjunct(t, plan_for(batch[0]), batch))
        score_slots = [t.scores(r.out) for r in runs]
        rows_arr = np.array(rows, dtype=np.int64)
        parts.append((t.maximum(score_slots), rows_arr))
        out_groups.append((rows_arr, runs))
    return QueryRun(t.assemble(parts, len(queries)), out_groups)


# -- lean single-query path -------------------------------------------------------------------
def _encode_one(p: ModelParams, c: Conjunct) -> tuple[dict[int, np.ndarray], int]:
    """Node embeddings of one conjunct as (1, d) rows, without tape bookkeeping.

    Performs the same operations as :func:`run_conjunct` on a batch of one,
    so the results are bit-identical; returns ``(node -> row, mlp calls)``.
    """
    plan = plan_for(c)
    info = plan.variables
    n_ids = p.relations.shape[0]
    calls = 0
    vals: dict[int, np.ndarray] = {}

    def mlp(m, parts):
        nonlocal calls
        calls += 1
        x = np.concatenate([vsa.stack(v) for v in parts], axis=-1)
        return vsa.split(nn.forward(m, x))

    def combine(pos, negs):
        if not pos and not negs:
            return np.zeros((1, p.d), dtype=p.entities.dtype)
        bundle = vsa.norm_add(pos) if len(pos) > 1 else (pos[0] if pos else None)
        if not negs:
            return bundle
        ctx = bundle if bundle is not None else np.zeros((1, p.d), dtype=p.entities.dtype)
        parts = [bundle] if bundle is not None else []
        parts += [mlp(p.mlp_n, [ctx, lit]) for lit in negs]
        return vsa.norm_add(parts) if len(parts) > 1 else parts[0]

    def literals(edge_ids):
        pos, negs = [], []
        for j in edge_ids:
            e = c.edges[j]
            lit = vsa.bind(p.relations[e.rel : e.rel + 1], vals[e.src])
            (negs if e.neg else pos).append(lit)
        return pos, negs

    for i in plan.order:
        node = c.nodes[i]
        if isinstance(node, Anchor):
            vals[i] = p.entities[node.entity : node.entity + 1]
        elif isinstance(node, Var):
            v = info[i]
            if isinstance(v, IndependentVar):
                rels = [p.relations[c.edges[j].rel : c.edges[j].rel + 1] for j in v.outgoing]
                vals[i] = mlp(p.mlp_i, [vsa.norm_add(rels) if len(rels) > 1 else rels[0]])
            else:
                fwd = combine(*literals(v.forward))
                back = []
                for j, _ in v.backward:
                    inv = (c.edges[j].rel + n_ids // 2) % n_ids
                    r_inv = p.relations[inv : inv + 1]
                    back.append(vsa.bind(r_inv, mlp(p.mlp_i, [r_inv])))
                vals[i] = mlp(p.mlp_d, [fwd, combine(back, [])])
        else:
            vals[i] = combine(*literals(c.incoming(i)))
    return vals, calls


# -- public inference API ------------------------------------------------------------------
def embed_literal(p: ModelParams, src: vsa.ComplexVec, rel: int) -> vsa.ComplexVec:
    if not 0 <= rel < p.num_relation_ids:
        raise BoundsError(f"relation id {rel} out of range")
    return vsa.bind(p.relations[rel], src)


def embed_independent(p: ModelParams, rel: int) -> vsa.ComplexVec:
    if not 0 <= rel < p.num_relation_ids:
        raise BoundsError(f"relation id {rel} out of range")
    return vsa.split(nn.forward(p.mlp_i, vsa.stack(p.relations[rel])))


def embed_dependent(p: ModelParams, fwd: list, bwd: list) -> vsa.ComplexVec:
    """``fwd``: (source embedding, rel) pairs; ``bwd``: (aux embedding, inverse rel) pairs."""
    if not fwd and not bwd:
        raise StructureError("a dependent variable needs at least one dependency")
    zero = np.zeros(p.d, dtype=p.entities.dtype)
    f = vsa.norm_add([embed_literal(p, s, r) for s, r in fwd]) if fwd else zero
    b = vsa.norm_add([embed_literal(p, a, r) for a, r in bwd]) if bwd else zero
    return vsa.split(nn.forward(p.mlp_d, np.concatenate([vsa.stack(f), vsa.stack(b)])))


def negate_literal(p: ModelParams, context: vsa.ComplexVec, lit: vsa.ComplexVec) -> vsa.ComplexVec:
    if context.shape[-1] != p.d or lit.shape[-1] != p.d:
        raise DimensionError("negate_literal inputs must have dimension d")
    x = np.concatenate([vsa.stack(context), vsa.stack(lit)], axis=-1)
    return vsa.split(nn.forward(p.mlp_n, x))


def _check_query_ids(p: ModelParams, q: QueryGraph) -> None:
    for c in q.disjuncts:
        for n in c.nodes:
            if isinstance(n, Anchor) and not 0 <= n.entity < p.num_entities:
                raise BoundsError(f"entity id {n.entity} out of range")
        for e in c.edges:
            if not 0 <= e.rel < p.num_relation_ids:
                raise BoundsError(f"relation id {e.rel} out of range")


def encode_conjunct(p: ModelParams, c: Conjunct) -> tuple[vsa.ComplexVec, "EncodeTrace"]:
    trace = encode_trace(p, QueryGraph((c,)), k=5)
    return trace.disjuncts[0], trace


def score_query(p: ModelParams, q: QueryGraph) -> np.ndarray:
    """Entity scores: score_all per disjunct, elementwise max across disjuncts."""
    _check_query_ids(p, q)
    outs = []
    for c in q.disjuncts:
        vals, _ = _encode_one(p, c)
        outs.append(vsa.score_all(vals[c.free][0], p.entities))
    return np.max(outs, axis=0) if len(outs) > 1 else outs[0]


def score_queries(p: ModelParams, queries: list[QueryGraph], chunk: int = 256) -> np.ndarray:
    """(B, |V|) scores for many queries, batched by shape."""
    out = np.empty((len(queries), p.num_entities))
    for start in range(0, len(queries), chunk):
        part = queries[start : start + chunk]
        for q in part:
            _check_query_ids(p, q)
        t = Tape(p)
        run = run_queries(t, part)
        out[start : start + len(part)] = t.value(run.scores)
    return out


def count_mlp_calls(p: ModelParams, c: Conjunct) -> int:
    """Measured MLP invocations when encoding one conjunct."""
    t = Tape(p)
    run_conjunct(t, plan_for(c), [c])
    return t.mlp_calls


def top_k(scores: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Descending by score, ties by ascending entity id."""
    order = np.argsort(-scores, kind="stable")[:k]
    return [(int(i), float(scores[i])) for i in order]


@dataclass
class NodeRecord:
    node: int
    kind: str
    provenance: str
    literals: list
    top: list


@dataclass
class EncodeTrace:
    nodes: list  # NodeRecord per disjunct node, in topological order, one list per disjunct
    disjuncts: list  # final embedding per disjunct
    mlp_calls: int = 0

    def to_json(self, kg=None) -> dict:
        def ent(e):
            return kg.entity_label(e) if kg is not None else e

        def rel(r):
            return kg.relation_label(r) if kg is not None else r

        return {
            "disjuncts": [
                {
                    "nodes": [
                        {
                            "node": r.node,
                            "kind": r.kind,
                            "provenance": r.provenance,
                            "literals": [dict(l, rel=rel(l["rel"])) for l in r.literals],
                            "top": [[ent(e), s] for e, s in r.top],
                        }
                        for r in recs
                    ],
                    "embedding": {"re": emb.real.tolist(), "im": emb.imag.tolist()},
                }
                for recs, emb in zip(self.nodes, self.disjuncts)
            ],
            "mlp_calls": self.mlp_calls,
        }


def encode_trace(p: ModelParams, q: QueryGraph, k: int = 5) -> EncodeTrace:
    _check_query_ids(p, q)
    t = Tape(p)
    all_records, finals = [], []
    for c in q.disjuncts:
        plan = plan_for(c)
        run = run_conjunct(t, plan, [c])
        info = {v.node: v for v in plan.annotated.variables}
        records = []
        for i in plan.order:
            node = c.nodes[i]
            if isinstance(node, Anchor):
                kind, lits = "anchor", []
            elif isinstance(node, Free):
                kind = "free"
                lits = [_lit(c, j, "forward") for j in c.incoming(i)]
            else:
                v = info[i]
                if isinstance(v, IndependentVar):
                    kind = "independent"
                    lits = [_lit(c, j, "constant") for j in v.outgoing]
                else:
                    kind = "dependent"
                    lits = [_lit(c, j, "forward") for j in v.forward]
                    lits += [
                        {"src": c.edges[j].dst, "rel": inv, "neg": False, "slot": "backward"}
                        for j, inv in _inverses(p, c, v)
                    ]
            emb = t.value(run.node_slots[i])[0]
            records.append(NodeRecord(i, kind, run.provenance[i], lits, top_k(vsa.score_all(emb, p.entities), k)))
        all_records.append(records)
        finals.append(t.value(run.out)[0])
    return EncodeTrace(all_records, finals, t.mlp_calls)


def _lit(c: Conjunct, j: int, slot: str) -> dict:
    e = c.edges[j]
    return {"src": e.src, "rel": e.rel, "neg": e.neg, "slot": slot}


def _inverses(p: ModelParams, c: Conjunct, v: DependentVar):
    n = p.num_relation_ids
    return [(j, (c.edges[j].rel + n // 2) % n) for j, _ in v.backward]


def variable_embedding(p: ModelParams, q: QueryGraph, var: int) -> vsa.ComplexVec:
    _check_query_ids(p, q)
    for c in q.disjuncts:
        try:
            node = c.var_node(var)
        except KeyError:
            continue
        vals, _ = _encode_one(p, c)
        return vals[node][0]
    raise UnknownVariableError(f"query has no variable {var}")


def ground_variable(p: ModelParams, q: QueryGraph, var: int, k: int) -> list[tuple[int, float]]:
    """Top-k entities for an existential variable by Hermitian similarity."""
    emb = variable_embedding(p, q, var)
    return top_k(vsa.score_all(emb, p.entities), k)
