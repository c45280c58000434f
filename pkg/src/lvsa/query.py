"""EFO-1 queries in disjunctive normal form.

A query is a list of conjunctive graphs.  Nodes are anchors (constant
entities), existential variables, or the single free variable; every edge
``src -[rel]-> dst`` is a literal ``rel(src, dst)``, optionally negated.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import ArityError, CycleError, ParseError, StructureError

POSITIVE_TAGS = ("1p", "2p", "3p", "2i", "3i", "pi", "ip", "2u", "up")
NEGATION_TAGS = ("2in", "3in", "inp", "pin", "pni")
TEMPLATE_TAGS = POSITIVE_TAGS + NEGATION_TAGS


@dataclass(frozen=True)
class Anchor:
    entity: int


@dataclass(frozen=True)
class Var:
    id: int


@dataclass(frozen=True)
class Free:
    pass


Node = Union[Anchor, Var, Free]


@dataclass(frozen=True)
class Edge:
    src: int
    rel: int
    dst: int
    neg: bool = False


@dataclass(frozen=True)
class Conjunct:
    nodes: tuple
    edges: tuple

    @property
    def free(self) -> int:
        return next(i for i, n in enumerate(self.nodes) if isinstance(n, Free))

    def incoming(self, node: int) -> list[int]:
        return [j for j, e in enumerate(self.edges) if e.dst == node]

    def outgoing(self, node: int) -> list[int]:
        return [j for j, e in enumerate(self.edges) if e.src == node]

    def var_node(self, var_id: int) -> int:
        for i, n in enumerate(self.nodes):
            if isinstance(n, Var) and n.id == var_id:
                return i
        raise KeyError(var_id)

    def signature(self) -> tuple:
        """Shape of the graph with entity and relation ids erased."""
        kinds = tuple(type(n).__name__ for n in self.nodes)
        return kinds, tuple((e.src, e.dst, e.neg) for e in self.edges)


@dataclass(frozen=True)
class QueryGraph:
    disjuncts: tuple
    tag: str | None = None
    easy: frozenset | None = None
    hard: frozenset | None = None

    def answers(self) -> frozenset:
        return (self.easy or frozenset()) | (self.hard or frozenset())

    def with_answers(self, easy, hard) -> "QueryGraph":
        return QueryGraph(self.disjuncts, self.tag, frozenset(easy), frozenset(hard))

    def signature(self) -> tuple:
        return tuple(c.signature() for c in self.disjuncts)


# -- validation -----------------------------------------------------------------
def validate_conjunct(g: Conjunct) -> None:
    n = len(g.nodes)
    frees = [i for i, node in enumerate(g.nodes) if isinstance(node, Free)]
    if len(frees) != 1:
        raise StructureError(f"expected exactly one free node, found {len(frees)}")
    var_ids = sorted(node.id for node in g.nodes if isinstance(node, Var))
    if var_ids != list(range(len(var_ids))):
        raise StructureError(f"variable ids must be dense and 0-based, got {var_ids}")
    touched = set()
    for e in g.edges:
        if not (0 <= e.src < n and 0 <= e.dst < n):
            raise StructureError(f"edge {e} references a node outside [0, {n})")
        if e.src == e.dst:
            raise StructureError(f"self-loop edge {e}")
        if isinstance(g.nodes[e.dst], Anchor):
            raise StructureError(f"edge {e} points into an anchor node")
        if isinstance(g.nodes[e.src], Free):
            raise StructureError(f"edge {e} leaves the free node")
        touched.update((e.src, e.dst))
    for i, node in enumerate(g.nodes):
        if isinstance(node, Var) and i not in touched:
            raise StructureError(f"existential variable {node.id} has no incident edge")
    if not any(e.dst == frees[0] for e in g.edges):
        raise StructureError("free node has no incoming edge")
    toposort(g)


def validate_query(q: QueryGraph) -> None:
    if not q.disjuncts:
        raise StructureError("query has no disjuncts")
    for c in q.disjuncts:
        validate_conjunct(c)


# -- ordering -------------------------------------------------------------------
def toposort(g: "Conjunct | AnnotatedConjunct") -> tuple[int, ...]:
    """Kahn's algorithm; ties among ready nodes go to the smallest index."""
    if isinstance(g, AnnotatedConjunct):
        g = g.graph
    n = len(g.nodes)
    indeg = [0] * n
    succ: list[list[int]] = [[] for _ in range(n)]
    for e in g.edges:
        indeg[e.dst] += 1
        succ[e.src].append(e.dst)
    ready = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(ready, j)
    if len(order) != n:
        raise CycleError("query graph contains a cycle")
    return tuple(order)


# -- Skolem classification --------------------------------------------------------
@dataclass(frozen=True)
class IndependentVar:
    """Variable with no incoming literal; its embedding is a Skolem constant."""

    node: int
    outgoing: tuple[int, ...]  # indices of its outgoing edges


@dataclass(frozen=True)
class DependentVar:
    node: int
    forward: tuple[int, ...]  # indices of incoming edges
    backward: tuple[tuple[int, int], ...]  # (outgoing edge index, inverse relation)


@dataclass(frozen=True)
class AnnotatedConjunct:
    graph: Conjunct
    variables: tuple  # IndependentVar | DependentVar, in node order
    num_relations: int

    def info(self, node: int):
        for v in self.variables:
            if v.node == node:
                return v
        raise KeyError(node)

    def starred(self) -> Conjunct:
        """Materialise the backward-edge inversion.

        Every backward literal ``r(V, w)`` of a dependent ``V`` gains a fresh
        variable ``aux`` and the literal ``r^-1(aux, V)``; the original
        literal is kept.
        """
        nodes = list(self.graph.nodes)
        edges = list(self.graph.edges)
        next_var = sum(isinstance(n, Var) for n in nodes)
        for v in self.variables:
            if isinstance(v, DependentVar):
                for _, inv_rel in v.backward:
                    nodes.append(Var(next_var))
                    next_var += 1
                    edges.append(Edge(len(nodes) - 1, inv_rel, v.node))
        return Conjunct(tuple(nodes), tuple(edges))

    def mlp_calls(self) -> int:
        """Closed-form count of MLP invocations needed to encode this graph."""
        n_aux = sum(len(v.backward) for v in self.variables if isinstance(v, DependentVar))
        n_neg = sum(e.neg for e in self.graph.edges)
        return len(self.variables) + n_aux + n_neg


def skolem_classify(g: Conjunct, num_relations: int) -> AnnotatedConjunct:
    """Label every existential variable independent or dependent.

    ``num_relations`` is the forward relation count R, needed to invert
    backward literals.  Negated outgoing literals are not used as backward
    context.
    """
    n_ids = 2 * num_relations
    out = []
    for i, node in enumerate(g.nodes):
        if not isinstance(node, Var):
            continue
        inc = g.incoming(i)
        outg = g.outgoing(i)
        if not inc:
            out.append(IndependentVar(i, tuple(outg)))
        else:
            back = tuple(
                (j, (g.edges[j].rel + num_relations) % n_ids) for j in outg if not g.edges[j].neg
            )
            out.append(DependentVar(i, tuple(inc), back))
    return AnnotatedConjunct(g, tuple(out), num_relations)


# -- templates --------------------------------------------------------------------
# tag -> (number of anchors, number of relations)
TEMPLATE_ARITY = {
    "1p": (1, 1), "2p": (1, 2), "3p": (1, 3), "2i": (2, 2), "3i": (3, 3),
    "pi": (2, 3), "ip": (2, 3), "2u": (2, 2), "up": (2, 3),
    "2in": (2, 2), "3in": (3, 3), "inp": (2, 3), "pin": (2, 3), "pni": (2, 3),
}


def _chain(anchor: int, rels: Sequence[int]) -> Conjunct:
    nodes = [Anchor(anchor)] + [Var(i) for i in range(len(rels) - 1)] + [Free()]
    edges = [Edge(i, r, i + 1) for i, r in enumerate(rels)]
    return Conjunct(tuple(nodes), tuple(edges))


def _star(anchors: Sequence[int], rels: Sequence[int], negated: int | None = None) -> Conjunct:
    k = len(anchors)
    nodes = [Anchor(a) for a in anchors] + [Free()]
    edges = [Edge(i, r, k, i == negated) for i, (a, r) in enumerate(zip(anchors, rels))]
    return Conjunct(tuple(nodes), tuple(edges))


def instantiate_template(tag: str, anchors: Sequence[int], rels: Sequence[int]) -> QueryGraph:
    if tag not in TEMPLATE_ARITY:
        raise ArityError(f"unknown template {tag!r}")
    n_a, n_r = TEMPLATE_ARITY[tag]
    if len(anchors) != n_a or len(rels) != n_r:
        raise ArityError(f"{tag} needs {n_a} anchors and {n_r} relations, got {len(anchors)} and {len(rels)}")
    a, r = list(anchors), list(rels)
    if tag in ("1p", "2p", "3p"):
        disjuncts = [_chain(a[0], r)]
    elif tag in ("2i", "3i"):
        disjuncts = [_star(a, r)]
    elif tag in ("2in", "3in"):
        disjuncts = [_star(a, r, negated=len(a) - 1)]
    elif tag == "2u":
        disjuncts = [_chain(a[0], [r[0]]), _chain(a[1], [r[1]])]
    elif tag == "up":
        disjuncts = [_chain(a[0], [r[0], r[2]]), _chain(a[1], [r[1], r[2]])]
    elif tag in ("pi", "pin", "pni"):
        # a0 -r0-> V0 -r1-> ?  and  a1 -r2-> ?
        nodes = (Anchor(a[0]), Var(0), Anchor(a[1]), Free())
        edges = (
            Edge(0, r[0], 1),
            Edge(1, r[1], 3, tag == "pni"),
            Edge(2, r[2], 3, tag == "pin"),
        )
        disjuncts = [Conjunct(nodes, edges)]
    else:  # ip, inp: a0 -r0-> V0, a1 -r1-> V0, V0 -r2-> ?
        nodes = (Anchor(a[0]), Anchor(a[1]), Var(0), Free())
        edges = (Edge(0, r[0], 2), Edge(1, r[1], 2, tag == "inp"), Edge(2, r[2], 3))
        disjuncts = [Conjunct(nodes, edges)]
    return QueryGraph(tuple(disjuncts), tag)


# -- JSON-lines (de)serialisation -----------------------------------------------------
def _node_to_json(node: Node, kg) -> dict:
    if isinstance(node, Anchor):
        return {"kind": "anchor", "entity": kg.entity_label(node.entity)}
    if isinstance(node, Var):
        return {"kind": "var", "id": node.id}
    return {"kind": "free"}


def query_to_dict(q: QueryGraph, kg) -> dict:
    record = {
        "tag": q.tag,
        "disjuncts": [
            {
                "nodes": [_node_to_json(n, kg) for n in c.nodes],
                "edges": [
                    {"src": e.src, "rel": kg.relation_label(e.rel), "dst": e.dst, "neg": e.neg}
                    for e in c.edges
                ],
            }
            for c in q.disjuncts
        ],
    }
    if q.easy is not None:
        record["easy"] = [kg.entity_label(e) for e in sorted(q.easy)]
    if q.hard is not None:
        record["hard"] = [kg.entity_label(e) for e in sorted(q.hard)]
    return record


def serialize_query(q: QueryGraph, kg) -> str:
    """One canonical JSON line (no trailing newline)."""
    return json.dumps(query_to_dict(q, kg), ensure_ascii=False, separators=(",", ":"))


def _expect(obj, key, typ, path):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"{path}: missing field {key!r}")
    val = obj[key]
    if typ is int and isinstance(val, bool) or not isinstance(val, typ):
        raise ParseError(f"{path}.{key}: expected {typ.__name__}")
    return val


def parse_query(text: str, kg) -> QueryGraph:
    """Parse and validate one JSON-lines record, resolving labels against ``kg``."""
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(record, dict):
        raise ParseError("$: expected an object")
    tag = record.get("tag")
    if tag is not None and tag not in TEMPLATE_ARITY:
        raise ParseError(f"$.tag: unknown template {tag!r}")
    disjuncts = []
    for di, d in enumerate(_expect(record, "disjuncts", list, "$")):
        path = f"$.disjuncts[{di}]"
        nodes = []
        for ni, n in enumerate(_expect(d, "nodes", list, path)):
            npath = f"{path}.nodes[{ni}]"
            kind = _expect(n, "kind", str, npath)
            if kind == "anchor":
                nodes.append(Anchor(kg.entity_id(_expect(n, "entity", str, npath))))
            elif kind == "var":
                nodes.append(Var(_expect(n, "id", int, npath)))
            elif kind == "free":
                nodes.append(Free())
            else:
                raise ParseError(f"{npath}.kind: unknown node kind {kind!r}")
        edges = []
        for ei, e in enumerate(_expect(d, "edges", list, path)):
            epath = f"{path}.edges[{ei}]"
            edges.append(
                Edge(
                    _expect(e, "src", int, epath),
                    kg.relation_id(_expect(e, "rel", str, epath)),
                    _expect(e, "dst", int, epath),
                    bool(e.get("neg", False)),
                )
            )
        disjuncts.append(Conjunct(tuple(nodes), tuple(edges)))
    easy = hard = None
    if "easy" in record:
        easy = frozenset(kg.entity_id(x) for x in _expect(record, "easy", list, "$"))
    if "hard" in record:
        hard = frozenset(kg.entity_id(x) for x in _expect(record, "hard", list, "$"))
    q = QueryGraph(tuple(disjuncts), tag, easy, hard)
    validate_query(q)
    return q


def read_queries(path, kg) -> list[QueryGraph]:
    with open(path, encoding="utf-8") as fh:
        return [parse_query(line, kg) for line in fh if line.strip()]


def write_queries(path, queries, kg) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for q in queries:
            fh.write(serialize_query(q, kg) + "\n")
