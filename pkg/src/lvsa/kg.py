"""Knowledge-graph store with inverse-relation augmentation.

Relation ids ``[0, R)`` are the forward relations read from disk and
``[R, 2R)`` their inverses, so ``inverse(r) == (r + R) % 2R``.  Inverse
relations get the label ``<label>^-1``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import BoundsError, ParseError, VocabularyError

INVERSE_SUFFIX = "^-1"


def _build_vocab(labels: Iterable[str], start: Sequence[str] = ()) -> list[str]:
    vocab = list(start)
    seen = set(vocab)
    for label in labels:
        if label not in seen:
            seen.add(label)
            vocab.append(label)
    return vocab


def read_tsv_triples(path: str | os.PathLike) -> list[tuple[str, str, str]]:
    """Read ``head<TAB>relation<TAB>tail`` lines; blank lines are skipped."""
    out = []
    with open(path, encoding="utf-8", newline="\n") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 tab-separated columns, got {len(cols)}")
            out.append((cols[0], cols[1], cols[2]))
    return out


@dataclass(frozen=True, eq=False)
class Kg:
    entities: tuple[str, ...]
    relations: tuple[str, ...]  # forward relations only; ids >= R are inverses
    triples: frozenset  # of (head, rel, tail) ids, inverse-closed
    out_index: dict = field(repr=False)  # (head, rel) -> sorted tuple of tails
    _entity_ids: dict = field(repr=False)
    _relation_ids: dict = field(repr=False)

    @classmethod
    def from_labels(
        cls,
        label_triples: Iterable[tuple[str, str, str]],
        entities: Sequence[str] | None = None,
        relations: Sequence[str] | None = None,
    ) -> "Kg":
        label_triples = list(label_triples)
        if entities is None:
            entities = _build_vocab(l for h, _, t in label_triples for l in (h, t))
        if relations is None:
            relations = _build_vocab(r for _, r, _ in label_triples)
        entity_ids = _index(entities, "entity")
        fwd_ids = _index(relations, "relation")
        n_rel = len(relations)
        relation_ids = dict(fwd_ids)
        for label, rid in fwd_ids.items():
            inv = label + INVERSE_SUFFIX
            if inv in relation_ids:
                raise VocabularyError(f"relation label {inv!r} collides with a generated inverse label")
            relation_ids[inv] = rid + n_rel
        triples = set()
        for h, r, t in label_triples:
            try:
                hi, ri, ti = entity_ids[h], fwd_ids[r], entity_ids[t]
            except KeyError as exc:
                raise VocabularyError(f"unknown label {exc.args[0]!r}") from None
            triples.add((hi, ri, ti))
            triples.add((ti, ri + n_rel, hi))
        return cls._from_ids(tuple(entities), tuple(relations), triples, entity_ids, relation_ids)

    @classmethod
    def _from_ids(cls, entities, relations, triples, entity_ids, relation_ids) -> "Kg":
        index: dict[tuple[int, int], list[int]] = {}
        for h, r, t in triples:
            index.setdefault((h, r), []).append(t)
        out_index = {key: tuple(sorted(tails)) for key, tails in sorted(index.items())}
        return cls(entities, relations, frozenset(triples), out_index, entity_ids, relation_ids)

    # -- vocabulary ---------------------------------------------------------
    @property
    def num_entities(self) -> int:
        return len(self.entities)

    @property
    def num_relations(self) -> int:
        """Number of forward relations R."""
        return len(self.relations)

    @property
    def num_relation_ids(self) -> int:
        """Size of the augmented relation table, 2R."""
        return 2 * len(self.relations)

    def inverse(self, rel: int) -> int:
        self._check_rel(rel)
        return (rel + self.num_relations) % self.num_relation_ids

    def entity_id(self, label: str) -> int:
        try:
            return self._entity_ids[label]
        except KeyError:
            raise VocabularyError(f"unknown entity {label!r}") from None

    def relation_id(self, label: str) -> int:
        try:
            return self._relation_ids[label]
        except KeyError:
            raise VocabularyError(f"unknown relation {label!r}") from None

    def relation_label(self, rel: int) -> str:
        self._check_rel(rel)
        if rel < self.num_relations:
            return self.relations[rel]
        return self.relations[rel - self.num_relations] + INVERSE_SUFFIX

    def entity_label(self, ent: int) -> str:
        self._check_entity(ent)
        return self.entities[ent]

    def _check_entity(self, ent: int) -> None:
        if not 0 <= ent < self.num_entities:
            raise BoundsError(f"entity id {ent} out of range [0, {self.num_entities})")

    def _check_rel(self, rel: int) -> None:
        if not 0 <= rel < self.num_relation_ids:
            raise BoundsError(f"relation id {rel} out of range [0, {self.num_relation_ids})")

    # -- lookups ------------------------------------------------------------
    def neighbors(self, head: int, rel: int) -> list[int]:
        self._check_entity(head)
        self._check_rel(rel)
        return list(self.out_index.get((head, rel), ()))

    def forward_triples(self) -> list[tuple[int, int, int]]:
        return sorted(t for t in self.triples if t[1] < self.num_relations)

    def to_tsv(self, path: str | os.PathLike) -> None:
        """Write forward triples only; inverses are rebuilt on load."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for h, r, t in self.forward_triples():
                fh.write(f"{self.entities[h]}\t{self.relations[r]}\t{self.entities[t]}\n")

    def subgraph(self, forward: Iterable[tuple[int, int, int]]) -> "Kg":
        """Graph over the same vocabularies holding the given forward triples."""
        n_rel = self.num_relations
        triples = set()
        for h, r, t in forward:
            triples.add((h, r, t))
            triples.add((t, r + n_rel, h))
        return Kg._from_ids(self.entities, self.relations, triples, self._entity_ids, self._relation_ids)


def _index(labels: Sequence[str], what: str) -> dict[str, int]:
    ids = {}
    for i, label in enumerate(labels):
        if label in ids:
            raise VocabularyError(f"duplicate {what} label {label!r}")
        ids[label] = i
    return ids


def load_triples(path, vocab: tuple[Sequence[str], Sequence[str]] | None = None) -> Kg:
    """Load a TSV triples file; ``vocab`` is ``(entities, relations)`` when fixed."""
    rows = read_tsv_triples(path)
    if vocab is None:
        return Kg.from_labels(rows)
    return Kg.from_labels(rows, entities=vocab[0], relations=vocab[1])


@dataclass(frozen=True)
class SplitGraphs:
    train: Kg
    train_valid: Kg
    full: Kg

    @property
    def vocab(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return self.full.entities, self.full.relations


def split_graphs(train_rows, valid_rows=(), test_rows=(), entities=None, relations=None) -> SplitGraphs:
    """Nested graphs over one shared vocabulary built train-first (unless given)."""
    train_rows, valid_rows, test_rows = list(train_rows), list(valid_rows), list(test_rows)
    all_rows = train_rows + valid_rows + test_rows
    if entities is None:
        entities = _build_vocab(l for h, _, t in all_rows for l in (h, t))
    if relations is None:
        relations = _build_vocab(r for _, r, _ in all_rows)
    train = Kg.from_labels(train_rows, entities, relations)
    train_valid = Kg.from_labels(train_rows + valid_rows, entities, relations)
    full = Kg.from_labels(all_rows, entities, relations)
    return SplitGraphs(train, train_valid, full)


def compose_splits(train_path, valid_path=None, test_path=None) -> SplitGraphs:
    train = read_tsv_triples(train_path)
    valid = read_tsv_triples(valid_path) if valid_path else []
    test = read_tsv_triples(test_path) if test_path else []
    return split_graphs(train, valid, test)


# -- on-disk KG directory (written by ``ingest`` / ``gen-kg``) ----------------
SPLIT_FILES = ("train.tsv", "valid.tsv", "test.tsv")


def write_vocab(path, labels: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, label in enumerate(labels):
            fh.write(f"{label}\t{i}\n")


def read_vocab(path) -> list[str]:
    labels = []
    with open(path, encoding="utf-8", newline="\n") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 2 or not cols[1].isdigit() or int(cols[1]) != len(labels):
                raise ParseError(f"{path}:{lineno}: expected 'label<TAB>{len(labels)}'")
            labels.append(cols[0])
    return labels


def save_kg_dir(splits: SplitGraphs, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_vocab(os.path.join(out_dir, "entities.tsv"), splits.full.entities)
    write_vocab(os.path.join(out_dir, "relations.tsv"), splits.full.relations)
    train = set(splits.train.forward_triples())
    tv = set(splits.train_valid.forward_triples())
    full = set(splits.full.forward_triples())
    parts = (sorted(train), sorted(tv - train), sorted(full - tv))
    for name, part in zip(SPLIT_FILES, parts):
        splits.full.subgraph(part).to_tsv(os.path.join(out_dir, name))


def load_kg_dir(kg_dir) -> SplitGraphs:
    entities = read_vocab(os.path.join(kg_dir, "entities.tsv"))
    relations = read_vocab(os.path.join(kg_dir, "relations.tsv"))
    rows = []
    for name in SPLIT_FILES:
        path = os.path.join(kg_dir, name)
        rows.append(read_tsv_triples(path) if os.path.exists(path) else [])
    train = Kg.from_labels(rows[0], entities, relations)
    train_valid = Kg.from_labels(rows[0] + rows[1], entities, relations)
    full = Kg.from_labels(rows[0] + rows[1] + rows[2], entities, relations)
    return SplitGraphs(train, train_valid, full)
