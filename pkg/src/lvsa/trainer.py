"""Losses and the three-stage curriculum.

Stage 1 fits the entity and relation tables on 1p queries, stage 2 fits
MLP_I/MLP_D on 2p and 3p with the tables frozen, stage 3 fits MLP_N on 2in
with everything else frozen.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .config import RunConfig
from .encoder import MLP_NAMES, ModelParams, Tape, run_queries
from .errors import DataError, MetricError, StageOrderError, StructureError
from .kg import Kg
from .query import QueryGraph, instantiate_template

log = logging.getLogger(__name__)

STAGE_TAGS = {1: ("1p",), 2: ("2p", "3p"), 3: ("2in",)}
STAGE_BLOCKS = {1: ("entities", "relations"), 2: ("mlp_i", "mlp_d"), 3: ("mlp_n",)}
CANDIDATE_MODES = ("all", "in_batch_union")


@dataclass
class Batch:
    items: list  # (QueryGraph, answer entity id)
    stage_tag: int | None = None

    def __post_init__(self):
        if not self.items:
            raise DataError("empty batch")
        for q, t in self.items:
            if t not in q.answers():
                raise DataError(f"answer {t} is not in the query's answer sets")


@dataclass
class LossWeights:
    alpha: float = 1.0
    beta: float = 1.0


def _logsumexp(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise shifted logsumexp and softmax."""
    m = x.max(axis=1, keepdims=True)
    e = np.exp(x - m)
    s = e.sum(axis=1, keepdims=True)
    return (m + np.log(s))[:, 0], e / s


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


def _free_negations(run, free_of) -> list:
    """(rows, NegatedLiteral) for every negated literal into a free node."""
    out = []
    for rows, runs in run.groups:
        for k, crun in enumerate(runs):
            for neg in crun.negated:
                if neg.node == free_of[(int(rows[0]), k)]:
                    out.append((rows, neg))
    return out


def batch_loss(
    p: ModelParams,
    batch: Batch,
    trainable=(),
    ce: str | None = "all",
    alpha: float | None = None,
    beta: float | None = None,
) -> tuple[float, dict, dict]:
    """Forward and backward for any combination of the three losses.

    Returns ``(total, {term: value}, grads)`` where ``grads`` maps
    ``ModelParams.named_params()`` keys of the trainable blocks to arrays.
    """
    if ce is not None and ce not in CANDIDATE_MODES:
        raise ValueError(f"unknown candidate mode {ce!r}")
    queries = [q for q, _ in batch.items]
    answers = np.array([t for _, t in batch.items], dtype=np.int64)
    n = len(queries)
    t = Tape(p, trainable)
    run = run_queries(t, queries)
    seeds: dict[int, np.ndarray] = {}
    parts: dict[str, float] = {}

    if ce is not None:
        scores = t.value(run.scores)
        if scores.shape[1] == 0:
            raise MetricError("empty candidate set")
        rows = np.arange(n)
        lse, soft = _logsumexp(scores)
        losses = lse - scores[rows, answers]
        g = soft.copy()
        g[rows, answers] -= 1.0
        if ce == "in_batch_union":
            cand = np.unique(answers)
            pos = np.searchsorted(cand, answers)
            sub = scores[:, cand]
            lse_b, soft_b = _logsumexp(sub)
            losses = losses + lse_b - sub[rows, pos]
            soft_b[rows, pos] -= 1.0
            g[:, cand] += soft_b
        parts["ce"] = float(losses.mean())
        seeds[run.scores] = g / n

    if alpha is not None or beta is not None:
        free_of = {}
        for r, q in enumerate(queries):
            for k, c in enumerate(q.disjuncts):
                free_of[(r, k)] = c.free
        negs = _free_negations(run, free_of)
        covered = np.zeros(n, dtype=bool)
        for rows, _ in negs:
            covered[rows] = True
        if not covered.all():
            raise StructureError("every item needs a negated literal into the free node")
        if alpha is not None:
            total = 0.0
            for rows, neg in negs:
                target = t.lookup("entities", answers[rows])
                sim_slot = t.herm(neg.out, target)
                sim = t.value(sim_slot)
                total += float(-alpha * _log_sigmoid(sim).sum())
                # d/dx -ln sigma(x) = -(1 - sigma(x))
                seeds[sim_slot] = -alpha * (1.0 - 1.0 / (1.0 + np.exp(-sim))) / n
            parts["ns"] = total / n
        if beta is not None:
            total = 0.0
            for rows, neg in negs:
                twice = t.mlp("mlp_n", [neg.ctx, neg.out])
                d_double = t.sqdist(twice, neg.lit)
                d_contra = t.sqdist(neg.out, t.neg(neg.lit))
                total += float(t.value(d_double).sum() + t.value(d_contra).sum())
                w = np.full(len(rows), beta / n)
                seeds[d_double] = w
                seeds[d_contra] = w
            parts["nl"] = beta * total / n

    grads = t.backward(seeds)
    named = p.named_params()
    out = {}
    for key, arr in named.items():
        block = key.split(".")[0]
        if block in t.trainable:
            out[key] = grads.get(key, np.zeros_like(arr))
    return float(sum(parts.values())), parts, out


def loss_ce(p: ModelParams, b: Batch, candidates: str = "all", trainable=("entities", "relations") + MLP_NAMES):
    """Cross-entropy over all entities, plus the in-batch answer union if requested."""
    total, _, grads = batch_loss(p, b, trainable, ce=candidates)
    return total, grads


def loss_ns(p: ModelParams, b: Batch, alpha: float, trainable=("entities", "relations") + MLP_NAMES):
    total, _, grads = batch_loss(p, b, trainable, ce=None, alpha=alpha)
    return total, grads


def loss_nl(p: ModelParams, b: Batch, beta: float, trainable=("entities", "relations") + MLP_NAMES):
    total, _, grads = batch_loss(p, b, trainable, ce=None, beta=beta)
    return total, grads


def stage_loss(p: ModelParams, b: Batch, stage: int, cfg: RunConfig):
    """The loss of one curriculum stage with that stage's trainable blocks."""
    trainable = STAGE_BLOCKS[stage]
    if stage == 1:
        return batch_loss(p, b, trainable, ce="all")
    if stage == 2:
        return batch_loss(p, b, trainable, ce="in_batch_union")
    return batch_loss(p, b, trainable, ce="all", alpha=cfg.alpha, beta=cfg.beta)


# -- curriculum --------------------------------------------------------------------
@dataclass
class StageResult:
    params: ModelParams
    log: list = field(default_factory=list)
    adam: nn.AdamState | None = None


def training_items(queries, stage: int) -> list[tuple[QueryGraph, int]]:
    tags = STAGE_TAGS[stage]
    items = []
    for q in queries:
        if q.tag is not None and q.tag not in tags:
            continue
        for a in sorted(q.answers()):
            items.append((q, a))
    if not items:
        raise DataError(f"no training items with tags {tags} for stage {stage}")
    return items


def one_hop_queries(kg: Kg) -> list[QueryGraph]:
    """One 1p query per (head, relation) pair of ``kg``, inverse relations included.

    All tails are attached as easy answers.
    """
    out = []
    for (h, r), tails in kg.out_index.items():
        q = instantiate_template("1p", [h], [r])
        out.append(q.with_answers(tails, ()))
    return out


def _snapshot(p: ModelParams, blocks) -> dict:
    return {k: v.copy() for k, v in p.named_params().items() if k.split(".")[0] in blocks}


def train_stage(
    p: ModelParams,
    queries,
    stage: int,
    cfg: RunConfig,
    valid=None,
    evaluate_fn=None,
) -> StageResult:
    """Run one curriculum stage on a copy of ``p``.

    ``valid`` and ``evaluate_fn(params, valid) -> mrr`` enable early
    stopping on validation MRR (checked every ``cfg.eval_every`` epochs,
    stopping after ``cfg.patience`` checks without improvement).
    """
    if stage not in STAGE_TAGS:
        raise StageOrderError(f"unknown stage {stage}")
    done = int(p.meta.get("stage", 0))
    if done < stage - 1:
        raise StageOrderError(f"stage {stage} needs a stage-{stage - 1} checkpoint (have stage {done})")
    p = p.copy()
    trainable = STAGE_BLOCKS[stage]
    frozen = _snapshot(p, set(("entities", "relations") + MLP_NAMES) - set(trainable))
    items = training_items(queries, stage)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, stage]))
    adam = nn.AdamState(lr=cfg.lr)
    params = p.named_params()
    history = []
    best = (-np.inf, None)
    stale = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(items))
        sums: dict[str, float] = {}
        n_batches = 0
        for start in range(0, len(items), cfg.batch_size):
            batch = Batch([items[i] for i in order[start : start + cfg.batch_size]], stage)
            total, parts, grads = stage_loss(p, batch, stage, cfg)
            if cfg.l2:
                for key in grads:
                    grads[key] = grads[key] + 2 * cfg.l2 * params[key]
            nn.adam_step(params, grads, adam)
            for k, v in parts.items():
                sums[k] = sums.get(k, 0.0) + v
            sums["loss"] = sums.get("loss", 0.0) + total
            n_batches += 1
        entry = {"stage": stage, "epoch": epoch, **{k: v / n_batches for k, v in sums.items()}}
        if valid is not None and evaluate_fn is not None and epoch % cfg.eval_every == 0:
            mrr = float(evaluate_fn(p, valid))
            entry["valid_mrr"] = mrr
            if mrr > best[0]:
                best, stale = (mrr, p.copy()), 0
            else:
                stale += 1
        history.append(entry)
        log.info("stage %d epoch %d %s", stage, epoch, {k: round(v, 6) for k, v in entry.items() if k not in ("stage", "epoch")})
        if valid is not None and stale >= cfg.patience:
            break
    if best[1] is not None:
        p = best[1]
    for key, before in frozen.items():
        if not np.array_equal(p.named_params()[key], before):
            raise AssertionError(f"frozen block {key} changed during stage {stage}")
    p.meta.update(stage=stage, epoch=len(history), seed=cfg.seed)
    return StageResult(p, history, adam)
