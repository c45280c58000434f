import pytest

from lvsa.errors import ConfigError
from lvsa.synth import synth_splits, synth_triples


class TestSynth:
    def test_degree_per_head(self):
        rows = synth_triples(30, 3, 4, seed=1)
        heads = {}
        for h, _, _ in rows:
            heads[h] = heads.get(h, 0) + 1
        assert len(heads) == 30 and set(heads.values()) == {4}
        assert len(set(rows)) == len(rows)

    def test_seeded(self):
        assert synth_triples(20, 2, 3, seed=5) == synth_triples(20, 2, 3, seed=5)
        assert synth_triples(20, 2, 3, seed=5) != synth_triples(20, 2, 3, seed=6)

    def test_cluster_structure(self):
        # one relation, two clusters of 20: tails sharing a head share a cluster
        rows = synth_triples(40, 1, 5, seed=0, clusters=2)
        by_head = {}
        for h, _, t in rows:
            by_head.setdefault(h, set()).add(t)
        groups = []
        for tails in by_head.values():
            touching = [g for g in groups if g & tails]
            merged = set(tails).union(*touching)
            groups = [g for g in groups if not g & tails] + [merged]
        assert len(groups) <= 2
        assert all(len(g) <= 20 for g in groups)

    @pytest.mark.parametrize("args", [(1, 1, 1), (10, 0, 1), (10, 1, 0), (10, 1, 20), (10, 1, 1, 11)])
    def test_bad_arguments(self, args):
        with pytest.raises(ConfigError):
            synth_triples(*args, seed=0) if len(args) == 3 else synth_triples(*args[:3], seed=0, clusters=args[3])

    def test_splits_share_vocab(self):
        s = synth_splits(30, 2, 4, seed=3)
        assert s.train.entities == tuple(f"e{i}" for i in range(30))
        assert s.train.relations == ("r0", "r1")
        assert s.train.triples <= s.train_valid.triples <= s.full.triples
        assert len(s.full.triples) == 2 * 30 * 4
        held = len(s.full.triples) - len(s.train.triples)
        assert held == 2 * 24
