import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lvsa.errors import ArityError, CycleError, ParseError, StructureError, VocabularyError
from lvsa.kg import Kg
from lvsa.query import (
    NEGATION_TAGS,
    POSITIVE_TAGS,
    TEMPLATE_ARITY,
    TEMPLATE_TAGS,
    Anchor,
    Conjunct,
    DependentVar,
    Edge,
    Free,
    IndependentVar,
    QueryGraph,
    Var,
    instantiate_template,
    parse_query,
    serialize_query,
    skolem_classify,
    toposort,
    validate_conjunct,
)

from graphs import APPENDIX_R, appendix_graph


@pytest.fixture
def vocab_kg():
    rows = [(f"e{i}", f"r{j}", f"e{(i + j + 1) % 6}") for i in range(6) for j in range(5)]
    return Kg.from_labels(rows)


def _template(tag, R=5):
    n_a, n_r = TEMPLATE_ARITY[tag]
    return instantiate_template(tag, list(range(n_a)), [i % R for i in range(n_r)])


class TestTemplates:
    def test_fourteen_tags(self):
        assert len(TEMPLATE_TAGS) == 14
        assert set(POSITIVE_TAGS) | set(NEGATION_TAGS) == set(TEMPLATE_ARITY)

    def test_2u_two_one_hop_disjuncts(self):
        q = instantiate_template("2u", [0, 1], [0, 1])
        assert len(q.disjuncts) == 2
        for c in q.disjuncts:
            assert len(c.nodes) == 2 and len(c.edges) == 1

    def test_2in_second_edge_negated(self):
        q = instantiate_template("2in", [0, 1], [0, 1])
        (c,) = q.disjuncts
        assert [e.dst for e in c.edges] == [c.free, c.free]
        assert [e.neg for e in c.edges] == [False, True]

    def test_arity_error(self):
        with pytest.raises(ArityError):
            instantiate_template("2p", [0], [0])

    def test_unknown_tag(self):
        with pytest.raises(ArityError):
            instantiate_template("4p", [0], [0, 0, 0, 0])

    @pytest.mark.parametrize("tag", TEMPLATE_TAGS)
    def test_classify_and_order(self, tag):
        q = _template(tag)
        for c in q.disjuncts:
            validate_conjunct(c)
            ann = skolem_classify(c, 5)
            assert sorted(toposort(ann)) == list(range(len(c.nodes)))
            star = ann.starred()
            pos = {n: i for i, n in enumerate(toposort(star))}
            for e in star.edges:
                assert pos[e.src] < pos[e.dst]


class TestToposort:
    def test_appendix_example(self):
        assert toposort(appendix_graph()) == (0, 1, 2, 3)

    def test_one_hop(self):
        (c,) = instantiate_template("1p", [0], [0]).disjuncts
        assert toposort(c) == (0, 1)

    def test_three_hop_chain(self):
        (c,) = instantiate_template("3p", [0], [0, 1, 2]).disjuncts
        assert toposort(c) == (0, 1, 2, 3)

    def test_cycle(self):
        c = Conjunct((Var(0), Var(1), Free()), (Edge(0, 0, 1), Edge(1, 0, 0), Edge(1, 0, 2)))
        with pytest.raises(CycleError):
            toposort(c)


class TestSkolemClassify:
    def test_appendix_example(self):
        ann = skolem_classify(appendix_graph(), APPENDIX_R)
        v1, v2 = ann.variables
        assert isinstance(v1, IndependentVar) and v1.outgoing == (0,)
        assert isinstance(v2, DependentVar)
        assert v2.forward == (0, 1)
        # r3, r4 out of V2 become r3^-1, r4^-1 into V2
        assert v2.backward == ((2, 2 + APPENDIX_R), (3, 3 + APPENDIX_R))
        assert ann.mlp_calls() == 4

    def test_chain_middle_is_dependent(self):
        (c,) = instantiate_template("2p", [0], [1, 2]).disjuncts
        (v,) = skolem_classify(c, 5).variables
        assert isinstance(v, DependentVar)
        assert v.forward == (0,)
        assert v.backward == ((1, 7),)

    def test_lone_outgoing_variable_is_independent(self):
        c = Conjunct((Var(0), Free()), (Edge(0, 3, 1),))
        (v,) = skolem_classify(c, 5).variables
        assert isinstance(v, IndependentVar)

    def test_intersection_has_no_variables(self):
        (c,) = instantiate_template("2i", [0, 1], [0, 1]).disjuncts
        ann = skolem_classify(c, 5)
        assert ann.variables == ()
        assert ann.starred() == c

    def test_negated_outgoing_not_backward_context(self):
        (c,) = instantiate_template("pni", [0, 1], [0, 1, 2]).disjuncts
        (v,) = skolem_classify(c, 5).variables
        assert v.backward == ()

    def test_starred_adds_aux_per_backward_literal(self):
        ann = skolem_classify(appendix_graph(), APPENDIX_R)
        star = ann.starred()
        assert len(star.nodes) == 6
        assert star.edges[-2:] == (Edge(4, 7, 2), Edge(5, 8, 2))

    def test_inverse_wraps(self):
        c = Conjunct((Anchor(0), Var(0), Free()), (Edge(0, 0, 1), Edge(1, 7, 2)))
        (v,) = skolem_classify(c, 5).variables
        assert v.backward == ((1, 2),)


class TestValidation:
    def test_two_free_nodes(self):
        c = Conjunct((Anchor(0), Free(), Free()), (Edge(0, 0, 1), Edge(0, 0, 2)))
        with pytest.raises(StructureError):
            validate_conjunct(c)

    def test_edge_into_anchor(self):
        c = Conjunct((Anchor(0), Anchor(1), Free()), (Edge(0, 0, 1), Edge(1, 0, 2)))
        with pytest.raises(StructureError):
            validate_conjunct(c)

    def test_sparse_var_ids(self):
        c = Conjunct((Anchor(0), Var(1), Free()), (Edge(0, 0, 1), Edge(1, 0, 2)))
        with pytest.raises(StructureError):
            validate_conjunct(c)

    def test_free_without_incoming(self):
        c = Conjunct((Anchor(0), Var(0), Free()), (Edge(0, 0, 1),))
        with pytest.raises(StructureError):
            validate_conjunct(c)


class TestParse:
    def test_one_hop_record(self, vocab_kg):
        text = json.dumps(
            {
                "disjuncts": [
                    {
                        "nodes": [{"kind": "anchor", "entity": "e0"}, {"kind": "free"}],
                        "edges": [{"src": 0, "rel": "r1", "dst": 1}],
                    }
                ]
            }
        )
        q = parse_query(text, vocab_kg)
        (c,) = q.disjuncts
        assert len(c.nodes) == 2 and len(c.edges) == 1
        assert q.easy is None and q.hard is None

    def test_appendix_record(self, vocab_kg):
        q = QueryGraph((appendix_graph(),))
        back = parse_query(serialize_query(q, vocab_kg), vocab_kg)
        (c,) = back.disjuncts
        assert (len(c.nodes), len(c.edges)) == (4, 5)
        assert back == q

    def test_field_path_in_error(self, vocab_kg):
        text = '{"disjuncts":[{"nodes":[{"kind":"anchor"}],"edges":[]}]}'
        with pytest.raises(ParseError, match=r"\$\.disjuncts\[0\]\.nodes\[0\]"):
            parse_query(text, vocab_kg)

    def test_bool_is_not_an_id(self, vocab_kg):
        text = '{"disjuncts":[{"nodes":[{"kind":"var","id":true}],"edges":[]}]}'
        with pytest.raises(ParseError):
            parse_query(text, vocab_kg)

    def test_edge_into_anchor_record(self, vocab_kg):
        text = json.dumps(
            {
                "disjuncts": [
                    {
                        "nodes": [{"kind": "anchor", "entity": "e0"}, {"kind": "anchor", "entity": "e1"}, {"kind": "free"}],
                        "edges": [{"src": 0, "rel": "r0", "dst": 1}, {"src": 1, "rel": "r0", "dst": 2}],
                    }
                ]
            }
        )
        with pytest.raises(StructureError):
            parse_query(text, vocab_kg)

    def test_unknown_label(self, vocab_kg):
        text = '{"disjuncts":[{"nodes":[{"kind":"anchor","entity":"nope"},{"kind":"free"}],"edges":[{"src":0,"rel":"r0","dst":1}]}]}'
        with pytest.raises(VocabularyError):
            parse_query(text, vocab_kg)

    def test_bad_json(self, vocab_kg):
        with pytest.raises(ParseError):
            parse_query("{not json", vocab_kg)

    @pytest.mark.parametrize("tag", TEMPLATE_TAGS)
    def test_round_trip_every_template(self, vocab_kg, tag):
        q = _template(tag).with_answers({1, 2}, {3})
        assert parse_query(serialize_query(q, vocab_kg), vocab_kg) == q

    @settings(max_examples=50, deadline=None)
    @given(
        tag=st.sampled_from(TEMPLATE_TAGS),
        anchors=st.lists(st.integers(0, 5), min_size=3, max_size=3),
        rels=st.lists(st.integers(0, 9), min_size=3, max_size=3),
    )
    def test_round_trip_property(self, tag, anchors, rels):
        kg = Kg.from_labels([(f"e{i}", f"r{j}", f"e{(i + 1) % 6}") for i in range(6) for j in range(5)])
        n_a, n_r = TEMPLATE_ARITY[tag]
        q = instantiate_template(tag, anchors[:n_a], rels[:n_r])
        text = serialize_query(q, kg)
        assert "\n" not in text
        assert parse_query(text, kg) == q
