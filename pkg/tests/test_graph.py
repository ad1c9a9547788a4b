import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from ttpkit.errors import EmptyCorpus
from ttpkit.graph import (
    build_graph,
    dedup_and_rank,
    length_stats,
    path_probability,
    to_csv,
    to_dot,
)
from ttpkit.vectors import (
    AttackVector,
    Category,
    TtpSequence,
    VectorKind,
    render_abstract,
)

K = VectorKind


def seq(*kinds):
    return TtpSequence.from_vectors([AttackVector(k) for k in kinds])


def test_single_chain_graph():
    graph = build_graph([seq(K.TYPOSQUATTING, K.CMD, K.EVASION)])
    assert graph.weight(K.TYPOSQUATTING, K.CMD) == 1.0
    assert graph.weight(K.CMD, K.EVASION) == 1.0
    assert graph.edge_counts[(K.TYPOSQUATTING, K.CMD)] == 1


def test_symmetric_split():
    graph = build_graph([seq(K.CMD, K.EVASION), seq(K.CMD, K.CONCEAL)])
    assert graph.weight(K.CMD, K.EVASION) == 0.5
    assert graph.weight(K.CMD, K.CONCEAL) == 0.5


def test_empty_corpus():
    with pytest.raises(EmptyCorpus):
        build_graph([])


def random_sequences(rng: random.Random, n: int) -> list[TtpSequence]:
    deceptive_kinds = [k for k in VectorKind if k.category is Category.DECEPTIVE]
    other_kinds = [k for k in VectorKind if k.category is not Category.DECEPTIVE]
    out = []
    for _ in range(n):
        deceptive = rng.sample(deceptive_kinds, rng.randint(0, 3))
        execution = [rng.choice(other_kinds) for _ in range(rng.randint(0, 6))]
        if not deceptive and not execution:
            execution = [rng.choice(other_kinds)]
        out.append(seq(*deceptive, *execution))
    return out


def tally_oracle(corpus):
    """Independent tally: plain Counter over adjacent value pairs."""
    counts = Counter()
    for s in corpus:
        flat = [k.value for k in s.kinds()]
        for pair in zip(flat, flat[1:]):
            counts[pair] += 1
    return counts


def test_weights_equal_independent_tally():
    rng = random.Random(11)
    corpus = random_sequences(rng, 10)
    graph = build_graph(corpus)
    oracle = tally_oracle(corpus)
    assert {
        (a.value, b.value): c for (a, b), c in graph.edge_counts.items()
    } == dict(oracle)
    for (a, b), count in oracle.items():
        out_total = sum(c for (src, _), c in oracle.items() if src == a)
        got = graph.weight(VectorKind(a), VectorKind(b))
        assert got == pytest.approx(count / out_total, abs=1e-12)


@settings(max_examples=60)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=30))
def test_outgoing_weights_sum_to_one(seed, n):
    corpus = random_sequences(random.Random(seed), n)
    graph = build_graph(corpus)
    sources = {src for src, _ in graph.edge_counts}
    for node in sources:
        total = sum(w for (s, _), w in graph.edge_weights.items() if s is node)
        assert abs(total - 1.0) <= 1e-9


def test_permutation_invariance():
    rng = random.Random(3)
    corpus = random_sequences(rng, 15)
    shuffled = corpus[:]
    rng.shuffle(shuffled)
    a, b = build_graph(corpus), build_graph(shuffled)
    assert a.edge_counts == b.edge_counts
    assert a.edge_weights == b.edge_weights
    assert a.nodes == b.nodes


def test_path_probability_single_corpus():
    chain = seq(K.TYPOSQUATTING, K.CMD, K.EVASION)
    graph = build_graph([chain])
    assert path_probability(graph, chain) == 1.0


def test_path_probability_absent_edge():
    graph = build_graph([seq(K.CMD, K.EVASION)])
    assert path_probability(graph, seq(K.EVASION, K.DATA)) == 0.0


def test_path_probability_product():
    graph = build_graph([seq(K.CMD, K.EVASION), seq(K.CMD, K.CONCEAL),
                         seq(K.EVASION, K.CMD), seq(K.CONCEAL, K.CMD)])
    # weight(cmd->evasion) = 0.5 and weight(evasion->cmd) = 1.0 * ... compute:
    assert graph.weight(K.CMD, K.EVASION) == 0.5
    assert graph.weight(K.EVASION, K.CMD) == 1.0
    assert path_probability(graph, seq(K.CMD, K.EVASION, K.CMD)) == 0.5


def test_corpus_members_have_positive_probability():
    corpus = random_sequences(random.Random(5), 25)
    graph = build_graph(corpus)
    for chain in corpus:
        assert path_probability(graph, chain) > 0.0


def identified(chains):
    return [(c, (f"pkg{i}", "1.0", "pypi")) for i, c in enumerate(chains)]


def test_rank_three_identical_one_distinct():
    same = seq(K.TYPOSQUATTING, K.CMD)
    other = seq(K.CMD, K.DATA)
    ranked = dedup_and_rank(identified([same, same, other, same]))
    assert [r.count for r in ranked] == [3, 1]
    assert ranked[0].abstract_form == render_abstract(same)


def test_rank_all_distinct():
    chains = [seq(K.CMD), seq(K.DATA), seq(K.EVASION)]
    ranked = dedup_and_rank(identified(chains))
    assert all(r.count == 1 for r in ranked)


def test_rank_counts_conserved():
    corpus = identified(random_sequences(random.Random(9), 40))
    ranked = dedup_and_rank(corpus)
    assert sum(r.count for r in ranked) == len(corpus)


def test_rank_ignores_details():
    a = TtpSequence((AttackVector(K.TYPOSQUATTING, "x"),), ())
    b = TtpSequence((AttackVector(K.TYPOSQUATTING, "y"),), ())
    ranked = dedup_and_rank(identified([a, b]))
    assert len(ranked) == 1
    assert ranked[0].count == 2


def test_rank_seeded_multiplicities():
    top = seq(K.TYPOSQUATTING, K.IMITATED_VERSION, K.FAKE_DESCRIPTION,
              K.FAKE_CONTACT, K.PRE_INSTALL, K.CMD, K.EVASION, K.CONCEAL)
    mid = seq(K.TYPOSQUATTING, K.IMITATED_VERSION, K.FAKE_DESCRIPTION,
              K.CMD, K.EVASION, K.CONCEAL)
    low = seq(K.TYPOSQUATTING, K.EVASION, K.CONCEAL, K.CMD)
    corpus = identified([top] * 7 + [mid] * 4 + [low] * 2)
    ranked = dedup_and_rank(corpus, intent_labels={render_abstract(top): ["Trojan"]})
    assert [r.count for r in ranked] == [7, 4, 2]
    assert ranked[0].abstract_form == render_abstract(top)
    assert ranked[0].intent_labels == ("Trojan",)
    assert ranked[1].intent_labels is None


def test_rank_example_packages_bounded():
    same = seq(K.CMD)
    ranked = dedup_and_rank(identified([same] * 12), max_examples=5)
    assert len(ranked[0].example_packages) == 5


def test_length_stats_mixed():
    corpus = [seq(K.CMD, K.DATA, K.EVASION)] * 2 + [
        seq(*( [K.CMD, K.DATA, K.EVASION] * 3 ))
    ]
    stats = length_stats(corpus)
    assert stats.max_length == 9
    assert stats.fraction_below(9) == pytest.approx(2 / 3)
    assert stats.fraction_below(10) == 1.0


def test_length_stats_uniform():
    corpus = [seq(K.CMD, K.DATA, K.EVASION, K.CMD, K.DATA)] * 4
    stats = length_stats(corpus)
    assert stats.fraction_below(5) == 0.0
    assert stats.fraction_below(6) == 1.0


def test_length_stats_matches_sort_and_count():
    corpus = random_sequences(random.Random(21), 50)
    stats = length_stats(corpus)
    lengths = sorted(len(c) for c in corpus)
    for threshold, fraction in stats.cdf:
        expect = sum(1 for n in lengths if n < threshold) / len(lengths)
        assert fraction == pytest.approx(expect)
    fractions = [f for _, f in stats.cdf]
    assert fractions == sorted(fractions)
    assert fractions[-1] == 1.0


def test_dot_export():
    graph = build_graph([seq(K.CMD, K.EVASION), seq(K.CMD, K.CONCEAL)])
    dot = to_dot(graph)
    assert dot.startswith("digraph")
    assert '"cmd" -> "evasion" [label="0.50"];' in dot


def test_dot_category_filter():
    graph = build_graph(
        [seq(K.TYPOSQUATTING, K.IMITATED_VERSION, K.CMD, K.EVASION)]
    )
    deceptive_view = to_dot(graph, category=Category.DECEPTIVE)
    assert "typosquatting" in deceptive_view
    assert "cmd" not in deceptive_view
    execution_view = to_dot(graph, category=Category.EXECUTION_ATTACK)
    assert "typosquatting" not in execution_view
    assert '"cmd" -> "evasion"' in execution_view


def test_csv_export():
    graph = build_graph([seq(K.CMD, K.EVASION)])
    csv = to_csv(graph)
    assert csv.splitlines()[0] == "from,to,count,weight"
    assert "cmd,evasion,1,1.0" in csv
