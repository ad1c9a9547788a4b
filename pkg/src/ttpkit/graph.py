"""Attack-vector state-transition graph, TTP ranking and length stats.

Every adjacent pair in a chain's flatten order (deceptive prefix then
execution suffix) contributes one directed edge count; an edge weight is
the empirical transition probability out of its source node, so every
non-sink node's outgoing weights sum to one.  Cycles and self-loops are
allowed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import EmptyCorpus
from .vectors import Category, TtpSequence, VectorKind, render_abstract

WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class TransitionGraph:
    nodes: frozenset[VectorKind]
    edge_counts: dict[tuple[VectorKind, VectorKind], int]
    edge_weights: dict[tuple[VectorKind, VectorKind], float] = field(init=False)

    def __post_init__(self):
        totals: Counter[VectorKind] = Counter()
        for (src, _), count in self.edge_counts.items():
            if count <= 0:
                raise ValueError("edge counts must be positive")
            totals[src] += count
        weights = {
            (src, dst): count / totals[src]
            for (src, dst), count in self.edge_counts.items()
        }
        object.__setattr__(self, "edge_weights", weights)
        for node in {src for src, _ in self.edge_counts}:
            outgoing = sum(w for (s, _), w in weights.items() if s is node)
            assert abs(outgoing - 1.0) <= WEIGHT_TOLERANCE

    def weight(self, src: VectorKind, dst: VectorKind) -> float:
        return self.edge_weights.get((src, dst), 0.0)

    def to_json(self) -> dict:
        return {
            "nodes": sorted(n.value for n in self.nodes),
            "edges": [
                {
                    "from": src.value,
                    "to": dst.value,
                    "count": self.edge_counts[(src, dst)],
                    "weight": self.edge_weights[(src, dst)],
                }
                for src, dst in sorted(
                    self.edge_counts, key=lambda e: (e[0].value, e[1].value)
                )
            ],
        }


def build_graph(corpus: list[TtpSequence]) -> TransitionGraph:
    """Tally adjacent-pair transitions over the whole corpus."""
    if not corpus:
        raise EmptyCorpus("cannot build a transition graph from zero chains")
    counts: Counter[tuple[VectorKind, VectorKind]] = Counter()
    nodes: set[VectorKind] = set()
    for seq in corpus:
        kinds = seq.kinds()
        nodes.update(kinds)
        for src, dst in zip(kinds, kinds[1:]):
            counts[(src, dst)] += 1
    return TransitionGraph(frozenset(nodes), dict(counts))


def path_probability(graph: TransitionGraph, ttp: TtpSequence) -> float:
    """Product of edge weights along the chain; an absent edge gives 0."""
    prob = 1.0
    kinds = ttp.kinds()
    for src, dst in zip(kinds, kinds[1:]):
        prob *= graph.weight(src, dst)
        if prob == 0.0:
            return 0.0
    return prob


@dataclass(frozen=True)
class RankedTtp:
    abstract_form: str
    count: int
    example_packages: tuple[tuple[str, str, str], ...]
    intent_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("ranked TTPs need at least one member")

    def to_json(self) -> dict:
        out = {
            "ttp": self.abstract_form,
            "count": self.count,
            "example_packages": [list(p) for p in self.example_packages],
        }
        if self.intent_labels is not None:
            out["intent_labels"] = list(self.intent_labels)
        return out


def dedup_and_rank(
    corpus: list[tuple[TtpSequence, tuple[str, str, str]]],
    max_examples: int = 5,
    intent_labels: dict[str, list[str]] | None = None,
) -> list[RankedTtp]:
    """Merge packages sharing the same abstract chain; rank by multiplicity.

    The grouping key ignores detail strings.  Intent labels are attached
    from the caller-provided map, never inferred here.
    """
    if not corpus:
        raise EmptyCorpus("cannot rank an empty corpus")
    groups: dict[str, list[tuple[str, str, str]]] = {}
    for seq, identity in corpus:
        groups.setdefault(render_abstract(seq), []).append(identity)
    ranked = [
        RankedTtp(
            abstract_form=form,
            count=len(identities),
            example_packages=tuple(identities[:max_examples]),
            intent_labels=tuple(intent_labels[form]) if intent_labels and form in intent_labels else None,
        )
        for form, identities in groups.items()
    ]
    ranked.sort(key=lambda r: (-r.count, r.abstract_form))
    return ranked


@dataclass(frozen=True)
class LengthStats:
    cdf: tuple[tuple[int, float], ...]  # (L, fraction of chains with length < L)
    max_length: int

    def fraction_below(self, length: int) -> float:
        out = 0.0
        for threshold, fraction in self.cdf:
            if threshold <= length:
                out = fraction
        return out

    def to_csv(self) -> str:
        lines = ["length,fraction_below"]
        lines += [f"{threshold},{fraction}" for threshold, fraction in self.cdf]
        return "\n".join(lines) + "\n"


def length_stats(corpus: list[TtpSequence]) -> LengthStats:
    """Chain-length CDF: fraction of chains strictly shorter than L."""
    if not corpus:
        raise EmptyCorpus("cannot summarize an empty corpus")
    lengths = sorted(len(seq) for seq in corpus)
    top = lengths[-1]
    total = len(lengths)
    cdf = []
    for threshold in range(0, top + 2):
        below = sum(1 for n in lengths if n < threshold)
        cdf.append((threshold, below / total))
    assert cdf[-1][1] == 1.0
    return LengthStats(tuple(cdf), top)


def to_dot(graph: TransitionGraph, category: Category | None = None) -> str:
    """DOT export with two-decimal edge labels.

    ``category`` filters the unified graph down to the deceptive-only or
    execution-side view (both endpoints must belong).
    """

    def keep(kind: VectorKind) -> bool:
        if category is None:
            return True
        if category is Category.DECEPTIVE:
            return kind.category is Category.DECEPTIVE
        return kind.category is not Category.DECEPTIVE

    lines = ["digraph ttp {"]
    for node in sorted(graph.nodes, key=lambda n: n.value):
        if keep(node):
            lines.append(f'  "{node.value}";')
    for (src, dst) in sorted(graph.edge_counts, key=lambda e: (e[0].value, e[1].value)):
        if keep(src) and keep(dst):
            weight = graph.edge_weights[(src, dst)]
            lines.append(f'  "{src.value}" -> "{dst.value}" [label="{weight:.2f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_csv(graph: TransitionGraph) -> str:
    lines = ["from,to,count,weight"]
    for (src, dst) in sorted(graph.edge_counts, key=lambda e: (e[0].value, e[1].value)):
        lines.append(
            f"{src.value},{dst.value},{graph.edge_counts[(src, dst)]},"
            f"{graph.edge_weights[(src, dst)]}"
        )
    return "\n".join(lines) + "\n"
