"""Coverage rate and sequence accuracy against ground-truth chains.

Coverage rate (CR) is set-based: the fraction of distinct reference
vector kinds that the generated chain recovers.  Sequence accuracy (SA)
is order-sensitive: the length of the longest common subsequence of the
two flattened kind lists divided by the reference length.  Detail
strings never influence either score.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean

from .errors import EmptyCorpus, EmptyReference
from .vectors import TtpSequence, VectorKind


@dataclass(frozen=True)
class ScoreReport:
    cr: float
    sa: float
    lcs_kinds: tuple[VectorKind, ...]
    generated_size: int
    reference_size: int

    def __post_init__(self):
        assert 0.0 <= self.cr <= 1.0 and 0.0 <= self.sa <= 1.0
        assert self.sa == len(self.lcs_kinds) / self.reference_size

    def to_json(self) -> dict:
        return {
            "cr": self.cr,
            "sa": self.sa,
            "lcs": [k.value for k in self.lcs_kinds],
            "generated_size": self.generated_size,
            "reference_size": self.reference_size,
        }


def kind_set(seq: TtpSequence) -> set[VectorKind]:
    return set(seq.kinds())


def coverage_rate(generated: TtpSequence, reference: TtpSequence) -> float:
    """|kinds(g) ∩ kinds(r)| / |kinds(r)| over distinct kinds."""
    ref = kind_set(reference)
    if not ref:
        raise EmptyReference("reference sequence has no attack vectors")
    return len(kind_set(generated) & ref) / len(ref)


def lcs(a: list[VectorKind], b: list[VectorKind]) -> list[VectorKind]:
    """A longest common subsequence by dynamic programming.

    The backtrace is deterministic: walking from the front, take a match
    whenever it preserves optimality, otherwise advance in ``a`` when
    that preserves optimality, else advance in ``b``.  Among equal-length
    answers this picks the one earliest by position in ``a``.
    """
    n, m = len(a), len(b)
    # length[i][j] = LCS length of a[i:], b[j:]
    length = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                length[i][j] = length[i + 1][j + 1] + 1
            else:
                length[i][j] = max(length[i + 1][j], length[i][j + 1])
    out: list[VectorKind] = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j] and length[i][j] == length[i + 1][j + 1] + 1:
            out.append(a[i])
            i += 1
            j += 1
        elif length[i + 1][j] == length[i][j]:
            i += 1
        else:
            j += 1
    return out


def sequence_accuracy(generated: TtpSequence, reference: TtpSequence) -> float:
    """|LCS(flatten(g), flatten(r))| / |flatten(r)| with duplicates kept."""
    flat_ref = reference.kinds()
    if not flat_ref:
        raise EmptyReference("reference sequence has no attack vectors")
    return len(lcs(generated.kinds(), flat_ref)) / len(flat_ref)


def score_pair(generated: TtpSequence, reference: TtpSequence) -> ScoreReport:
    flat_g, flat_r = generated.kinds(), reference.kinds()
    if not flat_r:
        raise EmptyReference("reference sequence has no attack vectors")
    common = lcs(flat_g, flat_r)
    return ScoreReport(
        cr=coverage_rate(generated, reference),
        sa=len(common) / len(flat_r),
        lcs_kinds=tuple(common),
        generated_size=len(flat_g),
        reference_size=len(flat_r),
    )


@dataclass(frozen=True)
class CorpusScore:
    mean_cr: float
    mean_sa: float
    reports: tuple[ScoreReport, ...]
    by_group: dict[str, tuple[float, float]]  # group -> (mean CR, mean SA)

    def to_json(self) -> dict:
        return {
            "mean_cr": self.mean_cr,
            "mean_sa": self.mean_sa,
            "pairs": [r.to_json() for r in self.reports],
            "by_group": {
                g: {"cr": cr, "sa": sa} for g, (cr, sa) in sorted(self.by_group.items())
            },
        }


def score_corpus(
    pairs: list[tuple[TtpSequence, TtpSequence]],
    labels: list[str] | None = None,
) -> CorpusScore:
    """Unweighted arithmetic means over pairs, with optional group labels."""
    if not pairs:
        raise EmptyCorpus("no (generated, reference) pairs to score")
    if labels is not None and len(labels) != len(pairs):
        raise ValueError("labels must align with pairs")
    reports = tuple(score_pair(g, r) for g, r in pairs)
    by_group: dict[str, tuple[float, float]] = {}
    if labels is not None:
        grouped: dict[str, list[ScoreReport]] = {}
        for label, report in zip(labels, reports):
            grouped.setdefault(label, []).append(report)
        by_group = {
            label: (fmean(r.cr for r in rs), fmean(r.sa for r in rs))
            for label, rs in grouped.items()
        }
    return CorpusScore(
        mean_cr=fmean(r.cr for r in reports),
        mean_sa=fmean(r.sa for r in reports),
        reports=reports,
        by_group=by_group,
    )
