#!/usr/bin/env python3
"""End-to-end offline walkthrough: ingest the demo archives, extract their
TTPs with the mock provider, build the transition graph and the ranking,
index everything, and answer one retrieval-augmented question."""

import argparse
import tempfile
from pathlib import Path

from ttpkit.demo import (
    build_coloram_archive,
    build_emptycode_archive,
    build_nometa_archive,
    demo_documents,
    demo_provider,
)
from ttpkit.extract import extract
from ttpkit.graph import build_graph, dedup_and_rank, length_stats, to_dot
from ttpkit.ingest import ingest_package
from ttpkit.llm import ChatMessage
from ttpkit.prompts import render_chat_prompt
from ttpkit.store import TtpDocument, VectorIndex
from ttpkit.vectors import render_abstract, render_detailed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--question", default="what does coloram do")
    parser.add_argument("--dot-out", default=None,
                        help="also write the transition graph as DOT")
    args = parser.parse_args()

    provider = demo_provider()
    with tempfile.TemporaryDirectory(prefix="ttpkit-demo-") as tmp:
        tmp = Path(tmp)
        print("== extraction ==")
        docs = []
        for build in (build_coloram_archive, build_nometa_archive, build_emptycode_archive):
            archive = build(tmp)
            artifact = ingest_package(archive, tmp / "work" / archive.stem)
            result = extract(artifact, provider)
            docs.append(TtpDocument.from_extraction(result))
            skips = ", ".join(sorted(s.value for s in result.skipped)) or "none"
            print(f"{artifact.name:<12} {render_abstract(result.ttp)}  skips: {skips}")
            if not result.ttp.is_empty():
                print(f"{'':12} {render_detailed(result.ttp)}")

    corpus_docs = docs + demo_documents()
    sequences = [d.sequence() for d in corpus_docs if not d.sequence().is_empty()]

    print("\n== transition graph ==")
    graph = build_graph(sequences)
    for edge in graph.to_json()["edges"]:
        print(f"{edge['from']:>18} -> {edge['to']:<18} w={edge['weight']:.2f} (n={edge['count']})")
    if args.dot_out:
        Path(args.dot_out).write_text(to_dot(graph))
        print(f"DOT written to {args.dot_out}")

    print("\n== ranking ==")
    ranked = dedup_and_rank(
        [(d.sequence(), (d.package_name, d.version, d.ecosystem))
         for d in corpus_docs if not d.sequence().is_empty()]
    )
    for row in ranked[:5]:
        print(f"{row.count:4d}  {row.abstract_form}")

    stats = length_stats(sequences)
    print(f"\nchain lengths: max {stats.max_length}, "
          f"fraction below 9: {stats.fraction_below(9):.3f}")

    print("\n== retrieval-augmented answer ==")
    index = VectorIndex(provider)
    for doc in corpus_docs:
        index.index_document(doc)
    hits = index.search(args.question, k=3)
    prompt = render_chat_prompt(args.question, [doc for doc, _ in hits])
    answer = provider.complete([ChatMessage("user", prompt)])
    print(f"Q: {args.question}")
    print(f"A: {answer}")
    print("citations:", ", ".join(f"{d.package_name}@{d.version} ({s:.3f})" for d, s in hits))


if __name__ == "__main__":
    main()
