"""Evaluate every variant on a synthetic corpus and summarise how the metrics agree.

Usage: python3 demos/corpus_agreement.py [states_per_sv]
"""
import sys
import time

import numpy as np

from leadsafety import agreement as ag
from leadsafety.evaluate import evaluate
from leadsafety.ingest import synthetic_corpus
from leadsafety.registry import default_variants
from leadsafety.spec import DATASET


def main(states_per_sv=4000):
    t0 = time.perf_counter()
    corpus = synthetic_corpus(n_sv=5, states_per_sv=states_per_sv, seed=0)
    outputs = evaluate(corpus, default_variants(), jobs=4)
    print(f"{corpus.N_s} states, {corpus.N_I} incidents, evaluated in {time.perf_counter() - t0:.1f}s")

    groups = {}
    for out in outputs:
        if out.form != DATASET:
            groups.setdefault(out.form, []).append(out)
    for form, outs in groups.items():
        m = ag.agreement_matrix(outs, jobs=4)
        means = m.mean_offdiagonal()
        order = np.argsort(means)
        print(f"\n{form}: mean AID {np.nanmean(means):.3f}")
        for k in sorted(set(order[:3]) | set(order[-3:]), key=lambda k: means[k]):
            print(f"  {m.labels[k]:10} {means[k]:.3f}")

    booleans = groups["bool/state"]
    prec = ag.agreement_matrix(booleans, "precision")
    i, j = prec.labels.index("RSS3"), prec.labels.index("FSM")
    print(f"\nprecision(RSS3 -> FSM) {prec.values[i, j]:.3f}, precision(FSM -> RSS3) {prec.values[j, i]:.3f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 4000)
