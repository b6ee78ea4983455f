"""Independent scalar reference implementations used to check the library.

Everything here is written against the definitions directly, in plain Python
loops, with no reuse of the library's batch kernels or sweep logic.  The
shared conventions (tie-breaks, canonical class order) are part of the
contract being checked and are therefore implemented twice on purpose.
"""

from __future__ import annotations

import math


def sq_euclidean(a, b) -> float:
    """Exact-summation squared Euclidean distance (independent oracle)."""
    return math.fsum((x - y) ** 2 for x, y in zip(a, b))


def dissim(vb, vu, ub, uu) -> tuple[float, float]:
    """Closed-form uncertain dissimilarity on plain float lists."""
    best = 0.0
    unc = 0.0
    for i in range(len(vb)):
        d = vb[i] - ub[i]
        best += d * d
        unc += abs(d) * (vu[i] + uu[i])
    return best, 2.0 * unc


def min_dissim(cand_b, cand_u, ser_b, ser_u) -> tuple[float, float]:
    """Exhaustive window scan; lexicographic (best, uncertainty) minimum."""
    l = len(cand_b)
    best = None
    for j in range(len(ser_b) - l + 1):
        d = dissim(cand_b, cand_u, ser_b[j : j + l], ser_u[j : j + l])
        if best is None or d < best:
            best = d
    return best


def entropy(counts, total) -> float:
    if total <= 0:
        return 0.0
    ent = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            ent += -p * math.log2(p)
    return ent


def split_quality(dist_pairs, labels, class_order):
    """Best (gain, margin, threshold) over every observed threshold value.

    ``dist_pairs`` are (best, uncertainty) tuples; thresholds are the
    distinct observed pairs in ascending lexicographic order; an instance
    joins the near side when its pair is <= the threshold.  Ties on gain
    prefer the larger margin, then the smaller threshold.
    """
    n = len(dist_pairs)
    idx = {c: i for i, c in enumerate(class_order)}
    total = [0] * len(class_order)
    for lab in labels:
        total[idx[lab]] += 1
    h = entropy(total, n)

    best = None  # (gain, margin, threshold, n1)
    for thr in sorted(set(dist_pairs)):
        near = [0] * len(class_order)
        n1 = 0
        far_bests = []
        for pair, lab in zip(dist_pairs, labels):
            if pair <= thr:
                near[idx[lab]] += 1
                n1 += 1
            else:
                far_bests.append(pair[0])
        n2 = n - n1
        far = [t - c for t, c in zip(total, near)]
        gain = h - (n1 / n) * entropy(near, n1) - (n2 / n) * entropy(far, n2)
        margin = min(far_bests) - thr[0] if far_bests else 0.0
        if best is None or gain > best[0] or (gain == best[0] and margin > best[1]):
            best = (gain, margin, thr, n1)
    return best


def overlaps(o1, l1, o2, l2) -> bool:
    return o1 < o2 + l2 and o2 < o1 + l1


def extract(bests, uncs, labels, min_len, max_len, k, stride=1):
    """Exhaustive candidate scoring, documented tie-break, greedy pruning.

    ``bests``/``uncs`` are lists of float lists.  Returns the selected
    candidates as (length, source, offset, quality, thr_best, thr_unc)
    tuples in final output order.
    """
    class_order = sorted(set(labels))
    scored = []
    for l in range(min_len, max_len + 1):
        for s in range(len(bests)):
            for o in range(0, len(bests[s]) - l + 1, stride):
                cb = bests[s][o : o + l]
                cu = uncs[s][o : o + l]
                dist_pairs = [
                    min_dissim(cb, cu, bests[t], uncs[t]) for t in range(len(bests))
                ]
                gain, margin, thr, _ = split_quality(dist_pairs, labels, class_order)
                scored.append((l, s, o, gain, margin, thr))

    scored.sort(key=lambda c: (-c[3], -c[4], c[0], c[1], c[2]))
    selected = []
    for l, s, o, gain, margin, thr in scored:
        if any(src == s and overlaps(o, l, o2, l2) for l2, src, o2, *_ in selected):
            continue
        selected.append((l, s, o, gain, thr[0], thr[1]))
        if len(selected) == k:
            break
    return selected


def transform(bests, uncs, shapelet_values) -> list[list[tuple[float, float]]]:
    """Entry-by-entry recomputation of the distance feature matrix."""
    return [
        [min_dissim(cb, cu, bests[i], uncs[i]) for cb, cu in shapelet_values]
        for i in range(len(bests))
    ]
