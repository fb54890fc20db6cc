"""Independent reference evaluators used by several test modules."""

import itertools


def gate_oracle(x, y, values):
    """Conditional pass-through on plain Python ints: keep values[i] where y[i]
    is set, provided the source count values[x-1] is at least one."""
    if values[x - 1] < 1:
        return [0] * len(values)
    return [v if bit else 0 for v, bit in zip(values, y)]


def or_oracle(vectors):
    return [max(col) for col in zip(*vectors)]


def and_oracle(vectors):
    out = list(vectors[0])
    for v in vectors[1:]:
        out = [a * b for a, b in zip(out, v)]
    return out


def binary_spectra(slots):
    """Every 0/1 truth assignment as (true counts, false counts) with one shot."""
    for bits in itertools.product((0, 1), repeat=slots):
        yield list(bits), [1 - b for b in bits]


def atoms(slots):
    """Every (source, targets, polarity) gate for ``slots`` register slots."""
    for x in range(1, slots + 1):
        for y in itertools.product((0, 1), repeat=slots):
            for pol in (True, False):
                yield x, y, pol


def evaluate_tree(tree, true, false):
    """Evaluate nested ('or'|'and', children) trees with atom leaves (x, y, pol)."""
    if tree[0] in ("or", "and"):
        parts = [evaluate_tree(t, true, false) for t in tree[1]]
        return or_oracle(parts) if tree[0] == "or" else and_oracle(parts)
    x, y, pol = tree
    return gate_oracle(x, y, true if pol else false)
