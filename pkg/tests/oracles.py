"""Independent reference computations used as test oracles.

Everything here is written with plain loops over explicit assignment
patterns so it shares no code path with the library.
"""
import itertools
import math

import numpy as np


def assignment_patterns(p):
    """Yield ``(z, prob)`` for every binary assignment vector of ``len(p)`` pairs."""
    p = [float(x) for x in p]
    for z in itertools.product((0, 1), repeat=len(p)):
        prob = 1.0
        for zi, pi in zip(z, p):
            prob *= pi if zi else 1.0 - pi
        yield np.array(z), prob


def weight(kind_base, k, rank, n_items):
    if kind_base == "AR":
        return -float(rank)
    if kind_base == "P":
        return n_items / k if rank <= k else 0.0
    return n_items / math.log2(1 + rank)


def metric_loop(order, tau, kind_base, k=None):
    """Average over users of (1/I) sum over positions of weight * tau."""
    n_users, n_items = tau.shape
    total = 0.0
    for u in range(n_users):
        for pos, item in enumerate(order[u]):
            total += weight(kind_base, k, pos + 1, n_items) * tau[u, item]
    return total / (n_users * n_items)


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def logit(p):
    return math.log(p / (1.0 - p))
