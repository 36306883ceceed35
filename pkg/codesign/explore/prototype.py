#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# prototype.py
#
#   Growing a bundle into a prototype network, and choosing the bundles
#   worth a full search: prototypes are grouped by how close their
#   latency is to the target and the best-scoring ones of each group
#   are kept.
#
#######################################################################

from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from codesign.exceptions import ConfigError, EmptyInput, InvalidGrowth
from codesign.hardware.qos import network_qos
from codesign.log import LOGGER
from codesign.network.ir import build_dnn

Candidate = namedtuple("Candidate", ["bundle", "qos", "qor"])


@dataclass(frozen=True)
class PoolPolicy:
    min_spatial: int = 20
    growth: int = 2

    def __post_init__(self):
        if self.min_spatial < 1:
            raise ConfigError(f"min_spatial must be >= 1, got {self.min_spatial}")
        if self.growth < 1:
            raise ConfigError(f"growth must be >= 1, got {self.growth}")


def pool_count(shape, n, policy):
    """ Pools to insert: min(n - 1, floor(log2(min(H, W) / min_spatial))), never negative """
    smallest = min(shape.height, shape.width)
    count = 0
    while policy.min_spatial * 2 ** (count + 1) <= smallest:
        count += 1
    return max(0, min(n - 1, count))


def build_prototype(bundle, n, input, policy=None, head=(), tail=(), backend=None):
    """ BUNDLE repeated N times on INPUT

    Pools follow the first pool_count(...) repetitions and every pool multiplies the
    channels of the following repetitions by policy.growth.

    Raises
    ------
    InvalidGrowth
        if a dimension vanishes anyway (pools inside the bundle itself)
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    policy = policy or PoolPolicy()
    pools = pool_count(input, n, policy)
    pool_after = [i < pools for i in range(n)]
    channel_mults = [policy.growth ** min(i, pools) for i in range(n)]
    return build_dnn(
        bundle, n, channel_mults, pool_after, input, backend=backend, head=head, tail=tail
    )


def latency_distance(qos, target):
    """ |latency - 1/min_fps| relative to the target latency """
    return abs(qos.latency - 1 / target.min_fps) * target.min_fps


def group_and_select(candidates, target, k=3, top_n=3):
    """ Best TOP_N candidates by QoR in each of K latency-distance groups

    Parameters
    ----------
    candidates : list of Candidate or (bundle, qos, qor) tuples
    target : QosTarget
    k : int
        number of equal-count groups, closest to the target first
    top_n : int
        candidates kept per group

    Returns
    -------
    list of Candidate
        group by group; inside a group by QoR descending, then bundle name

    Raises
    ------
    EmptyInput
        if there are no candidates
    """
    if k < 1 or top_n < 1:
        raise ConfigError(f"k and top_n must be >= 1, got k={k}, top_n={top_n}")
    candidates = [Candidate(*c) for c in candidates]
    if not candidates:
        raise EmptyInput("no candidates to group")
    ranked = sorted(
        candidates, key=lambda c: (latency_distance(c.qos, target), c.bundle.name)
    )
    selected = []
    for group in np.array_split(np.arange(len(ranked)), k):
        members = sorted(
            (ranked[int(i)] for i in group), key=lambda c: (-c.qor, c.bundle.name)
        )
        selected.extend(members[:top_n])
    return selected


def run_selection(
    bundles,
    n,
    input,
    scheme,
    device,
    target,
    oracle,
    policy=None,
    k=3,
    top_n=3,
    epochs=20,
    dataset="dac-sdc",
    progress=False,
):
    """ Prototype, estimate and score every bundle, then group_and_select

    Bundles that cannot be grown to N repetitions are skipped with a warning.

    Returns
    -------
    tuple
        (selected candidates, all candidates)
    """
    candidates = []
    for bundle in tqdm(bundles, desc="prototypes", disable=not progress):
        try:
            net = build_prototype(bundle, n, input, policy)
        except InvalidGrowth as e:
            LOGGER.warning(f"Skipping bundle {bundle.name}: {e}")
            continue
        qos = network_qos(net, scheme, device)
        qor = oracle.score(net, scheme, epochs, dataset).qor
        candidates.append(Candidate(bundle, qos, qor))
    return group_and_select(candidates, target, k, top_n), candidates
