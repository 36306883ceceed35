#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# bundles.py
#
#   Bundle construction from a layer pool, and the early QoS estimate
#   of a single bundle.
#
#######################################################################

from collections import OrderedDict
from dataclasses import dataclass
from itertools import product
from typing import Tuple

import numpy as np

from codesign.config import load_config, validate
from codesign.exceptions import ConfigError, PoolExhausted
from codesign.hardware.qos import network_qos
from codesign.network.ir import (
    Bundle,
    Layer,
    LayerKind,
    QuantScheme,
    TensorShape,
    build_dnn,
    dw_conv3,
    maxpool2x2,
    pw_conv1,
    uniform_scheme,
)
from codesign.network.serialize import layer_to_json, scheme_from_json, shape_from_json

REFERENCE_CHANNELS = 48


@dataclass(frozen=True)
class PoolEntry:
    kind: LayerKind
    channels: Tuple[int, ...] = ()
    k: int = 0
    stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if any(c < 1 for c in self.channels):
            raise ConfigError(f"{self.kind.value} channel options must be >= 1")
        if self.kind == LayerKind.BACKEND:
            raise ConfigError("the back-end marker cannot be pooled")
        if self.kind in (LayerKind.PW_CONV1, LayerKind.CONV_KXK, LayerKind.DENSE):
            if not self.channels:
                raise ConfigError(f"{self.kind.value} needs at least one channel option")

    def layers(self):
        """ Every concrete layer this entry stands for """
        if self.kind == LayerKind.DW_CONV3:
            return [dw_conv3()]
        if self.kind == LayerKind.MAXPOOL2X2:
            return [maxpool2x2()]
        if self.kind == LayerKind.CONV_KXK:
            return [Layer(self.kind, c, self.stride, self.k) for c in self.channels]
        return [Layer(self.kind, c) for c in self.channels]


@dataclass(frozen=True)
class LayerPool:
    entries: Tuple[PoolEntry, ...]
    max_len: int
    input: TensorShape = TensorShape(3, 160, 360)
    estimate_scheme: QuantScheme = uniform_scheme(16, 8)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ConfigError("the layer pool is empty")
        if self.max_len < 1:
            raise ConfigError(f"max_len must be >= 1, got {self.max_len}")
        if not any(
            e.kind not in (LayerKind.MAXPOOL2X2, LayerKind.BACKEND) for e in self.entries
        ):
            raise ConfigError("the layer pool has no compute layer")

    def kinds(self):
        return {e.kind for e in self.entries}


def pool_from_json(obj, path=None):
    validate(obj, "pool", path=path)
    entries = tuple(
        PoolEntry(
            LayerKind(e["kind"]),
            tuple(e.get("channels", [])),
            e.get("k", 0),
            e.get("stride", 1),
        )
        for e in obj["entries"]
    )
    raw = obj.get("estimate_scheme", {"weight_bits": 16, "fm_bits": 8})
    if "groups" in raw:
        scheme = scheme_from_json(raw)
    else:
        scheme = uniform_scheme(raw["weight_bits"], raw["fm_bits"])
    return LayerPool(
        entries=entries,
        max_len=obj["max_len"],
        input=shape_from_json(obj.get("input", [3, 160, 360])),
        estimate_scheme=scheme,
    )


def load_pool(path):
    return pool_from_json(load_config(path), path=path)


def candidate_sequences(pool):
    """ All layer sequences of length 1..max_len with a compute layer and no two pools in a row """
    alphabet = [layer for entry in pool.entries for layer in entry.layers()]
    sequences = []
    for length in range(1, pool.max_len + 1):
        for seq in product(alphabet, repeat=length):
            if not any(layer.is_compute for layer in seq):
                continue
            if any(a.is_pool and b.is_pool for a, b in zip(seq, seq[1:])):
                continue
            sequences.append(seq)
    return sequences


def reference_bundle(pool):
    """ The depthwise 3x3 + pointwise 1x1 bundle, when the pool can build it """
    kinds = pool.kinds()
    if pool.max_len < 2 or not {
        LayerKind.DW_CONV3,
        LayerKind.PW_CONV1,
        LayerKind.MAXPOOL2X2,
    } <= kinds:
        return None
    channels = [
        c for e in pool.entries if e.kind == LayerKind.PW_CONV1 for c in e.channels
    ]
    nearest = min(channels, key=lambda c: (abs(c - REFERENCE_CHANNELS), c))
    return Bundle((dw_conv3(), pw_conv1(nearest)))


def enumerate_bundles(pool, limit, rng):
    """ LIMIT distinct bundles drawn from POOL

    Parameters
    ----------
    pool : LayerPool
    limit : int
        number of bundles wanted, >= 1
    rng : numpy Generator or int seed
        orders the candidate space; the reference bundle, when buildable, comes first

    Raises
    ------
    PoolExhausted
        when the pool yields fewer than LIMIT distinct bundles
    """
    if limit < 1:
        raise ConfigError("limit must be >= 1")
    rng = np.random.default_rng(rng)
    space = OrderedDict()
    for seq in candidate_sequences(pool):
        bundle = Bundle(seq)
        space.setdefault(bundle.name, bundle)
    if limit > len(space):
        raise PoolExhausted(
            f"the pool yields {len(space)} distinct bundles, {limit} were asked for"
        )
    candidates = list(space.values())
    bundles = []
    reference = reference_bundle(pool)
    if reference is not None:
        bundles.append(reference)
    for index in rng.permutation(len(candidates)):
        if len(bundles) >= limit:
            break
        bundle = candidates[int(index)]
        if reference is None or bundle.name != reference.name:
            bundles.append(bundle)
    return bundles[:limit]


def single_rep_net(bundle, shape):
    return build_dnn(bundle, 1, [1], [False], shape)


def estimate_bundle_qos(bundle, shape, scheme, device):
    """ QoS of BUNDLE alone, as a one-repetition network on SHAPE """
    return network_qos(single_rep_net(bundle, shape), scheme, device)


def bundle_to_json(bundle):
    return OrderedDict(
        [("name", bundle.name), ("layers", [layer_to_json(layer) for layer in bundle.layers])]
    )
