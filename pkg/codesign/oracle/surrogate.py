#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# surrogate.py
#
#   Deterministic synthetic QoR. It grows with parameters, operations
#   and every bit-width, and feature-map precision weighs more than
#   weight precision. Reports produced with it are marked synthetic.
#
#######################################################################

import math
from dataclasses import dataclass

from codesign.network.accounting import layer_params, macs, param_count
from codesign.network.serialize import network_from_json, scheme_from_json
from codesign.network.shapes import infer_shapes
from codesign.oracle.base import Oracle, OracleResponse


@dataclass(frozen=True)
class SurrogateConfig:
    A: float = 0.8
    P0: float = 1e5
    M0: float = 1e8
    c_w: float = 0.5
    c_f: float = 1.0
    metric: str = "surrogate"


def weight_groups(net, scheme):
    """ Groups of SCHEME that own at least one layer with weights, in scheme order """
    owned = set()
    for t in infer_shapes(net):
        if layer_params(t.layer, t.input) > 0:
            owned.add(scheme.group_for(t.name).name)
    return [g for g in scheme.groups if g.name in owned]


def surrogate_qor(net, scheme, s_cfg=None):
    """ A * P/(P+P0) * (1 - exp(-M/M0)) * prod_g (1 - c_w 2^-wb_g) * (1 - c_f 2^-fb) """
    s_cfg = s_cfg or SurrogateConfig()
    params = param_count(net).total
    ops = macs(net).total
    score = s_cfg.A * params / (params + s_cfg.P0)
    score *= 1 - math.exp(-ops / s_cfg.M0)
    for group in weight_groups(net, scheme):
        score *= 1 - s_cfg.c_w * 2.0 ** (-group.bits)
    score *= 1 - s_cfg.c_f * 2.0 ** (-scheme.fm_bits)
    return score


class SurrogateOracle(Oracle):
    name = "surrogate"
    synthetic = True

    def __init__(self, config=None):
        self.config = config or SurrogateConfig()

    def evaluate(self, request):
        net = network_from_json(request.net)
        scheme = scheme_from_json(request.scheme)
        return OracleResponse(
            qor=surrogate_qor(net, scheme, self.config),
            metric=self.config.metric,
            synthetic=True,
        )
