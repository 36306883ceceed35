#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# accounting.py
#
#   Parameter, feature-map and multiply-accumulate accounting for
#   NetworkSpecs, at full and quantized precision.
#
#   Biases and batch-norm parameters are not counted.
#
#######################################################################

from collections import OrderedDict, namedtuple
from fractions import Fraction

from codesign.network.ir import LayerKind
from codesign.network.shapes import infer_shapes
from codesign.util import ceil_div

MEGABYTE = 10 ** 6

Counts = namedtuple("Counts", ["per_layer", "total"])
ParamBytes = namedtuple("ParamBytes", ["total", "per_group", "per_layer", "exact"])
FmBytes = namedtuple("FmBytes", ["peak", "total"])


def layer_params(layer, input_shape):
    kind = layer.kind
    if kind == LayerKind.DW_CONV3:
        return 9 * input_shape.channels
    if kind == LayerKind.PW_CONV1:
        return input_shape.channels * layer.out_channels
    if kind == LayerKind.CONV_KXK:
        return layer.k * layer.k * input_shape.channels * layer.out_channels
    if kind == LayerKind.DENSE:
        return input_shape.elements * layer.out_channels
    return 0


def layer_macs(layer, input_shape, output_shape):
    kind = layer.kind
    positions = output_shape.height * output_shape.width
    if kind == LayerKind.DW_CONV3:
        return 9 * output_shape.channels * positions
    if kind == LayerKind.PW_CONV1:
        return input_shape.channels * layer.out_channels * positions
    if kind == LayerKind.CONV_KXK:
        return layer.k * layer.k * input_shape.channels * layer.out_channels * positions
    if kind == LayerKind.DENSE:
        return input_shape.elements * layer.out_channels
    return 0


def param_count(net, include_backend=False):
    """ Weight count per layer name and in total """
    per_layer = OrderedDict(
        (t.name, layer_params(t.layer, t.input))
        for t in infer_shapes(net, include_backend)
    )
    return Counts(per_layer, sum(per_layer.values()))


def macs(net, include_backend=False):
    """ Multiply-accumulate count per layer name and in total """
    per_layer = OrderedDict(
        (t.name, layer_macs(t.layer, t.input, t.output))
        for t in infer_shapes(net, include_backend)
    )
    return Counts(per_layer, sum(per_layer.values()))


def param_bytes(net, scheme, include_backend=False):
    """ Weight storage at the precisions of SCHEME

    Each layer is rounded up to whole bytes on its own; per_group adds those
    rounded figures by group name, and exact keeps the unrounded rational total.

    Raises
    ------
    UnmappedLayer
        if a layer matches no group of the scheme
    """
    per_layer = OrderedDict()
    per_group = OrderedDict((g.name, 0) for g in scheme.groups)
    exact = Fraction(0)
    for t in infer_shapes(net, include_backend):
        group = scheme.group_for(t.name)
        layer_bits = layer_params(t.layer, t.input) * group.bits
        per_layer[t.name] = ceil_div(layer_bits, 8)
        per_group[group.name] += per_layer[t.name]
        exact += Fraction(layer_bits, 8)
    return ParamBytes(sum(per_layer.values()), per_group, per_layer, exact)


def fm_bytes(net, scheme, include_backend=False):
    """ Peak single feature map and sum of all layer outputs, in whole bytes """
    sizes = [
        ceil_div(t.output.elements * scheme.fm_bits, 8)
        for t in infer_shapes(net, include_backend)
    ]
    return FmBytes(max(sizes, default=0), sum(sizes))


def compression_rate(net, scheme, include_backend=False):
    """ (parameter ratio, feature-map ratio) of baseline over quantized storage

    Both are exact Fractions computed on packed bit totals, so a uniform b-bit scheme
    gives exactly baseline_bits / b.
    """
    trace = infer_shapes(net, include_backend)
    base_params = quant_params = 0
    fm_elements = 0
    for t in trace:
        count = layer_params(t.layer, t.input)
        base_params += count * scheme.baseline_bits
        quant_params += count * scheme.weight_bits(t.name)
        fm_elements += t.output.elements
    param_ratio = Fraction(base_params, quant_params) if quant_params else Fraction(1)
    fm_ratio = (
        Fraction(fm_elements * scheme.baseline_bits, fm_elements * scheme.fm_bits)
        if fm_elements
        else Fraction(1)
    )
    return param_ratio, fm_ratio


def size_report(net, scheme):
    """ Megabyte figures of a network at baseline and quantized precision """
    params = param_count(net).total
    quant = param_bytes(net, scheme)
    fms = fm_bytes(net, scheme)
    base_fm = fm_bytes(net, scheme.with_fm_bits(scheme.baseline_bits))
    param_ratio, fm_ratio = compression_rate(net, scheme)
    return OrderedDict(
        [
            ("params", params),
            ("macs", macs(net).total),
            ("param_mb_baseline", params * scheme.baseline_bits / 8 / MEGABYTE),
            ("param_mb", quant.total / MEGABYTE),
            ("fm_mb_baseline", base_fm.total / MEGABYTE),
            ("fm_mb", fms.total / MEGABYTE),
            ("fm_peak_mb", fms.peak / MEGABYTE),
            ("param_compression", float(param_ratio)),
            ("fm_compression", float(fm_ratio)),
        ]
    )
