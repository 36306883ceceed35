#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# shapes.py
#
#   Flattening a NetworkSpec into named layers and inferring the
#   feature-map shape before and after every one of them.
#
#######################################################################

from collections import namedtuple

from codesign.exceptions import ChannelMismatch, ShapeError
from codesign.network.ir import LayerKind, TensorShape, maxpool2x2
from codesign.util import ceil_div

NamedLayer = namedtuple("NamedLayer", ["name", "layer", "segment"])

LayerTrace = namedtuple("LayerTrace", ["layer", "input", "output", "name", "segment"])


def flatten(net, include_backend=False):
    """ All layers of NET in execution order, with stable names

    Names are h{i} for the head, r{rep}.l{j} for layer j of repetition rep (1-based),
    r{rep}.pool for the pooling inserted after a repetition, t{i} for the tail and
    b{i} for the back-end layers. Repetition layers come out with their channels
    already scaled by that repetition's multiplier.
    """
    layers = [NamedLayer(f"h{i}", layer, "head") for i, layer in enumerate(net.head)]
    for rep in range(1, net.n_reps + 1):
        mult = net.channel_mults[rep - 1]
        segment = f"r{rep}"
        for j, layer in enumerate(net.bundle.layers):
            layers.append(NamedLayer(f"r{rep}.l{j}", layer.scaled(mult), segment))
        if net.pool_after[rep - 1]:
            layers.append(NamedLayer(f"r{rep}.pool", maxpool2x2(), segment))
    layers.extend(NamedLayer(f"t{i}", layer, "tail") for i, layer in enumerate(net.tail))
    if include_backend:
        layers.extend(
            NamedLayer(f"b{i}", layer, "backend")
            for i, layer in enumerate(net.backend.layers)
        )
    return layers


def output_shape(layer, shape, name="?"):
    """ Shape produced by LAYER from an input of SHAPE """
    if layer.in_channels is not None and layer.in_channels != shape.channels:
        raise ChannelMismatch(
            f"Layer {name} ({layer.kind.value}) expects {layer.in_channels} input "
            f"channels but receives {shape.channels}"
        )
    kind = layer.kind
    if kind == LayerKind.DW_CONV3:
        if layer.out_channels is not None and layer.out_channels != shape.channels:
            raise ChannelMismatch(
                f"Depthwise layer {name} declares {layer.out_channels} channels "
                f"but receives {shape.channels}"
            )
        return shape
    if kind == LayerKind.PW_CONV1:
        return TensorShape(layer.out_channels, shape.height, shape.width)
    if kind == LayerKind.CONV_KXK:
        return TensorShape(
            layer.out_channels,
            ceil_div(shape.height, layer.stride),
            ceil_div(shape.width, layer.stride),
        )
    if kind == LayerKind.MAXPOOL2X2:
        height, width = shape.height // 2, shape.width // 2
        if height < 1 or width < 1:
            raise ShapeError(
                f"Pooling at {name} would shrink {shape} to zero height or width"
            )
        return TensorShape(shape.channels, height, width)
    if kind == LayerKind.DENSE:
        return TensorShape(layer.out_channels, 1, 1)
    return shape


def trace_layers(named_layers, shape):
    """ Shape trace of an already-flattened layer list starting from SHAPE """
    trace = []
    for name, layer, segment in named_layers:
        out = output_shape(layer, shape, name)
        trace.append(LayerTrace(layer, shape, out, name, segment))
        shape = out
    return trace


def infer_shapes(net, include_backend=False):
    """ Infer every layer's input and output shape

    Parameters
    ----------
    net : NetworkSpec
        structurally valid network

    Returns
    -------
    list of LayerTrace
        (layer, input, output, name, segment) in execution order

    Raises
    ------
    ShapeError
        if a dimension would reach 0
    ChannelMismatch
        if a layer's declared input channels disagree with its predecessor
    """
    return trace_layers(flatten(net, include_backend), net.input)


def final_shape(net):
    trace = infer_shapes(net)
    return trace[-1].output if trace else net.input
