#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# serialize.py
#
#   JSON codec for NetworkSpec and QuantScheme (schema network.v1).
#
#   A design file holds "net", "scheme" or both at the top level.
#
#######################################################################

from collections import OrderedDict

from codesign.config import load_config, validate
from codesign.network.ir import (
    Backend,
    Bundle,
    Layer,
    LayerKind,
    NetworkSpec,
    QuantGroup,
    QuantScheme,
    TensorShape,
    validate as validate_net,
)
from codesign.util import fraction_to_json, to_fraction


def shape_to_json(shape):
    return OrderedDict(
        [("channels", shape.channels), ("height", shape.height), ("width", shape.width)]
    )


def shape_from_json(obj):
    if isinstance(obj, (list, tuple)):
        return TensorShape(*obj)
    return TensorShape(obj["channels"], obj["height"], obj["width"])


def layer_to_json(layer):
    obj = OrderedDict([("kind", layer.kind.value)])
    if layer.out_channels is not None:
        obj["out_channels"] = layer.out_channels
    obj["stride"] = layer.stride
    if layer.kind == LayerKind.CONV_KXK:
        obj["k"] = layer.k
    if layer.in_channels is not None:
        obj["in_channels"] = layer.in_channels
    return obj


def layer_from_json(obj):
    kind = LayerKind(obj["kind"])
    default_stride = 2 if kind == LayerKind.MAXPOOL2X2 else 1
    return Layer(
        kind,
        out_channels=obj.get("out_channels"),
        stride=obj.get("stride", default_stride),
        k=obj.get("k", 0),
        in_channels=obj.get("in_channels"),
    )


def network_to_json(net):
    return OrderedDict(
        [
            ("input", shape_to_json(net.input)),
            ("head", [layer_to_json(layer) for layer in net.head]),
            (
                "bundle",
                OrderedDict(
                    [
                        ("name", net.bundle.name),
                        ("layers", [layer_to_json(layer) for layer in net.bundle.layers]),
                    ]
                ),
            ),
            ("n_reps", net.n_reps),
            ("channel_mults", [fraction_to_json(m) for m in net.channel_mults]),
            ("pool_after", list(net.pool_after)),
            ("tail", [layer_to_json(layer) for layer in net.tail]),
            (
                "backend",
                OrderedDict(
                    [
                        ("name", net.backend.name),
                        ("layers", [layer_to_json(layer) for layer in net.backend.layers]),
                    ]
                ),
            ),
        ]
    )


def network_from_json(obj):
    """ Build a NetworkSpec from its JSON form; structure only, shapes are not checked """
    bundle = obj["bundle"]
    backend = obj.get("backend", {})
    return NetworkSpec(
        input=shape_from_json(obj["input"]),
        bundle=Bundle(
            tuple(layer_from_json(layer) for layer in bundle["layers"]),
            bundle.get("name", ""),
        ),
        n_reps=obj["n_reps"],
        channel_mults=tuple(to_fraction(m) for m in obj["channel_mults"]),
        pool_after=tuple(obj["pool_after"]),
        head=tuple(layer_from_json(layer) for layer in obj.get("head", [])),
        tail=tuple(layer_from_json(layer) for layer in obj.get("tail", [])),
        backend=Backend(
            backend.get("name", "bbox-regression"),
            tuple(layer_from_json(layer) for layer in backend.get("layers", [])),
        ),
    )


def scheme_to_json(scheme):
    return OrderedDict(
        [
            ("fm_bits", scheme.fm_bits),
            ("baseline_bits", scheme.baseline_bits),
            (
                "groups",
                [
                    OrderedDict(
                        [("name", g.name), ("layers", list(g.patterns)), ("bits", g.bits)]
                    )
                    for g in scheme.groups
                ],
            ),
        ]
    )


def scheme_from_json(obj):
    groups = tuple(
        QuantGroup(g.get("name", f"g{i}"), tuple(g["layers"]), g["bits"])
        for i, g in enumerate(obj["groups"])
    )
    return QuantScheme(
        fm_bits=obj["fm_bits"], groups=groups, baseline_bits=obj.get("baseline_bits", 32)
    )


def design_to_json(net, scheme=None):
    obj = OrderedDict([("net", network_to_json(net))])
    if scheme is not None:
        obj["scheme"] = scheme_to_json(scheme)
    return obj


def design_from_json(obj, path=None):
    """ (NetworkSpec or None, QuantScheme or None) from a validated design document """
    validate(obj, "network", path=path)
    net = network_from_json(obj["net"]) if "net" in obj else None
    scheme = scheme_from_json(obj["scheme"]) if "scheme" in obj else None
    if net is not None:
        validate_net(net)
    return net, scheme


def load_design(path):
    """ Read a network and/or scheme file

    Returns
    -------
    tuple
        (NetworkSpec or None, QuantScheme or None)

    Raises
    ------
    ConfigError
        unreadable file, bad JSON (with line and column) or schema violation
    ShapeError, ChannelMismatch
        if the network's shapes cannot be inferred
    """
    return design_from_json(load_config(path), path=path)
