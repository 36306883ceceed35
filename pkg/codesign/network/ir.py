#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# ir.py
#
#   Typed description of bundle-composed DNNs: shapes, layers, bundles,
#   whole networks and their quantization schemes.
#
#   All types are frozen dataclasses; nothing here mutates after
#   construction.
#
#######################################################################

from dataclasses import dataclass, field, replace
from enum import Enum
from fnmatch import fnmatchcase
from fractions import Fraction
from typing import Optional, Tuple

from slugify import slugify

from codesign.exceptions import ConfigError, InvalidGrowth, ShapeError, UnmappedLayer
from codesign.util import to_fraction


class LayerKind(Enum):
    DW_CONV3 = "DwConv3"
    PW_CONV1 = "PwConv1"
    CONV_KXK = "ConvKxK"
    MAXPOOL2X2 = "MaxPool2x2"
    DENSE = "Dense"
    BACKEND = "BackendMarker"


COMPUTE_KINDS = (
    LayerKind.DW_CONV3,
    LayerKind.PW_CONV1,
    LayerKind.CONV_KXK,
    LayerKind.DENSE,
)


@dataclass(frozen=True)
class TensorShape:
    channels: int
    height: int
    width: int

    def __post_init__(self):
        for dim in (self.channels, self.height, self.width):
            if dim < 1:
                raise ShapeError(f"Shape {self} has a dimension below 1")

    @property
    def elements(self):
        return self.channels * self.height * self.width

    def __str__(self):
        return f"{self.channels}x{self.height}x{self.width}"


@dataclass(frozen=True)
class Layer:
    kind: LayerKind
    out_channels: Optional[int] = None
    stride: int = 1
    k: int = 0
    in_channels: Optional[int] = None

    def __post_init__(self):
        if self.kind == LayerKind.CONV_KXK and (self.k < 1 or self.k % 2 == 0):
            raise ConfigError(f"ConvKxK needs an odd kernel size, got k={self.k}")
        if self.kind in (LayerKind.PW_CONV1, LayerKind.CONV_KXK, LayerKind.DENSE):
            if self.out_channels is None or self.out_channels < 1:
                raise ConfigError(f"{self.kind.value} needs out_channels >= 1")
        if self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")
        if self.stride != 1 and self.kind in (LayerKind.DW_CONV3, LayerKind.PW_CONV1):
            raise ConfigError(f"{self.kind.value} only supports stride 1")

    @property
    def kernel(self):
        if self.kind == LayerKind.DW_CONV3:
            return 3
        if self.kind == LayerKind.PW_CONV1:
            return 1
        if self.kind == LayerKind.CONV_KXK:
            return self.k
        return 0

    @property
    def is_compute(self):
        return self.kind in COMPUTE_KINDS

    @property
    def is_pool(self):
        return self.kind == LayerKind.MAXPOOL2X2

    @property
    def token(self):
        """ Short name used to build bundle names, e.g. dw3, pw48, conv5x5-192 """
        if self.kind == LayerKind.DW_CONV3:
            return "dw3"
        if self.kind == LayerKind.PW_CONV1:
            return f"pw{self.out_channels}"
        if self.kind == LayerKind.CONV_KXK:
            suffix = f"s{self.stride}" if self.stride != 1 else ""
            return f"conv{self.k}x{self.k}{suffix}-{self.out_channels}"
        if self.kind == LayerKind.DENSE:
            return f"fc{self.out_channels}"
        if self.kind == LayerKind.MAXPOOL2X2:
            return "pool"
        return "backend"

    def scaled(self, mult):
        """ Copy with out_channels grown by MULT

        A multiplier of exactly 1 keeps channels verbatim; otherwise the product is
        rounded half-up to the nearest multiple of 8, never below 8. Layers whose
        channels follow their input (depthwise, pooling) are returned unchanged.
        """
        mult = to_fraction(mult)
        if mult == 1 or self.kind not in (
            LayerKind.PW_CONV1,
            LayerKind.CONV_KXK,
            LayerKind.DENSE,
        ):
            return self
        grown = Fraction(self.out_channels) * mult
        rounded = int((grown / 8 + Fraction(1, 2)) // 1) * 8
        return replace(self, out_channels=max(8, rounded), in_channels=None)


def dw_conv3():
    return Layer(LayerKind.DW_CONV3)


def pw_conv1(out_channels):
    return Layer(LayerKind.PW_CONV1, out_channels=out_channels)


def conv(k, out_channels, stride=1):
    return Layer(LayerKind.CONV_KXK, out_channels=out_channels, stride=stride, k=k)


def dense(out_channels):
    return Layer(LayerKind.DENSE, out_channels=out_channels)


def maxpool2x2():
    return Layer(LayerKind.MAXPOOL2X2, stride=2)


def bundle_name(layers):
    return slugify(" ".join(layer.token for layer in layers))


@dataclass(frozen=True)
class Bundle:
    layers: Tuple[Layer, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ConfigError("A bundle needs at least one layer")
        if not any(layer.is_compute for layer in self.layers):
            raise ConfigError(
                f"Bundle '{self.name}' has no compute layer (only pooling)"
            )
        if any(layer.kind == LayerKind.BACKEND for layer in self.layers):
            raise ConfigError("The back-end marker cannot be part of a bundle")
        if not self.name:
            object.__setattr__(self, "name", bundle_name(self.layers))


@dataclass(frozen=True)
class Backend:
    """ Zero-cost back-end marker; LAYERS are only counted when asked for """

    name: str = "bbox-regression"
    layers: Tuple[Layer, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))


@dataclass(frozen=True)
class NetworkSpec:
    input: TensorShape
    bundle: Bundle
    n_reps: int
    channel_mults: Tuple[Fraction, ...]
    pool_after: Tuple[bool, ...]
    head: Tuple[Layer, ...] = ()
    tail: Tuple[Layer, ...] = ()
    backend: Backend = field(default_factory=Backend)

    def __post_init__(self):
        object.__setattr__(
            self, "channel_mults", tuple(to_fraction(m) for m in self.channel_mults)
        )
        object.__setattr__(self, "pool_after", tuple(bool(p) for p in self.pool_after))
        object.__setattr__(self, "head", tuple(self.head))
        object.__setattr__(self, "tail", tuple(self.tail))
        if self.n_reps < 1:
            raise ConfigError(f"n_reps must be >= 1, got {self.n_reps}")
        if len(self.channel_mults) != self.n_reps:
            raise ConfigError(
                f"channel_mults has {len(self.channel_mults)} entries for {self.n_reps} reps"
            )
        if len(self.pool_after) != self.n_reps:
            raise ConfigError(
                f"pool_after has {len(self.pool_after)} entries for {self.n_reps} reps"
            )
        if any(m <= 0 for m in self.channel_mults):
            raise ConfigError("channel multipliers must be positive")


def validate(net):
    """ Check NET fully, shapes included; returns the shape trace """
    from codesign.network.shapes import infer_shapes

    return infer_shapes(net)


def build_dnn(
    bundle, n_reps, channel_mults, pool_after, input, backend=None, head=(), tail=()
):
    """ Grow BUNDLE into a network of N_REPS repetitions

    Parameters
    ----------
    bundle : Bundle
        building block repeated n_reps times
    n_reps : int
        number of repetitions, >= 1
    channel_mults : list
        per-repetition channel multipliers (int, float, Fraction or "p/q")
    pool_after : list of bool
        insert a 2x2 max-pooling after repetition i
    input : TensorShape
        network input
    backend : Backend
        back-end marker, default zero-cost

    Returns
    -------
    NetworkSpec
        a network that passes validate

    Raises
    ------
    InvalidGrowth
        when pooling would make a dimension vanish
    """
    net = NetworkSpec(
        input=input,
        bundle=bundle,
        n_reps=n_reps,
        channel_mults=tuple(channel_mults),
        pool_after=tuple(pool_after),
        head=tuple(head),
        tail=tuple(tail),
        backend=backend if backend is not None else Backend(),
    )
    try:
        validate(net)
    except ShapeError as e:
        raise InvalidGrowth(f"Cannot grow '{bundle.name}' to {n_reps} reps: {e}")
    return net


@dataclass(frozen=True)
class QuantGroup:
    name: str
    patterns: Tuple[str, ...]
    bits: int

    def __post_init__(self):
        object.__setattr__(self, "patterns", tuple(self.patterns))
        check_bits(self.bits, f"group '{self.name}'")

    def matches(self, layer_name):
        return any(fnmatchcase(layer_name, p) for p in self.patterns)


def check_bits(bits, what):
    if not isinstance(bits, int) or not 1 <= bits <= 32:
        raise ConfigError(f"bits of {what} must be an integer in [1, 32], got {bits}")


@dataclass(frozen=True)
class QuantScheme:
    fm_bits: int
    groups: Tuple[QuantGroup, ...]
    baseline_bits: int = 32

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        check_bits(self.fm_bits, "fm_bits")
        check_bits(self.baseline_bits, "baseline_bits")

    def group_for(self, layer_name):
        for group in self.groups:
            if group.matches(layer_name):
                return group
        raise UnmappedLayer(layer_name)

    def weight_bits(self, layer_name):
        return self.group_for(layer_name).bits

    def with_fm_bits(self, bits):
        return replace(self, fm_bits=bits)


def uniform_scheme(weight_bits, fm_bits, baseline_bits=32):
    return QuantScheme(
        fm_bits=fm_bits,
        groups=(QuantGroup("all", ("*",), weight_bits),),
        baseline_bits=baseline_bits,
    )
