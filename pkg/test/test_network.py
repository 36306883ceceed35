#!/usr/bin/env python3

"""
Test the network description, shape inference and size accounting
"""

import os
from fractions import Fraction
from itertools import product
from unittest import TestCase, main

import numpy as np

from codesign.config import data_path
from codesign.exceptions import (
    ChannelMismatch,
    ConfigError,
    InvalidGrowth,
    SchemaError,
    UnmappedLayer,
)
from codesign.network.accounting import (
    MEGABYTE,
    compression_rate,
    fm_bytes,
    layer_macs,
    layer_params,
    macs,
    param_bytes,
    param_count,
    size_report,
)
from codesign.network.ir import (
    Bundle,
    Layer,
    LayerKind,
    QuantGroup,
    QuantScheme,
    TensorShape,
    build_dnn,
    conv,
    dense,
    dw_conv3,
    maxpool2x2,
    pw_conv1,
    uniform_scheme,
)
from codesign.network.serialize import (
    design_from_json,
    design_to_json,
    load_design,
    network_to_json,
)
from codesign.network.shapes import final_shape, flatten, infer_shapes

INPUT = TensorShape(3, 160, 360)
MULTS = ("1/2", 1, "3/2", 2)


def fixture(name):
    return data_path("fixtures", name)


def random_bundle(rng, widths=(8, 16, 48)):
    layers = []
    for _ in range(int(rng.integers(1, 4))):
        kind = int(rng.integers(0, 4))
        width = int(rng.choice(widths))
        if kind == 0:
            layers.append(dw_conv3())
        elif kind == 1:
            layers.append(pw_conv1(width))
        elif kind == 2:
            layers.append(conv(3, width))
        else:
            layers.append(conv(5, width, stride=2))
    return Bundle(tuple(layers))


def random_net(rng, tiny=False):
    """ A random valid network; tiny ones keep every shape within 8x8x8 """
    n = int(rng.integers(1, 4))
    if tiny:
        dims = (int(d) for d in rng.integers(1, 9, size=3))
        shape, bundle, mults = TensorShape(*dims), random_bundle(rng, (4, 8)), [1] * n
    else:
        shape, bundle = TensorShape(3, 32, 32), random_bundle(rng)
        mults = [MULTS[int(rng.integers(0, len(MULTS)))] for _ in range(n)]
    pools = [bool(rng.integers(0, 2)) for _ in range(n)]
    tail = (dense(10),) if rng.integers(0, 2) else ()
    try:
        return build_dnn(bundle, n, mults, pools, shape, tail=tail)
    except InvalidGrowth:
        return build_dnn(bundle, n, mults, [False] * n, shape, tail=tail)


def count_macs(layer, shape):
    """ Multiply-accumulates of LAYER, one output position and kernel tap at a time """
    channels, height, width = shape.channels, shape.height, shape.width
    count = 0
    if layer.kind == LayerKind.DW_CONV3:
        for _ in product(range(channels), range(height), range(width)):
            for _ in product(range(3), range(3)):
                count += 1
    elif layer.kind == LayerKind.PW_CONV1:
        for _ in product(range(layer.out_channels), range(height), range(width)):
            for _ in range(channels):
                count += 1
    elif layer.kind == LayerKind.CONV_KXK:
        rows, cols = range(0, height, layer.stride), range(0, width, layer.stride)
        for _ in product(range(layer.out_channels), rows, cols):
            for _ in product(range(channels), range(layer.k), range(layer.k)):
                count += 1
    elif layer.kind == LayerKind.DENSE:
        for _ in range(layer.out_channels):
            for _ in product(range(channels), range(height), range(width)):
                count += 1
    return count


class TestNetworkIr(TestCase):
    def setUp(self):
        self.dnn_a, self.scheme_a = load_design(fixture("dnn_a.json"))

    def test_dnn_a_shapes(self):
        self.assertEqual(final_shape(self.dnn_a), TensorShape(10, 20, 45))
        trace = infer_shapes(self.dnn_a)
        by_name = {t.name: t for t in trace}
        self.assertEqual(by_name["r1.l1"].output, TensorShape(48, 160, 360))
        self.assertEqual(by_name["r1.pool"].output, TensorShape(48, 80, 180))
        self.assertEqual(by_name["r4.l1"].output, TensorShape(384, 20, 45))

    def test_grown_skeleton_matches_fixture(self):
        bundle = Bundle((dw_conv3(), pw_conv1(48)))
        net = build_dnn(bundle, 4, [1, 2, 4, 8], [True, True, True, False], INPUT)
        fixture_layers = [
            (n.name, n.layer) for n in flatten(self.dnn_a) if n.segment != "tail"
        ]
        self.assertEqual([(n.name, n.layer) for n in flatten(net)], fixture_layers)

    def test_layer_names(self):
        names = [n.name for n in flatten(self.dnn_a)]
        self.assertEqual(names[:3], ["r1.l0", "r1.l1", "r1.pool"])
        self.assertEqual(names[-1], "t0")
        self.assertNotIn("r4.pool", names)

    def test_too_many_pools(self):
        bundle = Bundle((dw_conv3(), pw_conv1(16)))
        with self.assertRaises(InvalidGrowth):
            build_dnn(bundle, 3, [1, 1, 1], [True, True, True], TensorShape(3, 4, 4))

    def test_declared_input_channels(self):
        bundle = Bundle((Layer(LayerKind.PW_CONV1, out_channels=8, in_channels=5),))
        with self.assertRaises(ChannelMismatch):
            build_dnn(bundle, 1, [1], [False], TensorShape(3, 8, 8))

    def test_bad_layers(self):
        with self.assertRaises(ConfigError):
            Layer(LayerKind.CONV_KXK, out_channels=8, k=4)
        with self.assertRaises(ConfigError):
            Layer(LayerKind.PW_CONV1)
        with self.assertRaises(ConfigError):
            Bundle((maxpool2x2(),))
        with self.assertRaises(ConfigError):
            build_dnn(Bundle((dw_conv3(),)), 2, [1], [False, False], INPUT)

    def test_channel_scaling(self):
        layer = pw_conv1(48)
        self.assertIs(layer.scaled(1), layer)
        self.assertEqual(layer.scaled(2).out_channels, 96)
        self.assertEqual(layer.scaled("1/3").out_channels, 16)
        self.assertEqual(pw_conv1(20).scaled(Fraction(1, 2)).out_channels, 8)
        self.assertEqual(dw_conv3().scaled(4), dw_conv3())

    def test_bundle_names(self):
        self.assertEqual(Bundle((dw_conv3(), pw_conv1(48))).name, "dw3-pw48")
        self.assertEqual(self.dnn_a.bundle.name, "dw3-pw48")


class TestAccounting(TestCase):
    def setUp(self):
        self.dnn_a, self.scheme_a = load_design(fixture("dnn_a.json"))
        self.dnn_b, self.scheme_b = load_design(fixture("dnn_b.json"))
        self.alexnet, self.alexnet_fp32 = load_design(fixture("alexnet.json"))

    def test_dnn_a_params(self):
        self.assertEqual(param_count(self.dnn_a).total, 103803)
        self.assertEqual(param_count(self.dnn_a).per_layer["r1.l0"], 27)
        self.assertEqual(param_count(self.dnn_a).per_layer["r1.pool"], 0)

    def test_dnn_a_bytes(self):
        self.assertEqual(param_bytes(self.dnn_a, uniform_scheme(16, 8)).total, 207606)
        self.assertEqual(param_bytes(self.dnn_a, self.scheme_a).total, 207606)

    def test_per_layer_ceiling(self):
        net = build_dnn(Bundle((dw_conv3(),)), 1, [1], [False], TensorShape(3, 8, 8))
        # 27 weights at 3 bits is 81 bits, 10.125 bytes
        result = param_bytes(net, uniform_scheme(3, 8))
        self.assertEqual(result.total, 11)
        self.assertEqual(result.exact, Fraction(81, 8))

    def test_macs(self):
        net = build_dnn(
            Bundle((dw_conv3(), pw_conv1(4))), 1, [1], [False], TensorShape(2, 5, 6)
        )
        self.assertEqual(macs(net).per_layer["r1.l0"], 9 * 2 * 30)
        self.assertEqual(macs(net).per_layer["r1.l1"], 2 * 4 * 30)

    def test_macs_match_position_count(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            net = random_net(rng, tiny=True)
            counted = macs(net).per_layer
            for t in infer_shapes(net):
                self.assertEqual(
                    layer_macs(t.layer, t.input, t.output), count_macs(t.layer, t.input)
                )
                self.assertEqual(counted[t.name], count_macs(t.layer, t.input), t.name)
            self.assertEqual(
                macs(net).total,
                sum(count_macs(t.layer, t.input) for t in infer_shapes(net)),
            )

    def test_bytes_grow_with_bits(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            net = random_net(rng)
            previous = None
            for bits in range(1, 33):
                current = param_bytes(net, uniform_scheme(bits, 8))
                if previous is not None:
                    self.assertGreater(current.exact, previous.exact)
                    self.assertGreaterEqual(current.total, previous.total)
                previous = current
            previous = None
            for bits in range(1, 33):
                current = fm_bytes(net, uniform_scheme(8, bits))
                if previous is not None:
                    self.assertGreaterEqual(current.peak, previous.peak)
                    self.assertGreaterEqual(current.total, previous.total)
                previous = current
            # a whole byte more per value always shows after rounding
            for bits in range(1, 25):
                self.assertGreater(
                    param_bytes(net, uniform_scheme(bits + 8, 8)).total,
                    param_bytes(net, uniform_scheme(bits, 8)).total,
                )
                self.assertGreater(
                    fm_bytes(net, uniform_scheme(8, bits + 8)).total,
                    fm_bytes(net, uniform_scheme(8, bits)).total,
                )

    def test_group_bits_only_grow_their_layers(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            net = random_net(rng)
            sizes = []
            for bits in range(1, 33):
                groups = (
                    QuantGroup("reps", ("r*",), bits),
                    QuantGroup("rest", ("*",), 8),
                )
                sizes.append(param_bytes(net, QuantScheme(8, groups)))
            exact = [s.exact for s in sizes]
            self.assertEqual(exact, sorted(set(exact)))
            self.assertEqual(len({s.per_group["rest"] for s in sizes}), 1)

    def test_params_grow_with_reps(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            bundle = random_bundle(rng)
            mults = [MULTS[int(rng.integers(0, len(MULTS)))] for _ in range(6)]
            pools = [bool(rng.integers(0, 2)) for _ in range(6)]
            try:
                build_dnn(bundle, 6, mults, pools, TensorShape(3, 64, 64))
            except InvalidGrowth:
                pools = [False] * 6
            counts = [
                param_count(
                    build_dnn(bundle, n, mults[:n], pools[:n], TensorShape(3, 64, 64))
                ).total
                for n in range(1, 7)
            ]
            self.assertEqual(counts, sorted(set(counts)))

    def test_uniform_compression_on_random_nets(self):
        rng = np.random.default_rng(14)
        for _ in range(30):
            net = random_net(rng)
            weight_bits, fm_bits = (int(b) for b in rng.integers(1, 33, size=2))
            self.assertEqual(
                compression_rate(net, uniform_scheme(weight_bits, fm_bits)),
                (Fraction(32, weight_bits), Fraction(32, fm_bits)),
            )

    def test_alexnet_size(self):
        self.assertEqual(param_count(self.alexnet).total, 61090496)
        size = param_bytes(self.alexnet, uniform_scheme(32, 32)).total / MEGABYTE
        self.assertLessEqual(abs(size - 237.9), 0.05 * 237.9)

    def test_uniform_compression(self):
        params, fms = compression_rate(self.alexnet, uniform_scheme(8, 8))
        self.assertEqual(params, 4)
        self.assertEqual(fms, 4)
        params, _ = compression_rate(self.dnn_a, uniform_scheme(11, 8))
        self.assertEqual(params, Fraction(32, 11))

    def test_mixed_compression(self):
        net, scheme = load_design(fixture("alexnet_mixed.json"))
        baseline_bits = quant_bits = 0
        for t in infer_shapes(net):
            count = layer_params(t.layer, t.input)
            baseline_bits += 32 * count
            if t.name == "t0":
                quant_bits += 2 * count
            elif t.name.startswith("t"):
                quant_bits += 4 * count
            elif t.name == "h0":
                quant_bits += 16 * count
            else:
                quant_bits += 8 * count
        params, _ = compression_rate(net, scheme)
        self.assertEqual(params, Fraction(baseline_bits, quant_bits))
        self.assertGreater(params, 4)

    def test_fm_bytes_double_with_precision(self):
        a = fm_bytes(self.dnn_a, self.scheme_a)
        b = fm_bytes(self.dnn_b, self.scheme_b)
        self.assertEqual(b.total, 2 * a.total)
        self.assertEqual(b.peak, 2 * a.peak)
        self.assertEqual(a.peak, 48 * 160 * 360)

    def test_unmapped_layer(self):
        scheme = QuantScheme(8, (QuantGroup("reps", ("r*",), 8),))
        with self.assertRaises(UnmappedLayer) as cm:
            param_bytes(self.dnn_a, scheme)
        self.assertEqual(cm.exception.layer_name, "t0")

    def test_first_matching_group_wins(self):
        scheme = QuantScheme(
            8, (QuantGroup("first", ("r1.*",), 4), QuantGroup("rest", ("*",), 16))
        )
        result = param_bytes(self.dnn_a, scheme)
        self.assertEqual(result.per_layer["r1.l1"], 144 * 4 // 8)
        self.assertEqual(result.per_group["first"], (27 * 4 + 7) // 8 + 72)

    def test_size_report(self):
        report = size_report(self.alexnet, uniform_scheme(8, 8))
        self.assertEqual(report["params"], 61090496)
        self.assertEqual(report["param_compression"], 4.0)
        self.assertAlmostEqual(report["param_mb"] * 4, report["param_mb_baseline"])


class TestSerialization(TestCase):
    def test_fixture_roundtrip(self):
        net, scheme = load_design(fixture("dnn_c.json"))
        again, again_scheme = design_from_json(design_to_json(net, scheme))
        self.assertEqual(again, net)
        self.assertEqual(again_scheme, scheme)

    def test_fractional_multipliers(self):
        net, _ = load_design(fixture("alexnet.json"))
        self.assertEqual(net.channel_mults, (1, Fraction(2, 3), Fraction(2, 3)))
        self.assertEqual(network_to_json(net)["channel_mults"], [1, "2/3", "2/3"])

    def test_schema_error_pointer(self):
        with self.assertRaises(SchemaError) as cm:
            design_from_json(
                {"net": {"input": [3, 8, 8], "bundle": {"layers": [{"kind": "Conv9"}]},
                         "n_reps": 1, "channel_mults": [1], "pool_after": [False]}}
            )
        self.assertTrue(cm.exception.pointer.startswith("/net/bundle/layers/0"))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_design(os.path.join("no", "such", "design.json"))


if __name__ == "__main__":
    main()
