#!/usr/bin/env python3

"""
Test the QoR oracles: protocol codec, surrogate, external endpoints and the cache
"""

import os
import tempfile
from unittest import TestCase, main

import numpy as np

from codesign.config import data_path
from codesign.exceptions import (
    ConfigError,
    NonZeroExit,
    OracleFailure,
    OracleTimeout,
    ProtocolError,
)
from codesign.network.accounting import param_count
from codesign.network.ir import (
    Bundle,
    TensorShape,
    build_dnn,
    dw_conv3,
    pw_conv1,
    uniform_scheme,
)
from codesign.network.serialize import load_design
from codesign.oracle import make_oracle
from codesign.oracle.base import (
    Oracle,
    OracleRequest,
    OracleResponse,
    decode_request,
    decode_response,
    encode_request,
)
from codesign.oracle.cache import CachedOracle, cached
from codesign.oracle.external import ExternalOracle, endpoint_argv
from codesign.oracle.surrogate import SurrogateConfig, SurrogateOracle, surrogate_qor
from codesign.util import load_jsonl


class CountingOracle(Oracle):
    name = "counting"

    def __init__(self):
        self.calls = 0

    def evaluate(self, request):
        self.calls += 1
        return OracleResponse(qor=0.25, metric="iou")


class TestProtocol(TestCase):
    def setUp(self):
        self.net, self.scheme = load_design(data_path("fixtures", "tiny_net.json"))
        self.request = OracleRequest.for_design(self.net, self.scheme)

    def test_request_line(self):
        line = encode_request(self.request)
        self.assertTrue(line.endswith("\n"))
        self.assertEqual(line.count("\n"), 1)
        self.assertTrue(line.startswith('{"v":1,"net":'))
        self.assertEqual(decode_request(line), self.request)

    def test_fingerprint(self):
        again = OracleRequest.for_design(self.net, self.scheme)
        self.assertEqual(again.fingerprint(), self.request.fingerprint())
        longer = OracleRequest.for_design(self.net, self.scheme, epochs=40)
        self.assertNotEqual(longer.fingerprint(), self.request.fingerprint())
        self.assertEqual(len(self.request.fingerprint()), 64)

    def test_decode_response(self):
        response = decode_response(b'{"v":1,"status":"ok","metric":"iou","qor":0.593}\nextra')
        self.assertTrue(response.ok)
        self.assertEqual(response.qor, 0.593)
        self.assertEqual(response.metric, "iou")

    def test_empty_output(self):
        with self.assertRaises(ProtocolError) as cm:
            decode_response(b"", self.request)
        self.assertEqual(cm.exception.offset, 0)
        self.assertEqual(cm.exception.request, self.request.to_json())

    def test_malformed_output(self):
        with self.assertRaises(ProtocolError) as cm:
            decode_response(b'{"v":1,"status":', self.request)
        self.assertGreater(cm.exception.offset, 0)
        self.assertIn("byte", str(cm.exception))

    def test_out_of_range_qor(self):
        with self.assertRaises(ProtocolError):
            decode_response(b'{"v":1,"status":"ok","qor":1.5}\n')
        with self.assertRaises(ProtocolError):
            decode_response(b'{"v":2,"status":"ok","qor":0.5}\n')

    def test_error_status(self):
        class Refusing(Oracle):
            def evaluate(self, request):
                return OracleResponse(qor=None, status="error", message="no GPU")

        with self.assertRaises(OracleFailure) as cm:
            Refusing().score(self.net, self.scheme)
        self.assertIn("no GPU", str(cm.exception))
        self.assertEqual(cm.exception.request["v"], 1)


class TestSurrogate(TestCase):
    def setUp(self):
        self.net, _ = load_design(data_path("fixtures", "dnn_a.json"))

    def test_range_and_determinism(self):
        qor = surrogate_qor(self.net, uniform_scheme(16, 8))
        self.assertGreater(qor, 0)
        self.assertLess(qor, 1)
        self.assertEqual(qor, surrogate_qor(self.net, uniform_scheme(16, 8)))

    def test_more_bits_score_higher(self):
        low = surrogate_qor(self.net, uniform_scheme(8, 8))
        self.assertGreater(surrogate_qor(self.net, uniform_scheme(16, 8)), low)
        self.assertGreater(surrogate_qor(self.net, uniform_scheme(8, 16)), low)

    def test_saturated_factors(self):
        params = param_count(self.net).total
        # M0 this small drives 1 - exp(-M/M0) to exactly 1
        half = SurrogateConfig(P0=params, M0=1e-9, c_w=0.0, c_f=0.0)
        self.assertEqual(
            surrogate_qor(self.net, uniform_scheme(16, 8), half), half.A / 2
        )
        fm_only = SurrogateConfig(A=1.0, P0=0.0, M0=1e-9, c_w=0.0, c_f=1.0)
        self.assertEqual(
            surrogate_qor(self.net, uniform_scheme(16, 8), fm_only), 0.99609375
        )
        self.assertEqual(
            surrogate_qor(self.net, uniform_scheme(2, 16), fm_only), 1 - 2 ** -16
        )

    def test_feature_maps_weigh_more(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(1, 5))
            bundle = Bundle((dw_conv3(), pw_conv1(int(rng.choice([8, 16, 32, 48])))))
            mults = [int(rng.choice([1, 2, 4])) for _ in range(n)]
            net = build_dnn(bundle, n, mults, [False] * n, TensorShape(3, 32, 32))
            self.assertLess(
                surrogate_qor(net, uniform_scheme(16, 4)),
                surrogate_qor(net, uniform_scheme(4, 16)),
            )

    def test_oracle_marks_synthetic(self):
        oracle = SurrogateOracle()
        response = oracle.score(self.net, uniform_scheme(16, 8))
        self.assertTrue(oracle.synthetic)
        self.assertTrue(response.synthetic)
        self.assertEqual(response.metric, "surrogate")


class TestExternalOracle(TestCase):
    data_dir = os.path.join(os.path.dirname(__file__), "data")

    def setUp(self):
        self.net, self.scheme = load_design(data_path("fixtures", "tiny_net.json"))

    def endpoint(self, name):
        return ExternalOracle(os.path.join(self.data_dir, name), timeout=20)

    def test_python_endpoint_argv(self):
        argv = endpoint_argv("score.py --fast")
        self.assertTrue(argv[1:] == ["score.py", "--fast"])
        self.assertEqual(endpoint_argv("train --fast"), ["train", "--fast"])

    def test_stub(self):
        response = self.endpoint("oracle_stub.py").score(self.net, self.scheme)
        self.assertEqual(response.qor, 0.5)
        self.assertEqual(response.metric, "iou")

    def test_broken(self):
        with self.assertRaises(ProtocolError) as cm:
            self.endpoint("oracle_broken.py").score(self.net, self.scheme)
        self.assertGreater(cm.exception.offset, 0)
        self.assertEqual(cm.exception.request["net"]["n_reps"], 1)

    def test_nonzero_exit(self):
        with self.assertRaises(NonZeroExit) as cm:
            self.endpoint("oracle_exit.py").score(self.net, self.scheme)
        self.assertEqual(cm.exception.returncode, 3)
        self.assertIn("out of GPU memory", cm.exception.diagnostics)

    def test_error_response(self):
        with self.assertRaises(OracleFailure) as cm:
            self.endpoint("oracle_error.py").score(self.net, self.scheme)
        self.assertIn("dataset missing", str(cm.exception))

    def test_timeout(self):
        oracle = ExternalOracle(os.path.join(self.data_dir, "oracle_hang.py"), timeout=1)
        with self.assertRaises(OracleTimeout):
            oracle.score(self.net, self.scheme)

    def test_missing_program(self):
        oracle = ExternalOracle("/no/such/oracle-program")
        with self.assertRaises(OracleFailure) as cm:
            oracle.score(self.net, self.scheme)
        self.assertIsNotNone(cm.exception.request)


class TestCache(TestCase):
    def setUp(self):
        self.net, self.scheme = load_design(data_path("fixtures", "tiny_net.json"))
        self.tempdirobj = tempfile.TemporaryDirectory(
            prefix="tmpdir_test_oracle_cache_", dir="."
        )
        self.tempdir = self.tempdirobj.name

    def tearDown(self):
        self.tempdirobj.cleanup()

    def test_identical_requests_hit(self):
        inner = CountingOracle()
        oracle = CachedOracle(inner)
        first = oracle.score(self.net, self.scheme)
        second = oracle.score(self.net, self.scheme)
        self.assertEqual(first, second)
        self.assertEqual(inner.calls, 1)
        self.assertEqual((oracle.hits, oracle.misses), (1, 1))
        oracle.score(self.net, self.scheme.with_fm_bits(16))
        self.assertEqual(inner.calls, 2)

    def test_epochs_are_part_of_the_key(self):
        inner = CountingOracle()
        oracle = cached(inner)
        oracle.score(self.net, self.scheme, epochs=20)
        oracle.score(self.net, self.scheme, epochs=40)
        oracle.score(self.net, self.scheme, epochs=40)
        self.assertEqual(inner.calls, 2)

    def test_persistent_store(self):
        store = os.path.join(self.tempdir, "responses.jsonl")
        CachedOracle(CountingOracle(), store).score(self.net, self.scheme)
        records = load_jsonl(store)
        self.assertEqual(len(records), 1)
        self.assertEqual(records[0]["response"]["qor"], 0.25)

        inner = CountingOracle()
        reloaded = CachedOracle(inner, store)
        self.assertEqual(len(reloaded), 1)
        self.assertEqual(reloaded.score(self.net, self.scheme).qor, 0.25)
        self.assertEqual(inner.calls, 0)

    def test_make_oracle(self):
        oracle = make_oracle("surrogate")
        self.assertIsInstance(oracle, CachedOracle)
        self.assertEqual(oracle.name, "surrogate")
        self.assertTrue(oracle.synthetic)
        self.assertEqual(make_oracle("exec:train.sh --quick").name, "exec:train.sh --quick")
        with self.assertRaises(ConfigError):
            make_oracle("random")
        with self.assertRaises(ConfigError):
            make_oracle("exec:")


if __name__ == "__main__":
    main()
