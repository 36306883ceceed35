#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# cache.py
#
#   Response cache keyed by request fingerprint, optionally persisted
#   as an append-only JSON-lines store of {"key", "response"}.
#
#######################################################################

import os
import threading
from collections import OrderedDict

from codesign.log import LOGGER
from codesign.oracle.base import Oracle, OracleResponse
from codesign.util import append_jsonl, load_jsonl


class CachedOracle(Oracle):
    """ Wraps an oracle so that identical requests reach it only once

    Errors and error responses from the inner oracle are passed through, never cached.
    """

    def __init__(self, inner, store=None):
        self.inner = inner
        self.store = store
        self.name = inner.name
        self.synthetic = inner.synthetic
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()
        self._responses = OrderedDict()
        if store is not None and os.path.exists(store):
            for record in load_jsonl(store):
                self._responses[record["key"]] = OracleResponse.from_json(
                    record["response"], synthetic=inner.synthetic
                )
            LOGGER.debug(f"Loaded {len(self._responses)} cached responses from {store}")

    def __len__(self):
        return len(self._responses)

    def evaluate(self, request):
        key = request.fingerprint()
        with self._lock:
            if key in self._responses:
                self.hits += 1
                return self._responses[key]
        response = self.inner.evaluate(request)
        if not response.ok:
            return response
        with self._lock:
            self.misses += 1
            # last writer wins on identical keys
            self._responses[key] = response
            if self.store is not None:
                append_jsonl(
                    self.store,
                    OrderedDict([("key", key), ("response", response.to_json())]),
                )
        return response


def cached(oracle, store=None):
    return CachedOracle(oracle, store)
