#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# base.py
#
#   QoR oracle protocol, version 1: one compact JSON line per request,
#   one per response.
#
#     request:  {"v":1,"net":{...},"scheme":{...},"epochs":20,"dataset":"dac-sdc"}
#     response: {"v":1,"status":"ok","metric":"iou","qor":0.593}
#
#######################################################################

import json
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

from codesign.config import validate
from codesign.exceptions import ConfigError, OracleFailure, ProtocolError, SchemaError
from codesign.network.serialize import network_to_json, scheme_to_json
from codesign.util import canonical_json, sha256_text

PROTOCOL_VERSION = 1
DEFAULT_EPOCHS = 20
DEFAULT_DATASET = "dac-sdc"


@dataclass(frozen=True)
class OracleRequest:
    net: dict
    scheme: dict
    epochs: int = DEFAULT_EPOCHS
    dataset: str = DEFAULT_DATASET

    def __post_init__(self):
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise ConfigError(f"epochs must be an integer >= 1, got {self.epochs}")

    @classmethod
    def for_design(cls, net, scheme, epochs=DEFAULT_EPOCHS, dataset=DEFAULT_DATASET):
        return cls(network_to_json(net), scheme_to_json(scheme), epochs, dataset)

    def to_json(self):
        return OrderedDict(
            [
                ("v", PROTOCOL_VERSION),
                ("net", self.net),
                ("scheme", self.scheme),
                ("epochs", self.epochs),
                ("dataset", self.dataset),
            ]
        )

    def fingerprint(self):
        """ SHA-256 of the canonical (net, scheme, epochs, dataset) serialization """
        return sha256_text(
            canonical_json(
                {
                    "net": self.net,
                    "scheme": self.scheme,
                    "epochs": self.epochs,
                    "dataset": self.dataset,
                }
            )
        )


@dataclass(frozen=True)
class OracleResponse:
    qor: Optional[float]
    metric: str = ""
    status: str = "ok"
    message: str = ""
    synthetic: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.status == "ok" and (self.qor is None or not 0 <= self.qor <= 1):
            raise ConfigError(f"an ok response needs qor in [0, 1], got {self.qor}")

    @property
    def ok(self):
        return self.status == "ok"

    def to_json(self):
        obj = OrderedDict([("v", PROTOCOL_VERSION), ("status", self.status)])
        if self.metric:
            obj["metric"] = self.metric
        if self.qor is not None:
            obj["qor"] = self.qor
        if self.message:
            obj["message"] = self.message
        return obj

    @classmethod
    def from_json(cls, obj, synthetic=False):
        return cls(
            qor=obj.get("qor"),
            metric=obj.get("metric", ""),
            status=obj["status"],
            message=obj.get("message", ""),
            synthetic=synthetic,
        )


def encode_line(obj):
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False) + "\n"


def encode_request(request):
    return encode_line(request.to_json())


def decode_request(line):
    """ OracleRequest from one protocol line; used by endpoints written in Python """
    obj = json.loads(line, object_pairs_hook=OrderedDict)
    validate(obj, "oracle_request")
    return OracleRequest(obj["net"], obj["scheme"], obj["epochs"], obj["dataset"])


def decode_response(data, request=None, diagnostics=""):
    """ Parse the first line of an endpoint's output

    Parameters
    ----------
    data : bytes or str
        everything the endpoint wrote on its output
    request : OracleRequest
        attached to any error raised

    Raises
    ------
    ProtocolError
        empty output, malformed JSON or a response that breaks the schema, with the
        byte offset of the problem
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    request_json = request.to_json() if request is not None else None
    line = data.split("\n", 1)[0].strip("\r")
    if not line.strip():
        raise ProtocolError(
            "oracle wrote no response line",
            offset=0,
            request=request_json,
            diagnostics=diagnostics,
        )
    try:
        obj = json.loads(line, object_pairs_hook=OrderedDict)
    except json.JSONDecodeError as e:
        raise ProtocolError(
            f"malformed oracle response: {e.msg}",
            offset=len(line[: e.pos].encode("utf-8")),
            request=request_json,
            diagnostics=diagnostics,
        )
    try:
        validate(obj, "oracle_response")
    except SchemaError as e:
        raise ProtocolError(
            f"invalid oracle response: {e}",
            offset=0,
            request=request_json,
            diagnostics=diagnostics,
        )
    return OracleResponse.from_json(obj)


def check_response(response, request):
    """ RESPONSE itself, or OracleFailure when the endpoint reported an error """
    if not response.ok:
        raise OracleFailure(
            f"oracle reported an error: {response.message or 'no message'}",
            request=request.to_json(),
        )
    return response


class Oracle:
    """ Anything that scores a design; subclasses implement evaluate """

    name = "oracle"
    synthetic = False

    def evaluate(self, request):
        raise NotImplementedError

    def score(self, net, scheme, epochs=DEFAULT_EPOCHS, dataset=DEFAULT_DATASET):
        request = OracleRequest.for_design(net, scheme, epochs, dataset)
        return check_response(self.evaluate(request), request)
