#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# oracle/__init__.py
#
#   Picks an oracle from its command-line spelling:
#     surrogate        synthetic QoR, see surrogate.py
#     exec:<command>   external endpoint, see external.py
#
#######################################################################

from codesign.exceptions import ConfigError
from codesign.oracle.cache import cached
from codesign.oracle.external import DEFAULT_TIMEOUT, ExternalOracle
from codesign.oracle.surrogate import SurrogateOracle


def make_oracle(spec, timeout=DEFAULT_TIMEOUT, store=None):
    """ Oracle for SPEC, always behind a response cache (persisted when STORE is set) """
    if spec == "surrogate":
        inner = SurrogateOracle()
    elif spec.startswith("exec:") and spec[len("exec:") :].strip():
        inner = ExternalOracle(spec[len("exec:") :].strip(), timeout=timeout)
    else:
        raise ConfigError(f"unknown oracle '{spec}': use surrogate or exec:<command>")
    return cached(inner, store)
