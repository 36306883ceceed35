#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# external.py
#
#   QoR from an external endpoint: one child process per request, the
#   request line on its stdin, the response line read from its stdout.
#
#######################################################################

import shlex
import subprocess
import sys

from codesign.exceptions import NonZeroExit, OracleFailure, OracleTimeout
from codesign.log import LOGGER
from codesign.oracle.base import Oracle, decode_response, encode_request

DEFAULT_TIMEOUT = 3600.0
DIAGNOSTICS_LIMIT = 4000


def endpoint_argv(command):
    """ Argument vector for COMMAND; a .py script runs under the current interpreter """
    argv = shlex.split(command)
    if argv and argv[0].endswith(".py"):
        argv = [sys.executable] + argv
    return argv


def tail_text(data):
    text = data.decode("utf-8", errors="replace") if isinstance(data, bytes) else data
    return text[-DIAGNOSTICS_LIMIT:]


class ExternalOracle(Oracle):
    synthetic = False

    def __init__(self, command, timeout=DEFAULT_TIMEOUT):
        self.command = command
        self.argv = endpoint_argv(command)
        self.timeout = timeout
        self.name = f"exec:{command}"

    def evaluate(self, request):
        return external_eval(request, self.argv, self.timeout)


def external_eval(request, endpoint, timeout=DEFAULT_TIMEOUT):
    """ Send REQUEST to ENDPOINT and read back its response

    Parameters
    ----------
    request : OracleRequest
    endpoint : str or list
        command line, or an argument vector
    timeout : float
        seconds before the child is killed

    Returns
    -------
    OracleResponse

    Raises
    ------
    OracleTimeout, NonZeroExit, ProtocolError
        with the request and the tail of the child's stderr attached
    OracleFailure
        if the endpoint cannot be launched at all
    """
    argv = endpoint_argv(endpoint) if isinstance(endpoint, str) else list(endpoint)
    request_json = request.to_json()
    LOGGER.debug(f"Running oracle: {' '.join(argv)}")
    try:
        proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.PIPE
        )
    except OSError as e:
        raise OracleFailure(
            f"cannot launch oracle '{' '.join(argv)}': {e}", request=request_json
        )
    try:
        out, err = proc.communicate(
            encode_request(request).encode("utf-8"), timeout=timeout
        )
    except subprocess.TimeoutExpired:
        proc.kill()
        out, err = proc.communicate()
        raise OracleTimeout(
            f"oracle did not answer within {timeout} s",
            request=request_json,
            diagnostics=tail_text(err),
        )
    if proc.returncode != 0:
        raise NonZeroExit(
            f"oracle exited with status {proc.returncode}",
            proc.returncode,
            request=request_json,
            diagnostics=tail_text(err),
        )
    return decode_response(out, request, diagnostics=tail_text(err))
