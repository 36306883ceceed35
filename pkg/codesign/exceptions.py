#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# exceptions.py
#
#   Errors raised by the codesign library.
#   cli.py is the only place that turns them into exit codes.
#
#######################################################################


class CodesignError(RuntimeError):
    """ Base class for every error the library raises on purpose """


class ShapeError(CodesignError):
    """ A feature map dimension would shrink to zero """


class ChannelMismatch(CodesignError):
    """ A layer's declared input channels disagree with its predecessor """


class InvalidGrowth(CodesignError):
    """ Growing a network (more repetitions, more pools) made a dimension vanish """


class UnmappedLayer(CodesignError):
    """ A layer matched none of the quantization scheme's groups """

    def __init__(self, layer_name):
        super().__init__(f"Layer '{layer_name}' is not mapped to any quantization group")
        self.layer_name = layer_name


class ConfigError(CodesignError):
    """ A configuration file or value could not be used

    path, line and column are filled in when they are known.
    """

    def __init__(self, message, path=None, line=None, column=None):
        location = ""
        if path is not None:
            location = str(path)
            if line is not None:
                location += f":{line}:{column}"
            location += ": "
        super().__init__(location + message)
        self.path = path
        self.line = line
        self.column = column


class SchemaError(ConfigError):
    """ A JSON document does not follow its schema; pointer is a JSON pointer """

    def __init__(self, message, pointer, path=None):
        super().__init__(f"{pointer or '/'}: {message}", path=path)
        self.pointer = pointer or "/"


class Infeasible(CodesignError):
    """ A design cannot be mapped onto the device budget """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class PoolExhausted(CodesignError):
    pass


class EmptyInput(CodesignError):
    pass


class NoFeasibleFound(CodesignError):
    """ The search ended without a design meeting the target

    result holds the complete search result, with its best infeasible design.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class OracleFailure(CodesignError):
    """ The QoR oracle could not answer; request is the one that failed """

    def __init__(self, message, request=None, diagnostics=""):
        super().__init__(message)
        self.request = request
        self.diagnostics = diagnostics


class OracleTimeout(OracleFailure):
    pass


class ProtocolError(OracleFailure):
    def __init__(self, message, offset=0, request=None, diagnostics=""):
        super().__init__(
            f"{message} (at byte {offset})", request=request, diagnostics=diagnostics
        )
        self.offset = offset


class NonZeroExit(OracleFailure):
    def __init__(self, message, returncode, request=None, diagnostics=""):
        super().__init__(message, request=request, diagnostics=diagnostics)
        self.returncode = returncode
