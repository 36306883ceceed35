#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# resources.py
#
#   Analytical resource models: DSP packing, BRAM blocks, feature-map
#   buffers, the LUT proxy, power, and the fit check against a budget.
#
#######################################################################

from collections import OrderedDict, namedtuple
from fractions import Fraction
from math import ceil

from codesign.exceptions import ConfigError
from codesign.util import to_fraction

BLOCK_BITS = 18432
PING_PONG = 2

# order in which violations are always reported
RESOURCE_NAMES = ("dsp", "bram", "lut", "fm_buffer")

Resources = namedtuple("Resources", ["dsp", "bram18", "lut"])
Resources.__new__.__defaults__ = (0, 0, 0)

Verdict = namedtuple("Verdict", ["feasible", "violations"])


def dsp_per_mult(wb, fb, model):
    """ DSP blocks one wb x fb multiplier occupies under MODEL """
    total = wb + fb
    for limit, dsps in model.thresholds:
        if limit is None or total <= limit:
            return dsps
    # past a bounded last limit the widest packing applies
    return model.thresholds[-1][1]


def array_dsp_usage(multipliers, wb, fb, model):
    return multipliers * dsp_per_mult(wb, fb, model)


def bram_blocks(buffer_bits, banks=1, block_bits=BLOCK_BITS):
    """ BRAM18 blocks for a buffer of BUFFER_BITS split over BANKS equal banks

    Each bank is rounded up to whole blocks on its own; an empty buffer takes no block.
    """
    if banks < 1:
        raise ConfigError(f"banks must be >= 1, got {banks}")
    if buffer_bits <= 0:
        return 0
    return banks * int(ceil(Fraction(buffer_bits) / (banks * block_bits)))


def fm_buffer_bits(shape, fm_bits, resize=1, ping_pong=PING_PONG):
    """ Bits of a double-buffered feature map of SHAPE resized by RESIZE

    Parameters
    ----------
    shape : TensorShape
        feature map before resizing
    fm_bits : int
        bits per activation
    resize : int, float, Fraction or "p/q"
        spatial resize factor in (0, 1]; 0.89 is taken as exactly 89/100
    ping_pong : int
        number of copies held (2 for ping-pong buffering)
    """
    resize = to_fraction(resize)
    if not 0 < resize <= 1:
        raise ConfigError(f"resize must be in (0, 1], got {resize}")
    height = int(ceil(resize * shape.height))
    width = int(ceil(resize * shape.width))
    return ping_pong * height * width * shape.channels * fm_bits


def resize_sweep(shape, curves, resizes, block_bits=BLOCK_BITS):
    """ BRAM blocks of the input feature-map buffer over a grid of resize factors

    CURVES is a list of (fm_bits, banks) pairs; the result has one entry per curve with
    the block count at each resize.
    """
    results = []
    for fm_bits, banks in curves:
        points = [
            OrderedDict(
                [
                    ("resize", r),
                    ("buffer_bits", fm_buffer_bits(shape, fm_bits, r)),
                    (
                        "bram18",
                        bram_blocks(fm_buffer_bits(shape, fm_bits, r), banks, block_bits),
                    ),
                ]
            )
            for r in resizes
        ]
        results.append(
            OrderedDict([("fm_bits", fm_bits), ("banks", banks), ("points", points)])
        )
    return results


def lut_estimate(multipliers, stages, arch):
    return arch.lut_base + arch.lut_per_mult * multipliers + arch.lut_per_stage * stages


def power_estimate(resources, clock, power_cfg):
    """ Static power plus a dynamic term linear in used resources and clock """
    dynamic = (
        power_cfg.k_dsp * resources.dsp
        + power_cfg.k_bram * resources.bram18
        + power_cfg.k_lut * resources.lut
    )
    return power_cfg.p_static + dynamic * clock


def check_fit(resources, budget):
    violations = []
    if resources.dsp > budget.dsp_total:
        violations.append("dsp")
    if resources.bram18 > budget.bram18_total:
        violations.append("bram")
    if resources.lut > budget.lut_total:
        violations.append("lut")
    return Verdict(not violations, violations)


def ordered_violations(*groups):
    """ Union of violation lists in the canonical resource order """
    seen = set()
    for group in groups:
        seen.update(group)
    return [name for name in RESOURCE_NAMES if name in seen] + sorted(
        seen - set(RESOURCE_NAMES)
    )


def ceil_bits_over_bw(bits, offchip_bw):
    """ Cycles to move BITS at OFFCHIP_BW bits per cycle """
    if bits <= 0:
        return 0
    return int(ceil(Fraction(bits) / to_fraction(offchip_bw)))
