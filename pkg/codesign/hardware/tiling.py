#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# tiling.py
#
#   Tile planning for the row-band pipelined accelerator: every layer
#   of a segment is one pipeline stage, tiles are bands of rows that
#   stream through the stages, and the multiplier array is shared out
#   greedily between stages.
#
#   A network is cut into segments (head, one per repetition, tail)
#   that run one after the other on the same hardware.
#
#######################################################################

from collections import namedtuple
from dataclasses import dataclass
from typing import Optional, Tuple

from codesign.exceptions import ConfigError, Infeasible
from codesign.hardware.resources import (
    PING_PONG,
    array_dsp_usage,
    bram_blocks,
    ceil_bits_over_bw,
    dsp_per_mult,
)
from codesign.log import LOGGER
from codesign.network.accounting import layer_macs, layer_params
from codesign.network.ir import Bundle, LayerKind, TensorShape
from codesign.network.shapes import NamedLayer, flatten, trace_layers
from codesign.util import ceil_div

Segment = namedtuple("Segment", ["name", "layers", "input"])


@dataclass(frozen=True)
class Stage:
    name: str
    per_tile_cycles: int
    parallel_mults: int = 0
    dsp_per_mult: int = 0
    macs: int = 0
    kind: str = ""

    @property
    def dsp(self):
        return self.parallel_mults * self.dsp_per_mult


@dataclass(frozen=True)
class Buffer:
    name: str
    bits: int
    banks: int = 1
    blocks: int = 0


@dataclass(frozen=True)
class TilePlan:
    """ How one segment runs on the accelerator

    Only stages and tiles matter for latency; the other fields describe the resources the
    plan occupies and are filled in by plan_tiles.
    """

    stages: Tuple[Stage, ...]
    tiles: int
    tile_rows: int = 1
    buffers: Tuple[Buffer, ...] = ()
    weight_load_cycles: int = 0
    fm_transfer_cycles: int = 0
    overlap_transfers: bool = False
    name: str = "segment"
    input: Optional[TensorShape] = None
    output: Optional[TensorShape] = None
    violations: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "buffers", tuple(self.buffers))
        object.__setattr__(self, "violations", tuple(self.violations))
        if self.tiles < 1:
            raise ConfigError(f"plan {self.name} needs at least one tile")
        for stage in self.stages:
            if stage.per_tile_cycles < 1:
                raise ConfigError(
                    f"stage {stage.name} of plan {self.name} has per_tile_cycles < 1"
                )

    @property
    def multipliers(self):
        return sum(s.parallel_mults for s in self.stages)

    @property
    def dsp_used(self):
        return sum(s.dsp for s in self.stages)

    @property
    def bram18_used(self):
        return sum(b.blocks for b in self.buffers)

    @property
    def latency_cycles(self):
        return bundle_latency_cycles(self)

    @property
    def total_cycles(self):
        return segment_cycles(
            self.latency_cycles,
            self.weight_load_cycles + self.fm_transfer_cycles,
            self.overlap_transfers,
        )


def pipeline_cycles(stage_cycles, tiles):
    """ Fill time of one tile through every stage, then one slowest stage per extra tile """
    stage_cycles = list(stage_cycles)
    if not stage_cycles:
        return 0
    return sum(stage_cycles) + (tiles - 1) * max(stage_cycles)


def bundle_latency_cycles(plan):
    return pipeline_cycles((s.per_tile_cycles for s in plan.stages), plan.tiles)


def segment_cycles(latency, transfers, overlap=False):
    return max(latency, transfers) if overlap else latency + transfers


def segments(net):
    """ Cut NET into head, per-repetition and tail segments, each with its input shape """
    named = flatten(net)
    trace = trace_layers(named, net.input)
    result = []
    for t, named_layer in zip(trace, named):
        if not result or result[-1].name != t.segment:
            result.append(Segment(t.segment, [], t.input))
        result[-1].layers.append(named_layer)
    return result


def band_rows(trace, rows, top_height):
    """ Input rows a stage holds per tile when the segment input is cut in ROWS-row bands """
    height = trace.input.height
    if trace.layer.kind == LayerKind.DENSE:
        return height
    halo = max(trace.layer.kernel - 1, 0)
    return min(height, ceil_div(rows * height, top_height) + halo)


def plan_tiles(layers, input_shape, scheme, device, strict=True, name=None):
    """ Plan the tiles, buffers and multipliers of one segment

    Parameters
    ----------
    layers : Bundle or list of NamedLayer
        the segment; a bare Bundle is planned as repetition 1 (layers r1.l0, r1.l1, ...)
    input_shape : TensorShape
        feature map entering the segment
    scheme : QuantScheme
        gives the weight bits of each stage and the FM bits
    device : DeviceProfile
        budget, DSP model and architecture knobs
    strict : bool
        raise Infeasible when the segment cannot fit; otherwise fall back to one-row tiles
        and one multiplier per compute stage and list the violations in the plan

    Returns
    -------
    TilePlan
    """
    if isinstance(layers, Bundle):
        name = name or "r1"
        layers = [
            NamedLayer(f"{name}.l{j}", layer, name) for j, layer in enumerate(layers.layers)
        ]
    name = name or "segment"
    trace = [
        t
        for t in trace_layers(layers, input_shape)
        if t.layer.kind != LayerKind.BACKEND
    ]
    if not trace:
        raise ConfigError(f"segment {name} has no layer to plan")
    budget, arch, fm_bits = device.budget, device.arch, scheme.fm_bits
    top_height = input_shape.height
    violations = []

    weight_bits = {}
    for i, t in enumerate(trace):
        if t.layer.is_compute:
            weight_bits[i] = layer_params(t.layer, t.input) * scheme.weight_bits(t.name)
    weight_buffers = [
        Buffer(f"{trace[i].name}.weights", bits, 1, bram_blocks(bits, 1, arch.block_bits))
        for i, bits in weight_bits.items()
        if bits > 0
    ]

    def fm_buffers(rows):
        buffers = []
        for t in trace:
            bits = (
                PING_PONG
                * t.input.channels
                * band_rows(t, rows, top_height)
                * t.input.width
                * fm_bits
            )
            buffers.append(
                Buffer(
                    f"{t.name}.in",
                    bits,
                    arch.fm_banks,
                    bram_blocks(bits, arch.fm_banks, arch.block_bits),
                )
            )
        last = trace[-1].output
        out_rows = min(last.height, ceil_div(rows * last.height, top_height))
        bits = PING_PONG * last.channels * out_rows * last.width * fm_bits
        buffers.append(
            Buffer(
                f"{trace[-1].name}.out",
                bits,
                arch.fm_banks,
                bram_blocks(bits, arch.fm_banks, arch.block_bits),
            )
        )
        return buffers

    tile_rows, buffers = None, None
    for rows in range(min(arch.max_tile_rows, top_height), 0, -1):
        candidate = fm_buffers(rows) + weight_buffers
        if sum(b.blocks for b in candidate) <= budget.bram18_total:
            tile_rows, buffers = rows, candidate
            break
    if tile_rows is None:
        if strict:
            raise Infeasible(
                f"Segment {name} needs more than {budget.bram18_total} BRAM18 "
                "even with one-row tiles",
                ["bram"],
            )
        tile_rows, buffers = 1, fm_buffers(1) + weight_buffers
        violations.append("bram")
    tiles = ceil_div(top_height, tile_rows)

    compute = [i for i, t in enumerate(trace) if t.layer.is_compute]
    stage_macs = [layer_macs(t.layer, t.input, t.output) for t in trace]
    tile_macs = [ceil_div(m, tiles) for m in stage_macs]
    wbits = {i: scheme.weight_bits(trace[i].name) for i in compute}
    packing = {i: dsp_per_mult(wbits[i], fm_bits, device.dsp_model) for i in compute}
    mults = {i: 1 for i in compute}

    def cycles(i):
        return max(1, ceil_div(tile_macs[i], mults[i]))

    used = sum(
        array_dsp_usage(mults[i], wbits[i], fm_bits, device.dsp_model) for i in compute
    )
    if used > budget.dsp_total:
        if strict:
            raise Infeasible(
                f"Segment {name} needs {used} DSPs for one multiplier per stage, "
                f"budget is {budget.dsp_total}",
                ["dsp"],
            )
        violations.append("dsp")
    else:
        while compute:
            slowest = max(compute, key=lambda i: (cycles(i), -i))
            if cycles(slowest) <= 1:
                break
            if arch.max_multipliers is not None and sum(mults.values()) >= arch.max_multipliers:
                break
            if used + packing[slowest] > budget.dsp_total:
                break
            mults[slowest] += 1
            used += packing[slowest]

    stages = []
    for i, t in enumerate(trace):
        if t.layer.is_compute:
            stages.append(
                Stage(t.name, cycles(i), mults[i], packing[i], stage_macs[i], t.layer.kind.value)
            )
        else:
            per_tile = ceil_div(ceil_div(t.input.elements, tiles), arch.pool_lanes)
            stages.append(Stage(t.name, max(1, per_tile), kind=t.layer.kind.value))

    fm_transfer = 0
    if arch.fm_offchip:
        fm_transfer = ceil_bits_over_bw(
            (input_shape.elements + trace[-1].output.elements) * fm_bits, budget.offchip_bw
        )
    plan = TilePlan(
        stages=tuple(stages),
        tiles=tiles,
        tile_rows=tile_rows,
        buffers=tuple(buffers),
        weight_load_cycles=ceil_bits_over_bw(sum(weight_bits.values()), budget.offchip_bw),
        fm_transfer_cycles=fm_transfer,
        overlap_transfers=arch.overlap_transfers,
        name=name,
        input=input_shape,
        output=trace[-1].output,
        violations=tuple(violations),
    )
    LOGGER.debug(
        f"Planned {name}: {tiles} tiles of {tile_rows} rows, {plan.multipliers} multipliers, "
        f"{plan.dsp_used} DSP, {plan.bram18_used} BRAM18, {plan.total_cycles} cycles"
    )
    return plan
