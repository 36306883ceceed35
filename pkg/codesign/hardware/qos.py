#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# qos.py
#
#   Whole-network QoS: segments planned one by one and run back to back
#   on the same folded hardware, resources taken as the maximum over
#   segments, power and efficiency on top.
#
#   Also builds the accelerator descriptor that cmd_export writes.
#
#######################################################################

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Tuple

from codesign._version import __version__
from codesign.hardware.resources import (
    Resources,
    bram_blocks,
    check_fit,
    lut_estimate,
    ordered_violations,
    power_estimate,
)
from codesign.hardware.tiling import (
    TilePlan,
    pipeline_cycles,
    plan_tiles,
    segment_cycles,
    segments,
)
from codesign.network.serialize import design_to_json, shape_to_json


@dataclass(frozen=True)
class QosReport:
    total_cycles: int
    latency: float
    fps: float
    dsp_used: int
    bram18_used: int
    lut_used: int
    power: float
    efficiency: float
    feasible: bool
    violations: Tuple[str, ...] = ()
    clock: float = 0.0
    plans: Tuple[TilePlan, ...] = field(default=(), compare=False, repr=False)

    @property
    def resources(self):
        return Resources(self.dsp_used, self.bram18_used, self.lut_used)

    def to_json(self):
        """ Serializable form, per-segment breakdown included """
        return OrderedDict(
            [
                ("total_cycles", self.total_cycles),
                ("latency", self.latency),
                ("fps", self.fps),
                ("dsp_used", self.dsp_used),
                ("bram18_used", self.bram18_used),
                ("lut_used", self.lut_used),
                ("power", self.power),
                ("efficiency", self.efficiency),
                ("feasible", self.feasible),
                ("violations", list(self.violations)),
                ("clock", self.clock),
                (
                    "segments",
                    [
                        OrderedDict(
                            [
                                ("name", p.name),
                                ("tiles", p.tiles),
                                ("tile_rows", p.tile_rows),
                                ("compute_cycles", p.latency_cycles),
                                ("weight_load_cycles", p.weight_load_cycles),
                                ("fm_transfer_cycles", p.fm_transfer_cycles),
                                ("total_cycles", p.total_cycles),
                                ("multipliers", p.multipliers),
                                ("dsp", p.dsp_used),
                                ("bram18", p.bram18_used),
                            ]
                        )
                        for p in self.plans
                    ],
                ),
            ]
        )


def plan_network(net, scheme, device):
    """ One non-strict TilePlan per segment of NET, in execution order """
    return [
        plan_tiles(seg.layers, seg.input, scheme, device, strict=False, name=seg.name)
        for seg in segments(net)
    ]


def network_qos(net, scheme, device):
    """ QoS of NET quantized by SCHEME on DEVICE

    Never raises for lack of resources: the report is marked infeasible and lists the
    violated resources ("dsp", "bram", "lut", "fm_buffer").

    Parameters
    ----------
    net : NetworkSpec
    scheme : QuantScheme
    device : DeviceProfile

    Returns
    -------
    QosReport
    """
    budget, arch = device.budget, device.arch
    plans = plan_network(net, scheme, device)
    total_cycles = sum(p.total_cycles for p in plans)
    dsp_used = max(p.dsp_used for p in plans)
    bram_used = max(p.bram18_used for p in plans)
    lut_used = max(lut_estimate(p.multipliers, len(p.stages), arch) for p in plans)

    fm_violation = []
    if not arch.fm_offchip and len(plans) > 1:
        # feature maps handed from one segment to the next stay on chip
        peak_bits = max(p.output.elements for p in plans[:-1]) * scheme.fm_bits
        fm_blocks = bram_blocks(peak_bits, arch.fm_banks, arch.block_bits)
        if bram_used + fm_blocks > budget.bram18_total:
            fm_violation.append("fm_buffer")
        bram_used += fm_blocks

    resources = Resources(dsp_used, bram_used, lut_used)
    verdict = check_fit(resources, budget)
    violations = ordered_violations(
        verdict.violations, fm_violation, *(p.violations for p in plans)
    )
    power = power_estimate(resources, budget.clock, device.power)
    fps = budget.clock / total_cycles
    return QosReport(
        total_cycles=total_cycles,
        latency=total_cycles / budget.clock,
        fps=fps,
        dsp_used=dsp_used,
        bram18_used=bram_used,
        lut_used=lut_used,
        power=power,
        efficiency=fps / power,
        feasible=not violations,
        violations=tuple(violations),
        clock=budget.clock,
        plans=tuple(plans),
    )


def accelerator_descriptor(net, scheme, device, report=None):
    """ Everything the hardware models decided for one design, as a JSON-ready document """
    report = report or network_qos(net, scheme, device)
    descriptor = OrderedDict(
        [
            ("version", 1),
            ("generator", f"codesign {__version__}"),
            ("device", device.name),
            ("clock", device.budget.clock),
            ("overlap_transfers", device.arch.overlap_transfers),
            ("design", design_to_json(net, scheme)),
            ("segments", []),
        ]
    )
    for plan in report.plans:
        descriptor["segments"].append(
            OrderedDict(
                [
                    ("name", plan.name),
                    ("input", shape_to_json(plan.input)),
                    ("output", shape_to_json(plan.output)),
                    ("tiles", plan.tiles),
                    ("tile_rows", plan.tile_rows),
                    (
                        "stages",
                        [
                            OrderedDict(
                                [
                                    ("name", s.name),
                                    ("kind", s.kind),
                                    ("parallel_mults", s.parallel_mults),
                                    ("dsp_per_mult", s.dsp_per_mult),
                                    ("dsp", s.dsp),
                                    ("macs", s.macs),
                                    ("per_tile_cycles", s.per_tile_cycles),
                                ]
                            )
                            for s in plan.stages
                        ],
                    ),
                    (
                        "buffers",
                        [
                            OrderedDict(
                                [
                                    ("name", b.name),
                                    ("bits", b.bits),
                                    ("banks", b.banks),
                                    ("bram18", b.blocks),
                                ]
                            )
                            for b in plan.buffers
                        ],
                    ),
                    ("weight_load_cycles", plan.weight_load_cycles),
                    ("fm_transfer_cycles", plan.fm_transfer_cycles),
                    ("total_cycles", plan.total_cycles),
                ]
            )
        )
    descriptor["totals"] = OrderedDict(
        [
            ("total_cycles", report.total_cycles),
            ("fps", report.fps),
            ("dsp_used", report.dsp_used),
            ("bram18_used", report.bram18_used),
            ("lut_used", report.lut_used),
            ("power", report.power),
            ("efficiency", report.efficiency),
        ]
    )
    descriptor["feasible"] = report.feasible
    descriptor["violations"] = list(report.violations)
    return descriptor


def descriptor_cycles(descriptor):
    """ Total cycles recomputed from the per-stage numbers of a descriptor alone """
    overlap = descriptor.get("overlap_transfers", False)
    total = 0
    for seg in descriptor["segments"]:
        latency = pipeline_cycles(
            (s["per_tile_cycles"] for s in seg["stages"]), seg["tiles"]
        )
        transfers = seg["weight_load_cycles"] + seg["fm_transfer_cycles"]
        total += segment_cycles(latency, transfers, overlap)
    return total
