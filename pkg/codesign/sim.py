#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# sim.py
#
#   Discrete-event simulation of one tile pipeline on simpy, used to
#   cross-check the analytical latency of a TilePlan.
#
#   One process per stage; a Store of buffer_slots tiles sits between
#   consecutive stages. A stage takes a tile, works on it, then blocks
#   until the downstream buffer has room. All tiles wait in front of
#   the first stage at cycle 0 and the last stage drains into a sink.
#
#######################################################################

from collections import OrderedDict, namedtuple
from dataclasses import dataclass
from typing import Optional, Tuple

import simpy

from codesign.config import validate
from codesign.exceptions import ConfigError
from codesign.hardware.tiling import Stage, TilePlan, bundle_latency_cycles

TraceEvent = namedtuple("TraceEvent", ["cycle", "stage", "tile", "event"])

Deviation = namedtuple("Deviation", ["absolute", "relative"])


@dataclass(frozen=True)
class SimConfig:
    plan: TilePlan
    jitter: Optional[Tuple[Tuple[int, ...], ...]] = None
    buffer_slots: int = 1
    trace: bool = False

    def __post_init__(self):
        if self.buffer_slots < 1:
            raise ConfigError(f"buffer_slots must be >= 1, got {self.buffer_slots}")
        if self.jitter is None:
            return
        jitter = tuple(tuple(stage) for stage in self.jitter)
        object.__setattr__(self, "jitter", jitter)
        if len(jitter) != len(self.plan.stages):
            raise ConfigError(
                f"jitter has {len(jitter)} stage lists, the plan has "
                f"{len(self.plan.stages)} stages"
            )
        for stage, overrides in zip(self.plan.stages, jitter):
            if len(overrides) != self.plan.tiles:
                raise ConfigError(
                    f"jitter for stage {stage.name} has {len(overrides)} entries, "
                    f"expected one per tile ({self.plan.tiles})"
                )
            if any(not isinstance(c, int) or c < 1 for c in overrides):
                raise ConfigError(
                    f"jitter for stage {stage.name} must be whole cycles >= 1"
                )

    def duration(self, stage_index, tile):
        if self.jitter is not None:
            return self.jitter[stage_index][tile]
        return self.plan.stages[stage_index].per_tile_cycles


@dataclass(frozen=True)
class SimResult:
    total_cycles: int
    stage_names: Tuple[str, ...]
    busy_cycles: Tuple[int, ...]
    stall_cycles: Tuple[int, ...]
    trace: Tuple[TraceEvent, ...] = ()

    def utilization(self):
        if not self.total_cycles:
            return [0.0 for _ in self.busy_cycles]
        return [busy / self.total_cycles for busy in self.busy_cycles]

    def to_json(self):
        return OrderedDict(
            [
                ("total_cycles", self.total_cycles),
                (
                    "stages",
                    [
                        OrderedDict(
                            [
                                ("name", name),
                                ("busy_cycles", busy),
                                ("stall_cycles", stall),
                                ("utilization", util),
                            ]
                        )
                        for name, busy, stall, util in zip(
                            self.stage_names,
                            self.busy_cycles,
                            self.stall_cycles,
                            self.utilization(),
                        )
                    ],
                ),
            ]
        )


def simulate(cfg):
    """ Run the tile pipeline of CFG.plan to completion

    Parameters
    ----------
    cfg : SimConfig
        plan, optional per-tile overrides, buffer depth and whether to keep a trace

    Returns
    -------
    SimResult
        total_cycles is the cycle at which the last tile leaves the last stage
    """
    plan = cfg.plan
    n_stages, tiles = len(plan.stages), plan.tiles
    env = simpy.Environment()
    queues = (
        [simpy.Store(env)]
        + [simpy.Store(env, capacity=cfg.buffer_slots) for _ in range(n_stages - 1)]
        + [simpy.Store(env)]
    )
    for tile in range(tiles):
        queues[0].put(tile)

    busy = [0] * n_stages
    stall = [0] * n_stages
    trace = []
    done = [0]

    def stage_process(index):
        name = plan.stages[index].name
        started = False
        for _ in range(tiles):
            waiting_since = env.now
            tile = yield queues[index].get()
            if started:
                stall[index] += env.now - waiting_since
            started = True
            if cfg.trace:
                trace.append(TraceEvent(env.now, name, tile, "start"))
            duration = cfg.duration(index, tile)
            yield env.timeout(duration)
            busy[index] += duration
            if cfg.trace:
                trace.append(TraceEvent(env.now, name, tile, "finish"))
            blocked_since = env.now
            yield queues[index + 1].put(tile)
            stall[index] += env.now - blocked_since
        if index == n_stages - 1:
            done[0] = env.now

    for index in range(n_stages):
        env.process(stage_process(index))
    env.run()

    return SimResult(
        total_cycles=done[0],
        stage_names=tuple(s.name for s in plan.stages),
        busy_cycles=tuple(busy),
        stall_cycles=tuple(stall),
        trace=tuple(trace),
    )


def compare(sim, analytical):
    """ Absolute and relative deviation of a simulated total from the analytical one """
    total = sim.total_cycles if isinstance(sim, SimResult) else sim
    absolute = abs(total - analytical)
    if analytical:
        relative = absolute / analytical
    else:
        relative = 0.0 if absolute == 0 else float("inf")
    return Deviation(absolute, relative)


def plan_from_json(obj, path=None):
    """ TilePlan from a plan document or from one segment of an accelerator descriptor """
    validate(obj, "plan", path=path)
    return TilePlan(
        stages=tuple(
            Stage(s.get("name", f"s{i}"), s["per_tile_cycles"])
            for i, s in enumerate(obj["stages"])
        ),
        tiles=obj["tiles"],
        name=obj.get("name", "plan"),
    )


def plan_to_json(plan, buffer_slots=None):
    obj = OrderedDict(
        [
            ("name", plan.name),
            ("tiles", plan.tiles),
            (
                "stages",
                [
                    OrderedDict([("name", s.name), ("per_tile_cycles", s.per_tile_cycles)])
                    for s in plan.stages
                ],
            ),
        ]
    )
    if buffer_slots is not None:
        obj["buffer_slots"] = buffer_slots
    return obj


def jitter_from_json(obj, path=None):
    validate(obj, "jitter", path=path)
    return tuple(tuple(stage) for stage in obj["overrides"])


def trace_records(result):
    return [
        OrderedDict(
            [("cycle", e.cycle), ("stage", e.stage), ("tile", e.tile), ("event", e.event)]
        )
        for e in result.trace
    ]


def simulate_and_compare(cfg):
    """ (SimResult, Deviation) of CFG against bundle_latency_cycles of its plan """
    result = simulate(cfg)
    return result, compare(result, bundle_latency_cycles(cfg.plan))
