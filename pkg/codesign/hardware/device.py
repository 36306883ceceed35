#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# device.py
#
#   The target device: resource budget, DSP packing model, accelerator
#   architecture knobs and power coefficients, as read from a device
#   file (schema device.v1).
#
#######################################################################

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

from codesign.config import data_path, load_config, validate
from codesign.exceptions import ConfigError

DEFAULT_DEVICE = data_path("devices", "pynq_z1.json")


@dataclass(frozen=True)
class DeviceBudget:
    dsp_total: int
    bram18_total: int
    lut_total: int
    offchip_bw: float
    clock: float

    def __post_init__(self):
        for name in ("dsp_total", "bram18_total", "lut_total", "offchip_bw", "clock"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"device budget {name} must be positive")


@dataclass(frozen=True)
class DspModel:
    """ DSP blocks per multiplier as a step function of weight bits + FM bits

    thresholds is a tuple of (limit, dsps) pairs; the first pair whose limit is at least
    wb + fb applies, and a limit of None matches anything.
    """

    thresholds: Tuple[Tuple[Optional[int], int], ...] = ((20, 1), (36, 2), (None, 4))

    def __post_init__(self):
        thresholds = tuple((limit, dsps) for limit, dsps in self.thresholds)
        object.__setattr__(self, "thresholds", thresholds)
        if not thresholds:
            raise ConfigError("DSP model needs at least one threshold")
        limits = [limit for limit, _ in thresholds]
        if None in limits[:-1]:
            raise ConfigError("only the last DSP threshold may be open-ended")
        bounded = [limit for limit in limits if limit is not None]
        counts = [dsps for _, dsps in thresholds]
        if any(a >= b for a, b in zip(bounded, bounded[1:])):
            raise ConfigError(f"DSP threshold limits must increase strictly: {limits}")
        if any(a >= b for a, b in zip(counts, counts[1:])):
            raise ConfigError(f"DSP counts must increase strictly: {counts}")


@dataclass(frozen=True)
class ArchConfig:
    max_multipliers: Optional[int] = 64
    max_tile_rows: int = 4
    pool_lanes: int = 64
    fm_banks: int = 1
    block_bits: int = 18432
    fm_offchip: bool = True
    overlap_transfers: bool = False
    lut_base: int = 5000
    lut_per_mult: int = 60
    lut_per_stage: int = 800


@dataclass(frozen=True)
class PowerConfig:
    p_static: float = 1.2
    k_dsp: float = 3e-11
    k_bram: float = 2e-11
    k_lut: float = 5e-13


@dataclass(frozen=True)
class DeviceProfile:
    """ Everything hw_models needs to know about one device """

    budget: DeviceBudget
    dsp_model: DspModel = field(default_factory=DspModel)
    arch: ArchConfig = field(default_factory=ArchConfig)
    power: PowerConfig = field(default_factory=PowerConfig)
    name: str = "device"

    def with_budget(self, **kwargs):
        return replace(self, budget=replace(self.budget, **kwargs))

    def with_arch(self, **kwargs):
        return replace(self, arch=replace(self.arch, **kwargs))


def device_from_json(obj, path=None):
    validate(obj, "device", path=path)
    budget = obj["budget"]
    return DeviceProfile(
        budget=DeviceBudget(
            dsp_total=budget["dsp"],
            bram18_total=budget["bram18"],
            lut_total=budget["lut"],
            offchip_bw=budget["offchip_bw"],
            clock=budget["clock"],
        ),
        dsp_model=DspModel(
            tuple(tuple(t) for t in obj.get("dsp_model", {}).get("thresholds", []))
            or DspModel().thresholds
        ),
        arch=ArchConfig(**obj.get("arch", {})),
        power=PowerConfig(**obj.get("power", {})),
        name=obj.get("name", "device"),
    )


def load_device(path=None):
    """ Read a device file, the shipped Pynq-Z1 profile when PATH is None """
    path = path or DEFAULT_DEVICE
    return device_from_json(load_config(path), path=path)
