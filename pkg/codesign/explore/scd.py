#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# scd.py
#
#   Stochastic coordinate descent over grown networks: one knob at a
#   time (repetitions, a repetition's channel multiplier, a pool
#   placement, a group's weight bits, the FM bits) moves one step in
#   its ordered domain; the move is kept only if the penalized score
#   strictly improves.
#
#   Every random draw comes from numpy streams spawned from the one
#   search seed. Evaluations may run on worker threads but are merged
#   in proposal order.
#
#######################################################################

from collections import OrderedDict, namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product
from typing import Optional, Tuple

import numpy as np
from slugify import slugify
from tqdm import tqdm

from codesign.config import load_config, resolve_relative, validate
from codesign.exceptions import (
    ChannelMismatch,
    ConfigError,
    InvalidGrowth,
    NoFeasibleFound,
    ShapeError,
)
from codesign.explore.pareto import ParetoSet
from codesign.hardware.device import DeviceProfile
from codesign.hardware.qos import QosReport, network_qos
from codesign.log import LOGGER
from codesign.network.ir import build_dnn
from codesign.network.serialize import design_to_json
from codesign.oracle.base import DEFAULT_DATASET, DEFAULT_EPOCHS
from codesign.util import to_fraction

DesignState = namedtuple(
    "DesignState", ["n_reps", "mults", "pools", "group_bits", "fm_bits"]
)
Proposal = namedtuple("Proposal", ["coordinate", "move", "state"])
Outcome = namedtuple("Outcome", ["net", "scheme", "qos", "qor", "metric"])


@dataclass(frozen=True)
class QosTarget:
    min_fps: float
    device: DeviceProfile
    max_power: Optional[float] = None

    def __post_init__(self):
        if not self.min_fps > 0:
            raise ConfigError(f"min_fps must be > 0, got {self.min_fps}")
        if self.max_power is not None and not self.max_power > 0:
            raise ConfigError(f"max_power must be > 0, got {self.max_power}")

    @property
    def budget(self):
        return self.device.budget


@dataclass(frozen=True)
class SearchSpace:
    """ Domains of the search knobs; empty domains keep the seed design's value """

    n_reps: Tuple[int, int] = (1, 8)
    channel_mults: Tuple[Fraction, ...] = ()
    search_pools: bool = False
    weight_bits: Tuple[int, ...] = ()
    fm_bits: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "n_reps", tuple(self.n_reps))
        object.__setattr__(
            self, "channel_mults", tuple(to_fraction(m) for m in self.channel_mults)
        )
        object.__setattr__(self, "weight_bits", tuple(self.weight_bits))
        object.__setattr__(self, "fm_bits", tuple(self.fm_bits))
        lo, hi = self.n_reps
        if lo < 1 or hi < lo:
            raise ConfigError(f"n_reps range must satisfy 1 <= lo <= hi, got {self.n_reps}")
        if any(m <= 0 for m in self.channel_mults):
            raise ConfigError("channel multipliers must be positive")
        if any(not 1 <= b <= 32 for b in self.weight_bits + self.fm_bits):
            raise ConfigError("bit-widths must be in [1, 32]")


@dataclass(frozen=True)
class SearchConfig:
    seed: int = 0
    max_iters: int = 200
    restarts: int = 50
    penalty: float = 2.0
    k: int = 3
    top_n: int = 3
    batch: int = 1
    jobs: int = 1
    epochs: int = DEFAULT_EPOCHS
    dataset: str = DEFAULT_DATASET
    space: SearchSpace = field(default_factory=SearchSpace)

    def __post_init__(self):
        for name in ("max_iters", "restarts", "k", "top_n", "batch", "jobs", "epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.penalty < 0:
            raise ConfigError(f"penalty must be >= 0, got {self.penalty}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")


@dataclass(frozen=True)
class CandidateDesign:
    net: object
    scheme: object
    qos: QosReport
    qor: float
    score: float
    feasible: bool
    seed: int = 0
    iteration: int = 0
    metric: str = ""
    synthetic: bool = False

    @property
    def name(self):
        return slugify(
            f"{self.net.bundle.name} n{self.net.n_reps} f{self.scheme.fm_bits} "
            f"i{self.iteration}"
        )

    def to_json(self, target=None):
        obj = OrderedDict(
            [
                ("version", 1),
                ("name", self.name),
                ("feasible", self.feasible),
                ("score", self.score),
                ("qor", self.qor),
                ("metric", self.metric),
                ("synthetic", self.synthetic),
                (
                    "provenance",
                    OrderedDict([("seed", self.seed), ("iteration", self.iteration)]),
                ),
                ("design", design_to_json(self.net, self.scheme)),
                ("qos", self.qos.to_json()),
            ]
        )
        if target is not None:
            obj["diagnosis"] = diagnose(self, target)
        return obj


@dataclass
class SearchResult:
    best: Optional[CandidateDesign]
    best_infeasible: Optional[CandidateDesign]
    pareto: ParetoSet
    audit: list
    evaluations: int = 0
    restarts: int = 0

    @property
    def best_any(self):
        return self.best or self.best_infeasible


def meets_target(qos, target):
    if not qos.feasible or qos.fps < target.min_fps:
        return False
    return target.max_power is None or qos.power <= target.max_power


def penalized_score(qos, qor, target, penalty):
    """ qor minus penalty times the relative shortfalls and overflows """
    budget = target.budget
    excess = max(0.0, (target.min_fps - qos.fps) / target.min_fps)
    for used, total in (
        (qos.dsp_used, budget.dsp_total),
        (qos.bram18_used, budget.bram18_total),
        (qos.lut_used, budget.lut_total),
    ):
        excess += max(0.0, (used - total) / total)
    if target.max_power is not None:
        excess += max(0.0, (qos.power - target.max_power) / target.max_power)
    return qor - penalty * excess


def diagnose(candidate, target):
    """ Why CANDIDATE misses TARGET, one sentence per reason """
    qos, budget = candidate.qos, target.budget
    reasons = []
    if qos.fps < target.min_fps:
        reasons.append(f"fps {qos.fps:.4g} below target {target.min_fps:.4g}")
    usage = {
        "dsp": (qos.dsp_used, budget.dsp_total),
        "bram": (qos.bram18_used, budget.bram18_total),
        "lut": (qos.lut_used, budget.lut_total),
    }
    for violation in qos.violations:
        if violation in usage:
            used, total = usage[violation]
            reasons.append(f"{violation} {used} over budget {total}")
        else:
            reasons.append(f"{violation} does not fit on chip")
    if target.max_power is not None and qos.power > target.max_power:
        reasons.append(f"power {qos.power:.4g} W over limit {target.max_power:.4g} W")
    return reasons


class Domains:
    """ Ordered knob domains of a search, with the seed design's values inserted """

    def __init__(self, space, net, scheme):
        lo, hi = space.n_reps
        self.n_reps = (min(lo, net.n_reps), max(hi, net.n_reps))
        self.mults = tuple(sorted(set(space.channel_mults) | set(net.channel_mults)))
        seed_bits = {g.bits for g in scheme.groups}
        self.weight_bits = tuple(sorted(set(space.weight_bits) | seed_bits))
        self.fm_bits = tuple(sorted(set(space.fm_bits) | {scheme.fm_bits}))
        self.search_pools = space.search_pools
        self.group_names = tuple(g.name for g in scheme.groups)

    def coordinates(self, state):
        coords = []
        if self.n_reps[0] < self.n_reps[1]:
            coords.append(("n_reps", None))
        if len(self.mults) > 1:
            coords.extend(("channel_mult", i) for i in range(state.n_reps))
        if self.search_pools:
            coords.extend(("pool_after", i) for i in range(state.n_reps))
        if len(self.weight_bits) > 1:
            coords.extend(("weight_bits", i) for i in range(len(self.group_names)))
        if len(self.fm_bits) > 1:
            coords.append(("fm_bits", None))
        return coords

    def label(self, coordinate):
        kind, index = coordinate
        if kind in ("n_reps", "fm_bits"):
            return kind
        if kind == "weight_bits":
            return f"weight_bits[{self.group_names[index]}]"
        return f"{kind}[{index}]"

    def propose(self, state, coordinate, rng):
        """ One +-1 step of COORDINATE from STATE, direction drawn among the valid ones """
        kind, index = coordinate
        if kind == "pool_after":
            pools = list(state.pools)
            pools[index] = not pools[index]
            move = "+1" if pools[index] else "-1"
            return Proposal(self.label(coordinate), move, state._replace(pools=tuple(pools)))

        if kind == "n_reps":
            position, domain_size = state.n_reps - self.n_reps[0], (
                self.n_reps[1] - self.n_reps[0] + 1
            )
        elif kind == "channel_mult":
            position, domain_size = self.mults.index(state.mults[index]), len(self.mults)
        elif kind == "weight_bits":
            position = self.weight_bits.index(state.group_bits[index])
            domain_size = len(self.weight_bits)
        else:
            position, domain_size = self.fm_bits.index(state.fm_bits), len(self.fm_bits)
        directions = [d for d in (-1, 1) if 0 <= position + d < domain_size]
        step = directions[int(rng.integers(len(directions)))]
        move = f"{step:+d}"

        if kind == "n_reps":
            if step > 0:
                new = state._replace(
                    n_reps=state.n_reps + 1,
                    mults=state.mults + (state.mults[-1],),
                    pools=state.pools + (False,),
                )
            else:
                new = state._replace(
                    n_reps=state.n_reps - 1,
                    mults=state.mults[:-1],
                    pools=state.pools[:-1],
                )
        elif kind == "channel_mult":
            mults = list(state.mults)
            mults[index] = self.mults[position + step]
            new = state._replace(mults=tuple(mults))
        elif kind == "weight_bits":
            bits = list(state.group_bits)
            bits[index] = self.weight_bits[position + step]
            new = state._replace(group_bits=tuple(bits))
        else:
            new = state._replace(fm_bits=self.fm_bits[position + step])
        return Proposal(self.label(coordinate), move, new)

    def all_states(self, seed_state):
        """ Every point of the space, for exhaustive enumeration """
        lo, hi = self.n_reps
        for n in range(lo, hi + 1):
            if self.search_pools:
                pool_options = list(product((False, True), repeat=n))
            else:
                kept = seed_state.pools[:n]
                pool_options = [kept + (False,) * (n - len(kept))]
            for mults in product(self.mults, repeat=n):
                for pools in pool_options:
                    for bits in product(self.weight_bits, repeat=len(self.group_names)):
                        for fb in self.fm_bits:
                            yield DesignState(n, tuple(mults), tuple(pools), bits, fb)


class Evaluator:
    """ Turns design states into scored candidates for one search """

    def __init__(self, seed_design, target, oracle, cfg):
        self.net, self.scheme = seed_design
        self.target = target
        self.oracle = oracle
        self.cfg = cfg

    def seed_state(self):
        return DesignState(
            self.net.n_reps,
            tuple(self.net.channel_mults),
            tuple(self.net.pool_after),
            tuple(g.bits for g in self.scheme.groups),
            self.scheme.fm_bits,
        )

    def realize(self, state):
        net = build_dnn(
            self.net.bundle,
            state.n_reps,
            state.mults,
            state.pools,
            self.net.input,
            backend=self.net.backend,
            head=self.net.head,
            tail=self.net.tail,
        )
        groups = tuple(
            replace(g, bits=bits) for g, bits in zip(self.scheme.groups, state.group_bits)
        )
        scheme = replace(self.scheme, groups=groups, fm_bits=state.fm_bits)
        return net, scheme

    def outcome(self, state):
        """ Outcome of STATE, or None when the network cannot be built """
        try:
            net, scheme = self.realize(state)
        except (InvalidGrowth, ShapeError, ChannelMismatch) as e:
            LOGGER.debug(f"Rejected unbuildable proposal: {e}")
            return None
        qos = network_qos(net, scheme, self.target.device)
        response = self.oracle.score(net, scheme, self.cfg.epochs, self.cfg.dataset)
        return Outcome(net, scheme, qos, response.qor, response.metric)

    def candidate(self, outcome, iteration):
        return CandidateDesign(
            net=outcome.net,
            scheme=outcome.scheme,
            qos=outcome.qos,
            qor=outcome.qor,
            score=penalized_score(
                outcome.qos, outcome.qor, self.target, self.cfg.penalty
            ),
            feasible=meets_target(outcome.qos, self.target),
            seed=self.cfg.seed,
            iteration=iteration,
            metric=outcome.metric,
            synthetic=self.oracle.synthetic,
        )


def audit_line(iteration, coordinate, move, candidate, accepted):
    return OrderedDict(
        [
            ("iter", iteration),
            ("coordinate", coordinate),
            ("move", move),
            ("fps", candidate.qos.fps if candidate else None),
            ("qor", candidate.qor if candidate else None),
            ("score", candidate.score if candidate else None),
            ("accepted", accepted),
        ]
    )


def scd_search(seed_design, target, oracle, cfg, progress=False):
    """ Search around SEED_DESIGN for the best design meeting TARGET

    Parameters
    ----------
    seed_design : tuple
        (NetworkSpec, QuantScheme) the descent starts and restarts from
    target : QosTarget
    oracle : Oracle
        QoR source, usually behind a cache
    cfg : SearchConfig
    progress : bool
        show a progress bar on stderr

    Returns
    -------
    SearchResult
        best is the best-scoring design that meets the target

    Raises
    ------
    NoFeasibleFound
        when no evaluated design meets the target; its result holds the best
        infeasible design
    OracleFailure
        from the oracle, with the failing request attached
    """
    evaluator = Evaluator(seed_design, target, oracle, cfg)
    net, scheme = seed_design
    domains = Domains(cfg.space, net, scheme)
    root = np.random.SeedSequence(cfg.seed)
    rng = np.random.default_rng(root.spawn(1)[0])

    result = SearchResult(None, None, ParetoSet(), [])
    memo = {}

    def record(iteration, proposal, outcome, current_score):
        """ Audit one evaluation and offer it to the running bests; returns the candidate """
        if outcome is None:
            result.audit.append(
                audit_line(iteration, proposal.coordinate, proposal.move, None, False)
            )
            return None
        candidate = evaluator.candidate(outcome, iteration)
        first_visit = proposal.state not in memo
        if candidate.feasible:
            if first_visit:
                result.pareto.insert(candidate)
            if result.best is None or candidate.score > result.best.score:
                result.best = candidate
        elif (
            result.best_infeasible is None
            or candidate.score > result.best_infeasible.score
        ):
            result.best_infeasible = candidate
        accepted = current_score is None or candidate.score > current_score
        result.audit.append(
            audit_line(iteration, proposal.coordinate, proposal.move, candidate, accepted)
        )
        return candidate

    seed_state = evaluator.seed_state()
    seed_outcome = evaluator.outcome(seed_state)
    if seed_outcome is None:
        raise ConfigError("the seed design cannot be built")
    seed = record(0, Proposal("seed", None, seed_state), seed_outcome, None)
    memo[seed_state] = seed_outcome
    current_state, current_score = seed_state, seed.score

    iteration, stalls = 0, 0
    with ThreadPoolExecutor(max_workers=cfg.jobs) as executor, tqdm(
        total=cfg.max_iters, desc="search", disable=not progress
    ) as bar:
        while iteration < cfg.max_iters:
            coordinates = domains.coordinates(current_state)
            if not coordinates:
                break
            proposals = []
            for _ in range(min(cfg.batch, cfg.max_iters - iteration)):
                coordinate = coordinates[int(rng.integers(len(coordinates)))]
                proposals.append(domains.propose(current_state, coordinate, rng))
            # one evaluation per distinct state of the batch
            pending = OrderedDict()
            for p in proposals:
                if p.state not in memo and p.state not in pending:
                    pending[p.state] = executor.submit(evaluator.outcome, p.state)
            futures = [pending.get(p.state) for p in proposals]
            for proposal, future in zip(proposals, futures):
                outcome = memo[proposal.state] if future is None else future.result()
                iteration += 1
                bar.update(1)
                candidate = record(iteration, proposal, outcome, current_score)
                memo.setdefault(proposal.state, outcome)
                if candidate is not None and candidate.score > current_score:
                    current_state, current_score = proposal.state, candidate.score
                    stalls = 0
                    LOGGER.debug(
                        f"iter {iteration}: accepted {proposal.coordinate} "
                        f"{proposal.move}, score {candidate.score:.6f}"
                    )
                    continue
                stalls += 1
                if stalls >= cfg.restarts:
                    LOGGER.debug(f"iter {iteration}: {stalls} rejections, restarting")
                    current_state, current_score = seed_state, seed.score
                    rng = np.random.default_rng(root.spawn(1)[0])
                    stalls = 0
                    result.restarts += 1

    result.evaluations = iteration + 1
    if result.best is None:
        reasons = diagnose(result.best_infeasible, target) if result.best_infeasible else []
        raise NoFeasibleFound(
            "no evaluated design meets the target"
            + (": " + "; ".join(reasons) if reasons else ""),
            result=result,
        )
    return result


def exhaustive_search(seed_design, target, oracle, cfg):
    """ Every buildable point of the search space, scored like scd_search does """
    evaluator = Evaluator(seed_design, target, oracle, cfg)
    net, scheme = seed_design
    domains = Domains(cfg.space, net, scheme)
    candidates = []
    for index, state in enumerate(domains.all_states(evaluator.seed_state())):
        outcome = evaluator.outcome(state)
        if outcome is not None:
            candidates.append(evaluator.candidate(outcome, index))
    return candidates


SearchSetup = namedtuple("SearchSetup", ["config", "min_fps", "max_power", "seed_design"])


def search_from_json(obj, path=None):
    """ SearchConfig, target numbers and seed design path of a search file """
    validate(obj, "search", path=path)
    space = obj.get("space", {})
    config = SearchConfig(
        seed=obj.get("seed", 0),
        max_iters=obj.get("max_iters", 200),
        restarts=obj.get("restarts", 50),
        penalty=obj.get("penalty", 2.0),
        k=obj.get("k", 3),
        top_n=obj.get("top_n", 3),
        batch=obj.get("batch", 1),
        epochs=obj.get("epochs", DEFAULT_EPOCHS),
        dataset=obj.get("dataset", DEFAULT_DATASET),
        space=SearchSpace(
            n_reps=tuple(space.get("n_reps", (1, 8))),
            channel_mults=tuple(space.get("channel_mults", ())),
            search_pools=space.get("search_pools", False),
            weight_bits=tuple(space.get("weight_bits", ())),
            fm_bits=tuple(space.get("fm_bits", ())),
        ),
    )
    target = obj.get("target", {})
    seed_design = obj.get("seed_design")
    if seed_design is not None and path is not None:
        seed_design = resolve_relative(path, seed_design)
    return SearchSetup(
        config, target.get("min_fps"), target.get("max_power"), seed_design
    )


def load_search(path):
    return search_from_json(load_config(path), path=path)
