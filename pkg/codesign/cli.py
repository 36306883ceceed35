#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# cli.py
#
#   Initializes a Command Line Interface with Click.
#   The main purpose of the cli is to run the co-design flow step by
#   step and write machine-readable reports.
#
#   CLI commands implemented in this file:
#    - bundles : enumerate bundles from a layer pool and estimate their QoS
#    - select  : grow bundles into prototypes, score them, keep the best per group
#    - search  : stochastic coordinate descent from a seed design
#    - estimate: QoS report of one network and scheme
#    - simulate: discrete-event check of a tile plan against the analytical latency
#    - export  : accelerator descriptor of a feasible design
#    - sweep   : BRAM blocks of a feature-map buffer over resize factors
#
#   Exit codes: 0 success, 2 configuration or schema error, 3 no feasible
#   design, 4 oracle failure, 5 design infeasible on the device.
#
#######################################################################

import os
from collections import OrderedDict
from dataclasses import replace

import click
import numpy as np
from tqdm import tqdm

from codesign._version import __version__
from codesign.config import data_path, load_config
from codesign.exceptions import (
    CodesignError,
    ConfigError,
    InvalidGrowth,
    NoFeasibleFound,
    OracleFailure,
)
from codesign.explore.bundles import (
    bundle_to_json,
    enumerate_bundles,
    estimate_bundle_qos,
    load_pool,
)
from codesign.explore.prototype import PoolPolicy, run_selection
from codesign.explore.scd import QosTarget, load_search, scd_search
from codesign.hardware.device import load_device
from codesign.hardware.qos import accelerator_descriptor, network_qos
from codesign.hardware.resources import resize_sweep
from codesign.hardware.tiling import bundle_latency_cycles
from codesign.log import LOGGER
from codesign.network.accounting import size_report
from codesign.network.serialize import (
    design_from_json,
    load_design,
    scheme_to_json,
    shape_from_json,
    shape_to_json,
)
from codesign.oracle import make_oracle
from codesign.report import (
    build_manifest,
    now,
    pareto_csv,
    render_qos,
    render_search,
)
from codesign.sim import (
    SimConfig,
    jitter_from_json,
    plan_from_json,
    simulate_and_compare,
    trace_records,
)
from codesign.util import canonical_json, dump_json, save_json, save_jsonl, save_txt

EXIT_CONFIG = 2
EXIT_NO_FEASIBLE = 3
EXIT_ORACLE = 4
EXIT_INFEASIBLE = 5

DEFAULT_POOL = data_path("pools", "default.json")
DEFAULT_SEARCH = data_path("search", "default.json")
DEFAULT_SWEEP = data_path("fixtures", "fig2a.json")

CONTEXT_SETTINGS = dict(help_option_names=["-h", "--help"])


def check_oracle_spec(ctx, param, value):
    """ Accept surrogate or exec:<command> """
    if value == "surrogate" or (value.startswith("exec:") and value[5:].strip()):
        return value
    raise click.BadParameter("use 'surrogate' or 'exec:<command>'")


def fail(error, code):
    LOGGER.error(error)
    exit(code)


def oracle_failure(error):
    """ Log an oracle failure with the request that caused it, then exit 4 """
    message = str(error)
    if error.request is not None:
        message += f"\nFailing request: {canonical_json(error.request)}"
    if error.diagnostics:
        message += f"\nOracle stderr:\n{error.diagnostics}"
    fail(message, EXIT_ORACLE)


def emit(obj, out):
    """ Write OBJ as JSON to OUT, or to standard output when OUT is None """
    if out:
        save_json(out, obj)
        LOGGER.info(f"Wrote {out}")
    else:
        click.echo(dump_json(obj), nl=False)


def read_design(path):
    """ (net, scheme) of a network file or of a search result file embedding one """
    document = load_config(path)
    if "design" in document:
        document = document["design"]
    return design_from_json(document, path=path)


def require_scheme(scheme, path):
    if scheme is None:
        raise ConfigError("no quantization scheme given for this network", path=path)
    return scheme


def debug_option(function):
    return click.option(
        "-d", "--debug", is_flag=True, help="Add debugging messages to logger"
    )(function)


def device_option(function):
    return click.option(
        "--device",
        type=click.Path(exists=True, dir_okay=False),
        help="Device file (JSON) [default: the shipped Pynq-Z1 profile]",
    )(function)


def seed_option(default):
    return click.option(
        "-s",
        "--seed",
        type=click.IntRange(0, 2 ** 64 - 1),
        default=default,
        help="Seed of every random choice",
    )


def oracle_option(function):
    function = click.option(
        "--oracle-timeout",
        type=click.FloatRange(min=0.001),
        default=3600.0,
        show_default=True,
        help="Seconds an external oracle may take per request",
    )(function)
    return click.option(
        "--oracle",
        default="surrogate",
        show_default=True,
        callback=check_oracle_spec,
        help="QoR oracle: surrogate, or exec:<command> for an external endpoint",
    )(function)


@click.version_option(version=__version__, prog_name="codesign")
@click.group(context_settings=CONTEXT_SETTINGS)
def cli():
    """Co-design exploration of bundle-composed DNNs and their FPGA accelerators."""


@cli.command(
    context_settings=CONTEXT_SETTINGS,
    short_help="Enumerate bundles from a layer pool and estimate their QoS.",
)
@click.argument("pool", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option(
    "-n", "--limit", type=int, default=10, show_default=True, help="Number of bundles"
)
@seed_option(0)
@device_option
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="Output file")
@debug_option
def bundles(**kwargs):
    """Draw distinct bundles from POOL and estimate each one's QoS.

    POOL: layer pool file (JSON) [default: the shipped default pool]
    """
    if kwargs["debug"]:
        LOGGER.setLevel("DEBUG")
    if kwargs["limit"] < 1:
        raise click.BadParameter("limit must be ≥ 1", param_hint="'--limit'")
    pool_path = kwargs["pool"] or DEFAULT_POOL
    try:
        pool = load_pool(pool_path)
        device = load_device(kwargs["device"])
        drawn = enumerate_bundles(pool, kwargs["limit"], np.random.default_rng(kwargs["seed"]))
    except CodesignError as e:
        fail(e, EXIT_CONFIG)

    entries = []
    for bundle in tqdm(drawn, desc="bundles", disable=None):
        entry = bundle_to_json(bundle)
        try:
            entry["qos"] = estimate_bundle_qos(
                bundle, pool.input, pool.estimate_scheme, device
            ).to_json()
        except InvalidGrowth as e:
            LOGGER.warning(f"Bundle {bundle.name} does not fit {pool.input}: {e}")
            entry["qos"] = None
        entries.append(entry)
    emit(
        OrderedDict(
            [
                ("version", 1),
                ("seed", kwargs["seed"]),
                ("device", device.name),
                ("input", shape_to_json(pool.input)),
                ("estimate_scheme", scheme_to_json(pool.estimate_scheme)),
                ("bundles", entries),
            ]
        ),
        kwargs["out"],
    )


@cli.command(
    context_settings=CONTEXT_SETTINGS,
    short_help="Prototype bundles and keep the best of each QoS group.",
)
@click.argument("pool", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option(
    "-n", "--limit", type=int, default=10, show_default=True, help="Number of bundles"
)
@click.option(
    "--n-reps", type=click.IntRange(min=1), default=4, show_default=True,
    help="Repetitions of each prototype",
)
@click.option(
    "-k", "--groups", type=click.IntRange(min=1), default=3, show_default=True,
    help="Number of QoS groups",
)
@click.option(
    "--top-n", type=click.IntRange(min=1), default=3, show_default=True,
    help="Bundles kept per group",
)
@click.option(
    "--min-fps", type=click.FloatRange(min=0, min_open=True), default=30.0,
    show_default=True, help="Target frames per second",
)
@click.option(
    "--epochs", type=click.IntRange(min=1), default=20, show_default=True,
    help="Fast-training epochs asked of the oracle",
)
@seed_option(0)
@oracle_option
@device_option
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="Output file")
@debug_option
def select(**kwargs):
    """Grow each bundle of POOL into a prototype, then group and select.

    POOL: layer pool file (JSON) [default: the shipped default pool]
    """
    if kwargs["debug"]:
        LOGGER.setLevel("DEBUG")
    if kwargs["limit"] < 1:
        raise click.BadParameter("limit must be ≥ 1", param_hint="'--limit'")
    pool_path = kwargs["pool"] or DEFAULT_POOL
    try:
        pool = load_pool(pool_path)
        device = load_device(kwargs["device"])
        drawn = enumerate_bundles(pool, kwargs["limit"], np.random.default_rng(kwargs["seed"]))
        target = QosTarget(kwargs["min_fps"], device)
        oracle = make_oracle(kwargs["oracle"], timeout=kwargs["oracle_timeout"])
    except CodesignError as e:
        fail(e, EXIT_CONFIG)
    if oracle.synthetic:
        LOGGER.warning("QoR comes from the synthetic surrogate, not from training")

    try:
        selected, candidates = run_selection(
            drawn,
            kwargs["n_reps"],
            pool.input,
            pool.estimate_scheme,
            device,
            target,
            oracle,
            policy=PoolPolicy(),
            k=kwargs["groups"],
            top_n=kwargs["top_n"],
            epochs=kwargs["epochs"],
            progress=True,
        )
    except OracleFailure as e:
        oracle_failure(e)
    except CodesignError as e:
        fail(e, EXIT_CONFIG)

    def entry(candidate):
        obj = bundle_to_json(candidate.bundle)
        obj["qor"] = candidate.qor
        obj["qos"] = candidate.qos.to_json()
        return obj

    emit(
        OrderedDict(
            [
                ("version", 1),
                ("seed", kwargs["seed"]),
                ("oracle", oracle.name),
                ("synthetic", oracle.synthetic),
                ("min_fps", kwargs["min_fps"]),
                ("n_reps", kwargs["n_reps"]),
                ("selected", [entry(c) for c in selected]),
                ("candidates", [entry(c) for c in candidates]),
            ]
        ),
        kwargs["out"],
    )


@cli.command(
    context_settings=CONTEXT_SETTINGS,
    short_help="Search for the best design meeting a QoS target.",
)
@click.argument(
    "search_config", type=click.Path(exists=True, dir_okay=False), required=False
)
@click.option(
    "-o", "--out", type=click.Path(file_okay=False), required=True,
    help="Output directory",
)
@seed_option(None)
@click.option(
    "--min-fps", type=click.FloatRange(min=0, min_open=True),
    help="Target frames per second [default: from SEARCH_CONFIG]",
)
@click.option(
    "-j", "--jobs", type=click.IntRange(min=1), default=1, show_default=True,
    help="Concurrent evaluations",
)
@click.option(
    "--cache", type=click.Path(dir_okay=False),
    help="Persist oracle responses to this JSON-lines file",
)
@oracle_option
@device_option
@debug_option
def search(**kwargs):
    """Run stochastic coordinate descent from the seed design of SEARCH_CONFIG.

    Writes best.json, pareto.csv, audit.jsonl, manifest.json and one file per Pareto
    design under designs/ in the output directory.

    SEARCH_CONFIG: search file (JSON) [default: the shipped default search]
    """
    if kwargs["debug"]:
        LOGGER.setLevel("DEBUG")
    started = now()
    search_path = kwargs["search_config"] or DEFAULT_SEARCH
    device_path = kwargs["device"] or data_path("devices", "pynq_z1.json")
    out_dir = kwargs["out"]
    try:
        setup = load_search(search_path)
        device = load_device(device_path)
        if setup.seed_design is None:
            raise ConfigError("no seed_design given", path=search_path)
        net, scheme = load_design(setup.seed_design)
        require_scheme(scheme, setup.seed_design)
        min_fps = kwargs["min_fps"] or setup.min_fps
        if min_fps is None:
            raise ConfigError("no target min_fps given", path=search_path)
        config = setup.config
        if kwargs["seed"] is not None:
            config = replace(config, seed=kwargs["seed"])
        config = replace(config, jobs=kwargs["jobs"])
        target = QosTarget(min_fps, device, setup.max_power)
        oracle = make_oracle(
            kwargs["oracle"], timeout=kwargs["oracle_timeout"], store=kwargs["cache"]
        )
    except CodesignError as e:
        fail(e, EXIT_CONFIG)
    if oracle.synthetic:
        LOGGER.warning("QoR comes from the synthetic surrogate, not from training")

    feasible = True
    try:
        result = scd_search((net, scheme), target, oracle, config, progress=True)
    except OracleFailure as e:
        oracle_failure(e)
    except NoFeasibleFound as e:
        LOGGER.warning(str(e))
        result, feasible = e.result, False

    outputs = []
    rows = []
    members = sorted(result.pareto, key=lambda d: (-d.qor, -d.qos.fps, d.name))
    for member in members:
        relative = f"designs/{member.name}.json"
        path = os.path.join(out_dir, "designs", f"{member.name}.json")
        save_json(path, member.to_json(target))
        outputs.append(path)
        rows.append((member.qor, member.qos.fps, member.qos.efficiency, relative))

    best_path = os.path.join(out_dir, "best.json")
    save_json(best_path, result.best_any.to_json(target))
    pareto_path = os.path.join(out_dir, "pareto.csv")
    save_txt(pareto_path, pareto_csv(rows))
    audit_path = os.path.join(out_dir, "audit.jsonl")
    save_jsonl(audit_path, result.audit)
    outputs = [best_path, pareto_path, audit_path] + outputs

    manifest_path = os.path.join(out_dir, "manifest.json")
    save_json(
        manifest_path,
        build_manifest(
            "search",
            config.seed,
            OrderedDict(
                [
                    ("search", search_path),
                    ("device", device_path),
                    ("seed_design", setup.seed_design),
                ]
            ),
            outputs,
            started,
            out_dir,
            extra=OrderedDict(
                [
                    ("oracle", oracle.name),
                    ("synthetic", oracle.synthetic),
                    ("min_fps", min_fps),
                    ("feasible", feasible),
                ]
            ),
        ),
    )
    for path in outputs + [manifest_path]:
        LOGGER.info(f"Wrote {path}")
    LOGGER.info(render_search(result, oracle).rstrip())
    if not feasible:
        exit(EXIT_NO_FEASIBLE)


@cli.command(
    context_settings=CONTEXT_SETTINGS, short_help="Estimate the QoS of a network."
)
@click.argument("net_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("scheme_file", type=click.Path(exists=True, dir_okay=False), required=False)
@device_option
@click.option("-t", "--text", is_flag=True, help="Print a text summary instead of JSON")
@debug_option
def estimate(**kwargs):
    """Print the QoS report of NET_FILE quantized by SCHEME_FILE.

    NET_FILE: network file (JSON), may embed its scheme

    SCHEME_FILE: scheme file (JSON) [default: the scheme embedded in NET_FILE]
    """
    if kwargs["debug"]:
        LOGGER.setLevel("DEBUG")
    try:
        net, scheme = read_design(kwargs["net_file"])
        if net is None:
            raise ConfigError("no network in this file", path=kwargs["net_file"])
        if kwargs["scheme_file"]:
            _, scheme = load_design(kwargs["scheme_file"])
            require_scheme(scheme, kwargs["scheme_file"])
        require_scheme(scheme, kwargs["net_file"])
        device = load_device(kwargs["device"])
        report = network_qos(net, scheme, device)
    except CodesignError as e:
        fail(e, EXIT_CONFIG)

    if kwargs["text"]:
        name = os.path.splitext(os.path.basename(kwargs["net_file"]))[0]
        click.echo(render_qos(name, report, device), nl=False)
        return
    document = OrderedDict([("device", device.name)])
    document.update(report.to_json())
    document["size"] = size_report(net, scheme)
    emit(document, None)


@cli.command(
    context_settings=CONTEXT_SETTINGS,
    short_help="Simulate a tile plan and compare with the analytical latency.",
)
@click.argument("plan_file", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "-j", "--jitter", type=click.Path(exists=True, dir_okay=False),
    help="Per-tile cycle overrides (JSON)",
)
@click.option(
    "--buffer-slots", type=click.IntRange(min=1),
    help="Tiles each inter-stage buffer holds [default: from PLAN_FILE, else 1]",
)
@click.option("--segment", help="Segment to simulate when PLAN_FILE is a descriptor")
@click.option("--trace", is_flag=True, help="Also write the event trace as JSON lines")
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="Output file")
@debug_option
def simulate(**kwargs):
    """Run the discrete-event simulation of PLAN_FILE.

    PLAN_FILE: plan file (JSON), or an accelerator descriptor written by export
    """
    if kwargs["debug"]:
        LOGGER.setLevel("DEBUG")
    plan_path = kwargs["plan_file"]
    try:
        document = load_config(plan_path)
        if "segments" in document:
            names = [s["name"] for s in document["segments"]]
            wanted = kwargs["segment"] or names[0]
            if wanted not in names:
                raise ConfigError(
                    f"no segment '{wanted}', choose among {', '.join(names)}",
                    path=plan_path,
                )
            plan_document = document["segments"][names.index(wanted)]
        else:
            plan_document = document
        plan = plan_from_json(plan_document, path=plan_path)
        jitter = None
        if kwargs["jitter"]:
            jitter = jitter_from_json(load_config(kwargs["jitter"]), path=kwargs["jitter"])
        slots = kwargs["buffer_slots"] or document.get("buffer_slots", 1)
        cfg = SimConfig(plan, jitter, slots, trace=kwargs["trace"])
        result, deviation = simulate_and_compare(cfg)
    except CodesignError as e:
        fail(e, EXIT_CONFIG)

    document = OrderedDict([("plan", plan.name), ("tiles", plan.tiles)])
    document["buffer_slots"] = slots
    document.update(result.to_json())
    document["analytical_cycles"] = bundle_latency_cycles(plan)
    document["deviation_cycles"] = deviation.absolute
    document["deviation_vs_analytical"] = deviation.relative
    emit(document, kwargs["out"])

    if kwargs["trace"]:
        base = os.path.splitext(kwargs["out"] or plan_path)[0]
        trace_path = base + ".trace.jsonl"
        save_jsonl(trace_path, trace_records(result))
        LOGGER.info(f"Wrote {trace_path}")


@cli.command(
    context_settings=CONTEXT_SETTINGS,
    short_help="Write the accelerator descriptor of a feasible design.",
)
@click.argument("design_file", type=click.Path(exists=True, dir_okay=False))
@device_option
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="Output file")
@debug_option
def export(**kwargs):
    """Describe the accelerator the hardware models chose for DESIGN_FILE.

    DESIGN_FILE: best.json or a design from a search, or a network file with its scheme
    """
    if kwargs["debug"]:
        LOGGER.setLevel("DEBUG")
    try:
        net, scheme = read_design(kwargs["design_file"])
        if net is None:
            raise ConfigError("no network in this file", path=kwargs["design_file"])
        require_scheme(scheme, kwargs["design_file"])
        device = load_device(kwargs["device"])
        report = network_qos(net, scheme, device)
    except CodesignError as e:
        fail(e, EXIT_CONFIG)
    if not report.feasible:
        fail(
            f"Design does not fit {device.name}: {', '.join(report.violations)}",
            EXIT_INFEASIBLE,
        )
    emit(accelerator_descriptor(net, scheme, device, report), kwargs["out"])


@cli.command(
    context_settings=CONTEXT_SETTINGS,
    short_help="BRAM blocks of a feature-map buffer over resize factors.",
)
@click.argument("fixture", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="Output file")
@debug_option
def sweep(**kwargs):
    """Sweep the resize factors of FIXTURE.

    FIXTURE: sweep file (JSON) [default: the shipped BRAM resize fixture]
    """
    if kwargs["debug"]:
        LOGGER.setLevel("DEBUG")
    path = kwargs["fixture"] or DEFAULT_SWEEP
    try:
        document = load_config(path, "sweep")
        shape = shape_from_json(document["shape"])
        block_bits = document.get("block_bits", 18432)
        curves = resize_sweep(
            shape,
            [(c["fm_bits"], c["banks"]) for c in document["curves"]],
            document["resizes"],
            block_bits,
        )
    except CodesignError as e:
        fail(e, EXIT_CONFIG)
    emit(
        OrderedDict(
            [
                ("shape", shape_to_json(shape)),
                ("block_bits", block_bits),
                ("curves", curves),
            ]
        ),
        kwargs["out"],
    )
