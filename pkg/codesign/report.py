#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# report.py
#
#   Output documents of the command line: text summaries rendered with
#   pystache, the Pareto CSV and the run manifest.
#
#######################################################################

import csv
import io
import os
from collections import OrderedDict
from datetime import datetime, timezone

import pystache

from codesign._version import __version__
from codesign.util import sha256_file

QOS_TEMPLATE = """{{{name}}}: {{verdict}}
  cycles      {{total_cycles}}
  latency     {{latency_ms}} ms
  fps         {{fps}}
  dsp         {{dsp_used}} / {{dsp_total}}
  bram18      {{bram18_used}} / {{bram18_total}}
  lut         {{lut_used}} / {{lut_total}}
  power       {{power}} W
  efficiency  {{efficiency}} image/s/W
{{#violations}}
  violation   {{.}}
{{/violations}}
{{#segments}}
  segment {{{name}}}: {{tiles}} tiles x {{tile_rows}} rows, {{total_cycles}} cycles, {{dsp}} DSP, {{bram18}} BRAM18
{{/segments}}
"""

SEARCH_TEMPLATE = """search finished after {{evaluations}} evaluations and {{restarts}} restarts
  oracle      {{{oracle}}}{{#synthetic}} (synthetic){{/synthetic}}
  best        {{{best_name}}} score {{score}} qor {{qor}} fps {{fps}}
  pareto      {{pareto_size}} designs
"""

PARETO_HEADER = ["qor", "fps", "efficiency", "design_path"]


def render_qos(name, report, device):
    budget = device.budget
    data = dict(
        name=name,
        verdict="feasible" if report.feasible else "infeasible",
        total_cycles=report.total_cycles,
        latency_ms=f"{report.latency * 1000:.3f}",
        fps=f"{report.fps:.2f}",
        dsp_used=report.dsp_used,
        dsp_total=budget.dsp_total,
        bram18_used=report.bram18_used,
        bram18_total=budget.bram18_total,
        lut_used=report.lut_used,
        lut_total=budget.lut_total,
        power=f"{report.power:.3f}",
        efficiency=f"{report.efficiency:.2f}",
        violations=list(report.violations),
        segments=report.to_json()["segments"],
    )
    return pystache.render(QOS_TEMPLATE, data)


def render_search(result, oracle):
    best = result.best_any
    return pystache.render(
        SEARCH_TEMPLATE,
        dict(
            evaluations=result.evaluations,
            restarts=result.restarts,
            oracle=oracle.name,
            synthetic=oracle.synthetic,
            best_name=best.name if best else "-",
            score=f"{best.score:.6f}" if best else "-",
            qor=f"{best.qor:.6f}" if best else "-",
            fps=f"{best.qos.fps:.2f}" if best else "-",
            pareto_size=len(result.pareto),
        ),
    )


def pareto_csv(rows):
    """ CSV text for (qor, fps, efficiency, design_path) rows, header first """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(PARETO_HEADER)
    for row in rows:
        writer.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])), row[3]])
    return buffer.getvalue()


def now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def build_manifest(command, seed, configs, outputs, started, out_dir, extra=None):
    """ Run manifest: tool version, seed, SHA-256 of every input, outputs, timestamps

    CONFIGS maps a role ("search", "device", ...) to an input path; OUTPUTS are paths
    written by the run, recorded relative to OUT_DIR.
    """
    manifest = OrderedDict(
        [
            ("tool", "codesign"),
            ("version", __version__),
            ("command", command),
            ("seed", seed),
            (
                "configs",
                OrderedDict(
                    (
                        role,
                        OrderedDict(
                            [("path", os.path.abspath(path)), ("sha256", sha256_file(path))]
                        ),
                    )
                    for role, path in configs.items()
                    if path is not None
                ),
            ),
            ("outputs", [os.path.relpath(p, out_dir) for p in outputs]),
            ("started", started),
            ("finished", now()),
        ]
    )
    if extra:
        manifest.update(extra)
    return manifest
