"""Command-line front end: ``gridflow {solve,ybus,faults,scenario,report,validate}``.

Exit codes: 0 success, 1 usage error, 2 invalid input (parse or validation),
3 power flow did not converge, 4 fault study or breaker selection failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from typing import Sequence

from . import report
from .faults import (
    FaultKind,
    FaultSpec,
    NoAdequateRating,
    UngroundedSystem,
    build_sequence_networks,
    compute_fault,
    load_catalog,
    select_breaker,
)
from .network import ParseError, UnknownBus, ValidationError, load_case, validate
from .powerflow import NonConvergence, SolveOptions, solve_power_flow
from .scenarios import ActionRejected, load_scenario, run_scenario_file
from .ybus import NotSupported, Sequence as Seq, build_ybus

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_DIVERGED, EXIT_FAULT = 0, 1, 2, 3, 4
CATALOG_ENV = "GRIDFLOW_CATALOG"

log = logging.getLogger("gridflow")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_ZF = re.compile(r"^\s*([+-]?[\d.]+(?:e[+-]?\d+)?)?\s*(?:([+-])\s*j\s*([\d.]+(?:e[+-]?\d+)?))?\s*$", re.I)


def parse_impedance(text: str) -> complex:
    """``"0.01+j0.05"``, ``"0.1"``, ``"j0.2"`` or Python syntax ``"0.01+0.05j"``."""
    s = text.strip()
    if s.lower().startswith("j"):
        s = "+" + s
    if s.startswith("+j") or s.startswith("-j"):
        s = "0" + s
    m = _ZF.match(s)
    if m and (m.group(1) or m.group(3)):
        re_part = float(m.group(1) or 0.0)
        im = float(m.group(3) or 0.0) * (-1 if m.group(2) == "-" else 1)
        return complex(re_part, im)
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an impedance: {text!r} (use R+jX)") from None


def _solve_opts(ns) -> SolveOptions:
    return SolveOptions(tol=ns.tol, max_iter=ns.max_iter, q_limits=not ns.no_q_limits, damping=ns.damping)


def _add_solve_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-6, help="max mismatch in pu (default 1e-6)")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--no-q-limits", action="store_true", help="ignore generator reactive limits")
    p.add_argument("--damping", type=float, default=1.0, help="step scale in (0, 1]")


def _write(text: str, path: str | None = None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(ns) -> int:
    net = load_case(ns.case)
    sol = solve_power_flow(net, _solve_opts(ns))
    rep = report.make_report(net, sol)
    _write(report.emit_report(rep, ns.format, branches=False))
    if ns.json:
        _write(report.emit_report(rep, "json"), ns.json)
    return EXIT_OK


def cmd_report(ns) -> int:
    net = load_case(ns.case)
    sol = solve_power_flow(net, _solve_opts(ns))
    rep = report.make_report(net, sol, ns.v_min, ns.v_max)
    _write(report.emit_report(rep, ns.format), ns.output)
    return EXIT_OK


def cmd_ybus(ns) -> int:
    net = load_case(ns.case)
    y = build_ybus(net, Seq(ns.sequence))
    _write(report.ybus_csv(y) if ns.csv else report.ybus_table(y))
    return EXIT_OK


def cmd_faults(ns) -> int:
    net = load_case(ns.case)
    prefault = solve_power_flow(net, SolveOptions()) if ns.prefault == "solved" else None
    nets = build_sequence_networks(net, prefault=prefault)
    catalog_path = ns.catalog or os.environ.get(CATALOG_ENV) or None
    catalog = load_catalog(catalog_path)
    buses = [ns.bus] if ns.bus is not None else net.bus_ids
    kinds = list(FaultKind) if ns.type == "all" else [FaultKind(ns.type)]
    for b in buses:
        net.bus(b)

    docs, code = [], EXIT_OK
    for b in buses:
        for k in kinds:
            res = compute_fault(nets, FaultSpec(b, k, ns.zf))
            breaker = None
            if res.base_amps is not None:
                try:
                    breaker = select_breaker(res.reported_current_amps, catalog)
                except NoAdequateRating as exc:
                    print(f"gridflow: bus {b} {k.value}: {exc}", file=sys.stderr)
                    code = EXIT_FAULT
            docs.append(report.fault_doc(res, breaker))
    if ns.format == "json":
        _write(report.dumps({"prefault": ns.prefault, "faults": docs}))
    else:
        _write(report.fault_table(docs))
    return code


def cmd_scenario(ns) -> int:
    sc = load_scenario(ns.file)
    doc = run_scenario_file(sc, parallel=ns.parallel)
    _write(report.dumps(doc), ns.output)
    if not doc["ok"]:
        print(f"gridflow: scenario {sc.name!r} did not produce a converged result", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_validate(ns) -> int:
    net = load_case(ns.case)
    rep = validate(net)
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if not rep.ok:
        for e in rep.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    print(f"{ns.case}: ok ({len(net.buses)} buses, {len(net.branches)} branches)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gridflow", description="Steady-state power system analysis.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    case_help = "case JSON file, or @glover5 for the embedded 5-bus case"

    s = sub.add_parser("solve", help="Newton-Raphson power flow")
    s.add_argument("case", help=case_help)
    _add_solve_flags(s)
    s.add_argument("--format", choices=report.FORMATS, default="table")
    s.add_argument("--json", metavar="FILE", help="also write the JSON solution document to FILE")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("ybus", help="print the bus admittance matrix")
    s.add_argument("case", help=case_help)
    s.add_argument("--sequence", choices=[q.value for q in Seq], default="positive")
    s.add_argument("--csv", action="store_true", help="sparse CSV at full precision")
    s.set_defaults(func=cmd_ybus)

    s = sub.add_parser("faults", help="short-circuit currents and breaker selection")
    s.add_argument("case", help=case_help)
    s.add_argument("--bus", type=int, help="faulted bus (default: every bus)")
    s.add_argument("--type", choices=[k.value for k in FaultKind] + ["all"], default="all")
    s.add_argument("--zf", type=parse_impedance, default=0j, help="fault impedance R+jX in pu")
    s.add_argument("--prefault", choices=("flat", "solved"), default="solved")
    s.add_argument("--catalog", help=f"breaker catalog JSON (default ${CATALOG_ENV} or bundled)")
    s.add_argument("--format", choices=("table", "json"), default="table")
    s.set_defaults(func=cmd_faults)

    s = sub.add_parser("scenario", help="run a scenario or sweep file")
    s.add_argument("file")
    s.add_argument("--parallel", type=int, default=0, metavar="N", help="worker threads for sweeps")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_scenario)

    s = sub.add_parser("report", help="solve and emit bus/branch tables")
    s.add_argument("case", help=case_help)
    _add_solve_flags(s)
    s.add_argument("--format", choices=report.FORMATS, default="table")
    s.add_argument("--v-min", type=float, default=0.95)
    s.add_argument("--v-max", type=float, default=1.05)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("validate", help="check a case file")
    s.add_argument("case", help=case_help)
    s.set_defaults(func=cmd_validate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return ns.func(ns)
    except (UngroundedSystem, NoAdequateRating) as exc:
        print(f"gridflow: fault study failed: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except ValidationError as exc:
        print(f"gridflow: invalid case: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ParseError, ActionRejected, NotSupported, UnknownBus, json.JSONDecodeError, OSError) as exc:
        print(f"gridflow: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NonConvergence as exc:
        trace = ", ".join(f"{x:.3g}" for x in exc.trace)
        print(f"gridflow: power flow failed: {exc}\nresidual trace: [{trace}]", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValueError, TypeError) as exc:
        print(f"gridflow: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
