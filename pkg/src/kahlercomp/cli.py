"""Command-line entry point: model tables, series extraction, comparison checks.

Exit codes: 0 all checks hold, 2 some check violated, 3 inconclusive,
1 usage or validation error.  A run directory receives ``report.json``,
``tables/*.csv`` and ``config.echo.json``; identical configuration and seed
reproduce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import comparison, model_space, potential, series
from . import curvature as curv
from .sphere import build_rule, tangent_nodes, unit_sphere_volume

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATED = 2
EXIT_INCONCLUSIVE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _parse_params(text):
    out = {}
    if not text:
        return out
    for item in text.split(","):
        key, _, value = item.partition("=")
        if not _:
            raise ValueError(f"malformed parameter {item!r}; expected key=value")
        key = key.strip()
        value = value.strip()
        try:
            out[key] = int(value)
        except ValueError:
            try:
                out[key] = float(value)
            except ValueError:
                out[key] = value
    return out


def _load_potential(args):
    if getattr(args, "potential", None):
        return potential.load_json(args.potential)
    if getattr(args, "catalog", None):
        return potential.from_catalog(args.catalog, **_parse_params(args.params))
    raise ValueError("need --potential FILE or --catalog NAME")


def _grid(args):
    return np.linspace(args.r_min, args.r_max, args.r_steps)


def _ensure_out(args):
    out = Path(args.out)
    (out / "tables").mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(args, out: Path):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    (out / "config.echo.json").write_text(json.dumps(cfg, sort_keys=True, indent=2,
                                                     default=str) + "\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def cmd_model(args) -> int:
    model = model_space.ModelSpace(args.n, args.K)
    rows = []
    for r in _grid(args):
        r = float(r)
        try:
            rows.append((r, "ok", model_space.density(model, r),
                         model_space.sphere_area(model, r),
                         model_space.ball_volume(model, r),
                         model_space.laplacian(model, r)))
        except ValueError:
            rows.append((r, "domain_error", "", "", "", ""))
    header = ["r", "status", "density", "area", "volume", "laplacian"]
    if args.out:
        out = _ensure_out(args)
        _echo_config(args, out)
        _write_csv(out / "tables" / "model.csv", header, rows)
        (out / "report.json").write_text(json.dumps(
            {"command": "model", "n": args.n, "K": args.K, "rows": len(rows)},
            sort_keys=True, indent=2) + "\n")
    else:
        w = csv.writer(sys.stdout)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return EXIT_OK


def cmd_series(args) -> int:
    pot = _load_potential(args)
    p = np.zeros(pot.n, dtype=complex)
    order = args.order
    jet_order = min(4, max(2, order - 2))
    rule = build_rule(pot.n, args.quad_degree)
    G = curv.workspace(pot).metric_values(p)
    dirs = tangent_nodes(rule, curv.real_metric_matrix(G))

    axis = np.zeros(2 * pot.n)
    axis[0] = 1.0
    jets = curv.curvature_jets_along(pot, p, axis, order=jet_order)
    coeffs = series.jacobi_recursion(jets, order + 1)
    per_dir = series.density_series(coeffs, order)

    averaged = np.zeros(order + 1)
    for e0, w in zip(dirs, rule.weights):
        j = curv.curvature_jets_along(pot, p, e0, order=jet_order)
        c = series.jacobi_recursion(j, order + 1)
        averaged += w * series.density_series(c, order).coefficients

    doc = {
        "potential": pot.label,
        "order": order,
        "per_direction": {"e0": "x1-axis",
                          "coefficients": per_dir.coefficients.tolist(),
                          "provenance": per_dir.provenance},
        "sphere_averaged": {"coefficients": averaged.tolist(),
                            "provenance": "symbolic",
                            "c0_expected": unit_sphere_volume(pot.n)},
    }
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        out = _ensure_out(args)
        _echo_config(args, out)
        (out / "report.json").write_text(text)
        _write_csv(out / "tables" / "coefficients.csv",
                   ["order", "per_direction", "sphere_averaged"],
                   [(k, float(per_dir.coefficients[k]), float(averaged[k]))
                    for k in range(order + 1)])
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check(args) -> int:
    out = _ensure_out(args) if args.out else None
    verdicts = []
    payload = {"command": "check", "which": args.which}

    if args.which == "counterexample":
        params = _parse_params(args.params)
        a = params.get("a", 0.1)
        lam = params.get("lambda", None)
        report = comparison.verify_counterexample(a=a, lam=lam, seed=args.seed)
        payload["counterexample"] = report.to_json_dict()
        verdicts.append("holds" if report.passed_all else "violated")
        if out:
            stage = report.stages["pointwise_gap"]
            _write_csv(out / "tables" / "pointwise_gap.csv",
                       ["r", "margin"],
                       list(zip(map(float, stage["r_grid"]),
                                map(float, stage["margins"]))))
    else:
        pot = _load_potential(args)
        if args.K is None:
            raise ValueError("--K is required for thm3/thm4/rigidity checks")
        rule = build_rule(pot.n, args.quad_degree)
        grid = _grid(args)
        flow = comparison.SphereFlow(pot, np.zeros(pot.n, dtype=complex),
                                     float(max(grid.max(), 8.08e-2 if args.which == "rigidity" else 0)),
                                     rule=rule, tol=args.tol, threads=args.threads)
        if args.which == "thm3":
            rep = comparison.check_volume_ratio(pot, args.K, r_grid=grid, rule=rule,
                                                flow=flow, seed=args.seed)
            payload["thm3"] = rep.to_json_dict()
            verdicts.append(rep.verdict)
            if out:
                _write_csv(out / "tables" / "volume_ratio.csv",
                           ["a", "b", "lhs", "rhs", "margin"],
                           [(r["a"], r["b"], r["lhs"], r["rhs"], r["margin"])
                            for r in rep.rows])
        elif args.which == "thm4":
            rep = comparison.check_average_laplacian(pot, args.K, r_grid=grid,
                                                     rule=rule, flow=flow,
                                                     seed=args.seed)
            payload["thm4"] = rep.to_json_dict()
            verdicts.append(rep.verdict)
            if out:
                _write_csv(out / "tables" / "average_laplacian.csv",
                           ["r", "lhs", "rhs", "margin"],
                           [(r["r"], r["lhs"], r["rhs"], r["margin"])
                            for r in rep.rows])
        elif args.which == "rigidity":
            rep = comparison.rigidity_probe(pot, args.K, rule=rule, flow=flow,
                                            seed=args.seed)
            payload["rigidity"] = rep.to_json_dict()
            verdicts.append("holds")
            if out:
                _write_csv(out / "tables" / "rigidity.csv",
                           ["order", "fitted", "model", "deviation", "threshold"],
                           [(k, float(rep.fitted[k]), float(rep.model[k]),
                             float(rep.deviations[k]), float(rep.thresholds[k]))
                            for k in range(rep.order + 1)])
        else:
            raise ValueError(f"unknown check {args.which!r}")

    payload["verdicts"] = verdicts
    if out:
        _echo_config(args, out)
        (out / "report.json").write_text(json.dumps(payload, sort_keys=True,
                                                    indent=2) + "\n")
    else:
        sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    if "violated" in verdicts:
        return EXIT_VIOLATED
    if "inconclusive" in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="kahlercomp",
                     description="curvature and volume comparison checks for "
                                 "polynomial Kahler potentials")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=os.cpu_count())
        p.add_argument("--tol", type=float, default=1e-11,
                       help="ODE integration tolerance")
        p.add_argument("--quad-degree", type=int, default=None,
                       help="sphere rule exactness degree")

    m = sub.add_parser("model", help="closed-form model-space table")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--K", type=float, required=True)
    m.add_argument("--r-min", type=float, default=0.01)
    m.add_argument("--r-max", type=float, default=1.0)
    m.add_argument("--r-steps", type=int, default=20)
    m.add_argument("--out", default=None)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_model)

    s = sub.add_parser("series", help="density series coefficients at the origin")
    s.add_argument("--catalog", default=None)
    s.add_argument("--params", default=None, help="catalog parameters k=v,...")
    s.add_argument("--potential", default=None, help="potential JSON file")
    s.add_argument("--order", type=int, default=4)
    common(s)
    s.set_defaults(func=cmd_series)

    c = sub.add_parser("check", help="comparison checks and counterexample run")
    c.add_argument("--which", required=True,
                   choices=["thm3", "thm4", "counterexample", "rigidity"])
    c.add_argument("--catalog", default=None)
    c.add_argument("--params", default=None)
    c.add_argument("--potential", default=None)
    c.add_argument("--K", type=float, default=None)
    c.add_argument("--r-min", type=float, default=0.005)
    c.add_argument("--r-max", type=float, default=0.04)
    c.add_argument("--r-steps", type=int, default=8)
    common(c)
    c.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (potential.ValidationError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
