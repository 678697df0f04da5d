"""Command-line front end.

    gridlcu coeffs   --order A [--format csv|json]
    gridlcu estimate --config cfg.json --time T --eps E [--mode worst|optimistic] [--sweep p=lo:hi:n]
    gridlcu simulate --config cfg.json --time T --eps E [--mode effective|blockencoding] [--oracle-check]
    gridlcu verify   [--suite NAME|all]

Reports go to ``--out`` (default ``./out``). Exit codes: 0 success, 1 module
error, 2 usage error, 3 violated bound hypothesis. Errors are reported as a
JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .bounds import BoundInputs, bound_report
from .errors import GridLcuError, HypothesisError
from .grid import GridSpec, StateVector, discretize, inner_product, save_state
from .hamiltonian import QueryLedger, energy_shift, lcu_decompose, potential_from_config
from .oracle import EXPM_CAP, expm_evolve, gaussian_state, plane_wave
from .stencil import A_MAX_DEFAULT, fd_coefficients
from .taylor import evolve, plan_evolution
from .verify import SUITES, run_suites

EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_HYPOTHESIS = 3

INT_FIELDS = {"eta", "dims", "bins", "order_a"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise UsageError(message)


def _dump(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def load_config(path: str | Path) -> tuple[dict, Path]:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except FileNotFoundError:
        raise UsageError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg, path.parent


def resolve_config(cfg: dict) -> dict:
    """Fill defaults so reports can embed the full configuration."""
    out = dict(cfg)
    out.setdefault("eta", 1)
    out.setdefault("dims", 1)
    out.setdefault("length", 1.0)
    out.setdefault("masses", [1.0] * int(out["eta"]))
    out.setdefault("order_a", 1)
    out.setdefault("kmax", math.pi)
    out.setdefault("potential", {"type": "zero"})
    for key in INT_FIELDS & out.keys():
        out[key] = int(out[key])
    return out


def bound_inputs(cfg: dict, time: float, eps: float, base_dir: Path | None = None) -> BoundInputs:
    pot = cfg.get("potential", {"type": "zero"})
    extra: dict[str, Any] = {}
    if pot.get("type") == "modified_coulomb":
        extra["coulomb_delta"] = float(pot["delta"])
        extra["charge"] = max(abs(float(q)) for q in pot["charges"])
    if "v_max" in pot:
        extra["v_max"] = float(pot["v_max"])
    if "v_prime_max" in pot:
        extra["v_prime_max"] = float(pot["v_prime_max"])
    if pot.get("type") == "tabulated" and "v_max" not in extra:
        extra["v_max"] = float(potential_from_config(pot, base_dir).v_max)
    return BoundInputs(
        eta=cfg["eta"],
        dims=cfg["dims"],
        mass=min(float(m) for m in cfg["masses"]),
        length=float(cfg["length"]),
        kmax=float(cfg["kmax"]),
        time=time,
        eps=eps,
        beta=float(cfg.get("beta", 1.0)),
        delta=cfg.get("delta"),
        **extra,
    )


def _parse_sweep(spec: str) -> tuple[str, np.ndarray]:
    try:
        name, rng = spec.split("=", 1)
        lo, hi, n = rng.split(":")
        values = np.linspace(float(lo), float(hi), int(n))
    except ValueError:
        raise UsageError(f"bad sweep {spec!r}; expected param=lo:hi:n") from None
    if name not in BoundInputs.__dataclass_fields__:
        raise UsageError(f"cannot sweep unknown parameter {name!r}")
    return name, values


def cmd_coeffs(args: argparse.Namespace) -> int:
    c = fd_coefficients(args.order, a_max=max(args.order, A_MAX_DEFAULT))
    rows = [(j, c.d(j)) for j in c.offsets]
    if args.format == "json":
        text = _dump(
            {
                "order_a": c.order_a,
                "coefficients": [{"j": j, "exact": str(d), "value": float(d)} for j, d in rows],
                "norm_sum": str(c.norm_sum_exact),
            }
        )
        name = f"coeffs_a{c.order_a}.json"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "exact", "value"])
        for j, d in rows:
            w.writerow([j, str(d), repr(float(d))])
        text = buf.getvalue()
        name = f"coeffs_a{c.order_a}.csv"
    _write(args.out, name, text)
    sys.stdout.write(text)
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    raw, base = load_config(args.config)
    cfg = resolve_config(raw)
    p = bound_inputs(cfg, args.time, args.eps, base)
    report = bound_report(p, args.mode, args.rule)
    doc = {"config": cfg, "time": args.time, "eps": args.eps, "mode": args.mode, "rule": args.rule, "report": report.as_dict()}
    _write(args.out, "estimate.json", _dump(doc))
    if args.sweep:
        name, values = _parse_sweep(args.sweep)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["h", "order_a", "combined_error_bound", "kinetic_error_bound", "potential_error_bound"]
        w.writerow([name] + cols + ["violation"])
        for v in values:
            val = int(round(v)) if name in INT_FIELDS else float(v)
            try:
                r = bound_report(replace(p, **{name: val}), args.mode, args.rule)
                w.writerow([val] + [repr(r.values[c]) for c in cols] + [";".join(r.violations)])
            except HypothesisError as exc:
                w.writerow([val] + [""] * len(cols) + [exc.assumption])
        _write(args.out, f"sweep_{name}.csv", buf.getvalue())
    sys.stdout.write(_dump(report.values))
    return 0


def initial_state(cfg: dict, grid: GridSpec, seed: int) -> StateVector:
    spec = cfg.get("initial_state", {"kind": "random"})
    kind = spec.get("kind", "random")
    if kind == "random":
        rng = np.random.default_rng(seed)
        v = rng.normal(size=grid.dimension) + 1j * rng.normal(size=grid.dimension)
        return StateVector(v / np.linalg.norm(v), grid)
    if kind == "plane_wave":
        kappa = np.asarray(spec["kappa"], dtype=float)
        return discretize(grid, plane_wave(grid, 2 * math.pi * kappa / grid.length), renormalize=True)
    if kind == "gaussian":
        return gaussian_state(float(spec["delta_p"]), float(spec.get("kmax", cfg["kmax"])), grid)
    raise UsageError(f"unknown initial_state kind {kind!r}")


def cmd_simulate(args: argparse.Namespace) -> int:
    raw, base = load_config(args.config)
    cfg = resolve_config(raw)
    if "bins" not in cfg:
        raise UsageError("simulate needs 'bins' in the config")
    grid = GridSpec(cfg["eta"], cfg["dims"], cfg["bins"], float(cfg["length"]), tuple(cfg["masses"]))
    pot = potential_from_config(cfg["potential"], base)
    # signature rounding contributes t * V_max / M to the error; give it half the budget
    delta_lcu = float(cfg.get("delta_lcu", args.eps / (2.0 * args.time)))
    decomp = lcu_decompose(pot, grid, cfg["order_a"], delta_lcu)
    plan = plan_evolution(decomp, args.time, args.eps)
    psi = initial_state(cfg, grid, args.seed)
    ledger = QueryLedger()
    final, report = evolve(decomp, psi, plan, ledger, mode=args.mode)
    doc: dict[str, Any] = {
        "config": cfg,
        "time": args.time,
        "eps": args.eps,
        "seed": args.seed,
        "delta_lcu": delta_lcu,
        "n_terms": decomp.n_terms,
        "energy_shift": energy_shift(grid, cfg["order_a"]),
        "ledger": ledger.as_dict(),
        "segments": report.as_dict(),
        "final_norm": final.norm,
    }
    if args.oracle_check:
        if grid.dimension > EXPM_CAP:
            raise UsageError(f"--oracle-check needs dimension <= {EXPM_CAP}, got {grid.dimension}")
        ref = expm_evolve(decomp.effective_matrix(), psi, args.time)
        doc["error_vs_expm"] = float(np.linalg.norm(final.amplitudes - ref.amplitudes))
        doc["overlap_vs_expm"] = abs(inner_product(ref, final))
    _write(args.out, "simulate.json", _dump(doc))
    save_state(final, args.out / "final_state.bin")
    summary = {k: doc[k] for k in ("ledger", "final_norm", "error_vs_expm") if k in doc}
    sys.stdout.write(_dump(summary))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    rows = run_suites(args.suite, args.seed)
    width = max(len(r.name) for r in rows)
    lines = [f"{'suite':<12} {'check':<{width}}  result  detail"]
    for r in rows:
        lines.append(f"{r.suite:<12} {r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    failed = sum(not r.passed for r in rows)
    lines.append(f"{len(rows) - failed}/{len(rows)} checks passed")
    sys.stdout.write("\n".join(lines) + "\n")
    _write(args.out, f"verify_{args.suite}.json", _dump({"suite": args.suite, "seed": args.seed, "checks": [r.as_dict() for r in rows]}))
    return 0 if failed == 0 else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gridlcu", description="Real-space grid simulation via truncated Taylor series LCU.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("out"), help="report directory (default ./out)")
    common.add_argument("--seed", type=int, default=0, help="seed for random test states (default 0)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("coeffs", parents=[common], help="central-difference coefficients")
    p.add_argument("--order", type=int, required=True, help="half-width a of the stencil")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_coeffs)

    for name, func, modes, default in (
        ("estimate", cmd_estimate, ("worst", "optimistic"), "worst"),
        ("simulate", cmd_simulate, ("effective", "blockencoding"), "effective"),
    ):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--config", required=True)
        p.add_argument("--time", type=float, required=True)
        p.add_argument("--eps", type=float, required=True)
        p.add_argument("--mode", choices=modes, default=default)
        if name == "estimate":
            p.add_argument("--sweep", help="param=lo:hi:n, written as a CSV table")
            p.add_argument("--rule", choices=("safe", "literal"), default="safe", help="stencil order rule")
        else:
            p.add_argument("--oracle-check", action="store_true", help="compare against the dense exponential")
        p.set_defaults(func=func)

    p = sub.add_parser("verify", parents=[common], help="run self-check suites")
    p.add_argument("--suite", choices=tuple(SUITES) + ("all",), default="all")
    p.set_defaults(func=cmd_verify)
    return parser


def _error(kind: str, message: str, **extra: Any) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}, sort_keys=True) + "\n")


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _error("usage", str(exc))
        return EXIT_USAGE
    except HypothesisError as exc:
        _error(exc.kind, str(exc), assumption=exc.assumption, detail=exc.detail)
        return EXIT_HYPOTHESIS
    except GridLcuError as exc:
        _error(exc.kind, str(exc))
        return EXIT_ERROR
    except (KeyError, TypeError, ValueError) as exc:
        _error("config", f"{type(exc).__name__}: {exc}")
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
