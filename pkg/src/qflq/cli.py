"""Command-line runner: ``qflq <task> --config <path> [--out <path>] ...``.

Exit codes: 0 ok, 2 configuration error, 3 resonance, 4 integrator accuracy.
Primary outputs are byte-identical for identical configurations.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import TASKS, ConfigError, RunConfig, parse_config
from .errors import AccuracyError, ContractError, OrderRangeError, ResonanceError
from .lambda_model import LambdaExperiment, run_experiment
from .magnus import effective_hamiltonian, expand
from .propagator import evolve_exact
from .sambe import build_extended, central_quasienergies, propagators_from_extended, quasienergies

log = logging.getLogger("qflq")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESONANCE = 3
EXIT_ACCURACY = 4


def fmt(x: float) -> str:
    """Shortest round-trip decimal form (at most 17 significant digits)."""
    return repr(float(x))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def _matrix(mat) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat)]


def task_effective_hamiltonian(cfg: RunConfig) -> dict[str, str]:
    H = cfg.hamiltonian()
    series = expand(H, cfg.order, cfg.resonance_threshold)
    doc = {
        "task": "effective-hamiltonian",
        "dim": H.dim,
        "omega": [float(w) for w in H.omega],
        "order": series.order,
        "input_hash": series.input_hash,
        "resonance_threshold": series.res_threshold,
        "orders": [
            {"order": t.order, "norm": t.hq_norm, "hq": _matrix(t.hq)} for t in series.terms
        ],
        "effective_hamiltonian": _matrix(effective_hamiltonian(series, series.order)),
    }
    return {"": _json(doc)}


def task_evolve(cfg: RunConfig) -> dict[str, str]:
    H = cfg.hamiltonian()
    trace = evolve_exact(H, cfg.time_grid(), cfg.grid.substeps, cfg.tolerance)
    elements = cfg.elements or [(i, j) for i in range(H.dim) for j in range(H.dim)]
    header = ["t"]
    for i, j in elements:
        header += [f"re_U_{i}_{j}", f"im_U_{i}_{j}"]
    header.append("unitarity_residual")
    residual = trace.unitarity_residuals()
    rows = []
    for k, t in enumerate(trace.times):
        row = [t]
        for i, j in elements:
            z = trace.unitaries[k, i, j]
            row += [z.real, z.imag]
        row.append(residual[k])
        rows.append(row)
    return {"": _csv(header, rows)}


def task_lambda_demo(cfg: RunConfig) -> dict[str, str]:
    exp = LambdaExperiment(cfg.drive_spec(), cfg.time_grid(), cfg.grid.substeps)
    table = run_experiment(exp)
    return {"": _csv(table.header, table.rows)}


def task_sambe_compare(cfg: RunConfig) -> dict[str, str]:
    H = cfg.hamiltonian()
    grid = cfg.time_grid()
    trace = evolve_exact(H, grid, cfg.grid.substeps, cfg.tolerance)
    K = build_extended(H, cfg.cutoff)
    us = propagators_from_extended(K, trace.times)
    err = np.linalg.norm(us - trace.unitaries, axis=(-2, -1))
    curve = _csv(["t", "sambe_minus_ode_fro"], zip(trace.times, err))
    doc = {
        "cutoff": cfg.cutoff,
        "size": int(K.matrix.shape[0]),
        "omega": [float(w) for w in K.omega],
        "hermiticity_error": K.hermiticity_error(),
        "central_quasienergies": [float(x) for x in central_quasienergies(K, 0)],
        "quasienergies": [float(x) for x in quasienergies(K)],
    }
    return {"": curve, ".quasienergies.json": _json(doc)}


DISPATCH = {
    "effective-hamiltonian": task_effective_hamiltonian,
    "evolve": task_evolve,
    "lambda-demo": task_lambda_demo,
    "sambe-compare": task_sambe_compare,
}


def _suffix_path(out: Path, suffix: str) -> Path:
    if not suffix:
        return out
    return out.with_name(out.stem + suffix)


def run(cfg: RunConfig, out: str | None = None, stdout=None) -> int:
    """Execute a validated configuration and write its outputs.

    The primary output goes to ``out`` (or ``cfg.output``, or stdout); extra
    outputs are written next to it with a suffix.
    """
    stdout = stdout or sys.stdout
    try:
        files = DISPATCH[cfg.task](cfg)
    except ResonanceError as exc:
        print(f"qflq: resonance error\n{exc.report}", file=sys.stderr)
        return EXIT_RESONANCE
    except AccuracyError as exc:
        print(f"qflq: accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except (ContractError, OrderRangeError, ValueError) as exc:
        print(f"qflq: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    target = out or cfg.output
    if target is None:
        for suffix, text in files.items():
            if suffix:
                print(f"qflq: no output path given, skipping {suffix} output", file=sys.stderr)
                continue
            stdout.write(text)
        return EXIT_OK
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    for suffix, text in files.items():
        path = _suffix_path(target, suffix)
        path.write_text(text, encoding="utf-8", newline="\n")
        log.info("wrote %s", path)
    return EXIT_OK


def _load(path: Path, task: str, order: int | None, cutoff: int | None) -> RunConfig:
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    cfg = parse_config(data, task)
    update = {}
    if order is not None:
        update["order"] = order
    if cutoff is not None:
        update["cutoff"] = cutoff
    return cfg.model_copy(update=update) if update else cfg


def config_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()[:16]


def _sweep(args) -> int:
    sweep_dir = Path(args.sweep)
    configs = sorted(sweep_dir.glob("*.json"))
    if not configs:
        print(f"qflq: no *.json configs in {sweep_dir}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out) if args.out else sweep_dir / "out"
    ext = ".json" if args.task == "effective-hamiltonian" else ".csv"
    threads = max(1, int(os.environ.get("QFLQ_THREADS", "1") or 1))

    def one(path: Path) -> int:
        try:
            cfg = _load(path, args.task, args.order, args.cutoff)
        except ConfigError as exc:
            print(f"qflq: {path.name}: config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        target = out_dir / f"{path.stem}-{config_hash(path)}{ext}"
        return run(cfg, str(target))

    with ThreadPoolExecutor(max_workers=threads) as pool:
        codes = list(pool.map(one, configs))
    for path, code in zip(configs, codes):
        log.info("%s -> exit %d", path.name, code)
    return max(codes)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qflq",
        description="Effective Hamiltonians for quasi-periodically driven quantum systems.",
    )
    p.add_argument("task", choices=TASKS)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON run configuration")
    src.add_argument("--sweep", help="directory of JSON configs to run independently")
    p.add_argument("--out", help="output path (directory for --sweep)")
    p.add_argument("--order", type=int, help="override the expansion order")
    p.add_argument("--cutoff", type=int, help="override the extended-space cutoff")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.order is not None and args.order < 1:
        print("qflq: config error: order: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.cutoff is not None and args.cutoff < 0:
        print("qflq: config error: cutoff: must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    if args.sweep:
        return _sweep(args)
    try:
        cfg = _load(Path(args.config), args.task, args.order, args.cutoff)
    except ConfigError as exc:
        print(f"qflq: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
