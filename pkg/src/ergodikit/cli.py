"""Command-line entry point: ``ergodikit <command> [options]``.

Exit codes: 0 success, 2 validation failure, 3 numerical failure, 4 IO.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import RunConfig, load_config, with_overrides
from .errors import ConvergenceError, ValidationError
from .measure import stationarity_defect
from .posterior import (
    full_posterior,
    order_defects,
    posterior_to_dict,
    select_order_baseline,
    update_order,
)
from .projection import KernelSequence, kernel_sequence, project_chain
from .report import SWEEP_FORMAT, render_report, sweep_csv, sweep_svg
from .sampler import DirichletTensorPrior, Trajectory, format_trajectory, read_trajectory, sample_order, sample_tensor, sample_trajectory
from .tensors import make_tensor, read_tensor, tensor_from_dict, tensor_to_dict

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
CHECK_TOL = 1e-8


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=1) + "\n"


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(cfg: RunConfig) -> dict[str, Path]:
    """Sample (or fix) an order and tensor, then a trajectory of length ``cfg.n``."""
    if cfg.tensor is not None:
        tensor = read_tensor(cfg.tensor)
        if tensor.alphabet_size != cfg.alphabet_size:
            raise ValidationError(
                f"simulate.tensor: alphabet size {tensor.alphabet_size} != configured {cfg.alphabet_size}"
            )
        if cfg.order is not None and cfg.order != tensor.order:
            raise ValidationError(f"simulate.order: {cfg.order} disagrees with tensor order {tensor.order}")
        order, source = tensor.order, "fixed"
    else:
        if cfg.order is not None:
            order, source = cfg.order, "fixed"
        else:
            nu = cfg.order_prior()
            order, source = sample_order(nu, cfg.seed), "sampled"
        prior = DirichletTensorPrior.symmetric(order, cfg.alphabet_size, cfg.alpha_for(order))
        tensor = sample_tensor(prior, cfg.seed)
    seq = kernel_sequence(tensor)
    traj = sample_trajectory(seq, cfg.n, cfg.seed)

    out = _out_dir(cfg)
    digest = cfg.digest()
    paths = {"trajectory": out / "trajectory.txt", "model": out / "model.json"}
    paths["trajectory"].write_text(format_trajectory(traj, comments=[f"config={digest}"]))
    model = {
        "config_hash": digest,
        "seed": cfg.seed,
        "order": order,
        "order_source": source,
        "alphabet_size": cfg.alphabet_size,
        "tensor": tensor_to_dict(tensor),
        "kernels": [k.rows.tolist() for k in seq],
    }
    paths["model"].write_text(_dump(model))
    return paths


def cmd_infer(cfg: RunConfig, trajectory: str | Path) -> dict[str, Path]:
    traj = read_trajectory(trajectory, cfg.alphabet_size)
    state = full_posterior(cfg.order_prior(), cfg.tensor_priors(), traj)
    doc = posterior_to_dict(state, config_hash=cfg.digest())
    out = _out_dir(cfg)
    paths = {"posterior": out / "posterior.json", "report": out / "report.txt"}
    paths["posterior"].write_text(_dump(doc))
    paths["report"].write_text(render_report(doc))
    return paths


def _sweep_row(beta, traj: Trajectory, m: int) -> dict:
    prefix = traj.prefix(m)
    defects = order_defects(prefix, beta.max_order)
    nu = update_order(beta, prefix, defects)
    return {
        "m": m,
        "posterior": nu.probabilities.tolist(),
        "defects": [{"order": d.order, "log_total": None if d.zero else d.log_total, "zero": d.zero} for d in defects],
    }


def sweep_document(cfg: RunConfig, traj: Trajectory) -> dict:
    if cfg.grid[-1] > len(traj):
        raise ValidationError(f"sweep.grid: largest grid point {cfg.grid[-1]} exceeds n = {len(traj)}")
    beta = cfg.order_prior()
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        rows = list(pool.map(lambda m: _sweep_row(beta, traj, m), cfg.grid))
    return {
        "format": SWEEP_FORMAT,
        "config_hash": cfg.digest(),
        "alphabet_size": traj.alphabet_size,
        "max_order": beta.max_order,
        "grid": list(cfg.grid),
        "rows": rows,
    }


def cmd_sweep(cfg: RunConfig, trajectory: str | Path) -> dict[str, Path]:
    """Order posterior on growing prefixes ``X[:m]`` for ``m`` in the grid."""
    traj = read_trajectory(trajectory, cfg.alphabet_size)
    doc = sweep_document(cfg, traj)
    out = _out_dir(cfg)
    paths = {"sweep": out / "sweep.json", "csv": out / "sweep.csv", "svg": out / "sweep.svg"}
    paths["sweep"].write_text(_dump(doc))
    paths["csv"].write_text(sweep_csv(doc))
    paths["svg"].write_text(sweep_svg(doc))
    return paths


def cmd_project(cfg: RunConfig, tensor_file: str | Path, target_order: int) -> Path:
    tensor = read_tensor(tensor_file)
    result = project_chain(tensor, target_order)
    out = _out_dir(cfg) / f"tensor_order{target_order}.json"
    doc = {"config_hash": cfg.digest()}
    doc.update(tensor_to_dict(result))
    out.write_text(_dump(doc))
    return out


def load_sequence(path: str | Path) -> KernelSequence:
    """Kernel sequence from a model/sequence file, or generated from a tensor file."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    if "kernels" in doc:
        s = int(doc["alphabet_size"])
        return KernelSequence([make_tensor(m, rows, s) for m, rows in enumerate(doc["kernels"])], check=False)
    return kernel_sequence(tensor_from_dict(doc))


def cmd_check(cfg: RunConfig, path: str | Path) -> tuple[float, tuple[int, ...], bool]:
    seq = load_sequence(path)
    residual, word = stationarity_defect(seq, cfg.depth)
    return residual, word, residual <= CHECK_TOL


def cmd_bench(cfg: RunConfig, trajectory: str | Path) -> Path:
    """Compare the defect-based order posterior with the conditional-marginal baseline."""
    traj = read_trajectory(trajectory, cfg.alphabet_size)
    beta, priors = cfg.order_prior(), cfg.tensor_priors()
    lines = [f"# config={cfg.digest()}", "m,selector,order,mass"]
    for m in cfg.grid:
        if m > len(traj):
            raise ValidationError(f"sweep.grid: grid point {m} exceeds n = {len(traj)}")
        x = traj.prefix(m)
        for name, probs in (
            ("defect", update_order(beta, x).probabilities),
            ("marginal", select_order_baseline(beta, priors, x)),
        ):
            lines.extend(f"{m},{name},{N},{p!r}" for N, p in enumerate(probs))
    out = _out_dir(cfg) / "bench.csv"
    out.write_text("\n".join(lines) + "\n")
    return out


def cmd_render(cfg: RunConfig, path: str | Path) -> list[Path]:
    """Regenerate report/CSV/SVG from a saved posterior or sweep document."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    out = _out_dir(cfg)
    if doc.get("format") == SWEEP_FORMAT:
        (out / "sweep.csv").write_text(sweep_csv(doc))
        (out / "sweep.svg").write_text(sweep_svg(doc))
        return [out / "sweep.csv", out / "sweep.svg"]
    (out / "report.txt").write_text(render_report(doc))
    return [out / "report.txt"]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--nmax", type=int)

    parser = argparse.ArgumentParser(prog="ergodikit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="sample order, tensor and trajectory")
    p.add_argument("--order", type=int, help="fix the order instead of sampling it")
    p.add_argument("--n", type=int, help="trajectory length")
    p.add_argument("--tensor", metavar="PATH", help="fix the tensor (JSON file)")

    p = sub.add_parser("infer", parents=[common], help="posterior for a trajectory")
    p.add_argument("trajectory")

    p = sub.add_parser("sweep", parents=[common], help="order posterior over a grid of prefix lengths")
    p.add_argument("trajectory")
    p.add_argument("--grid", help='comma-separated prefix lengths, e.g. "100,1000"')

    p = sub.add_parser("project", parents=[common], help="project a tensor to a lower order")
    p.add_argument("tensor")
    p.add_argument("--order", type=int, required=True, help="target order")

    p = sub.add_parser("check", parents=[common], help="stationarity check of a tensor or kernel sequence")
    p.add_argument("file")
    p.add_argument("--depth", type=int)

    p = sub.add_parser("bench", parents=[common], help="compare order selectors on a trajectory")
    p.add_argument("trajectory")
    p.add_argument("--grid")

    p = sub.add_parser("render", parents=[common], help="rebuild report/CSV/SVG from a saved document")
    p.add_argument("document")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config)
    overrides = {"seed": args.seed, "out": args.out, "nmax": args.nmax}
    for key in ("n", "tensor", "grid", "depth"):
        overrides[key] = getattr(args, key, None)
    if args.command == "simulate":
        overrides["order"] = args.order
    cfg = with_overrides(cfg, **overrides)

    if args.command == "simulate":
        paths = cmd_simulate(cfg)
        print(f"wrote {paths['trajectory']} and {paths['model']}")
    elif args.command == "infer":
        paths = cmd_infer(cfg, args.trajectory)
        print(paths["report"].read_text(), end="")
    elif args.command == "sweep":
        paths = cmd_sweep(cfg, args.trajectory)
        print(f"wrote {paths['csv']} and {paths['svg']}")
    elif args.command == "project":
        print(f"wrote {cmd_project(cfg, args.tensor, args.order)}")
    elif args.command == "check":
        residual, word, ok = cmd_check(cfg, args.file)
        label = "".join(map(str, word)) if word else "()"
        print(f"max residual {residual:.3e} at word {label} (depth {cfg.depth})")
        print("stationary" if ok else f"NOT stationary: residual exceeds {CHECK_TOL:g}")
        return EXIT_OK if ok else EXIT_VALIDATION
    elif args.command == "bench":
        print(f"wrote {cmd_bench(cfg, args.trajectory)}")
    elif args.command == "render":
        for path in cmd_render(cfg, args.document):
            print(f"wrote {path}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        return run(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
