"""Command-line front end.

Subcommands::

    cleavelab constants --config run.json            # JSON constants report
    cleavelab predict   --config run.json --a-grid 0:0.05:2      # CSV curve
    cleavelab energy    --config run.json --which elastic --a 0.3 --eps l2/32
    cleavelab minimize  --config run.json --a 0.3 --eps 0.05 [--bc bc1]
    cleavelab sweep     --config run.json --a 0.3 --eps l2/8,l2/16,l2/32

Exit codes: 0 success, 1 configuration error, 2 inadmissible model
(indefinite strain form), 3 numerical failure.  Outputs are deterministic
for a fixed config and seed; floats are printed with 12 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys

import numpy as np

from .cleavage import (
    cleavage_law,
    count_broken_bonds,
    cracked_config,
    crack_energy_limit,
    elastic_config,
)
from .config import ConfigError, load_config, parse_grid, resolve_eps
from .elastic import InadmissibleModelError, compute_elastic_constants
from .fracture import compute_fracture_constants
from .lattice import DomainBox, build_lattice, crystallographic_normals
from .potentials import bond_betas, total_energy
from .simulate import epsilon_sweep, minimize

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INADMISSIBLE = 2
EXIT_NUMERICAL = 3


def _fmt(x: float) -> float:
    """Round to 12 significant digits for stable, readable output."""
    if isinstance(x, float) and math.isfinite(x):
        return float(f"{x:.12g}")
    return x


def _fmt_tree(obj):
    if isinstance(obj, dict):
        return {k: _fmt_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_fmt_tree(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return _fmt(float(obj))
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def _emit(text: str, out_path: str | None):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, out_path: str | None):
    _emit(json.dumps(_fmt_tree(obj), indent=2, sort_keys=True) + "\n", out_path)


def _emit_csv(header, rows, out_path: str | None):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])
    _emit(buf.getvalue(), out_path)


def _constants_payload(cfg):
    ec = compute_elastic_constants(cfg.model)
    betas = bond_betas(cfg.model)
    normals = crystallographic_normals(cfg.model.directions)
    fc = compute_fracture_constants(betas, normals,
                                    transverse_lengths=cfg.box.lengths[1:])
    law = cleavage_law(ec.alpha, fc.beta, cfg.box.lengths, cfg.basis.det,
                       min_len=fc.length)
    payload = ec.to_json_dict()
    payload.update(fc.to_json_dict())
    payload["a_crit"] = law.a_crit
    payload["prefactor"] = law.prefactor
    payload["lattice"] = cfg.basis.to_json_dict()
    payload["seed"] = cfg.seed
    return payload, ec, fc, law


def _cmd_constants(cfg, args) -> int:
    payload, _, _, _ = _constants_payload(cfg)
    _emit_json(payload, args.out)
    return EXIT_OK


def _cmd_predict(cfg, args) -> int:
    grid = cfg.a_grid
    if args.a_grid:
        grid = parse_grid(args.a_grid, "--a-grid")
    if grid is None:
        raise ConfigError("predict needs an a-grid (--a-grid or run.a_grid)")
    _, ec, fc, law = _constants_payload(cfg)
    rows = [[float(a), float(law.energy(a)), str(law.branch(a))] for a in grid]
    _emit_csv(["a", "E_lim", "branch"], rows, args.out)
    return EXIT_OK


def _scaled_load(args, eps: float, default_a_eps: float | None = None) -> float:
    """a_eps from either --a (scaled by sqrt(eps)) or --a-eps (absolute)."""
    if args.a_eps is not None:
        return float(args.a_eps)
    if args.a is not None:
        return float(args.a) * math.sqrt(eps)
    if default_a_eps is not None:
        return default_a_eps
    raise ConfigError("need --a or --a-eps")


def _lattice_at(cfg, eps: float | None):
    box = cfg.box
    if eps is not None:
        box = DomainBox(box.lengths, eps, box.shift)
    return build_lattice(cfg.basis, box)


def _cmd_energy(cfg, args) -> int:
    eps = resolve_eps(args.eps, cfg.box.lengths, "--eps") if args.eps else cfg.box.epsilon
    lat = _lattice_at(cfg, eps)
    _, ec, fc, law = _constants_payload(cfg)
    if args.which == "elastic":
        a_eps = _scaled_load(args, eps)
        conf = elastic_config(lat, a_eps, ec.Fbar(a_eps))
        energy = total_energy(lat, conf.positions, cfg.model)
        a = a_eps / math.sqrt(eps)
        limit = law.elastic_branch(a)
        payload = {
            "which": "elastic",
            "a": a,
            "a_eps": a_eps,
            "epsilon": eps,
            "energy": energy,
            "limit": float(limit),
            "ratio": energy / limit if limit > 0 else energy,
        }
    else:
        a_eps = _scaled_load(args, eps, default_a_eps=10.0)
        xi = fc.minimizers[0]
        conf = cracked_config(lat, xi, a_eps)
        energy = total_energy(lat, conf.positions, cfg.model)
        betas = bond_betas(cfg.model)
        limit = crack_energy_limit(betas, xi, lat.box.lengths, cfg.basis.det)
        payload = {
            "which": "cracked",
            "normal": [float(x) for x in xi],
            "a_eps": a_eps,
            "epsilon": eps,
            "energy": energy,
            "limit": limit,
            "ratio": energy / limit if limit > 0 else energy,
            "broken_bonds": count_broken_bonds(lat, cfg.model, xi),
        }
    if not math.isfinite(energy):
        _emit_json(payload, args.out)
        return EXIT_NUMERICAL
    _emit_json(payload, args.out)
    return EXIT_OK


def _cmd_minimize(cfg, args) -> int:
    eps = resolve_eps(args.eps, cfg.box.lengths, "--eps") if args.eps else cfg.box.epsilon
    lat = _lattice_at(cfg, eps)
    a_eps = _scaled_load(args, eps)
    starts = tuple(s.strip() for s in args.starts.split(",") if s.strip())
    report = minimize(lat, cfg.model, a_eps, variant=args.bc or cfg.bc,
                      starts=starts)
    payload = report.to_json_dict()
    payload["epsilon"] = eps
    payload["seed"] = cfg.seed
    _emit_json(payload, args.out)
    if not math.isfinite(report.best_energy):
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_sweep(cfg, args) -> int:
    if args.eps:
        schedule = [resolve_eps(e.strip(), cfg.box.lengths, "--eps")
                    for e in args.eps.split(",") if e.strip()]
    else:
        schedule = list(cfg.eps_schedule)
    if not schedule:
        raise ConfigError("sweep needs an epsilon schedule (--eps or run.eps)")
    a = float(args.a) if args.a is not None else cfg.a
    if a is None:
        raise ConfigError("sweep needs a scaled load (--a or run.a)")
    starts = tuple(s.strip() for s in args.starts.split(",") if s.strip())
    table = epsilon_sweep(cfg.basis, cfg.model, cfg.box.lengths, a, schedule,
                          variant=args.bc or cfg.bc, starts=starts,
                          threads=args.threads)
    header = list(table.COLUMNS)
    if args.timings:
        header.append("wall_time")
    _emit_csv(header, table.to_rows(with_timings=args.timings), args.out)
    if any(not math.isfinite(r.best_energy) for r in table.rows):
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cleavelab",
        description="Cleavage laws of brittle crystals from atomistic cell energies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to the run-config JSON")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=None,
                       help="override run.seed (recorded in reports)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for independent sweep points")

    p = sub.add_parser("constants", help="elastic and fracture constants report")
    common(p)

    p = sub.add_parser("predict", help="limit energy curve over a load grid")
    common(p)
    p.add_argument("--a-grid", default=None, help="grid 'start:step:stop' or from config")

    p = sub.add_parser("energy", help="energy of a candidate configuration")
    common(p)
    p.add_argument("--which", choices=("elastic", "cracked"), required=True)
    p.add_argument("--a", type=float, default=None, help="scaled load a (a_eps = a sqrt(eps))")
    p.add_argument("--a-eps", type=float, default=None, help="absolute boundary displacement")
    p.add_argument("--eps", default=None, help="spacing (number or 'l1/64')")

    p = sub.add_parser("minimize", help="local minimization from physical starts")
    common(p)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--a-eps", type=float, default=None)
    p.add_argument("--eps", default=None)
    p.add_argument("--bc", choices=("bc1", "bc2"), default=None)
    p.add_argument("--starts", default="elastic,cracked")

    p = sub.add_parser("sweep", help="epsilon convergence sweep at fixed scaled load")
    common(p)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--eps", default=None, help="comma list, entries may be 'l1/8'")
    p.add_argument("--bc", choices=("bc1", "bc2"), default=None)
    p.add_argument("--starts", default="elastic,cracked")
    p.add_argument("--timings", action="store_true",
                   help="append a wall-time column (breaks byte-reproducibility)")

    return parser


_COMMANDS = {
    "constants": _cmd_constants,
    "predict": _cmd_predict,
    "energy": _cmd_energy,
    "minimize": _cmd_minimize,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.out is None:
            args.out = cfg.raw.get("run", {}).get("out")
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InadmissibleModelError as exc:
        print(f"inadmissible model: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
