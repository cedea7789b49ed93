"""Run configuration: JSON schema validation and object construction.

A run config is a strict-schema JSON document with three blocks::

    {
      "lattice": {"preset": "triangular", "angles": {"phi": 0.0},
                  "epsilon": 0.05, "lengths": [10, 1], "shift": [..]?},
      "model":   {"shells": [{"class": "nn", "form": "morse",
                              "alpha": 1.0, "beta": 1.0}, ...],
                  "chi": {"R": 10.0, "penalty": ...}?},
      "run":     {"a": 0.3? , "a_grid": "0:0.05:2"?, "bc": "bc1",
                  "eps": ["l1/8", 0.05]?, "seed": 0?}?
    }

Unknown keys are rejected everywhere; all physical quantities must be
positive.  Epsilon schedule entries may reference side lengths symbolically
("l1/8", "l2/64").
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import BravaisBasis, DomainBox, build_basis
from .potentials import CellEnergyModel, Shell, make_potential

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "parse_grid",
           "resolve_eps"]

_SHELL_CLASSES = {"nn": 1.0, "nnn": math.sqrt(2.0)}
_PRESET_SHELLS = {"triangular": 1, "square": 2, "cubic": 2}


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


def _require_keys(block: dict, allowed: set[str], required: set[str], where: str):
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = required - set(block)
    if missing:
        raise ConfigError(f"{where}: missing key(s) {sorted(missing)}")


def _positive(value, where: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    if not v > 0 or not math.isfinite(v):
        raise ConfigError(f"{where}: must be positive and finite, got {v}")
    return v


def _shell_distance(cls, where: str) -> float:
    if isinstance(cls, str):
        if cls not in _SHELL_CLASSES:
            raise ConfigError(f"{where}: shell class must be 'nn', 'nnn' or a number")
        return _SHELL_CLASSES[cls]
    return _positive(cls, where)


@dataclass(frozen=True)
class RunConfig:
    basis: BravaisBasis
    box: DomainBox
    model: CellEnergyModel
    a: float | None
    a_grid: np.ndarray | None
    bc: str
    eps_schedule: tuple[float, ...]
    seed: int
    raw: dict = field(repr=False)


def parse_grid(entry, where: str = "run.a_grid") -> np.ndarray:
    """Parse 'start:step:stop' (inclusive stop) or an explicit list."""
    if isinstance(entry, str):
        parts = entry.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{where}: expected 'start:step:stop'")
        try:
            start, step, stop = (float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"{where}: non-numeric grid bounds") from None
        if step <= 0 or stop < start:
            raise ConfigError(f"{where}: need step > 0 and stop >= start")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(n)
    try:
        grid = np.asarray([float(x) for x in entry], dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a list of numbers") from None
    if grid.size == 0 or (grid < 0).any():
        raise ConfigError(f"{where}: grid must be nonempty and nonnegative")
    return grid


def resolve_eps(entry, lengths, where: str = "eps") -> float:
    """Resolve one epsilon entry: a number or 'l<j>/<n>'."""
    if isinstance(entry, str):
        text = entry.strip().replace(" ", "")
        if "/" in text and text.startswith("l"):
            num, _, den = text.partition("/")
            try:
                j = int(num[1:])
                d = float(den)
            except ValueError:
                raise ConfigError(f"{where}: cannot parse {entry!r}") from None
            if not 1 <= j <= len(lengths) or d <= 0:
                raise ConfigError(f"{where}: bad side index or divisor in {entry!r}")
            return lengths[j - 1] / d
        try:
            return _positive(float(text), where)
        except ValueError:
            raise ConfigError(f"{where}: cannot parse {entry!r}") from None
    return _positive(entry, where)


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected a JSON object")
    _require_keys(doc, {"lattice", "model", "run"}, {"lattice", "model"}, "top level")

    lat = doc["lattice"]
    _require_keys(lat, {"preset", "angles", "basis", "epsilon", "lengths", "shift"},
                  {"preset", "epsilon", "lengths"}, "lattice")
    preset = lat["preset"]
    angles = lat.get("angles", {})
    _require_keys(angles, {"phi", "psi"}, set(), "lattice.angles")
    phi = float(angles.get("phi", 0.0))
    psi = float(angles.get("psi", 0.0))
    try:
        if preset == "custom":
            basis = build_basis("custom", matrix=np.asarray(lat.get("basis"), dtype=float))
        else:
            basis = build_basis(preset, phi=phi, psi=psi)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"lattice: {exc}") from exc

    lengths = lat["lengths"]
    if not isinstance(lengths, (list, tuple)) or len(lengths) != basis.dimension:
        raise ConfigError("lattice.lengths: need one positive length per dimension")
    lengths = tuple(_positive(l, "lattice.lengths") for l in lengths)
    epsilon = _positive(lat["epsilon"], "lattice.epsilon")
    shift = lat.get("shift")
    if shift is not None:
        if len(shift) != basis.dimension:
            raise ConfigError("lattice.shift: wrong dimension")
        shift = tuple(float(x) for x in shift)
    try:
        box = DomainBox(lengths, epsilon, shift)
    except ValueError as exc:
        raise ConfigError(f"lattice: {exc}") from exc

    mdl = doc["model"]
    _require_keys(mdl, {"shells", "chi"}, {"shells"}, "model")
    shells_doc = mdl["shells"]
    if not isinstance(shells_doc, list) or not shells_doc:
        raise ConfigError("model.shells: need a nonempty list")
    if preset in _PRESET_SHELLS and len(shells_doc) != _PRESET_SHELLS[preset]:
        raise ConfigError(
            f"model.shells: {preset} preset expects {_PRESET_SHELLS[preset]} shell(s)")
    shells = []
    for n, sh in enumerate(shells_doc):
        where = f"model.shells[{n}]"
        _require_keys(sh, {"class", "form", "alpha", "beta", "table"},
                      {"class", "form"}, where)
        dist = _shell_distance(sh["class"], where)
        form = sh["form"]
        alpha = sh.get("alpha")
        beta = sh.get("beta")
        if alpha is not None:
            alpha = _positive(alpha, f"{where}.alpha")
        if beta is not None:
            beta = _positive(beta, f"{where}.beta")
        try:
            pot = make_potential(form, alpha=alpha, beta=beta, table=sh.get("table"))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        shells.append(Shell(dist, pot))
    chi_doc = mdl.get("chi", {})
    _require_keys(chi_doc, {"R", "penalty"}, set(), "model.chi")
    chi_radius = _positive(chi_doc.get("R", 10.0), "model.chi.R")
    chi_penalty = chi_doc.get("penalty")
    if chi_penalty is not None:
        chi_penalty = _positive(chi_penalty, "model.chi.penalty")
    try:
        model = CellEnergyModel(basis, shells, chi_radius=chi_radius,
                                chi_penalty=chi_penalty)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc

    run = doc.get("run", {})
    _require_keys(run, {"a", "a_grid", "bc", "eps", "seed", "out"}, set(), "run")
    a = run.get("a")
    if a is not None:
        a = float(a)
        if a < 0:
            raise ConfigError("run.a: scaled load must be nonnegative")
    a_grid = parse_grid(run["a_grid"]) if "a_grid" in run else None
    bc = run.get("bc", "bc1")
    if bc not in ("bc1", "bc2"):
        raise ConfigError("run.bc: must be 'bc1' or 'bc2'")
    eps_schedule = tuple(
        resolve_eps(e, lengths, "run.eps") for e in run.get("eps", [])
    )
    seed = int(run.get("seed", 0))

    return RunConfig(basis=basis, box=box, model=model, a=a, a_grid=a_grid,
                     bc=bc, eps_schedule=eps_schedule, seed=seed, raw=doc)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config file {path!r} is not valid JSON "
            f"(line {exc.lineno}, column {exc.colno}: {exc.msg})") from exc
    return parse_config(doc)
