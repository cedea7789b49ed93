"""Local minimization of the lattice energy under tension boundary conditions.

The admissible set clamps the first coordinate of every atom in the two
boundary strips (the other coordinates stay free, so atoms may slide along
the clamped faces).  Minimization runs a limited-memory quasi-Newton descent
with backtracking Armijo line search over the free coordinates; trial steps
that violate the orientation penalty are rejected inside the line search, so
the smooth pair energy is the only quantity ever differentiated.

Two physical starting basins are provided: the homogeneous elastic
configuration and rigid separations across each optimal cleavage plane; the
reported minimum is the best over starts.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cleavage import cracked_config, elastic_config
from .elastic import ElasticConstants, compute_elastic_constants
from .fracture import FractureConstants, compute_fracture_constants
from .lattice import BravaisBasis, DomainBox, LatticeInstance, build_lattice, crystallographic_normals
from .potentials import CellEnergyModel, EnergySystem, bond_betas

__all__ = [
    "BC_VARIANTS",
    "clamp_values",
    "apply_boundary",
    "energy_gradient",
    "MinimizeOptions",
    "MinimizeReport",
    "minimize",
    "SweepRow",
    "SweepTable",
    "epsilon_sweep",
]

BC_VARIANTS = ("bc1", "bc2")


def clamp_values(lat: LatticeInstance, a_eps: float, variant: str) -> tuple[np.ndarray, np.ndarray]:
    """Clamped-atom index array and the prescribed first components.

    bc1 stretches both strips affinely: y1 = (1 + a_eps) x1.
    bc2 pins the left strip and shifts the right one: y1 = x1 (+ a_eps l1).
    """
    if variant not in BC_VARIANTS:
        raise ValueError(f"unknown boundary-condition variant {variant!r}")
    if a_eps < 0:
        raise ValueError("tension boundary conditions need a_eps >= 0")
    clamp = (lat.b1 | lat.b2) & lat.active
    idx = np.nonzero(clamp)[0]
    x1 = lat.positions[idx, 0]
    if variant == "bc1":
        vals = (1.0 + a_eps) * x1
    else:
        vals = np.where(lat.b1[idx], x1, x1 + a_eps * lat.box.lengths[0])
    return idx, vals


def apply_boundary(lat: LatticeInstance, positions: np.ndarray, a_eps: float,
                   variant: str = "bc1") -> np.ndarray:
    """Copy of ``positions`` with the clamped first components imposed."""
    idx, vals = clamp_values(lat, a_eps, variant)
    out = np.array(positions, dtype=float)
    out[idx, 0] = vals
    return out


def _blend_into_clamps(lat: LatticeInstance, positions: np.ndarray, a_eps: float,
                       variant: str, taper_cells: float = 4.0) -> np.ndarray:
    """Admissible start: impose the clamp values and fade the induced first-
    component correction linearly over a few cell layers next to each strip.

    A hard overwrite of mismatched starts (a rigid crack under the affine
    stretch condition, say) can invert cells right at the strip edges; the
    taper spreads the mismatch so the start stays orientation-safe while the
    clamped components are still met exactly.
    """
    out = np.array(positions, dtype=float)
    x1 = lat.positions[:, 0]
    l1 = lat.box.lengths[0]
    strip = 2.0 * lat.l_A * lat.epsilon
    taper = taper_cells * lat.l_A * lat.epsilon
    if variant == "bc1":
        target = (1.0 + a_eps) * x1
    else:
        target = np.where(x1 <= l1 / 2, x1, x1 + a_eps * l1)
    w_left = np.clip(1.0 - (x1 - strip) / taper, 0.0, 1.0)
    w_right = np.clip(1.0 - ((l1 - strip) - x1) / taper, 0.0, 1.0)
    w = np.maximum(w_left, w_right)
    out[:, 0] += w * (target - out[:, 0])
    return apply_boundary(lat, out, a_eps, variant)


def energy_gradient(lat: LatticeInstance, positions: np.ndarray,
                    model: CellEnergyModel, a_eps: float | None = None,
                    variant: str = "bc1") -> np.ndarray:
    """Analytic gradient of the pair energy over the free coordinates.

    Entries of clamped coordinates (and of atoms outside every inner cell)
    are zeroed.  The orientation penalty is excluded by construction.
    """
    diff = positions[lat.cells.ravel()]
    if not np.isfinite(diff).all():
        raise ValueError("configuration misses corner atoms of inner cells")
    system = EnergySystem(lat, model)
    grad = system.gradient(positions)
    grad[~lat.active] = 0.0
    if a_eps is not None:
        idx, _ = clamp_values(lat, a_eps, variant)
        grad[idx, 0] = 0.0
    return grad


@dataclass(frozen=True)
class MinimizeOptions:
    gradient_tol: float | None = None  # None: 1e-8 * eps^(d-1)
    max_iterations: int = 10_000
    memory: int = 10
    armijo_c1: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 60


@dataclass
class _StartResult:
    label: str
    initial_energy: float
    energy: float
    iterations: int
    grad_norm: float
    status: str
    positions: np.ndarray


@dataclass(frozen=True)
class MinimizeReport:
    """Outcome of best-of-starts local minimization."""

    best_energy: float
    best_start: str
    a_eps: float
    variant: str
    start_energies: dict
    initial_energies: dict
    iterations: dict
    grad_norms: dict
    statuses: dict
    chi_violations: int
    positions: np.ndarray = field(repr=False)

    def to_json_dict(self) -> dict:
        return {
            "best_energy": float(self.best_energy),
            "best_start": self.best_start,
            "a_eps": float(self.a_eps),
            "bc": self.variant,
            "start_energies": {k: float(v) for k, v in self.start_energies.items()},
            "initial_energies": {k: float(v) for k, v in self.initial_energies.items()},
            "iterations": dict(self.iterations),
            "gradient_norms": {k: float(v) for k, v in self.grad_norms.items()},
            "statuses": dict(self.statuses),
            "chi_violations": int(self.chi_violations),
        }


def _lbfgs(fun_grad, x0, feasible, opts: MinimizeOptions, gtol: float,
           history=None):
    """Limited-memory quasi-Newton descent with Armijo backtracking.

    ``feasible(x)`` guards trial points: infeasible steps are rejected by
    shrinking the step, never differentiated.  Accepted energies are
    monotone non-increasing.
    """
    x = x0.copy()
    f, g = fun_grad(x)
    if history is not None:
        history.append(f)
    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    status = "maxiter"
    it = 0
    for it in range(1, opts.max_iterations + 1):
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if gnorm <= gtol:
            status = "converged"
            it -= 1
            break
        # two-loop recursion
        q = -g
        alphas = []
        for s, y in zip(reversed(s_list), reversed(y_list)):
            rho = 1.0 / float(y @ s)
            a = rho * float(s @ q)
            alphas.append((a, rho))
            q -= a * y
        if y_list:
            y = y_list[-1]
            gamma = float(s_list[-1] @ y) / float(y @ y)
            q *= gamma
        for (a, rho), s, y in zip(reversed(alphas), s_list, y_list):
            b = rho * float(y @ q)
            q += (a - b) * s
        d = q
        slope = float(g @ d)
        if not np.isfinite(slope) or slope >= 0.0:
            d = -g
            slope = float(g @ d)
        t = 1.0 if s_list else min(1.0, 1.0 / max(1e-12, float(np.abs(g).sum())))
        accepted = False
        for _ in range(opts.max_backtracks):
            x_new = x + t * d
            if feasible(x_new):
                f_new, g_new = fun_grad(x_new)
                if np.isfinite(f_new) and f_new <= f + opts.armijo_c1 * t * slope:
                    accepted = True
                    break
            t *= opts.backtrack_factor
        if not accepted:
            status = "linesearch_stall"
            break
        s_vec = x_new - x
        y_vec = g_new - g
        if float(s_vec @ y_vec) > 1e-14 * float(np.linalg.norm(s_vec)) * float(np.linalg.norm(y_vec)):
            s_list.append(s_vec)
            y_list.append(y_vec)
            if len(s_list) > opts.memory:
                s_list.pop(0)
                y_list.pop(0)
        x, f, g = x_new, f_new, g_new
        if history is not None:
            history.append(f)
        if not np.isfinite(f):
            status = "diverged"
            break
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    return x, f, gnorm, it, status


def minimize(
    lat: LatticeInstance,
    model: CellEnergyModel,
    a_eps: float,
    variant: str = "bc1",
    starts=("elastic", "cracked"),
    opts: MinimizeOptions | None = None,
    elastic_constants: ElasticConstants | None = None,
    fracture_constants: FractureConstants | None = None,
    extra_starts: dict | None = None,
    energy_history: dict | None = None,
) -> MinimizeReport:
    """Locally minimize the energy from each requested start; report the best.

    ``starts`` may contain "elastic" and/or "cracked"; ``extra_starts`` maps
    labels to explicit position arrays.  Divergence is reported in the status
    fields, not raised.
    """
    opts = opts or MinimizeOptions()
    system = EnergySystem(lat, model)
    d = lat.dimension
    gtol = opts.gradient_tol
    if gtol is None:
        gtol = 1e-8 * lat.epsilon ** (d - 1)

    want_elastic = "elastic" in starts
    want_cracked = any(s.startswith("cracked") for s in starts)
    if want_elastic and elastic_constants is None:
        elastic_constants = compute_elastic_constants(model)
    if want_cracked and fracture_constants is None:
        betas = bond_betas(model)
        normals = crystallographic_normals(model.directions)
        fracture_constants = compute_fracture_constants(
            betas, normals, transverse_lengths=lat.box.lengths[1:])

    candidates: dict[str, np.ndarray] = {}
    if want_elastic:
        candidates["elastic"] = elastic_config(
            lat, a_eps, elastic_constants.Fbar(a_eps), variant=variant).positions
    if want_cracked:
        for n, xi in enumerate(fracture_constants.minimizers):
            label = ("cracked" if len(fracture_constants.minimizers) == 1
                     else f"cracked[{n}]")
            try:
                candidates[label] = cracked_config(lat, xi, a_eps).positions
            except ValueError:
                continue  # plane does not fit this domain; skip the start
    for label, pos in (extra_starts or {}).items():
        candidates[label] = np.asarray(pos, dtype=float)
    if not candidates:
        raise ValueError("no admissible start configuration")

    idx, vals = clamp_values(lat, a_eps, variant)
    free_mask = np.zeros(lat.positions.shape, dtype=bool)
    free_mask[lat.active] = True
    free_mask[idx, 0] = False

    base = lat.positions.copy()

    def assemble(xfree: np.ndarray) -> np.ndarray:
        pos = base.copy()
        pos[idx, 0] = vals
        pos[free_mask] = xfree
        return pos

    def fun_grad(xfree: np.ndarray):
        pos = assemble(xfree)
        f, g = system.energy_and_gradient(pos)
        return f, g[free_mask]

    def feasible(xfree: np.ndarray) -> bool:
        return system.feasible(assemble(xfree))

    results: list[_StartResult] = []
    for label, pos0 in candidates.items():
        pos0 = _blend_into_clamps(lat, pos0, a_eps, variant)
        x0 = pos0[free_mask]
        f0 = system.energy(pos0)
        hist = None
        if energy_history is not None:
            hist = []
            energy_history[label] = hist
        if not system.feasible(pos0):
            results.append(_StartResult(label, f0, f0, 0, math.nan,
                                        "infeasible_start", pos0))
            continue
        x, f, gnorm, iters, status = _lbfgs(fun_grad, x0, feasible, opts, gtol,
                                            history=hist)
        results.append(_StartResult(label, f0, f, iters, gnorm, status,
                                    assemble(x)))

    best = min(results, key=lambda r: (not np.isfinite(r.energy), r.energy))
    return MinimizeReport(
        best_energy=float(best.energy),
        best_start=best.label,
        a_eps=a_eps,
        variant=variant,
        start_energies={r.label: float(r.energy) for r in results},
        initial_energies={r.label: float(r.initial_energy) for r in results},
        iterations={r.label: int(r.iterations) for r in results},
        grad_norms={r.label: float(r.grad_norm) for r in results},
        statuses={r.label: r.status for r in results},
        chi_violations=system.chi_violations(best.positions),
        positions=best.positions,
    )


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    a: float
    best_energy: float
    predicted: float
    ratio: float
    best_start: str
    wall_time: float


@dataclass(frozen=True)
class SweepTable:
    rows: tuple[SweepRow, ...]

    COLUMNS = ("epsilon", "a", "best_energy", "predicted_E_lim", "ratio", "best_start")

    def to_rows(self, with_timings: bool = False) -> list[list]:
        out = []
        for r in self.rows:
            row = [r.epsilon, r.a, r.best_energy, r.predicted, r.ratio, r.best_start]
            if with_timings:
                row.append(r.wall_time)
            out.append(row)
        return out


def epsilon_sweep(
    basis: BravaisBasis,
    model: CellEnergyModel,
    lengths,
    a: float,
    eps_list,
    variant: str = "bc1",
    starts=("elastic", "cracked"),
    opts: MinimizeOptions | None = None,
    law=None,
    threads: int = 1,
) -> SweepTable:
    """Minimize at each spacing of a strictly decreasing schedule with the
    scaled load ``a`` held fixed (a_eps = a sqrt(eps)), and compare against
    the predicted limit energy."""
    eps_list = [float(e) for e in eps_list]
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilon schedule must be strictly decreasing")
    elastic_constants = compute_elastic_constants(model)
    betas = bond_betas(model)
    normals = crystallographic_normals(model.directions)
    fracture_constants = compute_fracture_constants(
        betas, normals, transverse_lengths=list(lengths)[1:])
    if law is None:
        from .cleavage import cleavage_law

        law = cleavage_law(elastic_constants.alpha, fracture_constants.beta,
                           lengths, basis.det, min_len=fracture_constants.length)
    predicted = float(law.energy(a))

    def run(eps: float) -> SweepRow:
        t0 = time.perf_counter()
        lat = build_lattice(basis, DomainBox(tuple(lengths), eps))
        report = minimize(lat, model, a * math.sqrt(eps), variant=variant,
                          starts=starts, opts=opts,
                          elastic_constants=elastic_constants,
                          fracture_constants=fracture_constants)
        wall = time.perf_counter() - t0
        ratio = report.best_energy / predicted if predicted > 0 else report.best_energy
        return SweepRow(eps, a, report.best_energy, predicted, ratio,
                        report.best_start, wall)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, eps_list))
    else:
        rows = [run(e) for e in eps_list]
    return SweepTable(tuple(rows))
