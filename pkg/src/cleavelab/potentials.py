"""Pair potentials and cell energies for mass-spring lattice models.

A cell energy assigns to each unit cell a sum of pair terms over its corner
atoms.  A bond between corners whose integer offset has ``k`` nonzero entries
is shared by ``2^(d-k)`` adjacent cells, so each cell carries the weight
``2^(k-d)`` for that bond; summed over all sharing cells every bond then
contributes exactly once, matching the plain bond-sum form of the energy.

Potentials are "long-range flat": zero exactly at unit scaled distance,
positive elsewhere, with a finite plateau at infinite separation.  The
plateau is what a severed bond pays, which is where the fracture weights
``beta(nu)`` come from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import (
    BravaisBasis,
    LatticeInstance,
    corner_matrix,
    corner_signs,
    interaction_directions,
)
from . import kernels

__all__ = [
    "MorsePotential",
    "LennardJonesPotential",
    "TabulatedPotential",
    "make_potential",
    "Shell",
    "CellEnergyModel",
    "model_from_preset",
    "cell_energy",
    "orientation_penalty",
    "bond_betas",
    "BondBetaTable",
    "decomposition_check",
    "EnergySystem",
    "total_energy",
]


@dataclass(frozen=True)
class MorsePotential:
    """Morse pair potential normalized to W(1) = 0 and plateau ``beta``.

    W(r) = beta * (1 - exp(-kappa (r - 1)))^2 with kappa chosen so that
    W''(1) equals the requested stiffness ``alpha``.
    """

    alpha: float
    beta: float
    form: str = field(default="morse", init=False)

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("Morse potential needs alpha > 0 and beta > 0")

    @property
    def kappa(self) -> float:
        return math.sqrt(self.alpha / (2.0 * self.beta))

    @property
    def plateau(self) -> float:
        return self.beta

    def energy(self, r):
        u = 1.0 - np.exp(-self.kappa * (np.asarray(r) - 1.0))
        return self.beta * u * u

    def deriv(self, r):
        e = np.exp(-self.kappa * (np.asarray(r) - 1.0))
        return 2.0 * self.beta * self.kappa * (1.0 - e) * e


@dataclass(frozen=True)
class LennardJonesPotential:
    """12-6 potential shifted to its plateau: W(r) = beta (r^-12 - 2 r^-6 + 1).

    The curvature at the well is tied to the plateau: W''(1) = 72 beta.
    """

    beta: float
    form: str = field(default="lennard-jones", init=False)

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("Lennard-Jones potential needs beta > 0")

    @property
    def alpha(self) -> float:
        return 72.0 * self.beta

    @property
    def plateau(self) -> float:
        return self.beta

    def energy(self, r):
        x = np.asarray(r, dtype=float) ** -6
        return self.beta * (x * x - 2.0 * x + 1.0)

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        return self.beta * (-12.0 * r**-13 + 12.0 * r**-7)


class TabulatedPotential:
    """Monotone cubic interpolation of tabulated (r, W) knots.

    The table must contain the well (W(1) = 0); beyond the last knot the
    potential is clamped to its final value, which acts as the plateau.
    """

    form = "table"

    def __init__(self, r_knots, w_knots):
        from scipy.interpolate import PchipInterpolator

        r = np.asarray(r_knots, dtype=float)
        w = np.asarray(w_knots, dtype=float)
        if r.ndim != 1 or r.size < 4 or np.any(np.diff(r) <= 0):
            raise ValueError("need at least 4 strictly increasing knots")
        if np.any(w < 0):
            raise ValueError("tabulated energies must be nonnegative")
        self._interp = PchipInterpolator(r, w, extrapolate=False)
        self._deriv = self._interp.derivative()
        self._rmin, self._rmax = r[0], r[-1]
        self._wlo, self._whi = w[0], w[-1]
        if abs(float(self._interp(1.0))) > 1e-10:
            raise ValueError("tabulated potential must vanish at r = 1")
        # well stiffness from a local quadratic fit of the raw table (the
        # monotone interpolant is only C^1 and flattens curvature at the well)
        order = np.argsort(np.abs(r - 1.0))[:5]
        coeffs = np.polyfit(r[order] - 1.0, w[order], 2)
        self.alpha = float(2.0 * coeffs[0])
        self.beta = float(self._whi)

    @property
    def plateau(self) -> float:
        return self.beta

    def energy(self, r):
        r = np.asarray(r, dtype=float)
        out = np.where(r <= self._rmin, self._wlo, np.where(r >= self._rmax, self._whi, 0.0))
        mid = (r > self._rmin) & (r < self._rmax)
        out = np.array(out, dtype=float)
        out[mid] = self._interp(r[mid])
        return out

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        mid = (r > self._rmin) & (r < self._rmax)
        out[mid] = self._deriv(r[mid])
        return out


def make_potential(form: str, alpha: float | None = None, beta: float | None = None,
                   table=None):
    """Build a pair potential realizing stiffness ``alpha`` and plateau ``beta``.

    The 12-6 form couples the two constants (alpha = 72 beta) and rejects an
    incompatible explicit ``alpha``; the Morse form realizes any positive pair.
    """
    if form == "morse":
        if alpha is None or beta is None:
            raise ValueError("morse form needs alpha and beta")
        return MorsePotential(alpha=alpha, beta=beta)
    if form in ("lj", "lennard-jones"):
        if beta is None or beta <= 0:
            raise ValueError("lennard-jones form needs beta > 0")
        if alpha is not None and abs(alpha - 72.0 * beta) > 1e-9 * 72.0 * beta:
            raise ValueError("lennard-jones form forces alpha = 72 beta")
        return LennardJonesPotential(beta=beta)
    if form == "table":
        if table is None:
            raise ValueError("table form needs (r_knots, w_knots)")
        return TabulatedPotential(*table)
    raise ValueError(f"unknown potential form {form!r}")


@dataclass(frozen=True)
class Shell:
    """One interaction shell: neighbor distance class (in units of eps) and
    the pair potential evaluated at scaled distance r = |dy| / (eps * distance)."""

    distance: float
    potential: object

    def __post_init__(self):
        if self.distance <= 0:
            raise ValueError("shell distance class must be positive")


@dataclass(frozen=True)
class _CellPair:
    i: int
    j: int
    shell: int
    weight: float
    t_int: tuple[int, ...]


class CellEnergyModel:
    """Cell energy built from shell potentials plus an orientation penalty.

    Parameters
    ----------
    basis : lattice basis; fixes the reference corners.
    shells : interaction shells; a corner pair enters the cell sum when its
        reference distance matches a shell's distance class.
    chi_radius : deformations with |G| >= chi_radius bypass the orientation
        test (cells torn far apart carry no orientation information).
    chi_penalty : finite surrogate for the infinite orientation penalty;
        defaults to 1e6 times the largest shell plateau.
    """

    def __init__(self, basis: BravaisBasis, shells, chi_radius: float = 10.0,
                 chi_penalty: float | None = None):
        self.basis = basis
        self.shells = tuple(shells)
        if not self.shells:
            raise ValueError("need at least one interaction shell")
        self.chi_radius = float(chi_radius)
        if chi_penalty is None:
            chi_penalty = 1e6 * max(s.potential.plateau for s in self.shells)
        self.chi_penalty = float(chi_penalty)

        d = basis.dimension
        self.dimension = d
        self.Z = corner_matrix(basis)
        signs = corner_signs(d)
        pairs: list[_CellPair] = []
        for i in range(2**d):
            for j in range(i + 1, 2**d):
                t = signs[i] - signs[j]
                length = float(np.linalg.norm(basis.matrix @ t))
                k = int(np.count_nonzero(t))
                for s, shell in enumerate(self.shells):
                    if abs(length - shell.distance) <= 1e-9 * shell.distance:
                        pairs.append(_CellPair(i, j, s, 2.0 ** (k - d),
                                               tuple(int(x) for x in t)))
                        break
        if not pairs:
            raise ValueError("no corner pair matches any shell distance class")
        self.cell_pairs = tuple(pairs)
        self.directions = interaction_directions(basis)

        # Orientation reference: corner c with bit pattern b has edge vectors
        # (-1)^{b_j} v_j, so its reference simplex sign is (-1)^{popcount(c)}.
        pop = np.array([bin(c).count("1") for c in range(2**d)])
        self._corner_sign = (-1.0) ** pop

    # -- orientation penalty ------------------------------------------------

    def _orientation_ok_corners(self, Y: np.ndarray) -> np.ndarray:
        """Orientation test on a batch of corner coordinates (m, 2^d, d).

        True when every corner simplex of the deformed cell keeps the
        reference orientation; invariant under translation and scaling, so
        raw corner positions and discrete gradients give the same answer.
        """
        d = self.dimension
        m = Y.shape[0]
        ok = np.ones(m, dtype=bool)
        for c in range(2**d):
            edges = [Y[:, c ^ (1 << j), :] - Y[:, c, :] for j in range(d)]
            if d == 2:
                a, b = edges
                det = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
            else:
                a, b, c3 = edges
                det = (a[:, 0] * (b[:, 1] * c3[:, 2] - b[:, 2] * c3[:, 1])
                       - a[:, 1] * (b[:, 0] * c3[:, 2] - b[:, 2] * c3[:, 0])
                       + a[:, 2] * (b[:, 0] * c3[:, 1] - b[:, 1] * c3[:, 0]))
            ok &= det * self._corner_sign[c] > 0.0
        return ok

    def orientation_ok(self, G: np.ndarray) -> np.ndarray:
        """Vectorized orientation test for gradients (d, 2^d) or (m, d, 2^d)."""
        G = np.asarray(G)
        single = G.ndim == 2
        if single:
            G = G[None]
        ok = self._orientation_ok_corners(np.swapaxes(G, 1, 2))
        return ok[0] if single else ok

    def chi_corners(self, Y: np.ndarray, scale: float = 1.0) -> np.ndarray:
        """Orientation penalty from corner coordinates (m, 2^d, d); ``scale``
        converts corner norms to gradient norms (1/eps for lattice cells)."""
        n = 2**self.dimension
        sq = (Y * Y).sum(axis=(1, 2))
        mean = Y.mean(axis=1)
        norm2 = (sq - n * (mean * mean).sum(axis=1)) * scale * scale
        big = norm2 >= self.chi_radius**2
        ok = self._orientation_ok_corners(Y)
        return np.where(big | ok, 0.0, self.chi_penalty)

    def chi(self, G: np.ndarray) -> np.ndarray:
        """Orientation penalty: 0 for orientation-preserving or torn cells,
        else the finite penalty constant."""
        G = np.asarray(G)
        single = G.ndim == 2
        if single:
            G = G[None]
        val = self.chi_corners(np.swapaxes(G, 1, 2))
        return float(val[0]) if single else val

    # -- cell energy ---------------------------------------------------------

    def pair_energy(self, G: np.ndarray) -> float:
        """Pair-sum part of the cell energy of a single gradient matrix."""
        G = np.asarray(G, dtype=float)
        total = 0.0
        for p in self.cell_pairs:
            shell = self.shells[p.shell]
            r = np.linalg.norm(G[:, p.i] - G[:, p.j]) / shell.distance
            total += p.weight * float(shell.potential.energy(r))
        return total

    def pair_energy_batch(self, G: np.ndarray) -> np.ndarray:
        """Pair-sum part for a batch (m, d, 2^d) of gradients."""
        G = np.asarray(G, dtype=float)
        total = np.zeros(G.shape[0])
        for p in self.cell_pairs:
            shell = self.shells[p.shell]
            diff = G[:, :, p.i] - G[:, :, p.j]
            r = np.linalg.norm(diff, axis=1) / shell.distance
            total += p.weight * shell.potential.energy(r)
        return total


def cell_energy(model: CellEnergyModel, G: np.ndarray, include_chi: bool = True) -> float:
    """Energy of one cell with gradient matrix G (d x 2^d)."""
    G = np.asarray(G, dtype=float)
    if G.shape != (model.dimension, 2**model.dimension):
        raise ValueError("gradient matrix has wrong shape")
    if not np.isfinite(G).all():
        raise ValueError("gradient matrix has non-finite entries")
    e = model.pair_energy(G)
    if include_chi:
        e += model.chi(G)
    return e


def orientation_penalty(model: CellEnergyModel, G: np.ndarray) -> float:
    return float(model.chi(G))


def model_from_preset(basis: BravaisBasis, alphas, betas, form: str = "morse",
                      chi_radius: float = 10.0, chi_penalty: float | None = None,
                      ) -> CellEnergyModel:
    """Canonical shell models for the built-in presets.

    triangular: one nearest-neighbor shell; square and cubic: nearest plus
    next-to-nearest (distance sqrt(2)) shells.
    """
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    if basis.preset == "triangular":
        n_shells = 1
        distances = (1.0,)
    elif basis.preset in ("square", "cubic"):
        n_shells = 2
        distances = (1.0, math.sqrt(2.0))
    else:
        raise ValueError("preset models exist for triangular, square, cubic bases")
    if len(alphas) != n_shells or len(betas) != n_shells:
        raise ValueError(f"{basis.preset} preset needs {n_shells} shell constant(s)")
    shells = [Shell(dist, make_potential(form, a, b))
              for dist, a, b in zip(distances, alphas, betas)]
    return CellEnergyModel(basis, shells, chi_radius=chi_radius, chi_penalty=chi_penalty)


@dataclass(frozen=True)
class BondBetaTable:
    """Severed-bond energies per interaction direction class.

    One entry per representative direction (first nonzero integer coordinate
    positive).  ``beta[i]`` is the plateau of the shell whose distance class
    carries the direction, or 0 for directions without interactions.
    """

    ints: np.ndarray
    vectors: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        for name in ("ints", "vectors", "beta"):
            getattr(self, name).flags.writeable = False

    @property
    def carried(self) -> "BondBetaTable":
        keep = self.beta > 0
        return BondBetaTable(self.ints[keep].copy(), self.vectors[keep].copy(),
                             self.beta[keep].copy())

    def labels(self) -> list[str]:
        return ["(" + ",".join(str(int(x)) for x in t) + ")" for t in self.ints]


def bond_betas(model: CellEnergyModel) -> BondBetaTable:
    """Map each direction class to the plateau of the shell that carries it."""
    dirs = model.directions
    ints = dirs.plus_ints
    vecs = dirs.plus_vectors
    beta = np.zeros(len(ints))
    for idx, v in enumerate(vecs):
        length = float(np.linalg.norm(v))
        for shell in model.shells:
            if abs(length - shell.distance) <= 1e-9 * shell.distance:
                beta[idx] = shell.potential.plateau
                break
    return BondBetaTable(ints.copy(), vecs.copy(), beta)


def decomposition_check(model: CellEnergyModel, part: np.ndarray, t: float,
                        direction: np.ndarray | None = None) -> float:
    """Residual of the separated-cell energy against the severed-bond sum.

    The corners selected by the boolean mask ``part`` are translated by
    ``t * direction``; the residual is |W_cell(G) - sum of plateaus over the
    severed pairs| and tends to zero as t grows.
    """
    part = np.asarray(part, dtype=bool)
    n = 2**model.dimension
    if part.shape != (n,) or part.all() or not part.any():
        raise ValueError("partition must split the corner set in two nonempty parts")
    if t <= 0:
        raise ValueError("separation t must be positive")
    u = np.zeros(model.dimension)
    u[0] = 1.0
    if direction is not None:
        u = np.asarray(direction, dtype=float)
        u = u / np.linalg.norm(u)
    G = model.Z.copy()
    G[:, part] += t * u[:, None]
    severed = sum(
        p.weight * model.shells[p.shell].potential.plateau
        for p in model.cell_pairs
        if part[p.i] != part[p.j]
    )
    return abs(cell_energy(model, G) - severed)


class EnergySystem:
    """Total energy, analytic gradient and orientation bookkeeping for a
    configuration over the inner cells of a lattice instance.

    The cell pair sums are flattened into per-shell bond tables with weights
    accumulated over the inner cells sharing each bond, so evaluation is a
    plain vectorized pass over bonds.  The orientation penalty is evaluated
    per cell and is excluded from the analytic gradient (minimizers treat it
    by step rejection).
    """

    def __init__(self, lat: LatticeInstance, model: CellEnergyModel):
        if lat.basis is not model.basis and not np.allclose(
            lat.basis.matrix, model.basis.matrix
        ):
            raise ValueError("lattice and model use different bases")
        self.lat = lat
        self.model = model
        self.scale = lat.epsilon ** (lat.dimension - 1)
        self._build_bonds()

    def _build_bonds(self):
        lat, model = self.lat, self.model
        n = lat.n_atoms
        self.bonds = []
        for s, shell in enumerate(model.shells):
            pairs = [p for p in model.cell_pairs if p.shell == s]
            if not pairs:
                continue
            ii = np.concatenate([lat.cells[:, p.i] for p in pairs])
            jj = np.concatenate([lat.cells[:, p.j] for p in pairs])
            ww = np.concatenate([np.full(lat.n_inner_cells, p.weight) for p in pairs])
            swap = ii > jj
            ii2 = np.where(swap, jj, ii)
            jj2 = np.where(swap, ii, jj)
            key = ii2.astype(np.int64) * n + jj2
            uniq, inverse = np.unique(key, return_inverse=True)
            w = np.bincount(inverse, weights=ww, minlength=len(uniq))
            bi = (uniq // n).astype(np.int64)
            bj = (uniq % n).astype(np.int64)
            t_int = lat.int_coords[bj] - lat.int_coords[bi]
            inv_len = 1.0 / (lat.epsilon * shell.distance)
            self.bonds.append(
                dict(shell=shell, i=bi, j=bj, w=w, t_int=t_int, inv_len=inv_len)
            )

    # -- evaluations ----------------------------------------------------------

    def pair_energy(self, positions: np.ndarray) -> float:
        total = 0.0
        for b in self.bonds:
            total += kernels.bond_energy(
                positions, b["i"], b["j"], b["w"], b["shell"].potential, b["inv_len"]
            )
        return self.scale * total

    def energy(self, positions: np.ndarray, include_chi: bool = True) -> float:
        e = self.pair_energy(positions)
        if include_chi:
            e += self.scale * float(self.chi_values(positions).sum())
        return e

    def gradient(self, positions: np.ndarray) -> np.ndarray:
        """Gradient of the pair energy with respect to every atom position."""
        grad = np.zeros_like(positions)
        for b in self.bonds:
            kernels.bond_energy_grad(
                positions, b["i"], b["j"], b["w"], b["shell"].potential,
                b["inv_len"], grad,
            )
        grad *= self.scale
        return grad

    def energy_and_gradient(self, positions: np.ndarray) -> tuple[float, np.ndarray]:
        grad = np.zeros_like(positions)
        total = 0.0
        for b in self.bonds:
            total += kernels.bond_energy_grad(
                positions, b["i"], b["j"], b["w"], b["shell"].potential,
                b["inv_len"], grad,
            )
        grad *= self.scale
        return self.scale * total, grad

    def cell_gradients(self, positions: np.ndarray) -> np.ndarray:
        Y = positions[self.lat.cells]
        G = (Y - Y.mean(axis=1, keepdims=True)) / self.lat.epsilon
        return np.swapaxes(G, 1, 2)

    def chi_values(self, positions: np.ndarray) -> np.ndarray:
        return self.model.chi_corners(positions[self.lat.cells],
                                      scale=1.0 / self.lat.epsilon)

    def chi_violations(self, positions: np.ndarray) -> int:
        return int(np.count_nonzero(self.chi_values(positions)))

    def feasible(self, positions: np.ndarray) -> bool:
        return self.chi_violations(positions) == 0


def total_energy(lat: LatticeInstance, positions: np.ndarray,
                 model: CellEnergyModel, include_chi: bool = True) -> float:
    """Rescaled total energy eps^(d-1) * sum of inner-cell energies."""
    positions = np.asarray(positions, dtype=float)
    if positions.shape != lat.positions.shape:
        raise ValueError("positions array has wrong shape")
    needed = positions[lat.cells.ravel()]
    if not np.isfinite(needed).all():
        raise ValueError("configuration misses (non-finite) corner atoms of inner cells")
    return EnergySystem(lat, model).energy(positions, include_chi=include_chi)
