"""Toughness constant, optimal cleavage normals and the minimum specimen length.

The cost of cleaving along a plane with normal ``xi`` is the severed-bond
energy per unit cross section, normalized by the axial opening component:
``g(xi) / |e1 . xi|`` with ``g(xi) = sum_nu beta(nu) |nu . xi|`` over the
carried direction classes.  The toughness ``beta_A`` is the minimum of that
ratio, attained on the finite crystallographic normal set; a dense sphere
sampling validates the minimum and detects degenerate models whose optimal
directions form a continuum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import NormalSet
from .potentials import BondBetaTable

__all__ = [
    "FractureConstants",
    "directional_cost",
    "normalized_cost",
    "surplus",
    "beta_A",
    "sphere_extrema",
    "min_length",
    "compute_fracture_constants",
    "sphere_samples",
]


def directional_cost(betas: BondBetaTable, sigma: np.ndarray) -> np.ndarray:
    """g(sigma) = sum over carried direction classes of beta(nu) |nu . sigma|.

    Accepts a single vector or an (m, d) batch.
    """
    table = betas.carried
    sigma = np.asarray(sigma, dtype=float)
    single = sigma.ndim == 1
    S = np.atleast_2d(sigma)
    g = np.abs(S @ table.vectors.T) @ table.beta
    return float(g[0]) if single else g


def normalized_cost(betas: BondBetaTable, sigma: np.ndarray) -> float:
    """g(sigma) / |e1 . sigma|; raises for directions perpendicular to e1."""
    sigma = np.asarray(sigma, dtype=float)
    denom = abs(sigma[0])
    if denom == 0.0:
        raise ZeroDivisionError("direction is perpendicular to the tension axis")
    return directional_cost(betas, sigma) / denom


def surplus(betas: BondBetaTable, beta: float, sigma: np.ndarray) -> float:
    """Excess cleavage cost Lambda(sigma) = (g(sigma) - |e1.sigma| beta) / |sigma|.

    Nonnegative for every nonzero direction; zero exactly at optimal normals.
    For directions perpendicular to e1 this degenerates to g(sigma)/|sigma|
    (the normalized severed-bond cost with no opening credit).
    """
    sigma = np.asarray(sigma, dtype=float)
    norm = np.linalg.norm(sigma)
    if norm == 0.0:
        raise ValueError("surplus undefined for the zero vector")
    return (directional_cost(betas, sigma) - abs(sigma[0]) * beta) / norm


def sphere_samples(d: int, n: int) -> np.ndarray:
    """Deterministic low-discrepancy unit directions: an equiangular half
    circle for d=2, a Fibonacci sphere for d=3."""
    if d == 2:
        theta = np.pi * np.arange(n) / n
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if d == 3:
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        golden = np.pi * (3.0 - np.sqrt(5.0))
        phi = golden * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise ValueError("sphere sampling implemented for d in {2, 3}")


@dataclass(frozen=True)
class FractureConstants:
    """Toughness constant with its minimizers and sphere extrema.

    ``table`` lists the normalized cost of every admissible crystallographic
    normal; ``minimizers`` collects all normals within the tie tolerance of
    the minimum.  ``degenerate_continuum`` is set when the sphere sampling
    finds near-optimal directions well away from every reported minimizer.
    """

    beta: float
    minimizers: np.ndarray
    normals: NormalSet
    table: np.ndarray
    M1: float
    M2: float
    length: float
    degenerate_continuum: bool

    def to_json_dict(self) -> dict:
        return {
            "beta_A": float(self.beta),
            "optimal_normals": [list(map(float, xi)) for xi in self.minimizers],
            "M1": float(self.M1),
            "M2": float(self.M2),
            "L": float(self.length),
            "degenerate_continuum": bool(self.degenerate_continuum),
        }


def beta_A(
    betas: BondBetaTable,
    normals: NormalSet,
    tie_tol: float = 1e-9,
    n_validate: int = 100_000,
) -> tuple[float, np.ndarray, np.ndarray, bool]:
    """Minimize the normalized cleavage cost over the crystallographic normals.

    Returns ``(beta, minimizers, per-normal costs, degenerate_continuum)``.
    The sphere validation asserts that no sampled unit direction beats the
    crystallographic minimum beyond sampling tolerance.
    """
    units = normals.units
    d = units.shape[1]
    denom = np.abs(units[:, 0])
    admissible = denom > 1e-12
    if not admissible.any():
        raise ValueError("no crystallographic normal has a component along e1")
    cost = np.full(len(units), np.inf)
    g = directional_cost(betas, units)
    cost[admissible] = g[admissible] / denom[admissible]
    beta = float(cost.min())
    if beta <= 0:
        raise ValueError("degenerate bond table: zero cleavage cost")
    minimizers = units[cost <= beta * (1.0 + tie_tol)]

    degenerate = False
    if n_validate:
        S = sphere_samples(d, n_validate)
        denom_s = np.abs(S[:, 0])
        ok = denom_s > 1e-9
        ratios = directional_cost(betas, S[ok]) / denom_s[ok]
        if ratios.min() < beta - 1e-7 * beta:
            raise AssertionError(
                "sphere sampling found a direction below the crystallographic "
                f"minimum: {ratios.min()} < {beta}"
            )
        near = ratios <= beta * (1.0 + 1e-7)
        if near.any():
            pts = S[ok][near]
            # distance (up to sign) from each near-optimal sample to the minimizers
            dots = np.abs(pts @ minimizers.T).max(axis=1)
            if (dots < math.cos(1e-3)).any():
                degenerate = True
    return beta, minimizers, cost, degenerate


def _polish(betas: BondBetaTable, center: np.ndarray, spacing: float,
            sign: float, rounds: int = 20, n_local: int = 48) -> float:
    """Local refinement of an extremum of g on the sphere by shrinking caps."""
    d = center.shape[0]
    best = center / np.linalg.norm(center)
    best_val = directional_cost(betas, best)
    radius = spacing
    for _ in range(rounds):
        if d == 2:
            angles = np.linspace(-radius, radius, n_local)
            c, s = np.cos(angles), np.sin(angles)
            rot = np.stack([c * best[0] - s * best[1], s * best[0] + c * best[1]], axis=1)
            cand = rot
        else:
            # orthonormal tangent frame at `best`
            a = np.zeros(d)
            a[np.argmin(np.abs(best))] = 1.0
            u = np.cross(best, a)
            u /= np.linalg.norm(u)
            v = np.cross(best, u)
            theta = np.linspace(0, 2 * np.pi, n_local, endpoint=False)
            offs = np.outer(np.cos(theta), u) + np.outer(np.sin(theta), v)
            cand = best[None, :] + radius * offs
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        vals = directional_cost(betas, cand)
        idx = np.argmax(sign * vals)
        if sign * vals[idx] > sign * best_val:
            best = cand[idx]
            best_val = vals[idx]
        else:
            radius *= 0.5
    return float(best_val)


def sphere_extrema(betas: BondBetaTable, n_samples: int = 100_000,
                   n_candidates: int = 10) -> tuple[float, float]:
    """Min and max of the severed-bond cost g over the unit sphere.

    Dense deterministic sampling plus local polish at the best candidates.
    Both values are invariant under rigid rotations of the lattice.
    """
    d = betas.vectors.shape[1]
    S = sphere_samples(d, n_samples)
    g = directional_cost(betas, S)
    spacing = np.pi / n_samples if d == 2 else 2.0 * math.sqrt(np.pi / n_samples)
    lo_idx = np.argsort(g)[:n_candidates]
    hi_idx = np.argsort(g)[-n_candidates:]
    m1 = min(_polish(betas, S[i], spacing, sign=-1.0) for i in lo_idx)
    m2 = max(_polish(betas, S[i], spacing, sign=+1.0) for i in hi_idx)
    return float(m1), float(m2)


def min_length(M1: float, M2: float, transverse_lengths, safety: float = 4.0) -> float:
    """Minimum axial length guaranteeing an optimal plane fits clear of the
    clamped strips: safety * max transverse length * M2 / M1."""
    if safety < 1.0:
        raise ValueError("safety factor must be at least 1")
    lengths = [float(l) for l in np.atleast_1d(transverse_lengths)]
    if not lengths or min(lengths) <= 0.0:
        raise ValueError("transverse lengths must be positive")
    if M1 <= 1e-12 * max(M2, 1.0):
        raise ValueError("degenerate bond set: sphere minimum vanishes, no "
                         "uniform minimum length exists")
    return safety * max(lengths) * M2 / M1


def compute_fracture_constants(
    betas: BondBetaTable,
    normals: NormalSet,
    transverse_lengths=None,
    safety: float = 4.0,
    n_validate: int = 100_000,
) -> FractureConstants:
    beta, minimizers, table, degenerate = beta_A(betas, normals,
                                                 n_validate=n_validate)
    M1, M2 = sphere_extrema(betas)
    length = math.nan
    if transverse_lengths is not None:
        length = min_length(M1, M2, transverse_lengths, safety=safety)
    return FractureConstants(
        beta=beta,
        minimizers=minimizers,
        normals=normals,
        table=table,
        M1=M1,
        M2=M2,
        length=length,
        degenerate_continuum=degenerate,
    )
