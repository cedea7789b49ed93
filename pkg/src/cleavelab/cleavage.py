"""The continuum cleavage law and the two candidate configuration families.

The limiting minimal energy under uniaxial tension at scaled load ``a`` is

    E_lim(a) = P * min(l1 * alpha_A * a^2 / 2, beta_A),        P = prod(l_2..l_d) / det A,

quadratic elastic response cut off at the fracture plateau, with the branches
meeting at ``a_crit = sqrt(2 beta_A / (l1 alpha_A))``.  At finite spacing the
two branches are realized by a homogeneous strain (with transverse Poisson
contraction) and by a rigid separation across a crystallographic plane; both
are constructed here together with broken-bond accounting across the plane.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeInstance
from .potentials import BondBetaTable, CellEnergyModel, EnergySystem

__all__ = [
    "CleavageLaw",
    "Configuration",
    "cleavage_law",
    "elastic_config",
    "cracked_config",
    "count_broken_bonds",
    "crack_energy_limit",
    "plane_box_intersection",
]


@dataclass(frozen=True)
class CleavageLaw:
    """Limiting minimal energy curve and its critical load."""

    prefactor: float
    l1: float
    alpha: float
    beta: float
    provenance: dict = field(default_factory=dict)

    @property
    def a_crit(self) -> float:
        return math.sqrt(2.0 * self.beta / (self.l1 * self.alpha))

    @property
    def plateau(self) -> float:
        return self.prefactor * self.beta

    def elastic_branch(self, a):
        return self.prefactor * 0.5 * self.l1 * self.alpha * np.square(a)

    def energy(self, a):
        """E_lim(a); accepts scalars (including inf) or arrays."""
        a = np.asarray(a, dtype=float)
        out = np.where(np.isinf(a), self.plateau,
                       np.minimum(self.elastic_branch(np.where(np.isinf(a), 0, a)),
                                  self.plateau))
        return float(out) if out.ndim == 0 else out

    def branch(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        lab = np.where(a < self.a_crit, "elastic", "fracture")
        return lab if lab.ndim else str(lab)


def cleavage_law(alpha: float, beta: float, lengths, det_A: float,
                 min_len: float | None = None, provenance: dict | None = None,
                 ) -> CleavageLaw:
    if alpha <= 0 or beta <= 0:
        raise ValueError("cleavage law needs positive stiffness and toughness")
    lengths = [float(l) for l in lengths]
    P = float(np.prod(lengths[1:]) / det_A)
    if min_len is not None and lengths[0] < min_len:
        warnings.warn(
            f"axial length {lengths[0]} is below the minimum length {min_len}; "
            "optimal cleavage planes may not fit clear of the clamped strips",
            stacklevel=2,
        )
    return CleavageLaw(prefactor=P, l1=lengths[0], alpha=alpha, beta=beta,
                       provenance=provenance or {})


@dataclass(frozen=True)
class Configuration:
    """Atom positions with the boundary-condition record they satisfy."""

    positions: np.ndarray
    a_eps: float
    variant: str | None = None
    label: str = "custom"
    clamp_overwrite: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.positions).all():
            raise ValueError("configuration has non-finite positions")
        self.positions.flags.writeable = False


def elastic_config(lat: LatticeInstance, a_eps: float, Fbar: np.ndarray,
                   variant: str = "bc1") -> Configuration:
    """Homogeneous configuration x + Fbar x.

    For models whose optimal strain has a pure first row ``(a_eps, 0, ...)``
    this satisfies the stretch boundary condition exactly; otherwise the
    clamped first components are overwritten to the prescribed values and the
    largest correction is recorded on the configuration.
    """
    Fbar = np.asarray(Fbar, dtype=float)
    pos = lat.positions + lat.positions @ Fbar.T
    overwrite = 0.0
    row = Fbar[0].copy()
    row[0] -= a_eps
    if np.abs(row).max() > 1e-9 * (1.0 + abs(a_eps)) and variant == "bc1":
        clamp = lat.b1 | lat.b2
        target = (1.0 + a_eps) * lat.positions[clamp, 0]
        overwrite = float(np.abs(pos[clamp, 0] - target).max(initial=0.0))
        pos = pos.copy()
        pos[clamp, 0] = target
    return Configuration(pos, a_eps=a_eps, variant=variant, label="elastic",
                         clamp_overwrite=overwrite)


def plane_box_intersection(xi: np.ndarray, c: float, lengths) -> np.ndarray:
    """Vertices of the intersection of the plane {x . xi = c} with the closed
    box; empty when the plane misses the box."""
    xi = np.asarray(xi, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    d = len(lengths)
    corners = np.array(list(itertools.product(*[(0.0, float(l)) for l in lengths])))
    vals = corners @ xi - c
    pts = [corners[k] for k in range(len(corners)) if abs(vals[k]) < 1e-12]
    for k, m in itertools.combinations(range(len(corners)), 2):
        if np.count_nonzero(corners[k] != corners[m]) != 1:
            continue  # not a box edge
        fk, fm = vals[k], vals[m]
        if (fk < 0 < fm) or (fm < 0 < fk):
            t = fk / (fk - fm)
            pts.append(corners[k] + t * (corners[m] - corners[k]))
    if not pts:
        return np.empty((0, d))
    return np.unique(np.round(np.array(pts), 12), axis=0)


def plane_section_measure(xi: np.ndarray, c: float, lengths) -> float:
    """(d-1)-measure of the plane-box intersection: segment length in 2d,
    polygon area in 3d."""
    pts = plane_box_intersection(xi, c, lengths)
    if pts.shape[0] < 2:
        return 0.0
    if pts.shape[1] == 2:
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    xi = np.asarray(xi, dtype=float) / np.linalg.norm(xi)
    a = np.zeros(3)
    a[np.argmin(np.abs(xi))] = 1.0
    u = np.cross(xi, a)
    u /= np.linalg.norm(u)
    v = np.cross(xi, u)
    centered = pts - pts.mean(axis=0)
    uv = np.column_stack([centered @ u, centered @ v])
    order = np.argsort(np.arctan2(uv[:, 1], uv[:, 0]))
    uv = uv[order]
    x, y = uv[:, 0], uv[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _resolve_plane(lat: LatticeInstance, xi: np.ndarray, c: float | None) -> tuple[np.ndarray, float]:
    """Normalize the plane normal, default the offset to the domain center,
    nudge atoms off the plane, and verify the plane avoids both clamped strips."""
    xi = np.asarray(xi, dtype=float)
    xi = xi / np.linalg.norm(xi)
    lengths = np.asarray(lat.box.lengths)
    if c is None:
        c = float(xi @ (lengths / 2.0))
    eps = lat.epsilon
    # deterministic nudge off atom positions
    for _ in range(64):
        if np.abs(lat.positions @ xi - c).min() > 1e-9 * eps:
            break
        c += 1e-6 * eps
    pts = plane_box_intersection(xi, c, lengths)
    if pts.shape[0] == 0:
        raise ValueError("cleavage plane misses the domain")
    strip = 2.0 * lat.l_A * eps
    x1_min, x1_max = pts[:, 0].min(), pts[:, 0].max()
    if x1_min <= strip or x1_max >= lengths[0] - strip:
        raise ValueError(
            "cleavage plane exits through a clamped strip "
            f"(x1 range [{x1_min:.6g}, {x1_max:.6g}], strips of width {strip:.6g})"
        )
    return xi, c


def cracked_config(lat: LatticeInstance, xi: np.ndarray, a_eps: float,
                   c: float | None = None) -> Configuration:
    """Rigid separation across the plane {x . xi = c}: the far side is
    translated by l1 * a_eps along the tension axis."""
    xi, c = _resolve_plane(lat, xi, c)
    upper = lat.positions @ xi > c
    pos = lat.positions.copy()
    pos[upper, 0] += lat.box.lengths[0] * a_eps
    return Configuration(pos, a_eps=a_eps, variant="bc2", label="cracked")


def count_broken_bonds(lat: LatticeInstance, model: CellEnergyModel,
                       xi: np.ndarray, c: float | None = None) -> dict:
    """Count bonds crossing the plane, per direction class.

    For each carried class the expected crossing count is
    ``area * |nu . xi| / (eps^(d-1) det A)`` with ``nu`` the geometric class
    direction in lattice units; the reported ratio count/expected tends to 1
    as the spacing shrinks (classes parallel to the plane report no ratio).
    """
    xi, c = _resolve_plane(lat, xi, c)
    side = np.sign(lat.positions @ xi - c)
    system = EnergySystem(lat, model)
    area = plane_section_measure(xi, c, lat.box.lengths)
    geom = lat.epsilon ** (lat.dimension - 1) * lat.basis.det
    out = {}
    for b in system.bonds:
        crossing = side[b["i"]] * side[b["j"]] < 0
        # canonical class representative: first nonzero integer coordinate positive
        t_all = b["t_int"]
        first = np.argmax(t_all != 0, axis=1)
        flip = np.sign(t_all[np.arange(len(t_all)), first]).astype(int)
        t_canon = t_all * flip[:, None]
        uniq = np.unique(t_canon, axis=0)
        for t in uniq:
            sel = (t_canon == t).all(axis=1)
            count = int(np.count_nonzero(sel & crossing))
            nu = lat.basis.matrix @ t
            proj = abs(float(nu @ xi))
            label = "(" + ",".join(str(int(x)) for x in t) + ")"
            expected = area * proj / geom
            out[label] = {
                "count": count,
                "expected": expected,
                "ratio": (count / expected) if expected > 1e-12 else None,
            }
    return out


def crack_energy_limit(betas: BondBetaTable, xi: np.ndarray, lengths,
                       det_A: float) -> float:
    """Limit energy of a crack along the plane with normal xi:
    P * g(xi) / |e1 . xi|."""
    xi = np.asarray(xi, dtype=float)
    xi = xi / np.linalg.norm(xi)
    if abs(xi[0]) < 1e-12:
        raise ValueError("crack normal is perpendicular to the tension axis")
    from .fracture import directional_cost

    lengths = [float(l) for l in lengths]
    P = float(np.prod(lengths[1:]) / det_A)
    return P * directional_cost(betas, xi) / abs(xi[0])
