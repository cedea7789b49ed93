"""Bravais lattices clipped to box domains.

Builds scaled lattices inside a rectangular box, enumerates unit cells and
their corner atoms, classifies cells as inner (closed cell strictly inside
the box) or boundary, and derives the interaction direction sets and the
crystallographic normal candidates used by the fracture analysis.

Conventions
-----------
* The basis matrix ``A`` holds the lattice vectors as columns, ``det A > 0``.
* Cell corners are numbered in binary-counter order over ``{-1/2, +1/2}^d``:
  corner ``i`` (0-based) has sign ``+1/2`` in coordinate ``j`` iff bit ``j``
  of ``i`` is set, so corner 0 is ``A @ (-1/2, ..., -1/2)``.
* Atoms are keyed by their integer lattice coordinates, which makes
  deduplication exact (no floating-point matching).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "BravaisBasis",
    "DomainBox",
    "LatticeInstance",
    "DirectionSets",
    "NormalSet",
    "build_basis",
    "corner_signs",
    "corner_matrix",
    "build_lattice",
    "discrete_gradient",
    "interaction_directions",
    "crystallographic_normals",
    "neighbor_pairs",
]

_PRESETS = ("triangular", "square", "cubic", "custom")


def _rotation_2d(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def _rotation_z(psi: float) -> np.ndarray:
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rotation_x(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


@dataclass(frozen=True)
class BravaisBasis:
    """A Bravais lattice basis: columns of ``matrix`` span the lattice."""

    dimension: int
    matrix: np.ndarray
    preset: str = "custom"
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        if A.shape != (self.dimension, self.dimension):
            raise ValueError(f"basis matrix must be {self.dimension}x{self.dimension}")
        det = np.linalg.det(A)
        if det <= 0.0:
            raise ValueError("basis vectors must be ordered with det A > 0")
        if np.linalg.cond(A) > 1e8:
            raise ValueError("basis matrix is numerically singular")
        A = A.copy()
        A.flags.writeable = False
        object.__setattr__(self, "matrix", A)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    @property
    def l_A(self) -> float:
        """Sum of |v_j . e1|, the axial extent of one cell's worth of basis vectors."""
        return float(np.abs(self.matrix[0, :]).sum())

    def to_json_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "preset": self.preset,
            "angles": list(self.angles),
            "basis": [list(map(float, row)) for row in self.matrix],
        }


def build_basis(
    preset: str,
    phi: float = 0.0,
    psi: float = 0.0,
    matrix: np.ndarray | None = None,
) -> BravaisBasis:
    """Construct a lattice basis from a named preset or a custom matrix.

    Presets and admissible orientation angles:

    * ``triangular``: 2d, ``phi in [0, pi/3)``; columns are unit vectors at
      ``phi`` and ``phi + pi/3``.
    * ``square``: 2d, ``phi in [0, pi/2)``; rotated identity.
    * ``cubic``: 3d, ``phi, psi in [0, pi/2)``; rotation about x by ``phi``
      followed by rotation about z by ``psi``.
    * ``custom``: caller-supplied square matrix with positive determinant.
    """
    if preset not in _PRESETS:
        raise ValueError(f"unknown preset {preset!r}; expected one of {_PRESETS}")
    if preset == "triangular":
        if not 0.0 <= phi < math.pi / 3:
            raise ValueError("triangular preset requires phi in [0, pi/3)")
        base = np.array([[1.0, 0.5], [0.0, math.sqrt(3.0) / 2.0]])
        return BravaisBasis(2, _rotation_2d(phi) @ base, "triangular", (phi,))
    if preset == "square":
        if not 0.0 <= phi < math.pi / 2:
            raise ValueError("square preset requires phi in [0, pi/2)")
        return BravaisBasis(2, _rotation_2d(phi), "square", (phi,))
    if preset == "cubic":
        if not (0.0 <= phi < math.pi / 2 and 0.0 <= psi < math.pi / 2):
            raise ValueError("cubic preset requires phi, psi in [0, pi/2)")
        return BravaisBasis(3, _rotation_z(psi) @ _rotation_x(phi), "cubic", (phi, psi))
    if matrix is None:
        raise ValueError("custom preset requires an explicit basis matrix")
    A = np.asarray(matrix, dtype=float)
    return BravaisBasis(A.shape[0], A, "custom", ())


def corner_signs(d: int) -> np.ndarray:
    """(2^d, d) array of corner offsets in {-1/2, +1/2}, binary-counter order."""
    idx = np.arange(2**d)
    bits = (idx[:, None] >> np.arange(d)[None, :]) & 1
    return bits - 0.5


def corner_matrix(basis: BravaisBasis) -> np.ndarray:
    """Corner matrix Z (d x 2^d): column i is the i-th corner of the reference cell."""
    return basis.matrix @ corner_signs(basis.dimension).T


@dataclass(frozen=True)
class DomainBox:
    """Open box (0, l_1) x ... x (0, l_d) with atomic spacing ``epsilon``.

    ``shift`` is the Cartesian lattice offset rho (atoms sit at
    ``eps * (rho + A @ lam)``).  ``None`` selects ``A @ (1/2, ..., 1/2)``,
    which keeps cell midpoints clear of the box faces for the presets.
    """

    lengths: tuple[float, ...]
    epsilon: float
    shift: tuple[float, ...] | None = None

    def __post_init__(self):
        lengths = tuple(float(l) for l in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if any(l <= 0 for l in lengths):
            raise ValueError("box side lengths must be positive")
        if self.epsilon <= 0:
            raise ValueError("atomic spacing epsilon must be positive")
        if self.epsilon > min(lengths) / 4.0:
            raise ValueError(
                "domain too small: need epsilon <= min(lengths)/4 "
                f"(epsilon={self.epsilon}, min length={min(lengths)})"
            )

    @property
    def dimension(self) -> int:
        return len(self.lengths)


@dataclass(frozen=True)
class LatticeInstance:
    """A scaled lattice clipped to a box, with cell and strip bookkeeping.

    Immutable after construction; safe to share read-only between workers.

    Attributes
    ----------
    positions : (N, d) reference atom positions.
    int_coords : (N, d) integer lattice coordinates of each atom.
    in_domain : (N,) mask of atoms strictly inside the open box.
    cells : (M, 2^d) corner atom indices of the inner cells, columns in
        binary-counter corner order.
    boundary_cells : (Mb, 2^d) corner indices of flagged non-inner cells that
        meet the box; excluded from all energy sums.
    active : (N,) mask of atoms that are corners of at least one inner cell.
    b1, b2 : (N,) masks of the clamped strips x1 <= 2*l_A*eps and
        x1 >= l1 - 2*l_A*eps.
    """

    basis: BravaisBasis
    box: DomainBox
    positions: np.ndarray
    int_coords: np.ndarray
    in_domain: np.ndarray
    cells: np.ndarray
    boundary_cells: np.ndarray
    cell_midpoints: np.ndarray
    active: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        for name in ("positions", "int_coords", "in_domain", "cells",
                     "boundary_cells", "cell_midpoints", "active", "b1", "b2",
                     "shift"):
            arr = getattr(self, name)
            arr.flags.writeable = False

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    @property
    def epsilon(self) -> float:
        return self.box.epsilon

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]

    @property
    def n_inner_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def l_A(self) -> float:
        return self.basis.l_A

    def to_json_dict(self) -> dict:
        d = self.basis.to_json_dict()
        d.update(
            epsilon=self.box.epsilon,
            lengths=list(self.box.lengths),
            shift=[float(x) for x in self.shift],
        )
        return d


def build_lattice(basis: BravaisBasis, box: DomainBox) -> LatticeInstance:
    """Construct the portion of the scaled lattice inside ``box``.

    Atoms are the lattice points strictly inside the open box plus the corner
    atoms of every cell that meets the box.  A cell is *inner* when its closed
    parallelepiped lies inside the open box, which for a convex cell is
    equivalent to all 2^d corners lying strictly inside.
    """
    d = basis.dimension
    if box.dimension != d:
        raise ValueError("box dimension does not match basis dimension")
    A = basis.matrix
    eps = box.epsilon
    lengths = np.asarray(box.lengths)
    rho = (A @ np.full(d, 0.5)) if box.shift is None else np.asarray(box.shift, float)

    # Candidate integer cell indices: map the box corners through A^-1 and pad.
    box_corners = np.array(list(itertools.product(*[(0.0, l) for l in lengths])))
    lam_float = np.linalg.solve(A, (box_corners / eps - rho).T).T
    lo = np.floor(lam_float.min(axis=0)).astype(int) - 2
    hi = np.ceil(lam_float.max(axis=0)).astype(int) + 2
    axes = [np.arange(lo[j], hi[j] + 1) for j in range(d)]
    lam = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)

    # Corner offsets in binary-counter order: bit j of corner i is coordinate j.
    offsets = np.array([[(i >> j) & 1 for j in range(d)] for i in range(2**d)])

    # Corner positions of every candidate cell: (ncand, 2^d, d).
    mu = lam[:, None, :] + offsets[None, :, :]
    X = eps * (rho[None, None, :] + mu @ A.T)

    strictly_in = (X > 0.0).all(axis=2) & (X < lengths).all(axis=2)
    inner = strictly_in.all(axis=1)
    bbox_meets = (X.min(axis=1) < lengths).all(axis=1) & (X.max(axis=1) > 0.0).all(axis=1)
    boundary = bbox_meets & ~inner

    if not inner.any():
        raise ValueError("domain too small: no inner cell fits inside the box")

    keep = inner | boundary
    lam, mu, X = lam[keep], mu[keep], X[keep]
    inner = inner[keep]

    # Deduplicate atoms by integer coordinates.
    mu_flat = mu.reshape(-1, d)
    uniq, inverse = np.unique(mu_flat, axis=0, return_inverse=True)
    cell_corner_idx = inverse.reshape(mu.shape[0], 2**d)

    positions = eps * (rho[None, :] + uniq @ A.T)
    in_domain = (positions > 0.0).all(axis=1) & (positions < lengths).all(axis=1)

    cells = cell_corner_idx[inner]
    bcells = cell_corner_idx[~inner]
    midpoints = eps * (rho[None, :] + (lam + 0.5) @ A.T)

    active = np.zeros(uniq.shape[0], dtype=bool)
    active[cells.ravel()] = True

    strip = 2.0 * basis.l_A * eps
    b1 = positions[:, 0] <= strip
    b2 = positions[:, 0] >= lengths[0] - strip

    return LatticeInstance(
        basis=basis,
        box=box,
        positions=positions,
        int_coords=uniq,
        in_domain=in_domain,
        cells=np.ascontiguousarray(cells),
        boundary_cells=np.ascontiguousarray(bcells),
        cell_midpoints=midpoints[inner],
        active=active,
        b1=b1,
        b2=b2,
        shift=rho,
    )


def discrete_gradient(lat: LatticeInstance, positions: np.ndarray, cell: int) -> np.ndarray:
    """Discrete gradient of one inner cell as a d x 2^d matrix."""
    if not 0 <= cell < lat.n_inner_cells:
        raise IndexError(f"cell index {cell} out of range")
    idx = lat.cells[cell]
    Y = positions[idx]
    if not np.isfinite(Y).all():
        raise ValueError("configuration has undefined corner atoms for this cell")
    return ((Y - Y.mean(axis=0)) / lat.epsilon).T


@dataclass(frozen=True)
class DirectionSets:
    """Interaction directions A{-1,0,1}^d minus 0, partitioned by sparsity.

    ``ints`` are the integer coordinate vectors t, ``vectors = A t``; ``k``
    counts nonzero entries of t; ``plus`` selects one representative per
    +-pair (first nonzero entry of t positive).
    """

    basis: BravaisBasis
    ints: np.ndarray
    vectors: np.ndarray
    k: np.ndarray
    plus: np.ndarray

    def subset(self, k: int) -> np.ndarray:
        return self.vectors[self.k == k]

    @property
    def plus_ints(self) -> np.ndarray:
        return self.ints[self.plus]

    @property
    def plus_vectors(self) -> np.ndarray:
        return self.vectors[self.plus]


def interaction_directions(basis: BravaisBasis) -> DirectionSets:
    """Enumerate the 3^d - 1 interaction directions of the lattice."""
    d = basis.dimension
    ints = np.array([t for t in itertools.product((-1, 0, 1), repeat=d) if any(t)])
    vectors = ints @ basis.matrix.T
    k = np.count_nonzero(ints, axis=1)
    plus = np.zeros(len(ints), dtype=bool)
    for i, t in enumerate(ints):
        first = t[np.nonzero(t)[0][0]]
        plus[i] = first > 0
    return DirectionSets(basis, ints, vectors, k, plus)


@dataclass(frozen=True)
class NormalSet:
    """Unit normals of hyperplanes spanned by d-1 interaction directions.

    One representative per +-pair of normals; ``spans[i]`` holds the
    spanning directions (rows) found orthogonal to ``units[i]``.
    """

    units: np.ndarray
    spans: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return self.units.shape[0]


def _canonical_sign(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    for x in v:
        if abs(x) > tol:
            return v if x > 0 else -v
    return v


def crystallographic_normals(dirs: DirectionSets, tol: float = 1e-9) -> NormalSet:
    """Candidate cleavage normals: unit vectors orthogonal to a spanning set
    of d-1 linearly independent interaction directions.

    Normals are deduplicated up to sign at absolute tolerance ``tol``.
    """
    d = dirs.basis.dimension
    if d == 2:
        cands = [np.array([-v[1], v[0]]) / np.hypot(v[0], v[1]) for v in dirs.plus_vectors]
    elif d == 3:
        plus = dirs.plus_vectors
        cands = []
        for i, j in itertools.combinations(range(len(plus)), 2):
            c = np.cross(plus[i], plus[j])
            n = np.linalg.norm(c)
            if n > 1e-9:
                cands.append(c / n)
    else:
        raise ValueError("normal enumeration implemented for d in {2, 3} only")

    kept: list[np.ndarray] = []
    for c in cands:
        c = _canonical_sign(c)
        if not any(np.linalg.norm(c - u) < tol or np.linalg.norm(c + u) < tol for u in kept):
            kept.append(c)
    kept.sort(key=lambda u: tuple(np.round(u, 12)))

    units = np.array(kept)
    spans = []
    for u in kept:
        ortho = dirs.vectors[np.abs(dirs.vectors @ u) <= 1e-9]
        if np.linalg.matrix_rank(ortho, tol=1e-9) != d - 1:
            raise RuntimeError("normal candidate fails the spanning-rank test")
        spans.append(ortho)
    return NormalSet(units=units, spans=tuple(spans))


def neighbor_pairs(
    lat: LatticeInstance,
    ell: float,
    tol: float = 1e-9,
    which: str = "active",
) -> np.ndarray:
    """Unordered atom index pairs at geometric distance ``eps * ell``.

    ``which`` selects the atom subset: corners of inner cells ("active"),
    atoms strictly inside the box ("in_domain"), or every stored atom ("all").
    """
    if which == "active":
        mask = lat.active
    elif which == "in_domain":
        mask = lat.in_domain
    elif which == "all":
        mask = np.ones(lat.n_atoms, dtype=bool)
    else:
        raise ValueError("which must be 'active', 'in_domain' or 'all'")
    idx = np.nonzero(mask)[0]
    if idx.size < 2:
        return np.empty((0, 2), dtype=int)
    pts = lat.positions[idx]
    target = lat.epsilon * ell
    tree = cKDTree(pts)
    pairs = tree.query_pairs(target * (1.0 + tol), output_type="ndarray")
    if pairs.size == 0:
        return np.empty((0, 2), dtype=int)
    dist = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
    pairs = pairs[np.abs(dist - target) <= tol * target]
    return np.sort(idx[pairs], axis=1)
