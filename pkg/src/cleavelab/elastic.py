"""Linearized elastic constants of a cell energy.

The quadratic form of the cell energy restricted to symmetric strains is
assembled by finite differences along strain directions ``F . Z`` and stored
as a matrix on strain vectors.  Strain vectors use scaled components
``(f_11, ..., f_dd, sqrt(2) f_12, sqrt(2) f_13, sqrt(2) f_23)`` — the scaling
that makes rotation conjugation orthogonal; with it the preset forms come out
with the classical matrix entries, and the derived quantities (uniaxial
stiffness, relaxed strain) are invariant under the choice of scaling anyway.

From the form Q the uniaxial tension constants follow: minimizing
``f^T Q f`` subject to ``f_1 = r`` gives the reduced energy ``alpha_A r^2``
and the optimal strain ``Fbar(r)``, linear in r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potentials import CellEnergyModel, cell_energy

__all__ = [
    "InadmissibleModelError",
    "ElasticConstants",
    "strain_basis",
    "strain_to_vector",
    "vector_to_strain",
    "strain_quadratic_form",
    "alpha_A",
    "optimal_strain",
    "reduced_energy",
    "compute_elastic_constants",
]

_SQRT2 = np.sqrt(2.0)


class InadmissibleModelError(ValueError):
    """The strain quadratic form is not positive definite."""


def strain_basis(d: int) -> list[np.ndarray]:
    """Orthonormal basis of symmetric d x d matrices matching the strain-vector
    component order: diagonal entries first, then (1,2), (1,3), (2,3)."""
    basis = []
    for a in range(d):
        E = np.zeros((d, d))
        E[a, a] = 1.0
        basis.append(E)
    for a in range(d):
        for b in range(a + 1, d):
            E = np.zeros((d, d))
            E[a, b] = E[b, a] = 1.0 / _SQRT2
            basis.append(E)
    return basis


def strain_to_vector(F: np.ndarray) -> np.ndarray:
    d = F.shape[0]
    comps = [F[a, a] for a in range(d)]
    comps += [_SQRT2 * F[a, b] for a in range(d) for b in range(a + 1, d)]
    return np.array(comps)


def vector_to_strain(f: np.ndarray, d: int) -> np.ndarray:
    F = np.zeros((d, d))
    for a in range(d):
        F[a, a] = f[a]
    m = d
    for a in range(d):
        for b in range(a + 1, d):
            F[a, b] = F[b, a] = f[m] / _SQRT2
            m += 1
    return F


def _fd_quadratic(model: CellEnergyModel, F: np.ndarray, t: float = 1e-4) -> float:
    """Second derivative of the cell energy along F.Z, Richardson-extrapolated.

    q(F) = lim 2 W_cell(Z + t F Z) / t^2; one Richardson level removes the
    t^2 truncation term, which matters for the null-space checks.
    """
    Z = model.Z

    def q(step: float) -> float:
        plus = cell_energy(model, Z + step * (F @ Z), include_chi=False)
        minus = cell_energy(model, Z - step * (F @ Z), include_chi=False)
        return 2.0 * (plus + minus) / (2.0 * step * step)

    return (4.0 * q(t / 2.0) - q(t)) / 3.0


def strain_quadratic_form(model: CellEnergyModel, t: float = 1e-4) -> np.ndarray:
    """Assemble the strain quadratic form by polarization of the FD values.

    Raises :class:`InadmissibleModelError` when the result is indefinite or
    numerically singular (min eigenvalue below 1e-8 times the max).
    """
    basis = strain_basis(model.dimension)
    dhat = len(basis)
    diag = np.array([_fd_quadratic(model, E, t) for E in basis])
    Q = np.zeros((dhat, dhat))
    for a in range(dhat):
        Q[a, a] = diag[a]
        for b in range(a + 1, dhat):
            qab = _fd_quadratic(model, basis[a] + basis[b], t)
            Q[a, b] = Q[b, a] = 0.5 * (qab - diag[a] - diag[b])
    Q = 0.5 * (Q + Q.T)
    eig = np.linalg.eigvalsh(Q)
    if eig[0] < 1e-8 * eig[-1] or eig[-1] <= 0:
        raise InadmissibleModelError(
            f"strain quadratic form is not positive definite (eigenvalues {eig})"
        )
    return Q


def alpha_A(Q: np.ndarray) -> tuple[float, float]:
    """Uniaxial stiffness from the strain form.

    Returns ``(alpha, agreement)`` where ``alpha = 1 / (e1^T Q^-1 e1)`` and
    ``agreement`` is the relative difference against the determinant-ratio
    evaluation ``det Q / det Qhat``.
    """
    Q = np.asarray(Q, dtype=float)
    e1 = np.zeros(Q.shape[0])
    e1[0] = 1.0
    x = np.linalg.solve(Q, e1)
    if x[0] <= 0:
        raise InadmissibleModelError("strain form not positive definite on e1")
    alpha = 1.0 / x[0]
    sign, logdet = np.linalg.slogdet(Q)
    sign_h, logdet_h = np.linalg.slogdet(Q[1:, 1:])
    alpha_det = sign * sign_h * np.exp(logdet - logdet_h)
    agreement = abs(alpha - alpha_det) / abs(alpha)
    return float(alpha), float(agreement)


def optimal_strain(Q: np.ndarray, r: float) -> np.ndarray:
    """Symmetric strain minimizing the form under the constraint f_1 = r."""
    Q = np.asarray(Q, dtype=float)
    d = int(round((np.sqrt(8 * Q.shape[0] + 1) - 1) / 2))
    e1 = np.zeros(Q.shape[0])
    e1[0] = 1.0
    x = np.linalg.solve(Q, e1)
    f = (r / x[0]) * x
    f[0] = r  # exact by construction; keep it bit-exact
    return vector_to_strain(f, d)


def reduced_energy(Q: np.ndarray, r: float) -> float:
    """Minimum of the strain form over f_1 = r, equal to alpha_A r^2."""
    a, _ = alpha_A(Q)
    return a * r * r


@dataclass(frozen=True)
class ElasticConstants:
    """Strain quadratic form and the uniaxial tension constants derived from it."""

    dimension: int
    Q: np.ndarray
    alpha: float
    Fbar_unit: np.ndarray
    formula_agreement: float
    null_space_residual: float

    def Fbar(self, r: float) -> np.ndarray:
        return r * self.Fbar_unit

    def to_json_dict(self) -> dict:
        return {
            "Q": [list(map(float, row)) for row in self.Q],
            "alpha_A": float(self.alpha),
            "F_bar_unit": [list(map(float, row)) for row in self.Fbar_unit],
            "checks": {
                "formula_agreement": float(self.formula_agreement),
                "null_space_residual": float(self.null_space_residual),
            },
        }


def _null_space_residual(model: CellEnergyModel, n_samples: int = 8) -> float:
    """Largest |q(H Z)| over a few unit-norm skew directions; should vanish."""
    rng = np.random.default_rng(12345)
    d = model.dimension
    worst = 0.0
    for _ in range(n_samples):
        M = rng.standard_normal((d, d))
        H = M - M.T
        H /= np.linalg.norm(H)
        worst = max(worst, abs(_fd_quadratic(model, H)))
    return worst


def compute_elastic_constants(model: CellEnergyModel) -> ElasticConstants:
    Q = strain_quadratic_form(model)
    alpha, agreement = alpha_A(Q)
    return ElasticConstants(
        dimension=model.dimension,
        Q=Q,
        alpha=alpha,
        Fbar_unit=optimal_strain(Q, 1.0),
        formula_agreement=agreement,
        null_space_residual=_null_space_residual(model),
    )
