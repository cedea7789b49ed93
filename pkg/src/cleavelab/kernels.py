"""Hot bond-sum kernels: energy and gradient accumulation over bond tables.

Two implementations are provided.  The numpy fallback vectorizes over the
bond arrays and works for every potential form; the compiled extension
(``cleavelab._speedups``, built from Cython) runs a fused loop for the
analytic Morse and 12-6 forms.  The compiled core is selected at import when
available and not disabled via the ``CLEAVELAB_PURE`` environment variable;
both paths produce identical results up to floating-point reduction order,
and the tests pin them against each other.

Kernel contract: ``r = |pos[j] - pos[i]| * inv_len`` is the scaled bond
length; energies are ``sum_b w_b W(r_b)`` and the gradient of that sum is
accumulated in place into ``grad``.
"""

from __future__ import annotations

import os

import numpy as np

_speedups = None
if not os.environ.get("CLEAVELAB_PURE"):
    try:
        from . import _speedups  # type: ignore[attr-defined]
    except ImportError:
        _speedups = None

HAVE_COMPILED = _speedups is not None


def _compiled_dispatch(potential):
    """Return the (energy_fn, grad_fn, params) triple for the compiled core,
    or None when the potential form is not covered."""
    if _speedups is None:
        return None
    form = getattr(potential, "form", None)
    if form == "morse":
        return (_speedups.morse_energy, _speedups.morse_energy_grad,
                (potential.kappa, potential.beta))
    if form == "lennard-jones":
        return (_speedups.lj_energy, _speedups.lj_energy_grad, (potential.beta,))
    return None


def bond_energy_numpy(pos, i, j, w, potential, inv_len) -> float:
    diff = pos[j] - pos[i]
    dist = np.sqrt((diff * diff).sum(axis=1))
    return float(np.dot(w, potential.energy(dist * inv_len)))


def bond_energy_grad_numpy(pos, i, j, w, potential, inv_len, grad) -> float:
    diff = pos[j] - pos[i]
    dist = np.sqrt((diff * diff).sum(axis=1))
    r = dist * inv_len
    energy = float(np.dot(w, potential.energy(r)))
    coeff = w * potential.deriv(r) * inv_len / dist
    contrib = diff * coeff[:, None]
    n = pos.shape[0]
    for c in range(pos.shape[1]):
        grad[:, c] += np.bincount(j, weights=contrib[:, c], minlength=n)
        grad[:, c] -= np.bincount(i, weights=contrib[:, c], minlength=n)
    return energy


def bond_energy(pos, i, j, w, potential, inv_len) -> float:
    fns = _compiled_dispatch(potential)
    if fns is not None:
        return float(fns[0](pos, i, j, w, float(inv_len), *fns[2]))
    return bond_energy_numpy(pos, i, j, w, potential, inv_len)


def bond_energy_grad(pos, i, j, w, potential, inv_len, grad) -> float:
    fns = _compiled_dispatch(potential)
    if fns is not None:
        return float(fns[1](pos, i, j, w, float(inv_len), grad, *fns[2]))
    return bond_energy_grad_numpy(pos, i, j, w, potential, inv_len, grad)
