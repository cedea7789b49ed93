# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Fused bond-sum loops for the analytic pair potentials.

Same contract as the numpy fallbacks in ``kernels``: scaled bond length
r = |pos[j] - pos[i]| * inv_len, energies summed with per-bond weights, and
the gradient of the weighted sum accumulated in place.
"""

from libc.math cimport exp, sqrt


def morse_energy(const double[:, ::1] pos,
                 const long long[::1] i, const long long[::1] j,
                 const double[::1] w, double inv_len,
                 double kappa, double beta):
    cdef Py_ssize_t n = i.shape[0]
    cdef Py_ssize_t d = pos.shape[1]
    cdef Py_ssize_t b, c
    cdef double acc = 0.0
    cdef double dist2, diff, r, u
    for b in range(n):
        dist2 = 0.0
        for c in range(d):
            diff = pos[j[b], c] - pos[i[b], c]
            dist2 += diff * diff
        r = sqrt(dist2) * inv_len
        u = 1.0 - exp(-kappa * (r - 1.0))
        acc += w[b] * beta * u * u
    return acc


def morse_energy_grad(const double[:, ::1] pos,
                      const long long[::1] i, const long long[::1] j,
                      const double[::1] w, double inv_len,
                      double[:, ::1] grad, double kappa, double beta):
    cdef Py_ssize_t n = i.shape[0]
    cdef Py_ssize_t d = pos.shape[1]
    cdef Py_ssize_t b, c, bi, bj
    cdef double acc = 0.0
    cdef double dist2, dist, r, u, e, coeff, g
    cdef double diff[3]
    for b in range(n):
        bi = i[b]
        bj = j[b]
        dist2 = 0.0
        for c in range(d):
            diff[c] = pos[bj, c] - pos[bi, c]
            dist2 += diff[c] * diff[c]
        dist = sqrt(dist2)
        r = dist * inv_len
        e = exp(-kappa * (r - 1.0))
        u = 1.0 - e
        acc += w[b] * beta * u * u
        coeff = w[b] * (2.0 * beta * kappa * u * e) * inv_len / dist
        for c in range(d):
            g = coeff * diff[c]
            grad[bj, c] += g
            grad[bi, c] -= g
    return acc


def lj_energy(const double[:, ::1] pos,
              const long long[::1] i, const long long[::1] j,
              const double[::1] w, double inv_len, double beta):
    cdef Py_ssize_t n = i.shape[0]
    cdef Py_ssize_t d = pos.shape[1]
    cdef Py_ssize_t b, c
    cdef double acc = 0.0
    cdef double dist2, diff, r, x
    for b in range(n):
        dist2 = 0.0
        for c in range(d):
            diff = pos[j[b], c] - pos[i[b], c]
            dist2 += diff * diff
        r = sqrt(dist2) * inv_len
        x = 1.0 / (r * r * r * r * r * r)
        acc += w[b] * beta * (x * x - 2.0 * x + 1.0)
    return acc


def lj_energy_grad(const double[:, ::1] pos,
                   const long long[::1] i, const long long[::1] j,
                   const double[::1] w, double inv_len,
                   double[:, ::1] grad, double beta):
    cdef Py_ssize_t n = i.shape[0]
    cdef Py_ssize_t d = pos.shape[1]
    cdef Py_ssize_t b, c, bi, bj
    cdef double acc = 0.0
    cdef double dist2, dist, r, x, coeff, g
    cdef double diff[3]
    for b in range(n):
        bi = i[b]
        bj = j[b]
        dist2 = 0.0
        for c in range(d):
            diff[c] = pos[bj, c] - pos[bi, c]
            dist2 += diff[c] * diff[c]
        dist = sqrt(dist2)
        r = dist * inv_len
        x = 1.0 / (r * r * r * r * r * r)
        acc += w[b] * beta * (x * x - 2.0 * x + 1.0)
        coeff = w[b] * (12.0 * beta * (x - x * x) / r) * inv_len / dist
        for c in range(d):
            g = coeff * diff[c]
            grad[bj, c] += g
            grad[bi, c] -= g
    return acc
