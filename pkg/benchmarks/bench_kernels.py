#!/usr/bin/env python3
"""Benchmark the compiled bond kernels against the numpy fallback.

Builds a representative workload (triangular lattice under small random
displacements) and times energy-plus-gradient evaluation through both code
paths, plus one full minimization. Run from the repository root:

    python benchmarks/bench_kernels.py [--eps 0.015625] [--lengths 10 1]
"""

import argparse
import math
import time

import numpy as np

import cleavelab as cl
from cleavelab import kernels
from cleavelab.potentials import EnergySystem
from cleavelab.simulate import MinimizeOptions


def time_eval(system, pos, repeats):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        system.energy_and_gradient(pos)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--eps", type=float, default=1.0 / 64)
    parser.add_argument("--lengths", type=float, nargs=2, default=[10.0, 1.0])
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()

    basis = cl.build_basis("triangular", 0.0)
    model = cl.model_from_preset(basis, 1.0, 1.0)
    lat = cl.build_lattice(basis, cl.DomainBox(tuple(args.lengths), args.eps))
    system = EnergySystem(lat, model)
    n_bonds = sum(len(b["i"]) for b in system.bonds)
    print(f"workload: {lat.n_atoms} atoms, {lat.n_inner_cells} cells, {n_bonds} bonds")

    rng = np.random.default_rng(0)
    pos = lat.positions + 0.02 * args.eps * rng.standard_normal(lat.positions.shape)

    if not kernels.HAVE_COMPILED:
        print("compiled core not built (run `python setup.py build_ext --inplace`); "
              "timing the numpy fallback only")

    saved = kernels._speedups
    results = {}
    if kernels.HAVE_COMPILED:
        kernels._speedups = saved
        results["compiled"] = time_eval(system, pos, args.repeats)
    kernels._speedups = None
    results["numpy"] = time_eval(system, pos, args.repeats)
    kernels._speedups = saved

    for name, dt in results.items():
        rate = n_bonds / dt / 1e6
        print(f"energy+gradient [{name:8s}]: {1e3 * dt:8.3f} ms   ({rate:6.1f} Mbond/s)")
    if len(results) == 2:
        print(f"speedup: {results['numpy'] / results['compiled']:.2f}x")

    ec = cl.compute_elastic_constants(model)
    fc = cl.compute_fracture_constants(
        cl.bond_betas(model), cl.crystallographic_normals(model.directions),
        transverse_lengths=list(args.lengths)[1:], n_validate=0)
    a_eps = 0.3 * math.sqrt(args.eps)
    t0 = time.perf_counter()
    rep = cl.minimize(lat, model, a_eps, starts=("elastic",),
                      elastic_constants=ec, fracture_constants=fc,
                      opts=MinimizeOptions(max_iterations=100))
    dt = time.perf_counter() - t0
    print(f"100-step minimize: {dt:6.2f} s  "
          f"({1e3 * dt / max(rep.iterations['elastic'], 1):.2f} ms/step, "
          f"kernel={'compiled' if kernels.HAVE_COMPILED else 'numpy'})")


if __name__ == "__main__":
    main()
