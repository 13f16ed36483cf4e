"""Exact occupation-number statistics of the free model above and below rho_c.

Shows the zero-mode moment generating function approaching exp(lambda rho_0),
the split of the density into short, intermediate and long cycles, and the
typical-set probability from exact samples.

Run:  python demos/condensate_and_cycles.py
"""

import math

import numpy as np

from spatialperm.cycles import window_edges
from spatialperm.model_weights import make_model
from spatialperm.spectral import (
    build_mode_set,
    expected_cycle_density,
    mgf_n0,
    partition_table,
    typical_set_probability,
)
from spatialperm.thermodynamics import critical_density


def main():
    model = make_model("gaussian", 1.0, 3)
    rho_c = critical_density(model).value
    print(f"Gaussian weight, d=3, beta=1: rho_c = {rho_c:.6f}\n")

    for factor in (0.5, 2.0):
        rho = factor * rho_c
        rho0 = max(rho - rho_c, 0.0)
        print(f"rho = {factor} rho_c  (limit of E exp(n0/V) is exp(rho_0) = {math.exp(rho0):.6f})")
        for L in (10.0, 15.0, 20.0):
            ms = build_mode_set(model, L)
            N = int(math.floor(rho * ms.volume + 1e-9))
            t = partition_table(ms, N)
            V = ms.volume
            ea, eb, _ = window_edges(V, 0.25, 0.75, 1.0)
            short = expected_cycle_density(t, 1, ea)
            mid = expected_cycle_density(t, ea + 1, eb) if eb > ea else 0.0
            long = expected_cycle_density(t, eb + 1, N) if N > eb else 0.0
            print(f"  L={L:4.0f} N={N:4d} modes={ms.n_modes:6d}  E exp(n0/V) = {mgf_n0(t, 1.0):.6f}   "
                  f"rho[1,V^1/4]={short:.4f} rho(V^1/4,V^3/4]={mid:.4f} rho(V^3/4,N]={long:.4f}")
        print()

    L = 20.0
    ms = build_mode_set(model, L)
    t = partition_table(ms, int(2 * rho_c * ms.volume))
    est = typical_set_probability(t, 0.1, 2000, np.random.default_rng(0))
    print(f"P(A_eta), eta=0.1, L=20, rho=2 rho_c: {est.value:.4f}  95% CI [{est.low:.4f}, {est.high:.4f}]")


if __name__ == "__main__":
    main()
