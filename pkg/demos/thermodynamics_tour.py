"""Critical densities, pressures and the critical-temperature shift.

Run:  python demos/thermodynamics_tour.py
"""

import math

import numpy as np

from spatialperm.model_weights import make_model
from spatialperm.thermodynamics import (
    alpha_pressure,
    critical_density,
    critical_density_alpha,
    ideal_pressure,
    tc_shift_constant,
    thmalpha_lower_bound,
)


def main():
    print("Critical density rho_c = int dk / (e^eps(k) - 1)")
    for kind, beta, dim in [("gaussian", 1.0, 3), ("exponential3d", 1.0, 3), ("powerlaw1d", 1.0, 1),
                            ("gaussian", 1.0, 2)]:
        r = critical_density(make_model(kind, beta, dim))
        print(f"  {kind:14s} d={dim}  rho_c = {r.value:.10g}  ({r.method.value}, err ~ {r.est_error:.1e})")

    g = make_model("gaussian", 1.0, 3)
    print("\nPressure of the Gaussian model with and without the 2-cycle penalty")
    print("     mu        p0(mu)      p_alpha(mu), alpha=0.5   alpha=inf")
    for mu in np.linspace(-2.0, -0.1, 6):
        print(f"  {mu:6.2f}  {ideal_pressure(g, mu).value:.6e}  {alpha_pressure(g, mu, 0.5).value:.6e}"
              f"            {alpha_pressure(g, mu, math.inf).value:.6e}")

    print("\nCritical density with the penalty, and the lower bound on long-cycle density at rho = 0.3")
    for alpha in (0.0, 0.5, 2.0, math.inf):
        rc = critical_density_alpha(g, alpha).value
        b = thmalpha_lower_bound(g, 0.3, alpha)
        print(f"  alpha={alpha:>4}:  rho_c(alpha) = {rc:.6f}   bound = {b.value:+.6f}"
              f"{'  (vacuous)' if b.vacuous else ''}")

    print("\nLinear shift of T_c with the scattering length, (T_c(a) - T_c) / (T_c rho^(1/3) a):")
    for rho in (0.5, 1.0, 2.0, 8.0):
        print(f"  rho = {rho:3}:  {tc_shift_constant(rho):.7f}")


if __name__ == "__main__":
    main()
