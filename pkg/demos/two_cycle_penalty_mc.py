"""Metropolis sampling of points and permutations with 2-cycles forbidden.

Compares the measured density of indices in long cycles with the lower
bound rho - 4 rho_c / (1 + e^-alpha)^2 at alpha = inf.

Run:  python demos/two_cycle_penalty_mc.py
"""

import math

import numpy as np

from spatialperm import mcmc
from spatialperm.model_weights import make_model
from spatialperm.thermodynamics import critical_density, thmalpha_lower_bound


def main():
    model = make_model("gaussian", 1.0, 3)
    rho_c = critical_density(model).value
    L, rho = 5.0, 6 * rho_c
    rng = np.random.default_rng(2024)
    pts = mcmc.generate_points("poisson", L, 3, rho=rho, rng=rng)
    N = pts.shape[0]
    V = L**3
    long_from = math.ceil(V**0.5)
    spec = mcmc.HamiltonianSpec(model, L, alpha=math.inf)
    cfg = mcmc.ChainConfig(sweeps=3000, point_move_fraction=0.5, max_displacement=0.8, seed=7)
    trace = mcmc.run_chain(pts, spec, cfg, windows=[(1, 1), (long_from, N)], rng=rng)
    bound = thmalpha_lower_bound(model, rho, math.inf)
    name = f"rho_{long_from}_{N}"
    print(f"N={N} points in a box of side {L}, rho = 6 rho_c = {rho:.4f}, burn-in {trace.burn_in} sweeps")
    print(f"acceptance: {trace.acceptance}")
    print(f"mean number of 2-cycles: {trace.mean('n2'):.3g} (forbidden)")
    print(f"E rho[{long_from}, N] = {trace.mean(name):.4f} +- {trace.error(name):.4f}")
    print(f"lower bound           = {bound.value:.4f}")


if __name__ == "__main__":
    main()
