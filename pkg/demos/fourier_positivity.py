"""Convexity of r^(d-1) g(r) as a certificate for a nonnegative Fourier transform.

Run:  python demos/fourier_positivity.py
"""

import numpy as np

from spatialperm.model_weights import check_fourier_positivity


def main():
    profiles = [
        ("Gaussian e^{-r^2/4}, d=1", lambda r: np.exp(-r**2 / 4), 1, 40.0, 2.0, 2001),
        ("power law (1+r)^{-3/2}, d=1", lambda r: (1 + r) ** -1.5, 1, 400.0, 5.0, 4001),
        ("exponential e^{-r}, d=1", lambda r: np.exp(-r), 1, 60.0, 5.0, 2001),
        ("hard cutoff 1[r<1], d=1", lambda r: (r < 1).astype(float), 1, 4.0, 5.0, 2001),
    ]
    print(f"{'profile':32s} {'convex':>7s} {'min transform':>14s} {'at k':>7s}  verdict")
    for name, g, d, r_max, k_max, n_r in profiles:
        rep = check_fourier_positivity(g, d, r_max, k_max, n_r=n_r)
        verdict = "nonnegative" if rep.nonnegative else "NEGATIVE LOBE"
        print(f"{name:32s} {str(rep.is_convex_premise):>7s} {rep.min_transform_value:14.6e} "
              f"{rep.k_at_min:7.3f}  {verdict}")


if __name__ == "__main__":
    main()
