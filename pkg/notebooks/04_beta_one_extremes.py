"""The beta = 1 extremes for the normal shift model.

Run: python notebooks/04_beta_one_extremes.py
The null mean of T_n tends to -1/2 (r = 1) or -1 (r > 1), but only at a
logarithmic rate; the exact finite-n mean is computed by quadrature.
"""
import math

from scipy import integrate, stats


def null_mean(n, r):
    eps, th = 1.0 / n, math.sqrt(2 * r * math.log(n))

    def f(y):
        return math.log1p(eps * math.expm1(th * y - th * th / 2)) * stats.norm.pdf(y)
    return n * integrate.quad(f, -40, 40, points=[0, th / 2, th], limit=500, epsabs=0, epsrel=1e-12)[0]


for r, limit in ((1.0, -0.5), (1.5, -1.0)):
    print(f"r={r}: limit {limit}")
    for k in (4, 6, 9, 12, 20, 40):
        print(f"  n=1e{k:<3d} E T_n = {null_mean(10.0 ** k, r):+.4f}")
