"""Unit-norm Hermite polynomials and Gaussian quadrature.

Walks through the basis conventions the rest of the package relies on:
orthonormality under N(0, 1), exact Gauss rules, coefficient extraction,
and the correlated-pair moment identity.

Run:  python3 demos/01_hermite_and_quadrature.py
"""

import numpy as np

from amplab import (bivariate_gaussian_moment, gauss_hermite_rule,
                    gaussian_expectation, hermite_coefficients, hermite_eval)

# --- orthonormality -------------------------------------------------------
# E[H_j(Z) H_k(Z)] = delta_jk for the unit-norm convention.
x, w = gauss_hermite_rule(64)
print("Gram matrix of H_0..H_4 under N(0,1):")
gram = np.array([[np.sum(w * hermite_eval(j, x) * hermite_eval(k, x))
                  for k in range(5)] for j in range(5)])
print(np.array_str(gram, precision=3, suppress_small=True))

# --- Gauss rules integrate polynomials exactly ----------------------------
x8, w8 = gauss_hermite_rule(8)
print(f"\nE Z^2 = {np.sum(w8 * x8**2):.15f}   (exact: 1)")
print(f"E Z^4 = {np.sum(w8 * x8**4):.15f}   (exact: 3)")
print(f"E Z^6 = {np.sum(w8 * x8**6):.15f}   (exact: 15)")

# --- where the dense grid wins --------------------------------------------
# tanh saturates: it is analytic only in a narrow strip once the input
# scale is large, and a Gauss rule converges slowly there.  The dense
# trapezoid expectation stays at machine precision.
sigma = 6.0
gauss = float(np.sum(gauss_hermite_rule(256)[1]
                     * np.tanh(2 + sigma * gauss_hermite_rule(256)[0]) ** 2))
dense = gaussian_expectation(lambda y: np.tanh(2 + y) ** 2, sigma)
print(f"\nE tanh^2(2 + {sigma:.0f} Z):  256-node Gauss = {gauss:.12f}")
print(f"                     dense trapezoid = {dense:.12f}")
print("(the two differ in the 4th decimal; the trapezoid value is the "
      "accurate one)")

# --- coefficient extraction ------------------------------------------------
series = hermite_coefficients(lambda t: t * t / np.sqrt(3.0), 4, 1.0)
print(f"\ncoefficients of x^2/sqrt(3):  {np.round(series.coefficients, 10)}")
print(f"Parseval sum = {series.second_moment():.12f} "
      f"(E f^2 = {gaussian_expectation(lambda t: t**4 / 3.0, 1.0):.12f})")

# --- correlated pairs -------------------------------------------------------
# For standardized jointly Gaussian (Z1, Z2) with correlation rho,
# E[H_k(Z1) H_k(Z2)] = rho^k, so series contract coordinate-wise.
a = hermite_coefficients(lambda t: t ** 3 - t, 6, 1.0)
for rho in (0.0, 0.5, 0.9):
    print(f"rho = {rho}:  E[f(Z1) f(Z2)] = "
          f"{bivariate_gaussian_moment(a, a, rho):.10f}")
