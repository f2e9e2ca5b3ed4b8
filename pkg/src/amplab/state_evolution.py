"""Deterministic state evolution for the memory-free iteration.

The recursion tracks the limiting Gaussian process (Z_0, ..., Z_T) of the
iterates z^t = M f_t(z^{t-1}):

    sigma_{t+1}^2 = sigma_psi^2 * E[fbar_{t+1}(Z_t)^2]
    rho_{s,t+1}   = sigma_psi^2 * E[fbar_s(Z_{s-1}) fbar_{t+1}(Z_t)],  s <= t,

with rho_{0,i} = 0, where fbar_t is f_t with its linear (first Hermite)
component at the current input scale removed:

    fbar_t(x) = f_t(x) - (E[Z f_t(sigma_{t-1} Z)] / sigma_{t-1}) x.

Cross moments are evaluated in the Hermite basis: each fbar is expanded
against its standardized input, and for standardized jointly Gaussian
pairs E[H_j(Z_1) H_k(Z_2)] = delta_jk rho^k, so
E[fbar_s fbar_t] = sum_k c^{(s)}_k c^{(t)}_k rho^k.  The standardization
bookkeeping (every series lives at its own sigma) is the correctness
burden of this module and is tested against two-dimensional quadrature.

Variances use the dense-grid Gaussian expectation directly rather than the
truncated Parseval sum: for saturating nonlinearities at large input scale
the Hermite tail decays too slowly for the 1e-6 constant-variance contract,
while the direct quadrature is exact to machine precision.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NumericError
from .hermite import (HermiteSeries, bivariate_gaussian_moment,
                      gauss_hermite_rule, gaussian_expectation,
                      hermite_coefficients)

DEFAULT_DEGREE = 24

# A variance at or below this is treated as a degenerate (effectively
# linear) nonlinearity; the recursion cannot be standardized past it.
_DEGENERATE_VAR = 1e-14


@dataclass(frozen=True)
class Nonlinearity:
    """Scalar function applied entrywise by the iteration."""

    eval: Callable
    label: str = "f"
    derivative: Callable | None = None

    def __call__(self, x):
        return self.eval(x)


def linear_coefficient(f: Nonlinearity | Callable, sigma: float) -> float:
    """E[Z f(sigma Z)] / sigma: the coefficient of the H_1 component."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    func = f.eval if isinstance(f, Nonlinearity) else f
    moment = gaussian_expectation(lambda y: (y / sigma) * func(y), sigma)
    return moment / sigma


def center_divergence_free(f: Nonlinearity, sigma: float) -> Nonlinearity:
    """Remove the linear component of f at input scale sigma.

    The returned fbar satisfies E[Z fbar(sigma Z)] = 0 (checked by
    quadrature to 1e-10 in the test suite).  For even f the coefficient is
    zero and fbar == f up to roundoff.
    """
    coeff = linear_coefficient(f, sigma)
    func = f.eval

    def centered(x):
        return func(x) - coeff * x

    deriv = None
    if f.derivative is not None:
        fprime = f.derivative
        deriv = lambda x: fprime(x) - coeff
    return Nonlinearity(centered, f"{f.label}-centered", deriv)


@dataclass(frozen=True)
class SECovariance:
    """Output of the recursion: variances, covariances and predictions."""

    T: int
    sigma_sq: np.ndarray               # length T+1, sigma_t^2
    rho: dict                          # (s, t) -> rho_{s,t} for 0 <= s < t <= T
    sigma_psi_sq: float
    degenerate: bool = False
    series: tuple = field(default=(), repr=False)  # standardized Hermite series

    def covariance_matrix(self) -> np.ndarray:
        """Assemble the (T+1) x (T+1) covariance of (Z_0, ..., Z_T)."""
        out = np.diag(self.sigma_sq.copy())
        for (s, u), value in self.rho.items():
            out[s, u] = out[u, s] = value
        return out

    def succ_diff_prediction(self) -> np.ndarray:
        """d_t = sigma_t^2 + sigma_{t-1}^2 - 2 rho_{t-1,t} for t = 1..T.

        This is E[(Z_t - Z_{t-1})^2] under the limiting Gaussian: the
        prediction for the successive-difference observable.
        """
        return np.array([
            self.sigma_sq[t] + self.sigma_sq[t - 1]
            - 2.0 * self.rho.get((t - 1, t), 0.0)
            for t in range(1, self.T + 1)])


def run_state_evolution(nonlins: Sequence[Nonlinearity], sigma0_sq: float,
                        sigma_psi_sq: float, T: int,
                        degree: int = DEFAULT_DEGREE, *,
                        coeff_method: str = "trapezoid") -> SECovariance:
    """Run T steps of the recursion for the given per-step nonlinearities.

    ``nonlins[t]`` is the function applied at step t+1.  ``degree`` caps
    the Hermite expansion used for cross moments (exposed as a knob; 24 is
    ample for smooth nonlinearities at unit scale, saturating functions at
    large scale benefit from more).
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    if len(nonlins) < T:
        raise ValueError(f"need {T} nonlinearities, got {len(nonlins)}")
    if sigma0_sq <= 0 or sigma_psi_sq <= 0:
        raise ValueError("sigma0_sq and sigma_psi_sq must be positive")
    if degree < 4:
        raise ValueError("degree must be at least 4")

    sigma_sq = np.empty(T + 1)
    sigma_sq[0] = sigma0_sq
    rho: dict = {}
    series: list[HermiteSeries | None] = [None] * T
    degenerate = False

    for t in range(T):
        if degenerate:
            sigma_sq[t + 1] = 0.0
            for s in range(t + 1):
                rho.setdefault((s, t + 1), 0.0)
            continue
        sig_t = float(np.sqrt(sigma_sq[t]))
        fbar = center_divergence_free(nonlins[t], sig_t)
        # Expansion against the standardized input Z_t / sigma_t, so the
        # bivariate identity below applies with unit marginals.
        coeffs = hermite_coefficients(fbar.eval, degree, sig_t,
                                      method=coeff_method)
        series[t] = coeffs
        var = sigma_psi_sq * gaussian_expectation(
            lambda y: fbar.eval(y) ** 2, sig_t)
        sigma_sq[t + 1] = var
        if var <= _DEGENERATE_VAR:
            warnings.warn(
                f"nonlinearity {nonlins[t].label!r} is degenerate at step "
                f"{t + 1}: downstream variances are zero", stacklevel=2)
            degenerate = True
            sigma_sq[t + 1] = 0.0
            rho[(0, t + 1)] = 0.0
            for s in range(1, t + 1):
                rho[(s, t + 1)] = 0.0
            continue
        rho[(0, t + 1)] = 0.0
        for s in range(1, t + 1):
            denom = np.sqrt(sigma_sq[s - 1] * sigma_sq[t])
            r = rho.get((s - 1, t), 0.0) / denom
            if abs(r) > 1.0 + 1e-8:
                raise NumericError(
                    f"normalized correlation rho_({s - 1},{t}) = {r} exceeds 1; "
                    "state evolution is inconsistent")
            r = float(np.clip(r, -1.0, 1.0))
            rho[(s, t + 1)] = sigma_psi_sq * bivariate_gaussian_moment(
                series[s - 1], series[t], r)

    result = SECovariance(T, sigma_sq, rho, sigma_psi_sq, degenerate,
                          tuple(series))
    _check_psd(result)
    return result


def _check_psd(se: SECovariance, floor: float = -1e-10):
    cov = se.covariance_matrix()
    lo = float(np.linalg.eigvalsh(cov)[0])
    if lo < floor:
        raise NumericError(
            f"state-evolution covariance is not PSD (min eigenvalue {lo:.3e})")


def cross_moment_quadrature(f1: Callable, sigma1: float, f2: Callable,
                            sigma2: float, rho: float, *,
                            order: int = 128) -> float:
    """E[f1(sigma1 Z_1) f2(sigma2 Z_2)] for a correlated standardized pair.

    Debug cross-check for the Hermite-coefficient path: evaluates the
    two-dimensional Gaussian expectation by a product Gauss rule with
    Z_2 = rho Z_1 + sqrt(1 - rho^2) W.
    """
    if abs(rho) > 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho}")
    x, w = gauss_hermite_rule(order)
    comp = np.sqrt(max(0.0, 1.0 - rho * rho))
    z2 = rho * x[:, None] + comp * x[None, :]
    vals = f1(sigma1 * x)[:, None] * f2(sigma2 * z2)
    return float(w @ vals @ w)


# ---------------------------------------------------------------------------
# named nonlinearity presets (CLI and experiments)
# ---------------------------------------------------------------------------

def _square(x):
    return x * x / np.sqrt(3.0)


def _cubic(x):
    return x ** 3 / np.sqrt(15.0)


PRESETS = {
    # Even, hence divergence-free as-is; E[f^2] = 1 at unit input scale.
    "square": Nonlinearity(_square, "square"),
    # Centered per-step by the engine (the run pipeline removes the linear
    # component at the running scale before iterating).
    "tanh-centered": Nonlinearity(np.tanh, "tanh-centered",
                                  lambda x: 1.0 - np.tanh(x) ** 2),
    "cubic-centered": Nonlinearity(_cubic, "cubic-centered",
                                   lambda x: 3.0 * x ** 2 / np.sqrt(15.0)),
}


def preset_nonlinearity(name: str) -> Nonlinearity:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown nonlinearity preset {name!r}; "
            f"choose from {sorted(PRESETS)}") from None
