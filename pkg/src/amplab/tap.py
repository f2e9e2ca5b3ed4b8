"""Mean-field Ising magnetization via the memory-free iteration.

For the Gibbs measure with coupling J, inverse temperature beta and field
strength theta, the high-temperature magnetization approximately solves

    m = tanh(theta 1 + beta J m - beta R(beta - beta q*) m)

where R is the R-transform of the limiting spectral law of J.  The solver
here follows the classical two-stage route:

1. ``solve_q_star`` finds the scalar fixed point
       q = E[tanh^2(theta + sigma*(q) G)],  sigma*^2(q) = beta^2 q R'(beta - beta q),
   by damped iteration, then derives lambda* = G^{-1}(beta - beta q*) and
   the variance constant sigma_psi^2 of the trace-centered resolvent
   M(lambda*).
2. ``run_tap_amp`` iterates z^{t+1} = M(lambda*) g(z^t) from
   z^0 ~ N(0, sigma*^2 I) with
       g(z) = [tanh(theta + z)/(1 - q*) - z] / (beta - beta q*),
   which is divergence-free at scale sigma*, so the simple memory-free
   iteration applies and the state-evolution variance stays constant at
   sigma*^2 for every step.

Couplings with two-point spectrum {-1, +1} (signed sine, signed Hadamard,
random orthogonal) use the linear-polynomial resolvent shortcut; dense SK
and Hopfield couplings go through the conjugate-gradient resolvent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .amp import AmpTrace, gaussian_init, run_amp
from .ensembles import (MatrixOperator, build_random_orthogonal,
                        build_signed_hadamard, build_signed_sine,
                        build_wigner_coupling, build_wishart_coupling,
                        centered_resolvent, involution_resolvent)
from .errors import ConvergenceError
from .hermite import gaussian_expectation
from .spectral import (SpectralLaw, inverse_cauchy, r_transform,
                       resolvent_variance)
from .state_evolution import Nonlinearity

TAP_ENSEMBLES = ("signed-sine", "signed-hadamard", "random-orthogonal",
                 "sk", "hopfield")

# Hopfield limiting law: sampled spectrum of an independent realization of
# this size (there is no closed form for this normalization).
HOPFIELD_LAW_DIM = 4096


@dataclass(frozen=True)
class TapParameters:
    beta: float
    theta: float
    q_star: float
    sigma_star_sq: float
    lambda_star: float
    sigma_psi_sq: float
    law: SpectralLaw
    iterations: int = 0
    residual: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.q_star < 1.0:
            raise ValueError(f"q_star = {self.q_star} outside [0, 1)")
        if self.lambda_star <= self.law.lambda_plus:
            raise ValueError("lambda_star must exceed the spectral edge")
        if self.sigma_psi_sq <= 0:
            raise ValueError("sigma_psi_sq must be positive")

    @property
    def r_shift(self) -> float:
        """beta * R(beta - beta q*): the Onsager-like shift in the fixed point."""
        y = self.beta * (1.0 - self.q_star)
        return self.beta * (self.lambda_star - 1.0 / y)


def ensemble_law(ensemble: str, phi: float = 1.0) -> SpectralLaw:
    """Limiting spectral law of each supported coupling."""
    if ensemble in ("signed-sine", "signed-hadamard", "random-orthogonal"):
        return SpectralLaw.rademacher()
    if ensemble == "sk":
        return SpectralLaw.semicircle()
    if ensemble == "hopfield":
        return SpectralLaw.marchenko_pastur(phi, dim=HOPFIELD_LAW_DIM)
    raise ValueError(f"unknown ensemble {ensemble!r}; choose from {TAP_ENSEMBLES}")


def solve_q_star(beta: float, theta: float, law: SpectralLaw,
                 quad_order: int = 4097, *, tol: float = 1e-12,
                 max_iter: int = 10_000) -> TapParameters:
    """Damped fixed-point solve of the overlap equation.

    Iterates q <- (1 - eta) q + eta E[tanh^2(theta + sigma*(q) G)] with
    eta = 0.5 (halved automatically when the residual oscillates without
    shrinking) until the fixed-point residual is <= tol.  Uniqueness is
    only guaranteed at high temperature; the returned parameters describe
    the fixed point actually reached from the standard start.

    ``quad_order`` is the node count of the dense Gaussian grid used for
    the expectation (a Gauss rule of admissible order cannot deliver
    1e-12 accuracy for tanh^2 at the large input scales that occur at low
    temperature; the dense grid can).
    """
    if beta < 0 or theta < 0:
        raise ValueError("beta and theta must be nonnegative")

    def sigma_sq_of(q):
        if q == 0.0 or beta == 0.0:
            return 0.0
        y = beta * (1.0 - q)
        _, r_prime = r_transform(law, y)
        return beta * beta * q * r_prime

    def phi_of(q):
        s2 = sigma_sq_of(q)
        if s2 < 0:
            raise ValueError(f"sigma*^2(q) = {s2} negative at q = {q}")
        return gaussian_expectation(
            lambda yv: np.tanh(theta + yv) ** 2, np.sqrt(s2),
            points=quad_order)

    q = 0.5 if theta > 0 else 0.01
    eta = 0.5
    prev_resid = None
    iterations = 0
    for iterations in range(1, max_iter + 1):
        resid = phi_of(q) - q
        if abs(resid) <= tol:
            break
        if prev_resid is not None and resid * prev_resid < 0 \
                and abs(resid) >= abs(prev_resid):
            eta *= 0.5  # oscillating without progress: damp harder
        prev_resid = resid
        q = q + eta * resid
        q = float(np.clip(q, 0.0, 1.0 - 1e-12))
    else:
        raise ConvergenceError(
            f"q* iteration did not converge in {max_iter} steps "
            f"(last residual {resid:.3e})", residual=resid)

    sigma_star_sq = sigma_sq_of(q)
    y = beta * (1.0 - q)
    lambda_star = inverse_cauchy(law, y)
    denom = q - (1.0 - q) ** 2 * sigma_star_sq
    if q > 1e-10 and abs(denom) > 1e-14:
        sigma_psi_sq = beta ** 2 * (1.0 - q) ** 4 * sigma_star_sq / denom
    else:
        # q* = 0 (no external field): the closed-form ratio is 0/0, but the
        # constant is still the resolvent variance at lambda*.
        sigma_psi_sq = resolvent_variance(law, lambda_star)
    return TapParameters(beta, theta, q, sigma_star_sq, lambda_star,
                         sigma_psi_sq, law, iterations, abs(resid))


def g_nonlinearity(params: TapParameters) -> Nonlinearity:
    """g(z) = [tanh(theta + z)/(1 - q*) - z] / (beta - beta q*).

    Divergence-free at input scale sigma*: E[Z g(sigma* Z)] = 0, which is
    what lets the simple memory-free iteration drive the TAP fixed point.
    """
    beta, theta, q = params.beta, params.theta, params.q_star
    scale = beta * (1.0 - q)
    if scale == 0.0:
        raise ValueError("beta (1 - q*) vanishes; g is undefined")
    one_minus_q = 1.0 - q

    def g(z):
        return (np.tanh(theta + z) / one_minus_q - z) / scale

    def g_prime(z):
        return ((1.0 - np.tanh(theta + z) ** 2) / one_minus_q - 1.0) / scale

    return Nonlinearity(g, "tap-g", g_prime)


def build_coupling(ensemble: str, n: int, seed: int,
                   phi: float = 1.0) -> MatrixOperator:
    if ensemble == "signed-sine":
        return build_signed_sine(n, seed)
    if ensemble == "signed-hadamard":
        return build_signed_hadamard(n, seed)
    if ensemble == "random-orthogonal":
        return build_random_orthogonal(n, seed)
    if ensemble == "sk":
        return build_wigner_coupling(n, seed)
    if ensemble == "hopfield":
        return build_wishart_coupling(n, phi, seed)
    raise ValueError(f"unknown ensemble {ensemble!r}; choose from {TAP_ENSEMBLES}")


def resolvent_operator(coupling: MatrixOperator, params: TapParameters,
                       *, involution: bool | None = None) -> MatrixOperator:
    """Centered resolvent M(lambda*) for a built coupling.

    Couplings with spectrum {-1, +1} take the linear-polynomial shortcut;
    anything else solves with conjugate gradient.
    """
    if involution is None:
        involution = coupling.label in ("signed-sine", "signed-hadamard",
                                        "random-orthogonal")
    if involution:
        return involution_resolvent(coupling, params.lambda_star,
                                    params.sigma_psi_sq)
    return centered_resolvent(coupling, params.lambda_star,
                              params.sigma_psi_sq)


@dataclass
class TapRunResult:
    trace: AmpTrace
    magnetization: list          # m^t = tanh(theta 1 + z^t), t = 0..T
    tap_residual: list           # per-t squared fixed-point violation
    params: TapParameters
    coupling: MatrixOperator = field(repr=False, default=None)


def tap_residual(m: np.ndarray, coupling: MatrixOperator,
                 params: TapParameters, theta_field=None) -> float:
    """(1/N) || m - tanh(theta 1 + beta J m - beta R(beta - beta q*) m) ||^2."""
    field_term = params.theta if theta_field is None else params.theta * theta_field
    rhs = np.tanh(field_term + params.beta * coupling.matvec(m)
                  - params.r_shift * m)
    return float(np.mean((m - rhs) ** 2))


def run_tap_amp(ensemble: str, beta: float, theta: float, n: int, T: int,
                seed: int, *, phi: float = 1.0,
                params: TapParameters | None = None) -> TapRunResult:
    """Full TAP pipeline: solve parameters, build J and M(lambda*), iterate.

    The iteration is the simple memory-free run with f_t = g for all t and
    z^0 ~ N(0, sigma*^2 I).  Magnetization iterates and TAP residuals are
    recorded alongside the raw trace.
    """
    if params is None:
        params = solve_q_star(beta, theta, ensemble_law(ensemble, phi))
    coupling = build_coupling(ensemble, n, seed, phi)
    operator = resolvent_operator(coupling, params)
    g = g_nonlinearity(params)
    z0 = gaussian_init(n, np.sqrt(params.sigma_star_sq), seed)
    trace = run_amp(operator, [g] * T, z0, T, "simple", seed=seed)
    magnetization = [np.tanh(theta + z) for z in trace.iterates]
    residuals = [tap_residual(m, coupling, params) for m in magnetization]
    return TapRunResult(trace, magnetization, residuals, params, coupling)


# ---------------------------------------------------------------------------
# random external fields and the gauge transform
# ---------------------------------------------------------------------------

def gauge_conjugate(j_op: MatrixOperator, h: np.ndarray) -> MatrixOperator:
    """Jbar = diag(h) J diag(h) for a +/-1 field vector h.

    Conjugation by a sign diagonal is exact in floating point, so the
    iterate identity z^t(J, h) = diag(h) z^t(Jbar, 1) holds entrywise.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (j_op.dim,):
        raise ValueError(f"field has shape {h.shape}, expected ({j_op.dim},)")
    if not np.all(np.abs(h) == 1.0):
        raise ValueError("field entries must be +1 or -1")

    def apply(v):
        hh = h[:, None] if v.ndim == 2 else h
        return hh * j_op.matvec(hh * v)

    trace = j_op.trace  # diag(h) J diag(h) has the same diagonal
    return MatrixOperator(j_op.dim, apply, j_op.sigma_psi_sq,
                          f"{j_op.label}-gauged", seed=j_op.seed,
                          trace=trace, coupling=j_op,
                          accepts_matrix=j_op.accepts_matrix)


def run_field_iteration(coupling: MatrixOperator, h: np.ndarray,
                        params: TapParameters, T: int, z0: np.ndarray,
                        *, involution: bool | None = None) -> list:
    """Memory-free TAP iteration with a +/-1 external field vector h.

    z^{t+1} = M(lambda*) [tanh(theta h + z^t)/(1-q*) - z^t] / (beta - beta q*).
    Returns the list of iterates z^0..z^T.
    """
    h = np.asarray(h, dtype=np.float64)
    operator = resolvent_operator(coupling, params, involution=involution)
    beta, theta, q = params.beta, params.theta, params.q_star
    scale = beta * (1.0 - q)
    z = np.asarray(z0, dtype=np.float64).copy()
    iterates = [z.copy()]
    for _ in range(T):
        update = (np.tanh(theta * h + z) / (1.0 - q) - z) / scale
        z = operator.matvec(update)
        iterates.append(z.copy())
    return iterates
