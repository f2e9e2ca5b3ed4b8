"""Cauchy and R transforms of the spectral laws used by the TAP solver.

For a compactly supported probability measure xi with right edge
lambda_plus, the Cauchy transform

    G(z) = integral xi(d lambda) / (z - lambda),   z > lambda_plus,

is strictly decreasing on (lambda_plus, inf), so it has an inverse on
(0, G(lambda_plus+)) and the R-transform R(y) = G^{-1}(y) - 1/y is well
defined there.  Everything is real-axis only.

Closed forms are provided for the two-atom uniform +/-1 law ("rademacher")
and the semicircle; the Marchenko-Pastur law of the sample-covariance
coupling J = X^T X / sqrt(M N) is served from the sampled spectrum of a
fresh realization, which is the source of truth for that normalization.
Empirical laws average 1/(z - lambda_i) over their atoms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import NumericError
from .rng import substream

_KINDS = ("rademacher", "semicircle", "marchenko_pastur", "empirical")


@dataclass(frozen=True)
class SpectralLaw:
    kind: str
    lambda_plus: float
    eigenvalues: np.ndarray | None = None
    phi: float | None = None
    extra: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown law kind {self.kind!r}")
        if self.eigenvalues is not None:
            ev = np.asarray(self.eigenvalues, dtype=np.float64)
            if ev.ndim != 1 or ev.size == 0:
                raise ValueError("eigenvalues must be a nonempty 1-D sequence")
            if not np.all(np.isfinite(ev)):
                raise ValueError("eigenvalues must all be finite")
            ev = np.sort(ev)
            ev.setflags(write=False)
            object.__setattr__(self, "eigenvalues", ev)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def rademacher() -> "SpectralLaw":
        """Uniform law on {-1, +1}: the spectrum of every involution coupling."""
        return SpectralLaw("rademacher", 1.0)

    @staticmethod
    def semicircle() -> "SpectralLaw":
        """Semicircle on [-2, 2] (Wigner couplings)."""
        return SpectralLaw("semicircle", 2.0)

    @staticmethod
    def marchenko_pastur(phi: float, *, dim: int = 2048, seed: int = 0) -> "SpectralLaw":
        """Limiting law of J = X^T X / sqrt(M N), M = round(phi N).

        Served empirically from an independent seeded realization of size
        ``dim``; the right edge is the theoretical sqrt(phi) + 1/sqrt(phi) + 2
        or the sampled maximum, whichever is larger.
        """
        if phi <= 0:
            raise ValueError(f"phi must be positive, got {phi}")
        ev = _mp_spectrum(float(phi), int(dim), int(seed))
        edge = np.sqrt(phi) + 1.0 / np.sqrt(phi) + 2.0
        return SpectralLaw("marchenko_pastur", float(max(edge, ev[-1])),
                           eigenvalues=ev, phi=float(phi))

    @staticmethod
    def empirical(eigenvalues) -> "SpectralLaw":
        ev = np.asarray(eigenvalues, dtype=np.float64)
        return SpectralLaw("empirical", float(np.max(ev)), eigenvalues=ev)

    @staticmethod
    def from_file(path) -> "SpectralLaw":
        """Empirical law from a plain-text file, one eigenvalue per line."""
        values = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                try:
                    values.append(float(text))
                except ValueError:
                    raise ValueError(
                        f"{path}: line {lineno} is not a decimal real: {text!r}")
        if not values:
            raise ValueError(f"{path}: no eigenvalues found")
        return SpectralLaw.empirical(values)


@lru_cache(maxsize=4)
def _mp_spectrum(phi: float, dim: int, seed: int) -> np.ndarray:
    rng = substream(seed, "mp-law", str(phi), str(dim))
    m = int(round(phi * dim))
    x = 2.0 * rng.integers(0, 2, size=(m, dim)).astype(np.float64) - 1.0
    j = (x.T @ x) / np.sqrt(m * dim)
    ev = np.linalg.eigvalsh(j)
    ev.setflags(write=False)
    return ev


def _check_above_edge(law: SpectralLaw, z: float):
    if not z > law.lambda_plus:
        raise ValueError(
            f"z = {z} must exceed the right edge lambda_plus = {law.lambda_plus}")


def cauchy_transform(law: SpectralLaw, z: float) -> float:
    """G(z) for z strictly above the right edge of the support."""
    _check_above_edge(law, z)
    if law.kind == "rademacher":
        return z / (z * z - 1.0)
    if law.kind == "semicircle":
        return (z - np.sqrt(z * z - 4.0)) / 2.0
    return float(np.mean(1.0 / (z - law.eigenvalues)))


def cauchy_derivative(law: SpectralLaw, z: float) -> float:
    """G'(z) = -integral xi(d lambda)/(z - lambda)^2; always negative."""
    _check_above_edge(law, z)
    if law.kind == "rademacher":
        return -(z * z + 1.0) / (z * z - 1.0) ** 2
    if law.kind == "semicircle":
        return (1.0 - z / np.sqrt(z * z - 4.0)) / 2.0
    return float(-np.mean(1.0 / (z - law.eigenvalues) ** 2))


def _sup_cauchy(law: SpectralLaw) -> float:
    """Supremum of G on (lambda_plus, inf), i.e. the limit at the edge."""
    if law.kind == "rademacher":
        return np.inf
    if law.kind == "semicircle":
        return 1.0
    if law.lambda_plus <= law.eigenvalues[-1]:
        return np.inf  # atom at the edge
    return float(np.mean(1.0 / (law.lambda_plus - law.eigenvalues)))


def inverse_cauchy(law: SpectralLaw, y: float, *, tol: float = 1e-14) -> float:
    """z = G^{-1}(y), by safeguarded Newton on (lambda_plus, inf).

    Accurate to |G(z) - y| <= tol (default well inside the contracted
    1e-12).  The initial bracket upper end lambda_plus + 1/y + 1 works
    because G(z) < 1/(z - lambda_plus).
    """
    sup = _sup_cauchy(law)
    if not 0.0 < y < sup:
        raise ValueError(
            f"y = {y} outside the attainable range (0, {sup}) of G")
    lo = law.lambda_plus
    hi = law.lambda_plus + 1.0 / y + 1.0
    while cauchy_transform(law, hi) > y:  # paranoia; cannot trigger for atoms
        hi = law.lambda_plus + 2.0 * (hi - law.lambda_plus)
    z = hi
    for _ in range(200):
        g = cauchy_transform(law, z) - y
        if abs(g) <= tol:
            return float(z)
        if g > 0:
            lo = z
        else:
            hi = z
        step = g / cauchy_derivative(law, z)
        z_new = z - step
        if not lo < z_new < hi:
            z_new = 0.5 * (lo + hi)  # bisect when Newton leaves the bracket
        z = z_new
    if abs(cauchy_transform(law, z) - y) > 1e-12:
        raise NumericError(
            f"inverse Cauchy transform did not reach |G(z) - y| <= 1e-12 "
            f"at y = {y}")
    return float(z)


def r_transform(law: SpectralLaw, y: float):
    """(R(y), R'(y)) with R(y) = G^{-1}(y) - 1/y.

    The derivative uses the inverse-function rule
    d G^{-1}/dy = 1/G'(G^{-1}(y)), so R'(y) = 1/G'(G^{-1}(y)) + 1/y^2.
    """
    z = inverse_cauchy(law, y)
    r = z - 1.0 / y
    r_prime = 1.0 / cauchy_derivative(law, z) + 1.0 / (y * y)
    return float(r), float(r_prime)


def resolvent_variance(law: SpectralLaw, lam: float) -> float:
    """sigma_psi^2 of the trace-centered resolvent at shift lam.

    This is -G'(lam) - G(lam)^2 = lim (1/N) Tr M(lam)^2 for the centered
    resolvent M(lam) of a coupling with spectral law ``law``.
    """
    g = cauchy_transform(law, lam)
    return float(-cauchy_derivative(law, lam) - g * g)
