"""Quasi-Monte-Carlo Fourier feature bases for shift-invariant kernels.

A basis of M features phi_m(s) = sqrt(2/M) cos(omega_m s + theta_m) is built
from M/2 frequencies sampled from the spectral density of the kernel, each
frequency duplicated with a -pi/2 phase shift so the features come in
(cos, sin) pairs and phi(s)^T phi(s') approximates k(s, s').  Every integral
of the feature map needed downstream (window integrals of phi, outer-product
integrals of shifted copies) has a closed form collected here.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri


class KernelFamily(enum.Enum):
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class KernelSpec:
    """Shift-invariant kernel, k(s, s') = exp(-(beta |s - s'|)^2) for the
    Gaussian family.  ``beta`` is the inverse length scale (1/time)."""

    family: KernelFamily = KernelFamily.GAUSSIAN
    beta: float = 1.0

    def __post_init__(self):
        if not isinstance(self.family, KernelFamily):
            object.__setattr__(self, "family", KernelFamily(self.family))
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    def value(self, s, s_prime):
        """Exact kernel value k(s, s')."""
        d = np.asarray(s, dtype=float) - np.asarray(s_prime, dtype=float)
        return np.exp(-((self.beta * d) ** 2))

    @property
    def frequency_scale(self) -> float:
        """Standard deviation of the spectral (frequency) distribution."""
        return np.sqrt(2.0) * self.beta


@dataclass(frozen=True)
class FeatureBasis:
    """Immutable Fourier feature basis.

    ``omega`` and ``theta`` have length M; for m > M/2 the frequency repeats
    omega[m - M/2] and the phase is -pi/2 (sin partner of the cos feature),
    while theta[m] = 0 for m <= M/2.  Construction is deterministic given
    (family, beta, M, seed).
    """

    omega: np.ndarray
    theta: np.ndarray
    family: KernelFamily = KernelFamily.GAUSSIAN
    beta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float).copy()
        theta = np.asarray(self.theta, dtype=float).copy()
        if omega.ndim != 1 or omega.shape != theta.shape:
            raise ValueError("omega and theta must be 1-d arrays of equal length")
        if omega.size < 2 or omega.size % 2:
            raise ValueError(f"feature count must be even and >= 2, got {omega.size}")
        omega.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "theta", theta)

    @property
    def M(self) -> int:
        return self.omega.size

    @property
    def scale(self) -> float:
        """Common feature amplitude sqrt(2/M)."""
        return np.sqrt(2.0 / self.M)

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "beta": self.beta,
            "M": self.M,
            "seed": self.seed,
            "omega": self.omega.tolist(),
            "theta": self.theta.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureBasis":
        basis = cls(
            omega=np.asarray(doc["omega"], dtype=float),
            theta=np.asarray(doc["theta"], dtype=float),
            family=KernelFamily(doc["family"]),
            beta=float(doc["beta"]),
            seed=int(doc["seed"]),
        )
        if basis.M != int(doc["M"]):
            raise ValueError("inconsistent feature count in basis document")
        return basis

    @classmethod
    def from_json(cls, text: str) -> "FeatureBasis":
        return cls.from_dict(json.loads(text))


def build_basis(spec: KernelSpec, M: int, seed: int) -> FeatureBasis:
    """Construct a quasi-Monte-Carlo feature basis with M features.

    M/2 stratified points u_k = (k - U)/ (M/2), with a single uniform shift U
    drawn from ``seed``, are mapped through the inverse normal CDF scaled to
    the kernel's spectral density (std sqrt(2)*beta for the Gaussian family).
    The shift keeps every u_k strictly inside (0, 1), so no point maps to an
    infinite frequency.
    """
    if M < 2 or M % 2:
        raise ValueError(f"M must be an even integer >= 2, got {M}")
    n = M // 2
    rng = np.random.default_rng(seed)
    u = (np.arange(1, n + 1) - rng.random()) / n
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    half = ndtri(u) * spec.frequency_scale
    omega = np.concatenate([half, half])
    theta = np.concatenate([np.zeros(n), np.full(n, -0.5 * np.pi)])
    return FeatureBasis(omega=omega, theta=theta, family=spec.family,
                        beta=spec.beta, seed=seed)


_SERIES_CUTOFF = 1e-4


def sinc_u(x):
    """Unnormalized sinc, sin(x)/x, with a 4-term Taylor series below
    |x| = 1e-4 so the x -> 0 limit is exact."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    direct = np.sin(safe) / safe
    x2 = x * x
    series = 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    return np.where(small, series, direct)


def phi(basis: FeatureBasis, s: float) -> np.ndarray:
    """Feature map at a single lag: phi_m(s) = sqrt(2/M) cos(omega_m s + theta_m)."""
    return basis.scale * np.cos(basis.omega * float(s) + basis.theta)


def feature_matrix(basis: FeatureBasis, s) -> np.ndarray:
    """Feature map evaluated on an array of lags; rows are phi(s_k)."""
    s = np.asarray(s, dtype=float)
    return basis.scale * np.cos(np.multiply.outer(s, basis.omega) + basis.theta)


def integral_phi_range(basis: FeatureBasis, lo, hi) -> np.ndarray:
    """Closed form of int_lo^hi phi(u) du, broadcast over (lo, hi) arrays.

    Uses the product form (hi-lo) cos(omega (hi+lo)/2 + theta) sinc(omega (hi-lo)/2),
    which equals (sin(omega hi + theta) - sin(omega lo + theta)) / omega and is
    exact in the omega -> 0 limit.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    length = (hi - lo)[..., None]
    mid = ((hi + lo) * 0.5)[..., None]
    arg = basis.omega * mid + basis.theta
    return basis.scale * length * np.cos(arg) * sinc_u(basis.omega * length * 0.5)


def integral_phi_window(basis: FeatureBasis, t_event: float, T: float, A: float) -> np.ndarray:
    """int_0^L phi(u) du with L = max(0, min(T - t_event, A)).

    This is the contribution of an event at ``t_event`` to the integral of the
    windowed feature sum over [0, T]; it vanishes when t_event >= T.
    """
    L = max(0.0, min(T - t_event, A))
    return integral_phi_range(basis, 0.0, L)


def integral_phi_outer(basis: FeatureBasis, t_n: float, t_np: float,
                       a: float, b: float) -> np.ndarray:
    """Exact int_a^b phi(t - t_n) phi(t - t_np)^T dt as an M-by-M matrix.

    Expanding the cosine product gives two plane-wave terms whose integrals
    are cos(...) * sinc(...) factors; see ``_outer_batch``.  Requires a <= b;
    a == b returns the zero matrix.
    """
    if a > b:
        raise ValueError(f"integration bounds must satisfy a <= b, got a={a}, b={b}")
    return _outer_batch(
        basis,
        np.asarray([t_n], dtype=float),
        np.asarray([t_np], dtype=float),
        np.asarray([a], dtype=float),
        np.asarray([b], dtype=float),
    )[0]


def _outer_batch(basis: FeatureBasis, t_n, t_np, a, b,
                 omega_sum=None, omega_diff=None) -> np.ndarray:
    """Batched outer-product integrals for P (t_n, t_np, a, b) tuples -> (P, M, M).

    With X_m = omega_m (mid - t_n) + theta_m and Y_m = omega_m (mid - t_np) + theta_m,
    mid = (a+b)/2 and h = (b-a)/2, the integral is

        (b-a)/M [ cos X cos Y^T (S+ + S-) + sin X sin Y^T (S- - S+) ],

    where S+- = sinc(h (omega_m +- omega_m')).
    """
    omega, theta = basis.omega, basis.theta
    if omega_sum is None:
        omega_sum = omega[:, None] + omega[None, :]
    if omega_diff is None:
        omega_diff = omega[:, None] - omega[None, :]
    mid = (a + b) * 0.5
    h = (b - a) * 0.5
    X = omega * (mid - t_n)[:, None] + theta
    Y = omega * (mid - t_np)[:, None] + theta
    s_plus = sinc_u(h[:, None, None] * omega_sum)
    s_minus = sinc_u(h[:, None, None] * omega_diff)
    out = np.einsum("pm,pn->pmn", np.cos(X), np.cos(Y)) * (s_plus + s_minus)
    out += np.einsum("pm,pn->pmn", np.sin(X), np.sin(Y)) * (s_minus - s_plus)
    out *= ((b - a) / basis.M)[:, None, None]
    return out


class WindowIntegralTable:
    """Per-event cache of feature-map integrals for a fixed event set.

    ``vectors[n]`` holds v_n = int_0^{L_n} phi(u) du with
    L_n = max(0, min(T - t_n, A)); pair outer integrals are computed on
    demand and memoized.
    """

    def __init__(self, basis: FeatureBasis, times: np.ndarray, T: float, A: float):
        self.basis = basis
        self.times = np.asarray(times, dtype=float)
        self.T = float(T)
        self.A = float(A)
        L = np.clip(np.minimum(self.T - self.times, self.A), 0.0, None)
        self.vectors = integral_phi_range(basis, np.zeros_like(L), L)
        self._pairs: dict[tuple[int, int], np.ndarray] = {}

    def pair(self, n: int, n_prime: int) -> np.ndarray:
        """Outer integral of phi(t - t_n) phi(t - t_n')^T over the window where
        both events are active, clipped to [0, T]."""
        key = (n, n_prime)
        cached = self._pairs.get(key)
        if cached is not None:
            return cached
        t_n, t_np = self.times[n], self.times[n_prime]
        a = max(t_n, t_np)
        b = min(self.T, self.A + t_n, self.A + t_np)
        if a >= b:
            value = np.zeros((self.basis.M, self.basis.M))
        else:
            value = integral_phi_outer(self.basis, t_n, t_np, a, b)
        self._pairs[key] = value
        return value


__all__ = [
    "KernelFamily",
    "KernelSpec",
    "FeatureBasis",
    "build_basis",
    "sinc_u",
    "phi",
    "feature_matrix",
    "integral_phi_range",
    "integral_phi_window",
    "integral_phi_outer",
    "WindowIntegralTable",
]
