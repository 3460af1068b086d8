"""Scenario geometry and correlated Rician channel sampling.

The channel of user ``k`` is::

    h_k = sqrt(beta_k) * (sqrt(1/(1+rho)) Theta^{1/2} z_k + sqrt(rho/(1+rho)) zt_k)

with ``z_k ~ CN(0, I_N)``, ``zt_k`` the ULA steering vector of the user and
``Theta^{1/2}`` the Hermitian square root of the exponential correlation
matrix.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DecompositionError, ParameterError

GEOMETRY_MODES = ("uniform-disk", "fixed-ring")


@dataclass(frozen=True)
class PathlossParams:
    """Parameters of ``beta(x) = 2 L / (1 + (x / cutoff)**exponent)``.

    ``ref_gain`` is linear; use :meth:`from_db` to configure it in dB.
    """

    exponent: float = 3.5
    cutoff: float = 25.0
    ref_gain: float = 10 ** (-86.5 / 10)
    radius: float = 250.0

    def __post_init__(self):
        if not self.exponent > 2:
            raise ParameterError(f"pathloss exponent must exceed 2, got {self.exponent}")
        if not self.cutoff > 0:
            raise ParameterError(f"cutoff distance must be positive, got {self.cutoff}")
        if not self.radius > self.cutoff:
            raise ParameterError("cell radius must exceed the cutoff distance")
        if not self.ref_gain > 0:
            raise ParameterError("reference attenuation must be positive in linear scale")

    @classmethod
    def from_db(cls, exponent=3.5, cutoff=25.0, ref_gain_db=-86.5, radius=250.0):
        return cls(exponent, cutoff, 10 ** (ref_gain_db / 10), radius)


@dataclass(frozen=True)
class UserGeometry:
    distance: float
    angle: float
    beta: float


def exponential_correlation(nu, N):
    """Correlation matrix with entries ``nu**|i-j|``."""
    if not 0 <= nu < 1:
        raise ParameterError(f"correlation coefficient must lie in [0, 1), got {nu}")
    if N < 1:
        raise ParameterError("N must be at least 1")
    idx = np.arange(N)
    # 0**0 == 1 keeps the identity for nu == 0
    return np.power(float(nu), np.abs(idx[:, None] - idx[None, :])).astype(float)


def hermitian_sqrt(theta, tol=1e-10):
    """Eigendecomposition ``theta = U^H diag(d) U`` with ``d`` descending.

    Returns ``(U, d)``; the Hermitian square root is ``U^H diag(sqrt(d)) U``.
    Eigenvectors are phase-normalized so that their largest-modulus entry
    (first one on ties) is real and positive, which makes ``U`` reproducible.
    Eigenvalues in ``[-tol*||theta||, 0)`` are clamped to zero.
    """
    theta = np.asarray(theta)
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise DecompositionError("correlation matrix must be square")
    scale = np.linalg.norm(theta, 2) if theta.size else 0.0
    if np.linalg.norm(theta - theta.conj().T, 2) > tol * max(scale, 1.0):
        raise DecompositionError("correlation matrix is not Hermitian")
    w, V = np.linalg.eigh(theta)
    if w.size and w.min() < -tol * scale:
        raise DecompositionError(f"correlation matrix is indefinite (min eigenvalue {w.min():.3e})")
    order = np.argsort(-w, kind="stable")
    w = np.clip(w[order], 0.0, None)
    V = V[:, order]
    pivot = np.argmax(np.abs(V) > np.abs(V).max(axis=0) * (1 - 1e-12), axis=0)
    phase = V[pivot, np.arange(V.shape[1])]
    V = V * (np.abs(phase) / phase)[None, :]
    return V.conj().T, w


def sqrt_from_decomposition(U, d):
    return U.conj().T @ (np.sqrt(d)[:, None] * U)


def steering_vector(angle, N):
    """ULA response ``exp(-1j * n * pi * sin(angle))``, n = 0..N-1."""
    return np.exp(-1j * np.pi * np.sin(angle) * np.arange(N))


def pathloss(x, params: PathlossParams):
    """Large-scale gain at distance ``x`` (metres), scalar or array."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ParameterError("distance must be positive")
    beta = 2 * params.ref_gain / (1 + (x / params.cutoff) ** params.exponent)
    return float(beta) if beta.ndim == 0 else beta


def sample_positions(K, params: PathlossParams, rng, mode="uniform-disk", min_distance=None):
    """Draw ``K`` users in the cell.

    ``uniform-disk`` places users uniformly over the annulus between
    ``min_distance`` (default: the pathloss cutoff) and the cell radius.
    ``fixed-ring`` puts every user at ``2R/3``. Angles are uniform on
    ``[-pi, pi)`` in both modes.
    """
    R = params.radius
    if mode == "uniform-disk":
        r0 = params.cutoff if min_distance is None else min_distance
        if not 0 <= r0 < R:
            raise ParameterError("min_distance must lie in [0, R)")
        u = rng.uniform(size=K)
        # inverse CDF of the area-uniform radius; 1 - u keeps x > 0 when r0 == 0
        x = np.sqrt(r0**2 + (1 - u) * (R**2 - r0**2))
    elif mode == "fixed-ring":
        x = np.full(K, 2 * R / 3)
    else:
        raise ParameterError(f"unknown geometry mode {mode!r}")
    angles = rng.uniform(-np.pi, np.pi, size=K)
    betas = pathloss(x, params) if K else np.empty(0)
    return [UserGeometry(float(a), float(b), float(c)) for a, b, c in zip(x, angles, np.atleast_1d(betas))]


@dataclass
class Scenario:
    """One fully specified downlink configuration.

    ``theta`` is optional; when omitted it is built from ``nu``.
    """

    N: int
    users: Sequence[UserGeometry]
    rho: float
    nu: float
    P_T: float
    sigma2: float
    lam: float
    theta: np.ndarray = None

    def __post_init__(self):
        self.users = list(self.users)
        K = len(self.users)
        if K < 1:
            raise ParameterError("at least one user is required")
        if self.N < K:
            raise ParameterError(f"need N >= K, got N={self.N}, K={K}")
        if not self.rho >= 0:
            raise ParameterError("Rician factor must be non-negative")
        for name in ("P_T", "sigma2", "lam"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.theta is None:
            self.theta = exponential_correlation(self.nu, self.N)
        elif not 0 <= self.nu < 1:
            raise ParameterError("correlation coefficient must lie in [0, 1)")
        self.theta = np.asarray(self.theta)
        if self.theta.shape != (self.N, self.N):
            raise ParameterError("theta must be N x N")
        if not np.allclose(np.diag(self.theta), 1.0, rtol=0, atol=1e-12):
            raise ParameterError("theta must have unit diagonal")
        for u in self.users:
            if not (u.distance > 0 and -np.pi <= u.angle < np.pi and u.beta > 0):
                raise ParameterError(f"invalid user geometry {u}")
        self.decomposition  # validates Hermitian PSD

    @property
    def K(self):
        return len(self.users)

    @property
    def betas(self):
        return np.array([u.beta for u in self.users])

    @property
    def angles(self):
        return np.array([u.angle for u in self.users])

    @cached_property
    def decomposition(self):
        return hermitian_sqrt(self.theta)

    @cached_property
    def theta_sqrt(self):
        return sqrt_from_decomposition(*self.decomposition)

    @cached_property
    def steering(self):
        """N x K matrix of LOS steering vectors."""
        return np.exp(-1j * np.pi * np.outer(np.arange(self.N), np.sin(self.angles)))

    def with_(self, **changes):
        """Copy with some fields replaced (theta is rebuilt unless given)."""
        fields = dict(N=self.N, users=self.users, rho=self.rho, nu=self.nu,
                      P_T=self.P_T, sigma2=self.sigma2, lam=self.lam)
        if "N" not in changes and "nu" not in changes:
            fields["theta"] = self.theta
        fields.update(changes)
        return Scenario(**fields)


@dataclass
class ChannelRealization:
    """Sampled channel ``H`` together with the Gaussian draws behind it."""

    H: np.ndarray
    Z: np.ndarray
    Z_tilde: np.ndarray = field(repr=False)

    @property
    def columns(self):
        return [self.H[:, k] for k in range(self.H.shape[1])]


def standard_complex_normal(rng, N):
    return (rng.standard_normal(N) + 1j * rng.standard_normal(N)) / np.sqrt(2)


def sample_channel(scenario: Scenario, rng):
    """Draw one channel realization.

    ``rng`` is either a single generator (used for all users in order) or a
    sequence of per-user generators, as produced by
    :meth:`RandomStreams.trial`.
    """
    N, K = scenario.N, scenario.K
    if isinstance(rng, np.random.Generator):
        gens = [rng] * K
    else:
        gens = list(rng)
        if len(gens) != K:
            raise ParameterError("need one generator per user")
    Z = np.column_stack([standard_complex_normal(g, N) for g in gens])
    rho = scenario.rho
    W = np.sqrt(1 / (1 + rho)) * (scenario.theta_sqrt @ Z) + np.sqrt(rho / (1 + rho)) * scenario.steering
    H = W * np.sqrt(scenario.betas)[None, :]
    return ChannelRealization(H, Z, scenario.steering)
