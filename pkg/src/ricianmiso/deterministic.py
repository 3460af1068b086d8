"""Deterministic equivalents of the RZF SINR over correlated Rician fading.

The channel is rewritten as ``H = sqrt(K) U^H Sigma`` with::

    Sigma = K^{-1/2} D^{1/2} X Dt^{1/2} + A

so the RZF precoder only involves the resolvent ``Q = (Sigma Sigma^H + lam I)^{-1}``.
``delta`` and ``delta_t`` are the unique positive solution of the canonical
system for the non-centered separable model, and ``T`` / ``T_t`` are the
matching deterministic approximations of ``Q`` and the co-resolvent.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs
from scipy.optimize import brentq

from .channel import Scenario
from .errors import (
    ConvergenceError,
    DegenerateRegimeError,
    NumericalError,
    ParameterError,
    TranscriptionError,
)
from .precoding import noise_to_power
from .streams import RandomStreams

IMAG_TOL = 1e-12


@dataclass
class LiftedModel:
    """Deterministic triple ``(D, Dt, A)`` plus the unitary ``U``.

    ``d`` and ``dt`` hold the diagonals of ``D`` (N) and ``Dt`` (K).
    """

    d: np.ndarray
    dt: np.ndarray
    A: np.ndarray
    U: np.ndarray

    @property
    def N(self):
        return self.d.size

    @property
    def K(self):
        return self.dt.size

    @property
    def has_los(self):
        return bool(np.any(self.A))

    @property
    def D(self):
        return np.diag(self.d)

    @property
    def Dt(self):
        return np.diag(self.dt)


def lift(U, d, betas, rician, steering):
    """Build the lifted model; ``rician`` may be scalar or one factor per user."""
    betas = np.asarray(betas, dtype=float)
    K = betas.size
    rician = np.broadcast_to(np.asarray(rician, dtype=float), (K,))
    dt = betas / (1 + rician)
    Zt = steering * np.sqrt(rician / (1 + rician) * betas / K)[None, :]
    return LiftedModel(np.asarray(d, dtype=float), dt, U @ Zt, U)


def lift_scenario(scenario: Scenario):
    U, d = scenario.decomposition
    return lift(U, d, scenario.betas, scenario.rho, scenario.steering)


@dataclass
class FixedPointSolution:
    delta: float
    delta_t: float
    T: np.ndarray
    T_t: np.ndarray
    residual: float
    iterations: int
    lam: float


def _resolvent_pair(model, lam, delta, delta_t):
    N, K = model.N, model.K
    A = model.A
    Ah = A.conj().T
    MT = (A / (1 + delta * model.dt)[None, :]) @ Ah
    MT[np.diag_indices(N)] += lam * (1 + delta_t * model.d)
    MTt = (Ah / (1 + delta_t * model.d)[None, :]) @ A
    MTt[np.diag_indices(K)] += lam * (1 + delta * model.dt)
    T = np.linalg.solve(MT, np.eye(N))
    T_t = np.linalg.solve(MTt, np.eye(K))
    return T, T_t


def _weighted_inv_trace(M, w):
    """``Tr diag(w) M^{-1}`` for Hermitian PD ``M`` via a Cholesky inverse."""
    potrf, potri = get_lapack_funcs(("potrf", "potri"), (M,))
    c, info = potrf(M, lower=1, overwrite_a=1)
    if info == 0:
        c, info = potri(c, lower=1, overwrite_c=1)
    if info != 0:
        raise NumericalError(f"fixed-point matrix is not positive definite (info {info})")
    return float(w @ np.real(np.diag(c)))


def _rhs(model, lam, delta, delta_t):
    K, d, dt = model.K, model.d, model.dt
    if not model.has_los:
        # T and T_t are diagonal without a LOS part
        return (float(np.sum(d / (lam * (1 + delta_t * d)))) / K,
                float(np.sum(dt / (lam * (1 + delta * dt)))) / K)
    A = model.A
    Ah = A.conj().T
    MT = (A / (1 + delta * dt)[None, :]) @ Ah
    MT[np.diag_indices(model.N)] += lam * (1 + delta_t * d)
    MTt = (Ah / (1 + delta_t * d)[None, :]) @ A
    MTt[np.diag_indices(K)] += lam * (1 + delta * dt)
    return _weighted_inv_trace(MT, d) / K, _weighted_inv_trace(MTt, dt) / K


def _gap(x, fx):
    return abs(x - fx) / abs(fx) if fx != 0 else abs(x - fx)


def solve_fixed_point(model: LiftedModel, lam, tol=1e-12, max_iter=10_000, init=None, damping=0.5, polish=200):
    """Damped Picard iteration for ``(delta, delta_t)``.

    The residual is the larger of the two relative gaps
    ``|x - f(x)| / |f(x)|`` (absolute when ``f(x) == 0``). Iteration starts
    from ``init`` (scalar or pair; default ``1/lam`` for both). Once the
    tolerance is met, up to ``polish`` further steps are taken while the
    residual keeps decreasing.
    """
    if not lam > 0:
        raise ParameterError("lam must be positive")
    if not tol > 0:
        raise ParameterError("tol must be positive")
    if init is None:
        init = 1 / lam
    delta, delta_t = np.broadcast_to(np.asarray(init, dtype=float), (2,))
    residual = np.inf
    best = None
    for it in range(1, max_iter + 1):
        f, g = _rhs(model, lam, delta, delta_t)
        if not (np.isfinite(f) and np.isfinite(g)) or f < 0 or g < 0:
            raise NumericalError(f"invalid fixed-point iterate ({f}, {g}) at step {it}")
        residual = max(_gap(delta, f), _gap(delta_t, g))
        if best is not None and (residual >= best[0] or it - best[3] > polish):
            break
        if residual <= tol and (best is None or residual < best[0]):
            # keep going while the gap still shrinks; stops at rounding level
            best = (residual, delta, delta_t, it if best is None else best[3])
            if residual == 0:
                break
        delta = (1 - damping) * delta + damping * f
        delta_t = (1 - damping) * delta_t + damping * g
    if best is None:
        raise ConvergenceError(
            f"fixed point not reached in {max_iter} iterations (residual {residual:.3e})",
            residual=residual, iterations=max_iter)
    residual, delta, delta_t, _ = best
    T, T_t = _resolvent_pair(model, lam, delta, delta_t)
    return FixedPointSolution(float(delta), float(delta_t), T, T_t, float(residual), it, lam)


def _trace_real(X, Y, name):
    """Real part of ``Tr X Y`` after checking the imaginary residue."""
    terms = X * Y.T
    z = terms.sum()
    scale = np.abs(terms).sum()
    if abs(z.imag) > IMAG_TOL * max(scale, np.finfo(float).tiny):
        raise NumericalError(f"{name} has imaginary part {z.imag:.3e}")
    return float(z.real)


def _quad_real(a, M, b=None, name="quadratic form"):
    """Real parts of ``a_k^H M a_k`` for every column ``k`` of ``a``."""
    vals = np.einsum("nk,nk->k", a.conj(), M @ a)
    scale = np.einsum("nk,nk->k", np.abs(a), np.abs(M) @ np.abs(a))
    if np.any(np.abs(vals.imag) > IMAG_TOL * np.maximum(scale, np.finfo(float).tiny)):
        raise NumericalError(f"{name} is not real")
    return vals.real


@dataclass
class AuxQuantities:
    vartheta: float
    vartheta_t: float
    F: float
    Delta: float
    alpha: float
    V: float


def _los_weight(sol, model):
    """``A (I + delta Dt)^{-2} Dt A^H``."""
    w = model.dt / (1 + sol.delta * model.dt) ** 2
    return (model.A * w[None, :]) @ model.A.conj().T


def aux_quantities(sol: FixedPointSolution, model: LiftedModel, lam=None):
    lam = sol.lam if lam is None else lam
    K = model.K
    T, Tt = sol.T, sol.T_t
    DT = model.d[:, None] * T
    DtTt = model.dt[:, None] * Tt
    TT = T @ T
    W = _los_weight(sol, model)
    vartheta = _trace_real(DT, DT, "vartheta") / K
    vartheta_t = _trace_real(DtTt, DtTt, "vartheta_t") / K
    F = _trace_real(T @ DT, W, "F") / K
    alpha = _trace_real(model.D, TT, "alpha") / K
    V = _trace_real(TT, W, "V") / K
    Delta = (1 - F) ** 2 - lam**2 * vartheta * vartheta_t
    if not Delta > 0:
        raise DegenerateRegimeError(f"Delta = {Delta:.3e} <= 0")
    return AuxQuantities(vartheta, vartheta_t, F, Delta, alpha, V)


def rates_from_sinr(sinr):
    """Per-user rates ``log2(1 + sinr)`` and their sum."""
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0) or np.any(np.isnan(sinr)):
        raise ParameterError("SINR must be non-negative")
    rates = np.log2(1 + sinr)
    return rates, float(rates.sum())


@dataclass
class DeterministicSINR:
    u: np.ndarray
    s: np.ndarray
    psi: float
    sinr: np.ndarray
    rates: np.ndarray
    sum_rate: float
    solution: FixedPointSolution = None
    aux: AuxQuantities = None


def _finish(u, s, psi, noise_ratio, sol=None, aux=None):
    if np.any(s < 0) or psi < 0:
        raise TranscriptionError(f"negative interference term (min s = {np.min(s):.3e}, psi = {psi:.3e})")
    sinr = u**2 / (s + psi * (1 + u) ** 2 * noise_ratio)
    if np.any(~(sinr >= 0)):
        raise TranscriptionError("negative deterministic SINR")
    rates, total = rates_from_sinr(sinr)
    return DeterministicSINR(u, s, float(psi), sinr, rates, total, sol, aux)


def _signal_terms(sol, model):
    """Quantities shared by every SINR variant: u_k and its building blocks."""
    lam, delta = sol.lam, sol.delta
    tkk = np.real(np.diag(sol.T_t))
    one_plus = 1 + delta * model.dt
    aTa = _quad_real(model.A, sol.T, name="a^H T a")
    u = delta * model.dt + aTa / (lam * tkk * one_plus)
    fac = 1 / (lam * tkk**2 * one_plus**2)
    return u, tkk, one_plus, fac


def _cross_sum(sol, model, one_plus, fac):
    """``fac_k * sum_{i != k} dt_i |a_k^H T a_i|^2 / (1 + delta dt_i)^2``."""
    M = np.abs(model.A.conj().T @ sol.T @ model.A) ** 2
    np.fill_diagonal(M, 0.0)
    return fac * (M @ (model.dt / one_plus**2))


def theorem1_from_model(model: LiftedModel, lam, noise_ratio, tol=1e-12, max_iter=10_000, sol=None):
    """General-correlation deterministic SINR for a lifted model."""
    sol = solve_fixed_point(model, lam, tol, max_iter) if sol is None else sol
    aux = aux_quantities(sol, model, lam)
    K = model.K
    T = sol.T
    u, tkk, one_plus, fac = _signal_terms(sol, model)
    TT = T @ T
    aTTa = _quad_real(model.A, TT, name="a^H T^2 a")
    aTDTa = _quad_real(model.A, T @ (model.d[:, None] * T), name="a^H T D T a")
    cross = _cross_sum(sol, model, one_plus, fac)
    F, Dl, al, V = aux.F, aux.Delta, aux.alpha, aux.V
    th, tht = aux.vartheta, aux.vartheta_t
    c_spread = (1 - F) / Dl * al + th / Dl * V
    c_los = (1 - F) / Dl * V + lam**2 * tht * al / Dl
    s = u - (fac * aTTa + c_spread * (lam * model.dt + cross) + c_los * fac * aTDTa)
    trT = float(np.real(np.trace(T))) / K
    trTT = _trace_real(T, T, "Tr T^2") / K
    psi = trT - lam * (trTT + 2 * (1 - F) / Dl * al * V + th / Dl * V**2 + lam**2 * tht * al**2 / Dl)
    return _finish(u, s, psi, noise_ratio, sol, aux)


def theorem1_sinr(scenario: Scenario, tol=1e-12, max_iter=10_000):
    """Deterministic SINRs and rates for ``scenario``."""
    model = lift_scenario(scenario)
    return theorem1_from_model(model, scenario.lam, noise_to_power(scenario.sigma2, scenario.P_T), tol, max_iter)


def corollary1_from_model(model: LiftedModel, lam, noise_ratio, tol=1e-12, max_iter=10_000, sol=None):
    """Uncorrelated-antenna specialization (``D = I``)."""
    if not np.allclose(model.d, 1.0, rtol=0, atol=1e-12):
        raise ParameterError("the uncorrelated formula requires Theta = I")
    sol = solve_fixed_point(model, lam, tol, max_iter) if sol is None else sol
    K = model.K
    T = sol.T
    TT = T @ T
    W = _los_weight(sol, model)
    F = _trace_real(TT, W, "F") / K
    vartheta = _trace_real(T, T, "Tr T^2") / K
    vartheta_t = _trace_real(model.dt[:, None] * sol.T_t, model.dt[:, None] * sol.T_t, "vartheta_t") / K
    Dl = (1 - F) ** 2 - lam**2 * vartheta * vartheta_t
    if not Dl > 0:
        raise DegenerateRegimeError(f"Delta = {Dl:.3e} <= 0")
    u, tkk, one_plus, fac = _signal_terms(sol, model)
    aTTa = _quad_real(model.A, TT, name="a^H T^2 a")
    cross = _cross_sum(sol, model, one_plus, fac)
    s = u - ((1 - F) / Dl * fac * aTTa + vartheta / Dl * (lam * model.dt + cross))
    psi = float(np.real(np.trace(T))) / K - lam / Dl * vartheta
    return _finish(u, s, psi, noise_ratio, sol)


def corollary1_sinr(scenario: Scenario, tol=1e-12, max_iter=10_000):
    if not np.allclose(scenario.theta, np.eye(scenario.N), rtol=0, atol=1e-12):
        raise ParameterError("the uncorrelated formula requires Theta = I")
    model = lift_scenario(scenario)
    return corollary1_from_model(model, scenario.lam, noise_to_power(scenario.sigma2, scenario.P_T), tol, max_iter)


def single_los_delta(betas, lam, N):
    """Positive root of ``delta = (K lam / N + sum_i beta_i / (N (1 + delta beta_i)))^{-1}``."""
    betas = np.asarray(betas, dtype=float)
    K = betas.size

    def f(x):
        return x * (K * lam / N + np.sum(betas / (1 + x * betas)) / N) - 1

    hi = N / (K * lam)
    if not (f(0.0) < 0 <= f(hi)):
        raise NumericalError("no positive root bracketed")
    return brentq(f, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def corollary2_sinr(betas, k, lam, N, sigma2, P_T, inner="1/N"):
    """Deterministic SINR of user ``k`` when it alone has a LOS path.

    ``inner`` selects the normalization of the sum in the denominator of the
    prefactor: ``"1/N"`` (matches the general result) or ``"K/N"``.
    """
    betas = np.asarray(betas, dtype=float)
    K = betas.size
    delta = single_los_delta(betas, lam, N)
    q = np.sum((delta * betas) ** 2 / (1 + delta * betas) ** 2)
    q *= {"1/N": 1 / N, "K/N": K / N}[inner]
    prefactor = 1 / (1 - lam * (K / N) * delta / (1 - q))
    bk = betas[k]
    ratio = noise_to_power(sigma2, P_T)
    return prefactor * (delta * bk) ** 2 / (delta * bk + delta * (1 + delta * bk) ** 2 * ratio)


def rayleigh_sinr(d, betas, lam, noise_ratio):
    """Deterministic SINR without LOS, via derivatives of the scalar system.

    Uses ``s = u + lam du/dlam`` and ``psi = d(lam Tr T / K)/dlam``, obtained
    by implicit differentiation of the two scalar equations; none of the
    auxiliary traces are involved.
    """
    d = np.asarray(d, dtype=float)
    dt = np.asarray(betas, dtype=float)
    K = dt.size

    def dt_of(delta):
        return np.sum(dt / (lam * (1 + delta * dt))) / K

    def h(delta):
        return delta - np.sum(d / (lam * (1 + dt_of(delta) * d))) / K

    hi = d.sum() / (lam * K)
    delta = brentq(h, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    delta_t = dt_of(delta)
    f_dt = -np.sum(d**2 / (lam * (1 + delta_t * d) ** 2)) / K
    f_lam = -delta / lam
    g_d = -np.sum(dt**2 / (lam * (1 + delta * dt) ** 2)) / K
    g_lam = -delta_t / lam
    ddelta = (f_dt * g_lam + f_lam) / (1 - f_dt * g_d)
    ddelta_t = g_d * ddelta + g_lam
    u = delta * dt
    s = dt * (delta + lam * ddelta)
    tau = np.sum(1 / (lam * (1 + delta_t * d))) / K
    dtau = -tau / lam - np.sum(d * ddelta_t / (lam * (1 + delta_t * d) ** 2)) / K
    psi = tau + lam * dtau
    return _finish(u, s, psi, noise_ratio)


def mc_resolvent_trace(scenario: Scenario, trials, seed=0):
    """Monte Carlo mean and standard error of ``Tr (Sigma Sigma^H + lam I)^{-1} / K``.

    ``Sigma Sigma^H = U H H^H U^H / K``, so the trace is computed from the
    eigenvalues of ``H^H H``.
    """
    from .channel import sample_channel

    if trials < 1:
        raise ParameterError("trials must be at least 1")
    streams = seed if isinstance(seed, RandomStreams) else RandomStreams(seed)
    N, K, lam = scenario.N, scenario.K, scenario.lam
    vals = np.empty(trials)
    for t in range(trials):
        H = sample_channel(scenario, streams.trial(t, K)).H
        mu = np.linalg.eigvalsh(H.conj().T @ H) / K
        vals[t] = ((N - K) / lam + np.sum(1 / (mu + lam))) / K
    stderr = vals.std(ddof=1) / np.sqrt(trials) if trials > 1 else 0.0
    return float(vals.mean()), float(stderr)


def de_resolvent_trace(scenario: Scenario, tol=1e-12):
    sol = solve_fixed_point(lift_scenario(scenario), scenario.lam, tol)
    return float(np.real(np.trace(sol.T))) / scenario.K
