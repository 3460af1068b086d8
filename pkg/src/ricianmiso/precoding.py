"""Finite-dimensional RZF precoding, SINR and Monte Carlo ergodic rates."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channel import Scenario, sample_channel
from .errors import DegenerateChannelError, NumericalError, ParameterError
from .streams import RandomStreams

INTERFERENCE_CLAMP = 1e-12


def noise_to_power(sigma2, P_T):
    """``sigma2 / P_T`` rounded once from the exact rational quotient.

    Everything downstream depends on the powers only through this ratio, so
    scaling both by the same exactly-representable factor gives bit-identical
    results.
    """
    return float(Fraction(sigma2) / Fraction(P_T))


@dataclass
class PrecodingResult:
    """``G = xi * F`` with ``F = (H H^H + lam K I)^{-1} H`` and ``Tr G^H G = P_T``."""

    F: np.ndarray
    xi: float
    lam: float
    P_T: float
    power_trace: float  # Tr F^H F

    @property
    def G(self):
        return self.xi * self.F


def rzf_precoder(H, lam, P_T):
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2:
        raise ParameterError("H must be an N x K matrix")
    if not lam > 0 or not P_T > 0:
        raise ParameterError("lam and P_T must be positive")
    K = H.shape[1]
    Hh = H.conj().T
    gram = Hh @ H
    gram[np.diag_indices(K)] += lam * K
    # (H H^H + lam K I)^{-1} H == H (H^H H + lam K I)^{-1}; solve the K x K side
    F = np.linalg.solve(gram, Hh).conj().T
    power_trace = float(np.real(np.vdot(F, F)))
    if not power_trace > 0:
        raise DegenerateChannelError("zero channel: power normalization undefined")
    xi = float(np.sqrt(P_T / power_trace))
    return PrecodingResult(F, xi, lam, P_T, power_trace)


def exact_sinr(H, result: PrecodingResult, sigma2):
    """Per-user SINR of the RZF downlink with single-user detection."""
    H = np.asarray(H)
    if H.shape != result.F.shape:
        raise ParameterError(f"channel shape {H.shape} does not match precoder {result.F.shape}")
    C = H.conj().T @ result.F  # C[k, i] = h_k^H f_i
    power = np.abs(C) ** 2
    signal = np.diag(power).copy()
    total = power.sum(axis=1)
    interference = total - signal
    bad = interference < -INTERFERENCE_CLAMP * total
    if np.any(bad):
        raise NumericalError("negative interference beyond rounding tolerance")
    interference = np.maximum(interference, 0.0)
    # xi^2 |h^H f|^2 / (xi^2 I + sigma2) with xi^2 = P_T / Tr F^H F
    noise = noise_to_power(sigma2, result.P_T) * result.power_trace
    return signal / (interference + noise)


@dataclass
class ExactPerformance:
    sinr: np.ndarray
    rates: np.ndarray

    @property
    def sum_rate(self):
        return float(self.rates.sum())


def performance(H, scenario: Scenario):
    res = rzf_precoder(H, scenario.lam, scenario.P_T)
    sinr = exact_sinr(H, res, scenario.sigma2)
    return ExactPerformance(sinr, np.log2(1 + sinr))


@dataclass
class ErgodicResult:
    """Monte Carlo averages over ``trials`` channel draws.

    ``sinr_samples`` keeps every per-trial SINR (trials x K) in trial order.
    """

    sinr_samples: np.ndarray

    @property
    def trials(self):
        return self.sinr_samples.shape[0]

    @property
    def rate_samples(self):
        return np.log2(1 + self.sinr_samples)

    @property
    def mean_sinr(self):
        return self.sinr_samples.mean(axis=0)

    @property
    def mean_rates(self):
        return self.rate_samples.mean(axis=0)

    @property
    def rate_stderr(self):
        return _stderr(self.rate_samples)

    @property
    def mean_sum_rate(self):
        return float(self.rate_samples.sum(axis=1).mean())

    @property
    def sum_rate_stderr(self):
        return float(_stderr(self.rate_samples.sum(axis=1)))


def _stderr(x):
    n = x.shape[0]
    if n < 2:
        return np.zeros(x.shape[1:]) if x.ndim > 1 else 0.0
    return x.std(axis=0, ddof=1) / np.sqrt(n)


def _trial_block(scenario, seed, start, stop):
    streams = RandomStreams(seed)
    out = np.empty((stop - start, scenario.K))
    for row, t in enumerate(range(start, stop)):
        H = sample_channel(scenario, streams.trial(t, scenario.K)).H
        out[row] = performance(H, scenario).sinr
    return out


def ergodic_performance(scenario: Scenario, trials=1000, seed=0, workers=1):
    """Average rates over ``trials`` i.i.d. channel draws.

    Trial ``t`` always uses the streams derived from ``(seed, t)``, and the
    per-trial results are reduced in trial order, so the output does not
    depend on ``workers``.
    """
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    if isinstance(seed, RandomStreams):
        seed = seed.seed
    if workers <= 1 or trials < 2:
        return ErgodicResult(_trial_block(scenario, seed, 0, trials))
    bounds = np.linspace(0, trials, min(workers, trials) + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_trial_block, scenario, seed, a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        blocks = [f.result() for f in futures]
    return ErgodicResult(np.vstack(blocks))
