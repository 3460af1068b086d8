"""Sweep execution: one Monte Carlo and one deterministic-equivalent
evaluation per (N, K, rho, nu) cell."""
import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from ..channel import Scenario, pathloss, sample_positions
from ..deterministic import lift_scenario, theorem1_from_model
from ..errors import ParameterError, RicianMisoError
from ..precoding import ergodic_performance, noise_to_power
from ..streams import RandomStreams

log = logging.getLogger(__name__)

HEADER = ("scenario_id", "N", "K", "rho", "nu", "seed", "trials", "method",
          "user_k", "sinr", "rate_bits", "sum_rate_bits", "stderr")
AGGREGATE = "all"


@dataclass
class ResultRow:
    """One line of a result file.

    Per-user rows carry user ``k``'s mean SINR and rate. The aggregate row
    (``user_k == "all"``) carries the user-averaged SINR, the per-UE average
    rate ``sum_rate / K`` and its standard error. ``stderr`` is 0 for ``de``.
    """

    scenario_id: str
    N: int
    K: int
    rho: float
    nu: float
    seed: int
    trials: int
    method: str
    user_k: str
    sinr: float
    rate_bits: float
    sum_rate_bits: float
    stderr: float

    @property
    def is_aggregate(self):
        return self.user_k == AGGREGATE

    @property
    def is_error(self):
        return self.method.startswith("error")


def scenario_id(N, K, rho, nu):
    return f"N{N}-K{K}-rho{rho:g}-nu{nu:g}"


def estimate_regularizer(params, mode, samples, sigma2, P_T, rng):
    """``lam = sigma2 E[1/beta] / P_T`` over the user-position distribution.

    Returns ``(lam, stderr)``. The fixed ring has a single distance, so the
    expectation is exact there and the standard error is zero.
    """
    ratio = noise_to_power(sigma2, P_T)
    if mode == "fixed-ring":
        return ratio / pathloss(2 * params.radius / 3, params), 0.0
    if samples < 1:
        raise ParameterError("samples must be at least 1")
    inv = 1 / np.array([u.beta for u in sample_positions(samples, params, rng, mode)])
    se = inv.std(ddof=1) / np.sqrt(samples) if samples > 1 else 0.0
    return ratio * float(inv.mean()), ratio * float(se)


def _regularizer(config, K):
    if config.lambda_mode == "explicit":
        return float(config.lambda_value)
    lam, _ = estimate_regularizer(config.pathloss, config.geometry, config.lambda_samples,
                                  config.sigma2, config.P_T, RandomStreams(config.seed).regularizer(K))
    return lam


def _drop(config, K, drop):
    rng = RandomStreams(config.seed).geometry(drop, K)
    return sample_positions(K, config.pathloss, rng, config.geometry)


def _rows_for(config, cell, sinr_mc, rate_mc, se_mc, sum_se_mc, sinr_de, rate_de):
    N, K, rho, nu = cell
    sid = scenario_id(*cell)
    common = (sid, N, K, rho, nu, config.seed, config.trials)
    rows = []
    for method, sinr, rate, se, sum_se in (
        ("mc", sinr_mc, rate_mc, se_mc, sum_se_mc),
        ("de", sinr_de, rate_de, np.zeros(K), 0.0),
    ):
        total = float(np.sum(rate))
        for k in range(K):
            rows.append(ResultRow(*common, method, str(k), float(sinr[k]), float(rate[k]), total, float(se[k])))
        rows.append(ResultRow(*common, method, AGGREGATE, float(np.mean(sinr)), total / K, total,
                              float(sum_se) / K))
    return rows


def run_cell(config, cell):
    """Evaluate one sweep cell; numerical failures become a diagnostic row."""
    N, K, rho, nu = cell
    try:
        lam = _regularizer(config, K)
        parts = {k: [] for k in ("sinr_mc", "rate_mc", "se_mc", "sum_se_mc", "sinr_de", "rate_de")}
        for drop in range(config.drops):
            users = _drop(config, K, drop)
            sc = Scenario(N, users, rho, nu, config.P_T, config.sigma2, lam)
            seed = config.seed if drop == 0 else _drop_seed(config.seed, drop)
            mc = ergodic_performance(sc, config.trials, seed)
            de = theorem1_from_model(lift_scenario(sc), lam, noise_to_power(sc.sigma2, sc.P_T),
                                     config.fp_tol, config.fp_max_iter)
            parts["sinr_mc"].append(mc.mean_sinr)
            parts["rate_mc"].append(mc.mean_rates)
            parts["se_mc"].append(mc.rate_stderr)
            parts["sum_se_mc"].append(mc.sum_rate_stderr)
            parts["sinr_de"].append(de.sinr)
            parts["rate_de"].append(de.rates)
        n = config.drops
        return _rows_for(
            config, cell,
            np.mean(parts["sinr_mc"], axis=0), np.mean(parts["rate_mc"], axis=0),
            np.sqrt(np.sum(np.square(parts["se_mc"]), axis=0)) / n,
            float(np.sqrt(np.sum(np.square(parts["sum_se_mc"]))) / n),
            np.mean(parts["sinr_de"], axis=0), np.mean(parts["rate_de"], axis=0),
        )
    except RicianMisoError as exc:
        log.error("cell %s failed: %s", scenario_id(*cell), exc)
        nan = float("nan")
        return [ResultRow(scenario_id(*cell), N, K, rho, nu, config.seed, config.trials,
                          f"error:{type(exc).__name__}", AGGREGATE, nan, nan, nan, nan)]


def _drop_seed(seed, drop):
    # independent channel streams per position drop
    return int(np.random.SeedSequence(seed, spawn_key=(3, drop)).generate_state(2, np.uint64)[0])


def run_experiment(config, workers=1):
    """Run every sweep cell; output is independent of ``workers``."""
    cells = config.cells()
    if workers <= 1 or len(cells) == 1:
        chunks = [run_cell(config, c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run_cell, [config] * len(cells), cells))
    return [row for chunk in chunks for row in chunk]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def check_row(row):
    """Re-check scenario invariants before a row is written."""
    if not (isinstance(row.N, int) and isinstance(row.K, int) and row.N >= row.K >= 1):
        raise ParameterError(f"row {row.scenario_id}: need N >= K >= 1")
    if not (row.rho >= 0 and 0 <= row.nu < 1 and row.trials >= 1):
        raise ParameterError(f"row {row.scenario_id}: invalid rho/nu/trials")
    if row.method == "de" and row.stderr != 0:
        raise ParameterError(f"row {row.scenario_id}: de rows carry no standard error")


def write_rows(rows, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for row in rows:
            check_row(row)
            w.writerow([_fmt(v) for v in astuple(row)])
    return path


def read_rows(path):
    types = {f.name: f.type for f in fields(ResultRow)}
    conv = {int: int, float: float, str: str, "int": int, "float": float, "str": str}
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != HEADER:
            raise ParameterError(f"{path}: unexpected header {header}")
        for rec in reader:
            rows.append(ResultRow(*(conv[types[n]](v) for n, v in zip(HEADER, rec))))
    return rows
