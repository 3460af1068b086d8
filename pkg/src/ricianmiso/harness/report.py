"""Monte Carlo vs deterministic-equivalent gap tables and curve files."""
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ReportError

DEFAULT_THRESHOLDS = {32: 10.0, 64: 5.0, 128: 3.0}


@dataclass
class CellGap:
    scenario_id: str
    N: int
    K: int
    rho: float
    nu: float
    per_ue_gap: float  # max over users of |mc - de| / de on the mean rate
    sum_gap: float
    threshold_pct: float
    passed: bool


@dataclass
class CompareReport:
    cells: list

    @property
    def passed(self):
        return all(c.passed for c in self.cells)

    def format(self):
        lines = [f"{'scenario':<28} {'per-UE gap %':>12} {'sum gap %':>10} {'limit %':>8}  status"]
        for c in self.cells:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"{c.scenario_id:<28} {100 * c.per_ue_gap:12.3f} {100 * c.sum_gap:10.3f} "
                         f"{c.threshold_pct:8.2f}  {status}")
        return "\n".join(lines)


def threshold_for(N, thresholds):
    """Limit of the largest configured N not above ``N`` (smallest key below range)."""
    keys = sorted(thresholds)
    eligible = [k for k in keys if k <= N]
    return float(thresholds[eligible[-1] if eligible else keys[0]])


def _relgap(mc, de):
    mc, de = np.asarray(mc, dtype=float), np.asarray(de, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        gap = np.where(de != 0, np.abs(mc - de) / np.abs(de), np.where(mc == de, 0.0, np.inf))
    return gap


def _by_cell(rows):
    cells = defaultdict(lambda: defaultdict(list))
    for r in rows:
        cells[r.scenario_id][r.method].append(r)
    return cells


def compare_report(rows, thresholds=None, threshold_pct=None):
    """Per-cell relative gaps between the ``mc`` and ``de`` rows.

    ``threshold_pct`` overrides the per-N table with one uniform limit.
    """
    thresholds = DEFAULT_THRESHOLDS if thresholds is None else thresholds
    out = []
    for sid, methods in _by_cell(rows).items():
        errors = [m for m in methods if m.startswith("error")]
        if errors:
            raise ReportError(f"{sid}: cell failed ({errors[0]})")
        if "mc" not in methods or "de" not in methods:
            raise ReportError(f"{sid}: need both mc and de rows")
        mc = {r.user_k: r for r in methods["mc"]}
        de = {r.user_k: r for r in methods["de"]}
        users = sorted((k for k in mc if k != "all"), key=int)
        if sorted(de) != sorted(mc) or "all" not in mc:
            raise ReportError(f"{sid}: mc and de rows cover different users")
        per_ue = float(np.max(_relgap([mc[k].rate_bits for k in users], [de[k].rate_bits for k in users])))
        sum_gap = float(_relgap(mc["all"].sum_rate_bits, de["all"].sum_rate_bits))
        ref = mc["all"]
        limit = threshold_pct if threshold_pct is not None else threshold_for(ref.N, thresholds)
        passed = per_ue < limit / 100 and sum_gap < limit / 100
        out.append(CellGap(sid, ref.N, ref.K, ref.rho, ref.nu, per_ue, sum_gap, float(limit), passed))
    return CompareReport(out)


def curves(rows):
    """``{(K, rho, nu): array[[N, mc_rate, mc_stderr, de_rate], ...]}`` sorted by N."""
    acc = defaultdict(dict)
    for r in rows:
        if not r.is_aggregate or r.method not in ("mc", "de"):
            continue
        point = acc[(r.K, r.rho, r.nu)].setdefault(r.N, {})
        point[r.method] = r
    out = {}
    for key in sorted(acc):
        pts = []
        for N in sorted(acc[key]):
            p = acc[key][N]
            mc, de = p.get("mc"), p.get("de")
            pts.append([N,
                        mc.rate_bits if mc else np.nan,
                        mc.stderr if mc else np.nan,
                        de.rate_bits if de else np.nan])
        out[key] = np.array(pts, dtype=float)
    return out


def curve_filename(K, rho, nu):
    return f"curve_K{K}_rho{rho:g}_nu{nu:g}.dat"


def emit_plotdata(rows, outdir, figure=True):
    """Write one whitespace-delimited file per (K, rho, nu) curve.

    An ``index.dat`` lists the curves (header only when there are none).
    With ``figure`` a PNG of all curves is rendered next to the data.
    Returns the list of curve files written.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    data = curves(rows)
    written = []
    index = ["# K rho nu file"]
    for (K, rho, nu), arr in data.items():
        name = curve_filename(K, rho, nu)
        lines = [f"# K={K} rho={rho:g} nu={nu:g}", "# N mc_rate mc_stderr de_rate"]
        lines += [f"{int(n)} {m!r} {s!r} {d!r}" for n, m, s, d in arr.tolist()]
        (outdir / name).write_text("\n".join(lines) + "\n")
        index.append(f"{K} {rho!r} {nu!r} {name}")
        written.append(outdir / name)
    (outdir / "index.dat").write_text("\n".join(index) + "\n")
    if figure and data:
        from .plotting import plot_rate_vs_n

        plot_rate_vs_n(data, outdir / "rate_vs_N.png")
    return written
