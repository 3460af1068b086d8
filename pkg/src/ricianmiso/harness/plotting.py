"""Rate-per-UE vs N figures (MC markers with error bars, DE lines)."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_rate_vs_n(curves, path, title=None):
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for i, ((K, rho, nu), arr) in enumerate(curves.items()):
        color = f"C{i % 10}"
        label = f"K={K}, rho={rho:g}, nu={nu:g}"
        ax.plot(arr[:, 0], arr[:, 3], "-", color=color, label=f"DE  {label}")
        ax.errorbar(arr[:, 0], arr[:, 1], yerr=arr[:, 2], fmt="o", ms=4, mfc="none",
                    color=color, capsize=2, label=f"MC  {label}")
    # sweeps double N, so a base-2 axis spaces the points evenly
    ns = sorted({int(n) for arr in curves.values() for n in arr[:, 0]})
    ax.set_xscale("log", base=2)
    ax.set_xticks(ns, [str(n) for n in ns])
    ax.minorticks_off()
    ax.set_xlabel("N (BS antennas)")
    ax.set_ylabel("average rate per UE [bit/s/Hz]")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7, ncol=1)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
