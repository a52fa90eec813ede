"""Figure rendering for the experiment drivers (Agg backend, files only)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_COLORS = {1.5e6: "tab:blue", 2.5e6: "tab:orange", 4e6: "tab:green", 6e6: "tab:red"}


def _color(v):
    return _COLORS.get(v, "tab:gray")


def _label_rate(v):
    return f"V={v / 1e6:g} Mbit/s"


def plot_fig2(rows, path):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    rates = sorted({r[0] for r in rows})
    for v in rates:
        for mode, style in (("tc1", "-"), ("tcT", "--")):
            series = sorted(
                [(r[1], r[3]) for r in rows if r[0] == v and r[2] == mode]
            )
            if series:
                ax.plot(
                    [s[0] for s in series],
                    [s[1] for s in series],
                    style,
                    color=_color(v),
                    label=f"{_label_rate(v)} ({'every slot' if mode == 'tc1' else 'once per horizon'})",
                )
    ax.set_xlabel("prediction horizon (slots)")
    ax.set_ylabel("spectral efficiency (bit/s/Hz/cell)")
    ax.grid(alpha=0.4)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


_POLICY_STYLE = {"arrm": "-", "arrm_sigma": ":", "baseline": "--"}


def plot_fig3(rows, path):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for policy in ("arrm", "arrm_sigma", "baseline"):
        for v in sorted({r[2] for r in rows}):
            series = sorted(
                [(r[3], r[5], r[6]) for r in rows if r[0] == policy and r[2] == v]
            )
            if not series:
                continue
            ks = [s[0] for s in series]
            stalls = [100 * s[1] for s in series]
            hws = [100 * s[2] for s in series]
            ax.errorbar(
                ks, stalls, yerr=hws, fmt=_POLICY_STYLE[policy],
                color=_color(v), capsize=2,
                label=f"{_label_rate(v)} {policy}",
            )
    ax.set_xlabel("number of users")
    ax.set_ylabel("stalling duration (% of lifetime)")
    ax.grid(alpha=0.4)
    ax.legend(fontsize=7, ncol=3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_fig4(rows, path):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for policy in ("arrm", "arrm_sigma"):
        for v in sorted({r[2] for r in rows}):
            series = [
                (100 * r[5], r[7]) for r in rows if r[0] == policy and r[2] == v
            ]
            if series:
                ax.plot(
                    [s[0] for s in series],
                    [s[1] for s in series],
                    _POLICY_STYLE[policy],
                    marker=".",
                    color=_color(v),
                    label=f"{_label_rate(v)} {policy}",
                )
    for r in rows:
        if r[0] == "baseline" and r[5] is not None and r[7] is not None:
            ax.plot(100 * r[5], r[7], "s", color=_color(r[2]), markersize=7,
                    label=f"{_label_rate(r[2])} baseline")
    ax.set_xlabel("stalling duration (% of lifetime)")
    ax.set_ylabel("spectral efficiency (bit/s/Hz/cell)")
    ax.grid(alpha=0.4)
    ax.legend(fontsize=7, ncol=3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_fig5(rows, path):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    rates = sorted({r[0] for r in rows})
    width = 0.25
    series = {
        "arrm": ("perfect prediction", 0.0),
        "arrm_sigma": ("noisy prediction", 1.0),
    }
    baseline_drawn = set()
    for i, (policy, (label, offset)) in enumerate(series.items()):
        xs, ys = [], []
        for j, v in enumerate(rates):
            match = [r for r in rows if r[0] == v and r[1] == policy]
            if match and match[0][4] is not None:
                xs.append(j + (offset - 1) * width)
                ys.append(match[0][4])
        ax.bar(xs, ys, width=width, label=label)
    xs, ys = [], []
    for j, v in enumerate(rates):
        match = [r for r in rows if r[0] == v and r[5] is not None]
        if match and v not in baseline_drawn:
            xs.append(j + width)
            ys.append(match[0][5])
            baseline_drawn.add(v)
    ax.bar(xs, ys, width=width, color="tab:gray", label="baseline")
    for j, v in enumerate(rates):
        match = [r for r in rows if r[0] == v and r[1] == "arrm"]
        if match and match[0][7] is not None:
            ax.text(j - width, match[0][4], f"{match[0][7]:.2f}x",
                    ha="center", va="bottom", fontsize=8)
    ax.set_xticks(range(len(rates)))
    ax.set_xticklabels([_label_rate(v) for v in rates])
    ax.set_ylabel("SE at the stalling target (bit/s/Hz/cell)")
    ax.grid(alpha=0.4, axis="y")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
