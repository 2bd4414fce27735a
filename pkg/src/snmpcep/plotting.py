"""Figures for scenario reports: counter deltas and gauge levels over time."""

from __future__ import annotations

from collections import defaultdict
from contextlib import contextmanager

import matplotlib
from matplotlib.ticker import FuncFormatter
from matplotlib.transforms import blended_transform_factory
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .events import EventKind, base_measure, lookup_measure, wrapped_delta

STYLE = {
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "savefig.dpi": 120,
    "svg.hashsalt": "snmpcep",  # stable ids in svg output
}


@contextmanager
def report_style():
    with matplotlib.rc_context(STYLE):
        yield


def _series(events):
    """Counter deltas and gauge levels per measure, as (ts list, value list)."""
    deltas = defaultdict(lambda: ([], []))
    levels = defaultdict(lambda: ([], []))
    last = {}
    signals = []
    for ev in events:
        if ev.kind is EventKind.SIGNAL:
            signals.append(ev)
            continue
        if lookup_measure(ev.measure).is_counter:
            prev = last.get(ev.measure)
            last[ev.measure] = ev.value
            if prev is not None:
                xs, ys = deltas[ev.measure]
                xs.append(ev.ts_ms / 1000)
                ys.append(wrapped_delta(prev, ev.value))
        else:
            xs, ys = levels[ev.measure]
            xs.append(ev.ts_ms / 1000)
            ys.append(ev.value)
    return deltas, levels, signals


def render_scenario(events, alerts, path, injection_start_ms=None, title=None) -> None:
    """Write a three-panel figure to ``path``; the format follows the suffix.

    Alerts are drawn as markers on the top panel, one row per pattern.
    """
    deltas, levels, signals = _series(events)
    with report_style():
        fig = Figure(figsize=(8, 7))
        FigureCanvasAgg(fig)
        ax_c, ax_g, ax_s = fig.subplots(3, 1, sharex=True)
        for m in sorted(deltas):
            xs, ys = deltas[m]
            ax_c.step(xs, ys, where="post", label=m, lw=1)
        ax_c.set_yscale("symlog", linthresh=10)
        top = max((max(ys) for _, ys in deltas.values() if ys), default=1)
        ax_c.set_ylim(0, top * 3 + 10)
        ax_c.yaxis.set_major_formatter(FuncFormatter(lambda v, _: f"{v:g}"))
        ax_c.set_ylabel("counter delta / sample")
        for m in sorted(levels):
            if base_measure(m) == "hrStorageUsed":
                continue
            xs, ys = levels[m]
            ax_g.plot(xs, ys, label=m, lw=1)
        ax_g.axhline(90, color="0.5", ls=":", lw=0.8)
        ax_g.axhline(40, color="0.5", ls=":", lw=0.8)
        ax_g.set_ylabel("level")
        for m in sorted(levels):
            if base_measure(m) == "hrStorageUsed":
                xs, ys = levels[m]
                ax_s.plot(xs, ys, label=m, lw=1)
        ax_s.axhline(62000, color="0.5", ls=":", lw=0.8)
        ax_s.set_ylabel("storage units")
        ax_s.set_xlabel("time [s]")

        # alert markers sit in a strip along the top edge, one row per pattern
        strip = blended_transform_factory(ax_c.transData, ax_c.transAxes)
        names = sorted({a.pattern_name for a in alerts})
        for row, name in enumerate(names):
            xs = [a.fired_at_ms / 1000 for a in alerts if a.pattern_name == name]
            ax_c.plot(xs, [0.95 - 0.06 * row] * len(xs), "v", ms=6, transform=strip,
                      label=f"alert: {name}")
        for n, ev in enumerate(signals):
            for ax in (ax_c, ax_g, ax_s):
                ax.axvline(ev.ts_ms / 1000, color="tab:red", lw=0.6, alpha=0.6,
                           label=ev.measure if ax is ax_c and n == 0 else None)
        if injection_start_ms is not None:
            for ax in (ax_c, ax_g, ax_s):
                ax.axvline(injection_start_ms / 1000, color="k", ls="--", lw=0.8)
        for ax in (ax_c, ax_g, ax_s):
            if ax.get_legend_handles_labels()[0]:
                ax.legend(loc="upper left", ncol=2)
        if title:
            ax_c.set_title(title)
        fig.tight_layout()
        # no timestamps or version strings, so identical inputs give identical files
        fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
