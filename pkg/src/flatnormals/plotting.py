"""Matplotlib report figures written next to the metrics files."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluation import THRESHOLDS, accuracy_curve  # noqa: E402
from .io import encode_error_rgb8, encode_normals_rgb8  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
    "svg.hashsalt": "flatnormals",
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_error_report(errors, path, title=None, labels=None):
    """Error histogram plus cumulative accuracy curve.

    ``errors`` is one AngleErrors or a list of them; ``labels`` names each
    curve (e.g. sigma 10 / sigma 30 / semantic).
    """
    if not isinstance(errors, (list, tuple)):
        errors = [errors]
    labels = labels or [None] * len(errors)
    with plt.rc_context(STYLE):
        fig, (ax_h, ax_c) = plt.subplots(1, 2, figsize=(8, 3.2))
        bins = np.arange(0, 91, 1.0)
        for e, lab in zip(errors, labels):
            vals = np.clip(e.degrees[e.valid], 0, 90)
            ax_h.hist(vals, bins=bins, histtype="step", density=True, label=lab)
            t, pct = accuracy_curve(e.degrees, e.valid)
            ax_c.plot(t, pct, label=lab)
        for thr in THRESHOLDS:
            ax_c.axvline(thr, color="0.6", ls="--", lw=0.8)
        ax_h.set_xlabel("angle error (deg)")
        ax_h.set_ylabel("density")
        ax_c.set_xlabel("threshold (deg)")
        ax_c.set_ylabel("% pixels <= threshold")
        ax_c.set_ylim(0, 100)
        ax_c.set_xlim(0, 90)
        if any(labels):
            ax_c.legend(loc="lower right")
        if title:
            fig.suptitle(title)
        _save(fig, path)


def plot_normal_panel(pred, gt, path, errors=None):
    """Side-by-side prediction / ground truth / error image, as RGB encodings."""
    panels = [("prediction", encode_normals_rgb8(pred)), ("ground truth", encode_normals_rgb8(gt))]
    if errors is not None:
        panels.append(("error", encode_error_rgb8(errors.degrees, errors.valid)))
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(panels), figsize=(3.2 * len(panels), 2.6))
        for ax, (name, img) in zip(np.atleast_1d(axes), panels):
            ax.imshow(img, interpolation="nearest")
            ax.set_title(name)
            ax.axis("off")
        _save(fig, path)


def plot_mix_plan(plan, path, max_batches=8):
    """Dataset composition of the first few batches, one bar per batch."""
    names = [name for name, _ in plan.spec.parts]
    batches = plan.batches[:max_batches]
    counts = np.array([[sum(s.dataset == n for s in b) for n in names] for b in batches])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3))
        bottom = np.zeros(len(batches))
        for k, name in enumerate(names):
            ax.bar(np.arange(len(batches)), counts[:, k], bottom=bottom, label=name)
            bottom += counts[:, k]
        ax.set_xlabel("batch")
        ax.set_ylabel("slots")
        ax.legend(loc="upper right")
        _save(fig, path)
