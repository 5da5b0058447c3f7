"""Deterministic real/synthetic minibatch mixing.

Slots follow a fixed template of length ``sum(parts)`` so every run of that
many consecutive slots holds each dataset exactly ``parts`` times. Sample
indices walk a per-epoch seeded permutation of each dataset; grayscale is a
seeded coin flip per slot.
"""
import csv
from dataclasses import dataclass, field
import io

import numpy as np

from .errors import ConfigError

GRAY_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class MixSpec:
    parts: tuple  # ((name, parts), ...)
    batch_size: int = 16
    grayscale_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        parts = tuple((str(name), int(k)) for name, k in self.parts)
        if not parts:
            raise ConfigError("no datasets in the mix")
        if any(k < 1 for _, k in parts):
            raise ConfigError("parts must be positive integers")
        if len({name for name, _ in parts}) != len(parts):
            raise ConfigError("dataset names must be unique")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not 0.0 <= self.grayscale_fraction <= 1.0:
            raise ConfigError("grayscale_fraction must be in [0, 1]")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "parts", parts)

    @property
    def period(self):
        return sum(k for _, k in self.parts)


@dataclass(frozen=True)
class Slot:
    batch: int
    slot: int
    dataset: str
    index: int
    grayscale: bool


@dataclass(frozen=True)
class MixPlan:
    spec: MixSpec
    slots: tuple = field(repr=False)

    @property
    def batches(self):
        b = self.spec.batch_size
        return [self.slots[i:i + b] for i in range(0, len(self.slots), b)]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["batch", "slot", "dataset", "index", "grayscale"])
        for s in self.slots:
            w.writerow([s.batch, s.slot, s.dataset, s.index, int(s.grayscale)])
        return buf.getvalue()


def interleave_template(parts):
    """Largest-remainder ordering of one period.

    Step k goes to the dataset with the largest shortfall
    ``parts_i * (k + 1) / P - assigned_i``; ties go to the earlier dataset.
    Integer arithmetic (scaled by P) keeps it exact.
    """
    P = sum(parts)
    assigned = [0] * len(parts)
    order = []
    for k in range(P):
        deficits = [w * (k + 1) - a * P for w, a in zip(parts, assigned)]
        best = max(range(len(parts)), key=lambda i: (deficits[i], -i))
        assigned[best] += 1
        order.append(best)
    return order


class _IndexStream:
    """Cycles through a dataset, reshuffling at the start of every epoch."""

    def __init__(self, size, seed, dataset_pos):
        self.size = size
        self.seed = seed
        self.dataset_pos = dataset_pos
        self.epoch = -1
        self.cursor = size
        self.perm = None

    def next(self):
        if self.cursor >= self.size:
            self.epoch += 1
            ss = np.random.SeedSequence(self.seed, spawn_key=(1, self.dataset_pos, self.epoch))
            self.perm = np.random.default_rng(ss).permutation(self.size)
            self.cursor = 0
        idx = int(self.perm[self.cursor])
        self.cursor += 1
        return idx


def build_mix_plan(spec, n_batches, sizes):
    """Plan ``n_batches`` batches. ``sizes`` maps dataset name to sample count."""
    unknown = [name for name, _ in spec.parts if name not in sizes]
    if unknown:
        raise ConfigError(f"unknown dataset(s): {', '.join(unknown)}")
    if any(int(sizes[name]) < 1 for name, _ in spec.parts):
        raise ConfigError("every dataset needs at least one sample")
    if n_batches < 0:
        raise ConfigError("n_batches must be >= 0")

    names = [name for name, _ in spec.parts]
    template = interleave_template([k for _, k in spec.parts])
    streams = [_IndexStream(int(sizes[name]), int(spec.seed), i) for i, name in enumerate(names)]
    total = n_batches * spec.batch_size
    gray_rng = np.random.default_rng(np.random.SeedSequence(int(spec.seed), spawn_key=(0,)))
    gray = gray_rng.random(total) < spec.grayscale_fraction

    slots = []
    for k in range(total):
        d = template[k % len(template)]
        b, s = divmod(k, spec.batch_size)
        slots.append(Slot(b, s, names[d], streams[d].next(), bool(gray[k])))
    return MixPlan(spec, tuple(slots))


def to_grayscale(rgb):
    """Luma ``round(0.299 R + 0.587 G + 0.114 B)`` copied into all channels.

    Takes one ``(r, g, b)`` triple or an ``(..., 3)`` array.
    """
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise ValueError("expected RGB triples")
    y = np.floor(arr @ np.array(GRAY_WEIGHTS) + 0.5)
    y = np.clip(y, 0, 255)
    out = np.repeat(y[..., None], 3, axis=-1).astype(np.uint8)
    return tuple(int(c) for c in out) if out.ndim == 1 else out


def mix_spec_from_config(cfg):
    """``{"datasets": [{"name", "parts", "size"}], "batch_size", ...}`` -> (spec, sizes)."""
    try:
        datasets = cfg["datasets"]
        parts = tuple((d["name"], d["parts"]) for d in datasets)
        sizes = {d["name"]: d["size"] for d in datasets}
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad mix config: {exc}") from exc
    spec = MixSpec(parts, int(cfg.get("batch_size", 16)),
                   float(cfg.get("grayscale_fraction", 0.0)), int(cfg.get("seed", 0)))
    return spec, sizes
