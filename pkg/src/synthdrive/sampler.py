"""Fixed-ratio real/synthetic batch composition.

Real images are shuffled once and consumed without replacement; the epoch
ends when fewer than ``real_per_batch`` remain. Synthetic images come from a
shuffled cycle that is reshuffled every time it wraps, so usage counts across
the synthetic pool never differ by more than one.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import ConfigError
from .rng import substream

REAL, SYNTHETIC = "real", "synthetic"


@dataclass(frozen=True)
class BgcConfig:
    real_per_batch: int = 5
    synth_per_batch: int = 3
    seed: int = 0

    def __post_init__(self):
        if int(self.real_per_batch) <= 0:
            raise ConfigError("real_per_batch must be > 0")
        if int(self.synth_per_batch) < 0:
            raise ConfigError("synth_per_batch must be >= 0")

    @property
    def batch_size(self) -> int:
        return self.real_per_batch + self.synth_per_batch


@dataclass(frozen=True)
class Batch:
    items: tuple  # ((ref, domain), ...) real items first

    def refs(self, domain: str) -> list:
        return [ref for ref, d in self.items if d == domain]

    def __len__(self):
        return len(self.items)


class SyntheticCycle:
    """Endless shuffled pass over a pool, reshuffled at each wrap."""

    def __init__(self, pool: Sequence, seed: int):
        self.pool = list(pool)
        self.rng = substream(seed, "synthetic")
        self.order = self.rng.permutation(len(self.pool))
        self.pos = 0
        self.wraps = 0
        self.draws = 0

    def take(self, n: int) -> list:
        out = []
        for _ in range(n):
            if self.pos == len(self.order):
                self.order = self.rng.permutation(len(self.pool))
                self.pos = 0
                self.wraps += 1
            out.append(self.pool[int(self.order[self.pos])])
            self.pos += 1
            self.draws += 1
        return out


@dataclass
class Epoch:
    batches: list
    real_order: list  # the shuffled real pool, including the dropped tail
    synthetic_draws: int = 0
    wraps: int = 0
    dropped_real: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.batches)

    def __len__(self):
        return len(self.batches)

    def __getitem__(self, i):
        return self.batches[i]


def make_epoch(real: Sequence, synthetic: Sequence, cfg: BgcConfig = BgcConfig()) -> Epoch:
    if not real:
        raise ConfigError("the real pool is empty")
    if cfg.synth_per_batch > 0 and not synthetic:
        raise ConfigError("synthetic pool is empty but synth_per_batch > 0")
    rpb, spb = int(cfg.real_per_batch), int(cfg.synth_per_batch)
    order = [real[int(i)] for i in substream(cfg.seed, "real").permutation(len(real))]
    n_batches = len(order) // rpb
    cycle = SyntheticCycle(synthetic, cfg.seed) if spb > 0 else None
    batches = []
    for b in range(n_batches):
        items = [(ref, REAL) for ref in order[b * rpb:(b + 1) * rpb]]
        if cycle is not None:
            items += [(ref, SYNTHETIC) for ref in cycle.take(spb)]
        batches.append(Batch(tuple(items)))
    return Epoch(
        batches, order,
        synthetic_draws=cycle.draws if cycle else 0,
        wraps=cycle.wraps if cycle else 0,
        dropped_real=order[n_batches * rpb:],
    )


def write_batches(path, epoch: Epoch):
    """JSON lines, one batch per line: ``{"batch": i, "items": [{"image", "domain"}]}``."""
    with open(Path(path), "w", encoding="utf-8") as fh:
        for i, batch in enumerate(epoch.batches):
            items = [{"image": str(ref), "domain": d} for ref, d in batch.items]
            fh.write(json.dumps({"batch": i, "items": items}) + "\n")
