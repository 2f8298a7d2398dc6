"""Seeded Rayleigh MIMO channel realizations.

Every channel coefficient is drawn from its own PCG64 substream keyed by
``SeedSequence(master_seed, spawn_key=(realization, user, rx, tx))``. This
makes realizations reproducible across platforms and thread counts, and nests
them: the SISO channel of a realization is the (0, 0) entry of its MIMO
channel.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["RNG_ALGORITHM", "MimoChannel", "sample_channel", "spatial_gram",
           "dump_channels", "load_channels"]

RNG_ALGORITHM = "numpy.PCG64/SeedSequence-v1"


@dataclass(frozen=True)
class MimoChannel:
    h1: np.ndarray
    h2: np.ndarray
    seed: int
    master_seed: int = 0

    @property
    def m(self) -> int:
        return self.h1.shape[0]

    @property
    def l(self) -> int:
        return self.h1.shape[1]

    def user(self, k: int) -> np.ndarray:
        return self.h1 if k == 1 else self.h2


def _coefficient(master_seed: int, seed: int, user: int, rx: int, tx: int) -> complex:
    ss = np.random.SeedSequence(master_seed, spawn_key=(seed, user, rx, tx))
    re, im = np.random.Generator(np.random.PCG64(ss)).standard_normal(2)
    return complex(re, im) / np.sqrt(2.0)


def sample_channel(seed: int, m: int, l: int, master_seed: int = 0) -> MimoChannel:
    """Draw ``H_1, H_2`` with i.i.d. CN(0, 1) entries for realization ``seed``."""
    if m < 1 or l < 1:
        raise ValueError(f"antenna counts must be positive, got M={m}, L={l}")
    hs = []
    for user in (1, 2):
        h = np.empty((m, l), dtype=complex)
        for rx in range(m):
            for tx in range(l):
                h[rx, tx] = _coefficient(master_seed, seed, user, rx, tx)
        hs.append(h)
    return MimoChannel(h1=hs[0], h2=hs[1], seed=seed, master_seed=master_seed)


def spatial_gram(h: np.ndarray) -> np.ndarray:
    """``H^H H``, exactly Hermitian."""
    a = h.conj().T @ h
    return 0.5 * (a + a.conj().T)


def dump_channels(path, channels) -> None:
    """Write channels as CSV rows ``seed,user,rx,tx,re,im``."""
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "user", "rx", "tx", "re", "im"])
        for ch in channels:
            for user in (1, 2):
                h = ch.user(user)
                for (rx, tx), val in np.ndenumerate(h):
                    w.writerow([ch.seed, user, rx, tx, repr(float(val.real)), repr(float(val.imag))])


def load_channels(path) -> list[MimoChannel]:
    """Inverse of :func:`dump_channels` (bit-exact round trip)."""
    entries: dict[int, dict[int, dict[tuple[int, int], complex]]] = {}
    with open(Path(path), newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            seed, user = int(row["seed"]), int(row["user"])
            key = (int(row["rx"]), int(row["tx"]))
            entries.setdefault(seed, {1: {}, 2: {}})[user][key] = complex(
                float(row["re"]), float(row["im"]))
    out = []
    for seed, users in entries.items():
        hs = []
        for user in (1, 2):
            cells = users[user]
            m = 1 + max(k[0] for k in cells)
            l = 1 + max(k[1] for k in cells)
            h = np.zeros((m, l), dtype=complex)
            for (rx, tx), val in cells.items():
                h[rx, tx] = val
            hs.append(h)
        out.append(MimoChannel(h1=hs[0], h2=hs[1], seed=seed))
    return out
