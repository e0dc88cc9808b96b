"""Named, seeded random substreams.

Every random decision in the pipeline draws from ``substream(seed, purpose)``.
The stream is keyed by a stable hash of the master seed and a purpose string,
so adding a new consumer never shifts the numbers an existing one sees.
"""
import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, *purpose) -> int:
    """Stable 64-bit child seed for ``(seed, purpose...)``."""
    key = ":".join([str(int(seed) & _MASK64), *(str(p) for p in purpose)])
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def substream(seed: int, *purpose) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *purpose)))
