"""
Classement des bandes candidates par entropie d'information.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from bandpick.collinearity import BandMatrix
from bandpick.errors import PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_BIT_DEPTH = 14


@dataclass(frozen=True)
class EntropyRanking:
    """Bandes triées par entropie décroissante (égalité : indice croissant)."""

    band_index: Tuple[int, ...]
    entropy_bits: Tuple[float, ...]

    def __len__(self) -> int:
        return len(self.band_index)

    def entropy_of(self, band: int) -> float:
        return self.entropy_bits[self.band_index.index(band)]


def band_entropy(m: BandMatrix, i: int, bit_depth: int = DEFAULT_BIT_DEPTH) -> float:
    """
    H = −Σ P(z) log2 P(z), la bande étant quantifiée en 2^bit_depth classes
    de même largeur sur son propre intervalle [min, max].
    """
    if not 0 <= i < m.bands:
        raise PreconditionError(f"Bande {i} hors de [0, {m.bands})")
    if not 1 <= bit_depth <= 16:
        raise PreconditionError(f"Profondeur {bit_depth} bits hors de [1, 16]")

    column = m.column(i)
    low, high = float(column.min()), float(column.max())
    if low == high:
        return 0.0

    counts, _ = np.histogram(column, bins=2 ** bit_depth, range=(low, high))
    probabilities = counts[counts > 0] / column.shape[0]
    # 0·log0 = 0 : les classes vides sont ignorées
    return float(-np.sum(probabilities * np.log2(probabilities)))


def rank_by_entropy(
    m: BandMatrix,
    candidates: Sequence[int],
    bit_depth: int = DEFAULT_BIT_DEPTH,
    workers: int = 1,
) -> EntropyRanking:
    candidates = [int(c) for c in candidates]
    if not candidates:
        raise PreconditionError("Aucune bande candidate à classer")
    if len(set(candidates)) != len(candidates):
        raise PreconditionError(f"Bandes candidates dupliquées: {candidates}")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entropies = list(pool.map(lambda band: band_entropy(m, band, bit_depth), candidates))
    else:
        entropies = [band_entropy(m, band, bit_depth) for band in candidates]

    order = sorted(range(len(candidates)), key=lambda n: (-entropies[n], candidates[n]))
    ranking = EntropyRanking(
        band_index=tuple(candidates[n] for n in order),
        entropy_bits=tuple(entropies[n] for n in order),
    )
    logger.info(f"🔢 Classement entropique: {list(ranking.band_index)}")
    return ranking
