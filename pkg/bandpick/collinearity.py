"""
Analyse de redondance inter-bandes (IBRA).

Pour chaque bande x, on compte les voisines consécutives à gauche puis à
droite dont le VIF avec x dépasse θ. Les minima locaux de
d(x) = |d_left(x) − d_right(x)| (avec d < 5) deviennent les bandes candidates.
"""
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import statsmodels.api as sm

from bandpick.datacube import HyperCube, LabeledPatchSet, WavelengthAxis
from bandpick.errors import DimensionMismatchError, PreconditionError

logger = logging.getLogger(__name__)

# ═══════════════════════════════════════════════════════════
# CONSTANTES
# ═══════════════════════════════════════════════════════════

VIF_MAX = 1e12
R2_CEILING = 1.0 - 1e-12
CANDIDATE_MAX_DISTANCE = 5
DEFAULT_SUBSAMPLE_CAP = 100_000


# ═══════════════════════════════════════════════════════════
# MATRICE PIXELS × BANDES
# ═══════════════════════════════════════════════════════════

@dataclass(frozen=True)
class BandMatrix:
    """P échantillons de pixels (lignes) × B bandes (colonnes)."""

    values: np.ndarray
    axis: Optional[WavelengthAxis] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 2 or values.shape[1] < 1:
            raise PreconditionError(f"Matrice P×B avec P ≥ 2 attendue, reçu {values.shape}")
        if not np.all(np.isfinite(values)):
            raise PreconditionError("La matrice de bandes contient des NaN/Inf")
        if self.axis is not None and len(self.axis) != values.shape[1]:
            raise DimensionMismatchError(f"Axe de {len(self.axis)} valeurs pour {values.shape[1]} bandes")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def pixels(self) -> int:
        return self.values.shape[0]

    @property
    def bands(self) -> int:
        return self.values.shape[1]

    def column(self, band: int) -> np.ndarray:
        return self.values[:, band]

    @staticmethod
    def _subsample(rows: np.ndarray, cap: int) -> np.ndarray:
        # sous-échantillonnage par pas, sans graine
        if cap < 2:
            raise PreconditionError(f"Plafond de sous-échantillonnage {cap} < 2")
        if rows.shape[0] <= cap:
            return rows
        step = -(-rows.shape[0] // cap)
        return rows[::step]

    @classmethod
    def from_patch_set(cls, patch_set: LabeledPatchSet, cap: int = DEFAULT_SUBSAMPLE_CAP) -> "BandMatrix":
        rows = patch_set.patches.reshape(-1, patch_set.bands)
        return cls(cls._subsample(rows, cap), patch_set.axis)

    @classmethod
    def from_cube(cls, cube: HyperCube, cap: int = DEFAULT_SUBSAMPLE_CAP) -> "BandMatrix":
        rows = cube.data.reshape(-1, cube.bands)
        return cls(cls._subsample(rows, cap), cube.axis)


# ═══════════════════════════════════════════════════════════
# VIF
# ═══════════════════════════════════════════════════════════

def _is_constant(column: np.ndarray) -> bool:
    return bool(np.ptp(column) == 0)


def ols_r_squared(y: np.ndarray, regressors: np.ndarray) -> float:
    """R² d'une régression OLS avec intercept de y sur les colonnes de `regressors`."""
    design = sm.add_constant(np.asarray(regressors, dtype=np.float64).reshape(len(y), -1), has_constant="add")
    r_squared = float(sm.OLS(y, design).fit().rsquared)
    if not np.isfinite(r_squared):
        return 1.0
    return min(max(r_squared, 0.0), 1.0)


def vif_from_r_squared(r_squared: float) -> float:
    if r_squared >= R2_CEILING:
        return VIF_MAX
    return 1.0 / (1.0 - r_squared)


def vif_pair(m: BandMatrix, i: int, j: int) -> float:
    """
    VIF(b_i, b_j) = 1 / (1 − R²), R² de l'OLS prédisant la bande i à partir de j.

    Une bande constante vaut VIF_MAX (redondance maximale).
    """
    if i == j:
        raise PreconditionError(f"VIF d'une bande avec elle-même ({i})")
    if not (0 <= i < m.bands and 0 <= j < m.bands):
        raise PreconditionError(f"Bandes ({i}, {j}) hors de [0, {m.bands})")

    y, x = m.column(i), m.column(j)
    if _is_constant(y) or _is_constant(x):
        return VIF_MAX
    return vif_from_r_squared(ols_r_squared(y, x))


class VifTable:
    """
    Cache symétrique et paresseux des VIF par paire de bandes.

    Thread-safe : deux threads peuvent remplir la même paire, le résultat
    est identique et un seul ajustement OLS est compté.
    """

    def __init__(self, m: BandMatrix):
        self.matrix = m
        self.size = m.bands
        self._entries: Dict[Tuple[int, int], float] = {}
        self._lock = threading.Lock()
        self._pending: Dict[Tuple[int, int], threading.Event] = {}
        self.fits = 0

    @staticmethod
    def _key(i: int, j: int) -> Tuple[int, int]:
        return (i, j) if i < j else (j, i)

    def get(self, i: int, j: int) -> float:
        key = self._key(i, j)
        while True:
            with self._lock:
                if key in self._entries:
                    return self._entries[key]
                event = self._pending.get(key)
                owner = event is None
                if owner:
                    event = self._pending[key] = threading.Event()
            if owner:
                break
            # le propriétaire a pu échouer : on reprend la paire
            event.wait()

        try:
            value = vif_pair(self.matrix, key[0], key[1])
        except Exception:
            with self._lock:
                del self._pending[key]
            event.set()
            raise
        with self._lock:
            self._entries[key] = value
            self.fits += 1
            del self._pending[key]
        event.set()
        logger.debug(f"VIF({key[0]}, {key[1]}) = {value:.4g}")
        return value

    def peek(self, i: int, j: int) -> Optional[float]:
        return self._entries.get(self._key(i, j))

    def __len__(self) -> int:
        return len(self._entries)


# ═══════════════════════════════════════════════════════════
# IBRA
# ═══════════════════════════════════════════════════════════

@dataclass(frozen=True)
class IbraResult:
    theta: float
    d_left: Tuple[int, ...]
    d_right: Tuple[int, ...]
    d: Tuple[int, ...]
    candidates: Tuple[int, ...]

    @property
    def bands(self) -> int:
        return len(self.d)


def _scan(table: VifTable, band: int, direction: int, theta: float) -> int:
    """Nombre de voisines consécutives (dans une direction) avec VIF > θ."""
    count = 0
    neighbor = band + direction
    # vif ← ∞ : la plus proche voisine est toujours testée
    while 0 <= neighbor < table.size:
        if table.get(band, neighbor) <= theta:
            break
        count += 1
        neighbor += direction
    return count


def local_minima(d: Sequence[int]) -> List[int]:
    """
    Minima locaux de d avec d < 5, extrémités exclues.

    Un plateau de valeurs égales est un minimum si ses deux voisins
    différents sont plus grands ; on retient alors son indice le plus à gauche.
    """
    values = list(d)
    if not values:
        raise PreconditionError("Liste de distances vide")

    minima = []
    start = 0
    while start < len(values):
        end = start
        while end + 1 < len(values) and values[end + 1] == values[start]:
            end += 1
        has_both_sides = start > 0 and end < len(values) - 1
        if has_both_sides and values[start - 1] > values[start] < values[end + 1]:
            if values[start] < CANDIDATE_MAX_DISTANCE:
                minima.append(start)
        start = end + 1
    return minima


def interband_redundancy(
    m: BandMatrix,
    theta: float,
    table: Optional[VifTable] = None,
    workers: int = 1,
) -> IbraResult:
    """
    Balayage IBRA : d_left, d_right, d et bandes candidates pour un seuil θ.

    Args:
        m: matrice pixels × bandes
        theta: seuil VIF (> 1)
        table: cache VIF à réutiliser (ex. entre plusieurs θ)
        workers: nombre de threads pour le balayage des bandes
    """
    if theta <= 1:
        raise PreconditionError(f"θ={theta} doit être > 1")
    if m.bands < 2:
        raise PreconditionError(f"IBRA requiert au moins 2 bandes ({m.bands})")
    if table is None:
        table = VifTable(m)
    elif table.matrix is not m:
        raise PreconditionError("Le cache VIF appartient à une autre matrice")

    def scan_band(band: int) -> Tuple[int, int]:
        return _scan(table, band, -1, theta), _scan(table, band, +1, theta)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sides = list(pool.map(scan_band, range(m.bands)))
    else:
        sides = [scan_band(band) for band in range(m.bands)]

    d_left = tuple(left for left, _ in sides)
    d_right = tuple(right for _, right in sides)
    d = tuple(abs(left - right) for left, right in sides)
    candidates = tuple(local_minima(d))

    logger.info(f"📉 IBRA θ={theta:g}: {m.bands} bandes → {len(candidates)} candidates "
                f"({table.fits} ajustements OLS)")
    return IbraResult(theta, d_left, d_right, d, candidates)
