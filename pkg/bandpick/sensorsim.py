"""
Simulation d'un imageur multispectral : un filtre gaussien par bande
sélectionnée, appliqué au cube hyperspectral.

La largeur des filtres est une FWHM exprimée en bandes (5 bandes ≙ 20 nm
à 4 nm d'échantillonnage). Les réponses sont normalisées à une somme de 1 :
l'intégration est une moyenne pondérée et un spectre plat est conservé.
"""
import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from bandpick.datacube import HyperCube, LabeledPatchSet, WavelengthAxis, _read_only
from bandpick.errors import DimensionMismatchError, PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_FWHM_BANDS = 5.0

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


def gaussian_response(x: np.ndarray, center: float, fwhm: float) -> np.ndarray:
    """Gaussienne de pic 1 centrée sur `center`, de largeur à mi-hauteur `fwhm`."""
    sigma = fwhm * FWHM_TO_SIGMA
    return np.exp(-((np.asarray(x, dtype=np.float64) - center) ** 2) / (2 * sigma ** 2))


def fwhm_nm_to_bands(axis: WavelengthAxis, fwhm_nm: float) -> float:
    """Convertit une FWHM en nm en nombre de bandes (pas spectral moyen)."""
    spacing = axis.mean_spacing_nm()
    if spacing <= 0:
        raise PreconditionError("Pas spectral indéfini sur un axe à une seule bande")
    if fwhm_nm <= 0:
        raise PreconditionError(f"FWHM={fwhm_nm} nm doit être > 0")
    return fwhm_nm / spacing


@dataclass(frozen=True)
class FilterBank:
    """k filtres gaussiens (lignes de `weights`, k×B), chacun de somme 1."""

    centers: Tuple[int, ...]
    center_wavelengths_nm: Tuple[float, ...]
    fwhm_bands: float
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _read_only(np.asarray(self.weights, dtype=np.float64)))

    @property
    def k(self) -> int:
        return len(self.centers)

    @property
    def bands(self) -> int:
        return self.weights.shape[1]

    @property
    def axis(self) -> WavelengthAxis:
        return WavelengthAxis(self.center_wavelengths_nm)


def build_filter_bank(
    centers: Sequence[int],
    axis: WavelengthAxis,
    fwhm_bands: float = DEFAULT_FWHM_BANDS,
) -> FilterBank:
    """
    Une gaussienne par centre, évaluée sur la grille des indices de bande,
    tronquée aux bords du spectre puis renormalisée.

    Les centres sont triés par ordre croissant : l'axe de sortie doit être
    strictement croissant.
    """
    if fwhm_bands <= 0:
        raise PreconditionError(f"FWHM={fwhm_bands} bandes doit être > 0")
    centers = sorted(int(c) for c in centers)
    if not centers:
        raise PreconditionError("Aucun centre de filtre")
    if centers[0] < 0 or centers[-1] >= len(axis):
        raise PreconditionError(f"Centres {centers} hors de [0, {len(axis)})")
    if len(set(centers)) != len(centers):
        raise PreconditionError(f"Centres dupliqués: {centers}")

    grid = np.arange(len(axis), dtype=np.float64)
    weights = np.stack([gaussian_response(grid, center, fwhm_bands) for center in centers])
    weights /= weights.sum(axis=1, keepdims=True)

    logger.info(f"🔆 Banc de {len(centers)} filtres gaussiens (FWHM={fwhm_bands:g} bandes)")
    return FilterBank(
        centers=tuple(centers),
        center_wavelengths_nm=tuple(axis[c] for c in centers),
        fwhm_bands=float(fwhm_bands),
        weights=weights,
    )


def simulate_multispectral(
    data: Union[HyperCube, LabeledPatchSet],
    bank: FilterBank,
) -> Union[HyperCube, LabeledPatchSet]:
    """
    Sortie c de chaque pixel = Σ_b weights[c][b] · spectre[b].
    Les étiquettes d'un ensemble de patches sont conservées.
    """
    if isinstance(data, HyperCube):
        values, bands = data.data, data.bands
    elif isinstance(data, LabeledPatchSet):
        values, bands = data.patches, data.bands
    else:
        raise PreconditionError(f"Type non simulable: {type(data).__name__}")
    if bands != bank.bands:
        raise DimensionMismatchError(f"Banc dimensionné pour {bank.bands} bandes, données à {bands}")

    simulated = np.tensordot(values.astype(np.float64), bank.weights, axes=([-1], [1]))
    logger.debug(f"🔆 Simulation: {bands} bandes → {bank.k} canaux")

    if isinstance(data, HyperCube):
        return HyperCube(simulated, bank.axis)
    return data.with_patches(simulated, bank.axis)
