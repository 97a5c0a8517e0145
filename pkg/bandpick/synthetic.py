"""
Jeux de données synthétiques à structure connue.

`planted` : 3 classes, 12 bandes, 600 patches 5×5 (200 par classe).
    - bandes 3 et 9 : seules porteuses de signal. Classe 1 décale la bande 3
      de +1, classe 2 décale la bande 9 de +1, plus un bruit uniforme
      U(-0.5, 0.5) par pixel.
    - bandes 2 et 4 : copies bruitées de la bande 3 (σ = 0.05),
      bandes 8 et 10 : copies bruitées de la bande 9.
    - bandes 5, 6, 7 : bloc de bruit corrélé (base N(0,1) commune + σ = 0.1).
    - bandes 0, 1, 11 : bruit N(0,1) indépendant.
  Pour tout θ de [8, 12], IBRA retient exactement {3, 6, 9} et GSS avec
  k=2 retrouve {3, 9}.

`blocks` : 30 bandes en 5 blocs indépendants de 6 bandes quasi identiques.
  IBRA retient la 3e bande de chaque bloc : {2, 8, 14, 20, 26}.
"""
import logging
from typing import Tuple

import numpy as np

from bandpick.datacube import HyperCube, LabeledPatchSet, WavelengthAxis
from bandpick.errors import PreconditionError

logger = logging.getLogger(__name__)

PLANTED_BANDS = 12
PLANTED_SIGNAL_BANDS = (3, 9)
PLANTED_CANDIDATES = (3, 6, 9)
BLOCKS_BANDS = 30
BLOCK_WIDTH = 6
BLOCKS_CANDIDATES = (2, 8, 14, 20, 26)

CLASSES = 3
PATCH_SIZE = 5
DUPLICATE_NOISE = 0.05
BLOCK_NOISE = 0.1


def _labels(per_class: int) -> np.ndarray:
    return np.repeat(np.arange(CLASSES), per_class)


def planted_patch_set(seed: int = 0, per_class: int = 200, patch_size: int = PATCH_SIZE) -> LabeledPatchSet:
    if per_class < 2:
        raise PreconditionError("Au moins 2 patches par classe")
    rng = np.random.default_rng(seed)
    labels = _labels(per_class)
    shape = (labels.size, patch_size, patch_size)

    cube = np.empty(shape + (PLANTED_BANDS,))
    for band in (0, 1, 11):
        cube[..., band] = rng.normal(0.0, 1.0, shape)

    band3, band9 = PLANTED_SIGNAL_BANDS
    cube[..., band3] = (labels == 1)[:, None, None] + rng.uniform(-0.5, 0.5, shape)
    cube[..., band9] = (labels == 2)[:, None, None] + rng.uniform(-0.5, 0.5, shape)
    for signal, copies in ((band3, (2, 4)), (band9, (8, 10))):
        for band in copies:
            cube[..., band] = cube[..., signal] + rng.normal(0.0, DUPLICATE_NOISE, shape)

    base = rng.normal(0.0, 1.0, shape)
    for band in (5, 6, 7):
        cube[..., band] = base + rng.normal(0.0, BLOCK_NOISE, shape)

    logger.info(f"🧪 Jeu 'planted' généré: {labels.size} patches, {PLANTED_BANDS} bandes (graine {seed})")
    return LabeledPatchSet(cube.astype(np.float32), labels, WavelengthAxis.from_indices(PLANTED_BANDS))


def blocks_patch_set(seed: int = 0, per_class: int = 200, patch_size: int = PATCH_SIZE) -> LabeledPatchSet:
    if per_class < 2:
        raise PreconditionError("Au moins 2 patches par classe")
    rng = np.random.default_rng(seed)
    labels = _labels(per_class)
    shape = (labels.size, patch_size, patch_size)

    cube = np.empty(shape + (BLOCKS_BANDS,))
    for block in range(BLOCKS_BANDS // BLOCK_WIDTH):
        base = rng.normal(0.0, 1.0, shape)
        # classe 1 visible dans le bloc 0, classe 2 dans le bloc 3
        if block == 0:
            base = base + 2.0 * (labels == 1)[:, None, None]
        elif block == 3:
            base = base + 2.0 * (labels == 2)[:, None, None]
        for offset in range(BLOCK_WIDTH):
            cube[..., block * BLOCK_WIDTH + offset] = base + rng.normal(0.0, DUPLICATE_NOISE, shape)

    logger.info(f"🧪 Jeu 'blocks' généré: {labels.size} patches, {BLOCKS_BANDS} bandes (graine {seed})")
    return LabeledPatchSet(cube.astype(np.float32), labels, WavelengthAxis.from_indices(BLOCKS_BANDS))


def mosaic(patch_set: LabeledPatchSet) -> Tuple[HyperCube, np.ndarray]:
    """
    Range les patches en damier dans un cube, avec une carte d'étiquettes
    qui ne marque que le pixel central de chaque tuile. Extraire des patches
    de même taille (pas 1) sur ce cube redonne les patches d'origine.
    """
    size = patch_set.patch_size
    n = len(patch_set)
    columns = int(np.ceil(np.sqrt(n)))
    rows = int(np.ceil(n / columns))

    data = np.zeros((rows * size, columns * size, patch_set.bands), dtype=np.float32)
    label_map = np.full((rows * size, columns * size), -1, dtype=np.int64)
    for index, (patch, label) in enumerate(zip(patch_set.patches, patch_set.labels)):
        r, c = divmod(index, columns)
        data[r * size:(r + 1) * size, c * size:(c + 1) * size] = patch
        label_map[r * size + size // 2, c * size + size // 2] = label
    return HyperCube(data, patch_set.axis), label_map


GENERATORS = {
    "planted": planted_patch_set,
    "blocks": blocks_patch_set,
}
