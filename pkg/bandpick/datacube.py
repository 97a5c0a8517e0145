"""
Cubes hyperspectraux : lecture/écriture HSC1, prétraitement, extraction de patches.

Le cube est stocké en mémoire dans l'ordre (ligne, colonne, bande).
Toutes les opérations sont pures : elles renvoient de nouveaux objets et
les tableaux exposés sont en lecture seule.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from bandpick.errors import (
    BandpickError,
    CubeDataError,
    CubeFormatError,
    CubeTruncationError,
    DimensionMismatchError,
    DivideByZeroBandError,
    EmptyDatasetError,
    PreconditionError,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# ═══════════════════════════════════════════════════════════
# FORMAT HSC1
# ═══════════════════════════════════════════════════════════

HSC1_MAGIC = b"HSC1"
HSC1_VERSION = 1
HSC1_HEADER = np.dtype([
    ("magic", "S4"),
    ("version", "<u2"),
    ("height", "<u4"),
    ("width", "<u4"),
    ("bands", "<u4"),
])

# Écart-type en dessous duquel une bande est considérée constante
DEGENERATE_STD = 1e-12

PATCH_FILE_PATTERN = "patch_{:05d}.hsc"
LABELS_FILE = "labels.csv"


def _read_only(array: np.ndarray) -> np.ndarray:
    array = np.asarray(array)
    if array.flags.writeable:
        array = array.copy()
        array.flags.writeable = False
    return array


# ═══════════════════════════════════════════════════════════
# TYPES
# ═══════════════════════════════════════════════════════════

@dataclass(frozen=True)
class WavelengthAxis:
    """Longueur d'onde (nm) de chaque bande, strictement croissante."""

    wavelengths_nm: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(w) for w in self.wavelengths_nm)
        if not values:
            raise PreconditionError("Axe spectral vide")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise PreconditionError("Les longueurs d'onde doivent être strictement croissantes")
        object.__setattr__(self, "wavelengths_nm", values)

    def __len__(self) -> int:
        return len(self.wavelengths_nm)

    def __getitem__(self, band: int) -> float:
        return self.wavelengths_nm[band]

    @classmethod
    def from_indices(cls, bands: int, start_nm: float = 400.0, step_nm: float = 4.0) -> "WavelengthAxis":
        return cls(tuple(start_nm + step_nm * b for b in range(bands)))

    def select(self, bands: Sequence[int]) -> "WavelengthAxis":
        return WavelengthAxis(tuple(self.wavelengths_nm[b] for b in bands))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.wavelengths_nm, dtype=np.float64)

    def mean_spacing_nm(self) -> float:
        if len(self) < 2:
            return 0.0
        return float(np.mean(np.diff(self.as_array())))


@dataclass(frozen=True)
class HyperCube:
    """Cube H×W×B (réflectance ou nombres numériques bruts)."""

    data: np.ndarray
    axis: WavelengthAxis

    def __post_init__(self):
        data = _read_only(self.data)
        if data.ndim != 3 or min(data.shape) < 1:
            raise PreconditionError(f"Cube 3-D non vide attendu, reçu {data.shape}")
        if data.shape[2] != len(self.axis):
            raise DimensionMismatchError(
                f"Axe spectral de {len(self.axis)} valeurs pour {data.shape[2]} bandes"
            )
        if not np.all(np.isfinite(data)):
            raise CubeDataError("Le cube contient des valeurs NaN/Inf")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class LabeledPatchSet:
    """
    Ensemble de patches S×S×B étiquetés, unité de classification.

    Invariants:
        - tous les patches partagent S et B
        - chaque classe de 0..C-1 apparaît au moins une fois
    """

    patches: np.ndarray
    labels: np.ndarray
    axis: WavelengthAxis
    classes: Optional[int] = field(default=None)

    def __post_init__(self):
        patches = _read_only(self.patches)
        labels = _read_only(np.asarray(self.labels, dtype=np.int64))
        if patches.ndim != 4 or patches.shape[1] != patches.shape[2]:
            raise PreconditionError(f"Patches N×S×S×B attendus, reçu {patches.shape}")
        if patches.shape[0] == 0:
            raise EmptyDatasetError("Ensemble de patches vide")
        if labels.shape != (patches.shape[0],):
            raise DimensionMismatchError(f"{labels.shape[0]} étiquettes pour {patches.shape[0]} patches")
        if patches.shape[3] != len(self.axis):
            raise DimensionMismatchError(
                f"Axe spectral de {len(self.axis)} valeurs pour {patches.shape[3]} bandes"
            )
        if labels.min() < 0:
            raise PreconditionError("Étiquettes négatives interdites")
        classes = int(labels.max()) + 1 if self.classes is None else int(self.classes)
        counts = np.bincount(labels, minlength=classes)
        if len(counts) > classes or np.any(counts[:classes] == 0):
            missing = [c for c in range(classes) if c >= len(counts) or counts[c] == 0]
            raise PreconditionError(f"Classes absentes ou hors plage 0..{classes - 1}: {missing}")
        object.__setattr__(self, "patches", patches)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "classes", classes)

    def __len__(self) -> int:
        return self.patches.shape[0]

    @property
    def patch_size(self) -> int:
        return self.patches.shape[1]

    @property
    def bands(self) -> int:
        return self.patches.shape[3]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.classes)

    def subset(self, indices: Sequence[int]) -> "LabeledPatchSet":
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledPatchSet(self.patches[indices], self.labels[indices], self.axis, self.classes)

    def select_bands(self, bands: Sequence[int]) -> "LabeledPatchSet":
        """Restreint aux bandes données (indices croissants, sans doublon)."""
        bands = list(bands)
        if not bands or any(b < 0 or b >= self.bands for b in bands):
            raise PreconditionError(f"Indices de bandes invalides: {bands}")
        return LabeledPatchSet(self.patches[..., bands], self.labels, self.axis.select(bands), self.classes)

    def with_patches(self, patches: np.ndarray, axis: Optional[WavelengthAxis] = None) -> "LabeledPatchSet":
        return LabeledPatchSet(patches, self.labels, axis or self.axis, self.classes)


@dataclass(frozen=True)
class ZScoreParams:
    """Moyenne / écart-type par bande, ajustés sur un ensemble d'entraînement."""

    mean_per_band: np.ndarray
    std_per_band: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean_per_band", _read_only(np.asarray(self.mean_per_band, dtype=np.float64)))
        object.__setattr__(self, "std_per_band", _read_only(np.asarray(self.std_per_band, dtype=np.float64)))
        if np.any(self.std_per_band <= 0):
            raise PreconditionError("Écart-type nul ou négatif dans les paramètres z-score")


# ═══════════════════════════════════════════════════════════
# ENTRÉES / SORTIES
# ═══════════════════════════════════════════════════════════

def load_cube(path: PathLike) -> HyperCube:
    """
    Lit un fichier HSC1.

    Raises:
        CubeFormatError: magic/version invalides
        CubeTruncationError: taille du payload incohérente
        CubeDataError: NaN/Inf dans le payload
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise BandpickError(f"Lecture impossible de {path}: {e}") from e

    if len(raw) < HSC1_HEADER.itemsize:
        raise CubeFormatError(f"{path}: en-tête HSC1 incomplet ({len(raw)} octets)")
    header = np.frombuffer(raw, dtype=HSC1_HEADER, count=1)[0]
    if header["magic"] != HSC1_MAGIC:
        raise CubeFormatError(f"{path}: magic {header['magic']!r} au lieu de {HSC1_MAGIC!r}")
    if int(header["version"]) != HSC1_VERSION:
        raise CubeFormatError(f"{path}: version HSC1 {int(header['version'])} non supportée")

    height, width, bands = int(header["height"]), int(header["width"]), int(header["bands"])
    if min(height, width, bands) == 0:
        raise CubeFormatError(f"{path}: dimensions nulles {height}×{width}×{bands}")

    offset = HSC1_HEADER.itemsize
    expected = offset + 8 * bands + 4 * height * width * bands
    if len(raw) != expected:
        raise CubeTruncationError(
            f"{path}: {len(raw)} octets pour {height}×{width}×{bands} (attendu {expected})"
        )

    wavelengths = np.frombuffer(raw, dtype="<f8", count=bands, offset=offset)
    data = np.frombuffer(raw, dtype="<f4", count=height * width * bands, offset=offset + 8 * bands)
    if not np.all(np.isfinite(data)):
        raise CubeDataError(f"{path}: payload contenant des NaN/Inf")

    try:
        axis = WavelengthAxis(tuple(wavelengths.tolist()))
    except PreconditionError as e:
        raise CubeFormatError(f"{path}: {e}") from e

    logger.debug(f"📂 Cube chargé: {path} ({height}×{width}×{bands})")
    return HyperCube(data.reshape(height, width, bands).astype(np.float32, copy=False), axis)


def save_cube(cube: HyperCube, path: PathLike) -> None:
    """Écrit un cube au format HSC1 (payload float32 little-endian)."""
    path = Path(path)
    header = np.array(
        [(HSC1_MAGIC, HSC1_VERSION, cube.height, cube.width, cube.bands)], dtype=HSC1_HEADER
    )
    try:
        with path.open("wb") as handle:
            handle.write(header.tobytes())
            handle.write(cube.axis.as_array().astype("<f8").tobytes())
            handle.write(np.ascontiguousarray(cube.data, dtype="<f4").tobytes())
    except OSError as e:
        raise BandpickError(f"Écriture impossible de {path}: {e}") from e


def load_label_map(path: PathLike, height: Optional[int] = None, width: Optional[int] = None) -> np.ndarray:
    """Carte d'étiquettes CSV (H lignes × W colonnes, -1 = non étiqueté)."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, header=None)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise BandpickError(f"Lecture impossible de la carte d'étiquettes {path}: {e}") from e

    values = frame.to_numpy()
    if not np.issubdtype(values.dtype, np.integer):
        raise PreconditionError(f"{path}: la carte d'étiquettes doit contenir des entiers")
    if height is not None and width is not None and values.shape != (height, width):
        raise DimensionMismatchError(f"{path}: carte {values.shape} pour un cube {height}×{width}")
    return values.astype(np.int64)


def save_label_map(label_map: np.ndarray, path: PathLike) -> None:
    pd.DataFrame(np.asarray(label_map, dtype=np.int64)).to_csv(path, header=False, index=False)


def save_patch_set(patch_set: LabeledPatchSet, directory: PathLike) -> None:
    """Répertoire de patches HSC1 + labels.csv (index,label)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for index, patch in enumerate(patch_set.patches):
        save_cube(HyperCube(patch, patch_set.axis), directory / PATCH_FILE_PATTERN.format(index))
    pd.DataFrame({
        "index": np.arange(len(patch_set)),
        "label": patch_set.labels,
    }).to_csv(directory / LABELS_FILE, index=False)
    logger.info(f"💾 {len(patch_set)} patches écrits dans {directory}")


def load_patch_set(directory: PathLike) -> LabeledPatchSet:
    directory = Path(directory)
    labels_path = directory / LABELS_FILE
    try:
        frame = pd.read_csv(labels_path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise BandpickError(f"Lecture impossible de {labels_path}: {e}") from e
    if list(frame.columns) != ["index", "label"]:
        raise CubeFormatError(f"{labels_path}: colonnes 'index,label' attendues")
    if frame.empty:
        raise EmptyDatasetError(f"{labels_path}: aucun patch")

    cubes = [load_cube(directory / PATCH_FILE_PATTERN.format(int(i))) for i in frame["index"]]
    axis = cubes[0].axis
    if any(c.axis != axis or c.data.shape != cubes[0].data.shape for c in cubes):
        raise DimensionMismatchError(f"{directory}: patches de formes ou d'axes différents")

    logger.info(f"📂 {len(cubes)} patches chargés depuis {directory}")
    return LabeledPatchSet(np.stack([c.data for c in cubes]), frame["label"].to_numpy(), axis)


# ═══════════════════════════════════════════════════════════
# PRÉTRAITEMENT
# ═══════════════════════════════════════════════════════════

def mean_region_spectrum(cube: HyperCube, row0: int, row1: int, col0: int, col1: int) -> np.ndarray:
    """
    Spectre moyen d'un rectangle [row0,row1) × [col0,col1), typiquement
    la zone du panneau Spectralon.
    """
    region = cube.data[row0:row1, col0:col1]
    if region.size == 0:
        raise PreconditionError(f"Région vide [{row0}:{row1}, {col0}:{col1}]")
    return region.reshape(-1, cube.bands).astype(np.float64).mean(axis=0)


def reflectance_correct(
    scene: HyperCube,
    target_mean_dn: Sequence[float],
    dark_dn: Sequence[float],
    rho_target: float,
) -> HyperCube:
    """
    ρ = ((DN_scene − DN_dark) / (DN_target − DN_dark)) · ρ_target, par pixel et par bande.
    """
    target = np.asarray(target_mean_dn, dtype=np.float64)
    dark = np.asarray(dark_dn, dtype=np.float64)
    if target.shape != (scene.bands,) or dark.shape != (scene.bands,):
        raise DimensionMismatchError(
            f"Spectres cible/noir de {target.shape}/{dark.shape} pour {scene.bands} bandes"
        )
    if not 0 < rho_target <= 1:
        raise PreconditionError(f"ρ_target={rho_target} hors de (0, 1]")

    denominator = target - dark
    zero_bands = np.flatnonzero(denominator == 0)
    if zero_bands.size:
        raise DivideByZeroBandError(int(zero_bands[0]))

    reflectance = ((scene.data.astype(np.float64) - dark) / denominator) * rho_target
    return HyperCube(reflectance, scene.axis)


def spectral_bin2(cube: HyperCube) -> HyperCube:
    """Binning spectral 2× : moyenne des paires (2j, 2j+1), bande impaire finale ignorée."""
    if cube.bands < 2:
        raise PreconditionError(f"Binning 2× impossible sur {cube.bands} bande(s)")
    pairs = cube.bands // 2
    data = cube.data[..., : 2 * pairs].astype(np.float64)
    binned = data.reshape(cube.height, cube.width, pairs, 2).mean(axis=-1)
    wavelengths = cube.axis.as_array()[: 2 * pairs].reshape(pairs, 2).mean(axis=-1)
    return HyperCube(binned, WavelengthAxis(tuple(wavelengths.tolist())))


def extract_patches(
    cube: HyperCube,
    label_map: np.ndarray,
    patch_size: int,
    stride: int = 1,
) -> LabeledPatchSet:
    """
    Un patch S×S centré sur chaque pixel étiqueté visité au pas `stride`
    (lignes et colonnes multiples de stride). Les fenêtres qui sortent de
    l'image sont complétées par répétition des bords.
    """
    label_map = np.asarray(label_map)
    if label_map.shape != (cube.height, cube.width):
        raise DimensionMismatchError(f"Carte {label_map.shape} pour un cube {cube.height}×{cube.width}")
    if patch_size % 2 == 0 or patch_size < 1:
        raise PreconditionError(f"Taille de patch {patch_size} : entier impair attendu")
    if patch_size > min(cube.height, cube.width):
        raise PreconditionError(f"Patch {patch_size} plus grand que l'image {cube.height}×{cube.width}")
    if stride < 1:
        raise PreconditionError(f"Pas {stride} invalide")

    rows, cols = np.nonzero(label_map >= 0)
    keep = (rows % stride == 0) & (cols % stride == 0)
    rows, cols = rows[keep], cols[keep]
    if rows.size == 0:
        raise EmptyDatasetError("Aucun pixel étiqueté dans la carte")

    margin = patch_size // 2
    padded = np.pad(cube.data, ((margin, margin), (margin, margin), (0, 0)), mode="edge")
    # (H, W, B, S, S) -> patches (N, S, S, B)
    windows = sliding_window_view(padded, (patch_size, patch_size), axis=(0, 1))
    patches = np.moveaxis(windows[rows, cols], 1, -1)

    logger.info(f"✂️ {rows.size} patches {patch_size}×{patch_size}×{cube.bands} extraits (pas={stride})")
    return LabeledPatchSet(patches, label_map[rows, cols], cube.axis)


def subsample_patch_set(patch_set: LabeledPatchSet, fraction: float, seed: int) -> LabeledPatchSet:
    """
    Sous-échantillon stratifié d'une fraction des patches (variation de taille
    du jeu de données). Au moins 2 patches par classe sont conservés.
    """
    if not 0 < fraction <= 1:
        raise PreconditionError(f"Fraction {fraction} hors de (0, 1]")
    if fraction == 1:
        return patch_set

    rng = np.random.default_rng(seed)
    kept = []
    for label in range(patch_set.classes):
        members = np.flatnonzero(patch_set.labels == label)
        n_keep = min(len(members), max(2, int(round(fraction * len(members)))))
        kept.append(rng.permutation(members)[:n_keep])
    indices = np.sort(np.concatenate(kept))
    logger.info(f"🔽 Sous-échantillon {fraction:.0%}: {len(indices)}/{len(patch_set)} patches")
    return patch_set.subset(indices)


# ═══════════════════════════════════════════════════════════
# NORMALISATION Z-SCORE
# ═══════════════════════════════════════════════════════════

def zscore_fit(patch_set: LabeledPatchSet) -> ZScoreParams:
    pixels = patch_set.patches.reshape(-1, patch_set.bands).astype(np.float64)
    mean = pixels.mean(axis=0)
    std = pixels.std(axis=0)
    # bande constante : sortie centrée plutôt que NaN
    std = np.where(std < DEGENERATE_STD, 1.0, std)
    return ZScoreParams(mean, std)


def zscore_apply(patch_set: LabeledPatchSet, params: ZScoreParams) -> LabeledPatchSet:
    if params.mean_per_band.shape != (patch_set.bands,):
        raise DimensionMismatchError(
            f"Paramètres z-score pour {params.mean_per_band.shape[0]} bandes, ensemble à {patch_set.bands}"
        )
    normalized = (patch_set.patches.astype(np.float64) - params.mean_per_band) / params.std_per_band
    return patch_set.with_patches(normalized)
