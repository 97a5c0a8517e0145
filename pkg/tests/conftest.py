"""
Fixtures partagées et oracles indépendants (corrélation de Pearson,
équations normales, rejeu direct du balayage IBRA).
"""
import numpy as np
import pytest

from bandpick.collinearity import VIF_MAX, BandMatrix
from bandpick.config import ClassifierSpec
from bandpick.crossval import make_cv_plan
from bandpick.datacube import HyperCube, LabeledPatchSet, WavelengthAxis
from bandpick.synthetic import blocks_patch_set, planted_patch_set


# ═══════════════════════════════════════════════════════════
# JEUX DE DONNÉES
# ═══════════════════════════════════════════════════════════

@pytest.fixture(scope="session")
def planted() -> LabeledPatchSet:
    return planted_patch_set(seed=0)


@pytest.fixture(scope="session")
def planted_matrix(planted) -> BandMatrix:
    return BandMatrix.from_patch_set(planted)


@pytest.fixture(scope="session")
def planted_plan(planted):
    return make_cv_plan(planted, seed=42)


@pytest.fixture(scope="session")
def blocks() -> LabeledPatchSet:
    return blocks_patch_set(seed=0)


@pytest.fixture
def baseline_spec() -> ClassifierSpec:
    return ClassifierSpec()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_cube(data) -> HyperCube:
    data = np.asarray(data, dtype=np.float32)
    return HyperCube(data, WavelengthAxis.from_indices(data.shape[2]))


def make_patch_set(patches, labels) -> LabeledPatchSet:
    patches = np.asarray(patches, dtype=np.float64)
    return LabeledPatchSet(patches, labels, WavelengthAxis.from_indices(patches.shape[3]))


def correlated_matrix(rng, pixels: int, bands: int) -> np.ndarray:
    """Colonnes en marche aléatoire : corrélation entre voisines tirée au hasard."""
    values = np.empty((pixels, bands))
    values[:, 0] = rng.normal(size=pixels)
    for band in range(1, bands):
        rho = rng.uniform(0.0, 1.0)
        values[:, band] = rho * values[:, band - 1] + rng.normal(0.0, rng.uniform(0.05, 1.0), pixels)
    return values


# ═══════════════════════════════════════════════════════════
# ORACLES
# ═══════════════════════════════════════════════════════════

def pearson_vif(x: np.ndarray, y: np.ndarray) -> float:
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return VIF_MAX
    r = np.corrcoef(x, y)[0, 1]
    if r ** 2 >= 1 - 1e-12:
        return VIF_MAX
    return 1.0 / (1.0 - r ** 2)


def normal_equations_vif(columns: np.ndarray, position: int) -> float:
    """R² par (XᵀX)β = Xᵀy, intercept inclus."""
    y = columns[:, position]
    X = np.column_stack([np.ones(len(y)), np.delete(columns, position, axis=1)])
    beta = np.linalg.solve(X.T @ X, X.T @ y)
    residual = y - X @ beta
    r_squared = 1 - residual @ residual / np.sum((y - y.mean()) ** 2)
    return 1.0 / (1.0 - r_squared)


def brute_force_ibra(values: np.ndarray, theta: float):
    """Toutes les paires VIF, puis rejeu direct du balayage et des minima."""
    bands = values.shape[1]
    vif = np.ones((bands, bands))
    for i in range(bands):
        for j in range(bands):
            if i != j:
                vif[i, j] = pearson_vif(values[:, i], values[:, j])

    d_left, d_right = [], []
    for x in range(bands):
        left = 0
        while x - left - 1 >= 0 and vif[x, x - left - 1] > theta:
            left += 1
        right = 0
        while x + right + 1 < bands and vif[x, x + right + 1] > theta:
            right += 1
        d_left.append(left)
        d_right.append(right)
    d = [abs(a - b) for a, b in zip(d_left, d_right)]
    return d_left, d_right, d, brute_force_minima(d)


def brute_force_minima(d):
    chosen = []
    for x in range(1, len(d) - 1):
        start = x
        while start > 0 and d[start - 1] == d[x]:
            start -= 1
        end = x
        while end < len(d) - 1 and d[end + 1] == d[x]:
            end += 1
        if start != x or start == 0 or end == len(d) - 1:
            continue
        if d[start - 1] > d[x] and d[end + 1] > d[x] and d[x] < 5:
            chosen.append(x)
    return chosen
