"""
Fichier de base pour les classifieurs wrapper - Backend de base

Ce fichier définit la classe `ClassifierBackend` abstraite dont tous les
backends (baseline logistique, commande externe, HTTP) hériteront, ainsi
que la recette de features partagée.

GSS ne connaît que cette interface : un CNN peut être rebranché via un
backend externe sans toucher à la sélection.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from bandpick.config import ClassifierSpec
from bandpick.datacube import LabeledPatchSet
from bandpick.errors import DimensionMismatchError, PreconditionError

logger = logging.getLogger(__name__)

# Identifiant de la recette de features (moyenne spatiale par bande)
FEATURE_RECIPE = "spatial_mean_v1"


@dataclass(frozen=True)
class TrainedModel:
    """Poids C×F (stockés F×C) + C biais, immuable après entraînement."""

    kind: str
    weights: np.ndarray
    biases: np.ndarray
    feature_recipe: str = FEATURE_RECIPE
    loss_history: Tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("weights", "biases"):
            array = np.array(getattr(self, name), dtype=np.float64)
            array.flags.writeable = False
            object.__setattr__(self, name, array)
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[1],):
            raise DimensionMismatchError(
                f"Poids {self.weights.shape} incompatibles avec biais {self.biases.shape}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise PreconditionError("Poids non finis après entraînement")

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]


def featurize(patch_set: LabeledPatchSet, band_subset: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Une ligne par patch : moyenne spatiale de chaque bande sélectionnée.

    Returns:
        (X de forme N×k, y de forme N)
    """
    bands = [int(b) for b in band_subset]
    if not bands:
        raise PreconditionError("Sous-ensemble de bandes vide")
    if any(b < 0 or b >= patch_set.bands for b in bands):
        raise PreconditionError(f"Bandes {bands} hors de [0, {patch_set.bands})")
    features = patch_set.patches[..., bands].astype(np.float64).mean(axis=(1, 2))
    return features, np.asarray(patch_set.labels)


class ClassifierBackend(ABC):
    """
    Classe de base abstraite pour tous les classifieurs wrapper.

    Chaque backend doit hériter de cette classe et implémenter `fit_predict`.
    """

    def __init__(self, spec: ClassifierSpec, name: str, description: str):
        """
        Args:
            spec: hyperparamètres et cible du backend
            name: nom unique du backend (ex: "logistic_baseline")
            description: courte description du rôle du backend
        """
        if not all([spec, name, description]):
            raise ValueError("Tous les paramètres (spec, name, description) sont requis.")

        self.spec = spec
        self.name = name
        self.description = description

        logger.debug(f"🤖 Backend '{self.name}' initialisé. Description: {self.description}")

    @abstractmethod
    def fit_predict(
        self,
        X_train: np.ndarray,
        y_train: np.ndarray,
        X_val: np.ndarray,
        n_classes: int,
    ) -> np.ndarray:
        """
        Entraîne sur (X_train, y_train) puis prédit une étiquette par ligne de X_val.

        Doit être déterministe pour une même spec et des mêmes données.
        """
        pass

    def __repr__(self) -> str:
        return f"ClassifierBackend(name='{self.name}', description='{self.description}')"
