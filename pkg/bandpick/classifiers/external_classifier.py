import logging
import shlex
import subprocess
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
import requests

from bandpick.classifiers.base_classifier import ClassifierBackend
from bandpick.config import ClassifierKind, ClassifierSpec
from bandpick.errors import BackendError

logger = logging.getLogger(__name__)

TRAIN_FILE = "train.csv"
VAL_FILE = "val.csv"
PRED_FILE = "pred.csv"
# étiquette écrite dans val.csv : le backend ne voit jamais les vraies classes de validation
HIDDEN_LABEL = -1


def features_frame(X: np.ndarray, y: np.ndarray) -> pd.DataFrame:
    """En-tête f0..f{F-1},label."""
    frame = pd.DataFrame(X, columns=[f"f{n}" for n in range(X.shape[1])])
    frame["label"] = np.asarray(y, dtype=np.int64)
    return frame


def parse_predictions(values, expected_rows: int, n_classes: int, source: str) -> np.ndarray:
    """Valide une liste de prédictions (entiers dans [0, C))."""
    series = pd.to_numeric(pd.Series(list(values)), errors="coerce")
    # tolère une ligne d'en-tête
    if len(series) == expected_rows + 1 and np.isnan(series.iloc[0]):
        series = series.iloc[1:]
    if len(series) != expected_rows:
        raise BackendError(f"{source}: {len(series)} prédictions pour {expected_rows} lignes de validation")
    if series.isna().any() or not np.all(series == np.round(series)):
        raise BackendError(f"{source}: prédictions non entières")
    predictions = series.to_numpy().astype(np.int64)
    if predictions.min() < 0 or predictions.max() >= n_classes:
        raise BackendError(f"{source}: classes prédites hors de [0, {n_classes})")
    return predictions


class ExternalCommandBackend(ClassifierBackend):
    """
    Backend externe parlant le protocole CSV.

    La commande est lancée dans un répertoire de travail contenant
    train.csv et val.csv ; elle doit y écrire pred.csv (une étiquette par
    ligne de validation). Un code de sortie ≠ 0 est une erreur.
    """

    def __init__(self, spec: ClassifierSpec):
        super().__init__(
            spec,
            name=ClassifierKind.EXTERNAL.value,
            description=f"Commande externe: {spec.command}",
        )

    def fit_predict(self, X_train, y_train, X_val, n_classes):
        with tempfile.TemporaryDirectory(prefix="bandpick_") as workdir:
            workdir = Path(workdir)
            features_frame(X_train, y_train).to_csv(workdir / TRAIN_FILE, index=False)
            features_frame(X_val, np.full(X_val.shape[0], HIDDEN_LABEL)).to_csv(workdir / VAL_FILE, index=False)

            logger.debug(f"🚀 Backend externe: {self.spec.command} (cwd={workdir})")
            try:
                completed = subprocess.run(
                    shlex.split(self.spec.command),
                    cwd=workdir,
                    capture_output=True,
                    text=True,
                    timeout=self.spec.timeout,
                )
            except (OSError, subprocess.TimeoutExpired) as e:
                raise BackendError(f"Échec du lancement de '{self.spec.command}': {e}") from e

            if completed.returncode != 0:
                stderr_tail = completed.stderr.strip()[-500:]
                logger.error(f"❌ Backend externe code {completed.returncode}: {stderr_tail}")
                raise BackendError(f"'{self.spec.command}' a terminé avec le code {completed.returncode}")

            pred_path = workdir / PRED_FILE
            try:
                raw = pd.read_csv(pred_path, header=None).iloc[:, 0]
            except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
                raise BackendError(f"Lecture impossible de {PRED_FILE}: {e}") from e

        return parse_predictions(raw, X_val.shape[0], n_classes, PRED_FILE)


class HttpBackend(ClassifierBackend):
    """
    Backend HTTP : POST {train_csv, val_csv, n_classes} en JSON,
    réponse attendue {"predictions": [...]}.
    """

    def __init__(self, spec: ClassifierSpec):
        super().__init__(
            spec,
            name=ClassifierKind.HTTP.value,
            description=f"Service HTTP: {spec.url}",
        )

    def fit_predict(self, X_train, y_train, X_val, n_classes):
        payload = {
            "train_csv": features_frame(X_train, y_train).to_csv(index=False),
            "val_csv": features_frame(X_val, np.full(X_val.shape[0], HIDDEN_LABEL)).to_csv(index=False),
            "n_classes": int(n_classes),
        }
        try:
            response = requests.post(self.spec.url, json=payload, timeout=self.spec.timeout)
            response.raise_for_status()
            data = response.json()
        except requests.exceptions.RequestException as e:
            logger.error(f"❌ Erreur backend HTTP: {e}")
            raise BackendError(f"Échec de l'appel à {self.spec.url}: {e}") from e
        except ValueError as e:
            raise BackendError(f"Réponse non JSON de {self.spec.url}") from e

        if not isinstance(data, dict) or not isinstance(data.get("predictions"), list):
            raise BackendError(f"Réponse de {self.spec.url} sans liste 'predictions'")
        return parse_predictions(data["predictions"], X_val.shape[0], n_classes, self.spec.url)
