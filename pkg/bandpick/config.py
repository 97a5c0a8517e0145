"""
Configuration de bandpick.

- `Settings` : variables d'environnement (chargées via python-dotenv dans main.py)
- `ClassifierSpec` : hyperparamètres du classifieur wrapper
- `RunConfig` : tous les paramètres d'une commande CLI
"""
import logging
import math
import os
from enum import Enum
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

logger = logging.getLogger(__name__)

# ═══════════════════════════════════════════════════════════
# CONSTANTES
# ═══════════════════════════════════════════════════════════

THETA_MIN = 1.5
THETA_MAX = 100.0
DEFAULT_SUBSAMPLE_CAP = 100_000


# ═══════════════════════════════════════════════════════════
# ENVIRONNEMENT
# ═══════════════════════════════════════════════════════════

class Settings(BaseModel):
    """Réglages lus dans l'environnement (BANDPICK_*)."""

    threads: int = Field(default=1, ge=1)
    log_level: str = "INFO"
    backend_timeout: float = Field(default=3600.0, gt=0)

    @classmethod
    def from_env(cls) -> "Settings":
        default_threads = min(os.cpu_count() or 1, 8)
        threads = os.getenv("BANDPICK_THREADS")
        timeout = os.getenv("BANDPICK_BACKEND_TIMEOUT")
        try:
            return cls(
                threads=int(threads) if threads else default_threads,
                log_level=os.getenv("BANDPICK_LOG_LEVEL", "INFO").upper(),
                backend_timeout=float(timeout) if timeout else 3600.0,
            )
        except ValueError as e:
            logger.warning(f"⚠️ Variables BANDPICK_* invalides ({e}), valeurs par défaut utilisées")
            return cls(threads=default_threads)


# ═══════════════════════════════════════════════════════════
# CLASSIFIEUR
# ═══════════════════════════════════════════════════════════

class ClassifierKind(str, Enum):
    LOGISTIC_BASELINE = "logistic_baseline"
    EXTERNAL = "external"
    HTTP = "http"


class ClassifierSpec(BaseModel):
    """
    Spécification du classifieur wrapper.

    Le baseline est une régression softmax ; `external` lance une commande
    qui parle le protocole CSV, `http` poste les mêmes CSV à une URL.
    """

    kind: ClassifierKind = ClassifierKind.LOGISTIC_BASELINE
    learning_rate: float = Field(default=0.1, gt=0)
    epochs: int = Field(default=300, ge=1)
    l2: float = Field(default=1e-4, ge=0)
    seed: int = 42
    command: Optional[str] = None
    url: Optional[str] = None
    timeout: float = Field(default=3600.0, gt=0)

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _check_backend_target(self) -> "ClassifierSpec":
        if self.kind == ClassifierKind.EXTERNAL and not self.command:
            raise ValueError("Le backend externe requiert une commande (--backend)")
        if self.kind == ClassifierKind.HTTP and not self.url:
            raise ValueError("Le backend HTTP requiert une URL (--backend-url)")
        return self


# ═══════════════════════════════════════════════════════════
# COMMANDE
# ═══════════════════════════════════════════════════════════

def parse_theta_range(text: str) -> List[float]:
    """
    'LO:HI' -> tous les θ entiers de [LO, HI].

    Exemple: '5:12' -> [5.0, 6.0, ..., 12.0]
    """
    try:
        lo_text, hi_text = text.split(":")
        lo, hi = float(lo_text), float(hi_text)
    except ValueError:
        raise ValueError(f"Plage θ invalide '{text}' (format attendu LO:HI)")
    if lo > hi:
        raise ValueError(f"Plage θ vide: {lo} > {hi}")
    first = math.ceil(lo)
    thetas = [float(t) for t in range(first, math.floor(hi) + 1)]
    if not thetas:
        raise ValueError(f"Aucun θ entier dans [{lo}, {hi}]")
    return thetas


class RunConfig(BaseModel):
    """Paramètres d'une exécution CLI, validés à la lecture."""

    input_path: Optional[Path] = None
    labels_path: Optional[Path] = None
    report_path: Optional[Path] = None
    thetas: List[float] = Field(default_factory=lambda: [10.0])
    k: int = Field(default=5, ge=1)
    bit_depth: int = Field(default=14, ge=1, le=16)
    classifier: ClassifierSpec = Field(default_factory=ClassifierSpec)
    cv_seed: int = 42
    fwhm_bands: float = Field(default=5.0, gt=0)
    fwhm_nm: Optional[float] = Field(default=None, gt=0)
    out_dir: Path = Path("out")
    subsample_cap: int = Field(default=DEFAULT_SUBSAMPLE_CAP, ge=2)
    patch_size: int = Field(default=5, ge=1)
    stride: int = Field(default=1, ge=1)
    bin2: bool = False
    fraction: float = Field(default=1.0, gt=0, le=1)
    entropy_on_normalized: bool = False
    bands: Optional[List[int]] = None
    threads: int = Field(default=1, ge=1)

    @field_validator("input_path", "labels_path", "report_path")
    @classmethod
    def _must_exist(cls, value: Optional[Path]) -> Optional[Path]:
        if value is not None and not value.exists():
            raise ValueError(f"Fichier introuvable: {value}")
        return value

    @field_validator("thetas")
    @classmethod
    def _theta_bounds(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("Au moins un θ est requis")
        for theta in value:
            if not THETA_MIN <= theta <= THETA_MAX:
                raise ValueError(f"θ={theta} hors de [{THETA_MIN}, {THETA_MAX}]")
        return value

    @field_validator("patch_size")
    @classmethod
    def _odd_patch(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("La taille de patch doit être impaire")
        return value
