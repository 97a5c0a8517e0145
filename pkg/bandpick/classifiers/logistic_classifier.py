"""
Classifieur baseline : régression softmax multinomiale, descente de gradient
plein lot.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from bandpick.classifiers.base_classifier import ClassifierBackend, TrainedModel
from bandpick.config import ClassifierKind, ClassifierSpec
from bandpick.errors import DimensionMismatchError, PreconditionError

logger = logging.getLogger(__name__)

INIT_SCALE = 0.01


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp_scores = np.exp(shifted)
    return exp_scores / exp_scores.sum(axis=1, keepdims=True)


def one_hot(y: np.ndarray, n_classes: int) -> np.ndarray:
    encoded = np.zeros((y.shape[0], n_classes))
    encoded[np.arange(y.shape[0]), y] = 1.0
    return encoded


def softmax_loss_and_grad(
    weights: np.ndarray,
    biases: np.ndarray,
    X: np.ndarray,
    Y: np.ndarray,
    l2: float,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Entropie croisée moyenne + (l2/2)·||W||² et son gradient analytique.

    Returns:
        (loss, dL/dW de forme F×C, dL/db de forme C)
    """
    n = X.shape[0]
    probabilities = softmax(X @ weights + biases)
    log_likelihood = np.log(np.clip(np.sum(probabilities * Y, axis=1), 1e-300, None))
    loss = -log_likelihood.mean() + 0.5 * l2 * float(np.sum(weights ** 2))

    residual = (probabilities - Y) / n
    grad_weights = X.T @ residual + l2 * weights
    grad_biases = residual.sum(axis=0)
    return float(loss), grad_weights, grad_biases


def _step_size(X: np.ndarray, learning_rate: float, l2: float) -> float:
    # borne de lissage de la perte : 0.5·λmax([X 1]ᵀ[X 1] / n) + l2
    design = np.hstack([X, np.ones((X.shape[0], 1))])
    smoothness = 0.5 * np.linalg.norm(design, ord=2) ** 2 / X.shape[0] + l2
    return learning_rate / max(1.0, smoothness)


def train(spec: ClassifierSpec, X: np.ndarray, y: np.ndarray, n_classes: Optional[int] = None) -> TrainedModel:
    """
    Ajuste une régression softmax par descente de gradient plein lot.

    Déterministe pour une graine donnée ; la perte d'entraînement ne croît pas
    d'une époque à l'autre.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"X {X.shape} incompatible avec y {y.shape}")
    if not np.all(np.isfinite(X)):
        raise PreconditionError("Features non finies")
    if np.unique(y).size < 2:
        raise PreconditionError("Au moins 2 classes sont requises pour l'entraînement")

    n_classes = int(y.max()) + 1 if n_classes is None else n_classes
    rng = np.random.default_rng(spec.seed)
    weights = rng.normal(0.0, INIT_SCALE, size=(X.shape[1], n_classes))
    biases = np.zeros(n_classes)
    Y = one_hot(y, n_classes)
    step = _step_size(X, spec.learning_rate, spec.l2)

    history = []
    for _ in range(spec.epochs):
        loss, grad_weights, grad_biases = softmax_loss_and_grad(weights, biases, X, Y, spec.l2)
        history.append(loss)
        weights = weights - step * grad_weights
        biases = biases - step * grad_biases
    history.append(softmax_loss_and_grad(weights, biases, X, Y, spec.l2)[0])

    logger.debug(f"📈 Softmax entraînée: perte {history[0]:.4f} → {history[-1]:.4f} ({spec.epochs} époques)")
    return TrainedModel(ClassifierKind.LOGISTIC_BASELINE.value, weights, biases, loss_history=tuple(history))


def predict(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Argmax des scores de classe ; en cas d'égalité, la plus petite classe."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise DimensionMismatchError(f"{X.shape[1]} features pour un modèle à {model.n_features}")
    scores = X @ model.weights + model.biases
    return np.argmax(scores, axis=1)


class LogisticBaseline(ClassifierBackend):
    """Backend par défaut de GSS."""

    def __init__(self, spec: ClassifierSpec):
        super().__init__(
            spec,
            name=ClassifierKind.LOGISTIC_BASELINE.value,
            description="Régression softmax multinomiale (descente de gradient plein lot)",
        )

    def fit_predict(self, X_train, y_train, X_val, n_classes):
        model = train(self.spec, X_train, y_train, n_classes)
        return predict(model, X_val)
