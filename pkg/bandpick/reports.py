"""
Rapports de bandpick : CSV, JSON et tracé SVG.

Les fonctions `*_frame` / `*_payload` construisent les contenus en mémoire ;
`ReportWriter` les accumule puis les écrit en une seule fois, une fois tous
les calculs terminés. Les flottants sont écrits en pleine précision (repr),
deux exécutions identiques produisent donc des fichiers identiques octet
pour octet et chaque CSV se relit sans perte.
"""
import io
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from bandpick.collinearity import IbraResult
from bandpick.crossval import METRIC_NAMES, MetricsReport
from bandpick.datacube import WavelengthAxis
from bandpick.errors import BandpickError, CubeFormatError
from bandpick.saliency import EntropyRanking
from bandpick.selection import SelectionReport
from bandpick.sensorsim import FilterBank

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

IBRA_COLUMNS = ["band_index", "wavelength_nm", "d_left", "d_right", "d", "is_candidate"]
RANKING_COLUMNS = ["band_index", "wavelength_nm", "entropy_bits", "rank"]

# noms courts des métriques dans les rapports
METRIC_LABELS = {
    "oa": "oa",
    "macro_precision": "prec",
    "macro_recall": "rec",
    "macro_f1": "f1",
}


# ═══════════════════════════════════════════════════════════
# IBRA
# ═══════════════════════════════════════════════════════════

def ibra_frame(result: IbraResult, axis: WavelengthAxis) -> pd.DataFrame:
    if result.bands != len(axis):
        raise BandpickError(f"IBRA sur {result.bands} bandes, axe de {len(axis)}")
    candidates = set(result.candidates)
    return pd.DataFrame({
        "band_index": np.arange(result.bands),
        "wavelength_nm": axis.as_array(),
        "d_left": result.d_left,
        "d_right": result.d_right,
        "d": result.d,
        "is_candidate": [band in candidates for band in range(result.bands)],
    })


def read_ibra_csv(path: PathLike) -> pd.DataFrame:
    frame = _read_csv(path)
    if list(frame.columns) != IBRA_COLUMNS:
        raise CubeFormatError(f"{path}: colonnes {IBRA_COLUMNS} attendues")
    return frame


def ranking_frame(ranking: EntropyRanking, axis: WavelengthAxis) -> pd.DataFrame:
    return pd.DataFrame({
        "band_index": list(ranking.band_index),
        "wavelength_nm": [axis[b] for b in ranking.band_index],
        "entropy_bits": list(ranking.entropy_bits),
        "rank": np.arange(1, len(ranking) + 1),
    })


def read_ranking_csv(path: PathLike) -> pd.DataFrame:
    frame = _read_csv(path)
    if list(frame.columns) != RANKING_COLUMNS:
        raise CubeFormatError(f"{path}: colonnes {RANKING_COLUMNS} attendues")
    return frame


# ═══════════════════════════════════════════════════════════
# SÉLECTION
# ═══════════════════════════════════════════════════════════

def metrics_payload(metrics: MetricsReport) -> dict:
    """{oa, prec, rec, f1, std: {...}, per_fold: [...]}"""
    std = metrics.std()
    payload = {METRIC_LABELS[name]: getattr(metrics, name) for name in METRIC_NAMES}
    payload["std"] = {METRIC_LABELS[name]: std[name] for name in METRIC_NAMES}
    payload["per_fold"] = [
        {METRIC_LABELS[name]: getattr(fold, name) for name in METRIC_NAMES}
        for fold in metrics.per_fold
    ]
    return payload


def selection_payload(report: SelectionReport) -> dict:
    return {
        "k": report.k,
        "theta": report.theta,
        "n_bands": report.n_bands,
        "candidates": report.candidates,
        "selected_bands": report.selected,
        "selected_wavelengths_nm": report.selected_wavelengths_nm,
        "best_f1": report.best_f1,
        "metrics": metrics_payload(report.metrics) if report.metrics is not None else None,
        "trace": [
            {"state": step.state, "removed": step.removed, "added": step.added, "f1": step.f1}
            for step in report.trace
        ],
        "warnings": report.warnings,
        "empty": report.empty,
    }


def read_selection_json(path: PathLike) -> dict:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise BandpickError(f"Lecture impossible de {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise CubeFormatError(f"{path}: JSON invalide ({e})") from e
    for key in ("k", "n_bands", "selected_bands"):
        if key not in payload:
            raise CubeFormatError(f"{path}: champ '{key}' manquant")
    return payload


def sweep_table_frame(reports: Sequence[SelectionReport]) -> pd.DataFrame:
    """
    Une ligne par θ : longueurs d'onde retenues puis OA/Prec/Rec/F1 avec leur
    écart-type sur les plis. Les θ sans candidate ont des métriques vides.
    """
    rows = []
    for report in reports:
        row = {
            "theta": report.theta,
            "k": report.k,
            "selected_bands": " ".join(str(b) for b in report.selected),
            "selected_wavelengths_nm": " ".join(repr(w) for w in report.selected_wavelengths_nm),
        }
        std = report.metrics.std() if report.metrics is not None else {}
        for name in METRIC_NAMES:
            label = METRIC_LABELS[name]
            row[label] = getattr(report.metrics, name) if report.metrics is not None else np.nan
            row[f"{label}_std"] = std.get(name, np.nan)
        rows.append(row)
    return pd.DataFrame(rows)


def read_table_csv(path: PathLike) -> pd.DataFrame:
    return _read_csv(path, keep_default_na=True, dtype={"selected_bands": str, "selected_wavelengths_nm": str})


def evaluation_frame(labelled_metrics: Dict[str, MetricsReport]) -> pd.DataFrame:
    """Une ligne par configuration évaluée (moyenne ± écart-type)."""
    rows = []
    for name, metrics in labelled_metrics.items():
        std = metrics.std()
        row = {"configuration": name}
        for metric in METRIC_NAMES:
            label = METRIC_LABELS[metric]
            row[label] = getattr(metrics, metric)
            row[f"{label}_std"] = std[metric]
        rows.append(row)
    return pd.DataFrame(rows)


# ═══════════════════════════════════════════════════════════
# BANC DE FILTRES
# ═══════════════════════════════════════════════════════════

def filter_bank_frame(bank: FilterBank) -> pd.DataFrame:
    frame = pd.DataFrame(bank.weights, columns=[f"b{n}" for n in range(bank.bands)])
    frame.insert(0, "fwhm_bands", bank.fwhm_bands)
    frame.insert(0, "center_wavelength_nm", list(bank.center_wavelengths_nm))
    frame.insert(0, "center_band", list(bank.centers))
    return frame


def read_filter_bank_csv(path: PathLike) -> FilterBank:
    frame = _read_csv(path)
    weight_columns = [c for c in frame.columns if c.startswith("b") and c[1:].isdigit()]
    if not {"center_band", "center_wavelength_nm", "fwhm_bands"} <= set(frame.columns) or not weight_columns:
        raise CubeFormatError(f"{path}: CSV de banc de filtres invalide")
    return FilterBank(
        centers=tuple(int(c) for c in frame["center_band"]),
        center_wavelengths_nm=tuple(float(w) for w in frame["center_wavelength_nm"]),
        fwhm_bands=float(frame["fwhm_bands"].iloc[0]),
        weights=frame[weight_columns].to_numpy(dtype=np.float64),
    )


# ═══════════════════════════════════════════════════════════
# TRACÉ SVG
# ═══════════════════════════════════════════════════════════

SVG_WIDTH, SVG_HEIGHT = 720, 360
SVG_MARGIN = 50
TICKS = 5


def render_distance_svg(frame: pd.DataFrame, title: str = "") -> str:
    """
    Tracé de d en fonction de la longueur d'onde (polyligne) avec un '×'
    sur chaque bande candidate. `frame` a les colonnes d'un CSV IBRA.
    """
    wavelengths = frame["wavelength_nm"].to_numpy(dtype=np.float64)
    distances = frame["d"].to_numpy(dtype=np.float64)
    candidates = frame["is_candidate"].to_numpy(dtype=bool)

    x_lo, x_hi = float(wavelengths.min()), float(wavelengths.max())
    y_hi = max(float(distances.max()), 1.0)
    plot_w = SVG_WIDTH - 2 * SVG_MARGIN
    plot_h = SVG_HEIGHT - 2 * SVG_MARGIN

    def sx(value: float) -> float:
        if x_hi == x_lo:
            return SVG_MARGIN + plot_w / 2
        return SVG_MARGIN + (value - x_lo) / (x_hi - x_lo) * plot_w

    def sy(value: float) -> float:
        return SVG_HEIGHT - SVG_MARGIN - value / y_hi * plot_h

    x0, y0 = SVG_MARGIN, SVG_HEIGHT - SVG_MARGIN
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">',
        f'<rect width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0 + plot_w}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y0 - plot_h}" stroke="black"/>',
    ]
    for tick in range(TICKS + 1):
        x_value = x_lo + (x_hi - x_lo) * tick / TICKS
        y_value = y_hi * tick / TICKS
        parts.append(f'<text x="{sx(x_value):.2f}" y="{y0 + 18}" font-size="11" '
                     f'text-anchor="middle">{x_value:.0f}</text>')
        parts.append(f'<text x="{x0 - 8}" y="{sy(y_value) + 4:.2f}" font-size="11" '
                     f'text-anchor="end">{y_value:.1f}</text>')

    points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(wavelengths, distances))
    parts.append(f'<polyline points="{points}" fill="none" stroke="steelblue" stroke-width="1.5"/>')
    for x, y in zip(wavelengths[candidates], distances[candidates]):
        parts.append(f'<text x="{sx(x):.2f}" y="{sy(y) + 5:.2f}" font-size="16" fill="crimson" '
                     f'text-anchor="middle" class="candidate">×</text>')

    parts.append(f'<text x="{x0 + plot_w / 2:.2f}" y="{SVG_HEIGHT - 12}" font-size="12" '
                 f'text-anchor="middle">Longueur d\'onde (nm)</text>')
    parts.append(f'<text x="14" y="{y0 - plot_h / 2:.2f}" font-size="12" text-anchor="middle" '
                 f'transform="rotate(-90 14 {y0 - plot_h / 2:.2f})">d</text>')
    if title:
        parts.append(f'<text x="{SVG_WIDTH / 2:.2f}" y="24" font-size="14" '
                     f'text-anchor="middle">{title}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ═══════════════════════════════════════════════════════════
# ÉCRITURE
# ═══════════════════════════════════════════════════════════

def _read_csv(path: PathLike, **kwargs) -> pd.DataFrame:
    try:
        return pd.read_csv(path, **kwargs)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise BandpickError(f"Lecture impossible de {path}: {e}") from e


class ReportWriter:
    """
    Accumule les fichiers de sortie puis les écrit d'un seul coup dans
    `out_dir` (créé si besoin). Un fichier existant est écrasé.
    """

    def __init__(self, out_dir: PathLike):
        self.out_dir = Path(out_dir)
        self._pending: Dict[str, str] = {}

    def add_csv(self, name: str, frame: pd.DataFrame) -> None:
        buffer = io.StringIO()
        frame.to_csv(buffer, index=False, lineterminator="\n")
        self._pending[name] = buffer.getvalue()

    def add_json(self, name: str, payload) -> None:
        self._pending[name] = json.dumps(payload, indent=2, ensure_ascii=False) + "\n"

    def add_text(self, name: str, text: str) -> None:
        self._pending[name] = text

    @property
    def names(self) -> List[str]:
        return list(self._pending)

    def flush(self) -> List[Path]:
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            written = []
            for name, content in self._pending.items():
                path = self.out_dir / name
                path.write_text(content, encoding="utf-8")
                written.append(path)
        except OSError as e:
            raise BandpickError(f"Écriture impossible dans {self.out_dir}: {e}") from e
        self._pending.clear()
        logger.info(f"💾 {len(written)} fichier(s) écrit(s) dans {self.out_dir}")
        return written


def bands_from_text(text: Optional[str]) -> List[int]:
    """'3 9' ou '3,9' -> [3, 9]"""
    if text is None or (isinstance(text, float) and np.isnan(text)):
        return []
    return [int(token) for token in str(text).replace(",", " ").split()]
