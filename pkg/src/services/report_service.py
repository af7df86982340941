"""Serviço para geração de relatórios (CSV, manifesto JSON e mapas PGM)."""

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

from ..exceptions import ReportGenerationError
from ..models.dataset import LTDataset
from ..models.diagnostics import DivergenceResult, EntropySummary, FeatureRankResult, LocalityProfile
from ..models.run_manifest import RunManifest
from ..models.training_results import EpochMetrics, EvaluationResult, TeacherEpochMetrics

FLOAT_FORMAT = "%.6f"

SPLIT_COLUMNS = ["class_index", "count", "group"]
EVAL_COLUMNS = ["predictor", "overall", "head", "mid", "tail"]
ABLATION_KEYS = ["ood_distill", "drw", "sam_teacher"]
ABLATION_METRICS = ["acc_avg", "acc_cls", "acc_dist", "head", "mid", "tail"]
ABLATION_COLUMNS = ["seed"] + ABLATION_KEYS + ABLATION_METRICS
SEED_SUMMARY_COLUMNS = ABLATION_KEYS + ["n_seeds"] + [
    f"{metric}_{stat}" for metric in ABLATION_METRICS for stat in ("mean", "stderr")
]
LOCALITY_COLUMNS = ["block", "head", "mean_distance_px"]
RANK_COLUMNS = ["token_kind", "k", "tol", "block"]
ENTROPY_COLUMNS = ["view", "mean_entropy_nats", "std_entropy_nats", "n_samples"]
DIVERGENCE_COLUMNS = ["token_pair", "mean_cosine_distance", "excluded_rows", "n_rows"]


def file_digest(path) -> str:
    """SHA-256 hexadecimal do conteúdo de um arquivo."""
    sha = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            sha.update(chunk)
    return sha.hexdigest()


class ReportService:
    """Serviço de escrita dos artefatos de uma execução."""

    def __init__(self, output_dir: str = "./runs", manifest: Optional[RunManifest] = None):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.manifest = manifest

    def _record(self, path: Path) -> None:
        if self.manifest is not None:
            self.manifest.record_output(path)

    def write_csv(self, rows: Iterable[Dict[str, Any]], columns: List[str], filename: str,
                  report_type: str = "CSV") -> Path:
        """Escreve linhas com cabeçalho fixo e floats em formato fixo."""
        try:
            filepath = self.output_dir / filename
            filepath.parent.mkdir(parents=True, exist_ok=True)
            frame = pd.DataFrame(list(rows), columns=columns)
            frame.to_csv(filepath, index=False, float_format=FLOAT_FORMAT,
                         encoding="utf-8", lineterminator="\n")
            self._record(filepath)
            return filepath
        except Exception as e:
            raise ReportGenerationError(report_type, str(e), e)

    def write_split_manifest(self, dataset: LTDataset, filename: str = "lt_split.csv") -> Path:
        rows = [dict(zip(SPLIT_COLUMNS, row)) for row in dataset.manifest_rows()]
        return self.write_csv(rows, SPLIT_COLUMNS, filename, "split")

    def write_student_metrics(self, records: List[EpochMetrics], filename: str = "metrics.csv") -> Path:
        return self.write_csv([r.to_row() for r in records], EpochMetrics.columns(), filename, "métricas")

    def write_teacher_metrics(self, records: List[TeacherEpochMetrics],
                              filename: str = "teacher_metrics.csv") -> Path:
        return self.write_csv([r.to_row() for r in records], TeacherEpochMetrics.columns(), filename,
                              "métricas do professor")

    def write_evaluation(self, result: EvaluationResult, filename: str = "eval.csv") -> Path:
        return self.write_csv(result.rows(), EVAL_COLUMNS, filename, "avaliação")

    def write_ablation(self, rows: List[Dict[str, Any]], filename: str = "ablation.csv") -> Path:
        return self.write_csv(rows, ABLATION_COLUMNS, filename, "ablação")

    def write_seed_summary(self, rows: List[Dict[str, Any]], filename: str = "ablation_summary.csv") -> Path:
        """Média e erro padrão (desvio amostral / sqrt(n)) de cada braço entre as sementes."""
        return self.write_csv(rows, SEED_SUMMARY_COLUMNS, filename, "resumo por sementes")

    def write_locality(self, profile: LocalityProfile, filename: str = "locality.csv") -> Path:
        blocks, heads = profile.distances.shape
        rows = [
            {"block": b, "head": h, "mean_distance_px": float(profile.distances[b, h])}
            for b in range(blocks) for h in range(heads)
        ]
        return self.write_csv(rows, LOCALITY_COLUMNS, filename, "localidade")

    def write_rank(self, results: List[FeatureRankResult], filename: str = "rank.csv") -> Path:
        rows = [
            {
                "token_kind": r.token_kind.value,
                "k": r.k,
                "tol": r.tol,
                "block": "final" if r.block is None else r.block,
            }
            for r in results
        ]
        return self.write_csv(rows, RANK_COLUMNS, filename, "rank")

    def write_entropy(self, summary: EntropySummary, filename: str = "entropy.csv") -> Path:
        rows = [
            {"view": "in_distribution", "mean_entropy_nats": summary.in_mean,
             "std_entropy_nats": summary.in_std, "n_samples": summary.n_samples},
            {"view": "ood", "mean_entropy_nats": summary.ood_mean,
             "std_entropy_nats": summary.ood_std, "n_samples": summary.n_samples},
        ]
        return self.write_csv(rows, ENTROPY_COLUMNS, filename, "entropia")

    def write_divergence(self, result: DivergenceResult, filename: str = "divergence.csv",
                         token_pair: str = "cls-dist") -> Path:
        rows = [{
            "token_pair": token_pair,
            "mean_cosine_distance": result.mean_distance,
            "excluded_rows": result.excluded,
            "n_rows": result.n_rows,
        }]
        return self.write_csv(rows, DIVERGENCE_COLUMNS, filename, "divergência")

    def write_pgm(self, saliency: np.ndarray, filename: str) -> Path:
        """Mapa em tons de cinza (PGM binário, 8 bits), escalado pelo máximo."""
        try:
            grid = np.asarray(saliency, dtype=np.float64)
            if grid.ndim != 2:
                raise ValueError(f"esperado mapa 2D, recebido shape {grid.shape}")
            peak = grid.max()
            scaled = grid / peak if peak > 0 else np.zeros_like(grid)
            pixels = np.clip(np.round(scaled * 255.0), 0, 255).astype(np.uint8)
            filepath = self.output_dir / filename
            filepath.parent.mkdir(parents=True, exist_ok=True)
            height, width = pixels.shape
            with open(filepath, "wb") as f:
                f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
                f.write(pixels.tobytes())
            self._record(filepath)
            return filepath
        except Exception as e:
            raise ReportGenerationError("PGM", str(e), e)

    def write_manifest(self, manifest: Optional[RunManifest] = None, filename: str = "manifest.json") -> Path:
        """Grava o manifesto de forma atômica (arquivo temporário + rename)."""
        manifest = manifest or self.manifest
        if manifest is None:
            raise ReportGenerationError("manifesto", "nenhum manifesto associado ao serviço")
        filepath = self.output_dir / filename
        try:
            fd, tmp_path = tempfile.mkstemp(dir=self.output_dir, prefix=".manifest-", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(manifest.to_dict(), f, indent=2, ensure_ascii=False, default=str)
            os.replace(tmp_path, filepath)
            return filepath
        except Exception as e:
            raise ReportGenerationError("manifesto", str(e), e)
