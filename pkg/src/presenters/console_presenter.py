"""Presenter para interface console com Rich."""

import math
from typing import Any, Dict, List, Optional

from rich.console import Console
from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskID, TextColumn, TimeElapsedColumn
from rich.table import Table
from rich.text import Text

from ..models.dataset import LTDataset
from ..models.diagnostics import DivergenceResult, EntropySummary, FeatureRankResult, LocalityProfile
from ..models.training_results import EpochMetrics, EvaluationResult, GroupAccuracy, TeacherEpochMetrics

PHASE_TITLES = {"teacher": "Professor", "student": "Estudante", "crt": "cRT"}


def _pct(value: float) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    return f"{value:.1%}"


def _pct_pm(mean: float, stderr: float) -> str:
    if stderr is None or (isinstance(stderr, float) and math.isnan(stderr)):
        return _pct(mean)
    return f"{_pct(mean)} ± {stderr * 100:.1f}"


class ConsolePresenter:
    """Presenter para apresentação no console usando Rich."""

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()
        self._progress: Optional[Progress] = None
        self._tasks: Dict[str, TaskID] = {}

    def show_header(self, command: str, title: str = "DeiT-LT"):
        """Exibe cabeçalho da aplicação."""
        header_text = Text(f"{title} · {command}", style="bold cyan")
        self.console.print(Panel(header_text, title="Destilação para cauda longa", border_style="blue"))
        self.console.print()

    def show_dataset(self, dataset: LTDataset, digest: Optional[str] = None):
        """Tabela com contagem e grupo de cada classe."""
        table = Table(title=f"Split long-tailed (rho={dataset.rho:g})", border_style="cyan")
        table.add_column("Classe", justify="right", style="cyan")
        table.add_column("Imagens", justify="right")
        table.add_column("Grupo")
        group_styles = {"Head": "green", "Mid": "yellow", "Tail": "red"}
        for class_index, count, group in dataset.manifest_rows():
            style = group_styles.get(group, "white")
            table.add_row(str(class_index), str(count), f"[{style}]{group}[/{style}]")
        self.console.print(table)
        summary = f"{dataset.size} imagens de treino, fator efetivo {dataset.imbalance_ratio:.1f}"
        if digest:
            summary += f"\nSHA-256: {digest}"
        self.console.print(summary, style="dim")
        self.console.print()

    # Progresso por época

    def create_progress_bar(self) -> Progress:
        """Cria barra de progresso."""
        self._progress = Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TextColumn("[progress.percentage]{task.percentage:>3.0f}%"),
            TimeElapsedColumn(),
            console=self.console,
        )
        self._tasks = {}
        return self._progress

    def stop_progress(self):
        if self._progress:
            self._progress.stop()
            self._progress = None
            self._tasks = {}

    def on_epoch(self, phase: str, epoch: int, total: int, record: Any):
        """Callback dos serviços de treino: avança a barra da fase."""
        if not self._progress:
            return
        if phase not in self._tasks:
            self._tasks[phase] = self._progress.add_task(PHASE_TITLES.get(phase, phase), total=total)
        description = f"{PHASE_TITLES.get(phase, phase)} {epoch}/{total}"
        if isinstance(record, EpochMetrics):
            description += f" · acc {record.acc_avg:.3f}"
        elif isinstance(record, TeacherEpochMetrics):
            description += f" · acc {record.acc:.3f}"
        self._progress.update(self._tasks[phase], completed=epoch, description=description)

    # Tabelas

    def show_epoch_table(self, records: List[Any], title: str = "Métricas por época", last: int = 10):
        """Últimas épocas de um treino de professor ou estudante."""
        if not records:
            self.show_warning("Nenhuma época executada")
            return
        columns = type(records[0]).columns()
        table = Table(title=title, border_style="green")
        for name in columns:
            table.add_column(name, justify="right", style="cyan" if name == "epoch" else None)
        for record in records[-last:]:
            row = record.to_row()
            cells = []
            for name in columns:
                value = row[name]
                if name == "epoch":
                    cells.append(str(value))
                elif name == "lr":
                    cells.append(f"{value:.2e}")
                elif isinstance(value, float) and math.isnan(value):
                    cells.append("-")
                else:
                    cells.append(f"{value:.4f}")
            table.add_row(*cells)
        self.console.print(table)
        self.console.print()

    def _accuracy_row(self, table: Table, name: str, acc: GroupAccuracy):
        table.add_row(name, _pct(acc.overall), _pct(acc.head), _pct(acc.mid), _pct(acc.tail))

    def show_evaluation(self, result: EvaluationResult, title: Optional[str] = None):
        """Linhas avg/CLS/DIST x Overall/Head/Mid/Tail."""
        table = Table(title=title or f"Avaliação ({result.split}, {result.n_samples} imagens)",
                      border_style="blue", header_style="bold cyan")
        table.add_column("Preditor", style="cyan")
        for name in ("Overall", "Head", "Mid", "Tail"):
            table.add_column(name, justify="right")
        self._accuracy_row(table, "avg", result.averaged)
        self._accuracy_row(table, "CLS", result.cls_only)
        self._accuracy_row(table, "DIST", result.dist_only)
        self.console.print(table)
        self.console.print(f"Distância de cosseno CLS/DIST: {result.cosine_cls_dist:.4f}", style="dim")
        self.console.print()

    def show_teacher_accuracy(self, acc: GroupAccuracy):
        table = Table(title="Professor (validação)", border_style="magenta")
        table.add_column("Overall", justify="right")
        table.add_column("Head", justify="right")
        table.add_column("Mid", justify="right")
        table.add_column("Tail", justify="right")
        table.add_row(_pct(acc.overall), _pct(acc.head), _pct(acc.mid), _pct(acc.tail))
        self.console.print(table)
        self.console.print()

    def show_ablation(self, rows: List[Dict[str, Any]]):
        table = Table(title="Ablação OOD x DRW x SAM", border_style="cyan")
        for name in ("OOD", "DRW", "SAM"):
            table.add_column(name, justify="center")
        for name in ("avg", "CLS", "DIST", "Head", "Mid", "Tail"):
            table.add_column(name, justify="right")

        def mark(flag: bool) -> str:
            return "[green]✓[/green]" if flag else "[red]✗[/red]"

        for row in rows:
            table.add_row(
                mark(row["ood_distill"]), mark(row["drw"]), mark(row["sam_teacher"]),
                _pct(row["acc_avg"]), _pct(row["acc_cls"]), _pct(row["acc_dist"]),
                _pct(row["head"]), _pct(row["mid"]), _pct(row["tail"]),
            )
        self.console.print(table)
        self.console.print()

    def show_seed_summary(self, rows: List[Dict[str, Any]]):
        """Média ± erro padrão (pontos percentuais) de cada braço."""
        table = Table(title="Ablação por sementes (média ± erro padrão)", border_style="cyan")
        for name in ("OOD", "DRW", "SAM", "Sementes"):
            table.add_column(name, justify="center")
        metrics = (("acc_avg", "avg"), ("acc_cls", "CLS"), ("acc_dist", "DIST"), ("head", "Head"),
                   ("mid", "Mid"), ("tail", "Tail"))
        for _, title in metrics:
            table.add_column(title, justify="right")

        def mark(flag: bool) -> str:
            return "[green]✓[/green]" if flag else "[red]✗[/red]"

        for row in rows:
            cells = [_pct_pm(row[f"{key}_mean"], row[f"{key}_stderr"]) for key, _ in metrics]
            table.add_row(mark(row["ood_distill"]), mark(row["drw"]), mark(row["sam_teacher"]),
                          str(row["n_seeds"]), *cells)
        self.console.print(table)
        self.console.print()

    def show_locality(self, profile: LocalityProfile):
        blocks, heads = profile.distances.shape
        table = Table(title=f"Distância média de atenção (px, {profile.n_images} imagens)", border_style="blue")
        table.add_column("Bloco", style="cyan", justify="right")
        for h in range(heads):
            table.add_column(f"h{h}", justify="right")
        for b in range(blocks):
            table.add_row(str(b), *(f"{profile.distances[b, h]:.2f}" for h in range(heads)))
        self.console.print(table)
        self.console.print()

    def show_rank(self, results: List[FeatureRankResult]):
        table = Table(title="Rank das features de cauda", border_style="blue")
        table.add_column("Token", style="cyan")
        table.add_column("Bloco", justify="right")
        table.add_column("k", justify="right")
        for r in results:
            k = f"{r.k} [yellow](esgotado)[/yellow]" if r.exhausted else str(r.k)
            table.add_row(r.token_kind.value, "final" if r.block is None else str(r.block), k)
        self.console.print(table)
        self.console.print()

    def show_entropy(self, summary: EntropySummary):
        table = Table(title=f"Entropia do professor ({summary.n_samples} imagens)", border_style="magenta")
        table.add_column("Vista", style="cyan")
        table.add_column("Média (nats)", justify="right")
        table.add_column("Desvio", justify="right")
        table.add_row("fraca", f"{summary.in_mean:.4f}", f"{summary.in_std:.4f}")
        table.add_row("forte + mistura", f"{summary.ood_mean:.4f}", f"{summary.ood_std:.4f}")
        self.console.print(table)
        self.console.print()

    def show_divergence(self, result: DivergenceResult):
        self.show_info(
            f"Distância de cosseno média CLS/DIST: {result.mean_distance:.4f}\n"
            f"Linhas: {result.n_rows} (excluídas: {result.excluded})",
            "Divergência",
        )

    # Painéis

    def show_outputs(self, paths: List[str]):
        if paths:
            self.show_success("\n".join(str(p) for p in paths), "Arquivos gerados")

    def show_error(self, message: str, title: str = "Erro"):
        """Exibe mensagem de erro."""
        self.console.print(Panel(Text(message, style="red"), title=f"❌ {title}", border_style="red"))
        self.console.print()

    def show_warning(self, message: str, title: str = "Aviso"):
        self.console.print(Panel(Text(message, style="yellow"), title=f"⚠️ {title}", border_style="yellow"))
        self.console.print()

    def show_success(self, message: str, title: str = "Sucesso"):
        self.console.print(Panel(Text(message, style="green"), title=f"✅ {title}", border_style="green"))
        self.console.print()

    def show_info(self, message: str, title: str = "Informação"):
        self.console.print(Panel(Text(message, style="blue"), title=f"ℹ️ {title}", border_style="blue"))
        self.console.print()
