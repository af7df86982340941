"""Gerenciador de configurações de treino."""

import os
import typing
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml

from ..exceptions import ConfigurationError

STUDENT_DRW_FRACTION = 0.9
TEACHER_DRW_FRACTION = 0.8

REGIMES = ("deit_lt", "deit", "vit")
TEACHER_OPTIMIZERS = ("sgd", "adamw")
DATASET_KINDS = ("cifar10", "cifar100", "generic")
ROLLOUT_TARGETS = ("cls", "dist", "mean")
WARMUP_SECTIONS = ("student", "teacher")

# Escala da receita de referência em CIFAR (DeiT-S, 1200 épocas)
REFERENCE_SCALE = {
    "student.epochs": 1200,
    "teacher.epochs": 200,
    "student_model": (384, 12, 6),
}


@dataclass
class DatasetSettings:
    """Construção do split long-tailed."""
    kind: str = "cifar10"
    rho: float = 100.0
    n_max: int = 5000
    head_threshold: int = 100
    tail_threshold: int = 20


@dataclass
class StudentModelSettings:
    """Arquitetura do ViT estudante."""
    image_size: int = 32
    patch_size: int = 4
    embed_dim: int = 128
    depth: int = 6
    n_heads: int = 4
    mlp_ratio: float = 4.0
    dist_token: bool = True


@dataclass
class TeacherModelSettings:
    """Arquitetura da ResNet professora."""
    blocks_per_stage: int = 5
    widths: List[int] = field(default_factory=lambda: [16, 32, 64])


@dataclass
class StudentSettings:
    """Treino do estudante (AdamW + cosseno)."""
    regime: str = "deit_lt"
    epochs: int = 100
    batch_size: int = 128
    lr: float = 5e-4
    min_lr: float = 1e-5
    warmup_epochs: int = 5
    weight_decay: float = 0.05
    betas: List[float] = field(default_factory=lambda: [0.9, 0.999])
    eps: float = 1e-8
    label_smoothing: float = 0.1
    checkpoint_every: int = 10


@dataclass
class TeacherSettings:
    """Treino do professor (LDAM + DRW, opcionalmente com SAM)."""
    optimizer: str = "sgd"
    epochs: int = 200
    batch_size: int = 128
    lr: float = 0.1
    min_lr: float = 0.0
    warmup_epochs: int = 5
    momentum: float = 0.9
    weight_decay: float = 2e-4
    checkpoint_every: int = 20


@dataclass
class AugmentationSettings:
    """Receita forte do estudante e política de mistura."""
    mixup_alpha: float = 0.8
    cutmix_alpha: float = 1.0
    switch_prob: float = 0.5
    mix_during_drw: bool = False
    crop_prob: float = 1.0
    crop_scale: List[float] = field(default_factory=lambda: [0.08, 1.0])
    crop_ratio: List[float] = field(default_factory=lambda: [0.75, 1.3333333])
    flip_prob: float = 0.5
    jitter_prob: float = 1.0
    jitter_strength: float = 0.3
    erase_prob: float = 0.25
    erase_area: List[float] = field(default_factory=lambda: [0.02, 0.3333333])
    erase_ratio: List[float] = field(default_factory=lambda: [0.3, 3.3])
    solarize_prob: float = 0.0
    grayscale_prob: float = 0.0
    auto_augment: bool = False
    repeated_augment: bool = False


@dataclass
class DRWSettings:
    """Re-ponderação adiada."""
    beta: float = 0.9999
    student_epoch: Optional[int] = None
    teacher_epoch: Optional[int] = None
    normalize: bool = False
    teacher_normalize: bool = True


@dataclass
class LDAMSettings:
    max_margin: float = 0.5
    scale: float = 30.0


@dataclass
class SAMSettings:
    rho: float = 0.05


@dataclass
class AblationSettings:
    """Chaves independentes do estudo de ablação."""
    ood_distill: bool = True
    drw: bool = True
    sam_teacher: bool = True


@dataclass
class CRTSettings:
    """Re-treino balanceado das cabeças."""
    epochs: int = 10
    batch_size: int = 128
    lr: float = 1e-3
    weight_decay: float = 0.0
    label_smoothing: float = 0.1


@dataclass
class DiagnosticsSettings:
    n_samples: int = 1000
    rank_tol: float = 0.01
    rollout_target: Union[str, int] = "cls"
    rollout_images: int = 4
    batch_size: int = 256


@dataclass
class RuntimeSettings:
    seed: int = 0
    workers: int = 1
    prefetch: int = 2
    log_level: str = "INFO"


@dataclass
class OutputSettings:
    data_dir: Optional[str] = None
    out_dir: Optional[str] = None


@dataclass
class TrainConfig:
    """Todos os hiperparâmetros de uma execução, validados."""
    dataset: DatasetSettings = field(default_factory=DatasetSettings)
    student_model: StudentModelSettings = field(default_factory=StudentModelSettings)
    teacher_model: TeacherModelSettings = field(default_factory=TeacherModelSettings)
    student: StudentSettings = field(default_factory=StudentSettings)
    teacher: TeacherSettings = field(default_factory=TeacherSettings)
    augmentation: AugmentationSettings = field(default_factory=AugmentationSettings)
    drw: DRWSettings = field(default_factory=DRWSettings)
    ldam: LDAMSettings = field(default_factory=LDAMSettings)
    sam: SAMSettings = field(default_factory=SAMSettings)
    ablation: AblationSettings = field(default_factory=AblationSettings)
    crt: CRTSettings = field(default_factory=CRTSettings)
    diagnostics: DiagnosticsSettings = field(default_factory=DiagnosticsSettings)
    runtime: RuntimeSettings = field(default_factory=RuntimeSettings)
    output: OutputSettings = field(default_factory=OutputSettings)

    @property
    def student_drw_epoch(self) -> int:
        if self.drw.student_epoch is not None:
            return self.drw.student_epoch
        return int(STUDENT_DRW_FRACTION * self.student.epochs)

    @property
    def teacher_drw_epoch(self) -> int:
        if self.drw.teacher_epoch is not None:
            return self.drw.teacher_epoch
        return int(TEACHER_DRW_FRACTION * self.teacher.epochs)

    @property
    def data_dir(self) -> Path:
        return Path(self.output.data_dir or "./data")

    @property
    def out_dir(self) -> Path:
        return Path(self.output.out_dir or "./runs")

    def to_dict(self) -> Dict[str, Any]:
        return _to_dict(self)

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]]) -> "TrainConfig":
        """Constrói a partir de um dicionário aninhado; chaves ausentes ficam no padrão."""
        return _from_dict(cls, data or {}, "")

    def validation_errors(self) -> List[str]:
        """Lista de problemas no formato 'chave.pontuada: motivo'."""
        errors: List[str] = []

        def check(condition: bool, key: str, reason: str):
            if not condition:
                errors.append(f"{key}: {reason}")

        d, sm, st, te = self.dataset, self.student_model, self.student, self.teacher
        check(d.kind in DATASET_KINDS, "dataset.kind", f"deve ser um de {DATASET_KINDS}")
        check(d.rho >= 1, "dataset.rho", "deve ser >= 1")
        check(d.n_max > 0, "dataset.n_max", "deve ser positivo")
        check(0 <= d.tail_threshold <= d.head_threshold, "dataset.tail_threshold",
              "deve estar entre 0 e dataset.head_threshold")

        check(sm.patch_size > 0 and sm.image_size % sm.patch_size == 0,
              "student_model.patch_size", f"deve dividir image_size={sm.image_size}")
        check(sm.embed_dim > 0 and sm.n_heads > 0 and sm.embed_dim % sm.n_heads == 0,
              "student_model.embed_dim", "deve ser múltiplo positivo de n_heads")
        check(sm.depth > 0, "student_model.depth", "deve ser positivo")
        check(sm.mlp_ratio > 0, "student_model.mlp_ratio", "deve ser positivo")
        check(self.teacher_model.blocks_per_stage > 0, "teacher_model.blocks_per_stage", "deve ser positivo")
        check(len(self.teacher_model.widths) == 3 and all(w > 0 for w in self.teacher_model.widths),
              "teacher_model.widths", "exige três larguras positivas")

        for prefix, run in (("student", st), ("teacher", te), ("crt", self.crt)):
            check(run.epochs >= 0, f"{prefix}.epochs", "não pode ser negativo")
            check(run.batch_size > 0, f"{prefix}.batch_size", "deve ser positivo")
            check(run.lr > 0, f"{prefix}.lr", "deve ser positivo")
            check(run.weight_decay >= 0, f"{prefix}.weight_decay", "não pode ser negativo")
        for prefix, run in (("student", st), ("teacher", te)):
            check(run.warmup_epochs >= 0, f"{prefix}.warmup_epochs", "não pode ser negativo")
            check(run.epochs == 0 or run.warmup_epochs < run.epochs, f"{prefix}.warmup_epochs",
                  f"deve ser menor que {prefix}.epochs={run.epochs}")
            check(0 <= run.min_lr <= run.lr, f"{prefix}.min_lr", "deve estar em [0, lr]")
            check(run.checkpoint_every > 0, f"{prefix}.checkpoint_every", "deve ser positivo")
        check(st.regime in REGIMES, "student.regime", f"deve ser um de {REGIMES}")
        check(len(st.betas) == 2 and all(0 <= b < 1 for b in st.betas), "student.betas",
              "exige dois valores em [0, 1)")
        check(te.optimizer in TEACHER_OPTIMIZERS, "teacher.optimizer", f"deve ser um de {TEACHER_OPTIMIZERS}")
        for key, eps in (("student.label_smoothing", st.label_smoothing),
                         ("crt.label_smoothing", self.crt.label_smoothing)):
            check(0 <= eps < 1, key, "deve estar em [0, 1)")

        a = self.augmentation
        check(a.mixup_alpha >= 0, "augmentation.mixup_alpha", "não pode ser negativo")
        check(a.cutmix_alpha >= 0, "augmentation.cutmix_alpha", "não pode ser negativo")
        for name in ("switch_prob", "crop_prob", "flip_prob", "jitter_prob", "erase_prob",
                     "solarize_prob", "grayscale_prob"):
            check(0 <= getattr(a, name) <= 1, f"augmentation.{name}", "probabilidade fora de [0, 1]")
        check(a.jitter_strength >= 0, "augmentation.jitter_strength", "não pode ser negativo")
        for name in ("crop_scale", "crop_ratio", "erase_area", "erase_ratio"):
            bounds = getattr(a, name)
            check(len(bounds) == 2 and 0 < bounds[0] <= bounds[1], f"augmentation.{name}",
                  "exige intervalo [min, max] positivo")

        check(0 < self.drw.beta < 1, "drw.beta", "deve estar em (0, 1)")
        check(self.student_drw_epoch >= 0 and self.student_drw_epoch <= st.epochs, "drw.student_epoch",
              f"{self.student_drw_epoch} excede student.epochs={st.epochs}")
        check(self.teacher_drw_epoch >= 0 and self.teacher_drw_epoch <= te.epochs, "drw.teacher_epoch",
              f"{self.teacher_drw_epoch} excede teacher.epochs={te.epochs}")
        check(self.ldam.max_margin >= 0, "ldam.max_margin", "não pode ser negativo")
        check(self.ldam.scale > 0, "ldam.scale", "deve ser positivo")
        check(self.sam.rho >= 0, "sam.rho", "não pode ser negativo")

        dg = self.diagnostics
        check(dg.n_samples > 0, "diagnostics.n_samples", "deve ser positivo")
        check(0 < dg.rank_tol < 1, "diagnostics.rank_tol", "deve estar em (0, 1)")
        check(isinstance(dg.rollout_target, int) or dg.rollout_target in ROLLOUT_TARGETS,
              "diagnostics.rollout_target", f"deve ser inteiro ou um de {ROLLOUT_TARGETS}")
        check(dg.rollout_images > 0, "diagnostics.rollout_images", "deve ser positivo")
        check(dg.batch_size > 0, "diagnostics.batch_size", "deve ser positivo")

        check(self.runtime.workers >= 1, "runtime.workers", "deve ser >= 1")
        check(self.runtime.prefetch >= 1, "runtime.prefetch", "deve ser >= 1")
        return errors

    def deviations(self) -> List[str]:
        """Notas de escala gravadas no manifesto (diferenças da receita de referência)."""
        notes = []
        ref = REFERENCE_SCALE
        if self.student.epochs < ref["student.epochs"]:
            notes.append(f"student.epochs={self.student.epochs} (referência {ref['student.epochs']})")
        if self.teacher.epochs < ref["teacher.epochs"]:
            notes.append(f"teacher.epochs={self.teacher.epochs} (referência {ref['teacher.epochs']})")
        sm = self.student_model
        if (sm.embed_dim, sm.depth, sm.n_heads) != ref["student_model"]:
            notes.append(
                f"ViT {sm.embed_dim}d x {sm.depth} blocos x {sm.n_heads} cabeças "
                f"(referência {ref['student_model'][0]}d x {ref['student_model'][1]} x {ref['student_model'][2]})"
            )
        if self.augmentation.auto_augment:
            notes.append("augmentation.auto_augment pedido: substituído por jitter de cor + apagamento")
        if self.augmentation.repeated_augment:
            notes.append("augmentation.repeated_augment pedido: não implementado, amostragem simples")
        if self.drw.normalize:
            notes.append("drw.normalize=true: pesos DRW reescalados para média 1")
        notes.append("professor e estudante compartilham a normalização do split LT")
        return notes

    def validate(self) -> "TrainConfig":
        errors = self.validation_errors()
        if errors:
            key, reason = errors[0].split(": ", 1)
            raise ConfigurationError(key, reason)
        return self


def _to_dict(obj) -> Dict[str, Any]:
    result = {}
    for f in fields(obj):
        value = getattr(obj, f.name)
        if is_dataclass(value):
            result[f.name] = _to_dict(value)
        elif isinstance(value, list):
            result[f.name] = list(value)
        else:
            result[f.name] = value
    return result


def _from_dict(cls, data: Mapping[str, Any], prefix: str):
    if not isinstance(data, Mapping):
        raise ConfigurationError(prefix.rstrip(".") or "<raiz>", "esperado um mapeamento")
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigurationError(f"{prefix}{key}", "chave desconhecida")
    hints = typing.get_type_hints(cls)
    values = {}
    for name, value in data.items():
        dotted = f"{prefix}{name}"
        annotation = hints[name]
        if is_dataclass(annotation):
            values[name] = _from_dict(annotation, value or {}, f"{dotted}.")
        else:
            values[name] = _coerce(dotted, value, annotation)
    return cls(**values)


def _coerce(dotted: str, value: Any, annotation) -> Any:
    """Converte valores do YAML para o tipo declarado do campo."""
    origin = typing.get_origin(annotation)
    if origin is Union:
        options = [a for a in typing.get_args(annotation) if a is not type(None)]
        if value is None and len(options) < len(typing.get_args(annotation)):
            return None
        for option in options:
            try:
                return _coerce(dotted, value, option)
            except ConfigurationError:
                continue
        raise ConfigurationError(dotted, f"valor {value!r} incompatível com {annotation}")
    if origin in (list, List):
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(dotted, f"esperada uma lista, recebido {value!r}")
        (item_type,) = typing.get_args(annotation) or (Any,)
        return [_coerce(f"{dotted}[{i}]", v, item_type) for i, v in enumerate(value)]
    if annotation is bool:
        if isinstance(value, bool):
            return value
        raise ConfigurationError(dotted, f"esperado booleano, recebido {value!r}")
    if annotation in (int, float):
        if isinstance(value, bool):
            raise ConfigurationError(dotted, f"esperado número, recebido {value!r}")
        try:
            # PyYAML lê "5e-4" como string
            number = float(value) if isinstance(value, str) else value
            if annotation is int:
                if isinstance(number, float) and not number.is_integer():
                    raise ValueError(value)
                return int(number)
            return float(number)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(dotted, f"esperado {annotation.__name__}, recebido {value!r}", e)
    if annotation is str:
        if isinstance(value, str):
            return value
        raise ConfigurationError(dotted, f"esperado texto, recebido {value!r}")
    return value


def _deep_update(base: Dict[str, Any], updates: Mapping[str, Any]) -> Dict[str, Any]:
    for key, value in updates.items():
        if isinstance(value, Mapping) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


class ConfigManager:
    """Carrega, mescla, valida e salva configurações YAML."""

    PACKAGED_CONFIG = Path(__file__).parent / "default_config.yaml"
    ENV_DATA_DIR = "TDLT_DATA_DIR"
    ENV_OUT_DIR = "TDLT_OUT_DIR"

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = Path(config_path) if config_path else self._get_default_config_path()
        self._config_data: Dict[str, Any] = {}
        self.load_config()

    def _get_default_config_path(self) -> Path:
        """Obtém o caminho padrão do arquivo de configuração."""
        local = Path.cwd() / "deit_lt.yaml"
        return local if local.exists() else self.PACKAGED_CONFIG

    def load_config(self):
        """Carrega configurações do arquivo YAML."""
        if not self.config_path.exists():
            raise ConfigurationError("arquivo_config", f"arquivo não encontrado: {self.config_path}")
        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigurationError(
                setting="arquivo_config",
                reason=f"Erro ao parsear YAML: {str(e)}",
                original_exception=e
            )
        except OSError as e:
            raise ConfigurationError(
                setting="arquivo_config",
                reason=f"Erro ao carregar configuração: {str(e)}",
                original_exception=e
            )
        if data is not None and not isinstance(data, dict):
            raise ConfigurationError("arquivo_config", "o documento YAML deve ser um mapeamento")
        self._config_data = data or {}

    def save_config(self, config_path: Optional[str] = None) -> Path:
        """Salva configurações no arquivo YAML."""
        target_path = Path(config_path) if config_path else self.config_path
        try:
            target_path.parent.mkdir(parents=True, exist_ok=True)
            with open(target_path, "w", encoding="utf-8") as f:
                yaml.safe_dump(self._config_data, f, default_flow_style=False,
                               allow_unicode=True, sort_keys=False)
        except OSError as e:
            raise ConfigurationError(
                setting="salvar_config",
                reason=f"Erro ao salvar configuração: {str(e)}",
                original_exception=e
            )
        return target_path

    def update_setting(self, dotted_key: str, value: Any):
        """Atualiza uma chave pontuada, por exemplo 'dataset.rho'."""
        section, _, key = dotted_key.partition(".")
        if not key:
            raise ConfigurationError(dotted_key, "esperado 'secao.chave'")
        self._config_data.setdefault(section, {})
        if not isinstance(self._config_data[section], dict):
            raise ConfigurationError(section, "seção deve ser um mapeamento")
        self._config_data[section][key] = value

    def get_setting(self, dotted_key: str, default: Any = None) -> Any:
        section, _, key = dotted_key.partition(".")
        return (self._config_data.get(section) or {}).get(key, default)

    def apply_overrides(self, overrides: Optional[Mapping[str, Any]]):
        """
        Aplica flags da CLI; valores None são ignorados.

        Épocas vindas da CLI sem `warmup_epochs` explícito limitam o warmup
        herdado a `epochs - 1`, para que execuções curtas continuem válidas.
        """
        given = {key: value for key, value in (overrides or {}).items() if value is not None}
        for dotted_key, value in given.items():
            self.update_setting(dotted_key, value)
        defaults = TrainConfig()
        for section in WARMUP_SECTIONS:
            epochs = given.get(f"{section}.epochs")
            if not isinstance(epochs, int) or epochs <= 0 or f"{section}.warmup_epochs" in given:
                continue
            warmup = self.get_setting(f"{section}.warmup_epochs", getattr(defaults, section).warmup_epochs)
            if isinstance(warmup, int) and warmup >= epochs:
                self.update_setting(f"{section}.warmup_epochs", epochs - 1)

    def get_train_config(self) -> TrainConfig:
        """Padrões < arquivo < flags; variáveis de ambiente preenchem diretórios ausentes."""
        merged = _deep_update(TrainConfig().to_dict(), self._config_data)
        config = TrainConfig.from_dict(merged)
        if config.output.data_dir is None:
            config.output.data_dir = os.environ.get(self.ENV_DATA_DIR)
        if config.output.out_dir is None:
            config.output.out_dir = os.environ.get(self.ENV_OUT_DIR)
        return config

    def validate_config(self) -> List[str]:
        """Valida configurações e retorna lista de erros."""
        try:
            return self.get_train_config().validation_errors()
        except ConfigurationError as e:
            return [f"{e.setting}: {e.reason}"]


def parse_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> TrainConfig:
    """Lê o arquivo (ou o padrão), aplica as flags e valida."""
    manager = ConfigManager(path)
    manager.apply_overrides(overrides)
    return manager.get_train_config().validate()
