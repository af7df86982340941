"""Modelo do manifesto de execução."""

from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional


@dataclass
class RunManifest:
    """Snapshot reprodutível de uma execução da CLI."""
    command: str
    config: Dict[str, Any]
    code_version: str
    seeds: Dict[str, int]
    started_at: datetime = field(default_factory=datetime.now)
    dataset_digest: Optional[str] = None
    timings: Dict[str, float] = field(default_factory=dict)
    deviations: List[str] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    replicate_seeds: List[int] = field(default_factory=list)

    def record_output(self, path) -> None:
        path = str(path)
        if path not in self.outputs:
            self.outputs.append(path)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "code_version": self.code_version,
            "started_at": self.started_at.isoformat(),
            "seeds": dict(self.seeds),
            "replicate_seeds": list(self.replicate_seeds),
            "dataset_digest": self.dataset_digest,
            "timings": dict(self.timings),
            "deviations": list(self.deviations),
            "outputs": list(self.outputs),
            "config": self.config,
        }
