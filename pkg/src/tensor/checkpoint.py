"""Contêiner binário de checkpoints (formato TDLT).

Layout little-endian: magic "TDLT", versão u32, quantidade u32 e, por
entrada, tamanho do nome u32, nome UTF-8, rank u32, dimensões u32[rank] e
dados f32 crus. Metadados de arquitetura vão num JSON ao lado do binário.
"""

import json
import os
import struct
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple

import numpy as np

from ..exceptions import CheckpointError

MAGIC = b"TDLT"
FORMAT_VERSION = 1

_U32 = struct.Struct("<I")


def encode_tensors(entries: Mapping[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, _U32.pack(FORMAT_VERSION), _U32.pack(len(entries))]
    for name, array in entries.items():
        encoded_name = name.encode("utf-8")
        values = np.asarray(array, dtype="<f4")
        chunks.append(_U32.pack(len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(_U32.pack(values.ndim))
        chunks.extend(_U32.pack(dim) for dim in values.shape)
        chunks.append(values.tobytes(order="C"))
    return b"".join(chunks)


def decode_tensors(payload: bytes, source: str = "<memória>") -> Dict[str, np.ndarray]:
    view = memoryview(payload)
    offset = 0

    def read(size: int) -> memoryview:
        nonlocal offset
        if offset + size > len(view):
            raise CheckpointError(source, "arquivo truncado")
        chunk = view[offset:offset + size]
        offset += size
        return chunk

    def read_u32() -> int:
        return _U32.unpack(read(4))[0]

    if bytes(read(4)) != MAGIC:
        raise CheckpointError(source, "assinatura TDLT ausente")
    version = read_u32()
    if version != FORMAT_VERSION:
        raise CheckpointError(source, f"versão {version} não suportada")

    entries: Dict[str, np.ndarray] = {}
    for _ in range(read_u32()):
        raw_name = bytes(read(read_u32()))
        try:
            name = raw_name.decode("utf-8")
        except UnicodeDecodeError as e:
            raise CheckpointError(source, f"nome de tensor inválido: {raw_name!r}", e)
        shape = tuple(read_u32() for _ in range(read_u32()))
        count = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(read(4 * count), dtype="<f4").astype(np.float32)
        entries[name] = values.reshape(shape)
    if offset != len(view):
        raise CheckpointError(source, f"{len(view) - offset} bytes excedentes")
    return entries


def sidecar_path(path: Path) -> Path:
    return Path(path).with_suffix(".json")


def save_checkpoint(path, entries: Mapping[str, np.ndarray], header: Mapping[str, Any]) -> Path:
    """Grava o binário e o JSON de cabeçalho de forma atômica."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        for target, content in (
            (path, encode_tensors(entries)),
            (sidecar_path(path), json.dumps(header, indent=2, ensure_ascii=False, default=str).encode("utf-8")),
        ):
            tmp = target.with_name(target.name + ".tmp")
            tmp.write_bytes(content)
            os.replace(tmp, target)
    except OSError as e:
        raise CheckpointError(str(path), f"erro ao gravar: {e}", e)
    return path


def load_checkpoint(path) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(str(path), "arquivo não encontrado")
    try:
        entries = decode_tensors(path.read_bytes(), str(path))
        header_file = sidecar_path(path)
        header = json.loads(header_file.read_text(encoding="utf-8")) if header_file.exists() else {}
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(str(path), f"erro ao ler: {e}", e)
    return entries, header
