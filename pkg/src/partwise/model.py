"""Trained detector artifact and its versioned binary file format.

Layout: magic "CMAD", u32 format version, u32 section count, then sections of
[u16 name length][name][u8 kind][u64 payload length][payload]. Kind 0 holds
canonical JSON, kind 1 a float64 tensor ([u32 ndim][u32 dims...][data]).
Everything is little endian and byte-deterministic, so retraining with the
same seed reproduces the file exactly.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ModelFormatError

MAGIC = b"CMAD"
FORMAT_VERSION = 1
_KIND_JSON = 0
_KIND_TENSOR = 1


@dataclass
class ComponentModel:
    config: dict
    prototypes: np.ndarray
    kept_ids: list
    noise_ids: list
    background_ids: list
    scales: dict  # kept id -> c*
    area_means: dict
    color_means: dict
    n_train: int
    vector_bank: np.ndarray
    group_centroids: dict  # kept id -> sorted area-group centroids (list)
    hist_bank: dict  # kept id -> (n_train, n_groups) array
    train_ids: list = field(default_factory=list)
    train_means: dict = field(default_factory=dict)  # {"d_g","d_h","d"} LOO means
    version: int = FORMAT_VERSION

    @property
    def k_total(self) -> int:
        return self.prototypes.shape[0]


def _dump_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _dump_tensor(arr) -> bytes:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    head = struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + arr.tobytes()


def _load_tensor(payload: bytes) -> np.ndarray:
    if len(payload) < 4:
        raise ModelFormatError("tensor section too short")
    (ndim,) = struct.unpack_from("<I", payload)
    need = 4 + 4 * ndim
    if len(payload) < need:
        raise ModelFormatError("tensor dims truncated")
    dims = struct.unpack_from(f"<{ndim}I", payload, 4)
    data = payload[need:]
    count = int(np.prod(dims)) if ndim else 0
    if len(data) != count * 8:
        raise ModelFormatError(
            f"tensor payload holds {len(data)} bytes, dims {dims} promise {count * 8}"
        )
    return np.frombuffer(data, dtype="<f8").reshape(dims).copy()


def _sections_of(model: ComponentModel):
    meta = {
        "config": model.config,
        "kept_ids": list(model.kept_ids),
        "noise_ids": list(model.noise_ids),
        "background_ids": list(model.background_ids),
        "scales": {str(k): v for k, v in model.scales.items()},
        "area_means": {str(k): v for k, v in model.area_means.items()},
        "color_means": {str(k): v for k, v in model.color_means.items()},
        "n_train": model.n_train,
        "train_ids": list(model.train_ids),
        "train_means": model.train_means,
        "group_centroids": {
            str(k): [float(c) for c in v] for k, v in model.group_centroids.items()
        },
    }
    yield "meta", _KIND_JSON, _dump_json(meta)
    yield "prototypes", _KIND_TENSOR, _dump_tensor(model.prototypes)
    yield "vector_bank", _KIND_TENSOR, _dump_tensor(model.vector_bank)
    for k in model.kept_ids:
        yield f"hist_bank/{k}", _KIND_TENSOR, _dump_tensor(model.hist_bank.get(k, np.zeros((0, 0))))


def save_model(model: ComponentModel, path) -> None:
    sections = list(_sections_of(model))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(sections)))
        for name, kind, payload in sections:
            nb = name.encode("utf-8")
            fh.write(struct.pack("<H", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<BQ", kind, len(payload)))
            fh.write(payload)


def load_model(path) -> ComponentModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12:
        raise ModelFormatError("file shorter than model header")
    if blob[:4] != MAGIC:
        raise ModelFormatError(f"bad model magic {blob[:4]!r}")
    version, n_sections = struct.unpack_from("<II", blob, 4)
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    off = 12
    sections = {}
    for _ in range(n_sections):
        if off + 2 > len(blob):
            raise ModelFormatError("section header truncated")
        (name_len,) = struct.unpack_from("<H", blob, off)
        off += 2
        name = blob[off : off + name_len].decode("utf-8")
        off += name_len
        if off + 9 > len(blob):
            raise ModelFormatError(f"section {name!r} header truncated")
        kind, payload_len = struct.unpack_from("<BQ", blob, off)
        off += 9
        payload = blob[off : off + payload_len]
        if len(payload) != payload_len:
            raise ModelFormatError(
                f"section {name!r} payload truncated ({len(payload)} of {payload_len} bytes)"
            )
        off += payload_len
        if kind == _KIND_JSON:
            sections[name] = json.loads(payload.decode("utf-8"))
        elif kind == _KIND_TENSOR:
            sections[name] = _load_tensor(payload)
        else:
            raise ModelFormatError(f"section {name!r} has unknown kind {kind}")
    if off != len(blob):
        raise ModelFormatError(f"{len(blob) - off} trailing bytes after last section")

    try:
        meta = sections["meta"]
        kept = [int(k) for k in meta["kept_ids"]]
        model = ComponentModel(
            config=meta["config"],
            prototypes=sections["prototypes"],
            kept_ids=kept,
            noise_ids=[int(k) for k in meta["noise_ids"]],
            background_ids=[int(k) for k in meta["background_ids"]],
            scales={int(k): float(v) for k, v in meta["scales"].items()},
            area_means={int(k): float(v) for k, v in meta["area_means"].items()},
            color_means={int(k): float(v) for k, v in meta["color_means"].items()},
            n_train=int(meta["n_train"]),
            vector_bank=sections["vector_bank"],
            group_centroids={int(k): np.array(v) for k, v in meta["group_centroids"].items()},
            hist_bank={k: sections[f"hist_bank/{k}"] for k in kept},
            train_ids=list(meta["train_ids"]),
            train_means=meta["train_means"],
            version=version,
        )
    except KeyError as exc:
        raise ModelFormatError(f"model file missing section/field: {exc}") from exc
    return model
