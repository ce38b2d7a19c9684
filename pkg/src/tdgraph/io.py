"""On-disk formats: TDGV1 datasets, checkpoints, metrics CSV and key = value configs.

All binary payloads are little-endian float64.
"""

from __future__ import annotations

import csv
import dataclasses
import typing
from pathlib import Path

import numpy as np

from .model import Model
from .objective import OptimState
from .synth import ActionAnnotation, SynthConfig, SyntheticVideo

DATASET_MAGIC = "TDGV1"
CHECKPOINT_MAGIC = "TDGCKPT"
CHECKPOINT_VERSION = 1
METRICS_HEADER = ["epoch", "variant", "seed", "metric", "class", "value"]
LE_F8 = np.dtype("<f8")


class FormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


# -- datasets -----------------------------------------------------------------

def write_video(fh: typing.BinaryIO, video: SyntheticVideo, n_classes: int) -> None:
    n, m, d = video.n_frames, video.n_regions, video.d_raw
    fh.write(f"{DATASET_MAGIC} {n} {m} {d} {n_classes}\n".encode())
    fh.write(np.ascontiguousarray(np.stack(video.raw_features), dtype=LE_F8).tobytes())
    lines = ["", f"SEED {video.seed}", f"BOXES {n * m}"]
    for i, frame in enumerate(video.boxes):
        for j, b in enumerate(frame):
            lines.append(" ".join([str(i), str(j), *map(_fmt, b)]))
    gts = [(i, c, b) for i, objs in enumerate(video.gt_objects) for c, b in objs]
    lines.append(f"GT {len(gts)}")
    lines += [" ".join([str(i), str(c), *map(_fmt, b)]) for i, c, b in gts]
    lines.append(f"ANN {len(video.annotations)}")
    for a in video.annotations:
        noun = a.noun.replace(" ", "_") or "-"
        lines.append(f"{a.object_class} {a.start} {a.end} {noun}")
    lines.append("END")
    fh.write(("\n".join(lines) + "\n").encode())


def write_dataset(path, videos: list[SyntheticVideo], n_classes: int) -> None:
    with open(path, "wb") as fh:
        for v in videos:
            write_video(fh, v, n_classes)


def _section(fh, name: str) -> list[list[str]]:
    head = fh.readline().decode().split()
    if len(head) != 2 or head[0] != name:
        raise FormatError(f"expected section {name}, got {head}")
    return [fh.readline().decode().split() for _ in range(int(head[1]))]


def read_dataset(path) -> tuple[list[SyntheticVideo], int]:
    videos, n_classes = [], None
    with open(path, "rb") as fh:
        while True:
            header = fh.readline()
            if not header:
                break
            if not header.strip():
                continue
            parts = header.decode().split()
            if len(parts) != 5 or parts[0] != DATASET_MAGIC:
                raise FormatError(f"bad video header: {header[:40]!r}")
            n, m, d, c = map(int, parts[1:])
            if n_classes is not None and c != n_classes:
                raise FormatError("videos disagree on the number of classes")
            n_classes = c
            nbytes = n * m * d * LE_F8.itemsize
            blob = fh.read(nbytes)
            if len(blob) != nbytes:
                raise FormatError("truncated feature block")
            feats = np.frombuffer(blob, dtype=LE_F8).astype(np.float64).reshape(n, m, d)
            if fh.readline().strip():
                raise FormatError("missing newline after feature block")
            seed_line = fh.readline().decode().split()
            if len(seed_line) != 2 or seed_line[0] != "SEED":
                raise FormatError("missing SEED line")
            boxes = [[None] * m for _ in range(n)]
            for rec in _section(fh, "BOXES"):
                boxes[int(rec[0])][int(rec[1])] = tuple(float(x) for x in rec[2:6])
            gt = [[] for _ in range(n)]
            for rec in _section(fh, "GT"):
                gt[int(rec[0])].append((int(rec[1]), tuple(float(x) for x in rec[2:6])))
            anns = []
            for rec in _section(fh, "ANN"):
                noun = "" if rec[3] == "-" else rec[3]
                anns.append(ActionAnnotation(int(rec[0]), int(rec[1]), int(rec[2]), noun))
            if fh.readline().strip() != b"END":
                raise FormatError("missing END marker")
            videos.append(SyntheticVideo(list(feats), boxes, gt, anns, int(seed_line[1])))
    if not videos:
        raise FormatError(f"{path}: no videos")
    return videos, n_classes


# -- checkpoints --------------------------------------------------------------

def _safe(name: str) -> str:
    return name.replace("/", "_")


def save_checkpoint(directory, model: Model, optim: OptimState | None, epoch: int,
                    config: dict | None = None) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}", f"epoch {epoch}"]
    for k, v in (config or {}).items():
        lines.append(f"config {k} = {v}")
    tensors = dict(model.flat())
    if optim is not None:
        lines.append(f"optim {_fmt(optim.lr)} {_fmt(optim.momentum)} {_fmt(optim.weight_decay)}")
        for name in sorted(optim.velocity, key=list(tensors).index):
            tensors[f"velocity/{name}"] = optim.velocity[name]
    for name, arr in tensors.items():
        fname = _safe(name) + ".f8"
        shape = "x".join(map(str, arr.shape))
        lines.append(f"tensor {name} {shape} {fname}")
        (directory / fname).write_bytes(np.ascontiguousarray(arr, dtype=LE_F8).tobytes())
    (directory / "manifest.txt").write_text("\n".join(lines) + "\n")


def load_checkpoint(directory) -> tuple[Model, OptimState | None, int, dict]:
    directory = Path(directory)
    lines = (directory / "manifest.txt").read_text().splitlines()
    magic = lines[0].split()
    if magic != [CHECKPOINT_MAGIC, str(CHECKPOINT_VERSION)]:
        raise FormatError(f"unsupported checkpoint header {lines[0]!r}")
    epoch, config, optim_line, tensors = 0, {}, None, {}
    for line in lines[1:]:
        kind, _, rest = line.partition(" ")
        if kind == "epoch":
            epoch = int(rest)
        elif kind == "config":
            k, _, v = rest.partition(" = ")
            config[k] = v
        elif kind == "optim":
            optim_line = [float(x) for x in rest.split()]
        elif kind == "tensor":
            name, shape, fname = rest.split()
            dims = tuple(int(s) for s in shape.split("x")) if shape else ()
            data = np.frombuffer((directory / fname).read_bytes(), dtype=LE_F8)
            tensors[name] = data.astype(np.float64).reshape(dims)
    params = {k: v for k, v in tensors.items() if not k.startswith("velocity/")}
    model = Model.from_flat(params)
    optim = None
    if optim_line is not None:
        velocity = {k[len("velocity/"):]: v for k, v in tensors.items() if k.startswith("velocity/")}
        optim = OptimState(optim_line[0], optim_line[1], optim_line[2], velocity)
    return model, optim, epoch, config


# -- metrics ------------------------------------------------------------------

def write_metrics(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for epoch, variant, seed, metric, cls, value in rows:
            w.writerow([epoch, variant, seed, metric, cls, _fmt(value)])


def read_metrics(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- key = value configs ------------------------------------------------------

def read_kv(path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def _coerce(value: str, annotation):
    args = typing.get_args(annotation)
    if type(None) in args:
        if value.lower() in ("none", "null", ""):
            return None
        annotation = next(a for a in args if a is not type(None))
        args = typing.get_args(annotation)
    if annotation is bool:
        low = value.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise FormatError(f"not a boolean: {value!r}")
    if typing.get_origin(annotation) is tuple:
        return tuple(args[0](x) for x in value.replace(",", " ").split())
    return annotation(value)


def fill_dataclass(cls, kv: dict[str, str]):
    """Build ``cls`` from the keys of ``kv`` that name its fields."""
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    return cls(**{k: _coerce(v, hints[k]) for k, v in kv.items() if k in names})


DATASET_KEYS = ("videos", "eval_videos")


def split_config(kv: dict[str, str], run_cls) -> tuple[object, SynthConfig, dict[str, int]]:
    run_fields = {f.name for f in dataclasses.fields(run_cls)}
    synth_fields = {f.name for f in dataclasses.fields(SynthConfig)}
    unknown = set(kv) - run_fields - synth_fields - set(DATASET_KEYS)
    if unknown:
        raise FormatError(f"unknown config keys: {sorted(unknown)}")
    sizes = {k: int(kv[k]) for k in DATASET_KEYS if k in kv}
    return fill_dataclass(run_cls, kv), fill_dataclass(SynthConfig, kv), sizes


def config_echo(cfg) -> dict[str, str]:
    out = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        out[f.name] = v.value if hasattr(v, "value") else str(v)
    return out
