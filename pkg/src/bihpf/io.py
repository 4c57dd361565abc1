"""File formats and run configuration.

* PNM: binary P5 (gray) / P6 (RGB), maxval 255 only.
* F32T tensors: b"F32T", u32 LE rank, rank x u32 LE dims, float32 LE payload.
* Checkpoints: one ASCII descriptor line, then F32T tensors back to back.
* Datasets: a directory of PNM files plus ``manifest.txt`` with lines
  ``<relpath> <label> <category> <generator>``.
* Run config: ``key=value`` lines; unknown keys are rejected.

Every writer goes through :func:`atomic_write` (temp file + rename).
"""

import io
import os
import struct
import tempfile
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .acm import CompressionMapParams
from .netlite import PARAM_ORDER, ConvNet
from .synthlab import LabeledDataset


class DataError(ValueError):
    """Bad or missing input data (CLI exit code 2)."""


class MalformedHeaderError(DataError):
    pass


class TruncatedPayloadError(DataError):
    pass


class UnsupportedMaxvalError(DataError):
    pass


class BadMagicError(DataError):
    pass


class PayloadMismatchError(DataError):
    pass


class ConfigError(ValueError):
    """Unknown key or unparsable value in a run config (usage error)."""


def atomic_write(path, data):
    """Write bytes (or str) to ``path`` via a temp file in the same directory."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------- PNM


def _pnm_tokens(buf, count):
    """Read ``count`` header tokens after the magic; returns (tokens, payload offset)."""
    pos = 2
    tokens = []
    while len(tokens) < count:
        if pos >= len(buf):
            raise MalformedHeaderError("malformed header: unexpected end of header")
        ch = buf[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            end = buf.find(b"\n", pos)
            if end < 0:
                raise MalformedHeaderError("malformed header: unterminated comment")
            pos = end + 1
        else:
            start = pos
            while pos < len(buf) and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
                pos += 1
            tok = buf[start:pos]
            if not tok.isdigit():
                raise MalformedHeaderError(f"malformed header: expected a number, got {tok[:16]!r}")
            tokens.append(int(tok))
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(buf) or not buf[pos : pos + 1].isspace():
        raise MalformedHeaderError("malformed header: missing separator before raster")
    return tokens, pos + 1


def decode_pnm(buf):
    if len(buf) < 2 or buf[:2] not in (b"P5", b"P6"):
        raise MalformedHeaderError("malformed header: expected magic P5 or P6")
    channels = 1 if buf[:2] == b"P5" else 3
    (w, h, maxval), off = _pnm_tokens(buf, 3)
    if w < 1 or h < 1:
        raise MalformedHeaderError(f"malformed header: bad size {w}x{h}")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"unsupported maxval {maxval} (only 255)")
    need = w * h * channels
    payload = buf[off:]
    if len(payload) < need:
        raise TruncatedPayloadError(f"truncated payload: {len(payload)} of {need} bytes")
    if len(payload) > need:
        raise PayloadMismatchError(f"payload mismatch: {len(payload) - need} trailing bytes")
    img = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    return img.reshape(h, w) if channels == 1 else img.reshape(h, w, 3)


def encode_pnm(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"cannot store image of shape {img.shape} as PNM")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    h, w = img.shape[:2]
    raster = np.round(np.clip(img, 0.0, 1.0) * 255).astype(np.uint8)
    return magic + f"\n{w} {h}\n255\n".encode() + raster.tobytes()


def read_pnm(path):
    return decode_pnm(Path(path).read_bytes())


def write_pnm(path, img):
    atomic_write(path, encode_pnm(img))


# -------------------------------------------------------------------- F32T

F32T_MAGIC = b"F32T"


def encode_tensor(arr):
    arr = np.asarray(arr)
    if arr.ndim == 0:
        raise ValueError("rank-0 tensors are not allowed")
    head = F32T_MAGIC + struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape)
    return head + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def read_tensor(stream):
    """Read one tensor from a binary stream positioned at its magic."""
    magic = stream.read(4)
    if magic != F32T_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {F32T_MAGIC!r}")
    raw = stream.read(4)
    if len(raw) < 4:
        raise PayloadMismatchError("payload mismatch: missing rank")
    (rank,) = struct.unpack("<I", raw)
    if rank == 0:
        raise PayloadMismatchError("payload mismatch: rank-0 tensors are not allowed")
    raw = stream.read(4 * rank)
    if len(raw) < 4 * rank:
        raise PayloadMismatchError("payload mismatch: missing dims")
    dims = struct.unpack(f"<{rank}I", raw)
    n = int(np.prod(dims, dtype=np.int64))
    payload = stream.read(4 * n)
    if len(payload) != 4 * n:
        raise PayloadMismatchError(f"payload mismatch: {len(payload)} bytes for dims {dims}")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)


def decode_tensor(buf):
    stream = io.BytesIO(buf)
    arr = read_tensor(stream)
    rest = stream.read()
    if rest:
        raise PayloadMismatchError(f"payload mismatch: {len(rest)} trailing bytes")
    return arr


def save_tensor(path, arr):
    atomic_write(path, encode_tensor(arr))


def load_tensor(path):
    return decode_tensor(Path(path).read_bytes())


# ------------------------------------------------------------- checkpoints


def _parse_descriptor(line):
    parts = line.split()
    if not parts:
        raise DataError("checkpoint: empty descriptor")
    kv = {}
    for p in parts[1:]:
        if "=" not in p:
            raise DataError(f"checkpoint: bad descriptor field {p!r}")
        k, v = p.split("=", 1)
        kv[k] = v
    return parts[0], kv


def _read_checkpoint(path):
    buf = Path(path).read_bytes()
    nl = buf.find(b"\n")
    if nl < 0:
        raise DataError(f"{path}: missing checkpoint descriptor line")
    kind, kv = _parse_descriptor(buf[:nl].decode("ascii", "replace"))
    stream = io.BytesIO(buf[nl + 1 :])
    tensors = []
    while stream.tell() < len(buf) - nl - 1:
        tensors.append(read_tensor(stream))
    return kind, kv, tensors


def save_model(path, model):
    body = [model.descriptor.encode() + b"\n"]
    body += [encode_tensor(model.params[k]) for k in PARAM_ORDER]
    atomic_write(path, b"".join(body))


def load_model(path):
    kind, kv, tensors = _read_checkpoint(path)
    if kind != "convnet":
        raise DataError(f"{path}: not a classifier checkpoint ({kind!r})")
    try:
        c, h, w = (int(v) for v in kv["in"].split("x"))
        widths = tuple(int(v) for v in kv["widths"].split(","))
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: bad classifier descriptor") from exc
    model = ConvNet(c, h, w, widths=widths)
    if len(tensors) != len(PARAM_ORDER):
        raise DataError(f"{path}: expected {len(PARAM_ORDER)} tensors, found {len(tensors)}")
    for k, t in zip(PARAM_ORDER, tensors):
        if t.shape != model.params[k].shape:
            raise DataError(f"{path}: tensor {k} has shape {t.shape}")
        model.params[k] = t.astype(np.float64)
    return model


def save_acm(path, params):
    h, w = params.shape
    head = f"acm size={h}x{w} t_f={params.t_f!r} w_o={params.w_o!r}\n".encode()
    atomic_write(path, head + encode_tensor(params.w_a1) + encode_tensor(params.w_a2))


def load_acm(path):
    kind, kv, tensors = _read_checkpoint(path)
    if kind != "acm" or len(tensors) != 2:
        raise DataError(f"{path}: not a compression map checkpoint")
    try:
        t_f, w_o = float(kv["t_f"]), float(kv["w_o"])
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: bad compression map descriptor") from exc
    a1, a2 = (t.astype(np.float64) for t in tensors)
    return CompressionMapParams(a1, a2, t_f, w_o)


# ---------------------------------------------------------------- datasets

MANIFEST = "manifest.txt"


def save_dataset(directory, ds):
    """Images as PPM files plus a manifest; artifact masks as F32T tensors."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for i in range(len(ds)):
        rel = f"img{i:05d}.ppm"
        write_pnm(directory / rel, ds.images[i])
        lines.append(f"{rel} {int(ds.labels[i])} {ds.categories[i]} {ds.generators[i]}")
    for gen, mask in sorted(ds.artifact_masks.items()):
        save_tensor(directory / f"mask_{gen}.f32t", mask.astype(np.float32))
    atomic_write(directory / MANIFEST, "\n".join(lines) + "\n")


def read_manifest(path):
    rows = []
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4 or parts[1] not in ("0", "1"):
            raise DataError(f"{path}:{n}: expected '<relpath> <label> <category> <generator>'")
        rows.append((parts[0], int(parts[1]), parts[2], parts[3]))
    return rows


def load_dataset(directory):
    directory = Path(directory)
    manifest = directory / MANIFEST
    if not manifest.exists():
        raise DataError(f"no {MANIFEST} in {directory}")
    rows = read_manifest(manifest)
    if not rows:
        raise DataError(f"{manifest} lists no images")
    images = []
    for rel, *_ in rows:
        img = read_pnm(directory / rel)
        if img.ndim == 2:
            img = np.repeat(img[..., None], 3, axis=2)
        images.append(img)
    if len({im.shape for im in images}) != 1:
        raise DataError(f"images in {directory} differ in size")
    masks = {}
    for p in sorted(directory.glob("mask_*.f32t")):
        masks[p.stem[len("mask_") :]] = load_tensor(p) > 0.5
    return LabeledDataset(
        np.stack(images),
        np.array([r[1] for r in rows]),
        [r[2] for r in rows],
        [r[3] for r in rows],
        masks,
    )


def format_table_csv(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{v:.6f}" if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ config


@dataclass(frozen=True)
class RunConfig:
    """All run hyperparameters.

    ``sigma`` and ``cutoff`` are stated for a 256x256 grid and rescaled to
    ``size`` when ``scale_filters`` is on. ``profile=desk`` swaps in the small
    lab settings (size 64, faster learning rates) for any key that was not
    set explicitly.
    """

    profile: str = "desk"
    sigma: float = 0.01
    cutoff: float = 40.0
    scale_filters: bool = True
    pixel_hpf: bool = True
    freq_hpf: bool = True
    grayscale: bool = True
    features: str = "bihpf"
    t_f: float = 1.0
    w_o: float = 5.0
    lr: float = 1e-4
    lr_map: float = 1e-4
    epochs: int = 20
    batch: int = 16
    seed: int = 0
    size: int = 256
    experiment: str = "cross-category"
    train_categories: tuple = ("disks",)
    test_categories: tuple = ("disks", "rectangles", "rings", "blobs")
    train_generators: tuple = ("nn",)
    test_generators: tuple = ("nn",)
    n_train: int = 200
    n_test: int = 200
    train_data: str = ""
    test_data: str = ""


DESK_PROFILE = {"size": 64, "lr": 1e-3, "lr_map": 0.02}
PROFILES = {"reference": {}, "desk": DESK_PROFILE}


def _convert(name, raw):
    f = {f.name: f for f in fields(RunConfig)}[name]
    default = f.default
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("true", "1", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(v for v in (s.strip() for s in raw.split(",")) if v)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    return raw.strip()


def parse_config_text(text, source="<config>"):
    known = {f.name for f in fields(RunConfig)}
    values = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{source}:{n}: unknown key {key!r}")
        values[key] = _convert(key, raw)
    return values


def resolve_config(file_values=None, overrides=None):
    """defaults < profile < config file < command-line flags."""
    explicit = dict(file_values or {})
    explicit.update({k: v for k, v in (overrides or {}).items() if v is not None})
    profile = explicit.get("profile", RunConfig.profile)
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r} (use {', '.join(PROFILES)})")
    values = dict(PROFILES[profile])
    values.update(explicit)
    return replace(RunConfig(), **values)


def load_config(path=None, overrides=None):
    file_values = parse_config_text(Path(path).read_text(), str(path)) if path else {}
    return resolve_config(file_values, overrides)


def format_config(cfg):
    out = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(v)
        elif isinstance(v, bool):
            v = str(v).lower()
        out.append(f"{f.name}={v}")
    return "\n".join(out) + "\n"
