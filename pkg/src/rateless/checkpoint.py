"""Versioned binary container for model parameters.

Layout (all integers little-endian)::

    b"RLAECKPT" | u32 version | u64 header length | JSON header | float64 blocks

The JSON header is written with sorted keys and lists every block's name and
shape in payload order, so identical models always serialise to identical
bytes and round trips are bit-exact.
"""

import json
import struct

import numpy as np

from rateless.errors import ConsistencyError, FormatError
from rateless.model import BLOCKS, AEConfig, AEParams
from rateless.pca import PCAModel

MAGIC = b"RLAECKPT"
VERSION = 1


def save(path, kind, meta, blocks):
    header = {
        "kind": kind,
        "meta": meta,
        "blocks": [{"name": name, "shape": list(np.shape(arr))} for name, arr in blocks.items()],
    }
    encoded = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", VERSION, len(encoded)))
        fh.write(encoded)
        for arr in blocks.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load(path):
    """Return ``(kind, meta, blocks)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MAGIC:
        raise FormatError(f"{path}: not a checkpoint (magic {raw[:8]!r})")
    if len(raw) < 20:
        raise FormatError(f"{path}: truncated checkpoint header")
    version, hlen = struct.unpack("<IQ", raw[8:20])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(raw[20 : 20 + hlen].decode("utf-8"))
    offset = 20 + hlen
    blocks = {}
    for entry in header["blocks"]:
        shape = tuple(entry["shape"])
        nbytes = 8 * int(np.prod(shape))
        if offset + nbytes > len(raw):
            raise FormatError(f"{path}: block {entry['name']} is truncated")
        blocks[entry["name"]] = np.frombuffer(raw, dtype="<f8", count=nbytes // 8, offset=offset).reshape(shape).copy()
        offset += nbytes
    if offset != len(raw):
        raise FormatError(f"{path}: {len(raw) - offset} trailing bytes")
    return header["kind"], header["meta"], blocks


def save_autoencoder(path, params, config, **meta):
    meta = dict(meta, config=_config_dict(config))
    save(path, "autoencoder", meta, params.blocks())


def load_autoencoder(path):
    """Return ``(params, config, meta)``."""
    kind, meta, blocks = load(path)
    if kind != "autoencoder":
        raise ConsistencyError(f"{path} holds a {kind} model, not an autoencoder")
    config = AEConfig(**meta["config"])
    missing = set(BLOCKS) - set(blocks)
    if missing:
        raise FormatError(f"{path}: missing blocks {sorted(missing)}")
    params = AEParams(**{name: blocks[name] for name in BLOCKS})
    params.check(config)
    return params, config, meta


def save_pca(path, model, **meta):
    blocks = {"mean": model.mean, "components": model.components, "eigenvalues": model.eigenvalues}
    save(path, "pca", meta, blocks)


def load_pca(path):
    kind, meta, blocks = load(path)
    if kind != "pca":
        raise ConsistencyError(f"{path} holds a {kind} model, not PCA")
    return PCAModel(blocks["mean"], blocks["components"], blocks["eigenvalues"]), meta


def _config_dict(config):
    return {
        "input_dim": config.input_dim,
        "hidden_dim": config.hidden_dim,
        "latent_dim": config.latent_dim,
        "output_activation": config.output_activation,
        "seed": config.seed,
    }
