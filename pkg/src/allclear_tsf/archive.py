"""Self-describing JSON model archives.

Floats are written with Python's shortest round-trip repr, so a reloaded
model reproduces every threshold and leaf weight bit for bit.
"""
from __future__ import annotations

import json
from datetime import datetime, timezone

from .errors import DataError
from .forest import TsfModel
from .multivariate import MvTsfModel, StackingEnsemble

FORMAT_VERSION = 1

_KINDS = {
    "univariate": TsfModel,
    "multivariate": MvTsfModel,
    "stacking": StackingEnsemble,
}


def model_kind(model) -> str:
    for kind, cls in _KINDS.items():
        if isinstance(model, cls):
            return kind
    raise TypeError(f"cannot archive {type(model).__name__}")


def to_archive(model, config: dict | None = None, dataset_digest: str | None = None,
               timestamp: str | None = None) -> dict:
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).replace(microsecond=0).isoformat()
    return {
        "format_version": FORMAT_VERSION,
        "model_kind": model_kind(model),
        "config": config or {},
        "provenance": {"dataset_digest": dataset_digest, "created": timestamp},
        "payload": model.to_dict(),
    }


def dumps(archive: dict) -> str:
    return json.dumps(archive, indent=1, allow_nan=False) + "\n"


def save_model(path, model, config: dict | None = None, dataset_digest: str | None = None,
               timestamp: str | None = None) -> dict:
    archive = to_archive(model, config, dataset_digest, timestamp)
    with open(path, "w") as fh:
        fh.write(dumps(archive))
    return archive


def from_archive(archive: dict):
    version = archive.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported archive format_version {version!r} (this build reads {FORMAT_VERSION})")
    kind = archive.get("model_kind")
    if kind not in _KINDS:
        raise DataError(f"unknown model_kind {kind!r}")
    try:
        return _KINDS[kind].from_dict(archive["payload"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"corrupt model archive ({exc})") from exc


def load_model(path):
    """Return ``(model, archive_dict)``."""
    try:
        with open(path) as fh:
            archive = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a JSON model archive ({exc})") from exc
    return from_archive(archive), archive


def strip_timestamp(text: str) -> str:
    """Archive text with the creation timestamp blanked, for byte comparisons."""
    archive = json.loads(text)
    archive["provenance"]["created"] = None
    return dumps(archive)
