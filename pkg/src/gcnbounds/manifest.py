"""Run manifests: the full resolved configuration of a command plus digests
of its inputs, so any run can be reproduced byte for byte."""

from __future__ import annotations

import hashlib
import json

from .errors import DataFormatError

__all__ = ["file_digest", "write_manifest", "load_manifest", "MANIFEST_VERSION"]

MANIFEST_VERSION = 1


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command: str, config: dict, inputs=(), outputs=()) -> None:
    doc = {
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "config": config,
        "inputs": {str(p): file_digest(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise DataFormatError(f"{path}: not a valid manifest: {e}") from None
    for key in ("manifest_version", "command", "config"):
        if key not in doc:
            raise DataFormatError(f"{path}: manifest missing key {key!r}")
    return doc
