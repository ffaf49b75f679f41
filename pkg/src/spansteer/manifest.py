"""Run manifests: every pipeline command records its config plus content
hashes of all inputs and outputs, so identical runs are verifiable and
partial re-runs are safe."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def tree_hashes(path: str | Path) -> dict[str, str]:
    """Hash of a file, or of every file under a directory."""
    path = Path(path)
    if path.is_file():
        return {path.name: file_sha256(path)}
    return {str(sub.relative_to(path)): file_sha256(sub)
            for sub in sorted(path.rglob("*")) if sub.is_file()}


def write_manifest(directory: str | Path, command: str, config: dict,
                   inputs: dict[str, str | Path], outputs: dict[str, str | Path],
                   extra: dict | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config": config,
        "inputs": {name: tree_hashes(p) for name, p in inputs.items()
                   if Path(p).exists()},
        "outputs": {name: tree_hashes(p) for name, p in outputs.items()
                    if Path(p).exists()},
    }
    if extra:
        manifest.update(extra)
    path = directory / f"{command}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path
