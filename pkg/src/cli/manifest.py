"""Run manifest: config snapshot, tool versions and artifact hashes.

Written last, atomically, so a run directory either has a manifest whose
hashes cover every artifact or has none at all.
"""

import hashlib
import json
import logging
import os
import platform
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Iterable

from src import __version__
from src.errors import InvariantBreachError

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
_TRACKED_PACKAGES = ("numpy", "scipy", "python-dotenv", "opentelemetry-api")


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def tool_versions() -> dict[str, str]:
    versions = {"python": platform.python_version(), "rankscale": __version__}
    for name in _TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "missing"
    return versions


@dataclass
class RunManifest:
    config: dict[str, Any]
    seed: int
    started_at: str
    finished_at: str = ""
    versions: dict[str, str] = field(default_factory=tool_versions)
    files: dict[str, str] = field(default_factory=dict)

    def record_files(self, run_dir: Path, paths: Iterable[Path]) -> None:
        for path in paths:
            self.files[Path(path).relative_to(run_dir).as_posix()] = sha256_file(Path(path))

    def write(self, run_dir: Path) -> Path:
        """Atomically write ``manifest.json`` into ``run_dir``."""
        run_dir = Path(run_dir)
        target = run_dir / MANIFEST_FILE
        payload = json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"
        fd, tmp = tempfile.mkstemp(prefix=".manifest-", suffix=".tmp", dir=run_dir)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        logger.info("manifest written: %s (%d files)", target, len(self.files))
        return target


def load_manifest(run_dir: Path | str) -> RunManifest:
    path = Path(run_dir) / MANIFEST_FILE
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        return RunManifest(**data)
    except (OSError, ValueError, TypeError) as e:
        raise InvariantBreachError(f"unreadable manifest {path}: {e}") from e


def verify_manifest(run_dir: Path | str) -> RunManifest:
    """Recompute every recorded hash; raise on a missing or altered file."""
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    mismatched, missing = [], []
    for name, expected in sorted(manifest.files.items()):
        path = run_dir / name
        if not path.is_file():
            missing.append(name)
        elif sha256_file(path) != expected:
            mismatched.append(name)
    if mismatched or missing:
        logger.error("manifest check failed in %s: mismatched=%s missing=%s", run_dir, mismatched, missing)
        raise InvariantBreachError(
            "run artifacts do not match manifest", {"mismatched": mismatched, "missing": missing}
        )
    return manifest
