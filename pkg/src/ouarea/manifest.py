"""Run manifests: resolved config, seeds, tags, timings, checks and output hashes."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import defaults

TOOL_NAME = "ouarea"
TOOL_VERSION = "0.1.0"
MANIFEST_NAME = "manifest.json"


def file_entry(path: Path, base: Path) -> dict:
    data = Path(path).read_bytes()
    return {
        "path": str(Path(path).relative_to(base)),
        "sha256": hashlib.sha256(data).hexdigest(),
        "bytes": len(data),
    }


def build_manifest(command: str, config: dict, checks: dict, outputs: list,
                   timings: dict, generator_tags=(), extra: dict | None = None) -> dict:
    passed = all(c.get("passed", False) for c in checks.values()) if checks else True
    manifest = {
        "tool": {"name": TOOL_NAME, "version": TOOL_VERSION},
        "command": command,
        "config": config,
        "constants": dict(defaults.TOLERANCES),
        "generator_tags": sorted(set(generator_tags)),
        "timings_s": timings,
        "checks": checks,
        "passed": passed,
        "outputs": outputs,
    }
    if extra:
        manifest["extra"] = extra
    return manifest


def write_manifest(manifest: dict, out_dir: Path) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_manifest(path: Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def merge_manifests(paths) -> dict:
    """Combine several manifests into a single summary document."""
    reports = []
    for p in paths:
        m = load_manifest(p)
        reports.append({
            "source": str(p),
            "command": m.get("command"),
            "passed": m.get("passed"),
            "checks": m.get("checks", {}),
            "outputs": m.get("outputs", []),
        })
    return {
        "tool": {"name": TOOL_NAME, "version": TOOL_VERSION},
        "command": "report",
        "reports": reports,
        "passed": all(r["passed"] for r in reports) if reports else True,
    }
