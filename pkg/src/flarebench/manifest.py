"""Dataset manifests.

Two flavors exist. Input manifests (backgrounds, flares) are plain text,
one relative path per line. Record manifests are line-oriented JSON: one
object per line with the reserved keys ``id``, ``sample_seed`` and
``params``; every other string-valued key names a file role (corrupted,
clean, flare, light_mask, glare_mask, streak_mask, ...). Records are kept
in lexicographic id order so downstream output is deterministic.
"""

import json
import os
from dataclasses import dataclass, field

from flarebench.errors import ManifestError

_RESERVED = {"id", "sample_seed", "params"}


@dataclass
class ManifestRecord:
    id: str
    paths: dict = field(default_factory=dict)
    sample_seed: int | None = None
    params: dict | None = None

    def to_obj(self) -> dict:
        obj = {"id": self.id}
        for role in sorted(self.paths):
            obj[role] = self.paths[role]
        if self.sample_seed is not None:
            obj["sample_seed"] = int(self.sample_seed)
        if self.params is not None:
            obj["params"] = self.params
        return obj

    @classmethod
    def from_obj(cls, obj: dict) -> "ManifestRecord":
        if not isinstance(obj, dict) or "id" not in obj:
            raise ManifestError("record must be a JSON object with an 'id' key")
        paths = {}
        for key, value in obj.items():
            if key in _RESERVED:
                continue
            if not isinstance(value, str):
                raise ManifestError(f"role {key!r} must map to a path string")
            paths[key] = value
        seed = obj.get("sample_seed")
        return cls(
            id=str(obj["id"]),
            paths=paths,
            sample_seed=None if seed is None else int(seed),
            params=obj.get("params"),
        )


def load_manifest(path) -> list[ManifestRecord]:
    """Parse a line-JSON manifest, sorted by id.

    Malformed lines and duplicate ids are rejected with line numbers.
    """
    records = []
    seen = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}: line {lineno}: invalid JSON ({exc.msg})")
            record = ManifestRecord.from_obj(obj)
            if record.id in seen:
                raise ManifestError(
                    f"{path}: duplicate id {record.id!r} at lines "
                    f"{seen[record.id]} and {lineno}"
                )
            seen[record.id] = lineno
            records.append(record)
    records.sort(key=lambda r: r.id)
    return records


def write_manifest(records, path):
    """Write records as line-JSON, one per line, in id order."""
    rows = sorted(records, key=lambda r: r.id)
    ids = [r.id for r in rows]
    if len(set(ids)) != len(ids):
        raise ManifestError("manifest records must have unique ids")
    os.makedirs(os.path.dirname(str(path)) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in rows:
            fh.write(json.dumps(record.to_obj(), sort_keys=False))
            fh.write("\n")


def load_path_list(path) -> list[str]:
    """Read a newline-delimited list of relative paths (blank lines skipped)."""
    items = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                items.append(line)
    return items


def resolve(base_path, relative: str) -> str:
    """Resolve a manifest-relative path against the manifest's directory."""
    return os.path.normpath(os.path.join(os.path.dirname(str(base_path)), relative))


def missing_paths(records, manifest_path) -> list[str]:
    """Referenced paths that do not exist on disk."""
    missing = []
    for record in records:
        for role, rel in record.paths.items():
            full = resolve(manifest_path, rel)
            if not os.path.exists(full):
                missing.append(f"{record.id}:{role}:{full}")
    return missing
