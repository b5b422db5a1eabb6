"""Dataset manifest: the index tying samples, files, and provenance together.

The manifest is a single JSON document at the dataset root. It carries the
effective generation config (so a run can be reproduced from the manifest
alone), the category id table, per-category visible-instance counts, and
one entry per rendered sample. Instance counts follow the convention of
counting a placement once per image it is visible in.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ValidationError

MANIFEST_VERSION = "1"
MANIFEST_NAME = "manifest.json"


@dataclass
class DatasetManifest:
    profile: str = ""
    samples: list = field(default_factory=list)
    categories: dict = field(default_factory=dict)        # id -> name
    instance_counts: dict = field(default_factory=dict)   # name -> count
    stats: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    partial: bool = False
    version: str = MANIFEST_VERSION

    def to_dict(self):
        return {
            "version": self.version,
            "profile": self.profile,
            "partial": self.partial,
            "config": self.config,
            "stats": self.stats,
            "categories": {str(k): v for k, v in sorted(self.categories.items())},
            "instance_counts": dict(sorted(self.instance_counts.items())),
            "samples": self.samples,
        }

    def save(self, root):
        path = Path(root) / MANIFEST_NAME
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True)
                        + "\n")
        return path


def category_table(names):
    """Stable 1-based category ids from sorted names."""
    return {i + 1: name for i, name in enumerate(sorted(names))}


def load_manifest(path):
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read manifest {path}: {e}") from e
    return DatasetManifest(
        profile=data.get("profile", ""),
        samples=data.get("samples", []),
        categories={int(k): v for k, v in data.get("categories", {}).items()},
        instance_counts=data.get("instance_counts", {}),
        stats=data.get("stats", {}),
        config=data.get("config", {}),
        partial=data.get("partial", False),
        version=data.get("version", MANIFEST_VERSION),
    )


SAMPLE_SUFFIXES = (".rgb.png", ".seg.png", ".depth.png", ".normal.png",
                   ".meta.json")


def recount_instances(manifest, root):
    """Visible-instance counts per category from the segmentation maps."""
    root = Path(root)
    counts = {name: 0 for name in manifest.categories.values()}
    for entry in manifest.samples:
        seg = np.asarray(Image.open(root / f"{entry['stem']}.seg.png"),
                         dtype=np.uint16)
        instance_cats = entry.get("instances", {})
        for inst in np.unique(seg):
            if inst == 0:
                continue
            cat = instance_cats.get(str(int(inst)))
            if cat is None:
                raise ValidationError(
                    f"{entry['stem']}: instance {int(inst)} not in manifest")
            counts[cat] = counts.get(cat, 0) + 1
    return counts


def validate_manifest(manifest, root):
    """Referential integrity + count recount; returns a list of problems."""
    root = Path(root)
    problems = []
    for entry in manifest.samples:
        stem = entry.get("stem")
        if not stem:
            problems.append("sample entry without stem")
            continue
        for suffix in SAMPLE_SUFFIXES:
            if not (root / f"{stem}{suffix}").exists():
                problems.append(f"missing file: {stem}{suffix}")
        ref = entry.get("layout_ref")
        if ref and not (root / ref).exists():
            problems.append(f"dangling layout ref: {ref}")
    if not problems:
        try:
            recount = recount_instances(manifest, root)
        except ValidationError as e:
            problems.append(str(e))
        else:
            declared = {k: v for k, v in manifest.instance_counts.items() if v}
            found = {k: v for k, v in recount.items() if v}
            if declared != found:
                problems.append(
                    f"instance counts mismatch: manifest {declared} != "
                    f"recount {found}")
    return problems
