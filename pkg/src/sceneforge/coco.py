"""Instance-annotation export in the COCO JSON dialect.

Masks come straight from the rendered instance-id maps, so per-image
annotations are disjoint by construction. Segmentations are stored as
uncompressed run-length encoding: alternating run lengths over the mask
flattened in column-major order, first run counting zeros (the standard
COCO "counts" convention). Bounding boxes are [x, y, w, h] pixel extents
of the mask.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ValidationError


def encode_rle(mask):
    """Binary mask (H, W) -> {"size": [H, W], "counts": [...]}."""
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValidationError(f"mask must be 2D, got shape {m.shape}")
    flat = m.reshape(-1, order="F").astype(bool)
    boundaries = np.nonzero(np.diff(flat))[0] + 1
    starts = np.concatenate(([0], boundaries, [flat.size]))
    counts = np.diff(starts).tolist()
    if flat[0]:
        counts = [0] + counts  # first run always counts zeros
    return {"size": [int(m.shape[0]), int(m.shape[1])], "counts": counts}


def decode_rle(rle):
    h, w = rle["size"]
    counts = np.asarray(rle["counts"], dtype=np.int64)
    if counts.sum() != h * w:
        raise ValidationError(
            f"run lengths sum to {counts.sum()}, expected {h * w}")
    vals = np.zeros(len(counts), dtype=bool)
    vals[1::2] = True
    flat = np.repeat(vals, counts)
    return flat.reshape((h, w), order="F")


def mask_bbox(mask):
    """[x, y, w, h] of the mask's exact pixel extents; None if empty."""
    ys, xs = np.nonzero(np.asarray(mask))
    if len(ys) == 0:
        return None
    x0, x1 = int(xs.min()), int(xs.max())
    y0, y1 = int(ys.min()), int(ys.max())
    return [x0, y0, x1 - x0 + 1, y1 - y0 + 1]


def export_coco(manifest, root, out_path):
    """Write one COCO annotation document for every sample in the manifest.

    root is the dataset directory the manifest's stems are relative to.
    Returns the document dict (also written to out_path).
    """
    root = Path(root)
    categories = [{"id": cid, "name": name}
                  for cid, name in sorted(manifest.categories.items())]
    cat_id = {name: cid for cid, name in manifest.categories.items()}
    images = []
    annotations = []
    ann_id = 1
    for img_idx, entry in enumerate(manifest.samples, start=1):
        stem = entry["stem"]
        seg_path = root / f"{stem}.seg.png"
        if not seg_path.exists():
            raise ValidationError(f"segmentation map missing: {seg_path}")
        seg = np.asarray(Image.open(seg_path), dtype=np.uint16)
        h, w = seg.shape
        images.append({
            "id": img_idx,
            "file_name": f"{stem}.rgb.png",
            "width": int(w),
            "height": int(h),
        })
        instance_cats = entry.get("instances", {})
        for inst in sorted(int(v) for v in np.unique(seg) if v != 0):
            mask = seg == inst
            cat_name = instance_cats.get(str(inst))
            if cat_name is None:
                raise ValidationError(
                    f"{stem}: instance {inst} has no category in manifest")
            annotations.append({
                "id": ann_id,
                "image_id": img_idx,
                "category_id": cat_id[cat_name],
                "segmentation": encode_rle(mask),
                "bbox": mask_bbox(mask),
                "area": int(mask.sum()),
                "iscrowd": 0,
            })
            ann_id += 1
    doc = {"images": images, "categories": categories,
           "annotations": annotations}
    Path(out_path).write_text(json.dumps(doc, sort_keys=True) + "\n")
    return doc


def import_coco(path):
    """Load an exported document back; returns per-annotation pixel counts.

    Used to verify that export preserves instance pixel counts exactly.
    """
    doc = json.loads(Path(path).read_text())
    counts = {}
    for ann in doc["annotations"]:
        mask = decode_rle(ann["segmentation"])
        counts[ann["id"]] = int(mask.sum())
    return doc, counts
