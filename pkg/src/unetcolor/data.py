"""Directory-per-class image corpus: scan, decode, resize, batch.

Expected layout: ``root/{train,val,test}/{class}/{image}.{png,jpg,jpeg}``.
Class indices are assigned by sorted class name so they are stable across
filesystem enumeration order. Corrupt images raise immediately (a silently
skipped file would shift every metric denominator).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .colorspace import normalize, replicate_l, rgb_to_lab

SPLITS = ("train", "val", "test")
_EXTENSIONS = {".png", ".jpg", ".jpeg"}


class DatasetError(RuntimeError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    rel_path: str
    class_index: int
    split: str


@dataclass
class DatasetManifest:
    root: Path
    classes: list
    entries: list

    def split_entries(self, split: str) -> list:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}, expected one of {SPLITS}")
        return [e for e in self.entries if e.split == split]

    def class_counts(self) -> dict:
        counts = {c: 0 for c in self.classes}
        for e in self.entries:
            counts[self.classes[e.class_index]] += 1
        return counts


def read_class_list(path) -> list:
    """One class name per line, UTF-8; blank lines ignored."""
    names = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    return [n for n in names if n]


def scan(root, class_list=None) -> DatasetManifest:
    """Build a manifest of every image under the split/class layout.

    ``class_list`` (names) restricts and warns about names absent on disk;
    otherwise all classes found in any split are used.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a readable directory")
    found = set()
    for split in SPLITS:
        sdir = root / split
        if sdir.is_dir():
            found.update(p.name for p in sdir.iterdir() if p.is_dir())
    if class_list is not None:
        missing = sorted(set(class_list) - found)
        for name in missing:
            warnings.warn(f"class {name!r} listed but absent under {root}", stacklevel=2)
        selected = sorted(set(class_list) & found)
    else:
        selected = sorted(found)
    if not selected:
        raise DatasetError(f"no classes found under {root}")
    index = {name: i for i, name in enumerate(selected)}

    entries = []
    for split in SPLITS:
        for name in selected:
            cdir = root / split / name
            if not cdir.is_dir():
                continue
            for p in sorted(cdir.iterdir()):
                if p.suffix.lower() in _EXTENSIONS:
                    entries.append(ManifestEntry(
                        rel_path=str(p.relative_to(root)), class_index=index[name], split=split))
    if not entries:
        raise DatasetError(f"no images found under {root}")
    return DatasetManifest(root=root, classes=selected, entries=entries)


def load_example(manifest: DatasetManifest, index: int, size: int = 256):
    """Decode one entry into network tensors.

    Returns ``(l_input, ab_target, class_index)`` where l_input is the
    replicated (3, size, size) normalized lightness and ab_target the
    (2, size, size) normalized chroma, both float32.
    """
    entry = manifest.entries[index]
    path = manifest.root / entry.rel_path
    try:
        with Image.open(path) as im:
            rgb = np.asarray(im.convert("RGB").resize((size, size), Image.BILINEAR))
    except Exception as exc:
        raise DatasetError(f"failed to decode {path}: {exc}") from exc
    pair = normalize(rgb_to_lab(rgb))
    l_input = replicate_l(pair.l_norm).astype(np.float32)
    ab_target = pair.ab_norm.astype(np.float32)
    return l_input, ab_target, entry.class_index


def batches(manifest: DatasetManifest, split: str, batch_size: int, seed: int,
            epoch: int = 0) -> list:
    """Seeded shuffled batches of manifest indices for one epoch.

    The permutation mixes seed and epoch so successive epochs reorder; the
    final short batch is kept. Returned indices point into manifest.entries.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    idx = [i for i, e in enumerate(manifest.entries) if e.split == split]
    if not idx:
        raise DatasetError(f"split {split!r} is empty")
    rng = np.random.default_rng([seed & 0xFFFFFFFF, epoch])
    order = rng.permutation(len(idx))
    idx = np.asarray(idx)[order]
    return [idx[i : i + batch_size] for i in range(0, len(idx), batch_size)]


def load_batch(manifest: DatasetManifest, indices, size: int = 256):
    """Stack examples into (N, 3, S, S), (N, 2, S, S), (N,) arrays."""
    ls, abs_, labels = [], [], []
    for i in indices:
        l, ab, y = load_example(manifest, int(i), size=size)
        ls.append(l)
        abs_.append(ab)
        labels.append(y)
    return np.stack(ls), np.stack(abs_), np.asarray(labels, dtype=np.int64)
