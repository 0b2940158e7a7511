"""Dataset manifest: (participant, gesture, image, masks) records and
participant-disjoint train/test splitting.

Splits are always by participant, never by image, so no person appears on
both sides of a split.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import GestureType, NotFoundError, ValidationError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ManifestRecord:
    participant_id: str
    gesture_type: GestureType
    image: str  # paths relative to the manifest root
    object_mask: str
    hand_mask: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "gesture_type": self.gesture_type.value,
            "image": self.image,
            "object_mask": self.object_mask,
            "hand_mask": self.hand_mask,
        }


@dataclass
class DatasetManifest:
    root: Path
    records: list[ManifestRecord]

    def participants(self) -> list[str]:
        return sorted({r.participant_id for r in self.records})

    def fingerprint(self) -> str:
        """Hash over the sorted record list; stable under record reordering."""
        canon = sorted((r.to_json() for r in self.records), key=lambda d: (d["participant_id"], d["image"]))
        blob = json.dumps(canon, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def records_for(self, participant_ids) -> list[ManifestRecord]:
        wanted = set(participant_ids)
        return [r for r in self.records if r.participant_id in wanted]


@dataclass(frozen=True)
class SplitSpec:
    train_participants: tuple[str, ...]
    test_participants: tuple[str, ...]
    seed: int
    ratio: float

    def __post_init__(self):
        overlap = set(self.train_participants) & set(self.test_participants)
        if overlap:
            raise ValidationError(f"participants appear in both splits: {sorted(overlap)}")


def save_manifest(manifest: DatasetManifest, path: Optional[str | Path] = None) -> Path:
    out = Path(path) if path else manifest.root / "manifest.json"
    doc = {
        "schema_version": SCHEMA_VERSION,
        "records": [r.to_json() for r in manifest.records],
    }
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2))
    return out


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and eagerly validate a manifest.json.

    Checks: schema version, gesture types, duplicate records, and that every
    referenced file exists under the manifest root.
    """
    path = Path(path)
    if not path.exists():
        raise NotFoundError(f"manifest not found: {path}")
    doc = json.loads(path.read_text())
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"unsupported manifest schema_version: {doc.get('schema_version')!r}")
    root = path.parent
    records = []
    seen_images: set[str] = set()
    for raw in doc.get("records", []):
        try:
            gesture = GestureType(raw["gesture_type"])
        except ValueError:
            raise ValidationError(f"invalid gesture type: {raw['gesture_type']!r}") from None
        rec = ManifestRecord(
            participant_id=raw["participant_id"],
            gesture_type=gesture,
            image=raw["image"],
            object_mask=raw["object_mask"],
            hand_mask=raw.get("hand_mask"),
        )
        if rec.image in seen_images:
            raise ValidationError(f"duplicate record for image: {rec.image}")
        seen_images.add(rec.image)
        for rel in (rec.image, rec.object_mask, rec.hand_mask):
            if rel is not None and not (root / rel).exists():
                raise ValidationError(f"missing file referenced by manifest: {rel}")
        records.append(rec)
    return DatasetManifest(root=root, records=records)


def split_by_participant(manifest: DatasetManifest, ratio: float, seed: int) -> SplitSpec:
    """Seeded participant-level split: floor(ratio * P) participants in train."""
    if not 0.0 < ratio < 1.0:
        raise ValidationError(f"split ratio must be in (0,1), got {ratio}")
    participants = manifest.participants()
    if len(participants) < 2:
        raise ValidationError("need at least 2 participants to split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(participants))
    n_train = int(np.floor(ratio * len(participants)))
    shuffled = [participants[i] for i in order]
    return SplitSpec(
        train_participants=tuple(sorted(shuffled[:n_train])),
        test_participants=tuple(sorted(shuffled[n_train:])),
        seed=seed,
        ratio=ratio,
    )
