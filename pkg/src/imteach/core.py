"""Domain types and mutable teaching-session state.

The session is single-writer: all mutations go through one owner (the service
serializes them behind a per-session lock) and readers only ever see immutable
snapshots / copies. Samples are immutable after capture; a correction is
remove + add.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .imaging import load_png, save_png

MIN_SIDE = 16
MAX_WIDTH = 1920
MAX_HEIGHT = 1080


class ValidationError(ValueError):
    """An operation would violate a session invariant."""


class NotFoundError(KeyError):
    """An id (sample, category, session, job) does not exist."""


class GestureType(str, Enum):
    EXHIBITING = "exhibiting"
    POINTING = "pointing"
    PRESENTING = "presenting"
    TOUCHING = "touching"


class Condition(str, Enum):
    NAIVE = "naive"
    CLICK = "click"
    CONTOUR = "contour"
    IN_SITU = "in_situ"


class Phase(str, Enum):
    TEACHING = "teaching"
    TRAINING = "training"
    ASSESSING = "assessing"


# teaching -> training -> assessing -> teaching, and nothing else
_PHASE_NEXT = {
    Phase.TEACHING: Phase.TRAINING,
    Phase.TRAINING: Phase.ASSESSING,
    Phase.ASSESSING: Phase.TEACHING,
}


@dataclass(frozen=True)
class Frame:
    """An 8-bit RGB raster, row-major HxWx3."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        object.__setattr__(self, "pixels", px)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValidationError("frame must be HxWx3 RGB")
        h, w = px.shape[:2]
        if w < MIN_SIDE or h < MIN_SIDE:
            raise ValidationError(f"frame too small: {w}x{h} (min {MIN_SIDE}x{MIN_SIDE})")
        if w > MAX_WIDTH or h > MAX_HEIGHT:
            raise ValidationError(f"frame too large: {w}x{h} (max {MAX_WIDTH}x{MAX_HEIGHT})")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.width}x{self.height}".encode())
        h.update(self.pixels.tobytes())
        return h.hexdigest()

    def __eq__(self, other) -> bool:
        return isinstance(other, Frame) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True)
class Mask:
    """Single-channel region map aligned to a frame; 0 = background."""

    values: np.ndarray
    threshold: int = 128

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.uint8)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2:
            raise ValidationError("mask must be a single-channel HxW raster")
        if not 0 <= self.threshold <= 255:
            raise ValidationError("mask threshold must be an 8-bit value")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def binarized(self) -> np.ndarray:
        """{0,1} uint8 view: 1 where value >= threshold."""
        return (self.values >= self.threshold).astype(np.uint8)

    def area(self) -> int:
        return int(self.binarized().sum())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Mask)
            and self.threshold == other.threshold
            and np.array_equal(self.values, other.values)
        )

    @classmethod
    def from_binary(cls, binary: np.ndarray) -> "Mask":
        return cls(values=(np.asarray(binary) > 0).astype(np.uint8) * 255)


@dataclass(frozen=True)
class Category:
    id: int
    name: str
    color: tuple[int, int, int] = (64, 160, 64)

    def __post_init__(self):
        if not self.name:
            raise ValidationError("category name must be non-empty")


@dataclass(frozen=True)
class TeachingSample:
    """One captured demonstration. Immutable after capture."""

    sample_id: str
    frame: Frame
    category_id: int
    object_mask: Optional[Mask] = None
    hand_mask: Optional[Mask] = None
    captured_at: int = 0  # epoch millis, assigned server-side
    condition: Condition = Condition.NAIVE

    def __post_init__(self):
        if self.condition == Condition.IN_SITU and self.object_mask is None:
            raise ValidationError("mask required: in_situ samples must carry an object mask")
        if self.condition == Condition.NAIVE and self.object_mask is not None:
            raise ValidationError("naive samples carry no object mask at capture time")
        for name, mask in (("object_mask", self.object_mask), ("hand_mask", self.hand_mask)):
            if mask is not None and (mask.width, mask.height) != (self.frame.width, self.frame.height):
                raise ValidationError(
                    f"dimension mismatch: {name} is {mask.width}x{mask.height}, "
                    f"frame is {self.frame.width}x{self.frame.height}"
                )


def new_sample_id() -> str:
    return uuid.uuid4().hex[:12]


def now_ms() -> int:
    return int(time.time() * 1000)


@dataclass
class TeachingSet:
    samples: list[TeachingSample] = field(default_factory=list)
    categories: dict[int, Category] = field(default_factory=dict)

    def sample_ids(self) -> set[str]:
        return {s.sample_id for s in self.samples}

    def get(self, sample_id: str) -> TeachingSample:
        for s in self.samples:
            if s.sample_id == sample_id:
                return s
        raise NotFoundError(f"unknown sample_id: {sample_id}")


@dataclass
class SessionState:
    teaching_set: TeachingSet = field(default_factory=TeachingSet)
    active_category: Optional[int] = None
    latest_snapshot: object = None
    projection: object = None
    phase: Phase = Phase.TEACHING
    _subscribers: list[Callable[[dict], None]] = field(default_factory=list, repr=False)
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    def subscribe(self, callback: Callable[[dict], None]) -> None:
        self._subscribers.append(callback)

    def emit(self, event: dict) -> None:
        for cb in list(self._subscribers):
            cb(event)

    def advance_phase(self, to: Phase) -> None:
        with self._lock:
            if _PHASE_NEXT[self.phase] != to:
                raise ValidationError(f"illegal phase transition {self.phase.value} -> {to.value}")
            self.phase = to


def add_category(state: SessionState, category: Category) -> Category:
    with state._lock:
        if category.id in state.teaching_set.categories:
            raise ValidationError(f"duplicate category id: {category.id}")
        state.teaching_set.categories[category.id] = category
        if state.active_category is None:
            state.active_category = category.id
    return category


def add_sample(state: SessionState, sample: TeachingSample) -> SessionState:
    with state._lock:
        ts = state.teaching_set
        if sample.category_id not in ts.categories:
            raise ValidationError(f"unknown category id: {sample.category_id}")
        if sample.sample_id in ts.sample_ids():
            raise ValidationError(f"duplicate sample id: {sample.sample_id}")
        ts.samples.append(sample)
        state.emit(
            {
                "type": "sample_added",
                "sample_id": sample.sample_id,
                "category_id": sample.category_id,
                "counts": counts_per_category(ts),
            }
        )
    return state


def remove_sample(state: SessionState, sample_id: str) -> SessionState:
    with state._lock:
        ts = state.teaching_set
        sample = ts.get(sample_id)  # raises NotFoundError
        ts.samples.remove(sample)
        state.emit(
            {
                "type": "sample_removed",
                "sample_id": sample_id,
                "category_id": sample.category_id,
                "counts": counts_per_category(ts),
            }
        )
    return state


def counts_per_category(ts: TeachingSet) -> dict[int, int]:
    """Per-category sample counts; every known category is present (zero allowed)."""
    counts = {cid: 0 for cid in ts.categories}
    for s in ts.samples:
        counts[s.category_id] = counts.get(s.category_id, 0) + 1
    return counts


# --- session export / import ------------------------------------------------
#
# Layout: <dir>/session.json + frames/<id>.png + masks/<id>.png (+ hand_masks/).

def export_session(state: SessionState, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ts = state.teaching_set
    records = []
    for s in ts.samples:
        save_png(s.frame.pixels, out / "frames" / f"{s.sample_id}.png")
        rec = {
            "sample_id": s.sample_id,
            "category_id": s.category_id,
            "captured_at": s.captured_at,
            "condition": s.condition.value,
            "object_mask": None,
            "hand_mask": None,
        }
        if s.object_mask is not None:
            save_png(s.object_mask.values, out / "masks" / f"{s.sample_id}.png")
            rec["object_mask"] = f"masks/{s.sample_id}.png"
        if s.hand_mask is not None:
            save_png(s.hand_mask.values, out / "hand_masks" / f"{s.sample_id}.png")
            rec["hand_mask"] = f"hand_masks/{s.sample_id}.png"
        records.append(rec)
    doc = {
        "schema_version": 1,
        "categories": [
            {"id": c.id, "name": c.name, "color": list(c.color)}
            for c in ts.categories.values()
        ],
        "samples": records,
        "phase": state.phase.value,
        "active_category": state.active_category,
    }
    (out / "session.json").write_text(json.dumps(doc, indent=2))
    return out


def load_session(session_dir: str | Path) -> SessionState:
    root = Path(session_dir)
    doc = json.loads((root / "session.json").read_text())
    state = SessionState()
    for c in doc["categories"]:
        add_category(state, Category(id=c["id"], name=c["name"], color=tuple(c["color"])))
    for rec in doc["samples"]:
        frame = Frame(load_png(root / "frames" / f"{rec['sample_id']}.png"))
        obj = Mask(load_png(root / rec["object_mask"])) if rec["object_mask"] else None
        hand = Mask(load_png(root / rec["hand_mask"])) if rec["hand_mask"] else None
        sample = TeachingSample(
            sample_id=rec["sample_id"],
            frame=frame,
            category_id=rec["category_id"],
            object_mask=obj,
            hand_mask=hand,
            captured_at=rec["captured_at"],
            condition=Condition(rec["condition"]),
        )
        add_sample(state, sample)
    state.active_category = doc.get("active_category")
    return state
