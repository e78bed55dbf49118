"""Line-delimited JSON dataset format and flat JSON config files.

One story per line, keys in this order::

    {"id": str,
     "text_embeddings": [[...], ...],      # M x d
     "image_embeddings": [[...], ...],     # N x d
     "gold_text_order": [...],             # gold position of each sentence
     "gold_image_order": [...],            # gold position of each image
     "cross_sim": [[...], ...] | null}     # M x N, optional

Embeddings are float32 written with the shortest decimal that parses back to
the same float32; similarities are float64 written with ``repr``.
"""

from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .core import ElementSet, Modality, StoryPair, validate_story


class DatasetError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, story_id: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if story_id is not None:
            where.append(f"story {story_id!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.story_id = story_id


def _f32(v) -> str:
    return np.format_float_positional(np.float32(v), unique=True, trim="-")


def _f64(v) -> str:
    return repr(float(v))


def _matrix(rows, fmt) -> str:
    return "[" + ",".join("[" + ",".join(fmt(v) for v in row) + "]" for row in rows) + "]"


def story_to_line(story: StoryPair) -> str:
    arrays = [story.text.elements, story.image.elements]
    if story.cross_sim is not None:
        arrays.append(story.cross_sim)
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise DatasetError("non-finite values cannot be serialized", story_id=story.id)
    parts = [
        f'"id":{json.dumps(story.id)}',
        f'"text_embeddings":{_matrix(story.text.elements, _f32)}',
        f'"image_embeddings":{_matrix(story.image.elements, _f32)}',
        f'"gold_text_order":{json.dumps(list(story.text.gold_order))}',
        f'"gold_image_order":{json.dumps(list(story.image.gold_order))}',
        '"cross_sim":' + ("null" if story.cross_sim is None else _matrix(story.cross_sim, _f64)),
    ]
    return "{" + ",".join(parts) + "}"


def _embeddings(raw, key: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{key} must be a list of equal-length rows")
    return arr.astype(np.float32)


def story_from_obj(obj: dict) -> StoryPair:
    for key in ("id", "text_embeddings", "image_embeddings", "gold_text_order", "gold_image_order"):
        if key not in obj:
            raise ValueError(f"missing field {key!r}")
    for key in ("gold_text_order", "gold_image_order"):
        if not isinstance(obj[key], list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in obj[key]):
            raise ValueError(f"{key} must be a list of integers")
    sim = obj.get("cross_sim")
    return StoryPair(
        str(obj["id"]),
        ElementSet(_embeddings(obj["text_embeddings"], "text_embeddings"), obj["gold_text_order"], Modality.TEXT),
        ElementSet(_embeddings(obj["image_embeddings"], "image_embeddings"), obj["gold_image_order"], Modality.IMAGE),
        None if sim is None else np.asarray(sim, dtype=np.float64),
    )


def write_dataset(stories: Iterable[StoryPair], path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for story in stories:
            fh.write(story_to_line(story) + "\n")
            n += 1
    return n


def read_dataset(path, validate: bool = True) -> list[StoryPair]:
    stories = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                story = story_from_obj(json.loads(line))
            except (json.JSONDecodeError, ValueError, TypeError) as exc:
                raise DatasetError(f"cannot parse story: {exc}", line=lineno) from exc
            if validate:
                bad = validate_story(story)
                if bad:
                    raise DatasetError("; ".join(bad), line=lineno, story_id=story.id)
            stories.append(story)
    return stories


def load_config(path) -> dict:
    """Flat key/value JSON object; values are scalars or lists of scalars."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path}: {exc}") from exc

    def flat(v):
        return not isinstance(v, dict) and not (isinstance(v, list) and any(isinstance(x, (dict, list)) for x in v))

    if not isinstance(data, dict) or not all(flat(v) for v in data.values()):
        raise ValueError(f"config {path}: expected a flat JSON object of key/value pairs")
    return data


def field_names(*classes) -> set[str]:
    return {f.name for cls in classes for f in fields(cls)}
