"""Line-delimited JSON reading and writing of review records."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

from ..errors import DataError
from .records import ReviewRecord, normalize_rating
from .splits import DatasetSplit

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class IngestReport:
    records: list[ReviewRecord]
    skipped: int = 0


def parse_review(obj: dict) -> ReviewRecord:
    try:
        user, item, raw = str(obj["user_id"]), str(obj["item_id"]), float(obj["rating"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed review: {exc}") from exc
    rating = normalize_rating(raw, float(obj.get("rating_min", 1)), float(obj.get("rating_max", 5)))
    title = obj.get("title")
    return ReviewRecord(user, item, rating, str(obj.get("text") or ""), title and str(title))


def read_reviews(path: PathLike, strict: bool = False) -> IngestReport:
    """Read one review per line. Records that fail rating normalization are
    skipped and counted unless `strict`."""
    report = IngestReport([])
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            try:
                report.records.append(parse_review(obj))
            except DataError as exc:
                if strict:
                    raise DataError(f"{path}:{lineno}: {exc}") from exc
                report.skipped += 1
                logger.warning("%s:%d skipped: %s", path, lineno, exc)
    if report.skipped:
        logger.warning("%s: skipped %d record(s)", path, report.skipped)
    return report


def load_records(path: PathLike) -> list[ReviewRecord]:
    return read_reviews(path).records


def write_reviews(path: PathLike, records: Iterable[ReviewRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def write_split(split: DatasetSplit, out_dir: PathLike) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_reviews(out / "train.jsonl", split.train)
    write_reviews(out / "val.jsonl", split.validation)
    write_reviews(out / "test.jsonl", split.test)
    meta = {"seed": split.seed, "counts": split.counts}
    (out / "split_meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")
