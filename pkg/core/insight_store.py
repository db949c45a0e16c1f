"""Insight persistence: one append-only JSONL file per entity plus an index"""
import json
import logging
import re
from collections import defaultdict
from pathlib import Path
from threading import Lock
from typing import Dict, Iterable, List, Union
from core.errors import InputError
from models.insight import Insight

logger = logging.getLogger(__name__)

INDEX_FILE = "index.json"


def _file_name(entity_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", entity_id) + ".jsonl"


class InsightStore:
    """
    Stores insights under ``<directory>/<entity>.jsonl``. The index file maps
    each entity to its file, the byte offset of every insight line and the
    number of reviews seen for it, which is the denominator of mention
    percentages.
    """

    def __init__(self, directory: Union[str, Path], reset: bool = False):
        self.directory = Path(directory)
        self._lock = Lock()
        self._index: Dict[str, dict] = {}
        self._review_ids: Dict[str, set] = defaultdict(set)
        if reset:
            self._clear()
        self._load_index()

    def _clear(self):
        if not self.directory.exists():
            return
        index_path = self.directory / INDEX_FILE
        if index_path.exists():
            with open(index_path, "r", encoding="utf-8") as f:
                entries = json.load(f).get("entities", {})
            for entry in entries.values():
                (self.directory / entry["file"]).unlink(missing_ok=True)
            index_path.unlink()

    def _load_index(self):
        index_path = self.directory / INDEX_FILE
        if not index_path.exists():
            return
        try:
            with open(index_path, "r", encoding="utf-8") as f:
                self._index = json.load(f).get("entities", {})
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"cannot read insight index {index_path}: {e}") from e
        logger.info("✓ Loaded insight index with %d entities from %s", len(self._index), self.directory)

    def _entry(self, entity_id: str) -> dict:
        return self._index.setdefault(
            entity_id, {"file": _file_name(entity_id), "offsets": [], "reviews": 0}
        )

    # ===== Writing =====

    def record_review(self, entity_id: str, review_id: str):
        """Count a review towards its entity, whether or not it produced insights"""
        with self._lock:
            if review_id in self._review_ids[entity_id]:
                return
            self._review_ids[entity_id].add(review_id)
            self._entry(entity_id)["reviews"] += 1

    def append(self, insight: Insight):
        with self._lock:
            entry = self._entry(insight.entity_id)
            self.directory.mkdir(parents=True, exist_ok=True)
            path = self.directory / entry["file"]
            line = json.dumps(insight.model_dump(mode="json"), ensure_ascii=False) + "\n"
            with open(path, "ab") as f:
                entry["offsets"].append(f.tell())
                f.write(line.encode("utf-8"))

    def extend(self, insights: Iterable[Insight]):
        for insight in insights:
            self.append(insight)

    def flush(self):
        """Write the index file"""
        with self._lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            with open(self.directory / INDEX_FILE, "w", encoding="utf-8") as f:
                json.dump({"version": 1, "entities": self._index}, f, ensure_ascii=False, indent=2, sort_keys=True)
                f.write("\n")

    # ===== Reading =====

    def entities(self) -> List[str]:
        return sorted(self._index)

    def review_count(self, entity_id: str) -> int:
        entry = self._index.get(entity_id)
        return entry["reviews"] if entry else 0

    def load(self, entity_id: str) -> List[Insight]:
        entry = self._index.get(entity_id)
        if entry is None:
            raise InputError(f"no insights stored for entity {entity_id!r}")
        path = self.directory / entry["file"]
        if not path.exists():
            return []
        insights = []
        with open(path, "rb") as f:
            for offset in entry["offsets"]:
                f.seek(offset)
                insights.append(Insight(**json.loads(f.readline().decode("utf-8"))))
        return insights

    def load_all(self) -> Dict[str, List[Insight]]:
        return {entity_id: self.load(entity_id) for entity_id in self.entities()}
