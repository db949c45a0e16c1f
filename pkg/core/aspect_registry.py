"""Registry of emergent aspects surfaced while standardising generated aspects"""
import json
import logging
from datetime import datetime
from pathlib import Path
from threading import Lock
from typing import Dict, List, Optional

logger = logging.getLogger(__name__)


class NewAspectRegistry:
    """
    Collects generated aspects that matched nothing in the taxonomy.
    Appends are serialised with a lock; when a path is given every entry is
    also appended to a JSONL audit file that survives restarts.
    """

    def __init__(self, path: Optional[Path] = None):
        self._lock = Lock()
        self._path = Path(path) if path else None
        # name -> first registration record
        self._entries: Dict[str, dict] = {}
        self._history: List[dict] = []
        if self._path is not None:
            self._load_from_file()

    def register(
        self,
        name: str,
        review_id: str = "",
        parent: Optional[str] = None,
        score_t: Optional[float] = None,
        score_v: Optional[float] = None,
    ) -> bool:
        """Record an emergent aspect; returns True when the name is new"""
        record = {
            "name": name,
            "review_id": review_id,
            "parent": parent,
            "score_t": score_t,
            "score_v": score_v,
            "timestamp": datetime.now().isoformat(),
        }
        with self._lock:
            is_new = name not in self._entries
            if is_new:
                self._entries[name] = record
            self._history.append(record)
            self._append_to_file(record)
        return is_new

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> List[str]:
        with self._lock:
            return list(self._entries)

    def history(self) -> List[dict]:
        with self._lock:
            return list(self._history)

    def _append_to_file(self, record: dict):
        if self._path is None:
            return
        try:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            with open(self._path, "a", encoding="utf-8") as f:
                f.write(json.dumps(record, ensure_ascii=False) + "\n")
        except OSError as e:
            logger.error("Error saving new-aspect audit record: %s", e)

    def _load_from_file(self):
        if not self._path.exists():
            logger.debug("No existing new-aspect audit file at %s, starting fresh", self._path)
            return
        with open(self._path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                self._entries.setdefault(record["name"], record)
                self._history.append(record)
        logger.info("✓ Loaded %d new aspects from %s", len(self._entries), self._path)
