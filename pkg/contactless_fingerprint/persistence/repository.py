"""Template store: an SQLite index plus one text file per enrolled user.

Provides persistent storage for:
- Templates (mean embedding + minutiae), one ``<user_id>.tpl`` file each
- The ``templates`` index table (user id, file, enrollment time, sizes)
- An append-only ``logs`` table of enrollment and verification events
"""

import json
import logging
import os
import re
import sqlite3
import tempfile
import threading
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..config import DEFAULT_DB_TIMEOUT, DEFAULT_INDEX_FILENAME, DEFAULT_LOG_LIST_LIMIT
from ..core.minutiae import minutiae_from_lines, minutiae_to_text
from ..core.models import Template
from ..errors import EnrollmentConflictError, IngestionError, ParameterError

logger = logging.getLogger(__name__)

TEMPLATE_TAG = "TEMPLATE"
TEMPLATE_VERSION = "v1"
TEMPLATE_SUFFIX = ".tpl"
USER_ID_PATTERN = re.compile(r"^[A-Za-z0-9_.-]+$")


def validate_user_id(user_id: str) -> str:
    if not isinstance(user_id, str) or not USER_ID_PATTERN.match(user_id) or user_id in (".", ".."):
        raise ParameterError(f"invalid user id {user_id!r}: use letters, digits, '_', '.' or '-'")
    return user_id


def template_to_text(template: Template) -> str:
    """Header, one embedding component per line (17 significant digits), minutiae block."""
    lines = [f"{TEMPLATE_TAG} {TEMPLATE_VERSION} {template.user_id} {template.enrolled_at.isoformat()}"]
    lines.extend("%.17g" % float(v) for v in np.asarray(template.mean_embedding, dtype=np.float64))
    return "\n".join(lines) + "\n" + minutiae_to_text(template.minutiae)


def template_from_text(text: str) -> Template:
    lines = text.splitlines()
    if not lines:
        raise ParameterError("empty template")
    header = lines[0].split()
    if len(header) != 4 or header[0] != TEMPLATE_TAG or header[1] != TEMPLATE_VERSION:
        raise ParameterError(f"bad template header: {lines[0]!r}")
    values = []
    index = 1
    while index < len(lines) and not lines[index].startswith("MINUTIAE"):
        try:
            values.append(float(lines[index]))
        except ValueError as e:
            raise ParameterError(f"bad embedding component: {lines[index]!r}") from e
        index += 1
    minutiae, _ = minutiae_from_lines(lines[index:])
    embedding = np.array(values, dtype=np.float64)
    if embedding.size == 0 or not np.all(np.isfinite(embedding)):
        raise ParameterError("template embedding must be non-empty and finite")
    return Template(
        user_id=validate_user_id(header[2]),
        mean_embedding=embedding,
        minutiae=minutiae,
        enrolled_at=datetime.fromisoformat(header[3]),
    )


class TemplateRepository:
    """SQLite-indexed template directory.

    Writers (save/remove) are serialized; readers may run concurrently.
    """

    def __init__(self, store_dir: Path):
        """Initialize repository.

        Args:
            store_dir: Directory holding ``index.db`` and the template files
        """
        self.store_dir = Path(store_dir)
        self.store_dir.mkdir(parents=True, exist_ok=True)
        self.db_path = self.store_dir / DEFAULT_INDEX_FILENAME
        self._write_lock = threading.Lock()

        self._init_database()

    @contextmanager
    def _get_connection(self):
        """Get database connection with proper configuration."""
        conn = sqlite3.connect(str(self.db_path), timeout=DEFAULT_DB_TIMEOUT)
        conn.row_factory = sqlite3.Row

        conn.execute("PRAGMA journal_mode=WAL")
        conn.execute("PRAGMA synchronous=NORMAL")
        try:
            yield conn
            conn.commit()
        except Exception:
            conn.rollback()
            raise
        finally:
            conn.close()

    def _init_database(self):
        """Initialize database schema."""
        with self._get_connection() as conn:
            conn.execute(
                """
                CREATE TABLE IF NOT EXISTS templates (
                    user_id TEXT PRIMARY KEY,
                    file_name TEXT NOT NULL,
                    enrolled_at TEXT NOT NULL,
                    embedding_size INTEGER NOT NULL,
                    minutiae_count INTEGER NOT NULL
                )
            """
            )

            conn.execute(
                """
                CREATE TABLE IF NOT EXISTS logs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    source TEXT NOT NULL,
                    level TEXT NOT NULL,
                    message TEXT NOT NULL,
                    timestamp TEXT NOT NULL,
                    user_id TEXT,
                    extra TEXT
                )
            """
            )

            conn.execute("CREATE INDEX IF NOT EXISTS idx_logs_user_id ON logs(user_id)")
            conn.execute("CREATE INDEX IF NOT EXISTS idx_logs_timestamp ON logs(timestamp)")

    def _template_path(self, user_id: str) -> Path:
        return self.store_dir / f"{user_id}{TEMPLATE_SUFFIX}"

    def save_template(self, template: Template) -> Path:
        """Persist a new template.

        The file is written under a temporary name and renamed in the same
        transaction that inserts the index row; any failure leaves neither.

        Raises:
            EnrollmentConflictError: if the user id is already enrolled
        """
        user_id = validate_user_id(template.user_id)
        path = self._template_path(user_id)
        text = template_to_text(template)
        with self._write_lock:
            tmp_name = None
            try:
                with self._get_connection() as conn:
                    row = conn.execute("SELECT 1 FROM templates WHERE user_id = ?", (user_id,)).fetchone()
                    if row:
                        raise EnrollmentConflictError(f"user '{user_id}' is already enrolled")
                    fd, tmp_name = tempfile.mkstemp(prefix=".tpl-", dir=self.store_dir)
                    with os.fdopen(fd, "w", encoding="utf-8") as handle:
                        handle.write(text)
                    conn.execute(
                        """
                        INSERT INTO templates (user_id, file_name, enrolled_at, embedding_size, minutiae_count)
                        VALUES (?, ?, ?, ?, ?)
                    """,
                        (
                            user_id,
                            path.name,
                            template.enrolled_at.isoformat(),
                            int(np.asarray(template.mean_embedding).size),
                            len(template.minutiae),
                        ),
                    )
                    os.replace(tmp_name, path)
                    tmp_name = None
            finally:
                if tmp_name and os.path.exists(tmp_name):
                    os.unlink(tmp_name)
        logger.info(f"Stored template for '{user_id}' at {path}")
        return path

    def get_template(self, user_id: str) -> Optional[Template]:
        """Load a template by user id, or None if not enrolled."""
        with self._get_connection() as conn:
            row = conn.execute("SELECT file_name FROM templates WHERE user_id = ?", (user_id,)).fetchone()
        if not row:
            return None
        path = self.store_dir / row["file_name"]
        try:
            return template_from_text(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise IngestionError(f"cannot read template: {e.strerror}", path) from e
        except ValueError as e:
            raise IngestionError(f"corrupt template ({e})", path) from e

    def has_template(self, user_id: str) -> bool:
        with self._get_connection() as conn:
            return conn.execute("SELECT 1 FROM templates WHERE user_id = ?", (user_id,)).fetchone() is not None

    def list_templates(self) -> List[Dict[str, Any]]:
        """Index rows sorted by user id."""
        with self._get_connection() as conn:
            rows = conn.execute("SELECT * FROM templates ORDER BY user_id").fetchall()
            return [
                {
                    "user_id": row["user_id"],
                    "file_name": row["file_name"],
                    "enrolled_at": row["enrolled_at"],
                    "embedding_size": row["embedding_size"],
                    "minutiae_count": row["minutiae_count"],
                }
                for row in rows
            ]

    def remove_template(self, user_id: str) -> bool:
        """Delete a template. Returns False (no error) if it was not enrolled.

        The file is removed only after the index row deletion has committed.
        """
        with self._write_lock:
            with self._get_connection() as conn:
                row = conn.execute("SELECT file_name FROM templates WHERE user_id = ?", (user_id,)).fetchone()
                if not row:
                    return False
                path = self.store_dir / row["file_name"]
                conn.execute("DELETE FROM templates WHERE user_id = ?", (user_id,))
            path.unlink(missing_ok=True)
        logger.info(f"Removed template for '{user_id}'")
        return True

    def add_log(
        self,
        source: str,
        level: str,
        message: str,
        user_id: Optional[str] = None,
        extra: Optional[Dict[str, Any]] = None,
    ) -> bool:
        """Add a log entry.

        Args:
            source: Log source (e.g., "enroll", "verify", "remove")
            level: Log level (e.g., "info", "warning", "error")
            message: Log message
            user_id: Optional user the event concerns
            extra: Optional extra data as dict

        Returns:
            True if successful
        """
        try:
            with self._get_connection() as conn:
                conn.execute(
                    """
                    INSERT INTO logs (source, level, message, timestamp, user_id, extra)
                    VALUES (?, ?, ?, ?, ?, ?)
                """,
                    (
                        source,
                        level,
                        message,
                        datetime.now(timezone.utc).isoformat(),
                        user_id,
                        json.dumps(extra) if extra else None,
                    ),
                )
            return True
        except sqlite3.Error as e:
            logger.warning(f"Failed to write '{source}' audit record: {e}")
            return False

    def get_logs(
        self,
        user_id: Optional[str] = None,
        source: Optional[str] = None,
        level: Optional[str] = None,
        limit: int = DEFAULT_LOG_LIST_LIMIT,
    ) -> List[Dict[str, Any]]:
        """Get log entries, newest first, optionally filtered."""
        with self._get_connection() as conn:
            query = "SELECT * FROM logs WHERE 1 = 1"
            params: List[Any] = []

            if user_id:
                query += " AND user_id = ?"
                params.append(user_id)

            if source:
                query += " AND source = ?"
                params.append(source)

            if level:
                query += " AND level = ?"
                params.append(level)

            query += " ORDER BY id DESC LIMIT ?"
            params.append(limit)

            rows = conn.execute(query, params).fetchall()

            return [
                {
                    "id": row["id"],
                    "source": row["source"],
                    "level": row["level"],
                    "message": row["message"],
                    "timestamp": row["timestamp"],
                    "user_id": row["user_id"],
                    "extra": json.loads(row["extra"]) if row["extra"] else None,
                }
                for row in rows
            ]
