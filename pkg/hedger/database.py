import json
import sqlite3
from datetime import datetime, timezone
from pathlib import Path

from hedger.config import get_settings

SCHEMA = """
CREATE TABLE IF NOT EXISTS runs (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    command TEXT NOT NULL,
    config_hash TEXT NOT NULL,
    out_dir TEXT NOT NULL,
    created_at TEXT NOT NULL,
    summary TEXT NOT NULL
);
"""


def get_db_path() -> Path:
    return get_settings().db_path


def get_db_connection():
    conn = sqlite3.connect(get_db_path())
    conn.row_factory = sqlite3.Row
    return conn


def init_db():
    get_db_path().parent.mkdir(parents=True, exist_ok=True)
    with get_db_connection() as conn:
        conn.executescript(SCHEMA)
        conn.commit()


def record_run(command: str, config_hash: str, out_dir: str, summary: dict) -> int:
    init_db()
    created_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    conn = get_db_connection()
    try:
        cursor = conn.execute(
            "INSERT INTO runs (command, config_hash, out_dir, created_at, summary) VALUES (?, ?, ?, ?, ?)",
            (command, config_hash, str(out_dir), created_at, json.dumps(summary, default=str)),
        )
        conn.commit()
        return cursor.lastrowid
    finally:
        conn.close()


def list_runs(limit: int = 50) -> list:
    init_db()
    conn = get_db_connection()
    try:
        rows = conn.execute("SELECT * FROM runs ORDER BY id DESC LIMIT ?", (limit,)).fetchall()
    finally:
        conn.close()
    return [
        {
            "id": row["id"],
            "command": row["command"],
            "config_hash": row["config_hash"],
            "out_dir": row["out_dir"],
            "created_at": row["created_at"],
            "summary": json.loads(row["summary"]),
        }
        for row in rows
    ]
