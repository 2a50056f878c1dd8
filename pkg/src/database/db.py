"""SQLite run journal: engine setup and session scope."""

import logging
import os
from contextlib import contextmanager
from typing import Iterator, Optional

from sqlalchemy import create_engine, event
from sqlalchemy.orm import Session, sessionmaker
from sqlalchemy.pool import StaticPool

from .models import Base

logger = logging.getLogger(__name__)

MEMORY = ":memory:"


def default_db_path() -> str:
    """GALBP_DB_PATH, else data/galbp.db relative to project root."""
    env_path = os.environ.get("GALBP_DB_PATH")
    if env_path:
        return env_path
    project_root = os.path.dirname(os.path.dirname(os.path.dirname(__file__)))
    return os.path.join(project_root, "data", "galbp.db")


def _enable_foreign_keys(dbapi_connection, _record):
    # SQLite leaves episode_results.run_id unchecked otherwise
    cursor = dbapi_connection.cursor()
    cursor.execute("PRAGMA foreign_keys=ON")
    cursor.close()


class Database:
    """Run journal connection. Tables are created when the journal is opened.

    `":memory:"` gives a journal that lives as long as this object; every
    session shares its single connection.
    """

    def __init__(self, db_path: Optional[str] = None):
        self.db_path = db_path or default_db_path()
        if self.db_path == MEMORY:
            self.engine = create_engine("sqlite://", poolclass=StaticPool,
                                        connect_args={"check_same_thread": False})
        else:
            os.makedirs(os.path.dirname(os.path.abspath(self.db_path)), exist_ok=True)
            self.engine = create_engine(f"sqlite:///{self.db_path}")
        event.listen(self.engine, "connect", _enable_foreign_keys)
        self.SessionLocal = sessionmaker(bind=self.engine, expire_on_commit=False)
        self.create_tables()
        logger.debug(f"Opened run journal {self.db_path}")

    def create_tables(self):
        Base.metadata.create_all(self.engine)

    @contextmanager
    def session(self) -> Iterator[Session]:
        """Transaction scope: commit on success, roll back on error."""
        session = self.SessionLocal()
        try:
            yield session
            session.commit()
        except Exception:
            session.rollback()
            raise
        finally:
            session.close()


_db: Optional[Database] = None


def get_db(db_path: Optional[str] = None) -> Database:
    """Process-wide journal used by the command line."""
    global _db
    if _db is None:
        _db = Database(db_path)
    return _db
