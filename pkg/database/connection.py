"""
Database connection and session management for the SQLite run ledger.

The engine is bound lazily because the database file lives inside the
output directory chosen per run.
"""
import logging
import os
import threading
from contextlib import contextmanager
from typing import Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import sessionmaker

logger = logging.getLogger(__name__)

engine: Optional[Engine] = None
SessionLocal = None
_lock = threading.Lock()


def ledger_url(output_dir: str, filename: str) -> str:
    return f"sqlite:///{os.path.abspath(os.path.join(output_dir, filename))}"


def configure_database(url: str) -> Engine:
    """
    Bind the module-level engine and session factory to ``url``.

    Re-configuring with the same URL is a no-op.
    """
    global engine, SessionLocal
    with _lock:
        if engine is not None and str(engine.url) == url:
            return engine
        if engine is not None:
            engine.dispose()
        engine = create_engine(
            url,
            connect_args={'check_same_thread': False} if url.startswith('sqlite') else {},
            echo=False  # Set to True for SQL logging in development
        )
        SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
        logger.debug(f"Run ledger bound to {url}")
        return engine


@contextmanager
def get_db_session():
    """Session that commits on success and rolls back on error."""
    if SessionLocal is None:
        raise RuntimeError("Database not configured; call configure_database() first")
    session = SessionLocal()
    try:
        yield session
        session.commit()
    except Exception as e:
        session.rollback()
        logger.error(f"Database session error: {e}")
        raise
    finally:
        session.close()


def init_database(url: str) -> None:
    """Bind to ``url`` and create the ledger tables if missing."""
    from database import Base
    import models.verification_run  # noqa: F401  registers the table

    configure_database(url)
    Base.metadata.create_all(bind=engine, checkfirst=True)
    logger.info("Run ledger tables initialized")
