"""
Base repository for ledger tables.
"""
from abc import ABC
from typing import TypeVar, Generic, Type
from sqlalchemy.orm import Session, Query
from database import Base

ModelType = TypeVar('ModelType', bound=Base)


class BaseRepository(Generic[ModelType], ABC):
    """Typed access to one mapped table; callers own the session."""

    def __init__(self, model_class: Type[ModelType]):
        self.model_class = model_class

    def query(self, session: Session, **filters) -> Query:
        """Query on the model, restricted by equality on known columns."""
        query = session.query(self.model_class)
        for key, value in filters.items():
            if value is not None and hasattr(self.model_class, key):
                query = query.filter(getattr(self.model_class, key) == value)
        return query

    def create(self, session: Session, **kwargs) -> ModelType:
        """Add a row and flush it so its id is populated."""
        entity = self.model_class(**kwargs)
        session.add(entity)
        session.flush()
        return entity
