"""
Declarative base for the run ledger.
"""
from sqlalchemy.orm import declarative_base

# Create base class for models
Base = declarative_base()
