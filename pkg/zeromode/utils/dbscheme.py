"""
ORM class definitions for the run catalog: run (one CLI invocation and its configuration)
and scalar (summary values produced by a run).
"""

from __future__ import annotations

import datetime
import json

from sqlalchemy import Float
from sqlalchemy import ForeignKey
from sqlalchemy import Integer
from sqlalchemy import String
from sqlalchemy import DateTime
from sqlalchemy import UnicodeText
from sqlalchemy.orm import DeclarativeBase
from sqlalchemy.orm import mapped_column
from sqlalchemy.orm import relationship


class Base(DeclarativeBase):
    pass

class RunRecord(Base):
    """
    Run table. One row per invocation of a scenario, holding the echoed configuration and
    the outcome.
    """

    __tablename__ = 'run'

    id_ = mapped_column(Integer, primary_key=True)
    scenario = mapped_column(String(32), nullable=False)
    started = mapped_column(DateTime, default=datetime.datetime.now)
    # Wall time in seconds (None while running)
    wall_time = mapped_column(Float, default=None)
    seed = mapped_column(Integer, default=0)
    # Package version that produced the run
    version = mapped_column(String(32), default='')
    # Resolved configuration as JSON (see RunConfig.to_dict)
    config_json = mapped_column(UnicodeText, nullable=False, default='{}')
    # 'running', 'ok', 'input-error' or 'numerical-error'
    status = mapped_column(String(32), nullable=False, default='running')
    # Error message of a failed run
    message = mapped_column(UnicodeText, default='')
    # Summary scalars of this run
    scalars = relationship('ScalarRecord', back_populates='run', cascade='all, delete-orphan')

    @property
    def config(self) -> dict:
        """Return the decoded configuration."""
        return json.loads(self.config_json)

    def scalar_dict(self) -> dict[str, float]:
        """Return the scalars as a name -> value mapping."""
        return {scalar.name: scalar.value for scalar in sorted(self.scalars, key=lambda s: s.name)}


class ScalarRecord(Base):
    """
    Scalar table. Key results of a run (entropy maxima, bounds, timescales, fit slopes).
    """

    __tablename__ = 'scalar'

    id_ = mapped_column(Integer, primary_key=True)
    # Run ID to which this scalar belongs
    run_id = mapped_column(ForeignKey('run.id_'))
    run = relationship('RunRecord', back_populates='scalars')
    name = mapped_column(String(128), nullable=False)
    value = mapped_column(Float)
