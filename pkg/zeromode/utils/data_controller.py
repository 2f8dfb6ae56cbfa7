"""
Central controller object responsible for all data-related tasks of a run: the SQLite run
catalog and the CSV / JSON artifacts in the output directory.
"""

from __future__ import annotations
from typing import TYPE_CHECKING
from typing import Iterable
import csv
import json
import logging
import os

from sqlalchemy import create_engine
from sqlalchemy import event
from sqlalchemy import select
from sqlalchemy import text
from sqlalchemy.orm import Session
from sqlalchemy.pool import StaticPool

from zeromode.utils.dbscheme import Base
from zeromode.utils.dbscheme import RunRecord
from zeromode.utils.dbscheme import ScalarRecord
from zeromode.utils.misc import IncorrectFileFormatError
from zeromode.utils.misc import InputError
from zeromode.utils.misc import format_float

if TYPE_CHECKING:
    from zeromode.scenarios import Column
    from zeromode.utils.config import RunConfig

logger = logging.getLogger(__name__)

CATALOG_NAME = 'catalog.sqlite'
SQLITE_HEADER = b'SQLite format 3\x00'


class RunController:
    """
    The run controller owns the output directory of a run. It records every run in the
    catalog and writes the data table, its column schema and the JSON summary.

    There is one run controller per output directory.
    """

    def __init__(self, output_dir: str) -> None:
        self.output_dir = output_dir
        try:
            os.makedirs(output_dir, exist_ok=True)
        except OSError as err:
            raise InputError(f'Cannot create output directory {output_dir!r}: {err.strerror}') from err
        if not os.access(output_dir, os.W_OK):
            raise InputError(f'Output directory {output_dir!r} is not writable')

        self.path = os.path.join(output_dir, CATALOG_NAME)
        self._check_file_format(self.path)
        self.session = self._setup_session(self.path)

        # Creates the tables of a fresh catalog, leaves an existing one untouched
        Base.metadata.create_all(self.session.get_bind())
        self.session.commit()

    def __enter__(self) -> RunController:
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def start_run(self, config: RunConfig, version: str) -> RunRecord:
        """Register a new run in the catalog."""
        run = RunRecord(scenario=config.scenario.value, seed=config.seed, version=version,
                        config_json=json.dumps(config.to_dict(), sort_keys=True))
        self.session.add(run)
        self.session.commit()
        return run

    def finish_run(self, run: RunRecord, status: str, wall_time: float, scalars: dict | None = None,
                   message: str = '') -> None:
        """Store the outcome and the summary scalars of a run."""
        run.status = status
        run.wall_time = wall_time
        run.message = message
        for name, value in sorted((scalars or {}).items()):
            self.session.add(ScalarRecord(run=run, name=name, value=float(value)))
        self.session.commit()

    def runs(self) -> list[RunRecord]:
        """Return all recorded runs, oldest first."""
        stmt = select(RunRecord).order_by(RunRecord.id_)
        return list(self.session.scalars(stmt))

    def artifact_path(self, name: str, suffix: str) -> str:
        return os.path.join(self.output_dir, f'{name}{suffix}')

    def write_table(self, name: str, columns: list[Column], rows: Iterable) -> str:
        """Write <name>.csv with a header row; floats carry 17 significant digits."""
        path = self.artifact_path(name, '.csv')
        with open(path, 'w', newline='', encoding='utf-8') as file:
            writer = csv.writer(file, lineterminator='\n')
            writer.writerow([column.name for column in columns])
            for row in rows:
                writer.writerow([_format_cell(value) for value in row])
        logger.info('Wrote %s', path)
        return path

    def write_schema(self, name: str, columns: list[Column]) -> str:
        """Write <name>.schema.json documenting every CSV column."""
        schema = {'table': f'{name}.csv',
                  'columns': [{'name': c.name, 'unit': c.unit, 'description': c.description} for c in columns]}
        return self._write_json(self.artifact_path(name, '.schema.json'), schema)

    def write_summary(self, name: str, summary: dict) -> str:
        """Write <name>.summary.json with stable key order."""
        return self._write_json(self.artifact_path(name, '.summary.json'), summary)

    def _write_json(self, path: str, payload: dict) -> str:
        with open(path, 'w', encoding='utf-8') as file:
            json.dump(_json_safe(payload), file, sort_keys=True, indent=2, ensure_ascii=False)
            file.write('\n')
        logger.info('Wrote %s', path)
        return path

    @property
    def has_unsaved_changes(self) -> bool:
        """Return if the catalog has flushed but uncommitted changes."""
        return self.session.info['commit_pending']

    def close(self) -> None:
        if self.has_unsaved_changes:
            self.session.commit()
        self.session.close()
        self.session.get_bind().dispose()

    def _check_file_format(self, path: str):
        """Check if the catalog file is of the correct format and if not, raise exception."""
        if not path.endswith('.sqlite'):
            raise IncorrectFileFormatError(f'Cannot open catalog {path!r}: incorrect file format detected')
        if os.path.exists(path) and os.path.getsize(path) > 0:
            with open(path, 'rb') as file:
                if file.read(len(SQLITE_HEADER)) != SQLITE_HEADER:
                    raise IncorrectFileFormatError(f'Cannot open catalog {path!r}: not an SQLite database')

    def _setup_session(self, path: str) -> Session:
        """Setup everything needed for the SQLite session and start it."""
        # Sweeps run in worker threads; one global connection (StaticPool) serializes access
        engine = create_engine(f'sqlite:///{path}',
                               connect_args={'check_same_thread': False},
                               poolclass=StaticPool)

        session = Session(engine)

        # Keep the rollback journal in memory only (avoids writing '-journal' files to disk)
        session.execute(text('PRAGMA journal_mode = MEMORY'))

        # No commits are pending when session is 'fresh'
        session.info['commit_pending'] = False

        @event.listens_for(session, 'after_flush')
        def flush_happened(session, flush_context):
            session.info['commit_pending'] = True

        @event.listens_for(session, 'after_commit')
        def commit_happened(session):
            session.info['commit_pending'] = False

        return session


def _format_cell(value) -> str:
    if isinstance(value, (bool, int, str)) and not isinstance(value, float):
        return str(value)
    return format_float(value)

def _json_safe(value):
    """Replace non-finite floats (not valid JSON) by strings, recursively."""
    if isinstance(value, dict):
        return {str(key): _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if hasattr(value, 'item') and not isinstance(value, (str, bytes)):
        value = value.item()
    if isinstance(value, float) and value != value:
        return 'nan'
    if isinstance(value, float) and value in (float('inf'), float('-inf')):
        return 'inf' if value > 0 else '-inf'
    return value
