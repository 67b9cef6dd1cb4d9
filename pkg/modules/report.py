# -*- coding: utf-8 -*-
""""""
"""
Created on Wed Mar 27 13:20:44 2024

Text reports for CLI runs: `key: value` header lines, emitted artifacts, then tables as CSV.
"""
import io
import logging
import time
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

import pandas as pd

from modules.setup_logger import logger


logger = logging.getLogger(__name__)


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, dict):
        return '{' + ', '.join(f'{k}: {_format_value(v)}' for k, v in value.items()) + '}'
    if isinstance(value, (list, tuple)):
        return '[' + ', '.join(_format_value(v) for v in value) + ']'
    return str(value)


@dataclass
class ExperimentReport:
    """Everything a run prints; identical command and seed give identical text without timings"""

    command: str
    seed: Optional[int] = None
    outcome: str = 'ok'
    params: dict = field(default_factory=dict)
    counters: Counter = field(default_factory=Counter)
    notes: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @contextmanager
    def timed(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start

    def add_table(self, name: str, table: pd.DataFrame) -> None:
        self.tables[name] = table

    def render(self, timings: bool = False) -> str:
        lines = [f'command: {self.command}', f'seed: {self.seed}', f'outcome: {self.outcome}']
        lines += [f'{key}: {_format_value(value)}' for key, value in self.params.items()]
        lines += [f'stage {stage}: {count}' for stage, count in sorted(self.counters.items())]
        lines += [f'note: {note}' for note in self.notes]
        if timings:
            lines += [f'time {name}: {seconds:.3f}s' for name, seconds in self.timings.items()]
        lines += list(self.artifacts)

        out = io.StringIO()
        out.write('\n'.join(lines) + '\n')
        for name, table in self.tables.items():
            out.write(f'# table {name}\n')
            table.to_csv(out, index_label='index', lineterminator='\n')
        return out.getvalue()

    def write(self, path, timings: bool = False) -> None:
        with open(path, 'w', encoding='utf-8', newline='\n') as file:
            file.write(self.render(timings))
        logger.info("Report written to %s", path)

    def write_tables(self, prefix) -> list:
        """One CSV per table, `<prefix>_<name>.csv`"""
        paths = []
        for name, table in self.tables.items():
            path = f'{prefix}_{name}.csv'
            table.to_csv(path, index_label='index')
            paths.append(path)
        return paths
