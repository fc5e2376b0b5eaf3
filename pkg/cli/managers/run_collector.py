"""
Run Collector for the command line.

Commands hand their results to one collector while tasks are running; the
collector writes every artifact once all tasks have finished, so no file is
ever written from a worker thread.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from core.continuous import ContinuousTrajectory
from core.integrators import Trajectory
from core.objective import ObjectiveSpec
from utils.file_io import trajectory_header, trajectory_row, write_csv, write_json
from utils.logging import get_logger


@dataclass
class _Table:
    header: List[str]
    rows: List[List[Any]] = field(default_factory=list)


class RunCollector:
    """Accumulates trajectories, tables and summaries keyed by output file name."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.logger = get_logger("cli.collector")
        self._tables: Dict[str, _Table] = {}
        self._documents: Dict[str, Any] = {}

    def add_trajectory(self, name: str, trajectory: Trajectory) -> None:
        """Discrete run; t is the iteration index times the step size."""
        dim = trajectory.records[0].x.size
        table = _Table(trajectory_header(dim))
        for record in trajectory.records:
            table.rows.append(trajectory_row(record.iteration, record.iteration * trajectory.epsilon,
                                             record.subopt, record.H, record.V, record.x, record.p))
        self._tables[f"{name}.csv"] = table

    def add_continuous(self, name: str, trajectory: ContinuousTrajectory,
                       f: Optional[ObjectiveSpec] = None) -> None:
        """Continuous run; suboptimality is left empty without an objective."""
        table = _Table(trajectory_header(trajectory.x.shape[1]))
        for k, (t, x, p, H) in enumerate(zip(trajectory.t, trajectory.x, trajectory.p, trajectory.H)):
            subopt = None if f is None else f.suboptimality(x)
            table.rows.append(trajectory_row(k, t, subopt, H, None, x, p))
        self._tables[f"{name}.csv"] = table

    def add_table(self, file_name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
        self._tables[file_name] = _Table(list(header), [list(row) for row in rows])

    def add_document(self, file_name: str, document: Any) -> None:
        self._documents[file_name] = document

    def write(self) -> List[Path]:
        """Write everything collected; returns the written paths."""
        written = []
        for file_name, table in sorted(self._tables.items()):
            written.append(write_csv(self.out_dir / file_name, table.header, table.rows))
        for file_name, document in sorted(self._documents.items()):
            written.append(write_json(self.out_dir / file_name, document))
        self.logger.info(f"Wrote {len(written)} file(s) to {self.out_dir}")
        return written
