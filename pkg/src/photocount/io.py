"""Writers for the CSV and JSON artifacts produced by the command line."""

from __future__ import annotations

import csv
import json
import sys
from contextlib import contextmanager
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .montecarlo import EventTrain


@contextmanager
def _open(path: str | None) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


# destinations do not affect results; keep them out so reruns are byte-identical
_OUTPUT_KEYS = ("out", "out2", "paths_out", "cdf_out")


def _header(fh: IO[str], command: str, config: dict) -> None:
    config = {k: v for k, v in config.items() if k not in _OUTPUT_KEYS}
    fh.write(f"# photocount {command}\n")
    fh.write(f"# seed: {config.get('seed')}\n")
    fh.write(f"# config: {json.dumps(config, sort_keys=True)}\n")


def write_csv(
    path: str | None,
    command: str,
    config: dict,
    names: Sequence[str],
    rows: Iterable[Sequence[float]],
) -> None:
    """Comment header, then a comma-separated table with LF line endings."""
    with _open(path) as fh:
        _header(fh, command, config)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def write_train(path: str | None, command: str, config: dict, train: EventTrain, fmt: str = "csv") -> None:
    if fmt == "csv":
        write_csv(path, command, config, ["t"], ((t,) for t in train.timestamps))
        return
    doc = {
        "command": command,
        "config": {k: v for k, v in config.items() if k not in _OUTPUT_KEYS},
        "horizon": train.horizon,
        "dead_time": train.dead_time,
        "timestamps": train.timestamps.tolist(),
    }
    with _open(path) as fh:
        json.dump(doc, fh)
        fh.write("\n")


def read_train_csv(path: str, horizon: float, dead_time: float = 0.0) -> EventTrain:
    """Load a train written by :func:`write_train` in CSV form."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    return EventTrain(np.array([float(r[0]) for r in rows[1:]]), horizon, dead_time)
