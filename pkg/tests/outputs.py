"""Byte-level comparison of experiment output directories."""

import json
from pathlib import Path


def snapshot(out_dir) -> dict:
    """File name -> bytes, with the sidecar wall-clock field removed."""
    snap = {}
    for f in sorted(Path(out_dir).iterdir()):
        data = f.read_bytes()
        if f.suffix == ".json":
            meta = json.loads(data)
            meta.pop("wall_time_s", None)
            data = json.dumps(meta, sort_keys=True).encode()
        snap[f.name] = data
    return snap
