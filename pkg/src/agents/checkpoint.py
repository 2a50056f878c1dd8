"""JSON checkpoints for agent pools."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


def save_checkpoint(path: Union[str, Path], payload: Dict[str, Any]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = dict(payload, version=CHECKPOINT_VERSION)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh)
    logger.debug(f"Saved checkpoint {path}")


def load_checkpoint(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {data.get('version')} in {path}")
    return data
