# cuspfreq/fixtures.py
import logging
import re
from pathlib import Path
from typing import Optional

import orjson
from pydantic import ValidationError

from .arith import format_number
from .cf import CFParams
from .config import settings
from .models import CalibrationFixture

logger = logging.getLogger(__name__)

FIXTURE_VERSION = 1


class FixtureStore:
    """
    Versioned calibration fixtures on disk, one JSON file per (a,b) pair.
    """
    def __init__(self, directory: Optional[str] = None):
        self.directory = Path(directory or settings.FIXTURE_DIR)

    def use(self, directory: str):
        """Points the store at another directory (CLI --fixture-dir)."""
        self.directory = Path(directory)

    @staticmethod
    def file_name(params: CFParams) -> str:
        raw = f"ab_{format_number(params.a)}_{format_number(params.b)}"
        return re.sub(r"[^0-9A-Za-z_]", lambda m: {"-": "m", "/": "o"}.get(m.group(0), "x"), raw) + ".json"

    def path_for(self, params: CFParams) -> Path:
        return self.directory / self.file_name(params)

    def load(self, params: CFParams) -> Optional[CalibrationFixture]:
        """
        Returns the stored fixture, or None when it is missing, unreadable or
        written by another fixture version.
        """
        path = self.path_for(params)
        if not path.exists():
            logger.debug("No calibration fixture at %s", path)
            return None
        try:
            fixture = CalibrationFixture.model_validate(orjson.loads(path.read_bytes()))
        except (orjson.JSONDecodeError, ValidationError) as e:
            logger.warning("Ignoring unreadable fixture %s: %s", path, e)
            return None
        if fixture.version != FIXTURE_VERSION:
            logger.warning("Ignoring fixture %s with version %d", path, fixture.version)
            return None
        return fixture

    def save(self, fixture: CalibrationFixture) -> Path:
        params = CFParams.ab(fixture.a, fixture.b)
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path_for(params)
        path.write_bytes(orjson.dumps(fixture.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2))
        logger.info("Wrote calibration fixture %s", path)
        return path


fixture_store = FixtureStore()
