# cuspfreq/utils.py
import csv
from fractions import Fraction
from typing import IO, Iterable, Mapping, Sequence

import orjson
from pydantic import BaseModel

from .errors import InvalidParameterError, MalformedNumberError


def parse_float_list(text: str) -> list[float]:
    """Parses a comma-separated list such as '2,3,5'."""
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise MalformedNumberError(f"expected a comma-separated list of numbers, got {text!r}")


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise MalformedNumberError(f"expected a comma-separated list of integers, got {text!r}")


def parse_rational(text: str) -> Fraction:
    """Parses '1', '1/2' or '0.5' into an exact Fraction."""
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise MalformedNumberError(f"expected a rational number, got {text!r}")
    return value


def parse_schedule(text: str, n: int) -> list[int] | None:
    """'geometric' keeps the default 10 * 2^k schedule; otherwise an explicit list capped at N."""
    if text.strip().lower() == "geometric":
        return None
    schedule = sorted(set(parse_int_list(text)))
    if not schedule or schedule[0] < 1:
        raise InvalidParameterError("checkpoints must be positive integers")
    if schedule[-1] > n:
        raise InvalidParameterError(f"checkpoint {schedule[-1]} exceeds N = {n}")
    return schedule


def to_jsonable(document) -> object:
    if isinstance(document, BaseModel):
        return document.model_dump(mode="json", exclude_none=True)
    return document


def dump_json(document) -> bytes:
    """Sorted-key JSON, so repeated runs are byte-identical."""
    return orjson.dumps(to_jsonable(document), option=orjson.OPT_SORT_KEYS)


def write_json(document, stream: IO[str]):
    stream.write(dump_json(document).decode("utf-8") + "\n")


def write_jsonl(documents: Iterable, stream: IO[str]):
    for document in documents:
        write_json(document, stream)
        stream.flush()


def flatten(row: Mapping, prefix: str = "") -> dict:
    """Nested dicts become dotted columns: {'I': {'2': 0.1}} -> {'I.2': 0.1}."""
    flat = {}
    for key, value in row.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def write_csv(rows: Sequence[Mapping], stream: IO[str]):
    """Header row from the union of flattened keys, in first-seen order."""
    flat_rows = [flatten(to_jsonable(row)) for row in rows]
    header: list[str] = []
    for row in flat_rows:
        header.extend(key for key in row if key not in header)
    writer = csv.DictWriter(stream, fieldnames=header, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    writer.writeheader()
    writer.writerows(flat_rows)
