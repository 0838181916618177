"""Parsing utilities for ChromaChords."""
import re
from typing import Union

from .errors import InvalidParameter

NOTE_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")

_LETTER_PC = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}


def parse_tonic(value: Union[str, int]) -> int:
    """
    Parse a tonic given as a pitch class (0-11) or a note name.

    Note names are case-insensitive, with an optional single '#' or 'b'
    accidental: C, C#, Db, ..., B.
    """
    if isinstance(value, int):
        if 0 <= value <= 11:
            return value
        raise InvalidParameter(f"tonic must be 0-11 or a note name, got {value}")

    text = value.strip()
    if re.fullmatch(r"\d{1,2}", text):
        return parse_tonic(int(text))

    match = re.fullmatch(r"([A-Ga-g])([#bB]?)", text)
    if not match:
        raise InvalidParameter(f"tonic must be 0-11 or a note name (C..B), got {value!r}")

    letter, accidental = match.groups()
    pc = _LETTER_PC[letter.upper()]
    if accidental == "#":
        pc += 1
    elif accidental in ("b", "B"):
        pc -= 1
    return pc % 12


def tonic_name(pc: int) -> str:
    """Sharp-spelled name of a pitch class."""
    return NOTE_NAMES[pc % 12]
