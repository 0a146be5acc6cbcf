"""Knowledge bank: versioned lookup tables and rule constants.

Coefficient tables, relative-risk bands, fitness-test conversions,
state-space dimensions, ROIs, transition costs, and guidance knobs all
live in a JSON document rather than code, so a deployment can swap or
audit the medical content without touching the engine. The shipped
default bank embeds test fixtures (input -> output vectors) that the
test suite must reproduce.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import BankError, OutOfModelRangeError

_REQUIRED_SECTIONS = (
    "ascvd",
    "rhr_relative_risk",
    "step_test_table",
    "walk_test_table",
    "confidence",
    "dimensions",
    "personalization",
    "transitions",
    "rois",
    "rules",
)


class KnowledgeBank:
    """Immutable wrapper over the bank document with typed accessors."""

    def __init__(self, doc: dict[str, Any]):
        self._doc = doc
        self._validate()

    # -- loading ------------------------------------------------------------

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeBank":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh))

    @classmethod
    def default(cls) -> "KnowledgeBank":
        return _default_bank()

    @property
    def doc(self) -> dict[str, Any]:
        return self._doc

    @property
    def name(self) -> str:
        return self._doc.get("name", "unnamed-bank")

    @property
    def schema_version(self) -> int:
        return int(self._doc["schema_version"])

    def _validate(self) -> None:
        missing = [s for s in _REQUIRED_SECTIONS if s not in self._doc]
        if missing:
            raise BankError(f"bank missing sections: {', '.join(missing)}")
        lo = None
        for band_lo, band_hi, mult in self._doc["rhr_relative_risk"]:
            if mult <= 0:
                raise BankError(f"non-positive RHR multiplier {mult}")
            if band_hi <= band_lo:
                raise BankError("empty RHR band")
            if lo is not None and band_lo != lo:
                raise BankError("RHR bands must tile the range without gaps")
            lo = band_hi
        for sex in ("female", "male"):
            if sex not in self._doc["ascvd"]["coefficients"]:
                raise BankError(f"ascvd coefficients missing sex {sex!r}")
            if sex not in self._doc["step_test_table"]:
                raise BankError(f"step-test table missing sex {sex!r}")
            if self._doc["step_test_table"][sex]["slope_per_bpm"] > 0:
                raise BankError("step-test indicator must not increase with recovery HR")

    # -- table lookups ------------------------------------------------------

    def ascvd_validity(self) -> tuple[int, int]:
        lo, hi = self._doc["ascvd"]["valid_age"]
        return int(lo), int(hi)

    def ascvd_coefficients(self, sex: str) -> dict[str, Any]:
        return self._doc["ascvd"]["coefficients"][sex]

    def rhr_multiplier(self, resting_hr: float) -> float:
        bands = self._doc["rhr_relative_risk"]
        for i, (lo, hi, mult) in enumerate(bands):
            last = i == len(bands) - 1
            if lo <= resting_hr < hi or (last and resting_hr == hi):
                return float(mult)
        raise OutOfModelRangeError(f"resting HR {resting_hr} outside relative-risk table")

    def step_test_indicator(self, recovery_hr: float, age: int, sex: str) -> float:
        row = self._doc["step_test_table"][sex]
        lo, hi = self._doc["step_test_table"]["clamp"]
        value = (
            row["intercept"]
            + row["slope_per_bpm"] * recovery_hr
            + row["age_adjust_per_year"] * age
        )
        return min(max(value, lo), hi)

    def walk_test_indicator(self, distance_m: float, age: int, sex: str) -> float:
        row = self._doc["walk_test_table"][sex]
        lo, hi = self._doc["walk_test_table"]["clamp"]
        value = row["intercept"] + row["slope_per_m"] * distance_m
        return min(max(value, lo), hi)

    # -- sections passed through to other layers ----------------------------

    @property
    def confidence(self) -> dict[str, float]:
        return self._doc["confidence"]

    @property
    def dimensions(self) -> list[dict[str, Any]]:
        return self._doc["dimensions"]

    @property
    def personalization(self) -> dict[str, Any]:
        return self._doc["personalization"]

    @property
    def transitions(self) -> dict[str, Any]:
        return self._doc["transitions"]

    @property
    def rois(self) -> list[dict[str, Any]]:
        return self._doc["rois"]

    @property
    def rules(self) -> dict[str, Any]:
        return self._doc["rules"]

    @property
    def fixtures(self) -> dict[str, Any]:
        return self._doc.get("fixtures", {})


@lru_cache(maxsize=1)
def _default_bank() -> KnowledgeBank:
    data = resources.files("phn.data").joinpath("knowledge_bank.json").read_text("utf-8")
    return KnowledgeBank(json.loads(data))
