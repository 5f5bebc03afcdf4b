"""Experiment reports, confidence intervals, and their JSON/CSV forms."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import __version__

Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    # clamp so rounding never pushes the interval off the point estimate
    return max(0.0, min(centre - half, phat)), min(1.0, max(centre + half, phat))


def decimal(value: float) -> float:
    """Round to 15 significant digits."""
    return float(format(value, ".15g"))


@dataclass
class Estimate:
    name: str
    value: float
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    exact: Optional[Fraction] = None

    def to_dict(self) -> dict:
        out = {"name": self.name, "value": self.value, "ci_low": self.ci_low, "ci_high": self.ci_high}
        if self.exact is not None:
            out["exact"] = f"{self.exact.numerator}/{self.exact.denominator}"
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Estimate":
        exact = Fraction(d["exact"]) if d.get("exact") is not None else None
        return cls(d["name"], d["value"], d.get("ci_low"), d.get("ci_high"), exact)


def proportion(name: str, successes: int, trials: int, exact: Optional[Fraction] = None) -> Estimate:
    lo, hi = wilson_interval(successes, trials)
    value = successes / trials if trials else float("nan")
    return Estimate(name, value, lo, hi, exact)


def mean_estimate(name: str, total: float, total_sq: float, count: int) -> Estimate:
    """Sample mean with a normal-approximation 95% interval."""
    if count == 0:
        return Estimate(name, float("nan"))
    mean = total / count
    var = max(0.0, (total_sq - count * mean * mean) / (count - 1)) if count > 1 else 0.0
    half = Z95 * math.sqrt(var / count)
    return Estimate(name, mean, mean - half, mean + half)


def exact_estimate(name: str, value: Fraction) -> Estimate:
    return Estimate(name, decimal(float(value)), exact=Fraction(value))


def point(name: str, value: float) -> Estimate:
    return Estimate(name, value)


@dataclass
class Provenance:
    seed: Optional[int]
    shards: Optional[int]
    samples: Optional[int]
    version: str = __version__


@dataclass
class ExperimentReport:
    experiment: str
    params: dict
    estimates: list
    provenance: Provenance
    details: dict = field(default_factory=dict)
    duration_s: Optional[float] = None

    def __getitem__(self, name: str) -> Estimate:
        for est in self.estimates:
            if est.name == name:
                return est
        raise KeyError(name)

    def names(self) -> list[str]:
        return [e.name for e in self.estimates]

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "experiment": self.experiment,
            "params": self.params,
            "estimates": [e.to_dict() for e in self.estimates],
            "provenance": vars(self.provenance).copy(),
        }
        if self.details:
            out["details"] = self.details
        if timing and self.duration_s is not None:
            out["duration_s"] = self.duration_s
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(
            d["experiment"],
            d["params"],
            [Estimate.from_dict(e) for e in d["estimates"]],
            Provenance(**d["provenance"]),
            d.get("details", {}),
            d.get("duration_s"),
        )

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=False, allow_nan=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["experiment", "name", "value", "ci_low", "ci_high", "exact", "seed", "shards", "samples", "version", "params"]
        )
        prov = self.provenance
        params = json.dumps(self.params, sort_keys=True)
        for e in self.estimates:
            d = e.to_dict()
            writer.writerow(
                [
                    self.experiment,
                    e.name,
                    _num(e.value),
                    _num(e.ci_low),
                    _num(e.ci_high),
                    d.get("exact", ""),
                    prov.seed,
                    prov.shards,
                    prov.samples,
                    prov.version,
                    params,
                ]
            )
        return buf.getvalue()


def _num(x) -> str:
    # same text json.dumps would produce for the number
    return "" if x is None else json.dumps(x)
