"""File loading and contrast construction.

Contrast CSV (header ``study,treat1,treat2,TE,seTE``): one pairwise
comparison per row, UTF-8, dot decimal separator. Multi-arm studies supply
all pairwise rows under a shared study id. An optional comment line
``# treatments: A,B,C`` before the header pins the treatment column order;
otherwise labels are ordered lexicographically.

Arm CSV (header ``study,treatment,events,total``): binary outcomes, one arm
per row, converted to pairwise contrasts on the log odds ratio or log risk
ratio scale.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .dataset import Comparison, Dataset
from .errors import InputDataError

__all__ = [
    "ArmRecord",
    "EffectMeasure",
    "CONTRAST_HEADER",
    "ARM_HEADER",
    "load_contrasts",
    "write_contrasts",
    "load_arms",
    "contrasts_from_arms",
    "sniff_format",
    "toy_path",
    "toy_dataset",
]

CONTRAST_HEADER = ["study", "treat1", "treat2", "TE", "seTE"]
ARM_HEADER = ["study", "treatment", "events", "total"]


@dataclass(frozen=True)
class ArmRecord:
    """Binary outcome of one treatment arm."""

    study_id: str
    treatment: str
    events: int
    total: int

    def __post_init__(self):
        if self.total <= 0:
            raise InputDataError(
                f"study {self.study_id!r} arm {self.treatment!r}: total must be positive"
            )
        if not 0 <= self.events <= self.total:
            raise InputDataError(
                f"study {self.study_id!r} arm {self.treatment!r}: "
                f"events {self.events} outside [0, {self.total}]"
            )


@dataclass(frozen=True)
class EffectMeasure:
    """Contrast scale; all contrasts live on an additive (log) scale."""

    kind: str

    _KINDS = ("log-odds-ratio", "log-risk-ratio", "raw")
    _ALIASES = {"or": "log-odds-ratio", "rr": "log-risk-ratio"}

    def __post_init__(self):
        kind = self._ALIASES.get(self.kind, self.kind)
        if kind not in self._KINDS:
            raise InputDataError(f"unknown effect measure {self.kind!r}")
        object.__setattr__(self, "kind", kind)


def toy_path() -> Path:
    """Location of the bundled five-treatment, seven-study example."""
    return Path(resources.files("nma_diffuse") / "fixtures" / "toy.csv")


def toy_dataset() -> Dataset:
    return load_contrasts(toy_path())


def _parse_float(text: str, what: str, context: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InputDataError(f"{context}: {what} {text!r} is not a number") from None
    if not math.isfinite(value):
        raise InputDataError(f"{context}: {what} {text!r} is not finite")
    return value


def _read_rows(path) -> tuple[list[str] | None, list[tuple[int, list[str]]]]:
    """Rows with their 1-based line numbers, honoring a leading
    ``# treatments:`` directive; blank lines and other comments are skipped."""
    declared = None
    rows: list[tuple[int, list[str]]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                directive = stripped.lstrip("#").strip()
                if directive.lower().startswith("treatments:"):
                    declared = [
                        t.strip() for t in directive.split(":", 1)[1].split(",") if t.strip()
                    ]
                continue
            rows.append((lineno, next(csv.reader([line]))))
    return declared, rows


def load_contrasts(path) -> Dataset:
    """Read and validate a contrast CSV.

    Malformed rows fail with their line number; duplicate
    (study, treat1, treat2) rows and non-positive standard errors are
    rejected. Multi-arm grouping and weight adjustment happen later, at
    network assembly.
    """
    declared, rows = _read_rows(path)
    if not rows:
        raise InputDataError(f"{path}: empty file")
    lineno, header = rows[0]
    if header != CONTRAST_HEADER:
        raise InputDataError(
            f"{path}: line {lineno}: expected header {','.join(CONTRAST_HEADER)!r}, "
            f"got {','.join(header)!r}"
        )
    comparisons = []
    seen = set()
    for lineno, row in rows[1:]:
        if len(row) != 5:
            raise InputDataError(
                f"{path}: line {lineno}: expected 5 fields, got {len(row)}"
            )
        study, treat1, treat2, te, se = (field.strip() for field in row)
        key = (study, treat1, treat2)
        if key in seen:
            raise InputDataError(
                f"{path}: line {lineno}: duplicate row for study {study!r} "
                f"comparison {treat1}:{treat2}"
            )
        seen.add(key)
        comparisons.append(
            Comparison(
                study_id=study,
                treat1=treat1,
                treat2=treat2,
                te=_parse_float(te, "TE", f"{path}: line {lineno}"),
                se_te=_parse_float(se, "seTE", f"{path}: line {lineno}"),
            )
        )
    try:
        return Dataset(tuple(comparisons), tuple(declared) if declared else ())
    except InputDataError as exc:
        raise InputDataError(f"{path}: {exc}") from None


def write_contrasts(dataset: Dataset, path) -> Path:
    """Inverse of load_contrasts: reloading reproduces the dataset."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("# treatments: " + ",".join(dataset.treatments) + "\n")
        writer = csv.writer(fh)
        writer.writerow(CONTRAST_HEADER)
        for c in dataset.comparisons:
            writer.writerow(
                [c.study_id, c.treat1, c.treat2, repr(float(c.te)), repr(float(c.se_te))]
            )
    return path


def load_arms(path) -> list[ArmRecord]:
    declared, rows = _read_rows(path)
    if not rows:
        raise InputDataError(f"{path}: empty file")
    lineno, header = rows[0]
    if header != ARM_HEADER:
        raise InputDataError(
            f"{path}: line {lineno}: expected header {','.join(ARM_HEADER)!r}, "
            f"got {','.join(header)!r}"
        )
    records = []
    for lineno, row in rows[1:]:
        if len(row) != 4:
            raise InputDataError(
                f"{path}: line {lineno}: expected 4 fields, got {len(row)}"
            )
        study, treatment, events, total = (field.strip() for field in row)
        try:
            records.append(
                ArmRecord(study, treatment, int(events), int(total))
            )
        except ValueError:
            raise InputDataError(
                f"{path}: line {lineno}: events/total must be integers"
            ) from None
        except InputDataError as exc:
            raise InputDataError(f"{path}: line {lineno}: {exc}") from None
    return records


def sniff_format(path) -> str:
    """'contrast' or 'arm', decided by the header row."""
    _, rows = _read_rows(path)
    if not rows:
        raise InputDataError(f"{path}: empty file")
    header = rows[0][1]
    if header == CONTRAST_HEADER:
        return "contrast"
    if header == ARM_HEADER:
        return "arm"
    raise InputDataError(
        f"{path}: unrecognized header {','.join(header)!r}; expected "
        f"{','.join(CONTRAST_HEADER)!r} or {','.join(ARM_HEADER)!r}"
    )


def contrasts_from_arms(arms: list[ArmRecord], measure: EffectMeasure) -> Dataset:
    """All pairwise contrasts per study from binary arm records.

    Log odds ratios get variance 1/a + 1/b + 1/c + 1/d, log risk ratios
    1/a - 1/n1 + 1/c - 1/n2. If any cell of a study is zero, 0.5 is added to
    every cell of that study (0.5 events and 1 to the total of each arm).
    Two-arm studies where both arms have zero events carry no information on
    a ratio scale and are dropped with a warning; multi-arm studies are only
    dropped when every arm has zero events, otherwise the corrected
    contrasts are kept to preserve the full pairwise expansion.
    """
    if measure.kind == "raw":
        raise InputDataError("raw measure has no arm-level construction")
    studies: dict[str, list[ArmRecord]] = {}
    for arm in arms:
        studies.setdefault(arm.study_id, []).append(arm)
    comparisons = []
    for study_id, study_arms in studies.items():
        if len(study_arms) < 2:
            raise InputDataError(f"study {study_id!r}: single-arm study")
        labels = [a.treatment for a in study_arms]
        if len(set(labels)) != len(labels):
            raise InputDataError(f"study {study_id!r}: duplicate treatment arm")
        if all(a.events == 0 for a in study_arms):
            what = (
                "double-zero comparison"
                if len(study_arms) == 2
                else "all arms have zero events"
            )
            warnings.warn(f"study {study_id!r}: {what}; dropped", stacklevel=2)
            continue
        zero_cell = any(a.events == 0 or a.events == a.total for a in study_arms)
        correction = 0.5 if zero_cell else 0.0
        for i in range(len(study_arms)):
            for j in range(i + 1, len(study_arms)):
                comparisons.append(
                    _contrast(study_arms[i], study_arms[j], measure, correction)
                )
    if not comparisons:
        raise InputDataError("no usable comparisons after exclusions")
    return Dataset(tuple(comparisons))


def _contrast(
    arm1: ArmRecord, arm2: ArmRecord, measure: EffectMeasure, correction: float
) -> Comparison:
    a = arm1.events + correction
    n1 = arm1.total + 2 * correction
    b = n1 - a
    c = arm2.events + correction
    n2 = arm2.total + 2 * correction
    d = n2 - c
    if measure.kind == "log-odds-ratio":
        te = math.log(a / b) - math.log(c / d)
        var = 1 / a + 1 / b + 1 / c + 1 / d
    else:
        te = math.log(a / n1) - math.log(c / n2)
        var = 1 / a - 1 / n1 + 1 / c - 1 / n2
    return Comparison(
        study_id=arm1.study_id,
        treat1=arm1.treatment,
        treat2=arm2.treatment,
        te=te,
        se_te=math.sqrt(var),
    )
