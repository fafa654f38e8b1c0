"""Study-level contrast data for a treatment network.

A dataset is a list of pairwise comparisons (study, treatment pair, effect,
standard error) together with an ordered list of treatment labels that fixes
the column order of every matrix built from it. Multi-arm studies are stored
in expanded form: an m-arm study contributes all m(m-1)/2 pairwise rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputDataError

__all__ = ["Comparison", "Dataset", "MultiArmStudy"]


@dataclass(frozen=True)
class Comparison:
    """One observed pairwise contrast: ``te`` is treat1 minus treat2 on an
    additive scale (log odds ratio, log risk ratio, mean difference, ...)."""

    study_id: str
    treat1: str
    treat2: str
    te: float
    se_te: float


@dataclass(frozen=True)
class MultiArmStudy:
    """A study with m >= 2 arms and the m x m matrix of observed contrast
    variances (zero diagonal). Used to derive adjusted per-contrast weights."""

    study_id: str
    arms: tuple[str, ...]
    pairwise_variances: np.ndarray

    def __post_init__(self):
        arms = tuple(self.arms)
        object.__setattr__(self, "arms", arms)
        m = len(arms)
        if m < 2:
            raise InputDataError(f"study {self.study_id!r}: needs at least 2 arms")
        if len(set(arms)) != m:
            raise InputDataError(f"study {self.study_id!r}: duplicate arm labels")
        v = np.asarray(self.pairwise_variances, dtype=float)
        if v.shape != (m, m):
            raise InputDataError(
                f"study {self.study_id!r}: variance matrix must be {m}x{m}, got {v.shape}"
            )
        if np.abs(v - v.T).max() > 1e-12 or np.abs(np.diag(v)).max() > 0:
            raise InputDataError(
                f"study {self.study_id!r}: variance matrix must be symmetric with zero diagonal"
            )
        off = v[~np.eye(m, dtype=bool)]
        if (off <= 0).any():
            raise InputDataError(
                f"study {self.study_id!r}: all pairwise variances must be positive"
            )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "pairwise_variances", v)


@dataclass(frozen=True)
class Dataset:
    """Validated collection of comparisons plus the treatment column order."""

    comparisons: tuple[Comparison, ...]
    treatments: tuple[str, ...] = field(default=())

    def __post_init__(self):
        comps = tuple(self.comparisons)
        object.__setattr__(self, "comparisons", comps)
        if not comps:
            raise InputDataError("empty dataset: no comparisons")
        treatments = tuple(self.treatments)
        if not treatments:
            treatments = tuple(sorted({t for c in comps for t in (c.treat1, c.treat2)}))
        if len(set(treatments)) != len(treatments):
            raise InputDataError("duplicate treatment labels in treatment order")
        known = set(treatments)
        object.__setattr__(self, "treatments", treatments)
        for c in comps:
            if c.treat1 == c.treat2:
                raise InputDataError(
                    f"study {c.study_id!r}: self-comparison {c.treat1!r} vs itself"
                )
            for t in (c.treat1, c.treat2):
                if t not in known:
                    raise InputDataError(
                        f"study {c.study_id!r}: unknown treatment label {t!r}"
                    )
            if not (math.isfinite(c.se_te) and c.se_te > 0):
                raise InputDataError(
                    f"study {c.study_id!r} ({c.treat1} vs {c.treat2}): "
                    f"standard error must be positive, got {c.se_te}"
                )
            if not math.isfinite(c.te):
                raise InputDataError(
                    f"study {c.study_id!r} ({c.treat1} vs {c.treat2}): "
                    f"effect must be finite, got {c.te}"
                )
        self._check_study_expansion()

    def _check_study_expansion(self):
        # An m-arm study must contribute each unordered pair exactly once,
        # i.e. m(m-1)/2 rows in total.
        for study_id, rows in self.grouped_by_study().items():
            seen = set()
            arms = []
            for c in rows:
                pair = frozenset((c.treat1, c.treat2))
                if pair in seen:
                    raise InputDataError(
                        f"study {study_id!r}: comparison {c.treat1}:{c.treat2} "
                        "appears more than once"
                    )
                seen.add(pair)
                for t in (c.treat1, c.treat2):
                    if t not in arms:
                        arms.append(t)
            m = len(arms)
            expected = m * (m - 1) // 2
            if len(rows) != expected:
                raise InputDataError(
                    f"study {study_id!r}: {m} arms require {expected} pairwise "
                    f"comparisons, found {len(rows)}"
                )

    @property
    def n_comparisons(self) -> int:
        return len(self.comparisons)

    @property
    def n_treatments(self) -> int:
        return len(self.treatments)

    def row_keys(self) -> tuple[tuple[str, str, str], ...]:
        """(study_id, treat1, treat2) identity of each comparison row."""
        return tuple((c.study_id, c.treat1, c.treat2) for c in self.comparisons)

    def effects(self) -> np.ndarray:
        return np.array([c.te for c in self.comparisons], dtype=float)

    def standard_errors(self) -> np.ndarray:
        return np.array([c.se_te for c in self.comparisons], dtype=float)

    def grouped_by_study(self) -> dict[str, list[Comparison]]:
        groups: dict[str, list[Comparison]] = {}
        for c in self.comparisons:
            groups.setdefault(c.study_id, []).append(c)
        return groups

    def multi_arm_studies(self) -> list[MultiArmStudy]:
        """Studies with three or more arms, as variance matrices over their arms
        (arm order = order of first appearance within the study)."""
        out = []
        for study_id, rows in self.grouped_by_study().items():
            arms: list[str] = []
            for c in rows:
                for t in (c.treat1, c.treat2):
                    if t not in arms:
                        arms.append(t)
            if len(arms) < 3:
                continue
            m = len(arms)
            pos = {t: i for i, t in enumerate(arms)}
            v = np.zeros((m, m))
            for c in rows:
                i, j = pos[c.treat1], pos[c.treat2]
                v[i, j] = v[j, i] = c.se_te**2
            out.append(MultiArmStudy(study_id, tuple(arms), v))
        return out
