"""Shared data model: intensity matrices, class labelings, distance matrices.

Instances are columns of the intensity matrix and keep their external IDs
throughout; class membership is carried separately so that blocks of the
distance matrix can be extracted in stable input order without any physical
reordering.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

# Dense N x N float64 distance matrix; ~3.2 GB at this ceiling.
MAX_INSTANCES = 20_000

#: Class id used for instances without a usable class (unassigned or singleton).
MEGA_CLASS_ID = "__unassigned__"


class LabelCheckError(Exception):
    """Base class for errors raised by this package."""


class DegenerateInputError(LabelCheckError):
    """Input vectors on which the chosen distance is undefined."""

    def __init__(self, message: str, instance_ids: Sequence[str] = ()):
        super().__init__(message)
        self.instance_ids = tuple(instance_ids)


class ClassNotTestableError(LabelCheckError):
    """The requested class cannot be tested (mega-class or size <= 1)."""


class EstimationError(LabelCheckError):
    """The empirical distributions needed by the test cannot be formed."""


class CsvFormatError(LabelCheckError):
    """Malformed CSV input; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class DataMatrix:
    """Observed intensities, one column per instance and one row per sample."""

    values: np.ndarray
    instance_ids: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"intensity data must be 2-dimensional, got shape {values.shape}")
        n, count = values.shape
        if n < 2:
            raise ValueError(f"need at least 2 samples per instance, got {n}")
        if count == 0:
            raise ValueError("intensity data has no instances")
        if count > MAX_INSTANCES:
            raise ValueError(
                f"{count} instances exceeds the supported ceiling of {MAX_INSTANCES}"
            )
        if not np.all(np.isfinite(values)):
            bad = np.where(~np.isfinite(values).all(axis=0))[0]
            names = ", ".join(self.instance_ids[i] for i in bad[:5])
            raise ValueError(f"non-finite intensities in instances: {names}")
        if len(self.instance_ids) != count:
            raise ValueError(
                f"{len(self.instance_ids)} instance ids for {count} data columns"
            )
        if len(set(self.instance_ids)) != count:
            raise ValueError("instance ids must be unique")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "instance_ids", tuple(self.instance_ids))

    @property
    def sample_count(self) -> int:
        return self.values.shape[0]

    @property
    def instance_count(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ClassLabeling:
    """Assignment of instances to classes, with a mega-class for the rest.

    The mega-class collects unassigned instances and former singletons; its
    members are never tested themselves but do contribute to the pool of
    cross-class distances.  Use :meth:`from_labels` to build a labeling from
    raw per-instance labels; it performs the singleton merge.
    """

    labels: tuple[str, ...]
    mega_class_id: str = MEGA_CLASS_ID

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise ValueError("labeling is empty")
        for class_id, size in self.class_sizes.items():
            if class_id != self.mega_class_id and size < 2:
                raise ValueError(
                    f"class {class_id!r} has size {size}; "
                    "singletons belong to the mega-class (see from_labels)"
                )

    @classmethod
    def from_labels(
        cls,
        raw_labels: Sequence[str | None],
        mega_class_id: str = MEGA_CLASS_ID,
    ) -> "ClassLabeling":
        """Build a labeling, merging unassigned instances and singletons into the mega-class.

        ``None`` or empty labels mean "unassigned".  Classes of size 1 are
        merged into the mega-class with a warning.
        """
        cleaned = [
            mega_class_id if lab is None or lab == "" else str(lab) for lab in raw_labels
        ]
        counts: dict[str, int] = {}
        for lab in cleaned:
            counts[lab] = counts.get(lab, 0) + 1
        singletons = {
            lab for lab, size in counts.items() if size == 1 and lab != mega_class_id
        }
        if singletons:
            warnings.warn(
                f"merging {len(singletons)} singleton class(es) into the mega-class: "
                + ", ".join(sorted(singletons)),
                stacklevel=2,
            )
            cleaned = [mega_class_id if lab in singletons else lab for lab in cleaned]
        return cls(labels=tuple(cleaned), mega_class_id=mega_class_id)

    @cached_property
    def class_sizes(self) -> dict[str, int]:
        """Class sizes keyed by class id, in order of first appearance."""
        sizes: dict[str, int] = {}
        for lab in self.labels:
            sizes[lab] = sizes.get(lab, 0) + 1
        return sizes

    @property
    def instance_count(self) -> int:
        return len(self.labels)

    @cached_property
    def testable_classes(self) -> tuple[str, ...]:
        """Non-mega classes in order of first appearance."""
        return tuple(c for c in self.class_sizes if c != self.mega_class_id)

    def indices(self, class_id: str) -> np.ndarray:
        """Positions of the members of ``class_id``, in input order."""
        if class_id not in self.class_sizes:
            raise KeyError(f"unknown class id: {class_id!r}")
        labels = np.asarray(self.labels, dtype=object)
        return np.flatnonzero(labels == class_id)


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric matrix of pairwise (quasi-)distances between instances."""

    entries: np.ndarray
    instance_ids: tuple[str, ...]

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {entries.shape}")
        count = entries.shape[0]
        if count > MAX_INSTANCES:
            raise ValueError(
                f"{count} instances exceeds the supported ceiling of {MAX_INSTANCES}"
            )
        if len(self.instance_ids) != count:
            raise ValueError(
                f"{len(self.instance_ids)} instance ids for a {count}x{count} matrix"
            )
        if not np.all(np.isfinite(entries)):
            raise ValueError("distance matrix contains non-finite entries")
        if np.any(entries < 0):
            i, j = np.unravel_index(int(np.argmin(entries)), entries.shape)
            raise ValueError(
                f"negative distance between {self.instance_ids[i]!r} and {self.instance_ids[j]!r}"
            )
        if np.any(np.diag(entries) != 0.0):
            i = int(np.flatnonzero(np.diag(entries) != 0.0)[0])
            raise ValueError(f"nonzero self-distance for {self.instance_ids[i]!r}")
        asym = entries != entries.T
        if np.any(asym):
            i, j = np.argwhere(asym)[0]
            raise ValueError(
                f"asymmetric entries between {self.instance_ids[i]!r} and {self.instance_ids[j]!r}"
            )
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "instance_ids", tuple(self.instance_ids))

    @property
    def instance_count(self) -> int:
        return self.entries.shape[0]


def bonferroni_alpha(alpha0: float, class_size: int) -> float:
    """Per-test level splitting the global budget evenly over a class."""
    return alpha0 / class_size


@dataclass(frozen=True)
class TestConfig:
    """Knobs of the validation procedure."""

    alpha0: float = 0.05
    metric: str = "correlation"
    alpha_rule: Callable[[float, int], float] = bonferroni_alpha

    def __post_init__(self):
        if not 0.0 < self.alpha0 < 0.5:
            raise ValueError(f"alpha0 must lie in (0, 0.5), got {self.alpha0}")


def build_partitioned_view(
    distances: DistanceMatrix,
    labeling: ClassLabeling,
    class_id: str,
) -> tuple[np.ndarray, np.ndarray]:
    """Extract the within-class block and the concatenated cross-class block.

    Returns ``(within, between)`` where ``within`` is the size-k x size-k
    block of distances among members of ``class_id`` and ``between`` holds
    each member's distances to every instance outside the class, both in
    stable input order.
    """
    if distances.instance_count != labeling.instance_count:
        raise ValueError(
            f"labeling covers {labeling.instance_count} instances, "
            f"matrix has {distances.instance_count}"
        )
    if class_id == labeling.mega_class_id:
        raise ClassNotTestableError("class not testable: mega-class members are reference-only")
    members = labeling.indices(class_id)
    if members.size <= 1:
        raise ClassNotTestableError(
            f"class not testable: {class_id!r} has {members.size} member(s)"
        )
    mask = np.zeros(labeling.instance_count, dtype=bool)
    mask[members] = True
    others = np.flatnonzero(~mask)
    within = distances.entries[np.ix_(members, members)]
    between = distances.entries[np.ix_(members, others)]
    return within, between


def subset_instances(
    data: DataMatrix,
    labeling: ClassLabeling,
    keep: Sequence[int],
) -> tuple[DataMatrix, ClassLabeling]:
    """Restrict data and labeling to the given instance positions."""
    keep = np.asarray(keep, dtype=int)
    new_data = DataMatrix(
        values=data.values[:, keep].copy(),
        instance_ids=tuple(data.instance_ids[i] for i in keep),
    )
    new_labeling = ClassLabeling.from_labels(
        [labeling.labels[i] for i in keep], mega_class_id=labeling.mega_class_id
    )
    return new_data, new_labeling
