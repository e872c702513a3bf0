"""Shared fixture builders for the test suite."""

import numpy as np

from labelcheck.core import ClassLabeling, DistanceMatrix


def separated_matrix(n1=25, n2=30, seed=0):
    """Class A fully separated from everything else."""
    rng = np.random.default_rng(seed)
    total = n1 + n2
    raw = np.zeros((total, total))
    raw[:n1, :n1] = rng.uniform(0.10, 0.30, (n1, n1))
    raw[:n1, n1:] = rng.uniform(0.60, 0.90, (n1, n2))
    raw[n1:, n1:] = rng.uniform(0.10, 0.90, (n2, n2))
    upper = np.triu(raw, k=1)
    ids = tuple(f"a{i}" if i < n1 else f"b{i - n1}" for i in range(total))
    d = DistanceMatrix(entries=upper + upper.T, instance_ids=ids)
    labeling = ClassLabeling(labels=("A",) * n1 + ("B",) * n2)
    return d, labeling


def outlier_matrix():
    """24 well-behaved members, one planted outlier, 30 outside instances."""
    n1, n2 = 25, 30
    total = n1 + n2
    rng = np.random.default_rng(1234)
    raw = np.zeros((total, total))
    raw[:n1, :n1] = rng.uniform(0.20, 0.40, (n1, n1))
    raw[:n1, n1:] = rng.uniform(0.70, 0.90, (n1, n2))
    raw[n1:, n1:] = rng.uniform(0.20, 0.90, (n2, n2))
    # instance index 7 carries between-like distances to its own class
    raw[7, :n1] = rng.uniform(0.75, 0.90, n1)
    raw[:n1, 7] = raw[7, :n1]
    upper = np.triu(raw, k=1)
    ids = tuple(f"a{i}" if i < n1 else f"b{i - n1}" for i in range(total))
    d = DistanceMatrix(entries=upper + upper.T, instance_ids=ids)
    labeling = ClassLabeling(labels=("A",) * n1 + ("B",) * n2)
    return d, labeling, "a7"


def write_distance_csv_text(d, labeling):
    """Render a DistanceMatrix + labeling in the two-header CSV format."""
    lines = [",".join(d.instance_ids)]
    lines.append(",".join(
        "" if lab == labeling.mega_class_id else lab for lab in labeling.labels
    ))
    for row in d.entries:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"
