"""Bundled study data.

veteran.csv holds the Veterans' Administration lung cancer trial (137
patients, two treatment regimens; arm A is the standard treatment, arm B the
test treatment; 9 observations censored) with columns
(time_days, status, arm).
"""

from __future__ import annotations

from importlib import resources

from ..data import CensoredSample, ingest_csv_arms

__all__ = ["veteran_csv_path", "load_veteran"]


def veteran_csv_path() -> str:
    """Filesystem path of the bundled veteran trial CSV."""
    return str(resources.files(__package__).joinpath("veteran.csv"))


def load_veteran() -> dict[str, CensoredSample]:
    """Samples keyed 'A', 'B' and 'combined'."""
    arms = ingest_csv_arms(
        veteran_csv_path(), arm_column="arm", time_column="time_days", status_column="status"
    )
    combined = CensoredSample.from_pairs(
        [(float(z), int(d)) for sample in arms.values() for z, d in zip(sample.z, sample.delta)]
    )
    arms["combined"] = combined
    return arms
