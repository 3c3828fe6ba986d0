"""Batch analytics for cellular roaming measurement data.

Pipeline stages: ingest -> catalog -> labeler -> classifier -> analytics,
driven from the `roamkit` command line; synthgen provides deterministic
synthetic fleets with planted ground truth for verification.
"""

__version__ = "0.1.0"
