"""Experiment drivers with their result records, plus the command-line interface."""

from .records import (ExperimentRecord, records_from_csv, records_from_json, records_to_csv,
                      records_to_json)
from .studies import (catenoid_check, ceiling_study, convergence_study, critical_half_height,
                      gluing_study, study_passed, weinstock_check)

__all__ = [
    "ExperimentRecord",
    "records_to_csv",
    "records_from_csv",
    "records_to_json",
    "records_from_json",
    "convergence_study",
    "gluing_study",
    "weinstock_check",
    "catenoid_check",
    "ceiling_study",
    "critical_half_height",
    "study_passed",
]
