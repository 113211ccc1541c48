from vidbus.sim.engine import ClassReport, SimReport, run
from vidbus.sim.policies import PolicyKind, make_policy
from vidbus.sim.report import CSV_COLUMNS, compare, write_report
from vidbus.sim.workload import WorkloadSpec, generate_workload, service_capacity, standard_scenario

__all__ = [
    "CSV_COLUMNS",
    "ClassReport",
    "PolicyKind",
    "SimReport",
    "WorkloadSpec",
    "compare",
    "generate_workload",
    "make_policy",
    "run",
    "service_capacity",
    "standard_scenario",
    "write_report",
]
