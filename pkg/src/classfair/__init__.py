"""Online class-fair bipartite matching.

Exact-rational data model and audits, the online algorithms, adversarial
instance generators and a Monte-Carlo harness.
"""

from .core import (
    ArrivalEvent,
    Decision,
    FractionalMatching,
    Instance,
    IntegralMatching,
    OnlineAlgorithm,
    Replay,
    class_aggregate,
    replay_online,
    run_online,
)
from .errors import CapabilityError, ClassFairError, DomainError, ProtocolViolation, StructuralError
from .valuation import (
    class_value,
    mms_share,
    optimistic_value,
    pessimistic_value,
    prop_share,
    prop_share_oracle,
    usw,
    usw_opt,
)
from .audit import AuditReport, audit
from .algorithms import (
    EqualFilling,
    EqualFillingOCS,
    EqualRanking,
    Greedy,
    IndependentRounding,
    MatchAndShift,
    NonWastefulWrapper,
    SemiOCS,
)

__version__ = "0.1.0"

__all__ = [
    "ArrivalEvent",
    "Decision",
    "FractionalMatching",
    "Instance",
    "IntegralMatching",
    "OnlineAlgorithm",
    "Replay",
    "class_aggregate",
    "replay_online",
    "run_online",
    "CapabilityError",
    "ClassFairError",
    "DomainError",
    "ProtocolViolation",
    "StructuralError",
    "class_value",
    "mms_share",
    "optimistic_value",
    "pessimistic_value",
    "prop_share",
    "prop_share_oracle",
    "usw",
    "usw_opt",
    "AuditReport",
    "audit",
    "EqualFilling",
    "EqualFillingOCS",
    "EqualRanking",
    "Greedy",
    "IndependentRounding",
    "MatchAndShift",
    "NonWastefulWrapper",
    "SemiOCS",
]
