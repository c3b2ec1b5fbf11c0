"""Route and transmission planning for risky reconnaissance missions."""
from .evaluate import (
    EvalBreakdown,
    PlanError,
    delivery_probabilities,
    expected_value_multi,
    expected_value_single,
    survival_probability,
    transmission_value,
)
from .mission import (
    Mission,
    MissionError,
    MultiPlan,
    Plan,
    load_mission,
    load_plans,
    make_hardness_instance,
    make_path_instance,
    save_mission,
    save_plans,
    validate_mission,
    validate_plan,
)
