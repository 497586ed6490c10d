"""基于变换群的精确置换检验与随机置换检验。"""

from .config import SimulationConfig, load_config
from .errors import PermTestError, PermTestRuntimeError, PermTestUsageError
from .exact_test import (
    ClassRepresentatives,
    class_representatives,
    full_group_pvalue,
    full_group_test,
    hoeffding_randomized_test,
)
from .groups import (
    ElementBatch,
    GroupElement,
    GroupSpec,
    apply,
    balanced_permutations,
    compose,
    enumerate_group,
    inverse,
    sample_uniform,
    verify_group_axioms,
)
from .models import AxiomReport, Decision, PValueReport, SimulationReport, TestReport
from .random_test import (
    coset_scheme_test,
    estimate_pvalue,
    monte_carlo_test,
    pvalue_upper_bound,
    pvalue_with_replacement,
    pvalue_without_replacement,
    random_test,
    randomized_exact_test,
    randomized_pvalue,
)
from .sampling import RandomDraw, SamplingMode, SamplingPlan, draw_transforms
from .simulation import (
    balanced_permutation_demo,
    bonferroni_interaction_demo,
    pvalue_uniformity,
    type1_experiment,
)
from .statistics import Statistic, eval_statistic, orbit_statistics, parse_statistic

__all__ = [
    "AxiomReport",
    "ClassRepresentatives",
    "Decision",
    "ElementBatch",
    "GroupElement",
    "GroupSpec",
    "PValueReport",
    "PermTestError",
    "PermTestRuntimeError",
    "PermTestUsageError",
    "RandomDraw",
    "SamplingMode",
    "SamplingPlan",
    "SimulationConfig",
    "SimulationReport",
    "Statistic",
    "TestReport",
    "apply",
    "balanced_permutation_demo",
    "bonferroni_interaction_demo",
    "class_representatives",
    "compose",
    "coset_scheme_test",
    "draw_transforms",
    "enumerate_group",
    "estimate_pvalue",
    "eval_statistic",
    "full_group_pvalue",
    "full_group_test",
    "hoeffding_randomized_test",
    "inverse",
    "load_config",
    "monte_carlo_test",
    "orbit_statistics",
    "parse_statistic",
    "pvalue_upper_bound",
    "pvalue_uniformity",
    "pvalue_with_replacement",
    "pvalue_without_replacement",
    "random_test",
    "randomized_exact_test",
    "randomized_pvalue",
    "sample_uniform",
    "type1_experiment",
    "verify_group_axioms",
]
