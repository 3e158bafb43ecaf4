from ._core import (
    Material,
    MorphError,
    NonConvergence,
    Problem,
    ValidationError,
    builtin_material,
    builtin_material_names,
    bundled_example,
    bundled_example_names,
    gradient_check,
    interpolate_modulus,
    load_problem,
    load_problem_file,
    optimize,
    power_diagram,
    project,
    random_problem,
    regularization,
    simulate,
    tessellate,
)

__all__ = [
    "Material",
    "MorphError",
    "NonConvergence",
    "Problem",
    "ValidationError",
    "builtin_material",
    "builtin_material_names",
    "bundled_example",
    "bundled_example_names",
    "gradient_check",
    "interpolate_modulus",
    "load_problem",
    "load_problem_file",
    "optimize",
    "power_diagram",
    "project",
    "random_problem",
    "regularization",
    "simulate",
    "tessellate",
]
