from ._core import (
    Dataset,
    FitConfig,
    FunctionTree,
    FunctreeError,
    __version__,
    backfit_pass,
    bootstrap_compare,
    conditional_interaction,
    fit,
    gen_friedman,
    gen_hu,
    load_csv,
    pd,
    pure_interaction,
    rmse,
    rmse_target,
    screen_h,
    screen_r,
    search_effects,
    strength,
    training_sse,
)

__all__ = [
    "Dataset",
    "FitConfig",
    "FunctionTree",
    "FunctreeError",
    "__version__",
    "backfit_pass",
    "bootstrap_compare",
    "conditional_interaction",
    "fit",
    "gen_friedman",
    "gen_hu",
    "load_csv",
    "pd",
    "pure_interaction",
    "rmse",
    "rmse_target",
    "screen_h",
    "screen_r",
    "search_effects",
    "strength",
    "training_sse",
]
