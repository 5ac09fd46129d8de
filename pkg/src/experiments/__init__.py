from .grids import GRID_PROTOCOLS, grid_configs, run_grid
from .twin import (
    RmseSeries,
    TwinSetup,
    enkf_config,
    forecast_series,
    make_reference,
    outlier_times,
    prepare_twin,
    rmse,
    run_experiment,
    series_times,
    synthesize_observations,
    time_averaged_magnitude,
    var3d_config,
    var4d_config,
)

__all__ = [
    "GRID_PROTOCOLS",
    "RmseSeries",
    "TwinSetup",
    "enkf_config",
    "forecast_series",
    "grid_configs",
    "make_reference",
    "outlier_times",
    "prepare_twin",
    "rmse",
    "run_experiment",
    "run_grid",
    "series_times",
    "synthesize_observations",
    "time_averaged_magnitude",
    "var3d_config",
    "var4d_config",
]
