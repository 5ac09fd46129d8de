from .cli import app, create_app
from .csv_writer import CSV_HEADER, RunManifest, read_series_csv, write_run_outputs
from .status_display import StatusDisplay

__all__ = [
    "CSV_HEADER",
    "RunManifest",
    "StatusDisplay",
    "app",
    "create_app",
    "read_series_csv",
    "write_run_outputs",
]
