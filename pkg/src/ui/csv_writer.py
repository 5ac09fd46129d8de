import csv
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from pydantic import BaseModel, Field, field_validator

from ..audit import AuditLogger
from ..experiments import RmseSeries

CSV_HEADER = ["time", "rmse", "label", "method", "norm", "tau", "seed", "data_quality"]
COMBINED_NAME = "combined.csv"
MANIFEST_NAME = "manifest.json"


class RunManifest(BaseModel):
    """一次运行的输出清单"""

    config_path: Optional[str] = None
    protocol: Optional[str] = None
    output_dir: str
    files: Dict[str, str] = Field(default_factory=dict)
    combined: str = COMBINED_NAME
    seeds: List[int] = Field(default_factory=list)
    timestamp: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    @field_validator("files")
    @classmethod
    def _unique_files(cls, v):
        if len(set(v.values())) != len(v):
            raise ValueError("每条序列必须对应唯一的输出文件")
        return v


def _rows(series: RmseSeries) -> List[List[str]]:
    return [
        [repr(float(t)), repr(float(r)), series.label, series.method, series.norm,
         repr(float(series.tau)), str(series.seed), series.data_quality]
        for t, r in zip(series.times, series.values)
    ]


def _stage(directory: Path, rows: Sequence[Sequence[str]]) -> Path:
    """写入同目录下的临时文件, 之后由调用方原子重命名"""
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".staging_", suffix=".csv")
    with os.fdopen(fd, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(rows)
    return Path(tmp)


def series_filename(series: RmseSeries) -> str:
    return f"{series.label}.csv"


def write_run_outputs(series: Sequence[RmseSeries],
                      output_dir: str,
                      config_path: Optional[str] = None,
                      protocol: Optional[str] = None,
                      logger: Optional[AuditLogger] = None) -> RunManifest:
    """每条序列一个 CSV, 另有合并 CSV 和 manifest.json

    所有文件先写入临时文件, 全部成功后再依次重命名; 出错时删除已写的临时文件。
    """
    labels = [s.label for s in series]
    if len(set(labels)) != len(labels):
        raise ValueError(f"序列标签重复: {labels}")

    directory = Path(output_dir)
    directory.mkdir(parents=True, exist_ok=True)

    files = {s.label: series_filename(s) for s in series}
    manifest = RunManifest(
        config_path=config_path,
        protocol=protocol,
        output_dir=str(directory),
        files=files,
        seeds=sorted({s.seed for s in series}),
    )

    staged: List[tuple] = []
    try:
        for s in series:
            staged.append((_stage(directory, _rows(s)), directory / files[s.label]))
        combined_rows = [row for s in series for row in _rows(s)]
        staged.append((_stage(directory, combined_rows), directory / COMBINED_NAME))
    except Exception:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise

    for tmp, target in staged:
        os.replace(tmp, target)

    manifest_tmp = directory / f".staging_{MANIFEST_NAME}"
    manifest_tmp.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    os.replace(manifest_tmp, directory / MANIFEST_NAME)

    if logger is not None:
        for s in series:
            logger.log_series_written(s.label, str(directory / files[s.label]), len(s))
    return manifest


def read_series_csv(path: str) -> List[Dict[str, str]]:
    """读取 write_run_outputs 写出的 CSV"""
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))
