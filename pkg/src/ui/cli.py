import traceback
import numpy as np
import typer
from typing import List, Optional
from rich.console import Console
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn
from pathlib import Path

from ..audit import AuditLogger
from ..config import ConfigManager, ExperimentConfig, LoggingConfig, Method
from ..exceptions import ConfigError, RobustDAError
from ..experiments import GRID_PROTOCOLS, RmseSeries, grid_configs, run_experiment, run_grid
from ..verify import run_all_checks
from .csv_writer import write_run_outputs
from .status_display import StatusDisplay

EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY = 3

# 求解过程中的这些异常都按数值失败处理
NUMERICAL_ERRORS = (RobustDAError, FloatingPointError, ValueError, np.linalg.LinAlgError)

console = Console()
app = typer.Typer(help="稳健资料同化 - L1/Huber 范数的 3D-Var、4D-Var 与 EnSRF 孪生实验")


def create_app():
    """创建CLI应用"""
    return app


def _make_logger(logging: LoggingConfig) -> AuditLogger:
    return AuditLogger(logging.directory, level=logging.level, enabled=logging.enabled)


def _series_count(cfg: ExperimentConfig) -> int:
    return 1 + len(cfg.data_quality) * len(cfg.norms)


def _progress() -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        console=console,
    )


def _fail_numerical(logger: AuditLogger, e: Exception, run_label: Optional[str], verbose: bool):
    logger.log_error(type(e).__name__, str(e), run_label=run_label)
    logger.close_session()
    console.print(f"[red]数值计算失败: {e}[/red]")
    if verbose:
        console.print(traceback.format_exc())
    raise typer.Exit(EXIT_NUMERICAL)


def _write(series: List[RmseSeries], out: Path, logger: AuditLogger, verbose: bool,
           config_path: Optional[str] = None, protocol: Optional[str] = None):
    manifest = write_run_outputs(series, str(out), config_path=config_path, protocol=protocol,
                                 logger=logger)
    display = StatusDisplay(console)
    display.show_series_summary(series)
    if verbose:
        display.show_manifest(manifest)


@app.command()
def run(
    config_file: str = typer.Argument(..., help="实验配置文件 (YAML)"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="输出目录, 默认 results/<label>"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="详细输出"),
):
    """运行一次孪生实验, 输出每条 RMSE 序列的 CSV"""

    try:
        config_manager = ConfigManager(config_file)
        cfg = config_manager.load_config()
    except ConfigError as e:
        console.print(f"[red]配置错误: {e}[/red]")
        raise typer.Exit(EXIT_CONFIG)

    logger = _make_logger(cfg.logging)
    logger.log_config_loaded(config_file, cfg.run_label, cfg.model_dump(mode="json"))

    try:
        with _progress() as progress:
            task = progress.add_task(f"运行 {cfg.run_label}", total=_series_count(cfg))

            def advance(label: str):
                progress.update(task, advance=1, description=label)

            series = run_experiment(cfg, logger, advance)
    except NUMERICAL_ERRORS as e:
        _fail_numerical(logger, e, cfg.run_label, verbose)

    out_dir = Path(out) if out else Path("results") / cfg.run_label
    _write(series, out_dir, logger, verbose, config_path=config_file)
    console.print(f"[green]已写入 {len(series)} 条序列到 {out_dir}[/green]")
    logger.close_session()


@app.command()
def verify(
    corrupt_adjoint: bool = typer.Option(False, "--corrupt-adjoint", hidden=True),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="详细输出"),
):
    """运行快速校验: 伴随恒等式、梯度、近端算子、卡尔曼等价和 RK4 阶"""

    logger = _make_logger(LoggingConfig())
    try:
        with _progress() as progress:
            task = progress.add_task("校验中...", total=6)

            def advance(name: str):
                progress.update(task, advance=1, description=name)

            results = run_all_checks(corrupt_adjoint=corrupt_adjoint, logger=logger,
                                     progress_callback=advance)
    except NUMERICAL_ERRORS as e:
        _fail_numerical(logger, e, None, verbose)

    StatusDisplay(console).show_check_results(results)
    logger.close_session()
    if not all(r.passed for r in results):
        raise typer.Exit(EXIT_VERIFY)


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is not None:
        value = threads
    else:
        raw = ConfigManager().get_env_or_config("ROBUST_DA_THREADS", 1)
        try:
            value = int(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"无法解析线程数 '{raw}'", key="ROBUST_DA_THREADS")
    if value < 1:
        raise ConfigError(f"线程数必须至少为 1: {value}", key="ROBUST_DA_THREADS")
    return value


@app.command()
def grid(
    protocol: str = typer.Argument(..., help=f"实验网格: {', '.join(GRID_PROTOCOLS)}"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="输出目录, 默认 results/<protocol>"),
    seeds: int = typer.Option(1, "--seeds", "-k", help="随机种子个数"),
    threads: Optional[int] = typer.Option(None, "--threads", "-t", help="并行线程数 (默认取 ROBUST_DA_THREADS)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="详细输出"),
):
    """运行完整实验网格 (好/坏数据 × 范数 × tau)"""

    try:
        configs = grid_configs(protocol, seeds)
        workers = _resolve_threads(threads)
    except (ConfigError, ValueError) as e:
        console.print(f"[red]配置错误: {e}[/red]")
        raise typer.Exit(EXIT_CONFIG)

    logger = _make_logger(configs[0].logging)
    total = sum(_series_count(cfg) for cfg in configs)

    try:
        with _progress() as progress:
            task = progress.add_task(f"网格 {protocol}", total=total)

            def advance(label: str):
                progress.update(task, advance=1)

            results = run_grid(configs, threads=workers, logger=logger, progress_callback=advance)
    except NUMERICAL_ERRORS as e:
        _fail_numerical(logger, e, protocol, verbose)

    series = [s for _, items in results for s in items]
    out_dir = Path(out) if out else Path("results") / protocol
    _write(series, out_dir, logger, verbose, protocol=protocol)
    analyses = sum(1 for s in series if s.norm != "none")
    console.print(f"[green]网格 {protocol} 完成: {analyses} 条分析序列, "
                  f"{len(series) - analyses} 条预报基线, 输出到 {out_dir}[/green]")
    logger.close_session()


@app.command()
def config(
    show: bool = typer.Option(False, "--show", help="显示校验后的配置"),
    init: Optional[str] = typer.Option(None, "--init", help="在指定路径写入默认配置"),
    method: Method = typer.Option(Method.VAR3D, "--method", "-m", help="--init 使用的同化方法"),
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help="配置文件路径"),
):
    """配置管理"""

    if init:
        ConfigManager(init).save_config(ExperimentConfig(method=method))
        console.print(f"[green]默认配置已写入: {init}[/green]")
        return

    if show:
        try:
            cfg = ConfigManager(config_path).load_config()
        except ConfigError as e:
            console.print(f"[red]配置错误: {e}[/red]")
            raise typer.Exit(EXIT_CONFIG)
        console.print(Panel(
            cfg.model_dump_json(indent=2),
            title=f"当前配置 ({cfg.run_label})",
            border_style="blue"
        ))
        return

    # 默认显示配置帮助
    console.print("[bold]配置管理选项:[/bold]")
    console.print("--show          显示校验后的配置")
    console.print("--init PATH     写入默认配置")


if __name__ == "__main__":
    app()
