from typing import Sequence
from rich.console import Console
from rich.table import Table
from rich.panel import Panel

from ..experiments import RmseSeries
from ..verify import CheckResult
from .csv_writer import RunManifest


class StatusDisplay:
    """结果显示器"""

    def __init__(self, console: Console):
        self.console = console

    def show_series_summary(self, series: Sequence[RmseSeries], title: str = "RMSE 汇总"):
        """显示每条序列的方法、范数、tau 和末时刻 RMSE"""
        table = Table(title=title, show_header=True, header_style="bold magenta")
        table.add_column("序列", style="cyan")
        table.add_column("方法", width=7)
        table.add_column("范数", width=11)
        table.add_column("τ", justify="right", width=5)
        table.add_column("数据", width=5)
        table.add_column("最终 RMSE", justify="right")

        # 与同一实验的自由预报比较着色
        baselines = {s.label[:-len("forecast")]: s.final for s in series if s.norm == "none"}
        for s in series:
            baseline = next((v for k, v in baselines.items() if s.label.startswith(k)), None)
            color = "green" if baseline is not None and s.final < baseline else "yellow"
            if s.norm == "none":
                color = "dim"
            table.add_row(
                s.label,
                s.method,
                s.norm,
                f"{s.tau:g}",
                s.data_quality,
                f"[{color}]{s.final:.4f}[/{color}]",
            )

        self.console.print(table)

    def show_check_results(self, results: Sequence[CheckResult]):
        """显示校验结果"""
        table = Table(title="校验结果", show_header=True, header_style="bold magenta")
        table.add_column("校验", style="cyan")
        table.add_column("状态", width=8)
        table.add_column("数值", justify="right")
        table.add_column("阈值", justify="right")
        table.add_column("耗时(s)", justify="right")

        for r in results:
            status = "[green]✅ 通过[/green]" if r.passed else "[red]❌ 失败[/red]"
            table.add_row(r.name, status, f"{r.value:.3e}", f"{r.threshold:.1e}", f"{r.elapsed:.2f}")

        self.console.print(table)

        failed = [r.name for r in results if not r.passed]
        if failed:
            self.console.print(Panel(
                f"[red]未通过: {', '.join(failed)}[/red]",
                title="校验失败",
                border_style="red"
            ))
        else:
            self.console.print(Panel("[green]全部校验通过[/green]", border_style="green"))

    def show_manifest(self, manifest: RunManifest):
        content = f"""输出目录: {manifest.output_dir}
序列文件: {len(manifest.files)} 个
合并文件: {manifest.combined}
种子: {', '.join(str(s) for s in manifest.seeds)}"""
        self.console.print(Panel(content, title="输出", border_style="blue"))
