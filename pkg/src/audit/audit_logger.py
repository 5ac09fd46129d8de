import csv
import json
import time
import hashlib
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Any, List, Optional
from dataclasses import dataclass, asdict
from enum import Enum


class LogLevel(Enum):
    DEBUG = "debug"
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


_LEVEL_ORDER = {level: i for i, level in enumerate(LogLevel)}


class EventType(Enum):
    SESSION = "session"
    CONFIG_LOADED = "config_loaded"
    RUN_STARTED = "run_started"
    ANALYSIS_COMPLETED = "analysis_completed"
    CYCLE_COMPLETED = "cycle_completed"
    SERIES_WRITTEN = "series_written"
    CHECK_PERFORMED = "check_performed"
    ERROR_OCCURRED = "error_occurred"


@dataclass
class AuditEvent:
    timestamp: str
    event_type: EventType
    level: LogLevel
    run_label: Optional[str]
    details: Dict[str, Any]
    result: Dict[str, Any]
    session_id: str
    event_id: str

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        data = asdict(self)
        data['event_type'] = self.event_type.value
        data['level'] = self.level.value
        return data


def _jsonable(value: Any) -> Any:
    """把 numpy 标量/数组等转换为可写入 JSON 的对象"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


class AuditLogger:
    """运行日志记录器 - 以 JSON Lines 记录每次实验、分析、输出和校验"""

    def __init__(self,
                 log_directory: str = "logs",
                 session_id: Optional[str] = None,
                 level: str = "info",
                 enabled: bool = True):
        self.enabled = enabled
        self.min_level = LogLevel(level.lower())
        self.log_directory = Path(log_directory)
        if self.enabled:
            self.log_directory.mkdir(parents=True, exist_ok=True)

        self.session_id = session_id or self._generate_session_id()
        self.log_file = self.log_directory / f"audit_{datetime.now().strftime('%Y%m%d')}.jsonl"
        self.session_file = self.log_directory / f"session_{self.session_id}.jsonl"

        self.event_counter = 0
        self.events_per_session = 0
        self.write_failures = 0

        # 内存中的事件缓存（用于摘要和检索）
        self.recent_events: List[AuditEvent] = []
        self.max_recent_events = 1000

        self._lock = threading.Lock()

        self._log_session_event("session_start", {"status": "started"})

    def _generate_session_id(self) -> str:
        """生成会话ID"""
        timestamp = str(time.time())
        return hashlib.md5(timestamp.encode()).hexdigest()[:16]

    def _generate_event_id(self) -> str:
        self.event_counter += 1
        self.events_per_session += 1
        return f"{self.session_id}_{self.event_counter:06d}"

    def _emit(self,
              event_type: EventType,
              level: LogLevel,
              details: Dict[str, Any],
              result: Dict[str, Any],
              run_label: Optional[str] = None) -> Optional[AuditEvent]:
        if _LEVEL_ORDER[level] < _LEVEL_ORDER[self.min_level]:
            return None
        with self._lock:
            event = AuditEvent(
                timestamp=datetime.now(timezone.utc).isoformat(),
                event_type=event_type,
                level=level,
                run_label=run_label,
                details=_jsonable(details),
                result=_jsonable(result),
                session_id=self.session_id,
                event_id=self._generate_event_id()
            )
            self._write_event(event)
        return event

    def _log_session_event(self, action: str, result: Dict[str, Any]):
        self._emit(EventType.SESSION, LogLevel.INFO,
                   {"action": action, "session_id": self.session_id}, result)

    def log_config_loaded(self, config_path: str, run_label: str, config: Dict[str, Any]):
        """记录配置加载"""
        self._emit(EventType.CONFIG_LOADED, LogLevel.INFO,
                   {"config_path": config_path, "config": config},
                   {"status": "validated"}, run_label)

    def log_run_started(self, run_label: str, method: str, norms: List[str], seed: int,
                        metadata: Optional[Dict[str, Any]] = None):
        self._emit(EventType.RUN_STARTED, LogLevel.INFO,
                   {"method": method, "norms": norms, "seed": seed, "metadata": metadata or {}},
                   {"status": "started"}, run_label)

    def log_analysis_completed(self,
                               run_label: str,
                               norm: str,
                               time_point: float,
                               diagnostics: Dict[str, Any]):
        """记录一次分析 (调试级别, 循环中调用频繁)"""
        self._emit(EventType.ANALYSIS_COMPLETED, LogLevel.DEBUG,
                   {"norm": norm, "time": time_point}, diagnostics, run_label)

    def log_cycle_completed(self,
                            run_label: str,
                            norm: str,
                            data_quality: str,
                            n_points: int,
                            final_rmse: float,
                            elapsed: float):
        """记录一条 RMSE 序列的完整同化循环"""
        self._emit(EventType.CYCLE_COMPLETED, LogLevel.INFO,
                   {"norm": norm, "data_quality": data_quality, "n_points": n_points,
                    "elapsed": elapsed},
                   {"final_rmse": final_rmse}, run_label)

    def log_series_written(self, run_label: str, path: str, rows: int):
        self._emit(EventType.SERIES_WRITTEN, LogLevel.INFO,
                   {"path": path}, {"rows": rows}, run_label)

    def log_check_performed(self, name: str, passed: bool, value: float, threshold: float,
                            details: Optional[Dict[str, Any]] = None):
        """记录一项校验"""
        self._emit(EventType.CHECK_PERFORMED, LogLevel.INFO if passed else LogLevel.WARNING,
                   {"check": name, "threshold": threshold, "details": details or {}},
                   {"passed": passed, "value": value})

    def log_error(self,
                  error_type: str,
                  error_message: str,
                  context: Optional[Dict[str, Any]] = None,
                  run_label: Optional[str] = None):
        """记录错误"""
        self._emit(EventType.ERROR_OCCURRED, LogLevel.ERROR,
                   {"error_type": error_type, "context": context or {}},
                   {"error_message": error_message}, run_label)

    def _write_event(self, event: AuditEvent):
        """写入事件到日志文件"""
        self.recent_events.append(event)
        if len(self.recent_events) > self.max_recent_events:
            self.recent_events.pop(0)

        if not self.enabled:
            return

        line = json.dumps(event.to_dict(), ensure_ascii=False) + '\n'
        try:
            with open(self.log_file, 'a', encoding='utf-8') as f:
                f.write(line)
            with open(self.session_file, 'a', encoding='utf-8') as f:
                f.write(line)
        except OSError:
            # 日志写入失败不影响计算, 只计数
            self.write_failures += 1

    def get_session_summary(self) -> Dict[str, Any]:
        """获取会话摘要"""
        event_counts: Dict[str, int] = {}
        failed_checks = 0
        errors = 0

        for event in self.recent_events:
            event_type = event.event_type.value
            event_counts[event_type] = event_counts.get(event_type, 0) + 1

            if event.event_type == EventType.CHECK_PERFORMED and not event.result.get("passed", True):
                failed_checks += 1

            if event.level == LogLevel.ERROR:
                errors += 1

        return {
            "session_id": self.session_id,
            "events_count": self.events_per_session,
            "event_types": event_counts,
            "failed_checks": failed_checks,
            "errors": errors,
            "duration": self._calculate_session_duration()
        }

    def _calculate_session_duration(self) -> float:
        if not self.recent_events:
            return 0.0

        first_time = datetime.fromisoformat(self.recent_events[0].timestamp)
        last_time = datetime.fromisoformat(self.recent_events[-1].timestamp)
        return (last_time - first_time).total_seconds()

    def search_events(self,
                      event_type: Optional[EventType] = None,
                      level: Optional[LogLevel] = None,
                      run_label: Optional[str] = None,
                      since: Optional[datetime] = None,
                      limit: int = 100) -> List[AuditEvent]:
        """搜索事件, 最新的在前"""
        filtered_events = []

        for event in reversed(self.recent_events):
            if len(filtered_events) >= limit:
                break

            if event_type and event.event_type != event_type:
                continue

            if level and event.level != level:
                continue

            if run_label and event.run_label != run_label:
                continue

            if since and datetime.fromisoformat(event.timestamp) < since:
                continue

            filtered_events.append(event)

        return filtered_events

    def export_logs(self,
                    output_file: str,
                    format: str = "json",
                    event_type: Optional[EventType] = None,
                    since: Optional[datetime] = None) -> bool:
        """导出日志"""
        events = self.search_events(event_type=event_type, since=since, limit=10000)
        try:
            if format == "json":
                with open(output_file, 'w', encoding='utf-8') as f:
                    json.dump([event.to_dict() for event in events], f,
                              ensure_ascii=False, indent=2)
            elif format == "csv":
                with open(output_file, 'w', newline='', encoding='utf-8') as f:
                    if events:
                        writer = csv.DictWriter(f, fieldnames=events[0].to_dict().keys())
                        writer.writeheader()
                        for event in events:
                            row = event.to_dict()
                            row["details"] = json.dumps(row["details"], ensure_ascii=False)
                            row["result"] = json.dumps(row["result"], ensure_ascii=False)
                            writer.writerow(row)
            else:
                raise ValueError(f"不支持的导出格式: {format}")
            return True
        except OSError:
            return False

    def close_session(self):
        """关闭会话"""
        self._log_session_event("session_end", {"status": "ended",
                                                "session_summary": self.get_session_summary()})
