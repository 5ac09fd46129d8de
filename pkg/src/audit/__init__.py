from .audit_logger import AuditEvent, AuditLogger, EventType, LogLevel

__all__ = ["AuditEvent", "AuditLogger", "EventType", "LogLevel"]
