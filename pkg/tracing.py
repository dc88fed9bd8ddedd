"""
Tracing and console logging for benchmark pipeline runs.
"""

import os
import time
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional

from rich.console import Console

LOG_LEVEL_ENV = "STGBENCH_LOG_LEVEL"


class RunEventType(Enum):
    """Types of pipeline events to track."""
    WORKFLOW_START = "workflow_start"
    WORKFLOW_COMPLETE = "workflow_complete"
    STEP_START = "step_start"
    STEP_COMPLETE = "step_complete"
    EPOCH_COMPLETE = "epoch_complete"
    CHECKPOINT = "checkpoint"
    EARLY_STOP = "early_stop"
    ERROR = "error"
    ARTIFACT = "artifact"


@dataclass
class RunEvent:
    """Represents a single event in a pipeline run."""
    timestamp: datetime
    event_type: RunEventType
    component: str
    message: str
    details: Optional[Dict[str, Any]] = None
    duration_ms: Optional[float] = None


_STYLES = {
    RunEventType.WORKFLOW_START: "bold cyan",
    RunEventType.WORKFLOW_COMPLETE: "bold cyan",
    RunEventType.STEP_START: "blue",
    RunEventType.STEP_COMPLETE: "green",
    RunEventType.EPOCH_COMPLETE: "white",
    RunEventType.CHECKPOINT: "magenta",
    RunEventType.EARLY_STOP: "yellow",
    RunEventType.ERROR: "bold red",
    RunEventType.ARTIFACT: "dim",
}


class RunTracer:
    """Records pipeline events and echoes them to the console."""

    def __init__(self, console: Optional[Console] = None, verbose: Optional[bool] = None):
        self.events: List[RunEvent] = []
        self.start_times: Dict[str, float] = {}
        self.enabled = True
        self.console = console or Console(stderr=True, highlight=False)
        if verbose is None:
            verbose = os.getenv(LOG_LEVEL_ENV, "info").lower() != "quiet"
        self.verbose = verbose

    def _record(self, event_type: RunEventType, component: str, message: str,
                details: Optional[Dict[str, Any]] = None, duration_ms: Optional[float] = None) -> None:
        if not self.enabled:
            return
        event = RunEvent(
            timestamp=datetime.now(),
            event_type=event_type,
            component=component,
            message=message,
            details=details or {},
            duration_ms=duration_ms,
        )
        self.events.append(event)
        self._log_event(event)

    def _elapsed(self, key: str) -> Optional[float]:
        started = self.start_times.pop(key, None)
        return None if started is None else (time.time() - started) * 1000

    def start_workflow(self, workflow_name: str, details: Dict[str, Any] = None):
        """Start tracing a command."""
        if not self.enabled:
            return
        self.events.clear()
        self.start_times[workflow_name] = time.time()
        self._record(RunEventType.WORKFLOW_START, "pipeline", f"Starting {workflow_name}", details)

    def start_step(self, step_name: str, task: str, details: Dict[str, Any] = None) -> str:
        step_key = f"{step_name}_{len(self.events)}"
        self.start_times[step_key] = time.time()
        self._record(RunEventType.STEP_START, step_name, f"{step_name}: {task}", details)
        return step_key

    def complete_step(self, step_key: str, step_name: str, result: str, details: Dict[str, Any] = None):
        self._record(RunEventType.STEP_COMPLETE, step_name, f"{step_name} done: {result}", details,
                     self._elapsed(step_key))

    def log_epoch(self, component: str, epoch: int, train_loss: float, val_loss: float, seconds: float):
        self._record(
            RunEventType.EPOCH_COMPLETE, component,
            f"epoch {epoch}: train {train_loss:.4f}  val {val_loss:.4f}",
            duration_ms=seconds * 1000,
        )

    def log_checkpoint(self, component: str, path: str, epoch: int):
        self._record(RunEventType.CHECKPOINT, component, f"checkpoint at epoch {epoch}", {"path": path})

    def log_early_stop(self, component: str, epoch: int, best_epoch: int):
        self._record(RunEventType.EARLY_STOP, component,
                     f"early stop at epoch {epoch} (best epoch {best_epoch})")

    def log_artifact(self, component: str, path: str, kind: str):
        self._record(RunEventType.ARTIFACT, component, f"wrote {kind}", {"path": path})

    def log_error(self, component: str, error: str, details: Dict[str, Any] = None):
        self._record(RunEventType.ERROR, component, f"{component} error: {error}", details)

    def complete_workflow(self, workflow_name: str, success: bool = True):
        if not self.enabled:
            return
        status = "successfully" if success else "with errors"
        self._record(
            RunEventType.WORKFLOW_COMPLETE, "pipeline", f"{workflow_name} completed {status}",
            {"success": success, "total_events": len(self.events)},
            self._elapsed(workflow_name),
        )

    def _log_event(self, event: RunEvent):
        if not self.verbose:
            return
        timestamp_str = event.timestamp.strftime("%H:%M:%S.%f")[:-3]
        duration_str = f" ({event.duration_ms:.1f}ms)" if event.duration_ms else ""
        self.console.print(f"[{timestamp_str}] {event.message}{duration_str}",
                           style=_STYLES[event.event_type], markup=False)
        relevant = {k: v for k, v in (event.details or {}).items() if v is not None}
        if relevant:
            self.console.print(f"           Details: {relevant}", style="dim", markup=False)

    def get_summary(self) -> str:
        """Digest of the recorded events."""
        if not self.events:
            return "No pipeline events recorded."

        lines = ["Run Summary", "=" * 50, f"Total Events: {len(self.events)}"]
        counts: Dict[str, int] = {}
        for event in self.events:
            counts[event.event_type.value] = counts.get(event.event_type.value, 0) + 1
        for event_type, count in counts.items():
            lines.append(f"   - {event_type.replace('_', ' ').title()}: {count}")

        lines.append("\nSteps:")
        for event in self.events:
            if event.event_type == RunEventType.STEP_COMPLETE:
                took = f" ({event.duration_ms:.0f}ms)" if event.duration_ms else ""
                lines.append(f"   {event.timestamp.strftime('%H:%M:%S')} - {event.message}{took}")
        errors = [e for e in self.events if e.event_type == RunEventType.ERROR]
        if errors:
            lines.append("\nErrors:")
            lines.extend(f"   {e.message}" for e in errors)
        return "\n".join(lines)

    def to_records(self) -> List[Dict[str, Any]]:
        return [
            {
                "timestamp": event.timestamp.isoformat(timespec="milliseconds"),
                "event_type": event.event_type.value,
                "component": event.component,
                "message": event.message,
                "duration_ms": event.duration_ms,
                "details": event.details or {},
            }
            for event in self.events
        ]


# Global tracer instance
tracer = RunTracer()


def enable_tracing():
    tracer.enabled = True


def disable_tracing():
    tracer.enabled = False


def get_tracer() -> RunTracer:
    """Get the global tracer instance."""
    return tracer
