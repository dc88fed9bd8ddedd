import io

from rich.console import Console

from manager import BenchmarkManager
from models import load_run_config
from tools.artifact_tools import read_jsonl
from tracing import RunEventType, RunTracer, disable_tracing, enable_tracing, get_tracer


def quiet_tracer(verbose=False):
    return RunTracer(console=Console(file=io.StringIO(), width=200), verbose=verbose)


def test_tracer_records_steps_and_summary():
    tracer = quiet_tracer(verbose=True)
    tracer.start_workflow("train", {"seed": 1})
    key = tracer.start_step("train", "rnn-fixed")
    tracer.log_epoch("train", 1, 0.5, 0.4, 0.01)
    tracer.complete_step(key, "train", "best epoch 1")
    tracer.complete_workflow("train")

    kinds = [e.event_type for e in tracer.events]
    assert kinds == [
        RunEventType.WORKFLOW_START, RunEventType.STEP_START, RunEventType.EPOCH_COMPLETE,
        RunEventType.STEP_COMPLETE, RunEventType.WORKFLOW_COMPLETE,
    ]
    summary = tracer.get_summary()
    assert "Total Events: 5" in summary
    assert "train done: best epoch 1" in summary
    assert "epoch 1: train 0.5000" in tracer.console.file.getvalue()

    records = tracer.to_records()
    assert records[0]["event_type"] == "workflow_start"
    assert records[-1]["details"] == {"success": True, "total_events": 4}


def test_disabled_tracer_records_nothing():
    tracer = quiet_tracer()
    tracer.enabled = False
    tracer.start_workflow("ingest")
    tracer.log_error("ingest", "boom")
    assert tracer.events == []
    assert tracer.get_summary() == "No pipeline events recorded."


def test_global_tracer_switch():
    enable_tracing()
    try:
        assert get_tracer().enabled
    finally:
        disable_tracing()
    assert not get_tracer().enabled


def test_command_events_are_logged(write_config, tmp_path, monkeypatch):
    monkeypatch.delenv("STGBENCH_WORKDIR", raising=False)
    monkeypatch.delenv("STGBENCH_SEED", raising=False)
    tracer = quiet_tracer()
    manager = BenchmarkManager(load_run_config(write_config()), tracer=tracer,
                               console=Console(file=io.StringIO()))
    manager.run("ingest")
    events = read_jsonl(tmp_path / "logs" / "ingest_events.jsonl")
    assert events[0]["event_type"] == "workflow_start"
    assert events[-1]["event_type"] == "workflow_complete"
    assert any(e["event_type"] == "artifact" for e in events)
