"""Bi-LSTM next-activity prediction for event logs, with per-event relevance."""

from ._xnap import (
    EventLog,
    Model,
    XnapError,
    copy_task_log,
    evaluate,
    linear_log,
    read_log,
    rescale_for_display,
    train,
)

__all__ = [
    "EventLog",
    "Model",
    "XnapError",
    "copy_task_log",
    "evaluate",
    "linear_log",
    "read_log",
    "rescale_for_display",
    "train",
]
