"""Typed solver progress topics and the process-wide dispatcher."""
from __future__ import annotations

from contextlib import contextmanager
from hydroswitch._compat import StrEnum
from typing import Any, Callable, Dict, Iterator, TypedDict

from hydroswitch.infra.events import Dispatcher, Handler


class IterationPayload(TypedDict, total=False):
    case: str
    step: int
    iteration: int
    scheme: str
    eta_lin: float
    L: float


class StepPayload(TypedDict, total=False):
    case: str
    step: int
    time: float
    l_iterations: int
    newton_iterations: int
    converged: bool


class RunPayload(TypedDict, total=False):
    case: str
    strategy: str
    status: str
    total_iterations: int
    summary: str


class EventTopic(StrEnum):
    ITERATION_COMPLETED = "iteration_completed"
    STEP_COMPLETED = "step_completed"
    RUN_FINISHED = "run_finished"


_dispatcher = Dispatcher()


def subscribe_event(topic: EventTopic, handler: Handler) -> Callable[[], None]:
    """Register ``handler`` for ``topic``; call the result to unsubscribe."""
    return _dispatcher.connect(topic.value, handler)


@contextmanager
def subscribed(handlers: Dict[EventTopic, Handler]) -> Iterator[None]:
    """Keep ``handlers`` attached for the duration of the block."""
    disconnectors = [subscribe_event(topic, handler) for topic, handler in handlers.items()]
    try:
        yield
    finally:
        for disconnect in disconnectors:
            disconnect()


def emit_event(
    topic: EventTopic,
    payload: IterationPayload | StepPayload | RunPayload | Dict[str, Any] | None = None,
) -> int:
    """Dispatch ``payload`` to the handlers of ``topic``."""
    return _dispatcher.publish(topic.value, payload)


__all__ = [
    "EventTopic",
    "IterationPayload",
    "StepPayload",
    "RunPayload",
    "subscribe_event",
    "subscribed",
    "emit_event",
]
