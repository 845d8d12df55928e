"""Topic dispatcher for solver progress notifications.

Handlers are stored per topic as immutable tuples, so ``publish`` iterates a
snapshot and handlers may disconnect themselves while being called.
"""
from __future__ import annotations

import threading
from typing import Any, Callable, Dict, Tuple

from utils.logger import get_logger


logger = get_logger(__name__)

Handler = Callable[[Any], None]


class Dispatcher:
    """Thread-safe topic → handlers map; a raising handler is logged and skipped."""

    def __init__(self) -> None:
        self._handlers: Dict[str, Tuple[Handler, ...]] = {}
        self._lock = threading.Lock()

    def connect(self, topic: str, handler: Handler) -> Callable[[], None]:
        """Attach ``handler`` to ``topic`` and return its disconnector.

        Connecting the same handler twice keeps one registration.
        """
        with self._lock:
            current = self._handlers.get(topic, ())
            if handler not in current:
                self._handlers[topic] = current + (handler,)

        def disconnect() -> None:
            with self._lock:
                remaining = tuple(h for h in self._handlers.get(topic, ()) if h is not handler)
                if remaining:
                    self._handlers[topic] = remaining
                else:
                    self._handlers.pop(topic, None)

        return disconnect

    def publish(self, topic: str, payload: Any = None) -> int:
        """Call every handler of ``topic``; return how many completed."""
        delivered = 0
        for handler in self._handlers.get(topic, ()):
            try:
                handler(payload)
            except Exception as exc:
                logger.warning(f"⚠️ Handler for '{topic}' failed: {exc}")
                continue
            delivered += 1
        return delivered


__all__ = ["Dispatcher", "Handler"]
