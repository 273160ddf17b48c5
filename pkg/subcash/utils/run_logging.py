"""Timed run logging for long solves."""

from __future__ import annotations

import logging
import threading
import time

logger = logging.getLogger(__name__)

_RUN_HEARTBEAT_SECONDS = 30


class RunLogger:
    """Context manager logging start, finish time and optional heartbeats of a named run."""

    def __init__(self, run_name: str, verbose: bool = False, heartbeat_seconds: int | None = None):
        self.run_name = run_name
        self.verbose = verbose
        self.heartbeat_seconds = _RUN_HEARTBEAT_SECONDS if heartbeat_seconds is None else heartbeat_seconds
        self._started_at = 0.0
        self._stop_event = threading.Event()
        self._heartbeat_thread: threading.Thread | None = None

    def __enter__(self) -> "RunLogger":
        self._started_at = time.perf_counter()
        logger.debug("%s: start", self.run_name)
        if self.heartbeat_seconds > 0:
            self._heartbeat_thread = threading.Thread(target=self._heartbeat_loop, name=f"{self.run_name}-heartbeat", daemon=True)
            self._heartbeat_thread.start()
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        self._stop_event.set()
        if self._heartbeat_thread is not None:
            self._heartbeat_thread.join(timeout=1)

        elapsed_seconds = time.perf_counter() - self._started_at
        if exc_type is None:
            logger.debug("%s: finish in %.1fs", self.run_name, elapsed_seconds)
        else:
            logger.info("%s: failed after %.1fs (%s)", self.run_name, elapsed_seconds, exc_type.__name__)
        return False

    def step(self, message: str) -> None:
        if self.verbose:
            logger.info("%s: %s", self.run_name, message)

    def _heartbeat_loop(self) -> None:
        while not self._stop_event.wait(self.heartbeat_seconds):
            logger.info("%s: heartbeat after %.1fs", self.run_name, time.perf_counter() - self._started_at)
