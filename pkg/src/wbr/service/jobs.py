"""Background job registry backed by a small thread pool.

Runs are CPU-bound numpy loops that release the GIL poorly, so the pool is
deliberately narrow; the point is to keep HTTP responsive during long
sweeps, not to parallelize them (grids fan out with processes internally).
"""

from __future__ import annotations

import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..errors import WbrError


@dataclass
class Job:
    job_id: str
    kind: str
    state: str = "queued"
    error: Optional[str] = None
    result: Optional[dict] = None
    created_at: float = field(default_factory=time.time)
    finished_at: Optional[float] = None


class JobRegistry:
    def __init__(self, max_workers: int = 2):
        self._pool = ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="wbr-job")
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def submit(self, kind: str, fn: Callable[[], dict]) -> Job:
        job = Job(job_id=uuid.uuid4().hex[:12], kind=kind)
        with self._lock:
            self._jobs[job.job_id] = job
        self._pool.submit(self._run, job, fn)
        return job

    def _run(self, job: Job, fn: Callable[[], dict]) -> None:
        with self._lock:
            job.state = "running"
        try:
            result = fn()
            with self._lock:
                job.result = result
                job.state = "done"
        except WbrError as exc:
            with self._lock:
                job.error = str(exc)
                job.state = "error"
        except Exception as exc:  # keep the worker alive; surface the repr
            with self._lock:
                job.error = repr(exc)
                job.state = "error"
        finally:
            with self._lock:
                job.finished_at = time.time()

    def get(self, job_id: str) -> Job:
        with self._lock:
            return self._jobs[job_id]

    def shutdown(self) -> None:
        self._pool.shutdown(wait=False, cancel_futures=True)
