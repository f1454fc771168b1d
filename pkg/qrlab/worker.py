"""Background threads that evaluate sweep chunks."""
import logging
import traceback
from queue import Queue
from threading import Thread
from typing import Callable, Dict, List, Optional, Sequence, Tuple


Chunk = Tuple[int, int]


class SweepWorker(Thread):
    """Evaluates chunks of a prime range, optionally on its own thread.

    Tasks are queued with `call` and run in order. A task that raises marks
    the worker as died and records the chunk it was working on.
    """

    def __init__(
        self,
        index: int,
        compute: Callable[[int], Optional[object]],
        threading: bool = True,
    ):
        """Creates a worker.

        Args:
            index: Worker index, used in log messages.
            compute: Maps one prime to its result, or None to skip it.
            threading: Whether to run tasks on this Thread. If False, `call`
                runs the task immediately and exceptions propagate.
        """
        super().__init__()
        # Kill this thread when the parent is killed
        self.daemon = True
        self.died = False
        self.index = index
        self.compute = compute
        self.threading = threading
        self.current_chunk: Optional[Chunk] = None
        self.failed_chunks: List[Chunk] = []
        self.task_queue = Queue()

    def run(self):
        """Overrides `Thread.run`."""
        logging.info("Started worker %d", self.index)
        try:
            while True:
                func, args = self.task_queue.get()
                try:
                    func(*args)
                except Exception:
                    logging.error(
                        "Error in worker %d on chunk %s", self.index, self.current_chunk
                    )
                    traceback.print_exc()
                    if self.current_chunk is not None:
                        self.failed_chunks.append(self.current_chunk)
                    self.died = True
                self.task_queue.task_done()
                if func == self.close:
                    break
        finally:
            logging.info("Closed worker %d", self.index)

    def call(self, func, *args):
        """Queues the call when threading, otherwise runs it now."""
        if self.threading:
            self.task_queue.put((func, args))
        else:
            func(*args)

    def wait(self):
        """Blocks until every queued task has finished."""
        if self.threading:
            self.task_queue.join()

    def close(self):
        self.current_chunk = None

    def process(self, chunk: Chunk, primes: Sequence[int], results: Dict[Chunk, List]):
        """Computes the results for `primes` and stores them under `chunk`."""
        self.current_chunk = chunk
        values = [self.compute(p) for p in primes]
        results[chunk] = [v for v in values if v is not None]
        logging.info(
            "Worker %d finished chunk [%d, %d] with %d results",
            self.index,
            chunk[0],
            chunk[1],
            len(results[chunk]),
        )
        self.current_chunk = None
