import logging
import os
import warnings
import numpy as np

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "BEAMNET_THREADS"

# draws that belong to one trial but must stay independent of the node positions
POSITIONS_STREAM = 0
IMPAIRMENT_STREAM = 1


def stream_rng(
    seed: int, stream_index: int, purpose: int = POSITIONS_STREAM
) -> np.random.Generator:
    """Creates the counter-based generator of one Monte Carlo trial.

    Args:
        seed (int): experiment seed.
        stream_index (int): trial index.
        purpose (int): sub-stream selector within the trial.

    Returns:
        np.random.Generator: Philox generator keyed by (seed, stream_index, purpose).
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream_index, purpose))
    return np.random.Generator(np.random.Philox(sequence))


def resolve_workers(workers: Optional[int] = None) -> int:
    """Resolves the worker count from the argument or BEAMNET_THREADS.

    Args:
        workers (Optional[int]): explicit worker count.

    Returns:
        int: number of worker threads (at least 1).
    """
    if workers is not None:
        if workers < 1:
            raise DomainError("The number of workers must be at least 1")
        return workers
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None or raw.strip() == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        warnings.warn(
            f"Ignoring {THREADS_ENV_VAR}={raw!r}: expected a positive integer, using 1 worker"
        )
        return 1
    return value


def run_trials(
    n_trials: int,
    trial_fn: Callable[[int], ArrayLike],
    workers: Optional[int] = None,
    chunk_size: int = 256,
) -> NDArray[np.float64]:
    """Runs independent trials and stacks their results in stream-index order.

    Args:
        n_trials (int): number of trials.
        trial_fn (Callable[[int], ArrayLike]): maps a stream index to a result.
        workers (Optional[int]): worker threads; see resolve_workers.
        chunk_size (int): trials per task.

    Returns:
        NDArray[np.float64]: array of shape (n_trials, ...).
    """
    if n_trials < 1:
        raise DomainError("At least one trial is required")

    def run_chunk(start: int) -> List[NDArray[np.float64]]:
        stop = min(start + chunk_size, n_trials)
        return [np.asarray(trial_fn(index)) for index in range(start, stop)]

    starts = range(0, n_trials, chunk_size)
    n_workers = resolve_workers(workers)
    logger.debug("running %d trials on %d worker(s)", n_trials, n_workers)
    if n_workers == 1:
        chunks = [run_chunk(start) for start in starts]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as executor:
            chunks = list(executor.map(run_chunk, starts))
    return np.stack([result for chunk in chunks for result in chunk])


def mean_and_stderr(
    samples: ArrayLike, axis: int = 0
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Sample mean and standard error of the mean along an axis."""
    arr = np.asarray(samples, dtype=float)
    n = arr.shape[axis]
    mean = arr.mean(axis=axis)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, arr.std(axis=axis, ddof=1) / np.sqrt(n)
