import re
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Callable, Iterable, List, Union

import numpy as np
from cloudpathlib import CloudPath
from tqdm import tqdm

from fl_emph.logging_utils import get_logger

logger = get_logger(__name__)

Pathy = Union[Path, CloudPath]


def random_seed(seed: int = 0) -> np.random.Generator:
    """build the seeded generator used for weights, splits and noise

    Args:
        seed (int, optional): seed value. Defaults to 0.

    Returns:
        np.random.Generator: fresh PCG64 generator
    """
    return np.random.default_rng(seed)


def path_or_cloudpath(s: str) -> Pathy:
    if re.match(r"^\w+://", str(s)):
        return CloudPath(s)
    return Path(s)


def worker_pool(
    worker_fn: Callable[[Any], Any], items: Iterable[Any], n_workers: int = 1
) -> List[Any]:
    """map worker_fn over items, in order

    Args:
        worker_fn (Callable[[Any], Any]): picklable function applied to each item
        items (Iterable[Any]): work items
        n_workers (int, optional): number of processes, 1 runs in-process. Defaults to 1.

    Returns:
        List[Any]: results in submission order
    """
    items = list(items)
    if n_workers <= 1 or len(items) <= 1:
        return [worker_fn(item) for item in tqdm(items, disable=None)]

    logger.info(f"creating pool of {n_workers} workers for {len(items)} tasks")
    with Pool(min(n_workers, len(items))) as pool:
        # imap (not imap_unordered) keeps the reduction order fixed
        return [
            res
            for res in tqdm(
                pool.imap(worker_fn, items),
                total=len(items),
                disable=None,
            )
        ]
