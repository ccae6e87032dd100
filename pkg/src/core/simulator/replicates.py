"""
重复实验运行器与种子策略。

第 i 个重复、第 s 条流使用
default_rng(SeedSequence(master_seed, spawn_key=(s, i)))，
因此结果与并行度无关：threads == 1 顺序执行，否则交给
multiprocessing.Pool 的有序 map。worker 必须可 pickle
（模块级函数或其 functools.partial）。
"""

import multiprocessing
from typing import Callable, List, Tuple, TypeVar

import numpy as np

ENVIRONMENT_STREAM = 0
REPLICATE_STREAM = 1
AUXILIARY_STREAM = 2

T = TypeVar("T")


def replicate_rng(master_seed: int, stream: int, index: int) -> np.random.Generator:
    """第 stream 条流上第 index 个重复的随机流。"""
    return np.random.default_rng(
        np.random.SeedSequence(int(master_seed), spawn_key=(int(stream), int(index)))
    )


def derived_seed(master_seed: int, stream: int, index: int = 0) -> int:
    """由 (master_seed, stream, index) 派生的 64 位种子，用于 sample_env_path。"""
    sequence = np.random.SeedSequence(int(master_seed), spawn_key=(int(stream), int(index)))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def _invoke(job: Tuple[Callable[[np.random.Generator], T], int, int, int]) -> T:
    worker, master_seed, stream, index = job
    return worker(replicate_rng(master_seed, stream, index))


def run_replicates(
    worker: Callable[[np.random.Generator], T],
    replicates: int,
    master_seed: int,
    threads: int = 1,
    stream: int = REPLICATE_STREAM,
) -> List[T]:
    """
    运行 replicates 次 worker(rng)，按下标顺序返回结果。

    Args:
        worker: 接收随机流、返回单次结果的可调用对象
        replicates: 重复次数
        master_seed: 主种子
        threads: 进程数；1 表示顺序执行
        stream: 流编号

    Returns:
        List: 长度为 replicates 的结果列表

    Raises:
        ValueError: replicates < 1 或 threads < 1
    """
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")

    jobs = [(worker, master_seed, stream, i) for i in range(replicates)]
    if threads == 1:
        return [_invoke(job) for job in jobs]

    chunksize = max(1, replicates // (threads * 8))
    with multiprocessing.Pool(threads) as pool:
        return pool.map(_invoke, jobs, chunksize=chunksize)
