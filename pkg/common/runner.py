import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor

from common.errors import ValidationError

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 65536


class BlockRunner:
    """n_items 개를 block_size 단위 블록으로 나눠 처리한다.

    블록 함수는 (block_index, start, stop) 를 받는다. 결과는 워커 수와
    상관없이 블록 순서대로 돌려준다.

    Parameters
    ----------
    n_items : 전체 항목(펄스) 수
    block_size : 블록 하나의 크기. 난수 스트림이 블록 단위라 결과에 영향을 준다
    workers : 스레드 수 (1 이면 순차 실행)
    verbose : True 면 진행률을 INFO 로 남긴다 (아니면 DEBUG)
    """

    def __init__(self, n_items, block_size=DEFAULT_BLOCK_SIZE, workers=1, verbose=False):
        if n_items < 1:
            raise ValidationError(f"n_items must be >= 1, got {n_items}")
        if block_size < 1:
            raise ValidationError(f"block_size must be >= 1, got {block_size}")
        if workers < 1:
            raise ValidationError(f"workers must be >= 1, got {workers}")
        self.n_items = int(n_items)
        self.block_size = int(block_size)
        self.workers = int(workers)
        self.verbose = verbose

        self.n_blocks = int(math.ceil(self.n_items / self.block_size))
        self.current_block = 0
        self.progress = 0
        self.timestamp = [time.time()]

    def bounds(self, block):
        start = block * self.block_size
        return start, min(start + self.block_size, self.n_items)

    def _step_done(self):
        self.current_block += 1
        percent = int(self.current_block / self.n_blocks * 100)
        if percent > self.progress:
            self.progress = percent
            self.timestamp.append(time.time())
            delta_time = int(self.timestamp[-1] - self.timestamp[0])
            level = logging.INFO if self.verbose else logging.DEBUG
            logger.log(level, "TimeStamp: %-4d    progress: %d%%", delta_time, self.progress)

    def run(self, block_fn):
        self.current_block = 0
        self.progress = 0
        self.timestamp = [time.time()]

        if self.workers == 1:
            results = []
            for block in range(self.n_blocks):
                results.append(block_fn(block, *self.bounds(block)))
                self._step_done()
            return results

        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            futures = [pool.submit(block_fn, block, *self.bounds(block)) for block in range(self.n_blocks)]
            results = []
            # 제출 순서대로 모아서 블록 순서를 유지한다
            for future in futures:
                results.append(future.result())
                self._step_done()
        return results
