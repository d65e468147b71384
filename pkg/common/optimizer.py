# coding: utf-8
import math

import numpy as np

from common.errors import ValidationError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/φ


class GoldenSection:
    """구간 [lo, hi] 안의 단봉 함수 최댓값을 황금분할로 찾는다.

    Parameters
    ----------
    tol : 구간 폭이 이 값(상대값)보다 작아지면 멈춘다
    max_iter : 최대 반복 수
    log_scale : True 면 ln(x) 공간에서 탐색 (양수 구간 전용)
    """

    def __init__(self, tol=1e-10, max_iter=500, log_scale=False):
        self.tol = tol
        self.max_iter = max_iter
        self.log_scale = log_scale
        self.iter = 0

    def maximize(self, f, lo, hi):
        if not lo < hi:
            raise ValidationError(f"empty bracket [{lo}, {hi}]")
        if self.log_scale:
            if lo <= 0:
                raise ValidationError("log-scale search needs a positive bracket")
            g = lambda u: f(math.exp(u))  # noqa: E731
            a, b = math.log(lo), math.log(hi)
        else:
            g = f
            a, b = float(lo), float(hi)

        scale = max(abs(a), abs(b), 1.0) if not self.log_scale else 1.0
        c = b - INV_PHI * (b - a)
        d = a + INV_PHI * (b - a)
        gc, gd = g(c), g(d)

        self.iter = 0
        while (b - a) > self.tol * scale and self.iter < self.max_iter:
            if gc >= gd:
                b, d, gd = d, c, gc
                c = b - INV_PHI * (b - a)
                gc = g(c)
            else:
                a, c, gc = c, d, gd
                d = a + INV_PHI * (b - a)
                gd = g(d)
            self.iter += 1

        # 양 끝점도 후보에 넣는다 (단조 함수면 끝점이 최댓값)
        candidates = [(a, g(a)), (c, gc), (d, gd), (b, g(b))]
        u_best, g_best = max(candidates, key=lambda t: t[1])
        x_best = math.exp(u_best) if self.log_scale else u_best
        return x_best, g_best


def is_unimodal(values):
    """표본이 증가 후 감소(혹은 단조) 형태인지 확인."""
    diffs = np.sign(np.diff(np.asarray(values, dtype=float)))
    diffs = diffs[diffs != 0]
    # + 에서 - 로 한 번 이하로만 바뀌어야 한다
    changes = np.flatnonzero(diffs[1:] != diffs[:-1])
    if changes.size == 0:
        return True
    return changes.size == 1 and diffs[0] > 0
