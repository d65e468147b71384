# coding: utf-8
import numpy as np


def numerical_derivative(f, x, h=1e-4):
    """중앙 차분 (f(x+h) - f(x-h)) / 2h.

    Parameters
    ----------
    f : 스칼라(혹은 배열) 입력을 받는 함수
    x : 평가 지점. 배열이면 원소별로 평가한다
    h : 차분 간격
    """
    x = np.asarray(x, dtype=float)
    fxh1 = f(x + h)  # f(x+h)
    fxh2 = f(x - h)  # f(x-h)
    return (np.asarray(fxh1) - np.asarray(fxh2)) / (2 * h)


def log_slope(f, x, h=1e-4):
    # d ln f / d ln x, x > 0 인 양의 함수에서만 쓴다
    return numerical_derivative(lambda u: np.log(f(np.exp(u))), np.log(x), h)
