# coding: utf-8
"""시뮬레이션 전체에서 쓰는 예외 계층.

CLI 는 ValidationError 계열을 exit code 2, NumericalError 계열을 3 으로 바꾼다.
"""


class SfwmError(Exception):
    pass


class ValidationError(SfwmError, ValueError):
    pass


class FrequencyRangeError(ValidationError):
    def __init__(self, omega, omega_ref, rel_window):
        self.omega = omega
        self.omega_ref = omega_ref
        self.rel_window = rel_window
        lo = omega_ref * (1.0 - rel_window)
        hi = omega_ref * (1.0 + rel_window)
        super().__init__(
            f"frequency {omega:.6e} rad/s outside Taylor validity window "
            f"[{lo:.6e}, {hi:.6e}] rad/s (±{rel_window:.0%} of omega_ref)"
        )


class NoFactorableWidthError(ValidationError):
    def __init__(self, product):
        self.product = product
        super().__init__(
            "no factorable pump width exists for this geometry "
            f"((k'_p-k'_s)(k'_p-k'_i) = {product:.3e} s^2/m^2 is not negative)"
        )


class GainRegimeError(ValidationError):
    def __init__(self, gain):
        self.gain = gain
        super().__init__(
            f"gamma*P_peak*L = {gain:.3f} is outside the low-gain regime (< 0.3); "
            "reduce the pump power"
        )


class AliasingError(ValidationError):
    pass


class ConfigError(ValidationError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class NumericalError(SfwmError, ArithmeticError):
    pass


class UndefinedCarError(NumericalError):
    pass


class UnimodalityError(NumericalError):
    def __init__(self, message, table=None):
        self.table = table
        if table is not None:
            message = f"{message}\n{table}"
        super().__init__(message)
