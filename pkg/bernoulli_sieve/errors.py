"""异常体系与命令行退出码。"""

from typing import Optional

EXIT_OK = 0
EXIT_TEST_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class SieveError(Exception):
    """所有本包异常的基类。"""


class ModelError(SieveError, ValueError):
    """ξ 分布族或其参数非法。"""


class ConfigError(SieveError, ValueError):
    """运行配置非法（参数组合、未知套件等）。"""


class InapplicableError(SieveError):
    """所请求的极限定理在该模型下不适用。"""


class NumericalError(SieveError):
    """数值积分或反演未收敛；achieved 为实际达到的容差。"""

    def __init__(self, message: str, achieved: Optional[float] = None) -> None:
        super().__init__(message)
        self.achieved = achieved


class PrecisionError(NumericalError):
    """精度提升到上限后仍然出现灾难性抵消。"""

    def __init__(self, message: str, bits: int, achieved: Optional[float] = None) -> None:
        super().__init__(message, achieved)
        self.bits = bits


class SimulationError(SieveError):
    """重复模拟中途失败；completed 为已完成的前缀条数。"""

    def __init__(self, message: str, completed: int) -> None:
        super().__init__(message)
        self.completed = completed


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (NumericalError, SimulationError)):
        return EXIT_NUMERICAL
    if isinstance(exc, (ConfigError, ModelError, InapplicableError)):
        return EXIT_USAGE
    return EXIT_TEST_FAILURE
