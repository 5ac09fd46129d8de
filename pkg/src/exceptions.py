from typing import Optional


class RobustDAError(Exception):
    """robust-da 所有异常的基类"""


class DimensionError(RobustDAError, ValueError):
    """向量或矩阵维度不匹配"""


class NonFiniteError(RobustDAError, FloatingPointError):
    """积分或代价函数计算中出现 NaN/Inf"""


class CovarianceError(RobustDAError, ValueError):
    """协方差算子不是对称正定的"""


class OptimizationError(RobustDAError):
    """内层优化器无法继续"""


class ConfigError(RobustDAError):
    """配置文件解析或校验失败, 记录出错的键和行号"""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        location = []
        if key:
            location.append(f"键 '{key}'")
        if line is not None:
            location.append(f"第 {line} 行")
        full = f"{message} ({', '.join(location)})" if location else message
        super().__init__(full)
