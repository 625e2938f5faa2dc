"""
公共工具模块目录
================

这个子包只存放给节点和全景工具包复用的独立工具模块，
不放节点定义代码。
"""

from .logging_control import configure_logging, get_logger

__all__ = [
    "configure_logging",
    "get_logger",
]
