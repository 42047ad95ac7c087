#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
结构化日志配置
基于 structlog，库模块写键值日志到标准错误，命令行输出保持干净
"""

import logging
import sys
from typing import Optional

import structlog

from settings import get_settings

_configured = False


def _stderr_logger_factory(*args) -> structlog.PrintLogger:
    # 每次取当前的 sys.stderr，测试框架替换流之后仍然可写
    return structlog.PrintLogger(file=sys.stderr)


def configure_logging(level: Optional[str] = None, json_logs: Optional[bool] = None) -> None:
    """配置 structlog 处理链"""
    global _configured

    settings = get_settings()
    level_name = (level or settings.log_level).upper()
    use_json = settings.log_json if json_logs is None else json_logs

    numeric_level = logging.getLevelName(level_name)
    if not isinstance(numeric_level, int):
        raise ValueError(f"未知的日志级别: {level_name}")

    processors = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
    ]
    if use_json:
        processors.append(structlog.processors.JSONRenderer())
    else:
        processors.append(structlog.dev.ConsoleRenderer(colors=False))

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        logger_factory=_stderr_logger_factory,
        cache_logger_on_first_use=False,
    )
    _configured = True


def get_logger(name: str):
    """获取绑定了模块名的日志器"""
    if not _configured:
        configure_logging()
    return structlog.get_logger(name, module=name)
