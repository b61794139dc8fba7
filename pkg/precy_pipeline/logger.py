#!/usr/bin/env python3
"""
Модуль логирования для precy_pipeline.
Отслеживает вычисления (гомологии, башни Γ, проверки MC), запуски тестов
и хранит исключения, общие для всего пакета.
"""

import os
import json
import time
import logging
import functools
import inspect
from datetime import datetime
from typing import Dict, Any, Optional, Callable

# Настройка базового логгера
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s [%(levelname)s] %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)

LOG_DIR = 'logs'

# Файловый хендлер: один лог-файл на процесс
try:
    os.makedirs(LOG_DIR, exist_ok=True)
    file_handler = logging.FileHandler(
        os.path.join(LOG_DIR, f'precy_{datetime.now().strftime("%Y%m%d_%H%M%S")}.log')
    )
    file_handler.setFormatter(
        logging.Formatter('%(asctime)s [%(levelname)s] [%(filename)s:%(lineno)d] %(message)s')
    )
    logging.getLogger().addHandler(file_handler)
except Exception as e:
    logging.warning(f"Не удалось настроить сохранение логов в файл: {e}")

# Счётчики для logs/run_stats.json
_run_stats: Dict[str, Any] = {
    "session_start": datetime.now().isoformat(),
    "counters": {},
}


class PrecyError(Exception):
    """Базовое исключение пакета."""
    pass


class BoundOverflow(PrecyError):
    """Результат требует данных за пределами заданных границ (bounds)."""
    pass


class InconsistentSystem(PrecyError):
    """Линейная система не имеет решения."""
    pass


class SingularMatrixError(PrecyError):
    """Матрица (например, γ₂) необратима."""
    pass


class ValidationError(PrecyError):
    """Некорректные входные данные: JSON, комплекс, несоставимые морфизмы."""
    pass


class WindowTooSmall(PrecyError):
    """Окно степеней слишком узкое, чтобы доверять внутренним степеням."""
    pass


def _append_jsonl(file_name: str, record: Dict[str, Any]) -> None:
    try:
        with open(os.path.join(LOG_DIR, file_name), 'a') as f:
            f.write(json.dumps(record, default=str) + '\n')
    except Exception as e:
        logging.warning(f"Не удалось записать {file_name}: {e}")


def record_stats(key: str, value: int = 1) -> Dict[str, Any]:
    """
    Увеличивает счётчик и сохраняет статистику в logs/run_stats.json.

    Args:
        key: Имя счётчика (например, "quivers_enumerated")
        value: Прибавляемое значение

    Returns:
        Текущее состояние статистики
    """
    counters = _run_stats["counters"]
    counters[key] = counters.get(key, 0) + value
    try:
        with open(os.path.join(LOG_DIR, 'run_stats.json'), 'w') as f:
            json.dump(_run_stats, f, indent=2)
    except Exception as e:
        logging.warning(f"Не удалось сохранить статистику: {e}")
    return _run_stats


def log_computation(kind: str, params: Dict[str, Any],
                    outcome: Dict[str, Any]) -> Dict[str, Any]:
    """
    Логирует одно вычисление уровня CLI вместе с точными границами.

    Args:
        kind: Тип вычисления (homology, gamma, circle, ...)
        params: Параметры и границы, с которыми запускали
        outcome: Результат или отчёт о проверке

    Returns:
        Dict с записанной информацией
    """
    caller_info = inspect.stack()[1]
    info = {
        "timestamp": datetime.now().isoformat(),
        "kind": kind,
        "params": params,
        "outcome": outcome,
        "caller": f"{os.path.basename(caller_info.filename)}:{caller_info.lineno}",
    }
    logging.info(f"[{kind}] params={params} -> {outcome.get('status', 'done')}")
    _append_jsonl('computations.jsonl', info)
    return info


def log_test_run(test_name: str, status: str, duration_ms: float,
                 details: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Логирует запуск и результат выполнения теста.

    Args:
        test_name: Название теста
        status: Статус выполнения (PASSED, FAILED, ERROR, SKIPPED)
        duration_ms: Длительность выполнения в миллисекундах
        details: Дополнительная информация о тесте

    Returns:
        Dict с информацией о запуске теста
    """
    details = details or {}
    test_info = {
        "timestamp": datetime.now().isoformat(),
        "test_name": test_name,
        "status": status,
        "duration_ms": duration_ms,
        **details
    }

    if status in ("PASSED", "SKIPPED"):
        log_level = logging.INFO
    else:
        log_level = logging.ERROR
    logging.log(log_level, f"[TEST {status}] {test_name} ({duration_ms:.2f} ms)")
    if status in ("FAILED", "ERROR") and details.get("error_message"):
        logging.error(f"Детали ошибки: {details['error_message']}")

    _append_jsonl('test_runs.jsonl', test_info)
    return test_info


def log_function_calls(category: str = "FUNCTION") -> Callable:
    """
    Декоратор для логирования вызовов функций.

    Args:
        category: Категория для логирования

    Returns:
        Декоратор функции
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            name = f"{func.__module__}.{func.__name__}"
            logging.debug(f"[{category}] Вызов {name}")
            start_time = time.time()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                duration = (time.time() - start_time) * 1000
                logging.error(
                    f"[{category}] {name} завершилась с ошибкой через {duration:.2f} мс: {e}"
                )
                raise
            duration = (time.time() - start_time) * 1000
            logging.debug(f"[{category}] {name} выполнена за {duration:.2f} мс")
            return result

        return wrapper
    return decorator


def init_logging(log_level: int = logging.INFO) -> None:
    """
    Инициализирует систему логирования с заданным уровнем.

    Args:
        log_level: Уровень логирования
    """
    os.makedirs(LOG_DIR, exist_ok=True)
    logging.getLogger().setLevel(log_level)
    logging.debug(f"Логирование precy_pipeline (уровень: {logging.getLevelName(log_level)})")


# Инициализация логирования при импорте модуля
init_logging()
