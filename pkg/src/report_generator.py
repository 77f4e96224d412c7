"""
Модуль генерации отчетов о восстановлении сигналов.

Создает отчеты в нескольких форматах: текст для чтения человеком, JSON
для автоматической обработки и CSV для таблиц (результаты бенчмарка,
значения модели, данные для графиков).
"""

import csv
import io
import json
import logging
from datetime import datetime
from typing import Dict, Iterable, List, Optional, Sequence

from .models import RecoveryReport

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ("seed", "k", "SNR", "err_ratio", "n_samples", "time_ms")


class ReportGenerator:
    """
    Класс для генерации отчетов о восстановлении.

    JSON и CSV не содержат времени генерации, поэтому одинаковые запуски
    дают одинаковые файлы; отметка времени есть только в текстовом отчете.
    """

    def __init__(self, timestamp: Optional[str] = None):
        self.timestamp = timestamp or datetime.now().strftime("%Y-%m-%d %H:%M:%S")

    def generate_text_report(self, reports: List[RecoveryReport], output_path: str = None) -> str:
        """
        Generate a text report for one or more recovery runs.

        Args:
            reports: Recovery reports
            output_path: Optional path to save report

        Returns:
            Report as string
        """
        lines = []
        lines.append("=" * 80)
        lines.append("ОТЧЕТ О ВОССТАНОВЛЕНИИ СИГНАЛА")
        lines.append("=" * 80)
        lines.append(f"Сгенерировано: {self.timestamp}")
        lines.append("")

        if reports:
            total = sum(report.n_samples for report in reports)
            lines.append(f"Запусков: {len(reports)}")
            lines.append(f"Всего отсчетов: {total}")
            lines.append("")

        for index, report in enumerate(reports, start=1):
            lines.append("-" * 80)
            lines.append(f"Запуск {index}: {report.command or 'recovery'} (seed={report.seed})")
            lines.append("-" * 80)
            lines.append(f"  Отсчетов: {report.n_samples}")
            lines.append(f"  Остаток (оценка шума): {report.noise_level:.4g}")
            if report.err_T is not None:
                lines.append(f"  Ошибка ||x~ - x*||_T: {report.err_T:.4g}")
            lines.append(f"  Время: {report.wall_time:.3f} s")

            lines.append(f"\n  Несущие частоты ({len(report.model.terms)}):")
            for freq, poly in report.model.terms[:10]:
                lines.append(f"    - {freq:.6f} Hz, степень {poly.degree}")
            if len(report.model.terms) > 10:
                lines.append(f"    ... и еще {len(report.model.terms) - 10}")
            lines.append("")

        lines.append("=" * 80)
        lines.append("ЗАМЕЧАНИЯ")
        lines.append("=" * 80)
        for index, report in enumerate(reports, start=1):
            notes = self._generate_notes(report)
            if notes:
                lines.append(f"\nЗапуск {index}:")
                for note in notes:
                    lines.append(f"  - {note}")

        text = "\n".join(lines)
        self._write(output_path, text)
        return text

    def generate_json_report(self, report: RecoveryReport, output_path: str = None,
                             include_timing: bool = False) -> str:
        """
        Generate a JSON report for one recovery run.

        Args:
            report: Recovery report
            output_path: Optional path to save report
            include_timing: Add wall_time (breaks byte-identical reruns)

        Returns:
            Report as JSON string
        """
        text = json.dumps(report.to_dict(include_timing=include_timing), indent=2, sort_keys=True)
        self._write(output_path, text)
        return text

    def generate_csv(self, header: Sequence[str], rows: Iterable[Sequence], output_path: str = None) -> str:
        """Write rows under header; floats use their shortest round-trip repr."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(value)) if isinstance(value, float) else value for value in row])
        text = buffer.getvalue()
        self._write(output_path, text)
        return text

    def generate_bench_csv(self, rows: List[Dict], output_path: str = None) -> str:
        return self.generate_csv(BENCH_COLUMNS, ([row[name] for name in BENCH_COLUMNS] for row in rows),
                                 output_path)

    def _write(self, output_path: Optional[str], text: str) -> None:
        if output_path:
            with open(output_path, "w", encoding="utf-8") as handle:
                handle.write(text)
            logger.debug(f"Wrote {output_path}")

    def _generate_notes(self, report: RecoveryReport) -> List[str]:
        """Диагностика результата: отсутствие истины, большой остаток, лишние несущие."""
        notes = []
        if report.err_T is None:
            notes.append("Истинный сигнал неизвестен: ошибка не вычислялась")
        elif report.noise_level > 0 and report.err_T > 10 * report.noise_level:
            notes.append(
                f"Ошибка {report.err_T:.3g} превышает десятикратный остаток {report.noise_level:.3g}"
            )
        k = report.config.get("k") if report.config else None
        if k and len(report.model.terms) > 4 * k:
            notes.append(f"Найдено {len(report.model.terms)} несущих при k={k}")
        return notes
