"""
Sparse Tone Recovery

Восстановление k-разреженных по Фурье непрерывных сигналов по отсчетам
на отрезке [0, T] без требования частотного зазора.

Основные возможности:
- Робастная полиномиальная регрессия по O(d) отсчетам
- Фильтры H и G с компактным спектром / носителем
- Хеширование частот в B бинов (HashToBins)
- Поиск несущей одного кластера голосованием по фазам
- Восстановление k кластеров в смешанном базисе exp * полином
- Бенчмарк и отчеты (JSON, текст, CSV)
"""

__version__ = "1.0.0"
