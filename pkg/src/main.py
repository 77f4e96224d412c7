"""
Точка входа для инструмента восстановления разреженных сигналов.

Подкоманды: генерация сигнала, восстановление полинома, одного кластера
и k кластеров, просмотр фильтров, бенчмарк и вычисление сохраненной
модели. Вся случайность выводится из --seed.

Примеры использования:
    python -m src.main gen --k 3 --F 100 --T 1 --seed 7 -o sig.json
    python -m src.main recover-k --signal sig.json --noise gaussian-white --noise-level 0.1 --seed 1
    python -m src.main bench --suite poly --trials 100 --csv poly.csv
"""

import argparse
import json
import logging
import sys
import time
from typing import List, Optional

import numpy as np

from .bench import SUITES, run_suite, sample_slope, summarize
from .config import PROFILES, CliConfig, load_config
from .errors import ConfigError, RecoveryFailure, SparseToneError
from .filters import build_filter_g, build_filter_h, tabulate_g, tabulate_h
from .k_cluster import cft_k_cluster
from .models import MixedBasisModel, RecoveryReport, estimate_residual, model_error_T
from .one_cluster import OneClusterParams, cft_1cluster
from .poly_interp import random_polynomial, robust_poly_learn, robust_poly_learn_boosted
from .report_generator import ReportGenerator
from .signal_core import (
    NoiseSpec,
    SignalGenSpec,
    SignalSource,
    dense_spectrum_oracle,
    gen_signal,
    load_signal,
    save_signal,
    with_noise,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

PLOT_POINTS = 2001


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparse-tone",
        description="Восстановление k-разреженных по Фурье сигналов без частотного зазора",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="Подробный журнал (DEBUG)")
    common.add_argument("--seed", type=int, default=0, help="Seed всего запуска")
    common.add_argument("-o", "--output", "--report", dest="output", default=None,
                        help="Файл результата (по умолчанию stdout)")
    common.add_argument("--emit-plot-data", dest="plot_prefix", default=None,
                        help="Префикс CSV файлов (t, re, im) и (f, mag) для графиков")
    common.add_argument("--timing", action="store_true", help="Записать wall_time в отчет")

    noisy = argparse.ArgumentParser(add_help=False)
    noisy.add_argument("--signal", default=None, help="JSON файл сигнала (обязателен кроме recover-poly)")
    noisy.add_argument("--noise", choices=NoiseSpec.KINDS, default="none", help="Вид шума")
    noisy.add_argument("--noise-level", type=float, default=0.0, help="Целевая норма ||g||_T")
    noisy.add_argument("--format", choices=["json", "text"], default="json", help="Формат отчета")

    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="Сгенерировать случайный сигнал")
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--F", type=float, required=True)
    gen.add_argument("--T", type=float, required=True)
    gen.add_argument("--min-gap", type=float, default=0.0)
    gen.add_argument("--amplitude-law", choices=["unit", "log-uniform"], default="unit")

    poly = sub.add_parser("recover-poly", parents=[common, noisy], help="Робастная полиномиальная регрессия")
    poly.add_argument("--degree", type=int, required=True)
    poly.add_argument("--fail-prob", type=float, default=None, help="Бустинг до вероятности отказа p")
    poly.add_argument("--T", type=float, default=None,
                      help="Длина отрезка; без --signal истина - случайный полином степени d (по умолчанию 1)")

    one = sub.add_parser("recover-1", parents=[common, noisy], help="Восстановление одного кластера")
    one.add_argument("--Delta", type=float, default=None, help="Полуширина кластера (по умолчанию 2/T)")
    one.add_argument("--degree", type=int, default=None)
    one.add_argument("--delta", type=float, default=0.01)

    rec = sub.add_parser("recover-k", parents=[common, noisy], help="Восстановление k кластеров")
    rec.add_argument("--config", default=None, help="JSON файл RecoveryConfig")
    rec.add_argument("--k", type=int, default=None, help="По умолчанию число тонов в файле")
    rec.add_argument("--B", type=int, default=None)
    rec.add_argument("--Delta", type=float, default=None)
    rec.add_argument("--Delta-h", dest="Delta_h", type=float, default=None)
    rec.add_argument("--degree", type=int, default=None)

    filt = sub.add_parser("filters", parents=[common], help="Таблицы фильтров H и G")
    filt.add_argument("--inspect", choices=["h", "g"], required=True)
    filt.add_argument("--k", type=int, default=1)
    filt.add_argument("--delta", type=float, default=0.01)
    filt.add_argument("--T", type=float, default=1.0)
    filt.add_argument("--B", type=int, default=16)
    filt.add_argument("--alpha", type=float, default=0.2)
    filt.add_argument("--points", type=int, default=513)

    bench = sub.add_parser("bench", parents=[common], help="Серии Монте-Карло")
    bench.add_argument("--suite", choices=SUITES, required=True)
    bench.add_argument("--trials", type=int, default=10)
    bench.add_argument("--csv", default=None, help="CSV файл строк испытаний")
    bench.add_argument("--snr", type=float, default=None, help="SNR в дБ (inf - без шума)")
    bench.add_argument("--k", type=int, default=2)
    bench.add_argument("--degree", type=int, default=10)
    bench.add_argument("--slope", action="store_true", help="Рост числа отсчетов по FT")
    bench.add_argument("--profile", choices=sorted(PROFILES), default="fast",
                       help="Профиль конфигурации для набора k")
    bench.add_argument("--gapless", action="store_true", help="Пара тонов в одном кластере (набор k)")

    ev = sub.add_parser("eval-model", parents=[common], help="Значения сохраненной модели")
    ev.add_argument("--model", required=True, help="JSON модели или отчета")
    ev.add_argument("--t", default=None, help="Моменты через запятую")
    ev.add_argument("--t-file", default=None, help="Файл с моментом на строке")
    return parser


def _cli_config(args: argparse.Namespace) -> CliConfig:
    skip = {"command", "verbose", "seed", "output", "plot_prefix", "signal", "config", "model", "t_file", "csv"}
    inputs = {name: getattr(args, name) for name in ("signal", "config", "model", "t_file")
              if getattr(args, name, None)}
    outputs = {name: value for name, value in (("output", args.output), ("plot", args.plot_prefix),
                                               ("csv", getattr(args, "csv", None))) if value}
    options = {name: value for name, value in vars(args).items() if name not in skip}
    return CliConfig(subcommand=args.command, inputs=inputs, outputs=outputs, seed=args.seed,
                     verbose=args.verbose, options=options)


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _noisy_source(args, rng):
    if not args.signal:
        raise ConfigError(f"{args.command} needs --signal")
    sig, T, F = load_signal(args.signal)
    spec = NoiseSpec(kind=args.noise, level=args.noise_level)
    return sig, T, F, with_noise(SignalSource.from_signal(sig, label=args.signal), spec, T, rng)


def _write_plot_data(prefix: str, func, T: float, F: float) -> None:
    writer = ReportGenerator()
    t = np.linspace(0.0, T, PLOT_POINTS)
    values = np.asarray(func(t), dtype=complex)
    writer.generate_csv(("t", "re", "im"), zip(t.tolist(), values.real.tolist(), values.imag.tolist()),
                        f"{prefix}_time.csv")
    f, power = dense_spectrum_oracle(func, T, np.linspace(-F, F, PLOT_POINTS))
    writer.generate_csv(("f", "mag"), zip(f.tolist(), np.sqrt(power).tolist()), f"{prefix}_spectrum.csv")
    logger.info(f"Plot data written with prefix {prefix}")


def _finish_report(args, report: RecoveryReport, F: float) -> int:
    writer = ReportGenerator()
    if args.format == "text":
        _emit(writer.generate_text_report([report]), args.output)
    else:
        _emit(writer.generate_json_report(report, include_timing=args.timing), args.output)
    if args.plot_prefix:
        _write_plot_data(args.plot_prefix, report.model, report.model.T, F)
    summary = f"samples={report.n_samples}, residual={report.noise_level:.4g}"
    if report.err_T is not None:
        summary += f", err_T={report.err_T:.4g}"
    print(f"{report.command}: {summary}", file=sys.stderr)
    return EXIT_OK


def cmd_gen(args, rng) -> int:
    spec = SignalGenSpec(k=args.k, F=args.F, min_gap=args.min_gap, amplitude_law=args.amplitude_law)
    if not args.T > 0:
        raise ConfigError(f"T must be positive, got {args.T}")
    sig = gen_signal(spec, rng)
    text = json.dumps(sig.to_dict(args.T, args.F), indent=2)
    if args.output:
        save_signal(args.output, sig, args.T, args.F)
    else:
        print(text)
    if args.plot_prefix:
        _write_plot_data(args.plot_prefix, sig, args.T, args.F)
    return EXIT_OK


def _poly_truth(args, rng):
    """Signal file (T from --T when given) or a random degree-d Legendre polynomial."""
    if args.signal:
        sig, T, F = load_signal(args.signal)
        T = args.T if args.T is not None else T
        source = SignalSource.from_signal(sig, label=args.signal)
    else:
        T = args.T if args.T is not None else 1.0
        sig = random_polynomial(args.degree, T, rng)
        F = (args.degree + 1) / T
        source = SignalSource(sig, label=f"poly(d={args.degree})")
    if not T > 0:
        raise ConfigError(f"T must be positive, got {T}")
    spec = NoiseSpec(kind=args.noise, level=args.noise_level)
    return sig, T, F, with_noise(source, spec, T, rng)


def cmd_recover_poly(args, rng) -> int:
    if args.degree < 0:
        raise ConfigError(f"degree must be non-negative, got {args.degree}")
    sig, T, F, x = _poly_truth(args, rng)
    started = time.perf_counter()
    if args.fail_prob is None:
        poly = robust_poly_learn(x, args.degree, T, rng)
    else:
        poly = robust_poly_learn_boosted(x, args.degree, T, args.fail_prob, rng)
    n_samples = x.samples_taken
    model = MixedBasisModel([(0.0, poly)], T)
    err = model_error_T(model, sig, T)
    report = RecoveryReport(
        model=model, n_samples=n_samples, err_T=err,
        noise_level=estimate_residual(x, model, rng), seed=args.seed,
        wall_time=time.perf_counter() - started, freqs=[0.0],
        config={"degree": args.degree, "fail_prob": args.fail_prob, "T": T}, command="recover-poly",
        extras={"coeffs": poly.to_dict(), "err_T_vs_truth": err, "truth": args.signal or "random"},
    )
    return _finish_report(args, report, F)


def cmd_recover_1(args, rng) -> int:
    sig, T, F, x = _noisy_source(args, rng)
    started = time.perf_counter()
    Delta = args.Delta if args.Delta is not None else 2.0 / T
    h = build_filter_h(1, args.delta, T)
    params = OneClusterParams.build(T, F, Delta, k=1, delta=args.delta)
    model, residual = cft_1cluster(x, h, params, rng, degree=args.degree)
    report = RecoveryReport(
        model=model, n_samples=x.samples_taken, err_T=model_error_T(model, sig, T), noise_level=residual,
        seed=args.seed, wall_time=time.perf_counter() - started, freqs=model.freqs,
        config={"T": T, "F": F, "Delta": Delta, "delta": args.delta, "degree": args.degree},
        command="recover-1",
    )
    return _finish_report(args, report, F)


def cmd_recover_k(args, rng) -> int:
    sig, T, F, x = _noisy_source(args, rng)
    cfg = load_config(args.config, k=args.k or sig.k, T=T, F=F, seed=args.seed, B=args.B,
                      Delta=args.Delta, Delta_h=args.Delta_h, degree=args.degree)
    print(f"config: {json.dumps(cfg.to_dict(), sort_keys=True)}", file=sys.stderr)
    report = cft_k_cluster(x, cfg, rng, truth=sig)
    return _finish_report(args, report, F)


def cmd_filters(args, rng) -> int:
    writer = ReportGenerator()
    if args.inspect == "h":
        h = build_filter_h(args.k, args.delta, args.T)
        t, values, f, spectrum = tabulate_h(h, args.points)
        header = ("t", "H", "f", "abs_H_hat")
    else:
        g = build_filter_g(args.B, args.delta, alpha=args.alpha)
        t, values, f, spectrum = tabulate_g(g, args.points)
        header = ("n", "G", "xi", "G_hat")
    rows = zip(t.tolist(), np.asarray(values).tolist(), f.tolist(), np.asarray(spectrum).tolist())
    _emit(writer.generate_csv(header, rows), args.output)
    return EXIT_OK


def cmd_bench(args, rng) -> int:
    writer = ReportGenerator()
    if args.slope:
        rows = sample_slope(k=args.k, seed=args.seed, profile=args.profile, gapless=args.gapless)
        text = writer.generate_csv(("FT", "n_samples", "growth"),
                                   ([row["FT"], row["n_samples"], row["growth"]] for row in rows), args.csv)
        if not args.csv:
            print(text, end="")
        print(f"bench slope: growth {rows[-1]['growth']:.3g} over FT x{rows[-1]['FT'] / rows[0]['FT']:g}",
              file=sys.stderr)
        return EXIT_OK
    snr = args.snr
    rows = run_suite(args.suite, args.trials, seed=args.seed, snr_db=snr, k=args.k, d=args.degree,
                     profile=args.profile, gapless=args.gapless)
    text = writer.generate_bench_csv(rows, args.csv)
    if not args.csv:
        print(text, end="")
    stats = summarize(rows)
    print(f"bench {args.suite}: {stats['trials']} trials, median err_ratio {stats['median_err_ratio']:.3g}, "
          f"p95 {stats['p95_err_ratio']:.3g}", file=sys.stderr)
    return EXIT_OK


def _read_times(args) -> List[float]:
    raw: List[str] = []
    if args.t:
        raw.extend(item for item in args.t.split(",") if item.strip())
    if args.t_file:
        try:
            with open(args.t_file, "r", encoding="utf-8") as handle:
                raw.extend(line for line in handle.read().splitlines() if line.strip())
        except OSError as error:
            raise ConfigError(f"cannot read time list '{args.t_file}': {error}") from error
    try:
        return [float(item) for item in raw]
    except ValueError as error:
        raise ConfigError(f"bad time value: {error}") from error


def cmd_eval_model(args, rng) -> int:
    model = MixedBasisModel.load(args.model)
    t = np.array(_read_times(args), dtype=float)
    values = model(t) if t.size else np.zeros(0, dtype=complex)
    rows = zip(t.tolist(), values.real.tolist(), values.imag.tolist())
    _emit(ReportGenerator().generate_csv(("t", "re", "im"), rows), args.output)
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "recover-poly": cmd_recover_poly,
    "recover-1": cmd_recover_1,
    "recover-k": cmd_recover_k,
    "filters": cmd_filters,
    "bench": cmd_bench,
    "eval-model": cmd_eval_model,
}


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv and run one subcommand.

    Returns:
        0 on success, 1 on a recovery failure or an unwritable output, 2 on configuration or parse errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return EXIT_OK if exit_request.code in (0, None) else EXIT_CONFIG

    logging.getLogger("src").setLevel(logging.DEBUG if args.verbose else logging.WARNING)
    cli = _cli_config(args)
    resolved = json.dumps(cli.to_dict(), sort_keys=True, default=str)
    logger.info(f"Resolved command line: {resolved}")
    print(f"run: {resolved}", file=sys.stderr)
    rng = np.random.default_rng(args.seed)
    try:
        return COMMANDS[args.command](args, rng)
    except RecoveryFailure as failure:
        print(f"Ошибка восстановления: {failure}", file=sys.stderr)
        return EXIT_FAILURE
    except ConfigError as error:
        print(f"Ошибка конфигурации: {error}", file=sys.stderr)
        return EXIT_CONFIG
    except SparseToneError as error:
        print(f"Ошибка: {error}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as error:
        print(f"Ошибка ввода-вывода: {error}", file=sys.stderr)
        return EXIT_FAILURE


def main():
    """Console entry point."""
    logging.basicConfig(format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
