"""
命令行四个子命令的实现：simulate / exact / limit / verify。

scripts/sieve_lab.py 只负责解析参数并映射退出码，这里的函数都可直接调用和测试。
"""

from __future__ import annotations

import contextlib
import json
import logging
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .errors import EXIT_OK, EXIT_TEST_FAILURE, ConfigError, InapplicableError, NumericalError
from .exact import Pmf, k0_pmf, k_pmf, kstar_pmf, y_pmf, zn_pmf
from .limit_laws import law_moment
from .normalization import FUNCTIONALS, limit_for
from .sieve_sim import ENGINES, resolve_selector, run_replicates
from .stats_harness import CSV_FIELDS, TestReport, any_failed
from .storage import (
    build_output_path,
    header_lines,
    render_pmf,
    render_report,
    render_reports_csv,
    render_samples,
    write_atomic,
)
from .xi_models import XiModel, classify_case, parse_model_spec

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "exact", "limit", "verify")
FORMATS = ("csv", "report")
EXACT_STATS: Dict[str, Callable[[XiModel, int], Pmf]] = {
    "kstar": kstar_pmf,
    "k": k_pmf,
    "k0": k0_pmf,
    "y": y_pmf,
    "z": zn_pmf,
}
DEFAULT_N_GRID = (1e3, 1e6, 1e9, 1e12)

# 不影响结果的运行时字段，不写入输出头
_RUNTIME_FIELDS = ("out", "workers", "verbose")


def parse_count(text: Any) -> float:
    """解析 "100"、"1e6"、"1_000" 之类的计数；整数值返回 int。"""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        value = float(text)
    else:
        try:
            value = float(str(text).replace("_", "").strip())
        except ValueError as exc:
            raise ConfigError(f"无法解析计数 {text!r}") from exc
    if not math.isfinite(value) or value < 0:
        raise ConfigError(f"计数必须为非负有限数，得到 {text!r}")
    if value == int(value) and value <= 2**53:
        return int(value)
    return value


@dataclass
class RunConfig:
    command: str
    model: str = "beta:1,1"
    n: float = 100
    reps: Optional[int] = None
    seed: int = config.DEFAULT_SEED
    stats: Tuple[str, ...] = ("k", "kstar", "k0")
    stat: str = "kstar"
    functional: str = "kstar"
    suite: Optional[str] = None
    fmt: str = "csv"
    engine: str = "sieve"
    strict: bool = False
    precision_bits: Optional[int] = None
    tol: float = config.PMF_TOL
    n_grid: Tuple[float, ...] = DEFAULT_N_GRID
    out: Optional[str] = None
    workers: int = config.DEFAULT_WORKERS
    verbose: int = 0

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"未知子命令：{self.command}（可选：{', '.join(COMMANDS)}）")
        if self.fmt not in FORMATS:
            raise ConfigError(f"未知输出格式：{self.fmt}（可选：{', '.join(FORMATS)}）")
        if self.engine not in ENGINES:
            raise ConfigError(f"未知模拟构造：{self.engine}（可选：{', '.join(ENGINES)}）")
        self.n = parse_count(self.n)
        if self.reps is not None:
            self.reps = int(parse_count(self.reps))
            if self.reps < 1:
                raise ConfigError("reps 必须 ≥ 1")
        if self.workers < 1:
            raise ConfigError("workers 必须 ≥ 1")
        if self.precision_bits is not None and self.precision_bits < config.BASE_PRECISION_BITS:
            raise ConfigError(f"precision-bits 不能小于 {config.BASE_PRECISION_BITS}")
        self.stats = resolve_selector(self.stats)
        self.stat = self.stat.lower()
        self.functional = self.functional.lower()
        self.n_grid = tuple(float(value) for value in self.n_grid)

    def to_json(self, include_runtime: bool = True) -> str:
        data = asdict(self)
        if not include_runtime:
            for name in _RUNTIME_FIELDS:
                data.pop(name)
        return json.dumps(data, sort_keys=True, ensure_ascii=False, separators=(",", ":"))

    def header_json(self) -> str:
        """写进输出头的配置：去掉 out / workers 等不影响结果的字段。"""
        return self.to_json(include_runtime=False)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        known = {item.name for item in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"配置中有未知字段：{', '.join(sorted(unknown))}")
        for name in ("stats", "n_grid"):
            if name in data:
                data[name] = tuple(data[name])
        return cls(**data)


@contextlib.contextmanager
def precision_cap(bits: Optional[int]) -> Iterator[None]:
    """临时覆盖交替和的精度上限。"""
    if bits is None:
        yield
        return
    saved = config.MAX_PRECISION_BITS
    config.MAX_PRECISION_BITS = int(bits)
    try:
        yield
    finally:
        config.MAX_PRECISION_BITS = saved


def _output_path(cfg: RunConfig, stat: str) -> Path:
    if cfg.out:
        return Path(cfg.out)
    return build_output_path(cfg.command, cfg.model, stat, cfg.fmt)


def _summary_pairs(columns: Dict[str, np.ndarray]) -> List[Tuple[str, str]]:
    pairs: List[Tuple[str, str]] = []
    for name, values in columns.items():
        values = np.asarray(values, dtype=float)
        pairs.append((f"{name}.mean", repr(float(np.mean(values)))))
        spread = float(np.var(values, ddof=1)) if values.size > 1 else 0.0
        pairs.append((f"{name}.var", repr(spread)))
    return pairs


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> Path:
    """每次重复一行；输出只依赖 (配置, seed)，与 workers 无关。"""
    model = parse_model_spec(cfg.model)
    reps = cfg.reps or 1000
    columns = run_replicates(model, cfg.n, reps, cfg.seed, cfg.stats, workers=cfg.workers, engine=cfg.engine)
    head = header_lines(cfg.header_json(), cfg.seed)
    if cfg.fmt == "csv":
        text = render_samples(columns, head)
    else:
        pairs = [("model", model.label), ("n", cfg.n), ("reps", reps)] + _summary_pairs(columns)
        text = render_report(pairs, head)
    path = _output_path(cfg, "-".join(cfg.stats))
    write_atomic(path, text)
    logger.info("simulate: %d replicates written to %s", reps, path)
    return path


# ---------------------------------------------------------------------------
# exact
# ---------------------------------------------------------------------------


def exact_pmf(model: XiModel, n: int, stat: str, tol: float = config.PMF_TOL) -> Pmf:
    if stat not in EXACT_STATS:
        raise ConfigError(f"exact 不支持统计量 {stat}（可选：{', '.join(EXACT_STATS)}）")
    if stat in ("kstar", "k0", "y"):
        return EXACT_STATS[stat](model, n, tol=tol)
    return EXACT_STATS[stat](model, n)


def cmd_exact(cfg: RunConfig) -> Path:
    if cfg.n != int(cfg.n) or cfg.n < 1:
        raise ConfigError(f"exact 要求 n 为正整数，得到 {cfg.n}")
    model = parse_model_spec(cfg.model)
    with precision_cap(cfg.precision_bits):
        pmf = exact_pmf(model, int(cfg.n), cfg.stat, cfg.tol)
    head = header_lines(cfg.header_json(), None)
    if cfg.fmt == "csv":
        text = render_pmf(pmf, head)
    else:
        pairs = [
            ("model", model.label),
            ("n", int(cfg.n)),
            ("stat", cfg.stat),
            ("support", f"{pmf.offset}..{pmf.offset + len(pmf.probs) - 1}"),
            ("mean", repr(pmf.mean())),
            ("mass_deficit", repr(pmf.mass_deficit)),
        ]
        text = render_report(pairs, head)
    path = _output_path(cfg, cfg.stat)
    write_atomic(path, text)
    return path


# ---------------------------------------------------------------------------
# limit
# ---------------------------------------------------------------------------


def _moment_text(result, k: int) -> str:
    try:
        return repr(law_moment(result.law, k))
    except InapplicableError:
        return "n/a"


def limit_pairs(model: XiModel, functional: str, n_grid: Sequence[float]) -> List[Tuple[str, Any]]:
    """极限律与归一化序列的 key: value 描述。"""
    if functional not in FUNCTIONALS:
        raise ConfigError(f"未知泛函 {functional}（可选：{', '.join(FUNCTIONALS)}）")
    info = classify_case(model)
    result = limit_for(model, functional)
    pairs: List[Tuple[str, Any]] = [
        ("model", model.label),
        ("functional", functional),
        ("case", info.case),
        ("alpha", "n/a" if info.alpha is None else repr(info.alpha)),
        ("kind", result.kind),
        ("law", result.law.name if result.law else "none"),
        ("law_tolerance", result.law.tolerance if result.law else "n/a"),
        ("experimental", "yes" if result.experimental else "no"),
        ("note", result.note),
    ]
    if result.transform_name:
        pairs.append(("transform", result.transform_name))
    if result.law is not None:
        pairs.extend((f"moment_{k}", _moment_text(result, k)) for k in (1, 2))
    if result.schedule is not None:
        for n in n_grid:
            try:
                values = result.schedule.values(n)
            except (NumericalError, ValueError) as exc:
                pairs.append((f"schedule[n={n:.0e}]", f"unavailable ({exc})"))
                continue
            for key, value in values.items():
                if key != "n":
                    pairs.append((f"{key}[n={n:.0e}]", repr(value)))
    return pairs


def cmd_limit(cfg: RunConfig) -> Path:
    model = parse_model_spec(cfg.model)
    pairs = limit_pairs(model, cfg.functional, cfg.n_grid)
    head = header_lines(cfg.header_json(), None)
    if cfg.fmt == "report":
        text = render_report(pairs, head)
    else:
        rows = [(key, value) for key, value in pairs]
        text = render_reports_csv(("key", "value"), rows, head)
    path = _output_path(cfg, cfg.functional)
    write_atomic(path, text)
    return path


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(cfg: RunConfig) -> Tuple[List[TestReport], int, Path]:
    """运行命名套件；任何非实验性检验失败时退出码为 1。"""
    from .suites import SUITES, SuiteContext

    if cfg.suite not in SUITES:
        raise ConfigError(f"未知套件 {cfg.suite!r}，可选：{', '.join(SUITES)}")
    context = SuiteContext(seed=cfg.seed, reps=cfg.reps, workers=cfg.workers, engine=cfg.engine)
    with precision_cap(cfg.precision_bits):
        reports = SUITES[cfg.suite](context)
    for report in reports:
        report.metadata.setdefault("suite", cfg.suite)
        report.metadata.setdefault("seed", cfg.seed)
    head = header_lines(cfg.header_json(), cfg.seed)
    text = render_reports_csv(CSV_FIELDS, (report.to_csv_row() for report in reports), head)
    path = _output_path(cfg, cfg.suite)
    write_atomic(path, text)
    code = EXIT_TEST_FAILURE if any_failed(reports, cfg.strict) else EXIT_OK
    return reports, code, path
