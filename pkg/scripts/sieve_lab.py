"""
伯努利筛实验室命令行入口。

子命令：
- simulate：精确蒙特卡洛模拟，输出每次重复一行的样本 CSV
- exact：有限 n 精确分布（kstar / k / k0 / y / z），输出 pmf CSV
- limit：极限律与归一化序列的结构化报告
- verify：运行命名验证套件，打印结果表格并以退出码报告是否全部通过

输出默认写到 data/{command}/{model}/{stat}.{csv|txt}，文件头记录版本、配置与种子。

退出码：0 全部通过，1 检验失败，2 用法错误，3 数值失败。
"""

import argparse
import logging
import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from bernoulli_sieve.commands import (
    EXACT_STATS,
    FORMATS,
    RunConfig,
    cmd_exact,
    cmd_limit,
    cmd_simulate,
    cmd_verify,
    parse_count,
)
from bernoulli_sieve.config import DEFAULT_SEED, DEFAULT_WORKERS
from bernoulli_sieve.errors import EXIT_OK, EXIT_USAGE, SieveError, SimulationError, exit_code_for
from bernoulli_sieve.normalization import FUNCTIONALS
from bernoulli_sieve.sieve_sim import ENGINES
from bernoulli_sieve.stats_harness import print_reports
from bernoulli_sieve.suites import SUITES


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", default="beta:1,1", help="ξ 模型：beta:b,c | gem:θ | logpareto:α | example27，默认 beta:1,1")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"主随机种子，默认 {DEFAULT_SEED}（或环境变量 SIEVE_SEED）")
    parser.add_argument("--out", help="输出文件路径；缺省时写到 data/{command}/{model}/ 下")
    parser.add_argument("--format", dest="fmt", choices=FORMATS, default="csv", help="输出格式：csv 或 report，默认 csv")
    parser.add_argument("--workers", type=int, default=DEFAULT_WORKERS, help="并行进程数，不影响结果，默认 1")
    parser.add_argument("--precision-bits", type=int, help="交替和的精度上限（位），默认 1024")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="日志详细程度：-v 为 INFO，-vv 为 DEBUG")


def parse_args(argv=None) -> argparse.Namespace:
    """解析命令行参数。"""
    parser = argparse.ArgumentParser(description="伯努利筛实验室：模拟、精确分布、极限律与统计验证")
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", help="精确蒙特卡洛模拟")
    _add_common(simulate)
    simulate.add_argument("--n", default="100", help="球数，支持 1e6 写法；只选 kstar/nlogn 时可到 1e15")
    simulate.add_argument("--reps", default="1000", help="重复次数，默认 1000")
    simulate.add_argument("--stats", default="k,kstar,k0", help="统计量，逗号分隔：k,kstar,k0,k1,w,z,v,y,nlogn")
    simulate.add_argument("--engine", choices=ENGINES, default="sieve", help="完整模拟的构造方式，默认 sieve")

    exact = subparsers.add_parser("exact", help="有限 n 精确分布")
    _add_common(exact)
    exact.add_argument("--n", default="50", help="球数（正整数）")
    exact.add_argument("--stat", choices=list(EXACT_STATS), default="kstar", help="统计量，默认 kstar")

    limit = subparsers.add_parser("limit", help="极限律与归一化序列")
    _add_common(limit)
    limit.add_argument("--functional", choices=FUNCTIONALS, default="kstar", help="泛函，默认 kstar")
    limit.add_argument("--n-grid", default="1e3,1e6,1e9,1e12", help="输出归一化序列的 n 网格，逗号分隔")

    verify = subparsers.add_parser("verify", help="运行命名验证套件")
    _add_common(verify)
    verify.add_argument("--suite", required=True, choices=list(SUITES), help="套件名")
    verify.add_argument("--reps", help="覆盖套件内声明的重复次数")
    verify.add_argument("--strict", action="store_true", help="样本不足（underpowered）也计为失败")
    verify.add_argument("--engine", choices=ENGINES, default="sieve", help="完整模拟的构造方式，默认 sieve")

    return parser.parse_args(argv)


def build_config(args: argparse.Namespace) -> RunConfig:
    values = dict(
        command=args.command,
        model=args.model,
        seed=args.seed,
        fmt=args.fmt,
        out=args.out,
        workers=args.workers,
        precision_bits=args.precision_bits,
        verbose=args.verbose,
    )
    if args.command == "simulate":
        values.update(n=args.n, reps=args.reps, stats=args.stats, engine=args.engine)
    elif args.command == "exact":
        values.update(n=args.n, stat=args.stat)
    elif args.command == "limit":
        values.update(functional=args.functional, n_grid=tuple(parse_count(v) for v in args.n_grid.split(",")))
    else:
        values.update(suite=args.suite, reps=args.reps, strict=args.strict, engine=args.engine)
    return RunConfig(**values)


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def run(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    if cfg.command == "simulate":
        print(f"已保存：{cmd_simulate(cfg)}")
        return EXIT_OK
    if cfg.command == "exact":
        print(f"已保存：{cmd_exact(cfg)}")
        return EXIT_OK
    if cfg.command == "limit":
        print(f"已保存：{cmd_limit(cfg)}")
        return EXIT_OK
    reports, code, path = cmd_verify(cfg)
    print_reports(reports, strict=cfg.strict)
    print(f"已保存：{path}")
    if code != EXIT_OK:
        failed = [report.name for report in reports if report.failed(cfg.strict)]
        print(f"未通过 {len(failed)} 项：{'; '.join(failed)}", file=sys.stderr)
    return code


def main(argv=None) -> None:
    """主函数：解析参数、执行子命令并映射退出码。"""
    args = parse_args(argv)
    _configure_logging(args.verbose)
    try:
        code = run(args)
    except SimulationError as exc:
        print(f"模拟失败：{exc}（已完成 {exc.completed} 次重复，未写出任何文件）", file=sys.stderr)
        sys.exit(exit_code_for(exc))
    except SieveError as exc:
        print(f"执行失败：{exc}", file=sys.stderr)
        sys.exit(exit_code_for(exc))
    except ValueError as exc:
        print(f"参数错误：{exc}", file=sys.stderr)
        sys.exit(EXIT_USAGE)
    sys.exit(code)


if __name__ == "__main__":
    main()
