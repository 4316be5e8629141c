import csv
import io
import os
import sys
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .config import OUTPUT_DIR
from .exact import Pmf


def model_token(model_spec: str) -> str:
    """把模型描述串变成可用作目录名的记号，如 beta:2,3 → beta_2-3。"""
    return model_spec.strip().lower().replace(":", "_").replace(",", "-").replace("/", "-").replace(" ", "")


def build_output_path(command: str, model_spec: str, stat: str, fmt: str = "csv", base: Optional[Path] = None) -> Path:
    """
    构建输出文件路径，格式：data/{command}/{model}/{stat}.{csv|txt}

    不含时间戳：同一配置重复运行写到同一文件，内容逐字节一致。
    """
    suffix = "csv" if fmt == "csv" else "txt"
    folder = (base or OUTPUT_DIR) / command / model_token(model_spec)
    return folder / f"{stat.replace(',', '-')}.{suffix}"


def header_lines(config_json: str, seed: Optional[int]) -> List[str]:
    lines = [f"# bernoulli-sieve-lab {__version__}", f"# config: {config_json}"]
    if seed is not None:
        lines.append(f"# seed: {seed}")
    return lines


def write_atomic(path: Path, text: str) -> None:
    """先写 path.part 再改名；任何失败都删除残留的 .part 文件。"""
    path.parent.mkdir(parents=True, exist_ok=True)
    partial = path.with_name(path.name + ".part")
    try:
        with open(partial, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(partial, path)
    except BaseException:
        try:
            partial.unlink()
        except FileNotFoundError:
            pass
        except OSError as exc:  # pragma: no cover - best effort cleanup
            print(f"警告：删除临时文件 {partial} 失败：{exc}", file=sys.stderr)
        raise


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def render_samples(columns: Dict[str, np.ndarray], head: Sequence[str]) -> str:
    """每个统计量一列，每次重复一行。"""
    names = list(columns)
    rows = zip(*(np.asarray(columns[name]).tolist() for name in names))
    return "\n".join(head) + "\n" + _csv_text(names, rows)


def render_pmf(pmf: Pmf, head: Sequence[str]) -> str:
    rows = ((int(k), repr(float(p))) for k, p in zip(pmf.support, pmf.probs))
    body = _csv_text(("k", "probability"), rows)
    return "\n".join(head) + "\n" + body + f"# mass_deficit={pmf.mass_deficit!r}\n"


def render_report(pairs: Iterable[Sequence[object]], head: Sequence[str]) -> str:
    """key: value 结构化文本。"""
    lines = list(head)
    lines.extend(f"{key}: {value}" for key, value in pairs)
    return "\n".join(lines) + "\n"


def render_reports_csv(header: Sequence[str], rows: Iterable[Sequence[object]], head: Sequence[str]) -> str:
    return "\n".join(head) + "\n" + _csv_text(header, rows)


def read_header(path: Path) -> Dict[str, str]:
    """读出输出文件开头的 # key: value 行。"""
    values: Dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].rstrip("\n").partition(": ")
            if value:
                values[key] = value
    return values
