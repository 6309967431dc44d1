"""
输出与序列化工具：原子写入、CSV（pandas）、JSON（orjson）、运行清单、终端输出
"""
import hashlib
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
import orjson
import pandas as pd
from tqdm import tqdm

from .config import RUN_CFG

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_SORT_KEYS

_MARKS = {"ok": "✓", "fail": "✗", "warn": "⚠", "info": " "}


def set_verbose(flag: bool) -> None:
    RUN_CFG["verbose"] = flag


def echo(msg: str, level: str = "info") -> None:
    """带标记的进度输出，经 tqdm.write 写到 stderr，不打断进度条"""
    if not RUN_CFG["verbose"] and level != "fail":
        return
    mark = _MARKS.get(level, " ")
    tqdm.write(f"{mark} {msg}" if mark.strip() else msg, file=_stderr())


def banner(title: str, rows: Dict[str, Any], width: int = 60) -> None:
    """汇总横幅：标题 + 逐行 键: 值"""
    if not RUN_CFG["verbose"]:
        return
    lines = ["", "=" * width, title, "=" * width]
    for key, value in rows.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        lines.append(f"{key}: {value}")
    lines.append("=" * width)
    tqdm.write("\n".join(lines), file=_stderr())


def progress(iterable: Optional[Iterable] = None, total: Optional[int] = None,
             desc: str = "", unit: str = "it") -> tqdm:
    return tqdm(iterable, total=total, desc=desc, unit=unit,
                disable=not RUN_CFG["verbose"], file=_stderr(), leave=False)


def _stderr():
    return sys.stderr


def atomic_write_bytes(path: str, data: bytes) -> str:
    """先写同目录临时文件，再 os.replace 到目标路径"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(target.parent), prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return str(target)


def dumps_json(obj: Any) -> bytes:
    return orjson.dumps(obj, default=_json_default, option=JSON_OPTIONS)


def write_json(obj: Any, path: str) -> str:
    return atomic_write_bytes(path, dumps_json(obj) + b"\n")


def read_json(path: str) -> Any:
    if not os.path.exists(path):
        raise FileNotFoundError(f"文件不存在: {path}")
    with open(path, "rb") as f:
        return orjson.loads(f.read())


def write_csv(df: pd.DataFrame, path: str) -> str:
    # float_format=None 时 pandas 使用 repr，即最短往返十进制表示
    text = df.to_csv(index=False, lineterminator="\n")
    return atomic_write_bytes(path, text.encode("utf-8"))


def read_csv(path: str) -> pd.DataFrame:
    if not os.path.exists(path):
        raise FileNotFoundError(f"文件不存在: {path}")
    return pd.read_csv(path, float_precision="round_trip")


def _json_default(obj: Any) -> Any:
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"无法序列化类型: {type(obj).__name__}")


def params_hash(params: Dict[str, Any]) -> str:
    """参数字典的规范 JSON 的 sha256，用作 scene_hash"""
    canonical = orjson.dumps(params, default=_json_default,
                             option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY)
    return hashlib.sha256(canonical).hexdigest()


@dataclass
class RunManifest:
    """一次命令运行的完整记录；同一清单重跑得到逐字节相同的输出"""
    command: str
    params: Dict[str, Any]
    seed: Optional[int]
    scene_hash: Optional[str] = None
    artifact_version: str = RUN_CFG["artifact_version"]
    outputs: List[str] = field(default_factory=list)

    def add_output(self, path: str) -> None:
        self.outputs.append(os.path.basename(path))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def save(self, out_dir: str) -> str:
        return write_json(self.to_dict(), os.path.join(out_dir, f"{self.command}.manifest.json"))

    @classmethod
    def load(cls, path: str) -> "RunManifest":
        data = read_json(path)
        return cls(**data)
