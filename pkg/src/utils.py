"""
工具類模組

輸出成品（CSV、JSON）與執行紀錄 manifest。
"""

import os
import json
import logging
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

TOOL_VERSION = '1.0.0'


@dataclass
class RunManifest:
    """一次執行的指令、參數組、種子與輸出路徑；相同的 manifest 代表相同的輸出"""
    command: str
    profile: str
    seed: int
    overrides: Dict[str, object] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    tool_version: str = TOOL_VERSION
    timestamp: Optional[str] = None

    def stamp(self) -> 'RunManifest':
        self.timestamp = datetime.now(timezone.utc).isoformat(timespec='seconds')
        return self

    def to_dict(self) -> Dict:
        data = asdict(self)
        if data['timestamp'] is None:
            del data['timestamp']
        return data


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    raise TypeError(f"無法序列化 {type(value).__name__}")


def to_json(data: Dict) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False, sort_keys=True,
                      default=_json_default) + '\n'


class ArtifactWriter:
    """把成品寫到輸出目錄，並為每個檔案附上 manifest"""

    def __init__(self, out_dir: str, manifest: RunManifest):
        """初始化輸出器

        Args:
            out_dir: 輸出目錄，不存在時會建立
            manifest: 本次執行的 manifest
        """
        self.out_dir = out_dir
        self.manifest = manifest
        os.makedirs(out_dir, exist_ok=True)

    def _path(self, name: str) -> str:
        path = os.path.join(self.out_dir, name)
        if path not in self.manifest.outputs:
            self.manifest.outputs.append(path)
        return path

    def write_csv(self, name: str, table: pd.DataFrame) -> str:
        """寫出 CSV 與同名的 .manifest.json

        Args:
            name: 檔名
            table: 表格，欄位名稱需帶單位

        Returns:
            CSV 路徑
        """
        path = self._path(name)
        table.to_csv(path, index=False, float_format='%.10g', lineterminator='\n')
        base = os.path.splitext(path)[0]
        with open(f'{base}.manifest.json', 'w', encoding='utf-8') as handle:
            handle.write(to_json(self.manifest.to_dict()))
        logger.info(f"已寫出 {path}")
        return path

    def write_json(self, name: str, report: Dict) -> str:
        """寫出內嵌 manifest 的 JSON 報表"""
        path = self._path(name)
        payload = dict(report)
        payload['manifest'] = self.manifest.to_dict()
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(to_json(payload))
        logger.info(f"已寫出 {path}")
        return path
