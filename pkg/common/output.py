# coding: utf-8
"""CSV/JSON 산출물 쓰기. 모든 파일은 임시 파일에 쓴 뒤 rename 한다."""
import io
import json
import logging
import os

import numpy as np
import pandas as pd

from common.labels import LABEL
from common.util import atomic_write_text

logger = logging.getLogger(__name__)


def labeled_frame(frame):
    """LABEL 에 있는 열은 단위를 바꾸고 헤더를 단위 접미사 이름으로 바꾼다."""
    out = pd.DataFrame(index=frame.index)
    for column in frame.columns:
        header, factor = LABEL.get(column, (column, 1.0))
        values = frame[column]
        if factor != 1.0:
            values = values * factor
        out[header] = values
    return out


def frame_to_csv_text(frame):
    buffer = io.StringIO()
    labeled_frame(frame).to_csv(buffer, index=False, lineterminator="\n", float_format="%.10g")
    return buffer.getvalue()


def write_csv(frame, path):
    atomic_write_text(path, frame_to_csv_text(frame))
    logger.info("wrote %s (%d rows)", path, len(frame))
    return path


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(obj, path):
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"
    atomic_write_text(path, text)
    logger.info("wrote %s", path)
    return path


def output_path(out_dir, name):
    return os.path.join(out_dir, name)
