from __future__ import annotations

import numpy as np
import pytest

from rownoise.sensor import Frame


@pytest.fixture
def make_frame():
    """Build a Frame from a nested list or array; 2-D input becomes 1 channel."""

    def _make(pixels) -> Frame:
        arr = np.asarray(pixels, dtype=np.uint8)
        if arr.ndim == 2:
            arr = arr[None, :, :]
        return Frame(pixels=arr)

    return _make
