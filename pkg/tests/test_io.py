import json
import os

import numpy as np
import pandas as pd
import pytest

from inhom_markcorr._exceptions import OutputError
from inhom_markcorr._io import OutputWriter


class TestOutputWriter:
    def test_csv_and_json(self, tmp_path):
        writer = OutputWriter(tmp_path / "out")
        writer.write_csv("curve.csv", pd.DataFrame({"r": [0.0, 0.1], "value": [np.nan, 1.0 / 3.0]}))
        writer.write_json("meta.json", {"b": np.float64(0.5), "a": np.arange(2)})
        assert (tmp_path / "out" / "curve.csv").read_text(encoding="utf-8") == "r,value\n0,\n0.1,0.333333333333333\n"
        assert json.loads((tmp_path / "out" / "meta.json").read_text(encoding="utf-8")) == {"a": [0, 1], "b": 0.5}

    def test_failed_write_leaves_no_temp_file(self, tmp_path, monkeypatch):
        writer = OutputWriter(tmp_path)

        def refuse(src, dst):
            raise OSError(28, "No space left on device")

        monkeypatch.setattr(os, "replace", refuse)
        with pytest.raises(OutputError) as info:
            writer.write_json("verdict.json", {"reject": False})
        assert info.value.details["errno"] == 28
        assert list(tmp_path.iterdir()) == []
