import numpy as np
import pytest

from codedmrpt.coding.matdot import CodeConfig, encode_data
from codedmrpt.coding.shard_io import read_shard, write_shard
from codedmrpt.errors import DataError


def test_shard_file_round_trip(tmp_path, rng: np.random.Generator) -> None:
    cfg = CodeConfig.chebyshev(2, 4, systematic=True)
    shard = encode_data(rng.standard_normal((7, 5)), cfg)[3]
    path = write_shard(tmp_path / "w3.mdsh", shard, m=cfg.m, n_workers=cfg.n_workers)

    header, loaded = read_shard(path)
    assert (header.m, header.n_workers, header.worker_id) == (2, 4, 3)
    assert (header.n_rows, header.width) == (7, 3)
    assert header.beta == shard.beta
    assert loaded.matrix.tobytes() == shard.matrix.tobytes()


def test_truncated_or_foreign_files_are_rejected(tmp_path) -> None:
    cfg = CodeConfig.chebyshev(1, 1)
    shard = encode_data(np.ones((3, 2)), cfg)[0]
    path = write_shard(tmp_path / "s.mdsh", shard, m=1, n_workers=1)
    raw = path.read_bytes()

    (tmp_path / "short.mdsh").write_bytes(raw[:-8])
    with pytest.raises(DataError):
        read_shard(tmp_path / "short.mdsh")

    (tmp_path / "magic.mdsh").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(DataError):
        read_shard(tmp_path / "magic.mdsh")

    with pytest.raises(DataError):
        read_shard(tmp_path / "missing.mdsh")
